use crate::image::BinaryMask;

use super::Point;

// clockwise from north: P2..P9
const RING: [(i64, i64); 8] = [(0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1)];

fn ring(mask: &BinaryMask, x: usize, y: usize) -> [bool; 8] {
    RING.map(|(dx, dy)| mask.get_signed(x as i64 + dx, y as i64 + dy))
}

/// Zhang-Suen thinning to a one-pixel-wide, 8-connected skeleton.
pub fn skeletonize(mask: &BinaryMask) -> BinaryMask {
    let mut skel = mask.clone();
    let (w, h) = mask.dims();
    let mut doomed = Vec::new();
    loop {
        let mut changed = false;
        for pass in 0..2 {
            doomed.clear();
            for y in 0..h {
                for x in 0..w {
                    if !skel.get(x, y) {
                        continue;
                    }
                    let p = ring(&skel, x, y);
                    let neighbors = p.iter().filter(|&&b| b).count();
                    if !(2..=6).contains(&neighbors) {
                        continue;
                    }
                    let transitions = (0..8).filter(|&i| !p[i] && p[(i + 1) % 8]).count();
                    if transitions != 1 {
                        continue;
                    }
                    // p[0]=N, p[2]=E, p[4]=S, p[6]=W
                    let ok = if pass == 0 {
                        !(p[0] && p[2] && p[4]) && !(p[2] && p[4] && p[6])
                    } else {
                        !(p[0] && p[2] && p[6]) && !(p[0] && p[4] && p[6])
                    };
                    if ok {
                        doomed.push((x, y));
                    }
                }
            }
            for &(x, y) in &doomed {
                skel.set(x, y, false);
            }
            changed |= !doomed.is_empty();
        }
        if !changed {
            break;
        }
    }
    skel
}

/// Skeleton pixels with exactly one 8-neighbor on the skeleton, in raster order.
pub fn find_endpoints(mask: &BinaryMask) -> Vec<Point> {
    let skel = skeletonize(mask);
    let (w, h) = skel.dims();
    let mut out = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if skel.get(x, y) && ring(&skel, x, y).iter().filter(|&&b| b).count() == 1 {
                out.push(Point::new(x as i64, y as i64));
            }
        }
    }
    out
}
