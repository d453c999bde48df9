use rayon::prelude::*;

use crate::error::Result;
use crate::image::BinaryMask;

use super::hough::{probabilistic_hough, HoughParams};
use super::labels::label_components;
use super::skeleton::find_endpoints;
use super::{Point, ReconstructionParams};

/// Endpoints farther than this from a detected segment do not count as on it.
const ENDPOINT_TOLERANCE: f64 = 1.0;
const MIN_SEGMENT_LEN: u32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bridge {
    pub from: Point,
    pub to: Point,
    pub votes: u32,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Digital straight line from `a` to `b` inclusive (Bresenham).
pub fn draw_line(a: Point, b: Point) -> Vec<Point> {
    let (dx, dy) = ((b.x - a.x).abs(), -(b.y - a.y).abs());
    let (sx, sy) = ((b.x - a.x).signum(), (b.y - a.y).signum());
    let mut err = dx + dy;
    let (mut x, mut y) = (a.x, a.y);
    let mut out = Vec::with_capacity((dx.max(-dy) + 1) as usize);
    loop {
        out.push(Point::new(x, y));
        if x == b.x && y == b.y {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
    out
}

/// Tests one endpoint pair against Hough evidence in its local window.
fn pair_supported(mask: &BinaryMask, a: Point, b: Point, params: &ReconstructionParams, seed: u64) -> Option<u32> {
    let margin = params.h as i64;
    let (w, h) = (mask.width() as i64, mask.height() as i64);
    let x0 = (a.x.min(b.x) - margin).max(0);
    let y0 = (a.y.min(b.y) - margin).max(0);
    let x1 = (a.x.max(b.x) + margin).min(w - 1);
    let y1 = (a.y.max(b.y) + margin).min(h - 1);
    let window = mask.crop(x0 as usize, y0 as usize, (x1 - x0 + 1) as usize, (y1 - y0 + 1) as usize);

    let hough = HoughParams {
        vote_threshold: params.v + 1,
        min_len: MIN_SEGMENT_LEN,
        max_gap: params.h as u32,
        seed,
    };
    let local_a = Point::new(a.x - x0, a.y - y0);
    let local_b = Point::new(b.x - x0, b.y - y0);
    probabilistic_hough(&window, &hough)
        .into_iter()
        .filter(|s| s.votes > params.v)
        .find(|s| s.distance_to(local_a) <= ENDPOINT_TOLERANCE && s.distance_to(local_b) <= ENDPOINT_TOLERANCE)
        .map(|s| s.votes)
}

/// Like [`bridge_gaps`], also returning the bridges that were drawn.
pub fn bridge_gaps_traced(mask: &BinaryMask, params: &ReconstructionParams) -> Result<(BinaryMask, Vec<Bridge>)> {
    params.validate()?;
    let endpoints = find_endpoints(mask);
    let labels = label_components(mask);
    let reach = params.h as i64;

    // endpoints are in raster order, so the inner scan can stop once rows are too far apart
    let mut pairs = Vec::new();
    for (i, a) in endpoints.iter().enumerate() {
        let la = labels.label(a.x as usize, a.y as usize);
        for b in &endpoints[i + 1..] {
            if b.y - a.y > reach {
                break;
            }
            if a.chebyshev(b) > reach {
                continue;
            }
            if labels.label(b.x as usize, b.y as usize) != la {
                pairs.push((*a, *b));
            }
        }
    }

    let bridges: Vec<Bridge> = pairs
        .par_iter()
        .enumerate()
        .filter_map(|(i, &(a, b))| {
            let seed = splitmix64(params.seed ^ splitmix64(i as u64));
            pair_supported(mask, a, b, params, seed).map(|votes| Bridge { from: a, to: b, votes })
        })
        .collect();

    let mut out = mask.clone();
    for bridge in &bridges {
        for p in draw_line(bridge.from, bridge.to) {
            out.set(p.x as usize, p.y as usize, true);
        }
    }
    Ok((out, bridges))
}

/// Joins endpoints of distinct components that lie within `h` of each other
/// when a local Hough line with more than `v` votes passes through both.
pub fn bridge_gaps(mask: &BinaryMask, params: &ReconstructionParams) -> Result<BinaryMask> {
    bridge_gaps_traced(mask, params).map(|(m, _)| m)
}
