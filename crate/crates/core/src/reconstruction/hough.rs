//! Progressive probabilistic Hough transform.
//!
//! Foreground pixels are drawn in random order and vote into a
//! `(rho, theta)` accumulator with 1 degree and 1 pixel resolution. As soon
//! as one of a pixel's bins reaches the vote threshold, the corresponding
//! line is walked in both directions through the remaining foreground,
//! tolerating gaps of up to `max_gap` pixels. The pixels on the walk are
//! removed from further consideration and, when the walk is long enough, a
//! segment is emitted and their votes are withdrawn.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::image::BinaryMask;

use super::Point;

const ANGLES: usize = 180;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LineSegment {
    pub p0: Point,
    pub p1: Point,
    /// Accumulator count of the bin that triggered detection.
    pub votes: u32,
}

impl LineSegment {
    /// Direction angle in degrees, folded into `[0, 180)`.
    pub fn angle_deg(&self) -> f64 {
        let dx = (self.p1.x - self.p0.x) as f64;
        let dy = (self.p1.y - self.p0.y) as f64;
        dy.atan2(dx).to_degrees().rem_euclid(180.0)
    }

    pub fn length(&self) -> f64 {
        self.p0.distance(&self.p1)
    }

    /// Euclidean distance from `p` to the closed segment.
    pub fn distance_to(&self, p: Point) -> f64 {
        let (ax, ay) = (self.p0.x as f64, self.p0.y as f64);
        let (bx, by) = (self.p1.x as f64, self.p1.y as f64);
        let (px, py) = (p.x as f64, p.y as f64);
        let (dx, dy) = (bx - ax, by - ay);
        let len2 = dx * dx + dy * dy;
        let t = if len2 == 0.0 {
            0.0
        } else {
            (((px - ax) * dx + (py - ay) * dy) / len2).clamp(0.0, 1.0)
        };
        ((ax + t * dx - px).powi(2) + (ay + t * dy - py).powi(2)).sqrt()
    }

    pub fn translate(&self, dx: i64, dy: i64) -> Self {
        Self {
            p0: Point::new(self.p0.x + dx, self.p0.y + dy),
            p1: Point::new(self.p1.x + dx, self.p1.y + dy),
            votes: self.votes,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HoughParams {
    pub vote_threshold: u32,
    /// Minimum Chebyshev extent of an emitted segment.
    pub min_len: u32,
    pub max_gap: u32,
    pub seed: u64,
}

struct Accumulator {
    cos: Vec<f64>,
    sin: Vec<f64>,
    offset: i64,
    rhos: usize,
    bins: Vec<u32>,
}

impl Accumulator {
    fn new(width: usize, height: usize) -> Self {
        let (sin, cos) = (0..ANGLES)
            .map(|i| (i as f64).to_radians().sin_cos())
            .unzip();
        let offset = (width + height) as i64;
        let rhos = 2 * offset as usize + 1;
        Self {
            cos,
            sin,
            offset,
            rhos,
            bins: vec![0; ANGLES * rhos],
        }
    }

    #[inline]
    fn rho_index(&self, n: usize, p: Point) -> usize {
        ((p.x as f64 * self.cos[n] + p.y as f64 * self.sin[n]).round() as i64 + self.offset) as usize
    }

    /// Adds one vote per angle and returns the per-angle counts of the bins hit.
    fn vote(&mut self, p: Point) -> [u32; ANGLES] {
        let mut counts = [0u32; ANGLES];
        for (n, c) in counts.iter_mut().enumerate() {
            let idx = n * self.rhos + self.rho_index(n, p);
            self.bins[idx] += 1;
            *c = self.bins[idx];
        }
        counts
    }

    fn unvote(&mut self, p: Point) {
        for n in 0..ANGLES {
            let idx = n * self.rhos + self.rho_index(n, p);
            self.bins[idx] -= 1;
        }
    }
}

/// Few votes leave whole ranges of angles tied; the middle of the widest
/// tied run (wrapping at 180 degrees) is the best direction estimate.
fn center_of_longest_run(counts: &[u32; ANGLES], best: u32) -> usize {
    let tied = |i: usize| counts[i % ANGLES] == best;
    if (0..ANGLES).all(tied) {
        return 0;
    }
    // start scanning just after a non-tied angle so no run is split
    let start = (0..ANGLES).find(|&i| !tied(i)).expect("some angle differs") + 1;
    let (mut best_start, mut best_len) = (0, 0);
    let mut i = 0;
    while i < ANGLES {
        if tied(start + i) {
            let run_start = i;
            while i < ANGLES && tied(start + i) {
                i += 1;
            }
            if i - run_start > best_len {
                best_len = i - run_start;
                best_start = run_start;
            }
        } else {
            i += 1;
        }
    }
    (start + best_start + (best_len - 1) / 2) % ANGLES
}

struct Walk {
    ends: [Point; 2],
    reach: [i64; 2],
    step: (f64, f64),
    hits: usize,
}

/// Follows the line through `p` at angle index `theta` in both directions,
/// tolerating up to `max_gap` consecutive missing pixels.
fn walk_line(available: &BinaryMask, p: Point, acc: &Accumulator, theta: usize, max_gap: i64) -> Walk {
    let (w, h) = available.dims();
    // direction along the line; unit step on the major axis
    let (dx0, dy0) = (-acc.sin[theta], acc.cos[theta]);
    let (sx, sy) = if dx0.abs() > dy0.abs() {
        (dx0.signum(), dy0 / dx0.abs())
    } else {
        (dx0 / dy0.abs(), dy0.signum())
    };
    let at = |k: i64, dir: f64| {
        Point::new(
            (p.x as f64 + dir * k as f64 * sx).round() as i64,
            (p.y as f64 + dir * k as f64 * sy).round() as i64,
        )
    };
    let inside = |q: Point| q.x >= 0 && q.y >= 0 && (q.x as usize) < w && (q.y as usize) < h;

    let mut ends = [p, p];
    let mut reach = [0i64, 0];
    let mut hits = 1;
    for (side, dir) in [1.0, -1.0].into_iter().enumerate() {
        let mut gap = 0;
        let mut k = 0;
        loop {
            k += 1;
            let q = at(k, dir);
            if !inside(q) {
                break;
            }
            if available.get(q.x as usize, q.y as usize) {
                gap = 0;
                ends[side] = q;
                reach[side] = k;
                hits += 1;
            } else {
                gap += 1;
                if gap > max_gap {
                    break;
                }
            }
        }
    }
    Walk { ends, reach, step: (sx, sy), hits }
}

pub fn probabilistic_hough(mask: &BinaryMask, params: &HoughParams) -> Vec<LineSegment> {
    let (w, h) = mask.dims();
    let mut available = mask.clone();
    let mut voted = BinaryMask::empty(w, h);
    let mut acc = Accumulator::new(w, h);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let threshold = params.vote_threshold.max(1);
    let min_len = params.min_len.max(1) as i64;
    let max_gap = params.max_gap as i64;

    let mut points: Vec<Point> = (0..h)
        .flat_map(|y| (0..w).map(move |x| (x, y)))
        .filter(|&(x, y)| mask.get(x, y))
        .map(|(x, y)| Point::new(x as i64, y as i64))
        .collect();

    let mut segments = Vec::new();
    for remaining in (1..=points.len()).rev() {
        let pick = rng.random_range(0..remaining);
        let p = points[pick];
        points.swap(pick, remaining - 1);

        if !available.get(p.x as usize, p.y as usize) {
            continue;
        }
        let counts = acc.vote(p);
        voted.set(p.x as usize, p.y as usize, true);
        let votes = *counts.iter().max().expect("non-empty");
        if votes < threshold {
            continue;
        }

        // Stray votes can tie the maximum across unrelated angles, so every
        // tied angle is walked and the one covering the most foreground wins.
        let center = center_of_longest_run(&counts, votes);
        let angle_gap = |n: usize| {
            let d = n.abs_diff(center);
            d.min(ANGLES - d)
        };
        let walk = (0..ANGLES)
            .filter(|&n| counts[n] == votes)
            .map(|n| walk_line(&available, p, &acc, n, max_gap))
            .zip((0..ANGLES).filter(|&n| counts[n] == votes))
            .max_by(|(a, na), (b, nb)| a.hits.cmp(&b.hits).then(angle_gap(*nb).cmp(&angle_gap(*na))))
            .map(|(wk, _)| wk)
            .expect("at least one tied angle");
        let Walk { ends, reach, step: (sx, sy), .. } = walk;
        let at = |k: i64, dir: f64| {
            Point::new(
                (p.x as f64 + dir * k as f64 * sx).round() as i64,
                (p.y as f64 + dir * k as f64 * sy).round() as i64,
            )
        };

        let extent = (ends[0].x - ends[1].x).abs().max((ends[0].y - ends[1].y).abs());
        let good = extent >= min_len;

        for (side, dir) in [1.0, -1.0].into_iter().enumerate() {
            let start = if side == 0 { 0 } else { 1 };
            for k in start..=reach[side] {
                let q = at(k, dir);
                let (qx, qy) = (q.x as usize, q.y as usize);
                if !available.get(qx, qy) {
                    continue;
                }
                if good && voted.get(qx, qy) {
                    acc.unvote(q);
                    voted.set(qx, qy, false);
                }
                available.set(qx, qy, false);
            }
        }

        if good && ends[0] != ends[1] {
            segments.push(LineSegment {
                p0: ends[1],
                p1: ends[0],
                votes,
            });
        }
    }
    segments
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(seed: u64) -> HoughParams {
        HoughParams {
            vote_threshold: 3,
            min_len: 5,
            max_gap: 2,
            seed,
        }
    }

    fn angle_diff(a: f64, b: f64) -> f64 {
        let d = (a - b).rem_euclid(180.0);
        d.min(180.0 - d)
    }

    #[test]
    fn empty_mask_gives_nothing() {
        assert!(probabilistic_hough(&BinaryMask::empty(10, 10), &params(0)).is_empty());
    }

    #[test]
    fn finds_single_horizontal_line() {
        let m = BinaryMask::from_fn(32, 32, |x, y| y == 16 && (6..26).contains(&x));
        for seed in 0..50 {
            let segs = probabilistic_hough(&m, &params(seed));
            assert_eq!(segs.len(), 1, "seed {seed}: {segs:?}");
            let s = segs[0];
            let (a, b) = if s.p0.x < s.p1.x { (s.p0, s.p1) } else { (s.p1, s.p0) };
            assert!(a.distance(&Point::new(6, 16)) <= 2.0, "seed {seed}: {s:?}");
            assert!(b.distance(&Point::new(25, 16)) <= 2.0, "seed {seed}: {s:?}");
            assert!(angle_diff(s.angle_deg(), 0.0) <= 2.0);
            assert!(s.votes >= 3);
        }
    }

    #[test]
    fn finds_two_perpendicular_lines() {
        let m = BinaryMask::from_fn(40, 40, |x, y| {
            (y == 5 && (3..18).contains(&x)) || (x == 30 && (15..30).contains(&y))
        });
        for seed in 0..50 {
            let segs = probabilistic_hough(&m, &params(seed));
            assert_eq!(segs.len(), 2, "seed {seed}: {segs:?}");
            let mut angles: Vec<f64> = segs.iter().map(|s| s.angle_deg()).collect();
            angles.sort_by(|a, b| angle_diff(*a, 0.0).total_cmp(&angle_diff(*b, 0.0)));
            assert!(angle_diff(angles[0], 0.0) <= 2.0, "{angles:?}");
            assert!(angle_diff(angles[1], 90.0) <= 2.0, "{angles:?}");
        }
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let m = BinaryMask::from_fn(30, 30, |x, y| (x + y) % 7 == 0 || x == y);
        let a = probabilistic_hough(&m, &params(99));
        let b = probabilistic_hough(&m, &params(99));
        assert_eq!(a, b);
    }

    #[test]
    fn gap_tolerance() {
        // a 2-pixel hole is bridged with max_gap 2, not with max_gap 1
        let m = BinaryMask::from_fn(30, 5, |x, y| y == 2 && (2..26).contains(&x) && !(13..15).contains(&x));
        let joined = probabilistic_hough(&m, &params(1));
        assert_eq!(joined.len(), 1, "{joined:?}");
        let split = probabilistic_hough(&m, &HoughParams { max_gap: 1, ..params(1) });
        assert_eq!(split.len(), 2, "{split:?}");
    }

    #[test]
    fn segment_geometry() {
        let s = LineSegment { p0: Point::new(0, 0), p1: Point::new(10, 0), votes: 1 };
        assert_eq!(s.distance_to(Point::new(5, 3)), 3.0);
        assert_eq!(s.distance_to(Point::new(13, 4)), 5.0);
        assert_eq!(s.angle_deg(), 0.0);
        let v = LineSegment { p0: Point::new(2, 9), p1: Point::new(2, 1), votes: 1 };
        assert!((v.angle_deg() - 90.0).abs() < 1e-9);
    }

    #[test]
    fn tie_run_center_wraps() {
        let mut counts = [0u32; ANGLES];
        for i in (170..180).chain(0..11) {
            counts[i] = 4;
        }
        assert_eq!(center_of_longest_run(&counts, 4), 0);
        let mut counts = [1u32; ANGLES];
        counts[88..=92].iter_mut().for_each(|c| *c = 3);
        assert_eq!(center_of_longest_run(&counts, 3), 90);
    }
}
