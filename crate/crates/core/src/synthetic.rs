//! Synthetic test scenes with known ground truth: a fundus-like photograph
//! with a branching vessel tree, a vessel grid on an illumination ramp, and
//! a fragmented-vessel mask.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::image::{BinaryMask, GrayImage, RgbImage};

#[derive(Debug, Clone)]
pub struct SyntheticFundus {
    pub image: RgbImage,
    pub truth: BinaryMask,
}

struct Stroke {
    ax: f64,
    ay: f64,
    bx: f64,
    by: f64,
    radius: f64,
    depth: f64,
}

fn grow_tree(rng: &mut ChaCha8Rng, strokes: &mut Vec<Stroke>, start: (f64, f64), heading: f64, width: f64, depth: f64, level: u32, bounds: (f64, f64, f64)) {
    let (cx, cy, r_fov) = bounds;
    let (mut x, mut y) = start;
    let mut theta = heading;
    let mut w = width;
    let step = 6.0;
    let steps = rng.random_range(18..34) as usize;
    for i in 0..steps {
        theta += rng.random_range(-0.18..0.18);
        let nx = x + step * theta.cos();
        let ny = y + step * theta.sin();
        if ((nx - cx).powi(2) + (ny - cy).powi(2)).sqrt() > r_fov - 4.0 {
            break;
        }
        strokes.push(Stroke { ax: x, ay: y, bx: nx, by: ny, radius: w / 2.0, depth });
        x = nx;
        y = ny;
        w = (w * 0.985).max(1.0);
        if level < 3 && i > 3 && i % 7 == 0 && rng.random_bool(0.7) {
            let side = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let turn = rng.random_range(0.5..1.0);
            grow_tree(rng, strokes, (x, y), theta + side * turn, (w * 0.7).max(1.0), depth * 0.85, level + 1, bounds);
        }
    }
}

/// Fundus-like RGB scene: circular field of view, uneven illumination, a
/// bright disc, a darker fovea and a vessel tree that is darker in green.
pub fn synthetic_fundus(width: usize, height: usize, seed: u64) -> SyntheticFundus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = (width as f64, height as f64);
    let (cx, cy) = (w / 2.0, h / 2.0);
    let r_fov = 0.47 * w.min(h);
    let disc = (cx + 0.28 * r_fov * if rng.random_bool(0.5) { 1.0 } else { -1.0 }, cy + rng.random_range(-0.05..0.05) * r_fov);
    let fovea = (2.0 * cx - disc.0, cy);

    let mut strokes = Vec::new();
    let trunks = rng.random_range(6..9);
    for k in 0..trunks {
        let heading = std::f64::consts::TAU * (k as f64 + rng.random_range(0.0..0.6)) / trunks as f64;
        let width = rng.random_range(5.0..7.0);
        grow_tree(&mut rng, &mut strokes, disc, heading, width, 0.32, 0, (cx, cy, r_fov));
    }

    let mut vessel = vec![0.0f64; width * height];
    let mut truth = BinaryMask::empty(width, height);
    for s in &strokes {
        let pad = s.radius + 1.5;
        let x0 = (s.ax.min(s.bx) - pad).floor().max(0.0) as usize;
        let x1 = ((s.ax.max(s.bx) + pad).ceil() as usize).min(width - 1);
        let y0 = (s.ay.min(s.by) - pad).floor().max(0.0) as usize;
        let y1 = ((s.ay.max(s.by) + pad).ceil() as usize).min(height - 1);
        let (dx, dy) = (s.bx - s.ax, s.by - s.ay);
        let len2 = dx * dx + dy * dy;
        for y in y0..=y1 {
            for x in x0..=x1 {
                let (px, py) = (x as f64, y as f64);
                let t = (((px - s.ax) * dx + (py - s.ay) * dy) / len2).clamp(0.0, 1.0);
                let d = ((s.ax + t * dx - px).powi(2) + (s.ay + t * dy - py).powi(2)).sqrt();
                // soft vessel profile with a one-pixel falloff
                let cover = (s.radius + 0.5 - d).clamp(0.0, 1.0);
                let v = &mut vessel[y * width + x];
                *v = v.max(cover * s.depth);
                if d <= s.radius {
                    truth.set(x, y, true);
                }
            }
        }
    }

    let noise = Normal::new(0.0, 0.008).expect("valid sigma");
    let tilt = rng.random_range(-0.25..0.25);
    let data: Vec<[f64; 3]> = (0..width * height)
        .map(|i| {
            let (x, y) = ((i % width) as f64, (i / width) as f64);
            let r = ((x - cx).powi(2) + (y - cy).powi(2)).sqrt();
            if r > r_fov {
                return [0.0; 3];
            }
            let vignette = 1.0 - 0.45 * (r / r_fov).powi(2) + tilt * (x - cx) / r_fov;
            let dd = ((x - disc.0).powi(2) + (y - disc.1).powi(2)) / (0.09 * r_fov).powi(2);
            let fd = ((x - fovea.0).powi(2) + (y - fovea.1).powi(2)) / (0.12 * r_fov).powi(2);
            let light = (0.62 * vignette + 0.35 * (-dd).exp() - 0.12 * (-fd).exp()).clamp(0.05, 1.0);
            let v = vessel[i];
            let mut px = [
                light * 0.92 * (1.0 - 0.35 * v),
                light * 0.48 * (1.0 - v),
                light * 0.22 * (1.0 - 0.8 * v),
            ];
            for c in px.iter_mut() {
                let q = (*c + noise.sample(&mut rng)).clamp(0.0, 1.0);
                *c = (q * 255.0).round() / 255.0;
            }
            px
        })
        .collect();
    truth = BinaryMask::from_fn(width, height, |x, y| {
        let r = ((x as f64 - cx).powi(2) + (y as f64 - cy).powi(2)).sqrt();
        truth.get(x, y) && r <= r_fov
    });
    SyntheticFundus {
        image: RgbImage::new(width, height, data).expect("channels clamped"),
        truth,
    }
}

/// Identical vertical vessels on a multiplicative left-to-right illumination ramp.
#[derive(Debug, Clone)]
pub struct RampPhantom {
    pub image: GrayImage,
    pub vessel_columns: Vec<usize>,
    pub vessel_half_width: usize,
    /// Background ring used to measure each vessel's contrast, as
    /// `[inner, outer]` horizontal distance from the vessel center.
    pub ring: (usize, usize),
}

pub fn ramp_vessel_phantom() -> RampPhantom {
    let (w, h) = (350, 64);
    let vessel_columns: Vec<usize> = (1..=6).map(|i| 50 * i).collect();
    let half = 1;
    let image = GrayImage::from_fn(w, h, |x, _| {
        let light = 0.2 + 0.8 * x as f64 / (w - 1) as f64;
        let on_vessel = vessel_columns.iter().any(|&c| x.abs_diff(c) <= half);
        light * if on_vessel { 0.8 } else { 1.0 }
    })
    .expect("values in range");
    RampPhantom {
        image,
        vessel_columns,
        vessel_half_width: half,
        ring: (21, 24),
    }
}

impl RampPhantom {
    /// Contrast of each vessel in `img`: ring background mean minus vessel mean.
    pub fn responses(&self, img: &GrayImage) -> Vec<f64> {
        let (w, h) = img.dims();
        self.vessel_columns
            .iter()
            .map(|&c| {
                let mut vessel = (0.0, 0.0);
                let mut ring = (0.0, 0.0);
                for y in 0..h {
                    for x in 0..w {
                        let d = x.abs_diff(c);
                        if d <= self.vessel_half_width {
                            vessel.0 += img.get(x, y);
                            vessel.1 += 1.0;
                        } else if (self.ring.0..=self.ring.1).contains(&d) {
                            ring.0 += img.get(x, y);
                            ring.1 += 1.0;
                        }
                    }
                }
                ring.0 / ring.1 - vessel.0 / vessel.1
            })
            .collect()
    }

    /// `(max - min) / max` over the per-vessel responses.
    pub fn relative_response_spread(&self, img: &GrayImage) -> f64 {
        let r = self.responses(img);
        let max = r.iter().cloned().fold(f64::MIN, f64::max);
        let min = r.iter().cloned().fold(f64::MAX, f64::min);
        (max - min) / max
    }
}

/// A 60-pixel horizontal vessel cut into four 15-pixel pieces by 2-pixel
/// gaps, plus five 3-pixel specks well away from it.
#[derive(Debug, Clone)]
pub struct FragmentedPhantom {
    pub mask: BinaryMask,
    pub vessel: BinaryMask,
    pub specks: BinaryMask,
}

pub fn fragmented_vessel_phantom() -> FragmentedPhantom {
    let (w, h) = (100, 40);
    let row = 20;
    let pieces: Vec<(usize, usize)> = (0..4).map(|i| (10 + 17 * i, 25 + 17 * i)).collect();
    let vessel = BinaryMask::from_fn(w, h, |x, y| y == row && pieces.iter().any(|&(a, b)| (a..b).contains(&x)));
    let specks = BinaryMask::from_fn(w, h, |x, y| {
        y == 5 && [10usize, 30, 50, 70, 90].iter().any(|&s| (s..s + 3).contains(&x))
    });
    let mask = BinaryMask::from_fn(w, h, |x, y| vessel.get(x, y) || specks.get(x, y));
    FragmentedPhantom { mask, vessel, specks }
}
