//! Background exclusion and intermeans (Isodata) binarization.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{box_plane, min_max, BinaryMask, GrayImage};

pub const HISTOGRAM_BINS: usize = 256;
const MAX_ITERATIONS: usize = 100;
const TOLERANCE: f64 = 1.0 / 512.0;

/// `img - mean_filter(img)`, rescaled to span `[0, 1]`. Locally dark
/// structures (vessels) end up near 0.
pub fn subtract_background(img: &GrayImage, radius: usize) -> Result<GrayImage> {
    if radius < 1 {
        return Err(Error::param("background filter radius must be >= 1"));
    }
    let (w, h) = img.dims();
    let mean = box_plane(img.as_slice(), w, h, radius);
    let diff: Vec<f64> = img.as_slice().iter().zip(&mean).map(|(i, m)| i - m).collect();
    Ok(GrayImage::from_raw(w, h, rescale_unit(diff)))
}

/// Affine map onto `[0, 1]`; an all-equal plane maps to 0.
fn rescale_unit(mut data: Vec<f64>) -> Vec<f64> {
    let (lo, hi) = min_max(&data);
    let span = hi - lo;
    if span <= 1e-12 {
        data.iter_mut().for_each(|v| *v = 0.0);
    } else {
        data.iter_mut().for_each(|v| *v = ((*v - lo) / span).clamp(0.0, 1.0));
    }
    data
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsodataResult {
    /// Class boundary: pixels `< threshold` form the lower class.
    pub threshold: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// 256-bin histogram over `[0, 1]`; bin `b` covers `[b/256, (b+1)/256)`.
pub fn histogram(img: &GrayImage) -> [u64; HISTOGRAM_BINS] {
    let mut hist = [0u64; HISTOGRAM_BINS];
    for &v in img.as_slice() {
        hist[bin_index(v)] += 1;
    }
    hist
}

#[inline]
pub fn bin_index(v: f64) -> usize {
    ((v * HISTOGRAM_BINS as f64) as usize).min(HISTOGRAM_BINS - 1)
}

#[inline]
pub fn bin_center(b: usize) -> f64 {
    (b as f64 + 0.5) / HISTOGRAM_BINS as f64
}

/// Means of the bin populations below and at-or-above split index `s`.
pub fn class_means(hist: &[u64; HISTOGRAM_BINS], split: usize) -> Option<(f64, f64)> {
    let (mut n0, mut s0, mut n1, mut s1) = (0u64, 0.0, 0u64, 0.0);
    for (b, &c) in hist.iter().enumerate() {
        if b < split {
            n0 += c;
            s0 += c as f64 * bin_center(b);
        } else {
            n1 += c;
            s1 += c as f64 * bin_center(b);
        }
    }
    (n0 > 0 && n1 > 0).then(|| (s0 / n0 as f64, s1 / n1 as f64))
}

/// Number of bins whose center lies strictly below `t`.
#[inline]
fn split_for(t: f64) -> usize {
    (0..HISTOGRAM_BINS).take_while(|&b| bin_center(b) < t).count()
}

/// Iterative intermeans threshold over the 256-bin histogram.
///
/// Starts at the global mean and repeats `T <- (mean_below + mean_above) / 2`
/// until the induced bin partition stops changing (so `|dT| < 1/512`) or 100
/// iterations pass. The returned threshold is the bin edge of the final
/// partition, which classifies raw pixels exactly as the histogram did.
pub fn isodata_threshold(img: &GrayImage) -> Result<IsodataResult> {
    let hist = histogram(img);
    isodata_from_histogram(&hist)
}

pub fn isodata_from_histogram(hist: &[u64; HISTOGRAM_BINS]) -> Result<IsodataResult> {
    let occupied = hist.iter().filter(|&&c| c > 0).count();
    if occupied < 2 {
        return Err(Error::Degenerate {
            stage: "isodata",
            reason: "image has a single intensity level".into(),
        });
    }
    let total: u64 = hist.iter().sum();
    let mean = hist
        .iter()
        .enumerate()
        .map(|(b, &c)| c as f64 * bin_center(b))
        .sum::<f64>()
        / total as f64;

    let mut t = mean;
    let mut split = split_for(t);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        // both classes stay populated: the midpoint of the class means lies
        // strictly between the lowest and highest occupied bin centers
        let (lo, hi) = class_means(hist, split).expect("both classes populated");
        let next = (lo + hi) / 2.0;
        let next_split = split_for(next);
        let delta = (next - t).abs();
        t = next;
        if next_split == split && delta < TOLERANCE {
            converged = true;
            break;
        }
        split = next_split;
    }
    Ok(IsodataResult {
        threshold: split as f64 / HISTOGRAM_BINS as f64,
        iterations,
        converged,
    })
}

/// `vessels_dark` selects `pixel < threshold`; otherwise `pixel >= threshold`.
pub fn binarize(img: &GrayImage, threshold: f64, vessels_dark: bool) -> BinaryMask {
    let data = img
        .as_slice()
        .iter()
        .map(|&v| if vessels_dark { v < threshold } else { v >= threshold })
        .collect();
    BinaryMask::new(img.width(), img.height(), data).expect("dimensions inherited from image")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn from_values(values: &[f64]) -> GrayImage {
        GrayImage::new(values.len(), 1, values.to_vec()).unwrap()
    }

    /// Every split whose class-mean midpoint induces that same split.
    fn fixed_point_splits(hist: &[u64; HISTOGRAM_BINS]) -> Vec<usize> {
        (1..HISTOGRAM_BINS)
            .filter(|&s| {
                let mut n = [0u64; 2];
                let mut sum = [0.0; 2];
                for (b, &c) in hist.iter().enumerate() {
                    let k = usize::from(b >= s);
                    n[k] += c;
                    sum[k] += c as f64 * ((b as f64 + 0.5) / 256.0);
                }
                if n[0] == 0 || n[1] == 0 {
                    return false;
                }
                let mid = (sum[0] / n[0] as f64 + sum[1] / n[1] as f64) / 2.0;
                let induced = (0..256).filter(|&b| (b as f64 + 0.5) / 256.0 < mid).count();
                induced == s
            })
            .collect()
    }

    #[test]
    fn subtract_background_constant_and_offset() {
        let img = GrayImage::filled(9, 9, 0.6).unwrap();
        let out = subtract_background(&img, 2).unwrap();
        assert!(out.as_slice().iter().all(|&v| v == 0.0));

        let base = GrayImage::from_fn(12, 10, |x, y| ((x * 5 + y * 3) % 11) as f64 / 20.0).unwrap();
        let shifted = GrayImage::new(12, 10, base.as_slice().iter().map(|v| v + 0.3).collect()).unwrap();
        let a = subtract_background(&base, 2).unwrap();
        let b = subtract_background(&shifted, 2).unwrap();
        for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
            assert!((x - y).abs() < 1e-9);
        }
        assert!(subtract_background(&base, 0).is_err());
    }

    #[test]
    fn subtract_background_matches_naive_mean_subtraction() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let img = GrayImage::from_fn(7, 7, |_, _| rng.random::<f64>()).unwrap();
        let naive: Vec<f64> = (0..49)
            .map(|i| {
                let (x, y) = ((i % 7) as i64, (i / 7) as i64);
                let mut s = 0.0;
                for dy in -2..=2i64 {
                    for dx in -2..=2i64 {
                        s += img.get((x + dx).clamp(0, 6) as usize, (y + dy).clamp(0, 6) as usize);
                    }
                }
                img.get(x as usize, y as usize) - s / 25.0
            })
            .collect();
        let (lo, hi) = naive.iter().fold((f64::MAX, f64::MIN), |(l, h), &v| (l.min(v), h.max(v)));
        let out = subtract_background(&img, 2).unwrap();
        for (o, n) in out.as_slice().iter().zip(&naive) {
            // undo the output rescale before comparing
            assert!((o * (hi - lo) + lo - n).abs() < 1e-6);
        }
    }

    #[test]
    fn vessel_on_ramp_is_darkest_everywhere() {
        let (w, h) = (120, 40);
        let vessel_row = 20;
        let img = GrayImage::from_fn(w, h, |x, y| {
            let bg = 0.2 + 0.7 * x as f64 / (w - 1) as f64;
            if y == vessel_row { bg - 0.08 } else { bg }
        })
        .unwrap();
        let out = subtract_background(&img, 4).unwrap();
        let mut sorted = out.as_slice().to_vec();
        sorted.sort_by(f64::total_cmp);
        let decile = sorted[sorted.len() / 10];
        for x in 0..w {
            assert!(out.get(x, vessel_row) <= decile, "x={x}");
            for y in [0, 10, 30, 39] {
                assert!(out.get(x, vessel_row) < out.get(x, y));
            }
        }
    }

    #[test]
    fn symmetric_bimodal_threshold() {
        let values: Vec<f64> = (0..100).map(|i| if i % 2 == 0 { 0.2 } else { 0.8 }).collect();
        let r = isodata_threshold(&from_values(&values)).unwrap();
        assert!((r.threshold - 0.5).abs() <= 1.0 / 256.0, "{r:?}");
        assert!(r.converged && r.iterations >= 1);
    }

    #[test]
    fn skewed_bimodal_matches_exhaustive_fixed_point() {
        let values: Vec<f64> = (0..100).map(|i| if i < 90 { 0.1 } else { 0.9 }).collect();
        let img = from_values(&values);
        let r = isodata_threshold(&img).unwrap();
        let fixed = fixed_point_splits(&histogram(&img));
        let split = (r.threshold * 256.0).round() as usize;
        assert!(fixed.contains(&split), "{split} not in {fixed:?}");
        // the class means are the two levels themselves
        let mid = (bin_center(bin_index(0.1)) + bin_center(bin_index(0.9))) / 2.0;
        assert!((r.threshold - mid).abs() <= 1.0 / 256.0);
    }

    #[test]
    fn threshold_splits_into_two_nonempty_classes() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let n = rng.random_range(2..200);
            let mut values: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            values[0] = 0.0;
            values[1] = 1.0;
            let img = from_values(&values);
            let r = isodata_threshold(&img).unwrap();
            let mask = binarize(&img, r.threshold, true);
            assert!(mask.count() >= 1 && mask.count() < n);
            let (lo, hi) = img.min_max();
            assert!(r.threshold >= lo && r.threshold <= hi);
        }
    }

    #[test]
    fn degenerate_image_is_an_error() {
        let err = isodata_threshold(&GrayImage::filled(5, 5, 0.4).unwrap()).unwrap_err();
        assert!(matches!(err, Error::Degenerate { stage: "isodata", .. }));
    }

    #[test]
    fn binarize_examples() {
        let img = GrayImage::from_fn(4, 4, |x, y| if (x + y) % 2 == 0 { 0.3 } else { 0.7 }).unwrap();
        assert_eq!(binarize(&img, 0.0, true).count(), 0);
        let m = binarize(&img, 0.5, true);
        for y in 0..4 {
            for x in 0..4 {
                assert_eq!(m.get(x, y), (x + y) % 2 == 0);
            }
        }
        let bright = binarize(&img, 0.5, false);
        assert_eq!(bright, m.invert());

        let img = from_values(&[0.2, 1.0, 0.99]);
        let m = binarize(&img, 1.0, true);
        assert_eq!(m.as_slice(), &[true, false, true]);
    }

    proptest! {
        #[test]
        fn affine_maps_shift_the_threshold(seed in 0u64..500, alpha in 0.5f64..0.8, beta in 0.0f64..0.15) {
            // two well-separated clusters so the fixed point is unique
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let values: Vec<f64> = (0..400)
                .map(|i| {
                    let c = if i % 3 == 0 { 0.75 } else { 0.25 };
                    c + rng.random_range(-0.08..0.08)
                })
                .collect();
            let base = isodata_threshold(&from_values(&values)).unwrap();
            let mapped: Vec<f64> = values.iter().map(|v| alpha * v + beta).collect();
            let moved = isodata_threshold(&from_values(&mapped)).unwrap();
            let expected = alpha * base.threshold + beta;
            prop_assert!((moved.threshold - expected).abs() <= 2.0 / 256.0,
                "{} vs {}", moved.threshold, expected);
        }

        #[test]
        fn binarize_partitions(seed in 0u64..1000, t in 0.0f64..1.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let img = GrayImage::from_fn(8, 8, |_, _| rng.random::<f64>()).unwrap();
            let dark = binarize(&img, t, true);
            let bright = binarize(&img, t, false);
            prop_assert_eq!(dark.count() + bright.count(), 64);
            prop_assert_eq!(dark.invert(), bright);
        }
    }
}
