//! sRGB to CIE-Lab conversion and the PCA projection that turns a weighted
//! Lab image into the grayscale pipeline input.

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{GrayImage, RgbImage};

// D65 reference white
const WHITE_X: f64 = 0.95047;
const WHITE_Y: f64 = 1.0;
const WHITE_Z: f64 = 1.08883;

#[derive(Debug, Clone, PartialEq)]
pub struct LabImage {
    width: usize,
    height: usize,
    data: Vec<[f64; 3]>,
}

impl LabImage {
    pub fn new(width: usize, height: usize, data: Vec<[f64; 3]>) -> Result<Self> {
        if width == 0 || height == 0 || width * height != data.len() {
            return Err(Error::InvalidImage(format!(
                "lab image {width}x{height} with {} samples",
                data.len()
            )));
        }
        if data.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidImage("non-finite Lab sample".into()));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn as_slice(&self) -> &[[f64; 3]] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> [f64; 3] {
        self.data[y * self.width + x]
    }
}

/// Per-channel multipliers applied to (L, a, b) before PCA.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabWeights {
    pub l: f64,
    pub a: f64,
    pub b: f64,
}

impl Default for LabWeights {
    fn default() -> Self {
        Self {
            l: 1.0,
            a: 0.25,
            b: 0.25,
        }
    }
}

impl LabWeights {
    pub fn new(l: f64, a: f64, b: f64) -> Result<Self> {
        let w = Self { l, a, b };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.l, self.a, self.b];
        if all.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::param(format!("Lab weights must be finite and >= 0: {all:?}")));
        }
        if all.iter().all(|w| *w == 0.0) {
            return Err(Error::param("Lab weights must not all be zero"));
        }
        Ok(())
    }

    fn as_array(&self) -> [f64; 3] {
        [self.l, self.a, self.b]
    }
}

#[inline]
fn srgb_to_linear(c: f64) -> f64 {
    if c <= 0.04045 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

#[inline]
fn lab_f(t: f64) -> f64 {
    const DELTA: f64 = 6.0 / 29.0;
    if t > DELTA * DELTA * DELTA {
        t.cbrt()
    } else {
        t / (3.0 * DELTA * DELTA) + 4.0 / 29.0
    }
}

/// Converts one sRGB triple (channels in `[0, 1]`) to CIE-Lab under D65.
pub fn srgb_pixel_to_lab(rgb: [f64; 3]) -> [f64; 3] {
    let [r, g, b] = rgb.map(srgb_to_linear);
    let x = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
    let y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
    let z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;
    let (fx, fy, fz) = (lab_f(x / WHITE_X), lab_f(y / WHITE_Y), lab_f(z / WHITE_Z));
    [116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)]
}

pub fn rgb_to_lab(img: &RgbImage) -> LabImage {
    LabImage {
        width: img.width(),
        height: img.height(),
        data: img.as_slice().iter().map(|&p| srgb_pixel_to_lab(p)).collect(),
    }
}

/// Projects weighted Lab pixels onto their first principal component and
/// rescales to `[0, 1]`. The sign is fixed so the output rises with L.
///
/// A zero-variance image yields a constant 0.5 image.
pub fn pca_grayscale(lab: &LabImage, weights: &LabWeights) -> Result<GrayImage> {
    weights.validate()?;
    let w = weights.as_array();
    let n = lab.data.len() as f64;
    let pts: Vec<Vector3<f64>> = lab
        .data
        .iter()
        .map(|p| Vector3::new(p[0] * w[0], p[1] * w[1], p[2] * w[2]))
        .collect();

    let mean = pts.iter().fold(Vector3::zeros(), |acc, p| acc + p) / n;
    let mut cov = Matrix3::zeros();
    for p in &pts {
        let d = p - mean;
        cov += d * d.transpose();
    }
    cov /= n;

    let constant = || GrayImage::from_raw(lab.width, lab.height, vec![0.5; lab.data.len()]);
    if cov.trace() <= f64::EPSILON * mean.norm_squared().max(1.0) {
        return Ok(constant());
    }

    let eig = SymmetricEigen::new(cov);
    let (idx, _) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best });
    let axis: Vector3<f64> = eig.eigenvectors.column(idx).into_owned();

    let mean_l = lab.data.iter().map(|p| p[0]).sum::<f64>() / n;
    let mut proj: Vec<f64> = pts.iter().map(|p| (p - mean).dot(&axis)).collect();
    let cov_l: f64 = proj
        .iter()
        .zip(&lab.data)
        .map(|(q, p)| q * (p[0] - mean_l))
        .sum();
    let flip = if cov_l.abs() > 1e-12 {
        cov_l < 0.0
    } else {
        // L carries no signal; pick the orientation with a positive dominant component
        let dom = axis.iter().cloned().fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
        dom < 0.0
    };
    if flip {
        proj.iter_mut().for_each(|q| *q = -*q);
    }

    let (lo, hi) = crate::image::min_max(&proj);
    let span = hi - lo;
    if span <= 1e-12 * hi.abs().max(lo.abs()).max(1.0) {
        return Ok(constant());
    }
    let out = proj
        .into_iter()
        .map(|q| ((q - lo) / span).clamp(0.0, 1.0))
        .collect();
    Ok(GrayImage::from_raw(lab.width, lab.height, out))
}

/// Convenience composition of [`rgb_to_lab`] and [`pca_grayscale`].
pub fn rgb_to_gray(img: &RgbImage, weights: &LabWeights) -> Result<GrayImage> {
    pca_grayscale(&rgb_to_lab(img), weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pearson(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let ma = a.iter().sum::<f64>() / n;
        let mb = b.iter().sum::<f64>() / n;
        let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
        for (x, y) in a.iter().zip(b) {
            sab += (x - ma) * (y - mb);
            saa += (x - ma) * (x - ma);
            sbb += (y - mb) * (y - mb);
        }
        sab / (saa * sbb).sqrt()
    }

    #[test]
    fn white_and_black() {
        let [l, a, b] = srgb_pixel_to_lab([1.0, 1.0, 1.0]);
        assert!((l - 100.0).abs() < 1e-3);
        assert!(a.abs() < 0.5 && b.abs() < 0.5);
        let [l, a, b] = srgb_pixel_to_lab([0.0, 0.0, 0.0]);
        assert_eq!([l, a, b], [0.0, 0.0, 0.0]);
    }

    #[test]
    fn mid_gray_lightness() {
        // hand evaluation: linear = (0.555/1.055)^2.4 = 0.2140411, L = 116 cbrt(lin) - 16
        let [l, _, _] = srgb_pixel_to_lab([0.5, 0.5, 0.5]);
        assert!((l - 53.388_96).abs() < 0.1, "{l}");
    }

    #[test]
    fn lightness_only_variation_is_monotone() {
        let data: Vec<[f64; 3]> = (0..50).map(|i| [i as f64 * 2.0, 3.0, -7.0]).collect();
        let lab = LabImage::new(10, 5, data.clone()).unwrap();
        let gray = pca_grayscale(&lab, &LabWeights::default()).unwrap();
        let l: Vec<f64> = data.iter().map(|p| p[0]).collect();
        assert!((pearson(gray.as_slice(), &l) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn constant_image_gives_half() {
        let lab = LabImage::new(4, 3, vec![[40.0, 10.0, -5.0]; 12]).unwrap();
        let gray = pca_grayscale(&lab, &LabWeights::default()).unwrap();
        assert!(gray.as_slice().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn two_point_closed_form() {
        let lab = LabImage::new(2, 1, vec![[10.0, 5.0, 0.0], [30.0, 15.0, 0.0]]).unwrap();
        let w = LabWeights::new(1.0, 1.0, 1.0).unwrap();
        let gray = pca_grayscale(&lab, &w).unwrap();
        assert_eq!(gray.as_slice(), &[0.0, 1.0]);

        // principal axis of the two centered points is (20, 10, 0) normalized
        let pts: [Vector3<f64>; 2] = [Vector3::new(10.0, 5.0, 0.0), Vector3::new(30.0, 15.0, 0.0)];
        let mean = (pts[0] + pts[1]) / 2.0;
        let mut cov = Matrix3::zeros();
        for p in &pts {
            cov += (p - mean) * (p - mean).transpose();
        }
        let eig = SymmetricEigen::new(cov / 2.0);
        let i = eig.eigenvalues.imax();
        let v = eig.eigenvectors.column(i);
        let expected = Vector3::new(20.0, 10.0, 0.0).normalize();
        assert!((v.dot(&expected).abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn weights_validation() {
        assert!(LabWeights::new(0.0, 0.0, 0.0).is_err());
        assert!(LabWeights::new(-1.0, 1.0, 1.0).is_err());
        assert!(LabWeights::new(0.0, 1.0, 0.0).is_ok());
    }

    fn textured_lab() -> LabImage {
        let data = (0..64)
            .map(|i| {
                let x = (i % 8) as f64;
                let y = (i / 8) as f64;
                [30.0 + 5.0 * x + (y * 1.3).sin() * 4.0, 10.0 + y, -3.0 + x * 0.5 - y * 0.7]
            })
            .collect();
        LabImage::new(8, 8, data).unwrap()
    }

    #[test]
    fn uniform_weight_scaling_is_invisible() {
        let lab = textured_lab();
        let base = pca_grayscale(&lab, &LabWeights::new(1.0, 0.5, 0.3).unwrap()).unwrap();
        let scaled = pca_grayscale(&lab, &LabWeights::new(4.0, 2.0, 1.2).unwrap()).unwrap();
        for (a, b) in base.as_slice().iter().zip(scaled.as_slice()) {
            assert!((a - b).abs() < 1e-6);
        }
        let (lo, hi) = base.min_max();
        assert_eq!((lo, hi), (0.0, 1.0));
    }

    #[test]
    fn rank_order_survives_affine_relighting() {
        let l: Vec<f64> = [3.0, 9.0, 1.0, 7.0, 4.0, 8.0].to_vec();
        let mk = |s: f64, o: f64| {
            LabImage::new(3, 2, l.iter().map(|&v| [v * s + o, 2.0, 2.0]).collect()).unwrap()
        };
        let a = pca_grayscale(&mk(1.0, 0.0), &LabWeights::default()).unwrap();
        let b = pca_grayscale(&mk(3.5, 20.0), &LabWeights::default()).unwrap();
        let rank = |g: &GrayImage| {
            let mut idx: Vec<usize> = (0..6).collect();
            idx.sort_by(|&i, &j| g.as_slice()[i].total_cmp(&g.as_slice()[j]));
            idx
        };
        assert_eq!(rank(&a), rank(&b));
    }
}
