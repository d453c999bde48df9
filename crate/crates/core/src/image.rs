//! Raster containers and the spatial filters every later stage is built on.
//!
//! Intensities live in `[0, 1]` as `f64`. Filters replicate edge pixels at
//! the border, so a constant image stays constant all the way to the rim.

use rayon::prelude::*;

use crate::error::{Error, Result};

fn check_dims(width: usize, height: usize, len: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidImage(format!(
            "dimensions must be positive, got {width}x{height}"
        )));
    }
    if width.checked_mul(height) != Some(len) {
        return Err(Error::InvalidImage(format!(
            "{width}x{height} image needs {} samples, got {len}",
            width * height
        )));
    }
    Ok(())
}

fn check_sample(v: f64) -> Result<()> {
    if v.is_finite() && (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::InvalidImage(format!("sample {v} outside [0, 1]")))
    }
}

/// Single-channel raster of intensities in `[0, 1]`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        check_dims(width, height, data.len())?;
        data.iter().try_for_each(|&v| check_sample(v))?;
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Builds an image from arbitrary finite values by clamping into `[0, 1]`.
    pub fn from_clamped(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        check_dims(width, height, data.len())?;
        if let Some(v) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidImage(format!("non-finite sample {v}")));
        }
        let data = data.into_iter().map(|v| v.clamp(0.0, 1.0)).collect();
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        check_sample(value)?;
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    /// Caller guarantees every sample is finite and inside `[0, 1]`.
    pub(crate) fn from_raw(width: usize, height: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), width * height);
        debug_assert!(data.iter().all(|v| (0.0..=1.0).contains(v)));
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn min_max(&self) -> (f64, f64) {
        min_max(&self.data)
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    /// Quantizes to 8 bits with rounding.
    pub fn to_u8(&self) -> Vec<u8> {
        self.data
            .iter()
            .map(|&v| (v * 255.0).round().clamp(0.0, 255.0) as u8)
            .collect()
    }

    pub fn from_u8(width: usize, height: usize, bytes: &[u8]) -> Result<Self> {
        check_dims(width, height, bytes.len())?;
        Ok(Self::from_raw(
            width,
            height,
            bytes.iter().map(|&b| b as f64 / 255.0).collect(),
        ))
    }
}

/// Three-channel raster, each channel in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    data: Vec<[f64; 3]>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, data: Vec<[f64; 3]>) -> Result<Self> {
        check_dims(width, height, data.len())?;
        data.iter().flatten().try_for_each(|&v| check_sample(v))?;
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> [f64; 3],
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    pub fn from_gray(gray: &GrayImage) -> Self {
        Self {
            width: gray.width,
            height: gray.height,
            data: gray.data.iter().map(|&v| [v, v, v]).collect(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> [f64; 3] {
        self.data[y * self.width + x]
    }

    pub fn as_slice(&self) -> &[[f64; 3]] {
        &self.data
    }

    pub fn to_u8(&self) -> Vec<u8> {
        self.data
            .iter()
            .flatten()
            .map(|&v| (v * 255.0).round().clamp(0.0, 255.0) as u8)
            .collect()
    }
}

/// Row-major boolean raster. `true` marks foreground (vessel).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, data: Vec<bool>) -> Result<Self> {
        check_dims(width, height, data.len())?;
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn empty(width: usize, height: usize) -> Self {
        assert!(width > 0 && height > 0, "mask dimensions must be positive");
        Self {
            width,
            height,
            data: vec![false; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut mask = Self::empty(width, height);
        for y in 0..height {
            for x in 0..width {
                mask.data[y * width + x] = f(x, y);
            }
        }
        mask
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    /// Bounds-checked read; anything outside the raster is background.
    #[inline]
    pub fn get_signed(&self, x: i64, y: i64) -> bool {
        x >= 0
            && y >= 0
            && (x as usize) < self.width
            && (y as usize) < self.height
            && self.data[y as usize * self.width + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.data[y * self.width + x] = value;
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.data
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn invert(&self) -> Self {
        Self {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|b| !b).collect(),
        }
    }

    /// Copies the window `[x0, x0+w) x [y0, y0+h)`; the window must lie inside the mask.
    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Self {
        assert!(x0 + w <= self.width && y0 + h <= self.height);
        let mut data = Vec::with_capacity(w * h);
        for y in y0..y0 + h {
            let row = y * self.width;
            data.extend_from_slice(&self.data[row + x0..row + x0 + w]);
        }
        Self {
            width: w,
            height: h,
            data,
        }
    }

    /// 8-bit rendering: foreground 255, background 0.
    pub fn to_u8(&self) -> Vec<u8> {
        self.data.iter().map(|&b| if b { 255 } else { 0 }).collect()
    }

    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.dims() == other.dims()
            && self.data.iter().zip(&other.data).all(|(&a, &b)| !a || b)
    }
}

/// Truncated, renormalized 1-D Gaussian. Radius is `ceil(3 sigma)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianKernel {
    sigma: f64,
    radius: usize,
    weights: Vec<f64>,
}

impl GaussianKernel {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::param(format!("gaussian sigma must be > 0, got {sigma}")));
        }
        let radius = (3.0 * sigma).ceil() as usize;
        let denom = 2.0 * sigma * sigma;
        let mut weights: Vec<f64> = (0..=2 * radius)
            .map(|i| {
                let x = i as f64 - radius as f64;
                (-x * x / denom).exp()
            })
            .collect();
        let sum: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= sum);
        Ok(Self {
            sigma,
            radius,
            weights,
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

pub(crate) fn min_max(data: &[f64]) -> (f64, f64) {
    data.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    })
}

/// Separable convolution of a raw plane with edge replication.
pub(crate) fn convolve_separable(
    data: &[f64],
    width: usize,
    height: usize,
    kernel: &[f64],
) -> Vec<f64> {
    let radius = kernel.len() / 2;
    let mut tmp = vec![0.0; data.len()];

    tmp.par_chunks_mut(width)
        .zip(data.par_chunks(width))
        .for_each_init(
            || Vec::with_capacity(width + 2 * radius),
            |padded, (out, row)| {
                padded.clear();
                padded.extend(std::iter::repeat_n(row[0], radius));
                padded.extend_from_slice(row);
                padded.extend(std::iter::repeat_n(row[width - 1], radius));
                for (x, o) in out.iter_mut().enumerate() {
                    *o = padded[x..x + kernel.len()]
                        .iter()
                        .zip(kernel)
                        .map(|(a, b)| a * b)
                        .sum();
                }
            },
        );

    let mut out = vec![0.0; data.len()];
    out.par_chunks_mut(width).enumerate().for_each(|(y, row)| {
        row.fill(0.0);
        for (k, &w) in kernel.iter().enumerate() {
            let sy = (y + k).saturating_sub(radius).min(height - 1);
            let src = &tmp[sy * width..(sy + 1) * width];
            for (o, &s) in row.iter_mut().zip(src) {
                *o += w * s;
            }
        }
    });
    out
}

pub(crate) fn gaussian_plane(data: &[f64], width: usize, height: usize, sigma: f64) -> Result<Vec<f64>> {
    let kernel = GaussianKernel::new(sigma)?;
    Ok(convolve_separable(data, width, height, kernel.weights()))
}

/// Box mean over `(2r+1)^2` windows of a raw plane, edge-replicated.
pub(crate) fn box_plane(data: &[f64], width: usize, height: usize, radius: usize) -> Vec<f64> {
    let win = 2 * radius + 1;
    let mut tmp = vec![0.0; data.len()];
    tmp.par_chunks_mut(width)
        .zip(data.par_chunks(width))
        .for_each(|(out, row)| {
            // prefix sums over the padded row
            let mut prefix = Vec::with_capacity(width + 2 * radius + 1);
            prefix.push(0.0);
            let mut acc = 0.0;
            for i in 0..width + 2 * radius {
                let sx = i.saturating_sub(radius).min(width - 1);
                acc += row[sx];
                prefix.push(acc);
            }
            for (x, o) in out.iter_mut().enumerate() {
                *o = (prefix[x + win] - prefix[x]) / win as f64;
            }
        });

    let mut out = vec![0.0; data.len()];
    out.par_chunks_mut(width).enumerate().for_each(|(y, row)| {
        for k in 0..win {
            let sy = (y + k).saturating_sub(radius).min(height - 1);
            let src = &tmp[sy * width..(sy + 1) * width];
            for (o, &s) in row.iter_mut().zip(src) {
                *o += s;
            }
        }
        row.iter_mut().for_each(|o| *o /= win as f64);
    });
    out
}

/// Clamps away floating-point spill so results satisfy the `[0, 1]` invariant.
fn into_unit(mut data: Vec<f64>) -> Vec<f64> {
    data.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
    data
}

/// Gaussian smoothing with a `ceil(3 sigma)` truncated kernel.
pub fn gaussian_blur(img: &GrayImage, sigma: f64) -> Result<GrayImage> {
    let out = gaussian_plane(img.as_slice(), img.width, img.height, sigma)?;
    Ok(GrayImage::from_raw(img.width, img.height, into_unit(out)))
}

/// Mean filter over a `(2 radius + 1)^2` window.
pub fn average_blur(img: &GrayImage, radius: usize) -> Result<GrayImage> {
    if radius < 1 {
        return Err(Error::param("average filter radius must be >= 1"));
    }
    let out = box_plane(img.as_slice(), img.width, img.height, radius);
    Ok(GrayImage::from_raw(img.width, img.height, into_unit(out)))
}
