//! Speeded-up adaptive contrast enhancement.
//!
//! Each pixel is linearly stretched against a reference window of width `d`
//! centered on the local illumination `g`, where `g` is a Gaussian low-pass
//! of the input. Pixels below the window go to 0, pixels at or above it go to
//! `k`, and the rest map linearly onto `[0, k]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{gaussian_plane, GrayImage};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuaceParams {
    /// Gaussian scale of the illumination estimate, in pixels.
    pub sigma: f64,
    /// Width of the reference dynamic range, in `[0, 1]` intensity units.
    pub d: f64,
    /// Output dynamic range. Always 1.0 in the normalized domain.
    pub k: f64,
}

impl Default for SuaceParams {
    fn default() -> Self {
        Self {
            sigma: 7.0,
            d: 16.0 / 255.0,
            k: 1.0,
        }
    }
}

impl SuaceParams {
    pub fn new(sigma: f64, d: f64) -> Result<Self> {
        let p = Self { sigma, d, k: 1.0 };
        p.validate()?;
        Ok(p)
    }

    /// Takes `d` on the 0-255 scale used for 8-bit data.
    pub fn from_8bit(sigma: f64, d: f64) -> Result<Self> {
        Self::new(sigma, d / 255.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(Error::param(format!("suace sigma must be > 0, got {}", self.sigma)));
        }
        if !(self.d.is_finite() && self.d > 0.0 && self.d <= 1.0) {
            return Err(Error::param(format!(
                "suace d must lie in (0, 1] (0-255 scale: (0, 255]), got {}",
                self.d
            )));
        }
        if self.k != 1.0 {
            return Err(Error::param("suace k is fixed at 1.0 in the normalized domain"));
        }
        Ok(())
    }
}

/// Lower and upper edges of the reference window centered on `g`.
/// Not clamped: the edges may leave `[0, 1]`.
#[inline]
pub fn suace_bounds(g: f64, d: f64) -> (f64, f64) {
    (g - d / 2.0, g + d / 2.0)
}

#[inline]
pub(crate) fn stretch(i: f64, g: f64, d: f64, k: f64) -> f64 {
    let (a, b) = suace_bounds(g, d);
    if i < a {
        0.0
    } else if i >= b {
        k
    } else {
        ((i - a) / d * k).clamp(0.0, k)
    }
}

pub fn suace(img: &GrayImage, params: &SuaceParams) -> Result<GrayImage> {
    params.validate()?;
    let (w, h) = img.dims();
    let low = gaussian_plane(img.as_slice(), w, h, params.sigma)?;
    let out = img
        .as_slice()
        .iter()
        .zip(&low)
        .map(|(&i, &g)| stretch(i, g, params.d, params.k))
        .collect();
    Ok(GrayImage::from_raw(w, h, out))
}
