use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{box_plane, GrayImage};

/// Linear unsharp masking with a box-filter blur.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnsharpParams {
    pub radius: usize,
    pub amount: f64,
}

impl Default for UnsharpParams {
    fn default() -> Self {
        Self {
            radius: 9,
            amount: 1.5,
        }
    }
}

impl UnsharpParams {
    pub fn validate(&self) -> Result<()> {
        if self.radius < 1 {
            return Err(Error::param("unsharp mask radius must be >= 1"));
        }
        if !(self.amount.is_finite() && self.amount >= 0.0) {
            return Err(Error::param(format!("unsharp amount must be >= 0, got {}", self.amount)));
        }
        Ok(())
    }
}

pub fn unsharp_mask(img: &GrayImage, params: &UnsharpParams) -> Result<GrayImage> {
    params.validate()?;
    let (w, h) = img.dims();
    let blur = box_plane(img.as_slice(), w, h, params.radius);
    let out = img
        .as_slice()
        .iter()
        .zip(&blur)
        .map(|(i, b)| (i + params.amount * (i - b)).clamp(0.0, 1.0))
        .collect();
    Ok(GrayImage::from_raw(w, h, out))
}
