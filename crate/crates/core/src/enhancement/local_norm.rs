//! Local normalization: subtract the local mean, divide by the local
//! standard deviation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{gaussian_plane, GrayImage};

const EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalNormParams {
    pub sigma_mean: f64,
    pub sigma_std: f64,
    pub out_gain: f64,
}

impl Default for LocalNormParams {
    fn default() -> Self {
        Self {
            sigma_mean: 15.0,
            sigma_std: 15.0,
            out_gain: 0.2,
        }
    }
}

impl LocalNormParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_mean > 0.0 && self.sigma_std > 0.0) {
            return Err(Error::param("local normalization sigmas must be > 0"));
        }
        if !self.out_gain.is_finite() {
            return Err(Error::param("local normalization gain must be finite"));
        }
        Ok(())
    }
}

pub fn local_normalize(img: &GrayImage, params: &LocalNormParams) -> Result<GrayImage> {
    params.validate()?;
    let (w, h) = img.dims();
    let mean = gaussian_plane(img.as_slice(), w, h, params.sigma_mean)?;
    let centered: Vec<f64> = img.as_slice().iter().zip(&mean).map(|(i, m)| i - m).collect();
    let sq: Vec<f64> = centered.iter().map(|c| c * c).collect();
    let var = gaussian_plane(&sq, w, h, params.sigma_std)?;
    let out = centered
        .iter()
        .zip(&var)
        .map(|(c, v)| {
            let n = c / (v.max(0.0).sqrt() + EPS);
            (0.5 + n * params.out_gain).clamp(0.0, 1.0)
        })
        .collect();
    Ok(GrayImage::from_raw(w, h, out))
}
