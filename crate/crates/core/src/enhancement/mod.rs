//! Contrast enhancers behind one interface: SUACE plus the CLAHE, local
//! normalization and unsharp-mask baselines.

mod clahe;
mod local_norm;
mod suace;
mod unsharp;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use clahe::{clahe, ClaheParams};
pub use local_norm::{local_normalize, LocalNormParams};
pub use suace::{suace, suace_bounds, SuaceParams};
pub use unsharp::{unsharp_mask, UnsharpParams};

use crate::error::{Error, Result};
use crate::image::GrayImage;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Suace,
    Clahe,
    Ln,
    Lum,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Suace, Method::Clahe, Method::Ln, Method::Lum];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Suace => "suace",
            Method::Clahe => "clahe",
            Method::Ln => "ln",
            Method::Lum => "lum",
        }
    }

    /// Display label used in comparison tables.
    pub fn label(&self) -> &'static str {
        match self {
            Method::Suace => "SUACE",
            Method::Clahe => "CLAHE",
            Method::Ln => "LN",
            Method::Lum => "LUM",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "suace" => Ok(Method::Suace),
            "clahe" => Ok(Method::Clahe),
            "ln" | "local_norm" | "localnorm" => Ok(Method::Ln),
            "lum" | "unsharp" => Ok(Method::Lum),
            other => Err(Error::param(format!(
                "unknown enhancement method `{other}` (expected suace, clahe, ln or lum)"
            ))),
        }
    }
}

/// One enhancer together with its parameter record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum EnhancerChoice {
    Suace(SuaceParams),
    Clahe(ClaheParams),
    Ln(LocalNormParams),
    Lum(UnsharpParams),
}

impl Default for EnhancerChoice {
    fn default() -> Self {
        EnhancerChoice::Suace(SuaceParams::default())
    }
}

impl From<Method> for EnhancerChoice {
    fn from(m: Method) -> Self {
        match m {
            Method::Suace => EnhancerChoice::Suace(SuaceParams::default()),
            Method::Clahe => EnhancerChoice::Clahe(ClaheParams::default()),
            Method::Ln => EnhancerChoice::Ln(LocalNormParams::default()),
            Method::Lum => EnhancerChoice::Lum(UnsharpParams::default()),
        }
    }
}

impl EnhancerChoice {
    pub fn method(&self) -> Method {
        match self {
            EnhancerChoice::Suace(_) => Method::Suace,
            EnhancerChoice::Clahe(_) => Method::Clahe,
            EnhancerChoice::Ln(_) => Method::Ln,
            EnhancerChoice::Lum(_) => Method::Lum,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            EnhancerChoice::Suace(p) => p.validate(),
            EnhancerChoice::Clahe(p) => p.validate(),
            EnhancerChoice::Ln(p) => p.validate(),
            EnhancerChoice::Lum(p) => p.validate(),
        }
    }

    pub fn apply(&self, img: &GrayImage) -> Result<GrayImage> {
        match self {
            EnhancerChoice::Suace(p) => suace(img, p),
            EnhancerChoice::Clahe(p) => clahe(img, p),
            EnhancerChoice::Ln(p) => local_normalize(img, p),
            EnhancerChoice::Lum(p) => unsharp_mask(img, p),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
            assert_eq!(EnhancerChoice::from(m).method(), m);
        }
        assert!("wavelet".parse::<Method>().is_err());
    }

    #[test]
    fn all_enhancers_keep_dims_and_range() {
        let img = GrayImage::from_fn(40, 30, |x, y| {
            (0.5 + 0.4 * ((x as f64 * 0.3).sin() * (y as f64 * 0.2).cos())).clamp(0.0, 1.0)
        })
        .unwrap();
        for m in Method::ALL {
            let out = EnhancerChoice::from(m).apply(&img).unwrap();
            assert_eq!(out.dims(), img.dims(), "{m}");
            assert!(out.as_slice().iter().all(|v| (0.0..=1.0).contains(v)), "{m}");
        }
    }

    #[test]
    fn serde_tagging() {
        let json = serde_json::to_string(&EnhancerChoice::default()).unwrap();
        assert!(json.contains("\"method\":\"suace\""));
        let back: EnhancerChoice = serde_json::from_str(&json).unwrap();
        assert_eq!(back, EnhancerChoice::default());
    }
}
