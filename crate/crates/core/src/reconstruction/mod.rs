//! Vessel reconstruction: drop small components, bridge gaps between vessel
//! fragments where local Hough evidence supports a line, then drop the
//! components that are still small.

mod bridge;
mod hough;
mod labels;
mod skeleton;

use serde::{Deserialize, Serialize};

pub use bridge::{bridge_gaps, bridge_gaps_traced, draw_line, Bridge};
pub use hough::{probabilistic_hough, HoughParams, LineSegment};
pub use labels::{filter_small, label_components, ComponentLabels};
pub use skeleton::{find_endpoints, skeletonize};

use crate::error::{Error, Result};
use crate::image::BinaryMask;

pub const DEFAULT_SEED: u64 = 0x5eed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Point {
    pub x: i64,
    pub y: i64,
}

impl Point {
    pub const fn new(x: i64, y: i64) -> Self {
        Self { x, y }
    }

    pub fn chebyshev(&self, other: &Point) -> i64 {
        (self.x - other.x).abs().max((self.y - other.y).abs())
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (((self.x - other.x).pow(2) + (self.y - other.y).pow(2)) as f64).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReconstructionParams {
    /// Pre-filter area: components smaller than this are noise.
    pub a1: usize,
    /// Endpoint pairing distance and Hough window margin, in pixels.
    pub h: usize,
    /// Bridging requires a Hough line with strictly more than `v` votes.
    pub v: u32,
    /// Post-filter area.
    pub a2: usize,
    /// Seed for the Hough pixel sampling.
    pub seed: u64,
}

impl Default for ReconstructionParams {
    fn default() -> Self {
        Self {
            a1: 10,
            h: 5,
            v: 3,
            a2: 50,
            seed: DEFAULT_SEED,
        }
    }
}

impl ReconstructionParams {
    pub fn validate(&self) -> Result<()> {
        if self.a1 == 0 || self.a1 >= self.a2 {
            return Err(Error::param(format!(
                "reconstruction needs 0 < a1 < a2, got a1={} a2={}",
                self.a1, self.a2
            )));
        }
        if self.h < 3 {
            return Err(Error::param(format!("window size h must be >= 3, got {}", self.h)));
        }
        if self.v < 1 {
            return Err(Error::param("vote threshold v must be >= 1"));
        }
        Ok(())
    }
}

/// Pre-filter at `a1`, bridge gaps, post-filter at `a2`.
pub fn reconstruct(mask: &BinaryMask, params: &ReconstructionParams) -> Result<BinaryMask> {
    params.validate()?;
    let cleaned = filter_small(mask, params.a1);
    let bridged = bridge_gaps(&cleaned, params)?;
    Ok(filter_small(&bridged, params.a2))
}
