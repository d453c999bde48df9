//! Contrast-limited adaptive histogram equalization.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::GrayImage;

const BINS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClaheParams {
    pub tiles_x: usize,
    pub tiles_y: usize,
    /// Normalized clip limit in `(0, 1]`. 1 disables clipping.
    pub clip_limit: f64,
}

impl Default for ClaheParams {
    fn default() -> Self {
        Self {
            tiles_x: 8,
            tiles_y: 8,
            clip_limit: 0.01,
        }
    }
}

impl ClaheParams {
    pub fn validate(&self) -> Result<()> {
        if self.tiles_x < 1 || self.tiles_y < 1 {
            return Err(Error::param("clahe needs at least a 1x1 tile grid"));
        }
        if !(self.clip_limit > 0.0 && self.clip_limit <= 1.0) {
            return Err(Error::param(format!(
                "clahe clip limit must lie in (0, 1], got {}",
                self.clip_limit
            )));
        }
        Ok(())
    }
}

#[inline]
fn bin_of(v: f64) -> usize {
    ((v * (BINS - 1) as f64).round() as usize).min(BINS - 1)
}

/// Tile boundaries as an integer partition of `n` into `parts` slices.
fn partition(n: usize, parts: usize) -> Vec<usize> {
    (0..=parts).map(|i| i * n / parts).collect()
}

fn tile_mapping(img: &GrayImage, x0: usize, x1: usize, y0: usize, y1: usize, clip_limit: f64) -> [f64; BINS] {
    let mut hist = [0.0f64; BINS];
    for y in y0..y1 {
        for x in x0..x1 {
            hist[bin_of(img.get(x, y))] += 1.0;
        }
    }
    let n = ((x1 - x0) * (y1 - y0)) as f64;
    let avg = n / BINS as f64;
    let clip = avg + clip_limit * (n - avg);
    let mut excess = 0.0;
    for h in hist.iter_mut() {
        if *h > clip {
            excess += *h - clip;
            *h = clip;
        }
    }
    let share = excess / BINS as f64;
    let mut map = [0.0; BINS];
    let mut acc = 0.0;
    for (m, h) in map.iter_mut().zip(hist) {
        acc += h + share;
        *m = (acc / n).clamp(0.0, 1.0);
    }
    map
}

/// Locates `pos` between tile centers: returns (lower tile, upper tile, weight of upper).
fn interp_coords(pos: f64, centers: &[f64]) -> (usize, usize, f64) {
    let last = centers.len() - 1;
    if pos <= centers[0] {
        return (0, 0, 0.0);
    }
    if pos >= centers[last] {
        return (last, last, 0.0);
    }
    let i = centers.partition_point(|&c| c <= pos) - 1;
    let t = (pos - centers[i]) / (centers[i + 1] - centers[i]);
    (i, i + 1, t)
}

pub fn clahe(img: &GrayImage, params: &ClaheParams) -> Result<GrayImage> {
    params.validate()?;
    let (w, h) = img.dims();
    let xs = partition(w, params.tiles_x);
    let ys = partition(h, params.tiles_y);
    if xs.windows(2).chain(ys.windows(2)).any(|s| s[1] - s[0] < 2) {
        return Err(Error::param(format!(
            "clahe tiles {}x{} too fine for a {w}x{h} image (tiles must be >= 2x2 pixels)",
            params.tiles_x, params.tiles_y
        )));
    }

    let maps: Vec<Vec<[f64; BINS]>> = ys
        .windows(2)
        .map(|yr| {
            xs.windows(2)
                .map(|xr| tile_mapping(img, xr[0], xr[1], yr[0], yr[1], params.clip_limit))
                .collect()
        })
        .collect();
    let cx: Vec<f64> = xs.windows(2).map(|s| (s[0] + s[1]) as f64 / 2.0 - 0.5).collect();
    let cy: Vec<f64> = ys.windows(2).map(|s| (s[0] + s[1]) as f64 / 2.0 - 0.5).collect();

    let col: Vec<_> = (0..w).map(|x| interp_coords(x as f64, &cx)).collect();
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        let (ty0, ty1, wy) = interp_coords(y as f64, &cy);
        for (x, &(tx0, tx1, wx)) in col.iter().enumerate() {
            let b = bin_of(img.get(x, y));
            let top = maps[ty0][tx0][b] * (1.0 - wx) + maps[ty0][tx1][b] * wx;
            let bottom = maps[ty1][tx0][b] * (1.0 - wx) + maps[ty1][tx1][b] * wx;
            out.push((top * (1.0 - wy) + bottom * wy).clamp(0.0, 1.0));
        }
    }
    Ok(GrayImage::from_raw(w, h, out))
}
