//! End-to-end segmentation: grayscale conversion, enhancement, background
//! subtraction, isodata thresholding and morphological reconstruction.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::colorspace::{rgb_to_gray, LabWeights};
use crate::config::{RunConfig, DEFAULT_BACKGROUND_RADIUS};
use crate::dataset_io::{load_image, load_truth, make_overlay, save_artifacts, DatasetItem, LoadedImage, PipelineArtifacts};
use crate::enhancement::{EnhancerChoice, Method};
use crate::error::{Error, Result};
use crate::evaluation::{aggregate, confusion, metrics_for, DatasetReport, MetricsRecord};
use crate::image::{BinaryMask, GrayImage};
use crate::reconstruction::{reconstruct, ReconstructionParams};
use crate::segmentation::{binarize, isodata_threshold, subtract_background};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub lab_weights: LabWeights,
    pub enhancer: EnhancerChoice,
    pub background_radius: usize,
    pub recon: ReconstructionParams,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            lab_weights: LabWeights::default(),
            enhancer: EnhancerChoice::from(Method::Suace),
            background_radius: DEFAULT_BACKGROUND_RADIUS,
            recon: ReconstructionParams::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.lab_weights.validate()?;
        self.enhancer.validate()?;
        self.recon.validate()?;
        if self.background_radius < 1 {
            return Err(Error::param("background_radius must be >= 1"));
        }
        Ok(())
    }
}

/// Every intermediate raster of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentationOutput {
    pub grayscale: GrayImage,
    pub enhanced: GrayImage,
    pub subtracted: GrayImage,
    pub threshold: f64,
    pub raw_mask: BinaryMask,
    pub mask: BinaryMask,
}

impl SegmentationOutput {
    pub fn artifacts(&self, image_id: &str, source: &LoadedImage, truth: Option<&BinaryMask>) -> Result<PipelineArtifacts> {
        Ok(PipelineArtifacts {
            image_id: image_id.to_string(),
            grayscale: Some(self.grayscale.clone()),
            enhanced: Some(self.enhanced.clone()),
            subtracted: Some(self.subtracted.clone()),
            raw_mask: Some(self.raw_mask.clone()),
            mask: Some(self.mask.clone()),
            overlay: Some(make_overlay(&source.to_rgb(), &self.mask, truth)?),
        })
    }
}

/// Grayscale input skips the color conversion.
pub fn grayscale(img: &LoadedImage, weights: &LabWeights) -> Result<GrayImage> {
    match img {
        LoadedImage::Gray(g) => Ok(g.clone()),
        LoadedImage::Rgb(rgb) => rgb_to_gray(rgb, weights),
    }
}

pub fn segment_gray(gray: GrayImage, cfg: &PipelineConfig) -> Result<SegmentationOutput> {
    cfg.validate()?;
    let enhanced = cfg.enhancer.apply(&gray)?;
    let subtracted = subtract_background(&enhanced, cfg.background_radius)?;
    let threshold = isodata_threshold(&subtracted)?.threshold;
    let raw_mask = binarize(&subtracted, threshold, true);
    let mask = reconstruct(&raw_mask, &cfg.recon)?;
    Ok(SegmentationOutput { grayscale: gray, enhanced, subtracted, threshold, raw_mask, mask })
}

pub fn segment(img: &LoadedImage, cfg: &PipelineConfig) -> Result<SegmentationOutput> {
    cfg.validate()?;
    segment_gray(grayscale(img, &cfg.lab_weights)?, cfg)
}

/// Deterministic per-image seed: FNV-1a of the id mixed with the base seed.
pub fn image_seed(base: u64, image_id: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in image_id.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut z = (base ^ h).wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn evaluate_item(item: &DatasetItem, method: Method, run: &RunConfig, stages_dir: Option<&Path>) -> Result<MetricsRecord> {
    let img = load_image(&item.image_path)?;
    let truth = load_truth(&item.truth_path)?;
    if truth.dims() != img.dims() {
        return Err(Error::DimensionMismatch { left: img.dims(), right: truth.dims() });
    }
    let mut cfg = run.pipeline(method);
    cfg.recon.seed = image_seed(run.recon.seed, &item.image_id);
    let out = segment(&img, &cfg)?;
    if let Some(dir) = stages_dir {
        save_artifacts(&out.artifacts(&item.image_id, &img, Some(&truth))?, dir)?;
    }
    metrics_for(item.image_id.clone(), confusion(&out.mask, &truth)?)
}

/// Segments and scores every item in parallel; records keep the input order.
pub fn evaluate_dataset(items: &[DatasetItem], method: Method, run: &RunConfig, stages_dir: Option<&Path>) -> Result<DatasetReport> {
    run.validate()?;
    if items.is_empty() {
        return Err(Error::Empty("no dataset items to evaluate".into()));
    }
    let records: Vec<MetricsRecord> = items
        .par_iter()
        .map(|item| evaluate_item(item, method, run, stages_dir))
        .collect::<Result<_>>()?;
    let dataset = items[0].dataset;
    let mut report = aggregate(records, dataset.name(), method.as_str(), run.snapshot())?;
    report.notes.push(dataset.subset_note().to_string());
    Ok(report)
}
