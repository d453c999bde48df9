//! Dataset discovery for the DRIVE and STARE layouts, image decoding into
//! the normalized domain, and PNG export of pipeline stages.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{Cursor, Read};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use flate2::read::GzDecoder;
use image::{DynamicImage, ExtendedColorType, ImageReader};
use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use crate::error::{Error, Result};
use crate::image::{BinaryMask, GrayImage, RgbImage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetKind {
    Drive,
    Stare,
    Custom,
}

impl DatasetKind {
    pub fn name(&self) -> &'static str {
        match self {
            DatasetKind::Drive => "DRIVE",
            DatasetKind::Stare => "STARE",
            DatasetKind::Custom => "custom",
        }
    }

    /// Which subset of the dataset is scanned, recorded in every report.
    pub fn subset_note(&self) -> &'static str {
        match self {
            DatasetKind::Drive => "DRIVE test split (test/images with test/1st_manual labels)",
            DatasetKind::Stare => "STARE labeled subset, first observer (.ah) labels",
            DatasetKind::Custom => "custom layout (images/ with truth/ labels matched by file stem)",
        }
    }
}

impl fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DatasetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "drive" => Ok(DatasetKind::Drive),
            "stare" => Ok(DatasetKind::Stare),
            "custom" => Ok(DatasetKind::Custom),
            other => Err(Error::param(format!("unknown dataset kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetItem {
    pub image_id: String,
    pub image_path: PathBuf,
    pub truth_path: PathBuf,
    pub dataset: DatasetKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetScan {
    pub items: Vec<DatasetItem>,
    /// One line per skipped file.
    pub warnings: Vec<String>,
}

/// Decoded image in the normalized domain; single-channel files stay gray.
#[derive(Debug, Clone, PartialEq)]
pub enum LoadedImage {
    Rgb(RgbImage),
    Gray(GrayImage),
}

impl LoadedImage {
    pub fn dims(&self) -> (usize, usize) {
        match self {
            LoadedImage::Rgb(i) => i.dims(),
            LoadedImage::Gray(i) => i.dims(),
        }
    }

    pub fn to_rgb(&self) -> RgbImage {
        match self {
            LoadedImage::Rgb(i) => i.clone(),
            LoadedImage::Gray(g) => RgbImage::from_gray(g),
        }
    }

    /// Per-pixel channel mean for color images.
    pub fn to_gray(&self) -> GrayImage {
        match self {
            LoadedImage::Gray(g) => g.clone(),
            LoadedImage::Rgb(i) => {
                let data = i.as_slice().iter().map(|p| (p[0] + p[1] + p[2]) / 3.0).collect();
                GrayImage::from_raw(i.width(), i.height(), data)
            }
        }
    }
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    let raw = fs::read(path).map_err(|e| Error::io(path, e))?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(&raw[..])
            .read_to_end(&mut out)
            .map_err(|e| Error::Decode {
                path: path.to_path_buf(),
                reason: format!("gzip: {e}"),
            })?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

fn decode_dynamic(path: &Path) -> Result<DynamicImage> {
    let bytes = read_bytes(path)?;
    let decode_err = |reason: String| Error::Decode {
        path: path.to_path_buf(),
        reason,
    };
    ImageReader::new(Cursor::new(bytes))
        .with_guessed_format()
        .map_err(|e| decode_err(e.to_string()))?
        .decode()
        .map_err(|e| decode_err(e.to_string()))
}

fn dims_of(img: &DynamicImage) -> (usize, usize) {
    (img.width() as usize, img.height() as usize)
}

/// Decodes PNG, PPM/PGM (binary or ASCII), TIFF and GIF (first frame),
/// optionally gzip-compressed. 8-bit samples are divided by 255.
pub fn load_image(path: impl AsRef<Path>) -> Result<LoadedImage> {
    let path = path.as_ref();
    let img = decode_dynamic(path)?;
    let (w, h) = dims_of(&img);
    let color = img.color();
    let wide = color.bytes_per_pixel() / color.channel_count() > 1;
    let loaded = if color.channel_count() <= 2 {
        let data = if wide {
            img.into_luma16().into_raw().into_iter().map(|v| v as f64 / 65535.0).collect()
        } else {
            img.into_luma8().into_raw().into_iter().map(|v| v as f64 / 255.0).collect()
        };
        LoadedImage::Gray(GrayImage::from_clamped(w, h, data)?)
    } else {
        let flat: Vec<f64> = if wide {
            img.into_rgb16().into_raw().into_iter().map(|v| v as f64 / 65535.0).collect()
        } else {
            img.into_rgb8().into_raw().into_iter().map(|v| v as f64 / 255.0).collect()
        };
        let data = flat
            .chunks_exact(3)
            .map(|c| [c[0].clamp(0.0, 1.0), c[1].clamp(0.0, 1.0), c[2].clamp(0.0, 1.0)])
            .collect();
        LoadedImage::Rgb(RgbImage::new(w, h, data)?)
    };
    Ok(loaded)
}

/// Loads a label image; pixels above half of the brightest value are vessel.
pub fn load_truth(path: impl AsRef<Path>) -> Result<BinaryMask> {
    let gray = match load_image(path)? {
        LoadedImage::Gray(g) => g,
        LoadedImage::Rgb(rgb) => {
            let data = rgb.as_slice().iter().map(|p| p[0].max(p[1]).max(p[2])).collect();
            GrayImage::from_raw(rgb.width(), rgb.height(), data)
        }
    };
    let (_, max) = gray.min_max();
    let cut = max / 2.0;
    let data = gray.as_slice().iter().map(|&v| max > 0.0 && v > cut).collect();
    BinaryMask::new(gray.width(), gray.height(), data)
}

fn encode_err(path: &Path, e: impl fmt::Display) -> Error {
    Error::Encode {
        path: path.to_path_buf(),
        reason: e.to_string(),
    }
}

pub fn save_gray_png(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    image::save_buffer(path, &img.to_u8(), img.width() as u32, img.height() as u32, ExtendedColorType::L8)
        .map_err(|e| encode_err(path, e))
}

pub fn save_mask_png(mask: &BinaryMask, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    image::save_buffer(path, &mask.to_u8(), mask.width() as u32, mask.height() as u32, ExtendedColorType::L8)
        .map_err(|e| encode_err(path, e))
}

pub fn save_rgb_png(img: &RgbImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    image::save_buffer(path, &img.to_u8(), img.width() as u32, img.height() as u32, ExtendedColorType::Rgb8)
        .map_err(|e| encode_err(path, e))
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn sorted_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    files.sort();
    Ok(files)
}

fn scan_drive(root: &Path, warnings: &mut Vec<String>) -> Result<Vec<DatasetItem>> {
    let split = if root.join("test").is_dir() { root.join("test") } else { root.to_path_buf() };
    let images = split.join("images");
    let labels = split.join("1st_manual");
    if !images.is_dir() {
        return Err(Error::Dataset(format!("no DRIVE images directory at {}", images.display())));
    }
    let mut items = Vec::new();
    for path in sorted_files(&images)? {
        let name = file_name(&path);
        let Some(id) = name.strip_suffix("_test.tif").or_else(|| name.strip_suffix("_test.tiff")) else {
            continue;
        };
        let truth = labels.join(format!("{id}_manual1.gif"));
        if truth.is_file() {
            items.push(DatasetItem {
                image_id: id.to_string(),
                image_path: path,
                truth_path: truth,
                dataset: DatasetKind::Drive,
            });
        } else {
            warnings.push(format!("{}: missing label {}", path.display(), truth.display()));
        }
    }
    Ok(items)
}

/// `im0001.ppm` -> ("im0001", None), `im0001.ah.ppm.gz` -> ("im0001", Some("ah")).
fn stare_parts(name: &str) -> Option<(String, Option<String>)> {
    let name = name.strip_suffix(".gz").unwrap_or(name);
    let stem = name.strip_suffix(".ppm").or_else(|| name.strip_suffix(".png"))?;
    let (id, observer) = match stem.split_once('.') {
        Some((id, obs)) => (id, Some(obs.to_string())),
        None => (stem, None),
    };
    let digits = id.strip_prefix("im")?;
    (!digits.is_empty() && digits.chars().all(|c| c.is_ascii_digit())).then(|| (id.to_string(), observer))
}

fn scan_stare(root: &Path, warnings: &mut Vec<String>) -> Result<Vec<DatasetItem>> {
    let mut images: BTreeMap<String, PathBuf> = BTreeMap::new();
    let mut labels: BTreeMap<String, PathBuf> = BTreeMap::new();
    let mut entries: Vec<PathBuf> = WalkDir::new(root)
        .into_iter()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_type().is_file())
        .map(|e| e.into_path())
        .collect();
    entries.sort();
    for path in entries {
        match stare_parts(&file_name(&path)) {
            Some((id, None)) => {
                images.entry(id).or_insert(path);
            }
            Some((id, Some(obs))) if obs == "ah" => {
                labels.entry(id).or_insert(path);
            }
            _ => {}
        }
    }
    let mut items = Vec::new();
    for (id, image_path) in images {
        match labels.remove(&id) {
            Some(truth_path) => items.push(DatasetItem {
                image_id: id,
                image_path,
                truth_path,
                dataset: DatasetKind::Stare,
            }),
            None => warnings.push(format!("{}: no .ah label", image_path.display())),
        }
    }
    for (id, path) in labels {
        warnings.push(format!("{}: label without image {id}", path.display()));
    }
    Ok(items)
}

fn stem_of(p: &Path) -> String {
    file_name(p).split('.').next().unwrap_or_default().to_string()
}

fn scan_custom(root: &Path, warnings: &mut Vec<String>) -> Result<Vec<DatasetItem>> {
    let images = root.join("images");
    let truth_dir = root.join("truth");
    if !images.is_dir() || !truth_dir.is_dir() {
        return Err(Error::Dataset(format!(
            "custom dataset needs images/ and truth/ under {}",
            root.display()
        )));
    }
    let truths: BTreeMap<String, PathBuf> = sorted_files(&truth_dir)?
        .into_iter()
        .map(|p| (stem_of(&p), p))
        .collect();
    let mut items = Vec::new();
    for path in sorted_files(&images)? {
        let id = stem_of(&path);
        match truths.get(&id) {
            Some(t) => items.push(DatasetItem {
                image_id: id,
                image_path: path,
                truth_path: t.clone(),
                dataset: DatasetKind::Custom,
            }),
            None => warnings.push(format!("{}: missing label in {}", path.display(), truth_dir.display())),
        }
    }
    Ok(items)
}

/// Pairs images with ground truth, sorted by `image_id`.
pub fn scan_dataset(root: impl AsRef<Path>, kind: DatasetKind) -> Result<DatasetScan> {
    let root = root.as_ref();
    if !root.is_dir() {
        return Err(Error::Dataset(format!("dataset root {} is not a directory", root.display())));
    }
    let mut warnings = Vec::new();
    let mut items = match kind {
        DatasetKind::Drive => scan_drive(root, &mut warnings)?,
        DatasetKind::Stare => scan_stare(root, &mut warnings)?,
        DatasetKind::Custom => scan_custom(root, &mut warnings)?,
    };
    if items.is_empty() {
        return Err(Error::Dataset(format!("no {} items found under {}", kind.name(), root.display())));
    }
    items.sort_by(|a, b| a.image_id.cmp(&b.image_id));
    Ok(DatasetScan { items, warnings })
}

/// Optional per-stage rasters of one pipeline run.
#[derive(Debug, Clone, Default)]
pub struct PipelineArtifacts {
    pub image_id: String,
    pub grayscale: Option<GrayImage>,
    pub enhanced: Option<GrayImage>,
    pub subtracted: Option<GrayImage>,
    pub raw_mask: Option<BinaryMask>,
    pub mask: Option<BinaryMask>,
    pub overlay: Option<RgbImage>,
}

impl PipelineArtifacts {
    fn dims(&self) -> Vec<(usize, usize)> {
        let mut d = Vec::new();
        d.extend(self.grayscale.as_ref().map(GrayImage::dims));
        d.extend(self.enhanced.as_ref().map(GrayImage::dims));
        d.extend(self.subtracted.as_ref().map(GrayImage::dims));
        d.extend(self.raw_mask.as_ref().map(BinaryMask::dims));
        d.extend(self.mask.as_ref().map(BinaryMask::dims));
        d.extend(self.overlay.as_ref().map(RgbImage::dims));
        d
    }
}

/// Prediction-versus-truth rendering on top of `base`: agreement white,
/// truth-only green, prediction-only red, everything else the base pixel.
pub fn make_overlay(base: &RgbImage, pred: &BinaryMask, truth: Option<&BinaryMask>) -> Result<RgbImage> {
    if base.dims() != pred.dims() {
        return Err(Error::DimensionMismatch { left: base.dims(), right: pred.dims() });
    }
    if let Some(t) = truth {
        if t.dims() != pred.dims() {
            return Err(Error::DimensionMismatch { left: t.dims(), right: pred.dims() });
        }
    }
    let data = base
        .as_slice()
        .iter()
        .enumerate()
        .map(|(i, &px)| {
            let p = pred.as_slice()[i];
            let t = truth.map(|t| t.as_slice()[i]).unwrap_or(false);
            match (p, t) {
                (true, true) => [1.0, 1.0, 1.0],
                (true, false) if truth.is_some() => [1.0, 0.0, 0.0],
                (true, false) => [1.0, 1.0, 1.0],
                (false, true) => [0.0, 1.0, 0.0],
                (false, false) => px,
            }
        })
        .collect();
    RgbImage::new(base.width(), base.height(), data)
}

/// Writes each present stage as `<image_id>_<stage>.png`.
pub fn save_artifacts(a: &PipelineArtifacts, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    let dims = a.dims();
    if let Some(first) = dims.first() {
        if let Some(bad) = dims.iter().find(|d| *d != first) {
            return Err(Error::DimensionMismatch { left: *first, right: *bad });
        }
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let prefix = if a.image_id.is_empty() { "image".to_string() } else { a.image_id.clone() };
    let path = |stage: &str| dir.join(format!("{prefix}_{stage}.png"));
    let mut written = Vec::new();
    if let Some(img) = &a.grayscale {
        let p = path("grayscale");
        save_gray_png(img, &p)?;
        written.push(p);
    }
    if let Some(img) = &a.enhanced {
        let p = path("enhanced");
        save_gray_png(img, &p)?;
        written.push(p);
    }
    if let Some(img) = &a.subtracted {
        let p = path("subtracted");
        save_gray_png(img, &p)?;
        written.push(p);
    }
    if let Some(m) = &a.raw_mask {
        let p = path("raw_mask");
        save_mask_png(m, &p)?;
        written.push(p);
    }
    if let Some(m) = &a.mask {
        let p = path("mask");
        save_mask_png(m, &p)?;
        written.push(p);
    }
    if let Some(img) = &a.overlay {
        let p = path("overlay");
        save_rgb_png(img, &p)?;
        written.push(p);
    }
    Ok(written)
}
