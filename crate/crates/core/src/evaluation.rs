//! Pixel-level confusion counts, TPR/FPR/ACC and per-dataset averages.
//!
//! Counts cover the whole raster. There is no field-of-view mask, so the
//! dark surround of a fundus photograph contributes true negatives.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::BinaryMask;

pub const FOV_NOTE: &str =
    "metrics count every pixel of the image (no field-of-view mask); ACC therefore includes the dark surround";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }
}

pub fn confusion(pred: &BinaryMask, truth: &BinaryMask) -> Result<ConfusionCounts> {
    if pred.dims() != truth.dims() {
        return Err(Error::DimensionMismatch {
            left: pred.dims(),
            right: truth.dims(),
        });
    }
    let mut c = ConfusionCounts::default();
    for (&p, &t) in pred.as_slice().iter().zip(truth.as_slice()) {
        match (p, t) {
            (true, true) => c.tp += 1,
            (false, false) => c.tn += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    Ok(c)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub image_id: String,
    pub tpr: f64,
    pub fpr: f64,
    pub acc: f64,
    pub counts: ConfusionCounts,
    /// Set when the truth has no vessel pixels; `tpr` is then reported as 0.
    pub tpr_degenerate: bool,
    /// Set when the truth has no background pixels; `fpr` is then reported as 0.
    pub fpr_degenerate: bool,
}

pub fn metrics(counts: ConfusionCounts) -> Result<MetricsRecord> {
    metrics_for("", counts)
}

pub fn metrics_for(image_id: impl Into<String>, c: ConfusionCounts) -> Result<MetricsRecord> {
    let total = c.total();
    if total == 0 {
        return Err(Error::Empty("confusion counts cover zero pixels".into()));
    }
    let positives = c.tp + c.fn_;
    let negatives = c.fp + c.tn;
    Ok(MetricsRecord {
        image_id: image_id.into(),
        tpr: if positives > 0 { c.tp as f64 / positives as f64 } else { 0.0 },
        fpr: if negatives > 0 { c.fp as f64 / negatives as f64 } else { 0.0 },
        acc: (c.tp + c.tn) as f64 / total as f64,
        counts: c,
        tpr_degenerate: positives == 0,
        fpr_degenerate: negatives == 0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetReport {
    pub dataset: String,
    pub method: String,
    pub records: Vec<MetricsRecord>,
    pub mean_tpr: f64,
    pub mean_fpr: f64,
    pub mean_acc: f64,
    /// Full run configuration the report was produced with.
    pub params: serde_json::Value,
    pub notes: Vec<String>,
}

/// Unweighted per-image means.
pub fn aggregate(
    records: Vec<MetricsRecord>,
    dataset: impl Into<String>,
    method: impl Into<String>,
    params: serde_json::Value,
) -> Result<DatasetReport> {
    if records.is_empty() {
        return Err(Error::Empty("cannot aggregate an empty record list".into()));
    }
    let n = records.len() as f64;
    let mean = |f: fn(&MetricsRecord) -> f64| records.iter().map(f).sum::<f64>() / n;
    Ok(DatasetReport {
        dataset: dataset.into(),
        method: method.into(),
        mean_tpr: mean(|r| r.tpr),
        mean_fpr: mean(|r| r.fpr),
        mean_acc: mean(|r| r.acc),
        records,
        params,
        notes: vec![FOV_NOTE.to_string()],
    })
}

#[derive(Serialize)]
struct CsvRow<'a> {
    image_id: &'a str,
    tp: String,
    tn: String,
    fp: String,
    #[serde(rename = "fn")]
    fn_: String,
    tpr: String,
    fpr: String,
    acc: String,
}

impl DatasetReport {
    /// One row per image followed by a `mean` row.
    pub fn to_csv(&self) -> Result<String> {
        let mut wtr = csv::Writer::from_writer(Vec::new());
        for r in &self.records {
            wtr.serialize(CsvRow {
                image_id: &r.image_id,
                tp: r.counts.tp.to_string(),
                tn: r.counts.tn.to_string(),
                fp: r.counts.fp.to_string(),
                fn_: r.counts.fn_.to_string(),
                tpr: format!("{:.6}", r.tpr),
                fpr: format!("{:.6}", r.fpr),
                acc: format!("{:.6}", r.acc),
            })
            .map_err(|e| Error::Serialize(e.to_string()))?;
        }
        wtr.serialize(CsvRow {
            image_id: "mean",
            tp: String::new(),
            tn: String::new(),
            fp: String::new(),
            fn_: String::new(),
            tpr: format!("{:.6}", self.mean_tpr),
            fpr: format!("{:.6}", self.mean_fpr),
            acc: format!("{:.6}", self.mean_acc),
        })
        .map_err(|e| Error::Serialize(e.to_string()))?;
        let bytes = wtr.into_inner().map_err(|e| Error::Serialize(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Serialize(e.to_string()))
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Serialize(e.to_string()))
    }

    /// Writes `<stem>.csv` and `<stem>.json` into `dir`.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<(PathBuf, PathBuf)> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let csv_path = dir.join(format!("{stem}.csv"));
        let json_path = dir.join(format!("{stem}.json"));
        fs::write(&csv_path, self.to_csv()?).map_err(|e| Error::io(&csv_path, e))?;
        fs::write(&json_path, self.to_json()?).map_err(|e| Error::io(&json_path, e))?;
        Ok((csv_path, json_path))
    }
}

/// Side-by-side comparison in the layout of a TPR / FPR / ACC table, one row
/// per method and one column group per dataset.
pub fn comparison_table(reports: &[DatasetReport]) -> String {
    let mut datasets: Vec<&str> = Vec::new();
    let mut methods: Vec<&str> = Vec::new();
    for r in reports {
        if !datasets.contains(&r.dataset.as_str()) {
            datasets.push(&r.dataset);
        }
        if !methods.contains(&r.method.as_str()) {
            methods.push(&r.method);
        }
    }
    let mut out = String::new();
    let _ = write!(out, "{:<10}", "Method");
    for d in &datasets {
        let _ = write!(out, " | {:^26}", d);
    }
    out.push('\n');
    let _ = write!(out, "{:<10}", "");
    for _ in &datasets {
        let _ = write!(out, " | {:>8} {:>8} {:>8}", "TPR", "FPR", "ACC");
    }
    out.push('\n');
    out.push_str(&"-".repeat(10 + datasets.len() * 29));
    out.push('\n');
    for m in &methods {
        let _ = write!(out, "{:<10}", m);
        for d in &datasets {
            match reports.iter().find(|r| r.method == *m && r.dataset == *d) {
                Some(r) => {
                    let _ = write!(out, " | {:>8.4} {:>8.4} {:>8.4}", r.mean_tpr, r.mean_fpr, r.mean_acc);
                }
                None => {
                    let _ = write!(out, " | {:>8} {:>8} {:>8}", "-", "-", "-");
                }
            }
        }
        out.push('\n');
    }
    let _ = writeln!(out, "note: {FOV_NOTE}");
    out
}
