//! Run configuration shared by the command line and the Python bindings.
//!
//! Config files are flat `key = value` lines; `#` starts a comment.
//! Intensity-like parameters (`d`) are given on the 0-255 scale.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::colorspace::LabWeights;
use crate::dataset_io::DatasetKind;
use crate::enhancement::{ClaheParams, EnhancerChoice, LocalNormParams, Method, SuaceParams, UnsharpParams};
use crate::error::{Error, Result};
use crate::pipeline::PipelineConfig;
use crate::reconstruction::ReconstructionParams;

pub const DEFAULT_BACKGROUND_RADIUS: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub methods: Vec<Method>,
    pub suace: SuaceParams,
    pub clahe: ClaheParams,
    pub ln: LocalNormParams,
    pub lum: UnsharpParams,
    pub lab_weights: LabWeights,
    pub background_radius: usize,
    pub recon: ReconstructionParams,
    pub kind: Option<DatasetKind>,
    pub root: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub stages: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            methods: vec![Method::Suace],
            suace: SuaceParams::default(),
            clahe: ClaheParams::default(),
            ln: LocalNormParams::default(),
            lum: UnsharpParams::default(),
            lab_weights: LabWeights::default(),
            background_radius: DEFAULT_BACKGROUND_RADIUS,
            recon: ReconstructionParams::default(),
            kind: None,
            root: None,
            out: None,
            stages: false,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::param(format!("cannot parse `{value}` for `{key}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        _ => Err(Error::param(format!("cannot parse `{value}` as a flag for `{key}`"))),
    }
}

pub fn parse_methods(value: &str) -> Result<Vec<Method>> {
    let methods: Vec<Method> = value
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(str::parse)
        .collect::<Result<_>>()?;
    if methods.is_empty() {
        return Err(Error::param("method list is empty"));
    }
    Ok(methods)
}

/// `8x8` or `8` (square grid).
pub fn parse_tiles(value: &str) -> Result<(usize, usize)> {
    let v = value.trim().to_ascii_lowercase();
    match v.split_once('x') {
        Some((a, b)) => Ok((parse("clahe_tiles", a)?, parse("clahe_tiles", b)?)),
        None => {
            let n = parse("clahe_tiles", &v)?;
            Ok((n, n))
        }
    }
}

impl RunConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('-', "_");
        let v = value.trim();
        match key.as_str() {
            "method" | "methods" => self.methods = parse_methods(v)?,
            "sigma" => self.suace.sigma = parse(&key, v)?,
            "d" => self.suace.d = parse::<f64>(&key, v)? / 255.0,
            "a1" => self.recon.a1 = parse(&key, v)?,
            "h" => self.recon.h = parse(&key, v)?,
            "v" => self.recon.v = parse(&key, v)?,
            "a2" => self.recon.a2 = parse(&key, v)?,
            "seed" => self.recon.seed = parse(&key, v)?,
            "background_radius" => self.background_radius = parse(&key, v)?,
            "lab_weights" => {
                let parts: Vec<f64> = v.split(',').map(|p| parse(&key, p)).collect::<Result<_>>()?;
                let [l, a, b] = parts[..] else {
                    return Err(Error::param("lab_weights needs three comma-separated values"));
                };
                self.lab_weights = LabWeights { l, a, b };
            }
            "clahe_tiles" => {
                let (x, y) = parse_tiles(v)?;
                self.clahe.tiles_x = x;
                self.clahe.tiles_y = y;
            }
            "clahe_clip" => self.clahe.clip_limit = parse(&key, v)?,
            "ln_sigma_mean" => self.ln.sigma_mean = parse(&key, v)?,
            "ln_sigma_std" => self.ln.sigma_std = parse(&key, v)?,
            "ln_gain" => self.ln.out_gain = parse(&key, v)?,
            "lum_radius" => self.lum.radius = parse(&key, v)?,
            "lum_amount" => self.lum.amount = parse(&key, v)?,
            "kind" => self.kind = Some(v.parse()?),
            "root" => self.root = Some(PathBuf::from(v)),
            "out" => self.out = Some(PathBuf::from(v)),
            "stages" => self.stages = parse_bool(&key, v)?,
            other => return Err(Error::param(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::param(format!("config line {}: expected key = value", lineno + 1)))?;
            self.set(k, v)
                .map_err(|e| Error::param(format!("config line {}: {e}", lineno + 1)))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.apply_text(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.suace.validate()?;
        self.clahe.validate()?;
        self.ln.validate()?;
        self.lum.validate()?;
        self.lab_weights.validate()?;
        self.recon.validate()?;
        if self.background_radius < 1 {
            return Err(Error::param("background_radius must be >= 1"));
        }
        if self.methods.is_empty() {
            return Err(Error::param("no enhancement method selected"));
        }
        Ok(())
    }

    pub fn enhancer(&self, method: Method) -> EnhancerChoice {
        match method {
            Method::Suace => EnhancerChoice::Suace(self.suace),
            Method::Clahe => EnhancerChoice::Clahe(self.clahe),
            Method::Ln => EnhancerChoice::Ln(self.ln),
            Method::Lum => EnhancerChoice::Lum(self.lum),
        }
    }

    pub fn pipeline(&self, method: Method) -> PipelineConfig {
        PipelineConfig {
            lab_weights: self.lab_weights,
            enhancer: self.enhancer(method),
            background_radius: self.background_radius,
            recon: self.recon,
        }
    }

    pub fn snapshot(&self) -> serde_json::Value {
        serde_json::to_value(self).unwrap_or(serde_json::Value::Null)
    }
}
