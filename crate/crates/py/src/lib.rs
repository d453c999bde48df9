//! Python bindings: image containers, the enhancement operators, the
//! segmentation pipeline and evaluation.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use vesselseg::dataset_io::{self, LoadedImage};
use vesselseg::enhancement::{self, ClaheParams, LocalNormParams, Method, SuaceParams, UnsharpParams};
use vesselseg::evaluation::{self, MetricsRecord};
use vesselseg::pipeline::{self, PipelineConfig, SegmentationOutput};
use vesselseg::reconstruction::{self, ReconstructionParams};
use vesselseg::{colorspace, image, segmentation, DatasetKind, Error, LabWeights, RunConfig};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Parameter(_) | Error::InvalidImage(_) | Error::DimensionMismatch { .. } | Error::Degenerate { .. } | Error::Empty(_) => {
            PyValueError::new_err(e.to_string())
        }
        Error::Io { .. } | Error::Decode { .. } | Error::Encode { .. } | Error::Dataset(_) => PyIOError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn method(name: &str) -> PyResult<Method> {
    name.parse().map_err(py_err)
}

/// Grayscale image with samples in `[0, 1]`, stored row-major.
#[pyclass(name = "GrayImage", module = "vesselseg", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyGrayImage {
    inner: image::GrayImage,
}

#[pymethods]
impl PyGrayImage {
    #[new]
    fn new(width: usize, height: usize, data: Vec<f64>) -> PyResult<Self> {
        image::GrayImage::new(width, height, data).map(|inner| Self { inner }).map_err(py_err)
    }

    #[staticmethod]
    fn filled(width: usize, height: usize, value: f64) -> PyResult<Self> {
        image::GrayImage::filled(width, height, value).map(|inner| Self { inner }).map_err(py_err)
    }

    #[getter]
    fn width(&self) -> usize {
        self.inner.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.height()
    }

    fn get(&self, x: usize, y: usize) -> PyResult<f64> {
        if x >= self.inner.width() || y >= self.inner.height() {
            return Err(PyValueError::new_err("pixel out of bounds"));
        }
        Ok(self.inner.get(x, y))
    }

    fn to_list(&self) -> Vec<f64> {
        self.inner.as_slice().to_vec()
    }

    fn mean(&self) -> f64 {
        self.inner.mean()
    }

    fn min_max(&self) -> (f64, f64) {
        self.inner.min_max()
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        dataset_io::save_gray_png(&self.inner, path).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!("GrayImage({}x{})", self.inner.width(), self.inner.height())
    }
}

/// RGB image with channels in `[0, 1]`.
#[pyclass(name = "RgbImage", module = "vesselseg", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyRgbImage {
    inner: image::RgbImage,
}

#[pymethods]
impl PyRgbImage {
    #[new]
    fn new(width: usize, height: usize, data: Vec<(f64, f64, f64)>) -> PyResult<Self> {
        let data = data.into_iter().map(|(r, g, b)| [r, g, b]).collect();
        image::RgbImage::new(width, height, data).map(|inner| Self { inner }).map_err(py_err)
    }

    #[getter]
    fn width(&self) -> usize {
        self.inner.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.height()
    }

    fn to_list(&self) -> Vec<(f64, f64, f64)> {
        self.inner.as_slice().iter().map(|p| (p[0], p[1], p[2])).collect()
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        dataset_io::save_rgb_png(&self.inner, path).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!("RgbImage({}x{})", self.inner.width(), self.inner.height())
    }
}

#[pyclass(name = "BinaryMask", module = "vesselseg", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyBinaryMask {
    inner: image::BinaryMask,
}

#[pymethods]
impl PyBinaryMask {
    #[new]
    fn new(width: usize, height: usize, data: Vec<bool>) -> PyResult<Self> {
        image::BinaryMask::new(width, height, data).map(|inner| Self { inner }).map_err(py_err)
    }

    #[getter]
    fn width(&self) -> usize {
        self.inner.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.height()
    }

    fn count(&self) -> usize {
        self.inner.count()
    }

    fn get(&self, x: usize, y: usize) -> PyResult<bool> {
        if x >= self.inner.width() || y >= self.inner.height() {
            return Err(PyValueError::new_err("pixel out of bounds"));
        }
        Ok(self.inner.get(x, y))
    }

    fn to_list(&self) -> Vec<bool> {
        self.inner.as_slice().to_vec()
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        dataset_io::save_mask_png(&self.inner, path).map_err(py_err)
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!("BinaryMask({}x{}, {} set)", self.inner.width(), self.inner.height(), self.inner.count())
    }
}

#[pyclass(name = "Metrics", module = "vesselseg", frozen, get_all)]
struct PyMetrics {
    image_id: String,
    tpr: f64,
    fpr: f64,
    acc: f64,
    tp: u64,
    tn: u64,
    fp: u64,
    fn_: u64,
    tpr_degenerate: bool,
    fpr_degenerate: bool,
}

impl From<MetricsRecord> for PyMetrics {
    fn from(r: MetricsRecord) -> Self {
        Self {
            image_id: r.image_id,
            tpr: r.tpr,
            fpr: r.fpr,
            acc: r.acc,
            tp: r.counts.tp,
            tn: r.counts.tn,
            fp: r.counts.fp,
            fn_: r.counts.fn_,
            tpr_degenerate: r.tpr_degenerate,
            fpr_degenerate: r.fpr_degenerate,
        }
    }
}

#[pymethods]
impl PyMetrics {
    fn __repr__(&self) -> String {
        format!("Metrics(tpr={:.4}, fpr={:.4}, acc={:.4})", self.tpr, self.fpr, self.acc)
    }
}

/// Every intermediate raster of one pipeline run.
#[pyclass(name = "Segmentation", module = "vesselseg", frozen, skip_from_py_object)]
struct PySegmentation {
    inner: SegmentationOutput,
}

#[pymethods]
impl PySegmentation {
    #[getter]
    fn grayscale(&self) -> PyGrayImage {
        PyGrayImage { inner: self.inner.grayscale.clone() }
    }

    #[getter]
    fn enhanced(&self) -> PyGrayImage {
        PyGrayImage { inner: self.inner.enhanced.clone() }
    }

    #[getter]
    fn subtracted(&self) -> PyGrayImage {
        PyGrayImage { inner: self.inner.subtracted.clone() }
    }

    #[getter]
    fn threshold(&self) -> f64 {
        self.inner.threshold
    }

    #[getter]
    fn raw_mask(&self) -> PyBinaryMask {
        PyBinaryMask { inner: self.inner.raw_mask.clone() }
    }

    #[getter]
    fn mask(&self) -> PyBinaryMask {
        PyBinaryMask { inner: self.inner.mask.clone() }
    }
}

fn as_loaded(img: &Bound<'_, PyAny>) -> PyResult<LoadedImage> {
    if let Ok(g) = img.extract::<PyRef<'_, PyGrayImage>>() {
        return Ok(LoadedImage::Gray(g.inner.clone()));
    }
    if let Ok(c) = img.extract::<PyRef<'_, PyRgbImage>>() {
        return Ok(LoadedImage::Rgb(c.inner.clone()));
    }
    Err(PyValueError::new_err("expected a GrayImage or RgbImage"))
}

/// Decodes a file; color files yield `RgbImage`, single-channel files `GrayImage`.
#[pyfunction]
fn load_image(py: Python<'_>, path: PathBuf) -> PyResult<Py<PyAny>> {
    match dataset_io::load_image(path).map_err(py_err)? {
        LoadedImage::Gray(g) => Ok(Py::new(py, PyGrayImage { inner: g })?.into_any()),
        LoadedImage::Rgb(c) => Ok(Py::new(py, PyRgbImage { inner: c })?.into_any()),
    }
}

#[pyfunction]
fn load_truth(path: PathBuf) -> PyResult<PyBinaryMask> {
    dataset_io::load_truth(path).map(|inner| PyBinaryMask { inner }).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (img, weights = (1.0, 0.25, 0.25)))]
fn rgb_to_gray(img: &PyRgbImage, weights: (f64, f64, f64)) -> PyResult<PyGrayImage> {
    let w = LabWeights::new(weights.0, weights.1, weights.2).map_err(py_err)?;
    colorspace::rgb_to_gray(&img.inner, &w).map(|inner| PyGrayImage { inner }).map_err(py_err)
}

#[pyfunction]
fn gaussian_blur(img: &PyGrayImage, sigma: f64) -> PyResult<PyGrayImage> {
    image::gaussian_blur(&img.inner, sigma).map(|inner| PyGrayImage { inner }).map_err(py_err)
}

/// `d` is on the 0-255 scale.
#[pyfunction]
#[pyo3(signature = (img, sigma = 7.0, d = 16.0))]
fn suace(img: &PyGrayImage, sigma: f64, d: f64) -> PyResult<PyGrayImage> {
    let p = SuaceParams::from_8bit(sigma, d).map_err(py_err)?;
    enhancement::suace(&img.inner, &p).map(|inner| PyGrayImage { inner }).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (img, tiles_x = 8, tiles_y = 8, clip_limit = 0.01))]
fn clahe(img: &PyGrayImage, tiles_x: usize, tiles_y: usize, clip_limit: f64) -> PyResult<PyGrayImage> {
    let p = ClaheParams { tiles_x, tiles_y, clip_limit };
    enhancement::clahe(&img.inner, &p).map(|inner| PyGrayImage { inner }).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (img, sigma_mean = 15.0, sigma_std = 15.0, out_gain = 0.2))]
fn local_normalize(img: &PyGrayImage, sigma_mean: f64, sigma_std: f64, out_gain: f64) -> PyResult<PyGrayImage> {
    let p = LocalNormParams { sigma_mean, sigma_std, out_gain };
    enhancement::local_normalize(&img.inner, &p).map(|inner| PyGrayImage { inner }).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (img, radius = 9, amount = 1.5))]
fn unsharp_mask(img: &PyGrayImage, radius: usize, amount: f64) -> PyResult<PyGrayImage> {
    let p = UnsharpParams { radius, amount };
    enhancement::unsharp_mask(&img.inner, &p).map(|inner| PyGrayImage { inner }).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (img, radius = 4))]
fn subtract_background(img: &PyGrayImage, radius: usize) -> PyResult<PyGrayImage> {
    segmentation::subtract_background(&img.inner, radius).map(|inner| PyGrayImage { inner }).map_err(py_err)
}

#[pyfunction]
fn isodata_threshold(img: &PyGrayImage) -> PyResult<f64> {
    segmentation::isodata_threshold(&img.inner).map(|r| r.threshold).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (img, threshold, vessels_dark = true))]
fn binarize(img: &PyGrayImage, threshold: f64, vessels_dark: bool) -> PyBinaryMask {
    PyBinaryMask { inner: segmentation::binarize(&img.inner, threshold, vessels_dark) }
}

fn recon_params(a1: usize, h: usize, v: u32, a2: usize, seed: u64) -> ReconstructionParams {
    ReconstructionParams { a1, h, v, a2, seed }
}

#[pyfunction]
#[pyo3(signature = (mask, a1 = 10, h = 5, v = 3, a2 = 50, seed = reconstruction::DEFAULT_SEED))]
fn reconstruct(mask: &PyBinaryMask, a1: usize, h: usize, v: u32, a2: usize, seed: u64) -> PyResult<PyBinaryMask> {
    reconstruction::reconstruct(&mask.inner, &recon_params(a1, h, v, a2, seed))
        .map(|inner| PyBinaryMask { inner })
        .map_err(py_err)
}

/// Full pipeline on a `GrayImage` or `RgbImage` with default parameters
/// for the chosen enhancement method.
#[pyfunction]
#[pyo3(signature = (img, method = "suace", seed = reconstruction::DEFAULT_SEED))]
fn segment(py: Python<'_>, img: &Bound<'_, PyAny>, method: &str, seed: u64) -> PyResult<PySegmentation> {
    let loaded = as_loaded(img)?;
    let mut cfg = PipelineConfig { enhancer: self::method(method)?.into(), ..Default::default() };
    cfg.recon.seed = seed;
    let out = py.detach(|| pipeline::segment(&loaded, &cfg)).map_err(py_err)?;
    Ok(PySegmentation { inner: out })
}

#[pyfunction]
#[pyo3(signature = (pred, truth, image_id = ""))]
fn metrics(pred: &PyBinaryMask, truth: &PyBinaryMask, image_id: &str) -> PyResult<PyMetrics> {
    let c = evaluation::confusion(&pred.inner, &truth.inner).map_err(py_err)?;
    evaluation::metrics_for(image_id, c).map(PyMetrics::from).map_err(py_err)
}

/// Evaluates each method over a dataset; returns one JSON report per method.
#[pyfunction]
#[pyo3(signature = (kind, root, methods = vec!["suace".to_string()], seed = reconstruction::DEFAULT_SEED))]
fn evaluate(py: Python<'_>, kind: &str, root: PathBuf, methods: Vec<String>, seed: u64) -> PyResult<Vec<String>> {
    let kind: DatasetKind = kind.parse().map_err(py_err)?;
    let mut cfg = RunConfig::default();
    cfg.methods = methods.iter().map(|m| method(m)).collect::<PyResult<_>>()?;
    cfg.recon.seed = seed;
    py.detach(|| {
        let scan = dataset_io::scan_dataset(&root, kind)?;
        cfg.methods
            .iter()
            .map(|&m| pipeline::evaluate_dataset(&scan.items, m, &cfg, None)?.to_json())
            .collect::<vesselseg::Result<Vec<_>>>()
    })
    .map_err(py_err)
}

#[pymodule]
#[pyo3(name = "vesselseg")]
fn vesselseg_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGrayImage>()?;
    m.add_class::<PyRgbImage>()?;
    m.add_class::<PyBinaryMask>()?;
    m.add_class::<PyMetrics>()?;
    m.add_class::<PySegmentation>()?;
    m.add_function(wrap_pyfunction!(load_image, m)?)?;
    m.add_function(wrap_pyfunction!(load_truth, m)?)?;
    m.add_function(wrap_pyfunction!(rgb_to_gray, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_blur, m)?)?;
    m.add_function(wrap_pyfunction!(suace, m)?)?;
    m.add_function(wrap_pyfunction!(clahe, m)?)?;
    m.add_function(wrap_pyfunction!(local_normalize, m)?)?;
    m.add_function(wrap_pyfunction!(unsharp_mask, m)?)?;
    m.add_function(wrap_pyfunction!(subtract_background, m)?)?;
    m.add_function(wrap_pyfunction!(isodata_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(binarize, m)?)?;
    m.add_function(wrap_pyfunction!(reconstruct, m)?)?;
    m.add_function(wrap_pyfunction!(segment, m)?)?;
    m.add_function(wrap_pyfunction!(metrics, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    Ok(())
}
