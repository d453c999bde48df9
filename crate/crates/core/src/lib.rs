//! Retinal vessel segmentation built around spatially adaptive contrast
//! enhancement (SUACE), with CLAHE, local normalization and unsharp-mask
//! baselines, isodata thresholding, Hough-guided gap bridging and
//! pixel-level evaluation.

pub mod colorspace;
pub mod config;
pub mod dataset_io;
pub mod enhancement;
pub mod error;
pub mod evaluation;
pub mod image;
pub mod pipeline;
pub mod reconstruction;
pub mod segmentation;
pub mod synthetic;

pub use colorspace::{pca_grayscale, rgb_to_gray, rgb_to_lab, LabImage, LabWeights};
pub use config::RunConfig;
pub use dataset_io::{load_image, load_truth, scan_dataset, DatasetItem, DatasetKind, LoadedImage};
pub use enhancement::{clahe, local_normalize, suace, unsharp_mask, ClaheParams, EnhancerChoice, LocalNormParams, Method, SuaceParams, UnsharpParams};
pub use error::{Error, Result};
pub use evaluation::{aggregate, confusion, metrics, ConfusionCounts, DatasetReport, MetricsRecord};
pub use image::{average_blur, gaussian_blur, BinaryMask, GaussianKernel, GrayImage, RgbImage};
pub use pipeline::{evaluate_dataset, segment, PipelineConfig, SegmentationOutput};
pub use reconstruction::{reconstruct, ReconstructionParams};
pub use segmentation::{binarize, isodata_threshold, subtract_background, IsodataResult};
