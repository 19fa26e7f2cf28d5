//! Near-infrared image colorization and low-light denoising.
//!
//! A visible color image and a pixel-aligned NIR gray image are converted
//! into a decorrelated luminance/chrominance space. The NIR image is mapped
//! onto the visible luminance by a per-pixel regularized linear model, its
//! detail layer is transferred, and the visible chrominance is rescaled to
//! match the new contrast.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod chroma;
pub mod color;
pub mod detail;
pub mod error;
mod fft;
pub mod image;
pub mod mapping;
pub mod metrics;
pub mod nlm;
pub mod patch;
pub mod pipeline;

pub use baselines::{naive_colorize, BaselineParams, Wavelet};
pub use chroma::ChromaParams;
pub use color::{backward_opponent, forward_opponent, luminance_of, OpponentImage};
pub use detail::{DetailSolveParams, DetailTransfer};
pub use error::{Error, Result};
pub use image::{load_image, save_image, BitDepth, Image, ImagePlane, RgbImage};
pub use mapping::{MappingField, MappingParams};
pub use metrics::QualityReport;
pub use nlm::NlmParams;
pub use pipeline::{Method, PipelineConfig, PipelineOutput};
