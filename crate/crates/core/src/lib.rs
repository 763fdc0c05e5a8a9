//! Automatic shallow depth-of-field.
//!
//! Given an image, its depth map and (optionally) a saliency map, the
//! pipeline finds the depth range occupied by the salient objects, keeps it
//! sharp, and blurs everything else with a Gaussian whose width grows with
//! depth distance from that range.
//!
//! ```text
//! image ──► saliency ──► salient mask ─┐
//! depth ───────────────────────────────┴─► depths of interest ──► defocus map ──► render
//! ```

pub mod defocus;
pub mod depth_roi;
pub mod histogram;
pub mod pipeline;
pub mod raster;
pub mod render;
pub mod saliency;

pub use defocus::{BlurHistogram, DefocusMap, DefocusParams, SigmaTable};
pub use depth_roi::{ClusterPolicy, DepthOfInterest, SalientDepths};
pub use histogram::{otsu_threshold, Histogram256};
pub use pipeline::{run, run_pipeline, PipelineConfig, PipelineError, PipelineParams, PipelineReport, SaliencySource};
pub use raster::{load_raster, save_raster, to_grayscale, DepthMap, Raster, RasterError};
pub use render::{blur_uniform, composite_defocus, gaussian_kernel, GaussianKernel};
pub use saliency::{compute_saliency, threshold_saliency, SaliencyMap, SalientMask, ThresholdPolicy};
