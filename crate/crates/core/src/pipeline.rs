//! End-to-end pipeline: saliency, salient-depth clustering, defocus map, render.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::defocus::{
    build_blur_histogram, build_defocus_map, build_sigma_table, compute_alpha, validate_beta_gamma, DefocusError,
    DefocusMap, DefocusParams, SigmaEntry, SigmaTable, DEFAULT_BETA, DEFAULT_GAMMA,
};
use crate::depth_roi::{
    collect_salient_depths, forward_differences, proximity_threshold, select_depth_range, ClusterPolicy,
    DepthOfInterest, DepthRoiError,
};
use crate::raster::{load_raster, save_raster, to_grayscale, DepthMap, Raster, RasterError};
use crate::render::{composite_defocus, RenderError};
use crate::saliency::{compute_saliency, threshold_saliency, SaliencyError, SaliencyMap, SalientMask, ThresholdPolicy};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error("{what} is {found:?} but the image is {expected:?}")]
    DimensionMismatch { what: &'static str, expected: (usize, usize), found: (usize, usize) },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Saliency(#[from] SaliencyError),
    #[error(transparent)]
    DepthRoi(#[from] DepthRoiError),
    #[error(transparent)]
    Defocus(#[from] DefocusError),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error("failed to write report: {0}")]
    Report(#[from] std::io::Error),
}

impl PipelineError {
    /// True for problems with the inputs (files, dimensions, parameters) rather than the scene itself.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Self::Raster(_)
                | Self::DimensionMismatch { .. }
                | Self::InvalidConfig(_)
                | Self::Defocus(_)
                | Self::Saliency(SaliencyError::NotGrayscale(_) | SaliencyError::InvalidThreshold(_))
        )
    }
}

/// Tunables shared by the file-based and in-memory entry points.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PipelineParams {
    pub beta: f64,
    pub gamma: f64,
    pub saliency_policy: ThresholdPolicy,
    pub cluster_policy: ClusterPolicy,
}

impl Default for PipelineParams {
    fn default() -> Self {
        Self {
            beta: DEFAULT_BETA,
            gamma: DEFAULT_GAMMA,
            saliency_policy: ThresholdPolicy::Otsu,
            cluster_policy: ClusterPolicy::Largest,
        }
    }
}

impl PipelineParams {
    pub fn validate(&self) -> Result<(), PipelineError> {
        validate_beta_gamma(self.beta, self.gamma)?;
        if let ThresholdPolicy::Fixed(v) = self.saliency_policy {
            if !(0.0..=1.0).contains(&v) {
                return Err(PipelineError::InvalidConfig(format!("fixed saliency threshold {v} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub image_path: PathBuf,
    pub depth_path: PathBuf,
    pub saliency_path: Option<PathBuf>,
    pub out_path: PathBuf,
    pub params: PipelineParams,
    pub defocus_map_path: Option<PathBuf>,
    pub report_path: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub saliency: f64,
    pub roi: f64,
    pub defocus: f64,
    pub render: f64,
    /// `roi + defocus`: salient-region filtering and defocus-map generation only.
    pub roi_plus_defocus: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub alpha: f64,
    pub t_p: Option<f64>,
    pub f_min: u8,
    pub f_max: u8,
    pub damped: bool,
    pub beta: f64,
    pub gamma: f64,
    pub pixel_count: usize,
    pub sigma_table: Vec<SigmaEntry>,
    pub stage_timings_ms: StageTimings,
}

impl PipelineReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

pub fn emit_report(r: &PipelineReport, path: impl AsRef<Path>) -> Result<(), PipelineError> {
    fs::write(path, r.to_json() + "\n")?;
    Ok(())
}

/// Where the saliency map comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum SaliencySource {
    /// Built-in center-surround detector on the image's luma.
    Builtin,
    External(SaliencyMap),
}

/// Everything the pipeline produced for one image.
#[derive(Clone, Debug)]
pub struct PipelineOutput {
    pub image: Raster,
    pub saliency: SaliencyMap,
    pub mask: SalientMask,
    pub roi: DepthOfInterest,
    pub defocus_map: DefocusMap,
    pub sigma_table: SigmaTable,
    pub report: PipelineReport,
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

fn check_dims(what: &'static str, img: &Raster, found: (usize, usize)) -> Result<(), PipelineError> {
    let expected = (img.width(), img.height());
    if expected != found {
        return Err(PipelineError::DimensionMismatch { what, expected, found });
    }
    Ok(())
}

/// Runs every stage on in-memory inputs.
pub fn run(
    image: &Raster,
    depth: &DepthMap,
    saliency: SaliencySource,
    params: &PipelineParams,
) -> Result<PipelineOutput, PipelineError> {
    params.validate()?;
    check_dims("depth map", image, (depth.width(), depth.height()))?;

    let start = Instant::now();
    let saliency = match saliency {
        SaliencySource::Builtin => compute_saliency(&to_grayscale(image))?,
        SaliencySource::External(map) => {
            check_dims("saliency map", image, (map.width(), map.height()))?;
            map
        }
    };
    let mask = threshold_saliency(&saliency, params.saliency_policy)?;
    let saliency_ms = elapsed_ms(start);

    let start = Instant::now();
    let salient_depths = collect_salient_depths(depth, &mask)?;
    let t_p = proximity_threshold(&forward_differences(&salient_depths));
    let roi = select_depth_range(&salient_depths, t_p, params.cluster_policy);
    let roi_ms = elapsed_ms(start);

    let start = Instant::now();
    let defocus_map = build_defocus_map(depth, &roi);
    let histogram = build_blur_histogram(&defocus_map);
    let alpha = compute_alpha(&histogram);
    let defocus_params = DefocusParams::new(params.beta, params.gamma, alpha)?;
    let sigma_table = build_sigma_table(&histogram, &defocus_params)?;
    let defocus_ms = elapsed_ms(start);

    let start = Instant::now();
    let rendered = composite_defocus(image, &defocus_map, &sigma_table)?;
    let render_ms = elapsed_ms(start);

    let report = PipelineReport {
        alpha,
        t_p: roi.t_p,
        f_min: roi.f_min,
        f_max: roi.f_max,
        damped: sigma_table.is_damped(),
        beta: params.beta,
        gamma: params.gamma,
        pixel_count: image.pixel_count(),
        sigma_table: sigma_table.entries(),
        stage_timings_ms: StageTimings {
            saliency: saliency_ms,
            roi: roi_ms,
            defocus: defocus_ms,
            render: render_ms,
            roi_plus_defocus: roi_ms + defocus_ms,
        },
    };
    Ok(PipelineOutput { image: rendered, saliency, mask, roi, defocus_map, sigma_table, report })
}

/// Loads the configured files, runs the pipeline and writes every requested output.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<(Raster, PipelineReport), PipelineError> {
    cfg.params.validate()?;
    let image = load_raster(&cfg.image_path)?;
    let depth = DepthMap::from_raster(load_raster(&cfg.depth_path)?)?;
    let saliency = match &cfg.saliency_path {
        Some(p) => SaliencySource::External(SaliencyMap::from_raster(&load_raster(p)?)?),
        None => SaliencySource::Builtin,
    };

    let out = run(&image, &depth, saliency, &cfg.params)?;

    save_raster(&out.image, &cfg.out_path)?;
    if let Some(p) = &cfg.defocus_map_path {
        save_raster(&out.defocus_map.to_raster(), p)?;
    }
    if let Some(p) = &cfg.report_path {
        emit_report(&out.report, p)?;
    }
    Ok((out.image, out.report))
}
