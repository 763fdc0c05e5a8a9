use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use dofauto::defocus::{DEFAULT_BETA, DEFAULT_GAMMA};
use dofauto::{run_pipeline, ClusterPolicy, PipelineConfig, PipelineParams, ThresholdPolicy};

/// Render shallow depth-of-field automatically from an image, its depth map and saliency.
///
/// Inputs are binary PGM (P5) / PPM (P6) with maxval 255. Depth is one 8-bit
/// level per pixel; only level differences matter, so it does not matter
/// whether larger levels mean nearer or farther. The "first" cluster policy
/// does depend on it: it keeps the cluster with the smallest levels.
#[derive(Debug, Parser)]
#[command(name = "dofauto", version)]
struct Args {
    /// Input image (P5 or P6).
    #[arg(long)]
    image: PathBuf,
    /// Depth map (P5), same size as the image.
    #[arg(long)]
    depth: PathBuf,
    /// Precomputed saliency map (P5, value/255). Without it a built-in
    /// center-surround detector is used.
    #[arg(long)]
    saliency: Option<PathBuf>,
    /// Output image path.
    #[arg(long)]
    out: PathBuf,
    /// Blur adjustment threshold; at or above it blur is damped by gamma.
    #[arg(long, default_value_t = DEFAULT_BETA)]
    beta: f64,
    /// Damping factor, must exceed 1.
    #[arg(long, default_value_t = DEFAULT_GAMMA)]
    gamma: f64,
    /// Saliency binarization: "otsu" or "fixed:V" with V in [0, 1].
    #[arg(long, default_value = "otsu")]
    saliency_policy: ThresholdPolicy,
    /// Which depth cluster stays in focus: "largest" (most salient pixels) or
    /// "first" (smallest depth levels).
    #[arg(long, default_value = "largest")]
    cluster_policy: ClusterPolicy,
    /// Also write the per-pixel blur level map as P5.
    #[arg(long, value_name = "PATH")]
    emit_defocus_map: Option<PathBuf>,
    /// Write a JSON report (alpha, proximity threshold, focus range, timings).
    #[arg(long, value_name = "PATH")]
    report: Option<PathBuf>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let cfg = PipelineConfig {
        image_path: args.image,
        depth_path: args.depth,
        saliency_path: args.saliency,
        out_path: args.out,
        params: PipelineParams {
            beta: args.beta,
            gamma: args.gamma,
            saliency_policy: args.saliency_policy,
            cluster_policy: args.cluster_policy,
        },
        defocus_map_path: args.emit_defocus_map,
        report_path: args.report,
    };

    match run_pipeline(&cfg) {
        Ok((_, report)) => {
            eprintln!(
                "alpha={:.4} focus=[{}, {}] damped={} roi+defocus={:.2}ms render={:.2}ms",
                report.alpha,
                report.f_min,
                report.f_max,
                report.damped,
                report.stage_timings_ms.roi_plus_defocus,
                report.stage_timings_ms.render
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("dofauto: {e}");
            ExitCode::from(if e.is_input_error() { 2 } else { 3 })
        }
    }
}
