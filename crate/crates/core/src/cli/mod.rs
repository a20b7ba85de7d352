//! Command-line frontend.
//!
//! ```text
//! specfocus synth       --out DIR [--width W --height H --layers L --channels M --seed S]
//! specfocus simulate    --gt DIR --out DIR [--kappa K]
//! specfocus reconstruct --in DIR --out DIR [--sigma 10 --alpha 1 --beta 0.1 ...] [--jobs J]
//! specfocus fit         --source FILE --target FILE --out-a FILE --out-b FILE [...]
//! specfocus evaluate    --gt DIR --recon DIR --report FILE.csv
//! ```
//!
//! Failures print one `error[<kind>]: <message>` line on stderr and exit 1;
//! usage errors exit 2.

pub mod manifest;
pub mod pgm;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::capture::{
    capture_spectral_varying, render_ground_truth, synth_scene, DefocusModel, DEFAULT_KAPPA,
};
use crate::config::ReconConfig;
use crate::error::{Error, Result};
use crate::image::Image;
use crate::imgops::gaussian_blur;
use crate::llt::{fit_llt, reconstruct_with_reports};
use crate::metrics::{evaluate_stack, format_psnr};
use crate::stack::{MultispectralFocalStack, SpectralVaryingStack};

pub use manifest::{read_stack, write_stack, Stack, StackKind, StackManifest};

#[derive(Debug, Parser)]
#[command(
    name = "specfocus",
    version,
    about = "Multispectral focal stack simulation, reconstruction and evaluation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic scene and its ground-truth multispectral focal stack.
    Synth(SynthArgs),
    /// Keep one channel per slice of a ground-truth stack.
    Simulate(SimulateArgs),
    /// Recover the full multispectral focal stack from a spectral-varying stack.
    Reconstruct(ReconstructArgs),
    /// Fit one LLT map pair between two images.
    Fit(FitArgs),
    /// Compare a reconstruction against ground truth (PSNR / SSIM per cell).
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 128)]
    width: usize,
    #[arg(long, default_value_t = 128)]
    height: usize,
    #[arg(long, default_value_t = 3)]
    layers: usize,
    #[arg(long, default_value_t = 10)]
    channels: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Number of focus depths; defaults to the channel count.
    #[arg(long)]
    depths: Option<usize>,
    /// Defocus growth in pixels per unit of depth difference.
    #[arg(long, default_value_t = DEFAULT_KAPPA)]
    kappa: f64,
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    gt: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Re-render the stored scene with this defocus growth before capture.
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Debug, Args)]
struct FitParams {
    #[arg(long, default_value_t = 10.0)]
    sigma: f64,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 0.1)]
    beta: f64,
    #[arg(long, default_value_t = 500)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-6)]
    rel_tol: f64,
    #[arg(long, default_value_t = 1.0)]
    init_step: f64,
}

impl FitParams {
    fn config(&self) -> ReconConfig {
        ReconConfig {
            blur_sigma: self.sigma,
            alpha: self.alpha,
            beta: self.beta,
            max_iters: self.max_iters,
            rel_tol: self.rel_tol,
            init_step: self.init_step,
        }
    }
}

#[derive(Debug, Args)]
struct ReconstructArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    params: FitParams,
    /// Maximum number of concurrent fits (default: available parallelism).
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[arg(long)]
    source: PathBuf,
    #[arg(long)]
    target: PathBuf,
    #[arg(long)]
    out_a: PathBuf,
    #[arg(long)]
    out_b: PathBuf,
    #[command(flatten)]
    params: FitParams,
    /// Fit the images as given instead of pre-blurring them with --sigma.
    #[arg(long)]
    no_blur: bool,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    gt: PathBuf,
    #[arg(long)]
    recon: PathBuf,
    #[arg(long)]
    report: PathBuf,
    #[arg(long)]
    jobs: Option<usize>,
}

/// Parses `argv` (program name first) and runs the subcommand.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error[{}]: {}", e.code(), e.to_string().replace('\n', " "));
            1
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Synth(args) => synth(args),
        Command::Simulate(args) => simulate(args),
        Command::Reconstruct(args) => reconstruct(args),
        Command::Fit(args) => fit(args),
        Command::Evaluate(args) => evaluate(args),
    }
}

fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        if j == 0 {
            return Err(Error::InvalidParameter("--jobs must be at least 1".into()));
        }
        builder = builder.num_threads(j);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidParameter(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

fn synth(args: SynthArgs) -> Result<()> {
    let n = args.depths.unwrap_or(args.channels);
    let scene = synth_scene(args.width, args.height, args.layers, args.channels, args.seed)?;
    let model = DefocusModel::uniform(n, args.kappa)?;
    let gt = with_jobs(args.jobs, || {
        render_ground_truth(&scene, &model, scene.wavelength_schedule())
    })??;
    manifest::write_scene(&scene, &model, &args.out.join(manifest::SCENE_DIR))?;
    write_stack(&Stack::from(gt), &args.out)?;
    println!(
        "wrote {n}x{} ground-truth stack ({}x{}, {} layers) to {}",
        args.channels,
        args.width,
        args.height,
        args.layers,
        args.out.display()
    );
    Ok(())
}

fn read_focal_stack(dir: &Path) -> Result<MultispectralFocalStack> {
    match read_stack(dir)? {
        Stack::FocalStack(s) => Ok(s),
        Stack::SpectralVarying(_) => Err(Error::Manifest {
            path: dir.join(manifest::MANIFEST_FILE),
            message: "expected a focal stack, found a spectral-varying stack".into(),
        }),
    }
}

fn read_spectral_varying(dir: &Path) -> Result<SpectralVaryingStack> {
    match read_stack(dir)? {
        Stack::SpectralVarying(s) => Ok(s),
        Stack::FocalStack(_) => Err(Error::Manifest {
            path: dir.join(manifest::MANIFEST_FILE),
            message: "expected a spectral-varying stack, found a focal stack".into(),
        }),
    }
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let gt = read_focal_stack(&args.gt)?;
    let gt = match args.kappa {
        None => gt,
        Some(kappa) => {
            let (scene, _) = manifest::read_scene(&args.gt.join(manifest::SCENE_DIR))?;
            let model = DefocusModel::new(kappa, gt.depth_schedule().to_vec())?;
            with_jobs(args.jobs, || {
                render_ground_truth(&scene, &model, gt.wavelength_schedule())
            })??
        }
    };
    let captured = capture_spectral_varying(&gt)?;
    write_stack(&Stack::from(captured), &args.out)?;
    println!("wrote {}-slice spectral-varying stack to {}", gt.depths(), args.out.display());
    Ok(())
}

fn reconstruct(args: ReconstructArgs) -> Result<()> {
    let cfg = args.params.config();
    cfg.validate()?;
    let captured = read_spectral_varying(&args.input)?;
    let recon = with_jobs(args.jobs, || reconstruct_with_reports(&captured, &cfg))??;
    write_stack(&Stack::from(recon.stack), &args.out)?;
    let converged = recon.reports.iter().filter(|r| r.report.converged).count();
    println!(
        "reconstructed {n}x{n} stack: {} fits, {converged} converged; wrote {}",
        recon.reports.len(),
        args.out.display(),
        n = captured.len(),
    );
    Ok(())
}

/// Sidecar path for a visualized map: `a.pgm` → `a.scale.txt`.
pub fn scale_sidecar_path(map_path: &Path) -> PathBuf {
    map_path.with_extension("scale.txt")
}

/// Rescales `map` affinely onto `[0, 1]`; returns the image and
/// `(offset, scale)` such that `value = offset + scale * pixel`.
pub fn normalize_for_display(map: &Image) -> (Image, f64, f64) {
    let (lo, hi) = map.min_max();
    let span = hi - lo;
    let img = if span > 0.0 {
        map.map(|v| ((v - lo) / span).clamp(0.0, 1.0))
            .expect("normalized values are finite")
    } else {
        Image::zeros(map.width(), map.height())
    };
    (img, lo, span)
}

fn write_visualized_map(path: &Path, map: &Image) -> Result<()> {
    let (img, offset, scale) = normalize_for_display(map);
    pgm::write(path, &img)?;
    let sidecar = scale_sidecar_path(path);
    let text = format!("# value = offset + scale * pixel / 65535\noffset {offset:e}\nscale {scale:e}\n");
    fs::write(&sidecar, text).map_err(|e| Error::io(&sidecar, e))
}

fn fit(args: FitArgs) -> Result<()> {
    let cfg = args.params.config();
    cfg.validate()?;
    let source = pgm::read(&args.source)?;
    let target = pgm::read(&args.target)?;
    source.ensure_same_dims(&target)?;
    let (source, target) = if args.no_blur {
        (source, target)
    } else {
        (
            gaussian_blur(&source, cfg.blur_sigma)?,
            gaussian_blur(&target, cfg.blur_sigma)?,
        )
    };
    let (maps, report) = fit_llt(&source, &target, &cfg)?;
    write_visualized_map(&args.out_a, maps.gain())?;
    write_visualized_map(&args.out_b, maps.offset())?;
    println!(
        "objective {:e} -> {:e} after {} iterations (converged: {})",
        report.initial_objective, report.final_objective, report.iterations, report.converged
    );
    Ok(())
}

fn evaluate(args: EvaluateArgs) -> Result<()> {
    let gt = read_focal_stack(&args.gt)?;
    let recon = read_focal_stack(&args.recon)?;
    let table = with_jobs(args.jobs, || evaluate_stack(&gt, &recon))??;
    fs::write(&args.report, table.to_csv()).map_err(|e| Error::io(&args.report, e))?;
    for d in 0..table.depths() {
        let avg = table.depth_average(d);
        println!(
            "depth {d}: mean PSNR {} dB over {} finite cells, mean SSIM {:.4}",
            format_psnr(avg.psnr_db),
            avg.finite_cells,
            avg.ssim
        );
    }
    let all = table.overall_average();
    println!(
        "overall: mean PSNR {} dB over {} finite cells ({} identical), mean SSIM {:.4}",
        format_psnr(all.psnr_db),
        all.finite_cells,
        all.infinite_cells,
        all.ssim
    );
    Ok(())
}
