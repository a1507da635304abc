//! `gmq` subcommands.

use std::fmt::Write as _;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use gmq_core::fit::{fit, FitConfig, FitMode, Parameterization};
use gmq_core::{Camera, SceneSpec};

use crate::bench::{run_bench, BenchConfig};
use crate::dataset::{make_dataset, to_dataset, LoadedManifest, Split};
use crate::error::{GmqError, Result};
use crate::eval::evaluate;
use crate::model_io::ModelFile;
use crate::turntable::turntable;

#[derive(Debug, Parser)]
#[command(name = "gmq", version, about = "Fit and pose anisotropic Gaussian mixtures from silhouettes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a synthetic silhouette dataset from a built-in scene.
    Synth(SynthArgs),
    /// Fit Gaussians to a dataset and write the model.
    Fit(FitArgs),
    /// Compare the covariance parameterizations on a dataset.
    Bench(BenchArgs),
    /// IoU and DSSIM of a model's silhouettes against dataset masks.
    Eval(EvalArgs),
    /// Render a model at evenly spaced yaws.
    Turntable(TurntableArgs),
    /// Run the posing HTTP service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Built-in scene: sphere, tripod or quad.
    #[arg(long)]
    pub scene: String,
    #[arg(long)]
    pub views: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 256)]
    pub resolution: usize,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Manifest file or dataset directory.
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value = "canonical")]
    pub mode: FitMode,
    #[arg(long, default_value = "eig")]
    pub param: Parameterization,
    #[arg(long, default_value_t = 5000)]
    pub iters: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub lr: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.1)]
    pub reg_weight: f64,
    /// Fit on box-downsampled masks of this size (must divide the mask size).
    #[arg(long)]
    pub resolution: Option<usize>,
    /// Keep the per-image yaw at the manifest value.
    #[arg(long)]
    pub freeze_yaw: bool,
    /// Split to fit: train, test or all.
    #[arg(long, default_value = "train")]
    pub split: String,
    #[arg(long)]
    pub out_model: PathBuf,
    #[arg(long)]
    pub out_curve: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value_t = 3000)]
    pub iters: usize,
    /// Number of seeds (0, 1, ..).
    #[arg(long, default_value_t = 3)]
    pub seeds: u64,
    #[arg(long, default_value_t = 1e-4)]
    pub lr: f64,
    #[arg(long)]
    pub resolution: Option<usize>,
    /// At most this many masks, in manifest order.
    #[arg(long)]
    pub masks: Option<usize>,
    #[arg(long, default_value = "bench.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub dataset: PathBuf,
    /// train, test or all.
    #[arg(long, default_value = "test")]
    pub split: String,
    /// Silhouette threshold on the summed density.
    #[arg(long, default_value_t = 0.5)]
    pub tau: f64,
}

#[derive(Debug, Args)]
pub struct TurntableArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub frames: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Pose the parts with this image's transforms instead of identity.
    #[arg(long)]
    pub image: Option<String>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: IpAddr,
}

fn parse_split(s: &str) -> Result<Option<Split>> {
    if s == "all" {
        Ok(None)
    } else {
        s.parse().map(Some)
    }
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| GmqError::io(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| GmqError::io(path, e))
}

pub fn curve_csv(curve: &[f64]) -> String {
    let mut out = String::from("iter,loss\n");
    for (i, l) in curve.iter().enumerate() {
        let _ = writeln!(out, "{i},{l}");
    }
    out
}

pub fn synth(a: &SynthArgs) -> Result<String> {
    let scene = SceneSpec::builtin(&a.scene).ok_or_else(|| {
        GmqError::Usage(format!("unknown scene {:?} (expected one of {:?})", a.scene, gmq_core::scene::BUILTIN_SCENES))
    })?;
    if a.resolution == 0 {
        return Err(GmqError::Usage("--resolution must be positive".into()));
    }
    let m = make_dataset(&scene, a.views, a.seed, &a.out, &Camera::with_resolution(a.resolution, a.resolution))?;
    let n_test = m.entries.iter().filter(|e| e.split == Split::Test).count();
    Ok(format!("wrote {} masks ({} test) to {}", m.entries.len(), n_test, a.out.display()))
}

pub fn fit_cmd(a: &FitArgs) -> Result<String> {
    let loaded = LoadedManifest::load(&a.dataset)?;
    let views = loaded.views(parse_split(&a.split)?)?;
    if views.is_empty() {
        return Err(GmqError::Usage(format!("split {:?} has no entries", a.split)));
    }
    let (data, camera) = to_dataset(&views, &loaded.camera()?, a.resolution)?;
    let cfg = FitConfig {
        k: a.k,
        parameterization: a.param,
        mode: a.mode,
        lr: a.lr,
        iters: a.iters,
        seed: a.seed,
        reg_weight: a.reg_weight,
        resolution: camera.width,
        learn_yaw: !a.freeze_yaw,
        ..FitConfig::default()
    };
    let result = fit(&data, &cfg)?;
    let ids: Vec<String> = views.iter().map(|v| v.id.clone()).collect();
    let model = ModelFile::from_fit(&result, &camera, &ids);
    model.validate()?;
    write(&a.out_model, crate::model_io::to_json(&model))?;
    if let Some(p) = &a.out_curve {
        write(p, curve_csv(&result.loss_curve))?;
    }
    Ok(format!(
        "loss {:.6} -> {:.6} after {} iters ({} degenerate projections)",
        result.loss_curve[0],
        result.final_loss(),
        a.iters,
        result.diagnostics.degenerate_projections
    ))
}

pub fn bench_cmd(a: &BenchArgs) -> Result<String> {
    let loaded = LoadedManifest::load(&a.dataset)?;
    let mut views = loaded.views(None)?;
    if let Some(n) = a.masks {
        views.truncate(n);
    }
    if views.is_empty() {
        return Err(GmqError::Usage("dataset has no masks".into()));
    }
    let (data, _) = to_dataset(&views, &loaded.camera()?, a.resolution)?;
    FitConfig { k: a.k, lr: a.lr, ..FitConfig::default() }.validate()?;
    let report = run_bench(&data, &BenchConfig { k: a.k, iters: a.iters, seeds: (0..a.seeds).collect(), lr: a.lr });
    write(&a.out, report.csv())?;
    Ok(report.summary())
}

pub fn eval_cmd(a: &EvalArgs) -> Result<String> {
    let model = ModelFile::load(&a.model)?;
    let loaded = LoadedManifest::load(&a.dataset)?;
    let views = loaded.views(parse_split(&a.split)?)?;
    let report = evaluate(&model, &views, &loaded.camera()?, a.tau)?;
    let mut out = String::new();
    for e in &report.entries {
        let _ = writeln!(out, "{} iou {:.4} dssim {:.4}", e.id, e.iou, e.dssim);
    }
    let _ = write!(
        out,
        "{} views, tau {}: mean IoUx100 {:.2}, mean DSSIMx100 {:.2}",
        report.entries.len(),
        a.tau,
        100.0 * report.mean_iou(),
        100.0 * report.mean_dssim()
    );
    Ok(out)
}

pub fn turntable_cmd(a: &TurntableArgs) -> Result<String> {
    let model = ModelFile::load(&a.model)?;
    let transforms = match &a.image {
        Some(id) => Some(
            model
                .images
                .iter()
                .find(|i| &i.id == id)
                .ok_or_else(|| GmqError::Usage(format!("model has no image {id:?}")))?
                .transforms
                .clone(),
        ),
        None => None,
    };
    let files = turntable(&model, a.frames, &a.out, transforms.as_deref())?;
    Ok(format!("wrote {} frames to {}", files.len() / 2, a.out.display()))
}

pub fn serve_cmd(a: &ServeArgs) -> Result<String> {
    let model = ModelFile::load(&a.model)?;
    let rt = tokio::runtime::Runtime::new().map_err(|e| GmqError::io("tokio runtime", e))?;
    rt.block_on(crate::service::serve(model, SocketAddr::new(a.host, a.port)))?;
    Ok(String::new())
}

/// Caps the rayon pool at `GMQ_THREADS` when set.
pub fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("GMQ_THREADS") {
        let n: usize = v
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| GmqError::Usage(format!("GMQ_THREADS must be a positive integer, got {v:?}")))?;
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

pub fn run(cli: &Cli) -> Result<String> {
    configure_threads()?;
    match &cli.command {
        Command::Synth(a) => synth(a),
        Command::Fit(a) => fit_cmd(a),
        Command::Bench(a) => bench_cmd(a),
        Command::Eval(a) => eval_cmd(a),
        Command::Turntable(a) => turntable_cmd(a),
        Command::Serve(a) => serve_cmd(a),
    }
}
