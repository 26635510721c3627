//! The `mlct` command line.

pub mod config;
mod files;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use mlct_core::io::{self as cio, DwfDomain, Kind};
use mlct_core::pgm::{write_dwf_overlay, write_pgm};
use mlct_core::{derive_seed, DigitalWavefrontSet, GridImage, MetricsReport};
use mlct_learn::train::{evaluate, load_samples, write_log};
use mlct_learn::wfprop::{prop_lpd, LpdMaps, PropConfig};
use mlct_learn::{lpd_forward, LpdParams};
use mlct_microlocal::{
    dwf_estimate, dwf_estimate_sinogram, dwf_image_to_sino, dwf_sino_to_image, visible_orientations,
    EstimateThresholds,
};
use mlct_phantom::dataset::{dataset_len, image_path};
use mlct_phantom::{analytic_dwf, dataset_generate, CartoonPhantom};
use mlct_radon::{add_noise, radon, restrict, Geometry, Restriction, Window};
use mlct_recon::{recon_fbp, recon_tikhonov, recon_tv};
use serde::Serialize;
use thiserror::Error;

use config::Config;
use files::{load_sinogram, save_sinogram};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
    #[error(transparent)]
    Core(#[from] mlct_core::CoreError),
    #[error(transparent)]
    Phantom(#[from] mlct_phantom::PhantomError),
    #[error(transparent)]
    Radon(#[from] mlct_radon::RadonError),
    #[error(transparent)]
    Microlocal(#[from] mlct_microlocal::MicrolocalError),
    #[error(transparent)]
    Recon(#[from] mlct_recon::ReconError),
    #[error(transparent)]
    Learn(#[from] mlct_learn::LearnError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "mlct", version, about = "Tomography with wavefront-set aware learned reconstruction")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Global {
    /// Base seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// JSON configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads for the parallel kernels (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Deterministic single-threaded execution.
    #[arg(long, global = true)]
    pub reference: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthetic phantoms.
    #[command(subcommand)]
    Phantom(PhantomCmd),
    /// Project an image to a sinogram.
    Radon(RadonArgs),
    /// Remove angles from a sinogram.
    Restrict(RestrictArgs),
    /// Add Gaussian noise relative to the sinogram maximum.
    Noise(NoiseArgs),
    /// Reconstruct an image from a sinogram.
    Recon(ReconArgs),
    /// Digital wavefront sets.
    #[command(subcommand)]
    Wf(WfCmd),
    /// Train a learned primal-dual network on a phantom dataset.
    Train(TrainArgs),
    /// Image quality metrics.
    Eval(EvalArgs),
}

#[derive(Debug, Subcommand)]
pub enum PhantomCmd {
    /// Write image, analytic wavefront set and JSON description for each phantom.
    Gen(GenArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub count: usize,
    /// Image side length.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub bins: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RadonArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Number of uniform angles over [0, pi).
    #[arg(long)]
    pub angles: Option<usize>,
    /// Also write an 8-bit preview.
    #[arg(long)]
    pub pgm: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RestrictArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Missing wedge width in degrees.
    #[arg(long, conflicts_with = "sparse")]
    pub wedge: Option<f64>,
    /// Wedge centre in degrees.
    #[arg(long, default_value_t = 90.0)]
    pub center: f64,
    /// Keep this many evenly spaced angles.
    #[arg(long)]
    pub sparse: Option<usize>,
}

#[derive(Debug, Args)]
pub struct NoiseArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Noise standard deviation relative to max |g|.
    #[arg(long)]
    pub sigma: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Fbp,
    Tikhonov,
    Tv,
    Lpd,
}

#[derive(Debug, Args)]
pub struct ReconArgs {
    #[arg(value_enum)]
    pub method: Method,
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Image side length when the sinogram does not record it.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long, value_enum)]
    pub window: Option<WindowArg>,
    /// Network checkpoint, required for `lpd`.
    #[arg(long)]
    pub weights: Option<PathBuf>,
    #[arg(long)]
    pub pgm: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WindowArg {
    None,
    Hann,
}

#[derive(Debug, Subcommand)]
pub enum WfCmd {
    /// Analytic wavefront set of a phantom JSON description.
    Analytic(WfAnalyticArgs),
    /// Gradient-based estimate from an image or sinogram.
    Estimate(WfEstimateArgs),
    /// Push an image-grid set to the sinogram grid.
    MapFwd(WfMapArgs),
    /// Pull a sinogram-grid set back to the image grid.
    MapBwd(WfMapArgs),
    /// Visible image orientation bins of a geometry, as JSON.
    Visible(WfVisibleArgs),
    /// Propagate a set through a learned primal-dual network.
    PropLpd(WfPropArgs),
}

#[derive(Debug, Args)]
pub struct WfAnalyticArgs {
    /// Phantom JSON written by `phantom gen`.
    #[arg(long)]
    pub phantom: PathBuf,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub bins: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
    /// Write `<stem>_{r,g,b}.pgm` orientation overlays.
    #[arg(long)]
    pub overlay: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct WfEstimateArgs {
    /// Image or sinogram container.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub bins: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub overlay: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct WfMapArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Sinogram whose geometry defines the map.
    #[arg(long)]
    pub geometry: PathBuf,
    #[arg(long)]
    pub n: Option<usize>,
    /// Orientation bins of the output grid.
    #[arg(long)]
    pub bins: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub overlay: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct WfVisibleArgs {
    #[arg(long)]
    pub geometry: PathBuf,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub bins: Option<usize>,
    /// Write the JSON here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct WfPropArgs {
    #[arg(long)]
    pub weights: PathBuf,
    /// Measured sinogram fed to the network.
    #[arg(long)]
    pub sino: PathBuf,
    /// Input set: image-grid sets are pushed to the sinogram grid first.
    #[arg(long)]
    pub dwf: PathBuf,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
    /// Per-layer trace as JSON.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long)]
    pub overlay: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Directory written by `phantom gen`.
    #[arg(long)]
    pub data: PathBuf,
    /// Use the first `count` items (default: all).
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
    /// CSV training log.
    #[arg(long)]
    pub log: Option<PathBuf>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Initial checkpoint instead of a random start.
    #[arg(long)]
    pub init: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Reconstruction to score.
    #[arg(long, requires = "gt", conflicts_with = "data")]
    pub rec: Option<PathBuf>,
    #[arg(long)]
    pub gt: Option<PathBuf>,
    /// Dataset for a learned-vs-FBP comparison.
    #[arg(long, requires = "weights")]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub weights: Option<PathBuf>,
    /// First dataset item of the comparison.
    #[arg(long, default_value_t = 0)]
    pub from: usize,
    #[arg(long)]
    pub count: Option<usize>,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parse `argv` and run; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Run a parsed command inside a pool sized by `--threads`/`--reference`.
pub fn execute(cli: Cli) -> Result<()> {
    let cfg = Config::load(cli.global.config.as_deref())?;
    let threads = match (cli.global.reference, cli.global.threads) {
        (true, _) => 1,
        (false, Some(0)) => return Err(CliError::Usage("--threads must be positive".into())),
        (false, Some(t)) => t,
        (false, None) => 0,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))?;
    pool.install(|| dispatch(cli.command, &cli.global, &cfg))
}

fn dispatch(cmd: Command, g: &Global, cfg: &Config) -> Result<()> {
    match cmd {
        Command::Phantom(PhantomCmd::Gen(a)) => phantom_gen(a, g, cfg),
        Command::Radon(a) => cmd_radon(a, cfg),
        Command::Restrict(a) => cmd_restrict(a, cfg),
        Command::Noise(a) => cmd_noise(a, g, cfg),
        Command::Recon(a) => cmd_recon(a, cfg),
        Command::Wf(w) => match w {
            WfCmd::Analytic(a) => wf_analytic(a, cfg),
            WfCmd::Estimate(a) => wf_estimate(a, cfg),
            WfCmd::MapFwd(a) => wf_map(a, cfg, true),
            WfCmd::MapBwd(a) => wf_map(a, cfg, false),
            WfCmd::Visible(a) => wf_visible(a, cfg),
            WfCmd::PropLpd(a) => wf_prop(a, cfg),
        },
        Command::Train(a) => cmd_train(a, g, cfg),
        Command::Eval(a) => cmd_eval(a, g, cfg),
    }
}

fn phantom_gen(a: GenArgs, g: &Global, cfg: &Config) -> Result<()> {
    let mut d = cfg.dataset.clone();
    if let Some(n) = a.n {
        d.n1 = n;
        d.n2 = n;
    }
    if let Some(b) = a.bins {
        d.bins = b;
    }
    dataset_generate(a.count, g.seed, &d, &a.out)?;
    log::info!("wrote {} phantoms to {}", a.count, a.out.display());
    Ok(())
}

fn cmd_radon(a: RadonArgs, cfg: &Config) -> Result<()> {
    let image = cio::read_image(&a.input)?;
    let angles = a.angles.unwrap_or(cfg.geometry.angles);
    if angles == 0 {
        return Err(CliError::Usage("--angles must be positive".into()));
    }
    if image.n1() != image.n2() {
        return Err(CliError::Runtime("only square images are supported".into()));
    }
    let geo = Geometry::parallel(image.n1(), angles);
    let sino = radon(&image, &geo)?;
    save_sinogram(&sino, &geo, &a.out)?;
    if let Some(p) = a.pgm {
        write_pgm(sino.field(), p)?;
    }
    Ok(())
}

fn cmd_restrict(a: RestrictArgs, cfg: &Config) -> Result<()> {
    let mode = match (a.wedge, a.sparse) {
        (Some(w), None) => Restriction::LimitedAngle { center_deg: a.center, width_deg: w },
        (None, Some(c)) => Restriction::SparseView { count: c },
        (None, None) => cfg
            .geometry
            .restriction
            .ok_or_else(|| CliError::Usage("give --wedge, --sparse or a configured restriction".into()))?,
        (Some(_), Some(_)) => unreachable!("clap rejects both"),
    };
    let (sino, geo) = load_sinogram(&a.input, None)?;
    let out = restrict(&sino, &mode)?;
    let geo = mode.apply_geometry(&geo)?;
    save_sinogram(&out, &geo, &a.out)
}

fn cmd_noise(a: NoiseArgs, g: &Global, cfg: &Config) -> Result<()> {
    let sigma = a.sigma.unwrap_or(cfg.noise);
    if !(sigma >= 0.0) {
        return Err(CliError::Usage(format!("--sigma must be non-negative, got {sigma}")));
    }
    let (sino, geo) = load_sinogram(&a.input, None)?;
    save_sinogram(&add_noise(&sino, sigma, g.seed)?, &geo, &a.out)
}

fn cmd_recon(a: ReconArgs, cfg: &Config) -> Result<()> {
    let (sino, geo) = load_sinogram(&a.input, a.n)?;
    let rc = &cfg.recon;
    let image = match a.method {
        Method::Fbp => {
            let window = match a.window {
                Some(WindowArg::None) => Window::None,
                Some(WindowArg::Hann) => Window::Hann,
                None => rc.window,
            };
            recon_fbp(&sino, &geo, window)?
        }
        Method::Tikhonov => {
            let r = recon_tikhonov(
                &sino,
                &geo,
                a.lambda.unwrap_or(rc.tikhonov_lambda),
                a.iterations.unwrap_or(rc.tikhonov_iterations),
            )?;
            log::info!("tikhonov: {} iterations, residual {:.3e}", r.iterations, r.residual);
            r.image
        }
        Method::Tv => {
            let r = recon_tv(&sino, &geo, a.lambda.unwrap_or(rc.tv_lambda), a.iterations.unwrap_or(rc.tv_iterations))?;
            log::info!("tv: final energy {:.6e}", r.energy.last().copied().unwrap_or(0.0));
            r.image
        }
        Method::Lpd => {
            let w = a.weights.ok_or_else(|| CliError::Usage("recon lpd needs --weights".into()))?;
            let params = LpdParams::load(w)?;
            lpd_forward(&params, &sino, &geo)?.0
        }
    };
    cio::write_image(&image, &a.out)?;
    if let Some(p) = a.pgm {
        write_pgm(image.field(), p)?;
    }
    Ok(())
}

fn write_set(dwf: &DigitalWavefrontSet, domain: DwfDomain, out: &Path, overlay: Option<&Path>) -> Result<()> {
    cio::write_dwf(dwf, domain, out)?;
    if let Some(stem) = overlay {
        write_dwf_overlay(dwf, stem)?;
    }
    Ok(())
}

fn wf_analytic(a: WfAnalyticArgs, cfg: &Config) -> Result<()> {
    let phantom = CartoonPhantom::from_json(&fs::read_to_string(&a.phantom)?)?;
    let n = a.n.unwrap_or(cfg.dataset.n1);
    let dwf = analytic_dwf(&phantom, n, n, a.bins.unwrap_or(cfg.dataset.bins))?;
    write_set(&dwf, DwfDomain::Image, &a.out, a.overlay.as_deref())
}

fn wf_estimate(a: WfEstimateArgs, cfg: &Config) -> Result<()> {
    let bytes = fs::read(&a.input)?;
    let thr = EstimateThresholds { rel: cfg.estimate_rel };
    let (dwf, domain) = match cio::peek_header(&bytes)?.kind {
        Kind::Image => {
            let bins = a.bins.unwrap_or(cfg.dataset.bins);
            (dwf_estimate(&cio::decode_image(&bytes)?, bins, &thr), DwfDomain::Image)
        }
        Kind::Sinogram => {
            let bins = a.bins.unwrap_or(cfg.train.sino_bins);
            (dwf_estimate_sinogram(&cio::decode_sinogram(&bytes)?, bins, &thr), DwfDomain::Sinogram)
        }
        other => return Err(CliError::Runtime(format!("cannot estimate a wavefront set from {other:?}"))),
    };
    write_set(&dwf, domain, &a.out, a.overlay.as_deref())
}

fn wf_map(a: WfMapArgs, cfg: &Config, forward: bool) -> Result<()> {
    let (input, domain) = cio::read_dwf(&a.input)?;
    let n = a.n.or(Some(input.width()).filter(|_| domain == DwfDomain::Image));
    let (_, geo) = load_sinogram(&a.geometry, n)?;
    let (out, stats, target) = match (forward, domain) {
        (true, DwfDomain::Image) => {
            let (o, s) = dwf_image_to_sino(&input, &geo, a.bins.unwrap_or(cfg.train.sino_bins))?;
            (o, s, DwfDomain::Sinogram)
        }
        (false, DwfDomain::Sinogram) => {
            let (o, s) = dwf_sino_to_image(&input, &geo, a.bins.unwrap_or(cfg.dataset.bins))?;
            (o, s, DwfDomain::Image)
        }
        _ => return Err(CliError::Usage(format!("input set lives on the {domain:?} grid"))),
    };
    log::info!("mapped {stats:?}");
    write_set(&out, target, &a.out, a.overlay.as_deref())
}

#[derive(Serialize)]
struct VisibleReport {
    bins: usize,
    visible: Vec<bool>,
    visible_count: usize,
}

fn wf_visible(a: WfVisibleArgs, cfg: &Config) -> Result<()> {
    let (_, geo) = load_sinogram(&a.geometry, a.n)?;
    let bins = a.bins.unwrap_or(cfg.dataset.bins);
    let visible = visible_orientations(&geo, bins);
    let report = VisibleReport { bins, visible_count: visible.iter().filter(|&&v| v).count(), visible };
    let text = serde_json::to_string_pretty(&report)?;
    match a.out {
        Some(p) => fs::write(p, text)?,
        None => println!("{text}"),
    }
    Ok(())
}

fn wf_prop(a: WfPropArgs, cfg: &Config) -> Result<()> {
    let params = LpdParams::load(&a.weights)?;
    let (input, domain) = cio::read_dwf(&a.dwf)?;
    let n = a.n.or(Some(input.width()).filter(|_| domain == DwfDomain::Image));
    let (sino, geo) = load_sinogram(&a.sino, n)?;
    let (bins, sino_bins) = match domain {
        DwfDomain::Image => (input.bins(), cfg.train.sino_bins),
        DwfDomain::Sinogram => (cfg.dataset.bins, input.bins()),
    };
    let maps = LpdMaps::new(&geo, bins, sino_bins);
    let dwf_g = match domain {
        DwfDomain::Image => maps.to_sino.apply_hard(&input)?.0,
        DwfDomain::Sinogram => input,
    };
    let (_, capture) = lpd_forward(&params, &sino, &geo)?;
    let (out, trace) = prop_lpd(&dwf_g, &params, &capture, &geo, &maps, &PropConfig::default())?;
    log::info!("propagated {} elements, {} flagged layers", out.count(), trace.over_estimates());
    if let Some(p) = a.trace {
        fs::write(p, trace.to_json())?;
    }
    write_set(&out, DwfDomain::Image, &a.out, a.overlay.as_deref())
}

/// Acquisition geometry of training and evaluation for `n x n` images.
fn data_geometry(cfg: &Config, n: usize) -> Result<Geometry> {
    let geo = Geometry::parallel(n, cfg.geometry.angles);
    Ok(match &cfg.geometry.restriction {
        Some(r) => r.apply_geometry(&geo)?,
        None => geo,
    })
}

fn dataset_shape(dir: &Path) -> Result<(usize, usize)> {
    let len = dataset_len(dir);
    if len == 0 {
        return Err(CliError::Runtime(format!("no dataset items in {}", dir.display())));
    }
    let first = cio::read_image(image_path(dir, 0))?;
    if first.n1() != first.n2() {
        return Err(CliError::Runtime("only square images are supported".into()));
    }
    Ok((len, first.n1()))
}

fn cmd_train(a: TrainArgs, g: &Global, cfg: &Config) -> Result<()> {
    let (len, n) = dataset_shape(&a.data)?;
    let count = a.count.unwrap_or(len);
    let mut tc = cfg.train;
    tc.seed = g.seed;
    if let Some(s) = a.steps {
        tc.steps = s;
    }
    if let Some(l) = a.lambda {
        tc.lambda = l;
    }
    tc.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let geo = data_geometry(cfg, n)?;
    let maps = LpdMaps::new(&geo, cfg.dataset.bins, tc.sino_bins);
    let samples = load_samples(&a.data, 0..count, &geo, &maps, &tc, derive_seed(g.seed, 1))?;
    let init = match a.init {
        Some(p) => LpdParams::load(p)?,
        None => LpdParams::random(cfg.lpd, derive_seed(g.seed, 2))?,
    };
    let (params, rows) = mlct_learn::train(&init, &samples, &geo, &maps, &tc)?;
    params.save(&a.out)?;
    if let Some(p) = a.log {
        write_log(&rows, p)?;
    }
    let last = evaluate(&params, &samples, &geo, &maps, &tc, tc.joint())?;
    log::info!("trained {} steps: rec {:.4} inp {:.4}", tc.steps, last.rec, last.inp);
    Ok(())
}

#[derive(Serialize)]
struct EvalRow {
    item: String,
    method: String,
    psnr: f64,
    ssim: f64,
    l2_relative_error: f64,
}

impl EvalRow {
    fn new(item: impl Into<String>, method: &str, m: MetricsReport) -> Self {
        Self { item: item.into(), method: method.into(), psnr: m.psnr, ssim: m.ssim, l2_relative_error: m.l2_relative_error }
    }
}

fn cmd_eval(a: EvalArgs, g: &Global, cfg: &Config) -> Result<()> {
    let mut rows = Vec::new();
    if let (Some(rec), Some(gt)) = (&a.rec, &a.gt) {
        let m = MetricsReport::compute(&cio::read_image(gt)?, &cio::read_image(rec)?)?;
        rows.push(EvalRow::new(rec.display().to_string(), "file", m));
    } else if let (Some(dir), Some(w)) = (&a.data, &a.weights) {
        let params = LpdParams::load(w)?;
        let (len, n) = dataset_shape(dir)?;
        let count = a.count.unwrap_or(len.saturating_sub(a.from));
        if a.from + count > len {
            return Err(CliError::Usage(format!("dataset holds {len} items")));
        }
        let geo = data_geometry(cfg, n)?;
        for i in a.from..a.from + count {
            let truth = cio::read_image(image_path(dir, i))?;
            let sino = mlct_learn::train::simulate(&truth, &geo, cfg.train.noise, derive_seed(derive_seed(g.seed, 3), i as u64))?;
            let fbp: GridImage = recon_fbp(&sino, &geo, cfg.recon.window)?;
            let lpd = lpd_forward(&params, &sino, &geo)?.0;
            rows.push(EvalRow::new(i.to_string(), "fbp", MetricsReport::compute(&truth, &fbp)?));
            rows.push(EvalRow::new(i.to_string(), "lpd", MetricsReport::compute(&truth, &lpd)?));
        }
    } else {
        return Err(CliError::Usage("eval needs --rec and --gt, or --data and --weights".into()));
    }
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        for r in &rows {
            w.serialize(r)?;
        }
        w.flush()?;
    }
    match a.out {
        Some(p) => fs::write(p, &buf)?,
        None => std::io::stdout().write_all(&buf)?,
    }
    Ok(())
}
