use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use nirfuse::metrics::render_table;
use nirfuse::pipeline::{self, init_thread_pool, Method, PipelineOutput};
use nirfuse::{load_image, save_image, BitDepth, Error, Image, ImagePlane, PipelineConfig, QualityReport, RgbImage};

const EXIT_INPUT: u8 = 1;
const EXIT_WARNING: u8 = 2;

#[derive(Parser, Debug)]
#[command(name = "nirfuse", version, about = "Colorize NIR images and denoise low-light photos with a NIR guide")]
struct Cli {
    /// Flat `key = value` configuration file; command-line flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Exit with status 2 when the run produced numerical warnings.
    #[arg(long, global = true)]
    strict: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Colorize a NIR image with an aligned visible image.
    Colorize(RunArgs),
    /// Denoise a dim visible image using a NIR guide, then colorize.
    Denoise(RunArgs),
    /// Run one of the comparison methods.
    Fuse {
        #[arg(long, value_enum)]
        method: Baseline,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Score images with CT, EN, SF and CF.
    Metrics {
        #[arg(required = true)]
        images: Vec<PathBuf>,
        /// Print a text table instead of one JSON object per line.
        #[arg(long)]
        table: bool,
        /// Gaussian width of the contrast measure.
        #[arg(long)]
        contrast_sigma: Option<f64>,
    },
    /// Report the mean squared error of a local linear NIR-to-luminance fit.
    Validate {
        #[arg(long)]
        vis: PathBuf,
        #[arg(long)]
        nir: PathBuf,
        #[arg(long)]
        m: Option<usize>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Baseline {
    Naive,
    Gradreg,
    Wavelet,
    Statistical,
}

impl From<Baseline> for Method {
    fn from(b: Baseline) -> Self {
        match b {
            Baseline::Naive => Method::Naive,
            Baseline::Gradreg => Method::GradReg,
            Baseline::Wavelet => Method::Wavelet,
            Baseline::Statistical => Method::Statistical,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, Default)]
enum Depth {
    #[default]
    #[value(name = "8")]
    Eight,
    #[value(name = "16")]
    Sixteen,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Visible color image.
    #[arg(long)]
    vis: PathBuf,
    /// NIR gray image, pixel-aligned with the visible image.
    #[arg(long)]
    nir: PathBuf,
    /// Output image path; the extension selects the format.
    #[arg(long, short)]
    out: PathBuf,
    /// Bits per channel of the output.
    #[arg(long, value_enum, default_value_t)]
    depth: Depth,
    #[command(flatten)]
    params: ParamArgs,
}

/// Overrides for individual configuration keys.
#[derive(Args, Debug, Default)]
struct ParamArgs {
    /// Odd window size of the local linear mapping.
    #[arg(long)]
    m: Option<usize>,
    /// Weight of the contrast prior in the mapping fit.
    #[arg(long, alias = "mu_c")]
    mu_c: Option<f64>,
    /// Data weight of the detail transfer.
    #[arg(long, alias = "mu_d")]
    mu_d: Option<f64>,
    /// Nonlocal-means patch radius.
    #[arg(long, alias = "nlm_patch_radius")]
    nlm_patch_radius: Option<usize>,
    /// Nonlocal-means search radius.
    #[arg(long, alias = "nlm_search_radius")]
    nlm_search_radius: Option<usize>,
    /// Nonlocal-means strength for the base layer.
    #[arg(long, alias = "nlm_h")]
    nlm_h: Option<f64>,
    /// Lower bound on the slope that chroma is divided by.
    #[arg(long, alias = "slope_floor")]
    slope_floor: Option<f64>,
    /// Chroma boost factor used with --chroma-boost.
    #[arg(long, alias = "chroma_scale")]
    chroma_scale: Option<f64>,
    /// Denoise the visible image before colorizing.
    #[arg(long, alias = "denoise_first")]
    denoise_first: bool,
    /// Write a JSON quality report to this path.
    #[arg(long, alias = "metrics_out")]
    metrics_out: Option<PathBuf>,
    /// Data weight of the gradient-regularization baseline.
    #[arg(long, alias = "mu_g")]
    mu_g: Option<f64>,
    /// Gradient exponent of the gradient-regularization baseline.
    #[arg(long)]
    gamma: Option<f64>,
    /// Approximation-band weight of the visible image (wavelet baseline).
    #[arg(long, alias = "omega_l")]
    omega_l: Option<f64>,
    /// Window size of the statistical baseline.
    #[arg(long, alias = "stat_window")]
    stat_window: Option<usize>,
    /// Decomposition depth of the wavelet baseline.
    #[arg(long, alias = "wavelet_levels")]
    wavelet_levels: Option<usize>,
    /// `haar` or `db4`.
    #[arg(long)]
    wavelet: Option<String>,
    /// Override the estimated nonlocal-means strength of the denoising pass.
    #[arg(long, alias = "denoise_h")]
    denoise_h: Option<f64>,
    /// Scale chroma magnitude after colorizing.
    #[arg(long, alias = "chroma_boost")]
    chroma_boost: bool,
    /// Gaussian width of the contrast measure.
    #[arg(long, alias = "contrast_sigma")]
    contrast_sigma: Option<f64>,
}

impl ParamArgs {
    fn overrides(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        let mut put = |k: &'static str, v: Option<String>| {
            if let Some(v) = v {
                out.push((k, v));
            }
        };
        let s = |v: Option<f64>| v.map(|x| x.to_string());
        put("m", self.m.map(|v| v.to_string()));
        put("mu_c", s(self.mu_c));
        put("mu_d", s(self.mu_d));
        put("nlm_patch_radius", self.nlm_patch_radius.map(|v| v.to_string()));
        put("nlm_search_radius", self.nlm_search_radius.map(|v| v.to_string()));
        put("nlm_h", s(self.nlm_h));
        put("slope_floor", s(self.slope_floor));
        put("chroma_scale", s(self.chroma_scale));
        put("denoise_first", self.denoise_first.then(|| "true".into()));
        put("metrics_out", self.metrics_out.as_ref().map(|p| p.display().to_string()));
        put("mu_g", s(self.mu_g));
        put("gamma", s(self.gamma));
        put("omega_l", s(self.omega_l));
        put("stat_window", self.stat_window.map(|v| v.to_string()));
        put("wavelet_levels", self.wavelet_levels.map(|v| v.to_string()));
        put("wavelet", self.wavelet.clone());
        put("denoise_h", s(self.denoise_h));
        put("chroma_boost", self.chroma_boost.then(|| "true".into()));
        put("contrast_sigma", s(self.contrast_sigma));
        out
    }
}

fn build_config(file: Option<&Path>, params: &ParamArgs, method: Option<Method>) -> nirfuse::Result<PipelineConfig> {
    let mut cfg = PipelineConfig::default();
    if let Some(path) = file {
        cfg.apply_file(path)?;
    }
    for (key, value) in params.overrides() {
        cfg.set(key, &value)?;
    }
    if let Some(m) = method {
        cfg.method = m;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn load_pair(vis: &Path, nir: &Path) -> nirfuse::Result<(RgbImage, ImagePlane)> {
    let vis = load_image(vis)?.into_rgb();
    let nir = load_image(nir)?.into_gray();
    Ok((vis, nir))
}

enum Outcome {
    Clean,
    Warned,
}

fn run_pair(cli: &Cli, args: &RunArgs, method: Option<Method>, denoise: bool) -> nirfuse::Result<Outcome> {
    let cfg = build_config(cli.config.as_deref(), &args.params, method)?;
    let (vis, nir) = load_pair(&args.vis, &args.nir)?;
    let PipelineOutput { image, warnings } = if denoise {
        pipeline::denoise_report(&vis, &nir, &cfg)?
    } else {
        pipeline::colorize_report(&vis, &nir, &cfg)?
    };
    let depth = match args.depth {
        Depth::Eight => BitDepth::Eight,
        Depth::Sixteen => BitDepth::Sixteen,
    };
    save_image(&Image::Rgb(image.clone()), &args.out, depth)?;
    if cfg.metrics_out.is_some() {
        pipeline::run_metrics(&image, &cfg)?;
    }
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    Ok(if warnings.is_empty() { Outcome::Clean } else { Outcome::Warned })
}

fn run_metrics(cli: &Cli, images: &[PathBuf], table: bool, sigma: Option<f64>) -> nirfuse::Result<Outcome> {
    let mut cfg = build_config(cli.config.as_deref(), &ParamArgs::default(), None)?;
    if let Some(s) = sigma {
        cfg.set("contrast_sigma", &s.to_string())?;
        cfg.validate()?;
    }
    let reports: Vec<QualityReport> = images
        .par_iter()
        .map(|path| {
            let img = load_image(path)?.into_rgb();
            let label = path.display().to_string();
            let params = [("contrast_sigma".to_string(), cfg.contrast_sigma.to_string())].into();
            pipeline::evaluate(&img, &label, params, cfg.contrast_sigma)
        })
        .collect::<nirfuse::Result<_>>()?;
    if table {
        print!("{}", render_table(&reports));
    } else {
        for r in &reports {
            println!("{}", r.to_json());
        }
    }
    Ok(Outcome::Clean)
}

fn run(cli: &Cli) -> nirfuse::Result<Outcome> {
    init_thread_pool()?;
    match &cli.command {
        Command::Colorize(args) => run_pair(cli, args, None, false),
        Command::Denoise(args) => run_pair(cli, args, None, true),
        Command::Fuse { method, run } => run_pair(cli, run, Some((*method).into()), false),
        Command::Metrics {
            images,
            table,
            contrast_sigma,
        } => run_metrics(cli, images, *table, *contrast_sigma),
        Command::Validate { vis, nir, m } => {
            let cfg = build_config(
                cli.config.as_deref(),
                &ParamArgs {
                    m: *m,
                    ..Default::default()
                },
                None,
            )?;
            let (vis, nir) = load_pair(vis, nir)?;
            let mse = pipeline::validate(&vis, &nir, cfg.m)?;
            println!("{mse:e}");
            Ok(Outcome::Clean)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Outcome::Clean) => ExitCode::SUCCESS,
        Ok(Outcome::Warned) if cli.strict => ExitCode::from(EXIT_WARNING),
        Ok(Outcome::Warned) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::DimensionMismatch { .. } = e {
                eprintln!("the visible and NIR images must be pixel-aligned and the same size");
            }
            ExitCode::from(EXIT_INPUT)
        }
    }
}
