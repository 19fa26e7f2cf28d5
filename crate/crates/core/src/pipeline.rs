//! End-to-end coloring and denoising, configuration and reporting.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use crate::baselines::{
    gradient_reg_solve, naive_colorize, statistical_fuse, wavelet_colorize, with_luminance, BaselineParams, Wavelet,
};
use crate::chroma::{chroma_map, transfer_colors, ChromaParams};
use crate::color::{backward_opponent, forward_opponent, luminance_of, OpponentImage};
use crate::detail::{transfer_detail, DetailSolveParams, DEFAULT_MU_D};
use crate::error::{ensure_odd_window, ensure_same_dims, Error, Result};
use crate::image::{ImagePlane, RgbImage};
use crate::mapping::{apply_mapping, solve_mapping, validate_linearity, MappingParams, DEFAULT_MU_C, DEFAULT_WINDOW};
use crate::metrics::{colorfulness, contrast_measure, entropy, spatial_frequency, QualityReport, DEFAULT_CONTRAST_SIGMA};
use crate::nlm::{nlm_filter, NlmParams};

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "NIRFUSE_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    #[default]
    Proposed,
    Naive,
    GradReg,
    Wavelet,
    Statistical,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Proposed,
        Method::Naive,
        Method::GradReg,
        Method::Wavelet,
        Method::Statistical,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Proposed => "proposed",
            Method::Naive => "naive",
            Method::GradReg => "gradreg",
            Method::Wavelet => "wavelet",
            Method::Statistical => "statistical",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown method {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// Odd window size of the contrast-preserving mapping.
    pub m: usize,
    pub mu_c: f64,
    pub mu_d: f64,
    /// Filter used to split base and detail layers.
    pub nlm: NlmParams,
    pub chroma: ChromaParams,
    pub method: Method,
    /// Run the initial NLM denoising on the visible image first.
    pub denoise_first: bool,
    pub metrics_out: Option<PathBuf>,
    pub baselines: BaselineParams,
    /// Fixed strength for the initial denoising; estimated per channel if unset.
    pub denoise_h: Option<f64>,
    /// Scale the output chroma by `chroma.chroma_scale`.
    pub chroma_boost: bool,
    pub contrast_sigma: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            m: DEFAULT_WINDOW,
            mu_c: DEFAULT_MU_C,
            mu_d: DEFAULT_MU_D,
            nlm: NlmParams::base_layer(),
            chroma: ChromaParams::default(),
            method: Method::Proposed,
            denoise_first: false,
            metrics_out: None,
            baselines: BaselineParams::default(),
            denoise_h: None,
            chroma_boost: false,
            contrast_sigma: DEFAULT_CONTRAST_SIGMA,
        }
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value {value:?} for {key}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(Error::Config(format!("invalid boolean {value:?} for {key}"))),
    }
}

impl PipelineConfig {
    /// Keys accepted by [`PipelineConfig::set`].
    pub const KEYS: [&'static str; 20] = [
        "m",
        "mu_c",
        "mu_d",
        "nlm_patch_radius",
        "nlm_search_radius",
        "nlm_h",
        "slope_floor",
        "chroma_scale",
        "method",
        "denoise_first",
        "metrics_out",
        "mu_g",
        "gamma",
        "omega_l",
        "stat_window",
        "wavelet_levels",
        "wavelet",
        "denoise_h",
        "chroma_boost",
        "contrast_sigma",
    ];

    /// Sets one field from its textual form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "m" => self.m = parse_num(key, value)?,
            "mu_c" => self.mu_c = parse_num(key, value)?,
            "mu_d" => self.mu_d = parse_num(key, value)?,
            "nlm_patch_radius" => self.nlm.patch_radius = parse_num(key, value)?,
            "nlm_search_radius" => self.nlm.search_radius = parse_num(key, value)?,
            "nlm_h" => self.nlm.h = parse_num(key, value)?,
            "slope_floor" => self.chroma.slope_floor = parse_num(key, value)?,
            "chroma_scale" => self.chroma.chroma_scale = parse_num(key, value)?,
            "method" => self.method = value.parse()?,
            "denoise_first" => self.denoise_first = parse_bool(key, value)?,
            "metrics_out" => self.metrics_out = (!value.is_empty()).then(|| PathBuf::from(value)),
            "mu_g" => self.baselines.mu_g = parse_num(key, value)?,
            "gamma" => self.baselines.gamma = parse_num(key, value)?,
            "omega_l" => self.baselines.omega_l = parse_num(key, value)?,
            "stat_window" => self.baselines.stat_window = parse_num(key, value)?,
            "wavelet_levels" => self.baselines.wavelet_levels = parse_num(key, value)?,
            "wavelet" => {
                self.baselines.wavelet = match value {
                    "haar" => Wavelet::Haar,
                    "db4" => Wavelet::Db4,
                    _ => return Err(Error::Config(format!("unknown wavelet {value:?}"))),
                }
            }
            "denoise_h" => self.denoise_h = if value.is_empty() { None } else { Some(parse_num(key, value)?) },
            "chroma_boost" => self.chroma_boost = parse_bool(key, value)?,
            "contrast_sigma" => self.contrast_sigma = parse_num(key, value)?,
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Applies flat `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", no + 1)))?;
            self.set(key.trim(), value)
                .map_err(|e| Error::Config(format!("line {}: {e}", no + 1)))?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies a config file on top of the current values without
    /// validating, so later overrides can still fix individual keys.
    pub fn apply_file(&mut self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        self.apply_text(&text)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_file(path)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Every field in `key = value` form.
    pub fn to_pairs(&self) -> BTreeMap<String, String> {
        let b = &self.baselines;
        let pairs: [(&str, String); 20] = [
            ("m", self.m.to_string()),
            ("mu_c", self.mu_c.to_string()),
            ("mu_d", self.mu_d.to_string()),
            ("nlm_patch_radius", self.nlm.patch_radius.to_string()),
            ("nlm_search_radius", self.nlm.search_radius.to_string()),
            ("nlm_h", self.nlm.h.to_string()),
            ("slope_floor", self.chroma.slope_floor.to_string()),
            ("chroma_scale", self.chroma.chroma_scale.to_string()),
            ("method", self.method.to_string()),
            ("denoise_first", self.denoise_first.to_string()),
            (
                "metrics_out",
                self.metrics_out.as_ref().map(|p| p.display().to_string()).unwrap_or_default(),
            ),
            ("mu_g", b.mu_g.to_string()),
            ("gamma", b.gamma.to_string()),
            ("omega_l", b.omega_l.to_string()),
            ("stat_window", b.stat_window.to_string()),
            ("wavelet_levels", b.wavelet_levels.to_string()),
            (
                "wavelet",
                match b.wavelet {
                    Wavelet::Haar => "haar",
                    Wavelet::Db4 => "db4",
                }
                .to_string(),
            ),
            ("denoise_h", self.denoise_h.map(|h| h.to_string()).unwrap_or_default()),
            ("chroma_boost", self.chroma_boost.to_string()),
            ("contrast_sigma", self.contrast_sigma.to_string()),
        ];
        pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        ensure_odd_window(self.m)?;
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Parameter(format!("{name} must be positive, got {v}")))
            }
        };
        positive("mu_c", self.mu_c)?;
        positive("mu_d", self.mu_d)?;
        positive("contrast_sigma", self.contrast_sigma)?;
        if let Some(h) = self.denoise_h {
            positive("denoise_h", h)?;
        }
        self.nlm.validate()?;
        self.chroma.validate()?;
        self.baselines.validate()
    }

    fn mapping_params(&self) -> MappingParams {
        MappingParams::new(self.m, self.mu_c)
    }
}

/// Image plus any numerical warnings raised on the way.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub image: RgbImage,
    pub warnings: Vec<String>,
}

fn proposed(vis: &RgbImage, nir: &ImagePlane, cfg: &PipelineConfig, warnings: &mut Vec<String>) -> Result<RgbImage> {
    let opp = forward_opponent(vis);
    let field = solve_mapping(&opp.l, nir, &cfg.mapping_params())?;
    if !field.fallback_pixels.is_empty() {
        warnings.push(format!(
            "{} pixels used the singular-system fallback",
            field.fallback_pixels.len()
        ));
    }
    let mapped = apply_mapping(nir, &field)?;
    let detail = transfer_detail(&mapped, nir, &cfg.nlm, &DetailSolveParams::with_mu_d(cfg.mu_d))?;
    if detail.solution.non_monotone {
        warnings.push("detail transfer objective increased between stages".into());
    }
    let (c1, c2) = transfer_colors(&opp.c1, &opp.c2, &field, &cfg.chroma)?;
    Ok(backward_opponent(&OpponentImage::new(detail.output, c1, c2)?))
}

fn boost(img: &RgbImage, s: f64) -> Result<RgbImage> {
    let opp = forward_opponent(img);
    let (c1, c2) = chroma_map(&opp.c1, &opp.c2, s)?;
    Ok(backward_opponent(&OpponentImage::new(opp.l, c1, c2)?))
}

fn dispatch(vis: &RgbImage, nir: &ImagePlane, cfg: &PipelineConfig) -> Result<PipelineOutput> {
    let mut warnings = Vec::new();
    let image = match cfg.method {
        Method::Proposed => proposed(vis, nir, cfg, &mut warnings)?,
        Method::Naive => naive_colorize(nir, vis)?,
        Method::GradReg => {
            let sol = gradient_reg_solve(&luminance_of(vis), nir, cfg.baselines.mu_g, cfg.baselines.gamma)?;
            if sol.diverged {
                warnings.push("gradient regularization objective increased between rounds".into());
            }
            with_luminance(vis, &sol.fused)?
        }
        Method::Wavelet => wavelet_colorize(vis, nir, &cfg.baselines)?,
        Method::Statistical => statistical_fuse(vis, nir, cfg.baselines.stat_window)?,
    };
    let image = if cfg.chroma_boost {
        boost(&image, cfg.chroma.chroma_scale)?
    } else {
        image
    };
    if !image.is_finite() {
        return Err(Error::Parameter("pipeline produced non-finite values".into()));
    }
    Ok(PipelineOutput { image, warnings })
}

/// Colors the NIR image with the configured method.
pub fn colorize_report(vis: &RgbImage, nir: &ImagePlane, cfg: &PipelineConfig) -> Result<PipelineOutput> {
    ensure_same_dims(vis.dims(), nir.dims())?;
    cfg.validate()?;
    if cfg.denoise_first {
        let vis = initial_denoise(vis, cfg)?;
        dispatch(&vis, nir, cfg)
    } else {
        dispatch(vis, nir, cfg)
    }
}

pub fn colorize(vis: &RgbImage, nir: &ImagePlane, cfg: &PipelineConfig) -> Result<RgbImage> {
    Ok(colorize_report(vis, nir, cfg)?.image)
}

/// NLM on each channel with the denoising preset.
pub fn initial_denoise(vis: &RgbImage, cfg: &PipelineConfig) -> Result<RgbImage> {
    let planes: Vec<ImagePlane> = vis
        .channels()
        .par_iter()
        .map(|c| {
            let mut params = NlmParams::denoising(c);
            if let Some(h) = cfg.denoise_h {
                params.h = h;
            }
            nlm_filter(c, &params)
        })
        .collect::<Result<_>>()?;
    let [r, g, b]: [ImagePlane; 3] = planes.try_into().expect("three channels");
    RgbImage::new(r, g, b)
}

/// Initial denoising followed by coloring with the NIR image.
pub fn denoise_report(vis_noisy: &RgbImage, nir: &ImagePlane, cfg: &PipelineConfig) -> Result<PipelineOutput> {
    ensure_same_dims(vis_noisy.dims(), nir.dims())?;
    cfg.validate()?;
    let denoised = initial_denoise(vis_noisy, cfg)?;
    dispatch(&denoised, nir, cfg)
}

pub fn denoise(vis_noisy: &RgbImage, nir: &ImagePlane, cfg: &PipelineConfig) -> Result<RgbImage> {
    Ok(denoise_report(vis_noisy, nir, cfg)?.image)
}

/// All four measures of one image.
pub fn evaluate(img: &RgbImage, method: &str, params: BTreeMap<String, String>, contrast_sigma: f64) -> Result<QualityReport> {
    let lum = luminance_of(img);
    Ok(QualityReport {
        method: method.to_string(),
        params,
        ct: contrast_measure(&lum, contrast_sigma)?,
        en: entropy(img),
        sf: spatial_frequency(&lum),
        cf: colorfulness(img),
    })
}

/// Measures `img` and writes the JSON report to `metrics_out` when set.
pub fn run_metrics(img: &RgbImage, cfg: &PipelineConfig) -> Result<QualityReport> {
    let report = evaluate(img, cfg.method.as_str(), cfg.to_pairs(), cfg.contrast_sigma)?;
    if let Some(path) = &cfg.metrics_out {
        std::fs::write(path, report.to_json() + "\n").map_err(|source| Error::Io {
            path: path.clone(),
            source,
        })?;
    }
    Ok(report)
}

/// Linear-model MSE between the visible luminance and the NIR image.
pub fn validate(vis: &RgbImage, nir: &ImagePlane, m: usize) -> Result<f64> {
    ensure_same_dims(vis.dims(), nir.dims())?;
    validate_linearity(&luminance_of(vis), nir, m)
}

/// Worker count from `NIRFUSE_THREADS`, if set.
pub fn thread_limit() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::Config(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        },
        _ => Ok(None),
    }
}

/// Sizes the global rayon pool from `NIRFUSE_THREADS`. Returns the limit
/// that was applied, if any.
pub fn init_thread_pool() -> Result<Option<usize>> {
    let limit = thread_limit()?;
    if let Some(n) = limit {
        if rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
            log::debug!("global thread pool already initialized");
        }
    }
    Ok(limit)
}
