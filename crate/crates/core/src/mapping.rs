//! Contrast-preserving per-pixel linear mapping from NIR to visible luminance.
//!
//! At every pixel a weighted ridge regression fits `vis ≈ slope · nir + bias`
//! over the surrounding `m × m` window:
//!
//! ```text
//! min_a ‖W^½ (p − Q a)‖² + μ_c ‖a − a⁰‖²,   Q = [nir_patch 1],  p = vis_patch
//! a = (QᵀWQ + μ_c I)⁻¹ (QᵀW p + μ_c a⁰)
//! ```
//!
//! The prior `a⁰ = (slope0, 0)` is a local-contrast estimate: the ratio of the
//! center pixel to its window mean, blended between the two images by their
//! local variances.

use rayon::prelude::*;

use crate::error::{ensure_odd_window, ensure_same_dims, Error, Result};
use crate::image::ImagePlane;
use crate::patch::{default_sigma, mean_and_variance, spatial_weights, PatchWindow, SpatialWeights};

/// Lower bound on window means in the local-contrast ratio.
pub const MEAN_FLOOR: f64 = 1e-4;

/// Ridge weight used when none is given.
pub const DEFAULT_MU_C: f64 = 7500.0;

pub const DEFAULT_WINDOW: usize = 7;

/// Relative determinant below which an unregularized 2×2 system is treated
/// as singular.
const SINGULAR_RTOL: f64 = 1e-12;

/// Prior for the per-pixel coefficients. The bias component is always zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContrastPrior {
    pub slope0: f64,
}

impl ContrastPrior {
    pub fn bias0(&self) -> f64 {
        0.0
    }
}

/// Blends the two center-to-mean contrast ratios by relative local variance.
#[inline]
pub(crate) fn prior_slope(nir: (f64, f64, f64), vis: (f64, f64, f64)) -> f64 {
    let (nir_center, nir_mean, nir_var) = nir;
    let (vis_center, vis_mean, vis_var) = vis;
    let total = nir_var + vis_var;
    let w_nir = if total > 0.0 { nir_var / total } else { 0.5 };
    let nir_ratio = nir_center / nir_mean.max(MEAN_FLOOR);
    let vis_ratio = vis_center / vis_mean.max(MEAN_FLOOR);
    w_nir * nir_ratio + (1.0 - w_nir) * vis_ratio
}

pub fn contrast_prior(nir_patch: &PatchWindow, vis_patch: &PatchWindow) -> Result<ContrastPrior> {
    if nir_patch.size() != vis_patch.size() {
        return Err(Error::Parameter(format!(
            "patch sizes differ: {} vs {}",
            nir_patch.size(),
            vis_patch.size()
        )));
    }
    let (nm, nv) = mean_and_variance(nir_patch.values());
    let (vm, vv) = mean_and_variance(vis_patch.values());
    Ok(ContrastPrior {
        slope0: prior_slope((nir_patch.center_value(), nm, nv), (vis_patch.center_value(), vm, vv)),
    })
}

/// Solver settings for [`solve_mapping`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MappingParams {
    /// Odd window size `m`.
    pub window: usize,
    pub mu_c: f64,
    /// Gaussian width of the spatial weights; `None` uses `m / 3`.
    pub sigma_s: Option<f64>,
}

impl Default for MappingParams {
    fn default() -> Self {
        Self {
            window: DEFAULT_WINDOW,
            mu_c: DEFAULT_MU_C,
            sigma_s: None,
        }
    }
}

impl MappingParams {
    pub fn new(window: usize, mu_c: f64) -> Self {
        Self {
            window,
            mu_c,
            sigma_s: None,
        }
    }

    fn validate(&self) -> Result<SpatialWeights> {
        ensure_odd_window(self.window)?;
        if !(self.mu_c >= 0.0) || !self.mu_c.is_finite() {
            return Err(Error::Parameter(format!("mu_c must be non-negative, got {}", self.mu_c)));
        }
        spatial_weights(self.window, self.sigma_s.unwrap_or_else(|| default_sigma(self.window)))
    }
}

/// Coefficients fitted at one pixel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelFit {
    pub slope: f64,
    pub bias: f64,
    pub prior: ContrastPrior,
    /// The system was singular and the prior fallback was used.
    pub fallback: bool,
}

/// Weighted and unweighted window sums needed for one pixel's solve.
#[derive(Debug, Default, Clone, Copy)]
struct WindowSums {
    w: f64,
    wn: f64,
    wnn: f64,
    wp: f64,
    wnp: f64,
    n: f64,
    nn: f64,
    p: f64,
    pp: f64,
    count: f64,
}

impl WindowSums {
    #[inline]
    fn push(&mut self, weight: f64, n: f64, p: f64) {
        self.w += weight;
        self.wn += weight * n;
        self.wnn += weight * n * n;
        self.wp += weight * p;
        self.wnp += weight * n * p;
        self.n += n;
        self.nn += n * n;
        self.p += p;
        self.pp += p * p;
        self.count += 1.0;
    }

    #[inline]
    fn solve(&self, nir_center: f64, vis_center: f64, mu_c: f64) -> PixelFit {
        let nir_mean = self.n / self.count;
        let vis_mean = self.p / self.count;
        let nir_var = (self.nn / self.count - nir_mean * nir_mean).max(0.0);
        let vis_var = (self.pp / self.count - vis_mean * vis_mean).max(0.0);
        let prior = ContrastPrior {
            slope0: prior_slope((nir_center, nir_mean, nir_var), (vis_center, vis_mean, vis_var)),
        };

        let a11 = self.wnn + mu_c;
        let a12 = self.wn;
        let a22 = self.w + mu_c;
        let b1 = self.wnp + mu_c * prior.slope0;
        let b2 = self.wp;
        let det = a11 * a22 - a12 * a12;
        if !(det > SINGULAR_RTOL * a11 * a22) {
            return PixelFit {
                slope: prior.slope0,
                bias: vis_mean - prior.slope0 * nir_mean,
                prior,
                fallback: true,
            };
        }
        PixelFit {
            slope: (a22 * b1 - a12 * b2) / det,
            bias: (a11 * b2 - a12 * b1) / det,
            prior,
            fallback: false,
        }
    }
}

/// Fits one pixel from explicit patches.
pub fn fit_patch(
    nir_patch: &PatchWindow,
    vis_patch: &PatchWindow,
    weights: &SpatialWeights,
    mu_c: f64,
) -> Result<PixelFit> {
    let m = weights.size();
    if nir_patch.size() != m || vis_patch.size() != m {
        return Err(Error::Parameter("patch and weight window sizes differ".into()));
    }
    let mut sums = WindowSums::default();
    for ((&w, &n), &p) in weights.diag().iter().zip(nir_patch.values()).zip(vis_patch.values()) {
        sums.push(w, n, p);
    }
    Ok(sums.solve(nir_patch.center_value(), vis_patch.center_value(), mu_c))
}

/// Per-pixel slope and bias planes.
#[derive(Debug, Clone, PartialEq)]
pub struct MappingField {
    pub slope: ImagePlane,
    pub bias: ImagePlane,
    /// Raster indices where the singular-system fallback was used.
    pub fallback_pixels: Vec<usize>,
}

impl MappingField {
    pub fn width(&self) -> usize {
        self.slope.width()
    }

    pub fn height(&self) -> usize {
        self.slope.height()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.slope.dims()
    }

    /// A field with constant slope and bias.
    pub fn uniform(width: usize, height: usize, slope: f64, bias: f64) -> Self {
        Self {
            slope: ImagePlane::filled(width, height, slope),
            bias: ImagePlane::filled(width, height, bias),
            fallback_pixels: Vec::new(),
        }
    }
}

/// Dense per-pixel ridge solve over the whole image.
pub fn solve_mapping(vis_l: &ImagePlane, nir: &ImagePlane, params: &MappingParams) -> Result<MappingField> {
    ensure_same_dims(vis_l.dims(), nir.dims())?;
    let weights = params.validate()?;
    let (w, h) = nir.dims();
    let r = (params.window / 2) as isize;

    let rows: Vec<Vec<PixelFit>> = (0..h)
        .into_par_iter()
        .map(|y| {
            (0..w)
                .map(|x| {
                    let mut sums = WindowSums::default();
                    let mut k = 0;
                    for dy in -r..=r {
                        for dx in -r..=r {
                            let (xx, yy) = (x as isize + dx, y as isize + dy);
                            sums.push(weights.diag()[k], nir.get_clamped(xx, yy), vis_l.get_clamped(xx, yy));
                            k += 1;
                        }
                    }
                    sums.solve(nir.get(x, y), vis_l.get(x, y), params.mu_c)
                })
                .collect()
        })
        .collect();

    let mut slope = Vec::with_capacity(w * h);
    let mut bias = Vec::with_capacity(w * h);
    let mut fallback_pixels = Vec::new();
    for (i, fit) in rows.into_iter().flatten().enumerate() {
        slope.push(fit.slope);
        bias.push(fit.bias);
        if fit.fallback {
            fallback_pixels.push(i);
        }
    }
    if !fallback_pixels.is_empty() {
        log::debug!("mapping used prior fallback at {} pixels", fallback_pixels.len());
    }
    Ok(MappingField {
        slope: ImagePlane::new(w, h, slope)?,
        bias: ImagePlane::new(w, h, bias)?,
        fallback_pixels,
    })
}

/// `nir · slope + bias`, elementwise.
pub fn apply_mapping(nir: &ImagePlane, field: &MappingField) -> Result<ImagePlane> {
    ensure_same_dims(field.dims(), nir.dims())?;
    let data = nir
        .data()
        .iter()
        .zip(field.slope.data())
        .zip(field.bias.data())
        .map(|((&n, &s), &b)| n * s + b)
        .collect();
    ImagePlane::new(nir.width(), nir.height(), data)
}

/// Mean squared error of the unregularized local linear model.
pub fn validate_linearity(vis_l: &ImagePlane, nir: &ImagePlane, window: usize) -> Result<f64> {
    let field = solve_mapping(vis_l, nir, &MappingParams::new(window, 0.0))?;
    let mapped = apply_mapping(nir, &field)?;
    let sse: f64 = vis_l
        .data()
        .iter()
        .zip(mapped.data())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(sse / vis_l.len() as f64)
}
