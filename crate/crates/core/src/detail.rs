//! Detail-layer transfer.
//!
//! Both the mapped luminance and the captured NIR plane are split into
//! base + detail with nonlocal means. A new detail layer is then found by
//!
//! ```text
//! min_Δ  μ_d ‖Δ − Δ_mapped‖² + Σ_j ‖D_j Δ − D_j Δ_nir‖₁
//! ```
//!
//! with `D_j` the periodic forward differences, and added back onto the base
//! of the mapped luminance. The problem is solved by half-quadratic
//! splitting: an auxiliary `v_j ≈ D_j Δ − D_j Δ_nir` is updated by soft
//! thresholding and Δ by an exact Fourier-domain solve, while the coupling
//! weight β grows geometrically.

use rustfft::num_complex::Complex;

use crate::error::{ensure_same_dims, Error, Result};
use crate::fft::Fft2;
use crate::image::ImagePlane;
use crate::nlm::{base_layer, NlmParams};

pub const DEFAULT_MU_D: f64 = 200.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Horizontal,
    Vertical,
}

/// Forward difference `p(x+1) − p(x)` along `axis`, wrapping at the border.
pub fn gradient(plane: &ImagePlane, axis: Axis) -> ImagePlane {
    let (w, h) = plane.dims();
    ImagePlane::from_fn(w, h, |x, y| match axis {
        Axis::Horizontal => plane.get((x + 1) % w, y) - plane.get(x, y),
        Axis::Vertical => plane.get(x, (y + 1) % h) - plane.get(x, y),
    })
}

/// Adjoint of [`gradient`]: `g(x−1) − g(x)`.
pub(crate) fn gradient_adjoint(g: &ImagePlane, axis: Axis) -> ImagePlane {
    let (w, h) = g.dims();
    ImagePlane::from_fn(w, h, |x, y| match axis {
        Axis::Horizontal => g.get((x + w - 1) % w, y) - g.get(x, y),
        Axis::Vertical => g.get(x, (y + h - 1) % h) - g.get(x, y),
    })
}

/// `sign(t) · max(|t| − τ, 0)`.
#[inline]
pub fn soft_threshold(t: f64, tau: f64) -> f64 {
    if t > tau {
        t - tau
    } else if t < -tau {
        t + tau
    } else {
        0.0
    }
}

/// Geometric penalty schedule for the splitting solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaSchedule {
    /// Starting β; `None` means `μ_d / 20`.
    pub initial: Option<f64>,
    pub factor: f64,
    pub max: f64,
}

impl Default for BetaSchedule {
    fn default() -> Self {
        Self {
            initial: None,
            factor: 2.0,
            max: f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetailSolveParams {
    pub mu_d: f64,
    /// Number of β stages.
    pub iterations: usize,
    /// Alternations per stage.
    pub inner: usize,
    pub beta: BetaSchedule,
}

impl Default for DetailSolveParams {
    fn default() -> Self {
        Self {
            mu_d: DEFAULT_MU_D,
            iterations: 14,
            inner: 5,
            beta: BetaSchedule::default(),
        }
    }
}

impl DetailSolveParams {
    pub fn with_mu_d(mu_d: f64) -> Self {
        Self {
            mu_d,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.mu_d > 0.0) || !self.mu_d.is_finite() {
            return Err(Error::Parameter(format!("mu_d must be positive, got {}", self.mu_d)));
        }
        if self.iterations < 1 || self.inner < 1 {
            return Err(Error::Parameter("detail solver needs at least one iteration".into()));
        }
        let b0 = self.beta.initial.unwrap_or(self.mu_d / 20.0);
        if !(b0 > 0.0) || !(self.beta.factor >= 1.0) || !(self.beta.max >= b0) {
            return Err(Error::Parameter("beta schedule must start positive and not decrease".into()));
        }
        Ok(())
    }

    /// β value used at each stage.
    pub fn betas(&self) -> Vec<f64> {
        let mut beta = self.beta.initial.unwrap_or(self.mu_d / 20.0);
        let mut out = Vec::with_capacity(self.iterations);
        for _ in 0..self.iterations {
            out.push(beta.min(self.beta.max));
            beta *= self.beta.factor;
        }
        out
    }
}

/// Exact objective: `μ_d ‖Δ − target‖² + Σ_j ‖D_j Δ − D_j guide‖₁`.
pub fn detail_objective(delta: &ImagePlane, target: &ImagePlane, guide: &ImagePlane, mu_d: f64) -> f64 {
    let data: f64 = delta
        .data()
        .iter()
        .zip(target.data())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    let mut reg = 0.0;
    for axis in [Axis::Horizontal, Axis::Vertical] {
        let gd = gradient(delta, axis);
        let gg = gradient(guide, axis);
        reg += gd.data().iter().zip(gg.data()).map(|(a, b)| (a - b).abs()).sum::<f64>();
    }
    mu_d * data + reg
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetailSolution {
    /// Lowest-objective iterate found.
    pub detail: ImagePlane,
    /// Objective at the starting point (the mapped detail layer).
    pub initial_objective: f64,
    /// Objective after each β stage.
    pub objective_trace: Vec<f64>,
    /// Set when the objective rose between consecutive stages.
    pub non_monotone: bool,
}

impl DetailSolution {
    pub fn objective(&self) -> f64 {
        self.objective_trace
            .iter()
            .copied()
            .fold(self.initial_objective, f64::min)
    }
}

/// Quadratic Δ-step: `(μ_d + β Σ D_jᵀD_j) Δ = μ_d·target + β Σ D_jᵀ rhs_j`.
pub(crate) fn solve_quadratic(
    fft: &Fft2,
    eig: &[f64],
    target: &ImagePlane,
    rhs_h: &ImagePlane,
    rhs_v: &ImagePlane,
    mu_d: f64,
    beta: f64,
) -> ImagePlane {
    let ah = gradient_adjoint(rhs_h, Axis::Horizontal);
    let av = gradient_adjoint(rhs_v, Axis::Vertical);
    let rhs: Vec<f64> = target
        .data()
        .iter()
        .zip(ah.data())
        .zip(av.data())
        .map(|((t, a), b)| mu_d * t + beta * (a + b))
        .collect();
    let spec: Vec<Complex<f64>> = fft
        .forward(&rhs)
        .into_iter()
        .zip(eig)
        .map(|(c, &e)| c / (mu_d + beta * e))
        .collect();
    ImagePlane::new(target.width(), target.height(), fft.inverse(spec)).expect("sized from target")
}

/// Minimizes the detail objective for given target and guide detail layers.
pub fn solve_detail(target: &ImagePlane, guide: &ImagePlane, params: &DetailSolveParams) -> Result<DetailSolution> {
    ensure_same_dims(target.dims(), guide.dims())?;
    params.validate()?;
    let (w, h) = target.dims();
    let mu_d = params.mu_d;
    let fft = Fft2::new(w, h);
    let eig = fft.laplacian_eigenvalues();
    let guide_h = gradient(guide, Axis::Horizontal);
    let guide_v = gradient(guide, Axis::Vertical);

    let initial_objective = detail_objective(target, target, guide, mu_d);
    let mut best = target.clone();
    let mut best_obj = initial_objective;
    let mut prev_obj = initial_objective;
    let mut delta = target.clone();
    let mut trace = Vec::with_capacity(params.iterations);
    let mut non_monotone = false;

    for beta in params.betas() {
        let tau = 1.0 / (2.0 * beta);
        for _ in 0..params.inner {
            // v-step, folded straight into the right-hand side v_j + D_j guide
            let dh = gradient(&delta, Axis::Horizontal);
            let dv = gradient(&delta, Axis::Vertical);
            let rhs_h = dh
                .zip_map(&guide_h, |d, g| soft_threshold(d - g, tau) + g)
                .expect("same dims");
            let rhs_v = dv
                .zip_map(&guide_v, |d, g| soft_threshold(d - g, tau) + g)
                .expect("same dims");
            delta = solve_quadratic(&fft, &eig, target, &rhs_h, &rhs_v, mu_d, beta);
        }
        let obj = detail_objective(&delta, target, guide, mu_d);
        if obj > prev_obj + 1e-9 * prev_obj.abs().max(1.0) {
            non_monotone = true;
        }
        if obj < best_obj {
            best_obj = obj;
            best = delta.clone();
        }
        prev_obj = obj;
        trace.push(obj);
    }
    if non_monotone {
        log::warn!("detail transfer objective increased between stages; returning best iterate");
    }
    Ok(DetailSolution {
        detail: best,
        initial_objective,
        objective_trace: trace,
        non_monotone,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetailTransfer {
    /// Base of the mapped luminance plus the solved detail layer.
    pub output: ImagePlane,
    pub base: ImagePlane,
    pub mapped_detail: ImagePlane,
    pub nir_detail: ImagePlane,
    pub solution: DetailSolution,
}

/// Pulls the detail gradients of `new_l` toward those of `nir`.
pub fn transfer_detail(
    new_l: &ImagePlane,
    nir: &ImagePlane,
    nlm: &NlmParams,
    params: &DetailSolveParams,
) -> Result<DetailTransfer> {
    ensure_same_dims(new_l.dims(), nir.dims())?;
    let mapped = base_layer(new_l, nlm)?;
    let captured = base_layer(nir, nlm)?;
    let solution = solve_detail(&mapped.detail, &captured.detail, params)?;
    let output = mapped.base.zip_map(&solution.detail, |b, d| b + d)?;
    Ok(DetailTransfer {
        output,
        base: mapped.base,
        mapped_detail: mapped.detail,
        nir_detail: captured.detail,
        solution,
    })
}
