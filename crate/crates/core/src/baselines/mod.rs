//! Comparison methods.

mod gradreg;
mod statistical;
mod wavelet;

pub use gradreg::{gradient_reg_fuse, gradient_reg_solve, gradreg_objective, GradRegSolution, IRLS_EPSILON, IRLS_ROUNDS};
pub use statistical::{local_mean_std, statistical_fuse, STD_FLOOR};
pub use wavelet::{
    dwt2, fuse_pyramids, idwt2, max_magnitude, wavelet_fuse, wavelet_fuse_with, Subbands, Wavelet, WaveletPyramid,
};

use crate::color::{backward_opponent, forward_opponent, OpponentImage};
use crate::error::{ensure_odd_window, ensure_same_dims, Error, Result};
use crate::image::{ImagePlane, RgbImage};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineParams {
    /// Data weight of the gradient-regularized fusion.
    pub mu_g: f64,
    /// Sparsity exponent of the gradient penalty.
    pub gamma: f64,
    /// Weight of the visible image in the approximation subband.
    pub omega_l: f64,
    pub stat_window: usize,
    pub wavelet_levels: usize,
    pub wavelet: Wavelet,
}

impl Default for BaselineParams {
    fn default() -> Self {
        Self {
            mu_g: 1e3,
            gamma: 0.8,
            omega_l: 0.5,
            stat_window: 7,
            wavelet_levels: 3,
            wavelet: Wavelet::Haar,
        }
    }
}

impl BaselineParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu_g > 0.0) || !self.mu_g.is_finite() {
            return Err(Error::Parameter(format!("mu_g must be positive, got {}", self.mu_g)));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::Parameter(format!("gamma must lie in (0, 1], got {}", self.gamma)));
        }
        if !(0.0..=1.0).contains(&self.omega_l) {
            return Err(Error::Parameter(format!("omega_l must lie in [0, 1], got {}", self.omega_l)));
        }
        ensure_odd_window(self.stat_window)?;
        if self.wavelet_levels == 0 {
            return Err(Error::Parameter("wavelet_levels must be at least 1".into()));
        }
        Ok(())
    }
}

/// Replaces the luminance of `vis` with `lum`, keeping its chrominance.
pub fn with_luminance(vis: &RgbImage, lum: &ImagePlane) -> Result<RgbImage> {
    ensure_same_dims(vis.dims(), lum.dims())?;
    let opp = forward_opponent(vis);
    Ok(backward_opponent(&OpponentImage::new(lum.clone(), opp.c1, opp.c2)?))
}

/// NIR plane as luminance under the visible chrominance.
pub fn naive_colorize(nir: &ImagePlane, vis: &RgbImage) -> Result<RgbImage> {
    with_luminance(vis, nir)
}

pub fn gradient_reg_colorize(vis: &RgbImage, nir: &ImagePlane, params: &BaselineParams) -> Result<RgbImage> {
    params.validate()?;
    ensure_same_dims(vis.dims(), nir.dims())?;
    let opp = forward_opponent(vis);
    let fused = gradient_reg_fuse(&opp.l, nir, params.mu_g, params.gamma)?;
    Ok(backward_opponent(&OpponentImage::new(fused, opp.c1, opp.c2)?))
}

pub fn wavelet_colorize(vis: &RgbImage, nir: &ImagePlane, params: &BaselineParams) -> Result<RgbImage> {
    params.validate()?;
    ensure_same_dims(vis.dims(), nir.dims())?;
    let opp = forward_opponent(vis);
    let fused = wavelet_fuse_with(&opp.l, nir, params.omega_l, params.wavelet_levels, params.wavelet)?;
    Ok(backward_opponent(&OpponentImage::new(fused, opp.c1, opp.c2)?))
}
