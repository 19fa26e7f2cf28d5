//! Square patch extraction, spatial weights, and local statistics.

use crate::error::{ensure_odd_window, Error, Result};
use crate::image::ImagePlane;

/// An `m × m` neighborhood read in raster order with replicate padding.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchWindow {
    center: usize,
    size: usize,
    values: Vec<f64>,
}

impl PatchWindow {
    /// Raster index of the center pixel in the source plane.
    pub fn center(&self) -> usize {
        self.center
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn center_value(&self) -> f64 {
        self.values[self.values.len() / 2]
    }
}

pub fn extract_patch(plane: &ImagePlane, index: usize, m: usize) -> Result<PatchWindow> {
    ensure_odd_window(m)?;
    if index >= plane.len() {
        return Err(Error::Parameter(format!(
            "pixel index {index} outside a plane of {} pixels",
            plane.len()
        )));
    }
    let r = (m / 2) as isize;
    let (cx, cy) = ((index % plane.width()) as isize, (index / plane.width()) as isize);
    let mut values = Vec::with_capacity(m * m);
    for dy in -r..=r {
        for dx in -r..=r {
            values.push(plane.get_clamped(cx + dx, cy + dy));
        }
    }
    Ok(PatchWindow {
        center: index,
        size: m,
        values,
    })
}

/// Diagonal of the spatial weighting matrix for an `m × m` window.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialWeights {
    size: usize,
    diag: Vec<f64>,
}

impl SpatialWeights {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    /// Weight at offset `(dx, dy)` from the window center.
    pub fn at(&self, dx: isize, dy: isize) -> f64 {
        let r = (self.size / 2) as isize;
        self.diag[((dy + r) as usize) * self.size + (dx + r) as usize]
    }
}

/// Default Gaussian width for an `m × m` window.
pub fn default_sigma(m: usize) -> f64 {
    m as f64 / 3.0
}

/// Gaussian falloff `exp(−(dx² + dy²) / (2σ²))`, equal to 1 at the center.
pub fn spatial_weights(m: usize, sigma_s: f64) -> Result<SpatialWeights> {
    ensure_odd_window(m)?;
    if !(sigma_s > 0.0) || !sigma_s.is_finite() {
        return Err(Error::Parameter(format!("sigma_s must be positive, got {sigma_s}")));
    }
    let r = (m / 2) as isize;
    let denom = 2.0 * sigma_s * sigma_s;
    let mut diag = Vec::with_capacity(m * m);
    for dy in -r..=r {
        for dx in -r..=r {
            diag.push((-((dx * dx + dy * dy) as f64) / denom).exp());
        }
    }
    Ok(SpatialWeights { size: m, diag })
}

/// Unweighted mean and population variance of a patch.
pub fn local_stats(patch: &PatchWindow) -> (f64, f64) {
    mean_and_variance(&patch.values)
}

pub(crate) fn mean_and_variance(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    // shifted by the first sample so constant windows are exact
    let shift = values.first().copied().unwrap_or(0.0);
    let mean = shift + values.iter().map(|v| v - shift).sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.max(0.0))
}
