//! Nonlocal means filtering and base/detail decomposition.
//!
//! Patch distances are evaluated one search offset at a time from running
//! sums of squared differences along each row. Patches read past the frame
//! with replicate padding; the search window is restricted to pixels inside
//! the frame. The center pixel gets the largest weight among its neighbors.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::ImagePlane;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NlmParams {
    pub patch_radius: usize,
    pub search_radius: usize,
    /// Filtering strength in intensity units.
    pub h: f64,
}

impl Default for NlmParams {
    fn default() -> Self {
        Self::base_layer()
    }
}

impl NlmParams {
    /// Preset for base-layer extraction.
    pub fn base_layer() -> Self {
        Self {
            patch_radius: 3,
            search_radius: 10,
            h: 10.0 / 255.0,
        }
    }

    /// Preset for the initial denoising pass, with `h` equal to the
    /// estimated noise standard deviation.
    pub fn denoising(plane: &ImagePlane) -> Self {
        Self {
            h: estimate_noise_sigma(plane).max(1e-6),
            ..Self::base_layer()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.patch_radius < 1 || self.search_radius < 1 {
            return Err(Error::Parameter("NLM radii must be at least 1".into()));
        }
        if !(self.h > 0.0) || !self.h.is_finite() {
            return Err(Error::Parameter(format!("NLM strength h must be positive, got {}", self.h)));
        }
        Ok(())
    }
}

/// Robust noise estimate from the finest diagonal (HH) Haar detail:
/// `median(|d|) / 0.6745` with `d = (a − b − c + e) / 2` over 2×2 blocks.
pub fn estimate_noise_sigma(plane: &ImagePlane) -> f64 {
    let (w, h) = plane.dims();
    let mut diag = Vec::with_capacity((w / 2) * (h / 2));
    for y in (0..h.saturating_sub(1)).step_by(2) {
        for x in (0..w.saturating_sub(1)).step_by(2) {
            let d = (plane.get(x, y) - plane.get(x + 1, y) - plane.get(x, y + 1) + plane.get(x + 1, y + 1)) / 2.0;
            diag.push(d.abs());
        }
    }
    if diag.is_empty() {
        return 0.0;
    }
    diag.sort_by(f64::total_cmp);
    let mid = diag.len() / 2;
    let median = if diag.len() % 2 == 0 {
        0.5 * (diag[mid - 1] + diag[mid])
    } else {
        diag[mid]
    };
    median / 0.6745
}

/// Replicate-padded copy of a plane.
struct Padded {
    data: Vec<f64>,
    stride: usize,
}

impl Padded {
    fn new(plane: &ImagePlane, pad: usize) -> Self {
        let (w, h) = plane.dims();
        let stride = w + 2 * pad;
        let rows = h + 2 * pad;
        let mut data = Vec::with_capacity(stride * rows);
        for y in 0..rows {
            for x in 0..stride {
                data.push(plane.get_clamped(x as isize - pad as isize, y as isize - pad as isize));
            }
        }
        Self { data, stride }
    }
}

pub fn nlm_filter(plane: &ImagePlane, params: &NlmParams) -> Result<ImagePlane> {
    params.validate()?;
    let (w, h) = plane.dims();
    if plane.is_empty() {
        return Ok(plane.clone());
    }
    let pr = params.patch_radius;
    let sr = params.search_radius;
    let pad = pr + sr;
    let padded = Padded::new(plane, pad);
    let area = ((2 * pr + 1) * (2 * pr + 1)) as f64;
    let inv = 1.0 / (params.h * params.h * area);

    // Each output row owns its accumulators; rows are independent so the
    // result does not depend on the thread count.
    let out: Vec<Vec<f64>> = (0..h)
        .into_par_iter()
        .map(|y| {
            let mut sum_w = vec![0.0; w];
            // weighted differences from the center value
            let mut sum_d = vec![0.0; w];
            let mut max_w = vec![0.0f64; w];
            // Squared differences for the rows covered by this row's patches,
            // prefix-summed along x, for one offset at a time.
            let span_w = w + 2 * pr;
            let mut prefix = vec![0.0; (2 * pr + 1) * (span_w + 1)];
            let mut col = vec![0.0; span_w + 1];
            let sri = sr as isize;
            for dy in -sri..=sri {
                let ny = y as isize + dy;
                if ny < 0 || ny >= h as isize {
                    continue;
                }
                for dx in -sri..=sri {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    // prefix sums of squared diffs for each patch row
                    for py in 0..(2 * pr + 1) {
                        let ry = y + pad + py - pr;
                        let row_a = &padded.data[ry * padded.stride..(ry + 1) * padded.stride];
                        let rb = (ry as isize + dy) as usize;
                        let row_b = &padded.data[rb * padded.stride..(rb + 1) * padded.stride];
                        let base = py * (span_w + 1);
                        prefix[base] = 0.0;
                        for sx in 0..span_w {
                            let xa = sx + pad - pr;
                            let xb = (xa as isize + dx) as usize;
                            let d = row_a[xa] - row_b[xb];
                            prefix[base + sx + 1] = prefix[base + sx] + d * d;
                        }
                    }
                    // column-sum the patch rows
                    for c in 0..=span_w {
                        let mut s = 0.0;
                        for py in 0..(2 * pr + 1) {
                            s += prefix[py * (span_w + 1) + c];
                        }
                        col[c] = s;
                    }
                    for x in 0..w {
                        let nx = x as isize + dx;
                        if nx < 0 || nx >= w as isize {
                            continue;
                        }
                        let dist = (col[x + 2 * pr + 1] - col[x]).max(0.0);
                        let weight = (-dist * inv).exp();
                        let diff = plane.get(nx as usize, ny as usize) - plane.get(x, y);
                        sum_w[x] += weight;
                        sum_d[x] += weight * diff;
                        if weight > max_w[x] {
                            max_w[x] = weight;
                        }
                    }
                }
            }
            (0..w)
                .map(|x| {
                    let center = plane.get(x, y);
                    let total = sum_w[x] + max_w[x];
                    if total > 0.0 {
                        center + sum_d[x] / total
                    } else {
                        // every neighbor weight underflowed
                        center
                    }
                })
                .collect()
        })
        .collect();

    ImagePlane::new(w, h, out.into_iter().flatten().collect())
}

/// Additive split of a plane into a smoothed base and a residual detail.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerPair {
    pub base: ImagePlane,
    pub detail: ImagePlane,
}

impl LayerPair {
    pub fn reconstruct(&self) -> ImagePlane {
        self.base
            .zip_map(&self.detail, |b, d| b + d)
            .expect("layers share dims")
    }
}

pub fn base_layer(plane: &ImagePlane, params: &NlmParams) -> Result<LayerPair> {
    let base = nlm_filter(plane, params)?;
    let detail = plane.zip_map(&base, |p, b| p - b)?;
    Ok(LayerPair { base, detail })
}
