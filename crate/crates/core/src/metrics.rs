//! No-reference quality measures on a 0–255 scale.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::color::forward_opponent;
use crate::error::{Error, Result};
use crate::image::{quantize, BitDepth, ImagePlane, RgbImage};

pub const SCALE: f64 = 255.0;
pub const DEFAULT_CONTRAST_SIGMA: f64 = 2.0;
const CHROMA_MEAN_WEIGHT: f64 = 0.94;

fn mean_var(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.clone().sum::<f64>() / n as f64;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    (mean, var)
}

/// Spread of the chrominance planes plus 0.94 times the mean chroma.
pub fn colorfulness(img: &RgbImage) -> f64 {
    let opp = forward_opponent(img);
    let (_, v1) = mean_var(opp.c1.data().iter().map(|v| v * SCALE));
    let (_, v2) = mean_var(opp.c2.data().iter().map(|v| v * SCALE));
    let (chroma, _) = mean_var(
        opp.c1
            .data()
            .iter()
            .zip(opp.c2.data())
            .map(|(a, b)| a.hypot(*b) * SCALE),
    );
    (v1 + v2).sqrt() + CHROMA_MEAN_WEIGHT * chroma
}

/// `sqrt(R² + C²)`, where R and C are the RMS of horizontal and vertical
/// first differences.
pub fn spatial_frequency(plane: &ImagePlane) -> f64 {
    let (w, h) = plane.dims();
    let rms = |sum: f64, n: usize| if n == 0 { 0.0 } else { (sum / n as f64).sqrt() };
    let mut row_sum = 0.0;
    let mut col_sum = 0.0;
    for y in 0..h {
        for x in 0..w {
            let v = plane.get(x, y) * SCALE;
            if x > 0 {
                let d = v - plane.get(x - 1, y) * SCALE;
                row_sum += d * d;
            }
            if y > 0 {
                let d = v - plane.get(x, y - 1) * SCALE;
                col_sum += d * d;
            }
        }
    }
    let rf = rms(row_sum, h * w.saturating_sub(1));
    let cf = rms(col_sum, w * h.saturating_sub(1));
    rf.hypot(cf)
}

/// Shannon entropy in bits of the 8-bit histogram of one plane.
pub fn entropy_plane(plane: &ImagePlane) -> f64 {
    let mut hist = [0usize; 256];
    for &v in plane.data() {
        hist[quantize(v, BitDepth::Eight) as usize] += 1;
    }
    let n = plane.len() as f64;
    hist.iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            p * (1.0 / p).log2()
        })
        .sum()
}

/// Sum of the per-channel entropies.
pub fn entropy(img: &RgbImage) -> f64 {
    img.channels().iter().map(entropy_plane).sum()
}

pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as isize;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= s);
    k
}

/// Separable Gaussian blur with replicate borders. Each tap is applied to
/// the difference from the center sample, so flat regions stay exact.
pub fn gaussian_blur(plane: &ImagePlane, sigma: f64) -> ImagePlane {
    let k = gaussian_kernel(sigma);
    let r = (k.len() / 2) as isize;
    let (w, h) = plane.dims();
    let horiz = ImagePlane::from_fn(w, h, |x, y| {
        let c = plane.get(x, y);
        c + k
            .iter()
            .enumerate()
            .map(|(i, kv)| kv * (plane.get_clamped(x as isize + i as isize - r, y as isize) - c))
            .sum::<f64>()
    });
    ImagePlane::from_fn(w, h, |x, y| {
        let c = horiz.get(x, y);
        c + k
            .iter()
            .enumerate()
            .map(|(i, kv)| kv * (horiz.get_clamped(x as isize, y as isize + i as isize - r) - c))
            .sum::<f64>()
    })
}

/// Mean absolute difference between the plane and its Gaussian blur.
pub fn contrast_measure(plane: &ImagePlane, sigma_k: f64) -> Result<f64> {
    if !(sigma_k > 0.0) || !sigma_k.is_finite() {
        return Err(Error::Parameter(format!("contrast sigma must be positive, got {sigma_k}")));
    }
    if plane.is_empty() {
        return Ok(0.0);
    }
    let blur = gaussian_blur(plane, sigma_k);
    let total: f64 = plane
        .data()
        .iter()
        .zip(blur.data())
        .map(|(a, b)| (a - b).abs())
        .sum();
    Ok(total / plane.len() as f64 * SCALE)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub method: String,
    #[serde(default)]
    pub params: BTreeMap<String, String>,
    pub ct: f64,
    pub en: f64,
    pub sf: f64,
    pub cf: f64,
}

impl QualityReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report is serializable")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }
}

/// Fixed-width text table with one row per report.
pub fn render_table(reports: &[QualityReport]) -> String {
    let width = reports.iter().map(|r| r.method.len()).max().unwrap_or(0).max(6);
    let mut out = String::new();
    let _ = writeln!(out, "{:<width$}  {:>8}  {:>8}  {:>8}  {:>8}", "method", "CT", "EN", "SF", "CF");
    for r in reports {
        let _ = writeln!(
            out,
            "{:<width$}  {:>8.3}  {:>8.3}  {:>8.3}  {:>8.3}",
            r.method, r.ct, r.en, r.sf, r.cf
        );
    }
    out
}
