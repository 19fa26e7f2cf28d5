//! Local statistics transfer: luminance and chrominance are rescaled so the
//! visible image takes on the local mean and spread of the NIR image.

use rayon::prelude::*;

use crate::color::{backward_opponent, forward_opponent, OpponentImage};
use crate::error::{ensure_odd_window, ensure_same_dims, Result};
use crate::image::{ImagePlane, RgbImage};
use crate::patch::{extract_patch, local_stats};

/// Lower bound on local standard deviations.
pub const STD_FLOOR: f64 = 1e-4;

/// Per-pixel local mean and standard deviation over an `m × m` window with
/// replicate borders.
pub fn local_mean_std(plane: &ImagePlane, m: usize) -> Result<(ImagePlane, ImagePlane)> {
    ensure_odd_window(m)?;
    let (w, h) = plane.dims();
    let stats: Vec<(f64, f64)> = (0..w * h)
        .into_par_iter()
        .map(|i| {
            let (mean, var) = local_stats(&extract_patch(plane, i, m).expect("index in range"));
            (mean, var.sqrt())
        })
        .collect();
    let mean = ImagePlane::new(w, h, stats.iter().map(|s| s.0).collect())?;
    let std = ImagePlane::new(w, h, stats.iter().map(|s| s.1).collect())?;
    Ok((mean, std))
}

pub fn statistical_fuse(vis: &RgbImage, nir: &ImagePlane, window: usize) -> Result<RgbImage> {
    ensure_same_dims(vis.dims(), nir.dims())?;
    ensure_odd_window(window)?;
    let opp = forward_opponent(vis);
    let (vis_mean, vis_std) = local_mean_std(&opp.l, window)?;
    let (nir_mean, nir_std) = local_mean_std(nir, window)?;
    let ratio = nir_std.zip_map(&vis_std, |n, v| n.max(STD_FLOOR) / v.max(STD_FLOOR))?;

    let (w, h) = nir.dims();
    let l = ImagePlane::from_fn(w, h, |x, y| {
        nir_mean.get(x, y) + (opp.l.get(x, y) - vis_mean.get(x, y)) * ratio.get(x, y)
    });
    let c1 = opp.c1.zip_map(&ratio, |c, r| c * r)?;
    let c2 = opp.c2.zip_map(&ratio, |c, r| c * r)?;
    Ok(backward_opponent(&OpponentImage::new(l, c1, c2)?))
}
