//! Deterministic inputs for the benchmarks.

use nirfuse::{ImagePlane, RgbImage};

/// A smooth color scene with a textured NIR counterpart of the same size.
pub fn scene_pair(w: usize, h: usize) -> (RgbImage, ImagePlane) {
    let vis = RgbImage::from_fn(w, h, |x, y| {
        let (u, v) = (x as f64 / w as f64, y as f64 / h as f64);
        [
            0.5 + 0.25 * (6.0 * u).sin() * (1.0 - v),
            0.45 + 0.2 * (3.0 * v + u).cos(),
            0.4 + 0.3 * u * v,
        ]
    });
    let nir = ImagePlane::from_fn(w, h, |x, y| {
        let t = ((x * 31 + y * 17) % 13) as f64 / 13.0;
        0.4 + 0.2 * (x as f64 / 7.0).sin() * (y as f64 / 5.0).cos() + 0.05 * t
    });
    (vis, nir)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_is_in_range() {
        let (vis, nir) = scene_pair(17, 9);
        assert_eq!(vis.dims(), (17, 9));
        assert_eq!(nir.dims(), (17, 9));
        assert!(nir.data().iter().all(|v| (0.0..=1.0).contains(v)));
    }
}
