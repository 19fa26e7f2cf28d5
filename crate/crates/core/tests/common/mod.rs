//! Synthetic scenes shared by the integration tests.
#![allow(dead_code)]

use nirfuse::{ImagePlane, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Smooth colored scene with channels inside `[0.2, 0.8]`.
pub fn smooth_scene(w: usize, h: usize) -> RgbImage {
    RgbImage::from_fn(w, h, |x, y| {
        let (u, v) = (x as f64 / w as f64, y as f64 / h as f64);
        [
            0.5 + 0.25 * (2.0 * std::f64::consts::PI * u).sin() * (1.0 - v),
            0.45 + 0.2 * (3.0 * v + u).cos(),
            0.4 + 0.3 * u * v,
        ]
    })
}

pub fn add_noise(img: &RgbImage, sigma: f64, seed: u64) -> RgbImage {
    let mut r = rng(seed);
    let normal = Normal::new(0.0, sigma).unwrap();
    img.map_channels(|c| {
        let data = c.data().iter().map(|v| v + normal.sample(&mut r)).collect();
        ImagePlane::new(c.width(), c.height(), data).unwrap()
    })
}

/// Visible/NIR pair where a band on the left is crushed to black in the
/// visible image but textured in the NIR image. Returns the mask of that
/// band as well.
pub fn discrepancy_pair(w: usize, h: usize, seed: u64) -> (RgbImage, ImagePlane, Vec<bool>) {
    let mut r = rng(seed);
    let grain: Vec<f64> = (0..w * h).map(|_| r.random_range(-1.0..1.0)).collect();
    let dark = |x: usize| x < w / 3;
    let texture = |x: usize, y: usize| {
        let (u, v) = (x as f64, y as f64);
        0.12 * (0.9 * u).sin() * (0.7 * v).cos() + 0.05 * grain[y * w + x]
    };
    let vis = RgbImage::from_fn(w, h, |x, y| {
        if dark(x) {
            [0.02, 0.025, 0.02]
        } else {
            let (u, v) = (x as f64 / w as f64, y as f64 / h as f64);
            let t = 0.4 * texture(x, y);
            [
                (0.55 + 0.2 * u + t).clamp(0.0, 1.0),
                (0.35 + 0.25 * v + t).clamp(0.0, 1.0),
                (0.25 + 0.15 * u * v + t).clamp(0.0, 1.0),
            ]
        }
    });
    let nir = ImagePlane::from_fn(w, h, |x, y| {
        if dark(x) {
            0.45 + texture(x, y)
        } else {
            let lum = nirfuse::color::rgb_to_opponent(vis.pixel(x, y))[0];
            (0.15 + 0.8 * lum + 0.5 * texture(x, y)).clamp(0.0, 1.0)
        }
    });
    let mask = (0..w * h).map(|i| dark(i % w)).collect();
    (vis, nir, mask)
}

pub fn psnr(a: &RgbImage, b: &RgbImage) -> f64 {
    let mut se = 0.0;
    let mut n = 0.0;
    for (ca, cb) in a.channels().iter().zip(b.channels()) {
        for (x, y) in ca.data().iter().zip(cb.data()) {
            let d = x.clamp(0.0, 1.0) - y.clamp(0.0, 1.0);
            se += d * d;
            n += 1.0;
        }
    }
    10.0 * (1.0 / (se / n)).log10()
}

/// Pearson correlation over the selected samples.
pub fn correlation(a: &[f64], b: &[f64], mask: &[bool]) -> f64 {
    let pairs: Vec<(f64, f64)> = a
        .iter()
        .zip(b)
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|((&x, &y), _)| (x, y))
        .collect();
    let n = pairs.len() as f64;
    let ma = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let mb = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in pairs {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

/// Mask shrunk so that every kept pixel has its whole `(2r+1)²` window
/// inside the original mask (out-of-frame neighbors count as inside).
pub fn erode(mask: &[bool], w: usize, h: usize, r: usize) -> Vec<bool> {
    let r = r as isize;
    (0..w * h)
        .map(|i| {
            let (x, y) = ((i % w) as isize, (i / w) as isize);
            (-r..=r).all(|dy| {
                (-r..=r).all(|dx| {
                    let (nx, ny) = (x + dx, y + dy);
                    nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize || mask[(ny as usize) * w + nx as usize]
                })
            })
        })
        .collect()
}
