//! 2-D FFT helpers for periodic convolution systems.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

pub(crate) struct Fft2 {
    width: usize,
    height: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    pub(crate) fn new(width: usize, height: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            width,
            height,
            row_fwd: planner.plan_fft_forward(width),
            row_inv: planner.plan_fft_inverse(width),
            col_fwd: planner.plan_fft_forward(height),
            col_inv: planner.plan_fft_inverse(height),
        }
    }

    fn transform(&self, buf: &mut [Complex<f64>], row: &Arc<dyn Fft<f64>>, col: &Arc<dyn Fft<f64>>) {
        let (w, h) = (self.width, self.height);
        for r in buf.chunks_exact_mut(w) {
            row.process(r);
        }
        let mut column = vec![Complex::new(0.0, 0.0); h];
        for x in 0..w {
            for y in 0..h {
                column[y] = buf[y * w + x];
            }
            col.process(&mut column);
            for y in 0..h {
                buf[y * w + x] = column[y];
            }
        }
    }

    pub(crate) fn forward(&self, data: &[f64]) -> Vec<Complex<f64>> {
        let mut buf: Vec<Complex<f64>> = data.iter().map(|&v| Complex::new(v, 0.0)).collect();
        self.transform(&mut buf, &self.row_fwd, &self.col_fwd);
        buf
    }

    /// Inverse transform, normalized, keeping the real part.
    pub(crate) fn inverse(&self, mut spectrum: Vec<Complex<f64>>) -> Vec<f64> {
        self.transform(&mut spectrum, &self.row_inv, &self.col_inv);
        let scale = 1.0 / (self.width * self.height) as f64;
        spectrum.into_iter().map(|c| c.re * scale).collect()
    }

    /// Eigenvalues of `DxᵀDx + DyᵀDy` for periodic forward differences.
    pub(crate) fn laplacian_eigenvalues(&self) -> Vec<f64> {
        let (w, h) = (self.width, self.height);
        let tau = std::f64::consts::TAU;
        let ex: Vec<f64> = (0..w).map(|k| 2.0 - 2.0 * (tau * k as f64 / w as f64).cos()).collect();
        let ey: Vec<f64> = (0..h).map(|k| 2.0 - 2.0 * (tau * k as f64 / h as f64).cos()).collect();
        let mut out = Vec::with_capacity(w * h);
        for &vy in &ey {
            for &vx in &ex {
                out.push(vx + vy);
            }
        }
        out
    }
}
