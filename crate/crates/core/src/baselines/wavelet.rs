//! Orthogonal periodized 2-D wavelet transform and coefficient-level fusion.

use crate::error::{ensure_same_dims, Error, Result};
use crate::image::ImagePlane;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Wavelet {
    #[default]
    Haar,
    /// Daubechies, 4 vanishing moments (8 taps).
    Db4,
}

const HAAR: [f64; 2] = [std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2];

const DB4: [f64; 8] = [
    0.230_377_813_308_855_23,
    0.714_846_570_552_541_5,
    0.630_880_767_929_590_4,
    -0.027_983_769_416_983_85,
    -0.187_034_811_718_881_14,
    0.030_841_381_835_986_965,
    0.032_883_011_666_982_945,
    -0.010_597_401_784_997_278,
];

impl Wavelet {
    pub fn lowpass(self) -> &'static [f64] {
        match self {
            Wavelet::Haar => &HAAR,
            Wavelet::Db4 => &DB4,
        }
    }

    /// Quadrature mirror of the lowpass filter.
    pub fn highpass(self) -> Vec<f64> {
        let h = self.lowpass();
        let l = h.len();
        (0..l)
            .map(|n| if n % 2 == 0 { h[l - 1 - n] } else { -h[l - 1 - n] })
            .collect()
    }
}

fn analyze_1d(input: &[f64], lo: &[f64], hi: &[f64], approx: &mut [f64], detail: &mut [f64]) {
    let n = input.len();
    for k in 0..n / 2 {
        let (mut a, mut d) = (0.0, 0.0);
        for (t, (&hl, &hh)) in lo.iter().zip(hi).enumerate() {
            let v = input[(2 * k + t) % n];
            a += hl * v;
            d += hh * v;
        }
        approx[k] = a;
        detail[k] = d;
    }
}

fn synthesize_1d(approx: &[f64], detail: &[f64], lo: &[f64], hi: &[f64], out: &mut [f64]) {
    let n = out.len();
    out.iter_mut().for_each(|v| *v = 0.0);
    for k in 0..n / 2 {
        for (t, (&hl, &hh)) in lo.iter().zip(hi).enumerate() {
            out[(2 * k + t) % n] += hl * approx[k] + hh * detail[k];
        }
    }
}

/// Detail subbands of one decomposition level.
#[derive(Debug, Clone, PartialEq)]
pub struct Subbands {
    /// Horizontal lowpass, vertical highpass.
    pub lh: ImagePlane,
    /// Horizontal highpass, vertical lowpass.
    pub hl: ImagePlane,
    pub hh: ImagePlane,
}

impl Subbands {
    pub fn bands(&self) -> [&ImagePlane; 3] {
        [&self.lh, &self.hl, &self.hh]
    }
}

/// Multi-level decomposition; `details[0]` is the finest level.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletPyramid {
    pub approx: ImagePlane,
    pub details: Vec<Subbands>,
}

fn split_2d(plane: &ImagePlane, lo: &[f64], hi: &[f64]) -> (ImagePlane, Subbands) {
    let (w, h) = plane.dims();
    let (hw, hh) = (w / 2, h / 2);
    // rows
    let mut row_lo = vec![0.0; hw * h];
    let mut row_hi = vec![0.0; hw * h];
    for y in 0..h {
        analyze_1d(
            plane.row(y),
            lo,
            hi,
            &mut row_lo[y * hw..(y + 1) * hw],
            &mut row_hi[y * hw..(y + 1) * hw],
        );
    }
    // columns
    let columns = |src: &[f64]| {
        let mut out_lo = vec![0.0; hw * hh];
        let mut out_hi = vec![0.0; hw * hh];
        let mut col = vec![0.0; h];
        let (mut a, mut d) = (vec![0.0; hh], vec![0.0; hh]);
        for x in 0..hw {
            for y in 0..h {
                col[y] = src[y * hw + x];
            }
            analyze_1d(&col, lo, hi, &mut a, &mut d);
            for y in 0..hh {
                out_lo[y * hw + x] = a[y];
                out_hi[y * hw + x] = d[y];
            }
        }
        (
            ImagePlane::new(hw, hh, out_lo).expect("dims"),
            ImagePlane::new(hw, hh, out_hi).expect("dims"),
        )
    };
    let (ll, lh) = columns(&row_lo);
    let (hl, hh_band) = columns(&row_hi);
    (ll, Subbands { lh, hl, hh: hh_band })
}

fn merge_2d(ll: &ImagePlane, bands: &Subbands, lo: &[f64], hi: &[f64]) -> ImagePlane {
    let (hw, hh) = ll.dims();
    let (w, h) = (2 * hw, 2 * hh);
    let columns = |a: &ImagePlane, d: &ImagePlane| {
        let mut out = vec![0.0; hw * h];
        let mut col = vec![0.0; h];
        let (mut ca, mut cd) = (vec![0.0; hh], vec![0.0; hh]);
        for x in 0..hw {
            for y in 0..hh {
                ca[y] = a.get(x, y);
                cd[y] = d.get(x, y);
            }
            synthesize_1d(&ca, &cd, lo, hi, &mut col);
            for y in 0..h {
                out[y * hw + x] = col[y];
            }
        }
        out
    };
    let row_lo = columns(ll, &bands.lh);
    let row_hi = columns(&bands.hl, &bands.hh);
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        synthesize_1d(
            &row_lo[y * hw..(y + 1) * hw],
            &row_hi[y * hw..(y + 1) * hw],
            lo,
            hi,
            &mut out[y * w..(y + 1) * w],
        );
    }
    ImagePlane::new(w, h, out).expect("dims")
}

/// Forward transform. Both dimensions must be divisible by `2^levels`, and
/// every level must be at least as long as the filter.
pub fn dwt2(plane: &ImagePlane, levels: usize, wavelet: Wavelet) -> Result<WaveletPyramid> {
    let block = 1usize << levels;
    let (w, h) = plane.dims();
    if w % block != 0 || h % block != 0 {
        return Err(Error::Parameter(format!("{w}x{h} is not divisible by 2^{levels}")));
    }
    let taps = wavelet.lowpass().len();
    if levels > 0 && (w / (block / 2) < taps || h / (block / 2) < taps) {
        return Err(Error::Parameter(format!("{w}x{h} too small for {levels} levels of {wavelet:?}")));
    }
    let lo = wavelet.lowpass();
    let hi = wavelet.highpass();
    let mut approx = plane.clone();
    let mut details = Vec::with_capacity(levels);
    for _ in 0..levels {
        let (ll, bands) = split_2d(&approx, lo, &hi);
        details.push(bands);
        approx = ll;
    }
    Ok(WaveletPyramid { approx, details })
}

pub fn idwt2(pyramid: &WaveletPyramid, wavelet: Wavelet) -> ImagePlane {
    let lo = wavelet.lowpass();
    let hi = wavelet.highpass();
    let mut approx = pyramid.approx.clone();
    for bands in pyramid.details.iter().rev() {
        approx = merge_2d(&approx, bands, lo, &hi);
    }
    approx
}

/// Larger-magnitude coefficient, keeping its sign; ties go to `a`.
#[inline]
pub fn max_magnitude(a: f64, b: f64) -> f64 {
    if b.abs() > a.abs() {
        b
    } else {
        a
    }
}

/// Mixes approximation coefficients linearly with weight `omega_l` on `vis`
/// and picks the larger-magnitude coefficient in every detail subband.
pub fn fuse_pyramids(vis: &WaveletPyramid, nir: &WaveletPyramid, omega_l: f64) -> Result<WaveletPyramid> {
    if vis.details.len() != nir.details.len() {
        return Err(Error::Parameter("pyramids have different depths".into()));
    }
    let approx = vis
        .approx
        .zip_map(&nir.approx, |a, b| omega_l * a + (1.0 - omega_l) * b)?;
    let details = vis
        .details
        .iter()
        .zip(&nir.details)
        .map(|(a, b)| -> Result<Subbands> {
            Ok(Subbands {
                lh: a.lh.zip_map(&b.lh, max_magnitude)?,
                hl: a.hl.zip_map(&b.hl, max_magnitude)?,
                hh: a.hh.zip_map(&b.hh, max_magnitude)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(WaveletPyramid { approx, details })
}

fn pad_to_multiple(plane: &ImagePlane, block: usize) -> ImagePlane {
    let (w, h) = plane.dims();
    let pw = w.div_ceil(block) * block;
    let ph = h.div_ceil(block) * block;
    if (pw, ph) == (w, h) {
        return plane.clone();
    }
    ImagePlane::from_fn(pw, ph, |x, y| plane.get_clamped(x as isize, y as isize))
}

fn crop(plane: &ImagePlane, w: usize, h: usize) -> ImagePlane {
    if plane.dims() == (w, h) {
        return plane.clone();
    }
    ImagePlane::from_fn(w, h, |x, y| plane.get(x, y))
}

pub fn wavelet_fuse_with(
    vis_l: &ImagePlane,
    nir: &ImagePlane,
    omega_l: f64,
    levels: usize,
    wavelet: Wavelet,
) -> Result<ImagePlane> {
    ensure_same_dims(vis_l.dims(), nir.dims())?;
    if !(0.0..=1.0).contains(&omega_l) {
        return Err(Error::Parameter(format!("omega_l must lie in [0, 1], got {omega_l}")));
    }
    let block = 1usize << levels;
    let (w, h) = vis_l.dims();
    let a = dwt2(&pad_to_multiple(vis_l, block), levels, wavelet)?;
    let b = dwt2(&pad_to_multiple(nir, block), levels, wavelet)?;
    let fused = fuse_pyramids(&a, &b, omega_l)?;
    Ok(crop(&idwt2(&fused, wavelet), w, h))
}

/// Haar wavelet fusion of two luminance planes.
pub fn wavelet_fuse(vis_l: &ImagePlane, nir: &ImagePlane, omega_l: f64, levels: usize) -> Result<ImagePlane> {
    wavelet_fuse_with(vis_l, nir, omega_l, levels, Wavelet::Haar)
}
