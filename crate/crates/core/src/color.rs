//! Decorrelated opponent color space (Reinhard-style lαβ).
//!
//! RGB is mapped to LMS cone responses, log10-compressed, then rotated by the
//! orthonormal opponent transform
//!
//! ```text
//! l = (L + M + S) / √3,   c1 = (L + M − 2S) / √6,   c2 = (L − M) / √2
//! ```
//!
//! (all on log10 responses). The luminance axis is reported on the intensity
//! scale as `10^(l / √3)`, the geometric mean of the LMS responses, so that a
//! gray pixel `(v, v, v)` has luminance exactly `v` and luminance planes are
//! directly comparable with single-channel NIR captures.

use std::sync::LazyLock;

use crate::error::{ensure_same_dims, Result};
use crate::image::{ImagePlane, RgbImage};

/// Floor applied to LMS responses (and luminance) before taking logarithms.
pub const LMS_FLOOR: f64 = 1e-6;

/// RGB→LMS matrix with rows normalized to sum to one, so white maps to
/// LMS = (1, 1, 1) and the achromatic axis has zero chrominance.
const RGB_TO_LMS_RAW: [[f64; 3]; 3] = [
    [0.3811, 0.5783, 0.0402],
    [0.1967, 0.7244, 0.0782],
    [0.0241, 0.1288, 0.8444],
];

struct Matrices {
    rgb_to_lms: [[f64; 3]; 3],
    lms_to_rgb: [[f64; 3]; 3],
}

static MATRICES: LazyLock<Matrices> = LazyLock::new(|| {
    let mut fwd = RGB_TO_LMS_RAW;
    for row in fwd.iter_mut() {
        let s: f64 = row.iter().sum();
        row.iter_mut().for_each(|v| *v /= s);
    }
    Matrices {
        rgb_to_lms: fwd,
        lms_to_rgb: invert3(&fwd),
    }
});

fn invert3(m: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let c = |r0: usize, r1: usize, c0: usize, c1: usize| m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
    let cof = [
        [c(1, 2, 1, 2), -c(1, 2, 0, 2), c(1, 2, 0, 1)],
        [-c(0, 2, 1, 2), c(0, 2, 0, 2), -c(0, 2, 0, 1)],
        [c(0, 1, 1, 2), -c(0, 1, 0, 2), c(0, 1, 0, 1)],
    ];
    let det = m[0][0] * cof[0][0] + m[0][1] * cof[0][1] + m[0][2] * cof[0][2];
    let mut inv = [[0.0; 3]; 3];
    for (r, row) in inv.iter_mut().enumerate() {
        for (col, v) in row.iter_mut().enumerate() {
            *v = cof[col][r] / det;
        }
    }
    inv
}

#[inline]
fn mul3(m: &[[f64; 3]; 3], v: [f64; 3]) -> [f64; 3] {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

const INV_SQRT6: f64 = 0.408_248_290_463_863;
const INV_SQRT2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Converts one RGB triple to (luminance, c1, c2).
#[inline]
pub fn rgb_to_opponent(rgb: [f64; 3]) -> [f64; 3] {
    // rows sum to one, so expanding around green keeps gray inputs exact
    let g = rgb[1];
    let lms = mul3(&MATRICES.rgb_to_lms, rgb.map(|v| v - g)).map(|v| v + g);
    let [ll, lm, ls] = lms.map(|v| v.max(LMS_FLOOR).log10());
    let lum = 10f64.powf((ll + lm + ls) / 3.0);
    [lum, (ll + lm - 2.0 * ls) * INV_SQRT6, (ll - lm) * INV_SQRT2]
}

/// Inverse of [`rgb_to_opponent`] without clamping.
#[inline]
pub fn opponent_to_rgb(opp: [f64; 3]) -> [f64; 3] {
    let [lum, c1, c2] = opp;
    let base = lum.max(LMS_FLOOR).log10();
    let a = c1 * INV_SQRT6;
    let b = c2 * INV_SQRT2;
    let lms = [
        10f64.powf(base + a + b),
        10f64.powf(base + a - b),
        10f64.powf(base - 2.0 * a),
    ];
    mul3(&MATRICES.lms_to_rgb, lms)
}

/// Luminance plus two chrominance planes.
#[derive(Debug, Clone, PartialEq)]
pub struct OpponentImage {
    pub l: ImagePlane,
    pub c1: ImagePlane,
    pub c2: ImagePlane,
}

impl OpponentImage {
    pub fn new(l: ImagePlane, c1: ImagePlane, c2: ImagePlane) -> Result<Self> {
        ensure_same_dims(l.dims(), c1.dims())?;
        ensure_same_dims(l.dims(), c2.dims())?;
        Ok(Self { l, c1, c2 })
    }

    pub fn dims(&self) -> (usize, usize) {
        self.l.dims()
    }
}

pub fn forward_opponent(img: &RgbImage) -> OpponentImage {
    let (w, h) = img.dims();
    let [r, g, b] = img.channels();
    let n = w * h;
    let (mut l, mut c1, mut c2) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for i in 0..n {
        let [lv, a, bb] = rgb_to_opponent([r.data()[i], g.data()[i], b.data()[i]]);
        l.push(lv);
        c1.push(a);
        c2.push(bb);
    }
    let plane = |d| ImagePlane::new(w, h, d).expect("sized from input");
    OpponentImage {
        l: plane(l),
        c1: plane(c1),
        c2: plane(c2),
    }
}

/// Inverse conversion, clamped to `[0, 1]`.
pub fn backward_opponent(opp: &OpponentImage) -> RgbImage {
    let (w, h) = opp.dims();
    let n = w * h;
    let (mut r, mut g, mut b) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for i in 0..n {
        let rgb = opponent_to_rgb([opp.l.data()[i], opp.c1.data()[i], opp.c2.data()[i]]);
        let [pr, pg, pb] = rgb.map(|v| if v.is_finite() { v.clamp(0.0, 1.0) } else { 1.0 });
        r.push(pr);
        g.push(pg);
        b.push(pb);
    }
    let plane = |d| ImagePlane::new(w, h, d).expect("sized from input");
    RgbImage::new(plane(r), plane(g), plane(b)).expect("planes share dims")
}

pub fn luminance_of(img: &RgbImage) -> ImagePlane {
    let (w, h) = img.dims();
    let [r, g, b] = img.channels();
    let data = (0..w * h)
        .map(|i| rgb_to_opponent([r.data()[i], g.data()[i], b.data()[i]])[0])
        .collect();
    ImagePlane::new(w, h, data).expect("sized from input")
}
