//! Chrominance for the mapped luminance, and uniform chroma scaling.

use crate::error::{ensure_same_dims, Error, Result};
use crate::image::ImagePlane;
use crate::mapping::MappingField;

pub const DEFAULT_SLOPE_FLOOR: f64 = 0.2;
pub const DEFAULT_CHROMA_SCALE: f64 = 1.2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChromaParams {
    /// Smallest divisor used when dividing chrominance by the slope.
    pub slope_floor: f64,
    /// Global chroma boost factor.
    pub chroma_scale: f64,
}

impl Default for ChromaParams {
    fn default() -> Self {
        Self {
            slope_floor: DEFAULT_SLOPE_FLOOR,
            chroma_scale: DEFAULT_CHROMA_SCALE,
        }
    }
}

impl ChromaParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.slope_floor > 0.0) || !self.slope_floor.is_finite() {
            return Err(Error::Parameter(format!("slope floor must be positive, got {}", self.slope_floor)));
        }
        if !(self.chroma_scale > 0.0) || !self.chroma_scale.is_finite() {
            return Err(Error::Parameter(format!("chroma scale must be positive, got {}", self.chroma_scale)));
        }
        Ok(())
    }

    /// Divisor applied at a pixel with the given slope.
    #[inline]
    pub fn divisor(&self, slope: f64) -> f64 {
        if slope > 0.0 {
            slope.max(self.slope_floor)
        } else {
            self.slope_floor
        }
    }
}

/// Divides both chrominance planes by the guarded per-pixel slope.
pub fn transfer_colors(
    vc1: &ImagePlane,
    vc2: &ImagePlane,
    field: &MappingField,
    params: &ChromaParams,
) -> Result<(ImagePlane, ImagePlane)> {
    params.validate()?;
    ensure_same_dims(vc1.dims(), vc2.dims())?;
    ensure_same_dims(vc1.dims(), field.dims())?;
    let divide = |c: &ImagePlane| {
        c.zip_map(&field.slope, |v, s| v / params.divisor(s))
            .expect("dims checked")
    };
    Ok((divide(vc1), divide(vc2)))
}

/// Scales chroma magnitude by `s`, leaving hue unchanged.
pub fn chroma_map(c1: &ImagePlane, c2: &ImagePlane, s: f64) -> Result<(ImagePlane, ImagePlane)> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::Parameter(format!("chroma scale must be positive, got {s}")));
    }
    ensure_same_dims(c1.dims(), c2.dims())?;
    Ok((c1.map(|v| v * s), c2.map(|v| v * s)))
}
