//! Floating-point image containers and PNG/TIFF file IO.
//!
//! All processing runs on `f64` planes with a nominal range of `[0, 1]`.
//! Quantization happens only when reading or writing files.

use std::path::Path;

use image::{DynamicImage, ImageBuffer, ImageError, Luma, Rgb};

use crate::error::{ensure_same_dims, Error, Result};

/// Single-channel image stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ImagePlane {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl ImagePlane {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::Parameter(format!(
                "plane data has {} values, expected {width}x{height}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::filled(width, height, 0.0)
    }

    /// Builds a plane by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: f64) {
        self.data[y * self.width + x] = value;
    }

    /// Reads a pixel with replicate padding for out-of-range coordinates.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> f64 {
        let xc = x.clamp(0, self.width as isize - 1) as usize;
        let yc = y.clamp(0, self.height as isize - 1) as usize;
        self.data[yc * self.width + xc]
    }

    pub fn row(&self, y: usize) -> &[f64] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Elementwise combination of two planes of equal size.
    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        ensure_same_dims(self.dims(), other.dims())?;
        Ok(Self {
            width: self.width,
            height: self.height,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn mean(&self) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Three-channel color image with planes sharing the same size.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbImage {
    channels: [ImagePlane; 3],
}

impl RgbImage {
    pub fn new(r: ImagePlane, g: ImagePlane, b: ImagePlane) -> Result<Self> {
        ensure_same_dims(r.dims(), g.dims())?;
        ensure_same_dims(r.dims(), b.dims())?;
        Ok(Self {
            channels: [r, g, b],
        })
    }

    pub fn filled(width: usize, height: usize, rgb: [f64; 3]) -> Self {
        Self {
            channels: rgb.map(|v| ImagePlane::filled(width, height, v)),
        }
    }

    /// Renders a single plane as a gray RGB image.
    pub fn from_gray(plane: &ImagePlane) -> Self {
        Self {
            channels: [plane.clone(), plane.clone(), plane.clone()],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> [f64; 3]) -> Self {
        let mut r = Vec::with_capacity(width * height);
        let mut g = Vec::with_capacity(width * height);
        let mut b = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                let [pr, pg, pb] = f(x, y);
                r.push(pr);
                g.push(pg);
                b.push(pb);
            }
        }
        let plane = |data| ImagePlane {
            width,
            height,
            data,
        };
        Self {
            channels: [plane(r), plane(g), plane(b)],
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.channels[0].width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.channels[0].height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        self.channels[0].dims()
    }

    pub fn r(&self) -> &ImagePlane {
        &self.channels[0]
    }

    pub fn g(&self) -> &ImagePlane {
        &self.channels[1]
    }

    pub fn b(&self) -> &ImagePlane {
        &self.channels[2]
    }

    pub fn channels(&self) -> &[ImagePlane; 3] {
        &self.channels
    }

    pub fn into_channels(self) -> [ImagePlane; 3] {
        self.channels
    }

    pub fn pixel(&self, x: usize, y: usize) -> [f64; 3] {
        [
            self.channels[0].get(x, y),
            self.channels[1].get(x, y),
            self.channels[2].get(x, y),
        ]
    }

    /// Applies a plane operation to each channel independently.
    pub fn map_channels(&self, mut f: impl FnMut(&ImagePlane) -> ImagePlane) -> Self {
        Self {
            channels: [
                f(&self.channels[0]),
                f(&self.channels[1]),
                f(&self.channels[2]),
            ],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.channels.iter().all(ImagePlane::is_finite)
    }
}

/// Either kind of image handled by the file boundary.
#[derive(Debug, Clone, PartialEq)]
pub enum Image {
    Gray(ImagePlane),
    Rgb(RgbImage),
}

impl Image {
    pub fn dims(&self) -> (usize, usize) {
        match self {
            Image::Gray(p) => p.dims(),
            Image::Rgb(c) => c.dims(),
        }
    }

    /// Returns the image as RGB, replicating a gray plane into three channels.
    pub fn into_rgb(self) -> RgbImage {
        match self {
            Image::Gray(p) => RgbImage::from_gray(&p),
            Image::Rgb(c) => c,
        }
    }

    /// Returns the image as one plane, taking the luminance of color input.
    pub fn into_gray(self) -> ImagePlane {
        match self {
            Image::Gray(p) => p,
            Image::Rgb(c) => crate::color::luminance_of(&c),
        }
    }
}

impl From<ImagePlane> for Image {
    fn from(p: ImagePlane) -> Self {
        Image::Gray(p)
    }
}

impl From<RgbImage> for Image {
    fn from(c: RgbImage) -> Self {
        Image::Rgb(c)
    }
}

/// Storage precision used when writing files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BitDepth {
    #[default]
    Eight,
    Sixteen,
}

impl BitDepth {
    pub fn max_value(self) -> f64 {
        match self {
            BitDepth::Eight => 255.0,
            BitDepth::Sixteen => 65535.0,
        }
    }
}

/// Elementwise clamp into `[lo, hi]`.
pub fn clamp_plane(plane: &ImagePlane, lo: f64, hi: f64) -> ImagePlane {
    assert!(lo <= hi, "clamp bounds out of order: {lo} > {hi}");
    plane.map(|v| v.clamp(lo, hi))
}

/// Clamps to `[0, 1]` and quantizes with round-half-up.
#[inline]
pub fn quantize(value: f64, depth: BitDepth) -> u16 {
    let max = depth.max_value();
    (value.clamp(0.0, 1.0) * max + 0.5).floor() as u16
}

fn map_image_error(path: &Path, err: ImageError) -> Error {
    match err {
        ImageError::IoError(source) => Error::Io {
            path: path.to_path_buf(),
            source,
        },
        other => Error::Format {
            path: path.to_path_buf(),
            reason: other.to_string(),
        },
    }
}

fn plane_from_iter(width: usize, height: usize, values: impl Iterator<Item = f64>) -> ImagePlane {
    ImagePlane {
        width,
        height,
        data: values.collect(),
    }
}

/// Reads an 8- or 16-bit gray or RGB raster, scaling values to `[0, 1]`.
///
/// Alpha channels are discarded. Gray inputs come back as [`Image::Gray`].
pub fn load_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let reader = image::ImageReader::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let reader = reader.with_guessed_format().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let decoded = reader.decode().map_err(|e| map_image_error(path, e))?;
    let (w, h) = (decoded.width() as usize, decoded.height() as usize);

    let gray8 = |img: image::GrayImage| {
        Image::Gray(plane_from_iter(w, h, img.into_raw().into_iter().map(|v| v as f64 / 255.0)))
    };
    let gray16 = |img: ImageBuffer<Luma<u16>, Vec<u16>>| {
        Image::Gray(plane_from_iter(w, h, img.into_raw().into_iter().map(|v| v as f64 / 65535.0)))
    };
    let rgb = |raw: Vec<f64>| {
        let channel = |c: usize| plane_from_iter(w, h, raw.iter().skip(c).step_by(3).copied());
        Image::Rgb(RgbImage {
            channels: [channel(0), channel(1), channel(2)],
        })
    };

    let image = match decoded {
        DynamicImage::ImageLuma8(_) | DynamicImage::ImageLumaA8(_) => gray8(decoded.into_luma8()),
        DynamicImage::ImageLuma16(_) | DynamicImage::ImageLumaA16(_) => gray16(decoded.into_luma16()),
        DynamicImage::ImageRgb8(_) | DynamicImage::ImageRgba8(_) => rgb(decoded
            .into_rgb8()
            .into_raw()
            .into_iter()
            .map(|v| v as f64 / 255.0)
            .collect()),
        DynamicImage::ImageRgb16(_) | DynamicImage::ImageRgba16(_) => rgb(decoded
            .into_rgb16()
            .into_raw()
            .into_iter()
            .map(|v| v as f64 / 65535.0)
            .collect()),
        other => {
            return Err(Error::Format {
                path: path.to_path_buf(),
                reason: format!("unsupported pixel layout {:?}", other.color()),
            })
        }
    };
    Ok(image)
}

/// Writes an image, clamping to `[0, 1]` and quantizing to `depth`.
///
/// The container format follows the file extension (PNG, or TIFF with the
/// `tiff` feature).
pub fn save_image(image: &Image, path: impl AsRef<Path>, depth: BitDepth) -> Result<()> {
    let path = path.as_ref();
    if !image_is_finite(image) {
        return Err(Error::Parameter("refusing to save non-finite pixel values".into()));
    }
    let (w, h) = image.dims();
    let (w32, h32) = (w as u32, h as u32);
    let result = match (image, depth) {
        (Image::Gray(p), BitDepth::Eight) => {
            let raw = p.data.iter().map(|&v| quantize(v, depth) as u8).collect();
            ImageBuffer::<Luma<u8>, Vec<u8>>::from_raw(w32, h32, raw)
                .expect("buffer sized from plane")
                .save(path)
        }
        (Image::Gray(p), BitDepth::Sixteen) => {
            let raw = p.data.iter().map(|&v| quantize(v, depth)).collect();
            ImageBuffer::<Luma<u16>, Vec<u16>>::from_raw(w32, h32, raw)
                .expect("buffer sized from plane")
                .save(path)
        }
        (Image::Rgb(c), BitDepth::Eight) => {
            let raw = interleave(c, |v| quantize(v, depth) as u8);
            ImageBuffer::<Rgb<u8>, Vec<u8>>::from_raw(w32, h32, raw)
                .expect("buffer sized from planes")
                .save(path)
        }
        (Image::Rgb(c), BitDepth::Sixteen) => {
            let raw = interleave(c, |v| quantize(v, depth));
            ImageBuffer::<Rgb<u16>, Vec<u16>>::from_raw(w32, h32, raw)
                .expect("buffer sized from planes")
                .save(path)
        }
    };
    result.map_err(|e| map_image_error(path, e))
}

fn image_is_finite(image: &Image) -> bool {
    match image {
        Image::Gray(p) => p.is_finite(),
        Image::Rgb(c) => c.is_finite(),
    }
}

fn interleave<T>(img: &RgbImage, f: impl Fn(f64) -> T) -> Vec<T> {
    let [r, g, b] = &img.channels;
    let mut out = Vec::with_capacity(r.len() * 3);
    for i in 0..r.len() {
        out.push(f(r.data[i]));
        out.push(f(g.data[i]));
        out.push(f(b.data[i]));
    }
    out
}
