//! Image containers and per-pixel primitives.
//!
//! All rasters are row-major, 8 bits per channel, origin at the top-left
//! corner with `x` to the right and `y` downwards.

use std::path::Path;

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum RasterError {
    #[error("image dimensions must be non-zero, got {width}x{height}")]
    EmptyImage { width: usize, height: usize },
    #[error("buffer holds {actual} bytes, expected {expected} for {width}x{height}")]
    BufferSize {
        width: usize,
        height: usize,
        expected: usize,
        actual: usize,
    },
    #[error("mask values must be 0 or 1")]
    NonBinaryMask,
    #[error("threshold range [{lo}, {hi}] is empty")]
    InvalidRange { lo: u8, hi: u8 },
    #[error("cannot decode image {path}: {source}")]
    Decode {
        path: String,
        #[source]
        source: image::ImageError,
    },
    #[error("cannot encode image {path}: {source}")]
    Encode {
        path: String,
        #[source]
        source: image::ImageError,
    },
}

/// Shared surface of the 8-bit raster types.
pub trait Raster: Sized {
    const CHANNELS: usize;

    fn width(&self) -> usize;
    fn height(&self) -> usize;
    fn as_raw(&self) -> &[u8];
    fn from_raw(width: usize, height: usize, data: Vec<u8>) -> Result<Self, RasterError>;
}

fn check_buffer(width: usize, height: usize, channels: usize, len: usize) -> Result<(), RasterError> {
    if width == 0 || height == 0 {
        return Err(RasterError::EmptyImage { width, height });
    }
    let expected = width * height * channels;
    if len != expected {
        return Err(RasterError::BufferSize {
            width,
            height,
            expected,
            actual: len,
        });
    }
    Ok(())
}

macro_rules! raster_impl {
    ($ty:ident, $channels:expr) => {
        impl Raster for $ty {
            const CHANNELS: usize = $channels;

            fn width(&self) -> usize {
                self.width
            }

            fn height(&self) -> usize {
                self.height
            }

            fn as_raw(&self) -> &[u8] {
                &self.data
            }

            fn from_raw(width: usize, height: usize, data: Vec<u8>) -> Result<Self, RasterError> {
                $ty::from_raw(width, height, data)
            }
        }
    };
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageRgb {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl ImageRgb {
    pub fn from_raw(width: usize, height: usize, data: Vec<u8>) -> Result<Self, RasterError> {
        check_buffer(width, height, 3, data.len())?;
        Ok(Self { width, height, data })
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Result<Self, RasterError> {
        check_buffer(width, height, 3, width * height * 3)?;
        let data = rgb.iter().copied().cycle().take(width * height * 3).collect();
        Ok(Self { width, height, data })
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> [u8; 3],
    ) -> Result<Self, RasterError> {
        check_buffer(width, height, 3, width * height * 3)?;
        let mut data = Vec::with_capacity(width * height * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Ok(Self { width, height, data })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn as_raw(&self) -> &[u8] {
        &self.data
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn put_pixel(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        let i = (y * self.width + x) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    pub fn pixels(&self) -> impl Iterator<Item = [u8; 3]> + '_ {
        self.data.chunks_exact(3).map(|c| [c[0], c[1], c[2]])
    }

    /// Copies the half-open window `[x0, x1) x [y0, y1)`.
    pub fn crop(&self, x0: usize, y0: usize, x1: usize, y1: usize) -> Result<Self, RasterError> {
        let (w, h) = (x1.saturating_sub(x0), y1.saturating_sub(y0));
        check_buffer(w, h, 3, w * h * 3)?;
        let mut data = Vec::with_capacity(w * h * 3);
        for y in y0..y1 {
            let row = (y * self.width + x0) * 3;
            data.extend_from_slice(&self.data[row..row + w * 3]);
        }
        Ok(Self { width: w, height: h, data })
    }

    /// Decodes a PNG or JPEG file; alpha is dropped.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, RasterError> {
        let path = path.as_ref();
        let img = image::open(path).map_err(|source| RasterError::Decode {
            path: path.display().to_string(),
            source,
        })?;
        Ok(Self::from_dynamic(img))
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, RasterError> {
        let img = image::load_from_memory(bytes).map_err(|source| RasterError::Decode {
            path: "<memory>".into(),
            source,
        })?;
        Ok(Self::from_dynamic(img))
    }

    fn from_dynamic(img: image::DynamicImage) -> Self {
        let rgb = img.to_rgb8();
        let (w, h) = rgb.dimensions();
        Self {
            width: w as usize,
            height: h as usize,
            data: rgb.into_raw(),
        }
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<(), RasterError> {
        save(path.as_ref(), &self.data, self.width, self.height, image::ExtendedColorType::Rgb8)
    }

    pub fn encode_png(&self) -> Result<Vec<u8>, RasterError> {
        encode(&self.data, self.width, self.height, image::ExtendedColorType::Rgb8)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageGray {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl ImageGray {
    pub fn from_raw(width: usize, height: usize, data: Vec<u8>) -> Result<Self, RasterError> {
        check_buffer(width, height, 1, data.len())?;
        Ok(Self { width, height, data })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self, RasterError> {
        Self::from_raw(width, height, vec![value; width * height])
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> u8,
    ) -> Result<Self, RasterError> {
        check_buffer(width, height, 1, width * height)?;
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Ok(Self { width, height, data })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn as_raw(&self) -> &[u8] {
        &self.data
    }

    pub fn into_raw(self) -> Vec<u8> {
        self.data
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, RasterError> {
        let path = path.as_ref();
        let img = image::open(path).map_err(|source| RasterError::Decode {
            path: path.display().to_string(),
            source,
        })?;
        let gray = img.to_luma8();
        let (w, h) = gray.dimensions();
        Self::from_raw(w as usize, h as usize, gray.into_raw())
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<(), RasterError> {
        save(path.as_ref(), &self.data, self.width, self.height, image::ExtendedColorType::L8)
    }
}

/// A 0/1 mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl BinaryMask {
    pub fn from_raw(width: usize, height: usize, data: Vec<u8>) -> Result<Self, RasterError> {
        check_buffer(width, height, 1, data.len())?;
        if data.iter().any(|&v| v > 1) {
            return Err(RasterError::NonBinaryMask);
        }
        Ok(Self { width, height, data })
    }

    pub fn zeros(width: usize, height: usize) -> Result<Self, RasterError> {
        Self::from_raw(width, height, vec![0; width * height])
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> bool,
    ) -> Result<Self, RasterError> {
        check_buffer(width, height, 1, width * height)?;
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y) as u8);
            }
        }
        Ok(Self { width, height, data })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn as_raw(&self) -> &[u8] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x] != 0
    }

    pub fn set(&mut self, x: usize, y: usize, on: bool) {
        self.data[y * self.width + x] = on as u8;
    }

    pub fn count_ones(&self) -> usize {
        self.data.iter().filter(|&&v| v != 0).count()
    }

    /// Maps 1 to 255 so the mask can be resampled or saved as an image.
    pub fn to_gray(&self) -> ImageGray {
        ImageGray {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| v * 255).collect(),
        }
    }
}

raster_impl!(ImageRgb, 3);
raster_impl!(ImageGray, 1);

fn save(
    path: &Path,
    data: &[u8],
    width: usize,
    height: usize,
    color: image::ExtendedColorType,
) -> Result<(), RasterError> {
    image::save_buffer(path, data, width as u32, height as u32, color).map_err(|source| {
        RasterError::Encode {
            path: path.display().to_string(),
            source,
        }
    })
}

fn encode(
    data: &[u8],
    width: usize,
    height: usize,
    color: image::ExtendedColorType,
) -> Result<Vec<u8>, RasterError> {
    use image::ImageEncoder;
    let mut out = Vec::new();
    image::codecs::png::PngEncoder::new(&mut out)
        .write_image(data, width as u32, height as u32, color)
        .map_err(|source| RasterError::Encode {
            path: "<memory>".into(),
            source,
        })?;
    Ok(out)
}

/// BT.601 luma of one pixel, rounded half up.
#[inline]
pub fn luma(rgb: [u8; 3]) -> u8 {
    let [r, g, b] = rgb.map(u32::from);
    ((299 * r + 587 * g + 114 * b + 500) / 1000) as u8
}

pub fn rgb_to_gray(img: &ImageRgb) -> ImageGray {
    ImageGray {
        width: img.width,
        height: img.height,
        data: img.pixels().map(luma).collect(),
    }
}

/// Hexcone HSV with H in [0, 179] and S, V in [0, 255].
#[inline]
pub fn hsv(rgb: [u8; 3]) -> [u8; 3] {
    let [r, g, b] = rgb.map(f64::from);
    let v = r.max(g).max(b);
    let min = r.min(g).min(b);
    let diff = v - min;
    let s = if v > 0.0 { 255.0 * diff / v } else { 0.0 };
    let mut h = if diff == 0.0 {
        0.0
    } else if v == r {
        60.0 * (g - b) / diff
    } else if v == g {
        120.0 + 60.0 * (b - r) / diff
    } else {
        240.0 + 60.0 * (r - g) / diff
    };
    if h < 0.0 {
        h += 360.0;
    }
    let mut h8 = (h / 2.0).round() as u32;
    if h8 >= 180 {
        h8 -= 180;
    }
    [h8 as u8, s.round().min(255.0) as u8, v as u8]
}

/// Per-pixel HSV triples of an RGB image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HsvImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<[u8; 3]>,
}

pub fn rgb_to_hsv(img: &ImageRgb) -> HsvImage {
    HsvImage {
        width: img.width,
        height: img.height,
        data: img.pixels().map(hsv).collect(),
    }
}

/// 1 where `lo <= value <= hi`.
pub fn threshold_range(img: &ImageGray, lo: u8, hi: u8) -> Result<BinaryMask, RasterError> {
    if lo > hi {
        return Err(RasterError::InvalidRange { lo, hi });
    }
    Ok(BinaryMask {
        width: img.width,
        height: img.height,
        data: img.data.iter().map(|&v| (lo..=hi).contains(&v) as u8).collect(),
    })
}

const CUBIC_A: f64 = -0.75;

/// Cubic-convolution tap weights for fractional offset `t` in [0, 1),
/// applied to samples at offsets -1, 0, 1, 2.
#[inline]
pub(crate) fn cubic_weights<T: Scalar>(t: T) -> [T; 4] {
    let a = T::lit(CUBIC_A);
    let one = T::one();
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    let x = t + one;
    let w0 = ((a * x - T::lit(5.0) * a) * x + T::lit(8.0) * a) * x - T::lit(4.0) * a;
    let w1 = ((a + two) * t - (a + three)) * t * t + one;
    let u = one - t;
    let w2 = ((a + two) * u - (a + three)) * u * u + one;
    [w0, w1, w2, one - w0 - w1 - w2]
}

#[inline]
fn clamp_index(i: isize, len: usize) -> usize {
    i.clamp(0, len as isize - 1) as usize
}

/// Cubic sample of a multi-channel buffer at real position `(x, y)`,
/// replicating edge pixels. Writes unclamped values into `out`.
pub(crate) fn sample_cubic<T: Scalar>(
    data: &[u8],
    width: usize,
    height: usize,
    channels: usize,
    x: T,
    y: T,
    out: &mut [T],
) {
    let (x, y) = (finite_or_zero(x), finite_or_zero(y));
    let (fx, fy) = (x.floor(), y.floor());
    let wx = cubic_weights(x - fx);
    let wy = cubic_weights(y - fy);
    let ix = fx.to_isize().unwrap_or(0);
    let iy = fy.to_isize().unwrap_or(0);
    for v in out.iter_mut() {
        *v = T::zero();
    }
    for (j, &wyj) in wy.iter().enumerate() {
        let row = clamp_index(iy + j as isize - 1, height) * width;
        for (i, &wxi) in wx.iter().enumerate() {
            let base = (row + clamp_index(ix + i as isize - 1, width)) * channels;
            let w = wxi * wyj;
            for (c, v) in out.iter_mut().enumerate() {
                *v = *v + w * T::lit(f64::from(data[base + c]));
            }
        }
    }
}

#[inline]
fn finite_or_zero<T: Scalar>(v: T) -> T {
    if v.is_finite() {
        // keep far-away coordinates from overflowing isize
        v.max(T::lit(-1e9)).min(T::lit(1e9))
    } else {
        T::zero()
    }
}

#[inline]
pub(crate) fn to_u8<T: Scalar>(v: T) -> u8 {
    v.round().max(T::zero()).min(T::lit(255.0)).to_u8().unwrap_or(0)
}

/// 4x4 cubic-convolution resize (kernel parameter -0.75, edge replication).
pub fn resize_cubic<R: Raster>(img: &R, new_w: usize, new_h: usize) -> Result<R, RasterError> {
    check_buffer(new_w, new_h, 1, new_w * new_h)?;
    let (w, h, ch) = (img.width(), img.height(), R::CHANNELS);
    if (w, h) == (new_w, new_h) {
        return R::from_raw(w, h, img.as_raw().to_vec());
    }
    let sx = w as f64 / new_w as f64;
    let sy = h as f64 / new_h as f64;
    let mut data = Vec::with_capacity(new_w * new_h * ch);
    let mut px = vec![0.0f64; ch];
    for dy in 0..new_h {
        let y = (dy as f64 + 0.5) * sy - 0.5;
        for dx in 0..new_w {
            let x = (dx as f64 + 0.5) * sx - 0.5;
            sample_cubic(img.as_raw(), w, h, ch, x, y, &mut px);
            data.extend(px.iter().map(|&v| to_u8(v)));
        }
    }
    R::from_raw(new_w, new_h, data)
}
