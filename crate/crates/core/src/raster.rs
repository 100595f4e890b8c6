//! Row-major pixel grids and the normalized color types stored in them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A `width × height` grid stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

impl<T> Raster<T> {
    pub fn from_vec(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Data(format!(
                "raster dimensions must be positive, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::Data(format!(
                "raster of {width}x{height} needs {} values, got {}",
                width * height,
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        assert!(
            width > 0 && height > 0,
            "raster dimensions must be positive"
        );
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

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn index_of(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> &T {
        &self.data[y * self.width + x]
    }

    #[inline]
    pub fn get_mut(&mut self, x: usize, y: usize) -> &mut T {
        let w = self.width;
        &mut self.data[y * w + x]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, T> {
        self.data.chunks_exact(self.width)
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Raster<U> {
        Raster {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn ensure_same_dims<U>(&self, other: &Raster<U>) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::Shape {
                expected: self.dims(),
                actual: other.dims(),
            });
        }
        Ok(())
    }
}

/// An RGB value with each channel normalized to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ColorTriple {
    pub r: f64,
    pub g: f64,
    pub b: f64,
}

impl ColorTriple {
    pub const BLACK: Self = Self::gray(0.0);
    pub const WHITE: Self = Self::gray(1.0);

    pub const fn new(r: f64, g: f64, b: f64) -> Self {
        Self { r, g, b }
    }

    pub const fn gray(v: f64) -> Self {
        Self { r: v, g: v, b: v }
    }

    /// Build a color after checking every channel is within `[0, 1]`.
    pub fn checked(r: f64, g: f64, b: f64) -> Result<Self> {
        let c = Self { r, g, b };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        for v in self.channels() {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Data(format!(
                    "color channel {v} outside [0, 1] in {self:?}"
                )));
            }
        }
        Ok(())
    }

    pub fn channels(&self) -> [f64; 3] {
        [self.r, self.g, self.b]
    }

    pub fn from_channels(c: [f64; 3]) -> Self {
        Self::new(c[0], c[1], c[2])
    }

    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Self {
        Self::new(f(self.r), f(self.g), f(self.b))
    }

    pub fn min_channel(&self) -> f64 {
        self.r.min(self.g).min(self.b)
    }

    pub fn sum(&self) -> f64 {
        self.r + self.g + self.b
    }
}

/// Bit depth of the container an image was decoded from or will be encoded to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BitDepth {
    #[serde(rename = "8")]
    Eight,
    #[serde(rename = "16")]
    Sixteen,
}

impl BitDepth {
    pub fn max_value(self) -> f64 {
        match self {
            BitDepth::Eight => 255.0,
            BitDepth::Sixteen => 65535.0,
        }
    }

    pub fn bits(self) -> u8 {
        match self {
            BitDepth::Eight => 8,
            BitDepth::Sixteen => 16,
        }
    }

    pub fn normalize(self, code: u16) -> f64 {
        f64::from(code) / self.max_value()
    }

    /// Quantize a normalized value to an integer code, clamping to the
    /// representable range and rounding half to even.
    pub fn quantize(self, v: f64) -> u16 {
        let v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
        (v * self.max_value()).round_ties_even() as u16
    }

    /// Size of one quantization step in normalized units.
    pub fn lsb(self) -> f64 {
        1.0 / self.max_value()
    }
}

/// An RGB image with normalized channels and the bit depth it maps to on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct ColorRaster {
    pub pixels: Raster<ColorTriple>,
    pub bit_depth: BitDepth,
}

impl ColorRaster {
    pub fn new(pixels: Raster<ColorTriple>, bit_depth: BitDepth) -> Self {
        Self { pixels, bit_depth }
    }

    /// Decode integer channel codes (`[r, g, b, r, g, b, ...]`, row-major).
    pub fn from_codes(
        width: usize,
        height: usize,
        codes: &[u16],
        bit_depth: BitDepth,
    ) -> Result<Self> {
        if codes.len() != width * height * 3 {
            return Err(Error::Data(format!(
                "expected {} channel codes for {width}x{height}, got {}",
                width * height * 3,
                codes.len()
            )));
        }
        let max = bit_depth.max_value();
        if codes.iter().any(|&c| f64::from(c) > max) {
            return Err(Error::Data(format!(
                "channel code exceeds {}-bit range",
                bit_depth.bits()
            )));
        }
        let data = codes
            .chunks_exact(3)
            .map(|c| {
                ColorTriple::new(
                    bit_depth.normalize(c[0]),
                    bit_depth.normalize(c[1]),
                    bit_depth.normalize(c[2]),
                )
            })
            .collect();
        Ok(Self::new(Raster::from_vec(width, height, data)?, bit_depth))
    }

    /// Quantized channel codes at this raster's bit depth.
    pub fn to_codes(&self) -> Vec<u16> {
        let depth = self.bit_depth;
        self.pixels
            .as_slice()
            .iter()
            .flat_map(|p| p.channels().map(|v| depth.quantize(v)))
            .collect()
    }

    pub fn width(&self) -> usize {
        self.pixels.width()
    }

    pub fn height(&self) -> usize {
        self.pixels.height()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.pixels.dims()
    }

    pub fn validate(&self) -> Result<()> {
        self.pixels.as_slice().iter().try_for_each(|p| p.validate())
    }
}

/// Per-pixel integer class ids.
pub type LabelRaster = Raster<u16>;
