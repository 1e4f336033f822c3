//! Image containers shared by every stage of the pipeline.
//!
//! Images are immutable values stored in row-major order. Constructors reject
//! non-finite samples so downstream spectral code never sees NaN or Inf.

mod io;

pub use io::{
    load_complex, load_image, png_bytes, save_complex, save_image, save_mask_pgm, save_phase_pgm,
    write_atomic, BitDepth, StoredImage,
};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Boolean grid, used both for spatial valid regions and spectral regions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl Mask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::config(format!(
                "mask has {} entries, expected {}x{}",
                bits.len(),
                width,
                height
            )));
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn filled(width: usize, height: usize, value: bool) -> Self {
        Self {
            width,
            height,
            bits: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            bits,
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

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn union(&self, other: &Mask) -> Mask {
        self.zip_with(other, |a, b| a || b)
    }

    pub fn intersection(&self, other: &Mask) -> Mask {
        self.zip_with(other, |a, b| a && b)
    }

    pub fn complement(&self) -> Mask {
        Mask {
            width: self.width,
            height: self.height,
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }

    fn zip_with(&self, other: &Mask, f: impl Fn(bool, bool) -> bool) -> Mask {
        assert_eq!(self.dims(), other.dims(), "mask dimensions differ");
        Mask {
            width: self.width,
            height: self.height,
            bits: self
                .bits
                .iter()
                .zip(&other.bits)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }
}

/// Real-valued image with an optional valid-fringe region.
#[derive(Debug, Clone, PartialEq)]
pub struct RealImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
    mask: Option<Mask>,
}

impl RealImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::config("image dimensions must be non-zero"));
        }
        if data.len() != width * height {
            return Err(Error::config(format!(
                "image has {} samples, expected {}x{}",
                data.len(),
                width,
                height
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::domain(format!("non-finite sample at index {i}")));
        }
        Ok(Self {
            width,
            height,
            data,
            mask: None,
        })
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    pub fn with_mask(mut self, mask: Mask) -> Result<Self> {
        if mask.dims() != self.dims() {
            return Err(Error::config(format!(
                "mask is {}x{}, image is {}x{}",
                mask.width, mask.height, self.width, self.height
            )));
        }
        self.mask = Some(mask);
        Ok(self)
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

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn mask(&self) -> Option<&Mask> {
        self.mask.as_ref()
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    /// Applies `f` to every sample, keeping the mask.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let mut out = Self::new(
            self.width,
            self.height,
            self.data.iter().map(|&v| f(v)).collect(),
        )?;
        out.mask = self.mask.clone();
        Ok(out)
    }

    /// Combines two images sample by sample. The mask of `self` is kept.
    pub fn zip_map(&self, other: &RealImage, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.dims() != other.dims() {
            return Err(Error::config(format!(
                "dimension mismatch: {}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| f(a, b))
            .collect();
        let mut out = Self::new(self.width, self.height, data)?;
        out.mask = self.mask.clone();
        Ok(out)
    }

    pub fn scale(&self, k: f64) -> Result<Self> {
        self.map(|v| k * v)
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    pub fn to_complex(&self) -> ComplexImage {
        ComplexImage {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        }
    }

    /// Mean squared sample over `region`. The image's own mask is not implied.
    pub fn power(&self, region: Option<&Mask>) -> Result<f64> {
        mean_over(
            self.width,
            self.height,
            region,
            self.data.iter().map(|v| v * v),
        )
    }

    /// Number of samples inside the image's valid region (all when unmasked).
    pub fn valid_count(&self) -> usize {
        self.mask.as_ref().map_or(self.data.len(), Mask::count)
    }
}

/// Complex-valued image: spectra and analytic signals.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexImage {
    width: usize,
    height: usize,
    data: Vec<Complex64>,
}

impl ComplexImage {
    pub fn new(width: usize, height: usize, data: Vec<Complex64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::config("image dimensions must be non-zero"));
        }
        if data.len() != width * height {
            return Err(Error::config(format!(
                "complex image has {} samples, expected {}x{}",
                data.len(),
                width,
                height
            )));
        }
        if let Some(i) = data
            .iter()
            .position(|c| !c.re.is_finite() || !c.im.is_finite())
        {
            return Err(Error::domain(format!(
                "non-finite complex sample at index {i}"
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> Complex64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
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

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    pub fn get(&self, x: usize, y: usize) -> Complex64 {
        self.data[y * self.width + x]
    }

    pub fn re(&self) -> RealImage {
        self.real_part(|c| c.re)
    }

    pub fn im(&self) -> RealImage {
        self.real_part(|c| c.im)
    }

    pub fn abs(&self) -> RealImage {
        self.real_part(|c| c.norm())
    }

    fn real_part(&self, f: impl Fn(&Complex64) -> f64) -> RealImage {
        RealImage {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(f).collect(),
            mask: None,
        }
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Result<Self> {
        Self::new(
            self.width,
            self.height,
            self.data.iter().map(|&c| f(c)).collect(),
        )
    }

    pub fn power(&self, region: Option<&Mask>) -> Result<f64> {
        mean_over(
            self.width,
            self.height,
            region,
            self.data.iter().map(|c| c.norm_sqr()),
        )
    }
}

/// Mean squared magnitude, shared by real and complex images.
pub trait Power {
    fn power(&self, region: Option<&Mask>) -> Result<f64>;
}

impl Power for RealImage {
    fn power(&self, region: Option<&Mask>) -> Result<f64> {
        RealImage::power(self, region)
    }
}

impl Power for ComplexImage {
    fn power(&self, region: Option<&Mask>) -> Result<f64> {
        ComplexImage::power(self, region)
    }
}

/// `(1/|region|) Σ |sample|²`, over the whole image when `region` is `None`.
pub fn power<I: Power + ?Sized>(img: &I, region: Option<&Mask>) -> Result<f64> {
    img.power(region)
}

fn mean_over(
    width: usize,
    height: usize,
    region: Option<&Mask>,
    values: impl Iterator<Item = f64>,
) -> Result<f64> {
    match region {
        None => {
            let n = width * height;
            if n == 0 {
                return Err(Error::domain("power over an empty image"));
            }
            Ok(values.sum::<f64>() / n as f64)
        }
        Some(mask) => {
            if mask.dims() != (width, height) {
                return Err(Error::config("region mask dimensions differ from image"));
            }
            let count = mask.count();
            if count == 0 {
                return Err(Error::domain("power over an empty region"));
            }
            let sum: f64 = values
                .zip(mask.bits())
                .filter(|(_, &m)| m)
                .map(|(v, _)| v)
                .sum();
            Ok(sum / count as f64)
        }
    }
}

/// Uniform mid-tread quantizer with clipping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantizationSpec {
    pub bits: u32,
    pub black_level: f64,
    pub white_level: f64,
}

impl QuantizationSpec {
    pub fn new(bits: u32, black_level: f64, white_level: f64) -> Result<Self> {
        let spec = Self {
            bits,
            black_level,
            white_level,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Codes equal to real values: black 0, white `2^bits - 1`.
    pub fn codes(bits: u32) -> Result<Self> {
        Self::new(bits, 0.0, ((1u64 << bits.min(16)) - 1) as f64)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=16).contains(&self.bits) {
            return Err(Error::config(format!(
                "quantization bits must be in [1, 16], got {}",
                self.bits
            )));
        }
        if !self.black_level.is_finite()
            || !self.white_level.is_finite()
            || self.black_level >= self.white_level
        {
            return Err(Error::config(format!(
                "quantization levels must satisfy black < white, got [{}, {}]",
                self.black_level, self.white_level
            )));
        }
        Ok(())
    }

    pub fn max_code(&self) -> u32 {
        (1u32 << self.bits) - 1
    }

    /// Quantization step in real units.
    pub fn step(&self) -> f64 {
        (self.white_level - self.black_level) / self.max_code() as f64
    }

    pub fn code(&self, value: f64) -> u32 {
        let c = ((value - self.black_level) / self.step()).round();
        c.clamp(0.0, self.max_code() as f64) as u32
    }

    pub fn level(&self, code: u32) -> f64 {
        self.black_level + code as f64 * self.step()
    }
}

/// Maps every sample to its nearest code level, clipping outside the range.
pub fn quantize(img: &RealImage, spec: &QuantizationSpec) -> Result<RealImage> {
    spec.validate()?;
    img.map(|v| spec.level(spec.code(v)))
}

/// Integer codes of `img` under `spec`, row-major.
pub fn quantize_codes(img: &RealImage, spec: &QuantizationSpec) -> Result<Vec<u32>> {
    spec.validate()?;
    Ok(img.data().iter().map(|&v| spec.code(v)).collect())
}
