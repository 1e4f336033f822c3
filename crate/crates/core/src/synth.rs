//! Synthetic fringe patterns.
//!
//! Everything here builds `I = a + b·cos(φ) + n` for some phase field φ and
//! white Gaussian noise `n`. Noise is drawn from [`GaussianSource`] so the same
//! seed always reproduces the same image bit for bit. Quantization is a
//! separate step ([`crate::grid::quantize`]).

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{Mask, QuantizationSpec, RealImage};
use crate::rng::GaussianSource;

/// Background or modulation term: either uniform or a per-pixel map.
#[derive(Debug, Clone, PartialEq)]
pub enum Field {
    Constant(f64),
    Image(RealImage),
}

impl Field {
    fn at(&self, i: usize) -> f64 {
        match self {
            Field::Constant(v) => *v,
            Field::Image(img) => img.data()[i],
        }
    }

    fn check_dims(&self, dims: (usize, usize), what: &str) -> Result<()> {
        match self {
            Field::Image(img) if img.dims() != dims => Err(Error::config(format!(
                "{what} is {}x{}, model is {}x{}",
                img.width(),
                img.height(),
                dims.0,
                dims.1
            ))),
            _ => Ok(()),
        }
    }

    fn min_max(&self) -> (f64, f64) {
        match self {
            Field::Constant(v) => (*v, *v),
            Field::Image(img) => img.min_max(),
        }
    }
}

impl From<f64> for Field {
    fn from(v: f64) -> Self {
        Field::Constant(v)
    }
}

impl From<RealImage> for Field {
    fn from(img: RealImage) -> Self {
        Field::Image(img)
    }
}

/// The phase modulating the fringes, in radians.
#[derive(Debug, Clone, PartialEq)]
pub enum PhaseField {
    /// Centered quadratic whose local frequency peaks at `f_max` in the
    /// corner farthest from `center`.
    Defocus {
        center: (f64, f64),
        f_max: f64,
    },
    /// Horizontal carrier of period `period` pixels plus the height-induced
    /// phase `(2π/period)·tan(theta)·h(x, y)`.
    ProfilometryCarrier {
        period: f64,
        theta: f64,
        surface: RealImage,
    },
    Explicit(RealImage),
}

impl PhaseField {
    /// Phase map in radians at the given dimensions.
    pub fn render(&self, width: usize, height: usize) -> Result<RealImage> {
        match self {
            PhaseField::Defocus { center, f_max } => {
                make_phase_defocus(width, height, *center, *f_max)
            }
            PhaseField::ProfilometryCarrier {
                period,
                theta,
                surface,
            } => {
                check_carrier(*period, *theta)?;
                if surface.dims() != (width, height) {
                    return Err(Error::config("surface dimensions differ from model"));
                }
                let k = carrier_sensitivity(*period, *theta);
                RealImage::from_fn(width, height, |x, y| {
                    2.0 * PI * x as f64 / period + k * surface.get(x, y)
                })
            }
            PhaseField::Explicit(img) => {
                if img.dims() != (width, height) {
                    return Err(Error::config("explicit phase dimensions differ from model"));
                }
                Ok(img.clone())
            }
        }
    }

    /// Height-induced phase only (no carrier ramp), for profilometry fields.
    pub fn surface_phase(&self) -> Option<RealImage> {
        match self {
            PhaseField::ProfilometryCarrier {
                period,
                theta,
                surface,
            } => {
                let k = carrier_sensitivity(*period, *theta);
                surface.map(|h| k * h).ok()
            }
            _ => None,
        }
    }
}

/// Phase per unit height, `(2π/p)·tan θ`.
pub fn carrier_sensitivity(period: f64, theta: f64) -> f64 {
    2.0 * PI / period * theta.tan()
}

fn check_carrier(period: f64, theta: f64) -> Result<()> {
    if !(period >= 2.0) {
        return Err(Error::config(format!(
            "carrier period must be at least 2 pixels, got {period}"
        )));
    }
    if !(theta.abs() < PI / 2.0) {
        return Err(Error::config(format!(
            "sensitivity angle must be in (-π/2, π/2), got {theta}"
        )));
    }
    Ok(())
}

/// Parameters of `I = a + b·cos(φ) + n`.
#[derive(Debug, Clone, PartialEq)]
pub struct FringeModel {
    pub width: usize,
    pub height: usize,
    pub background: Field,
    pub modulation: Field,
    pub phase: PhaseField,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl FringeModel {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::config("model dimensions must be non-zero"));
        }
        let dims = (self.width, self.height);
        self.background.check_dims(dims, "background")?;
        self.modulation.check_dims(dims, "modulation")?;
        if self.modulation.min_max().0 < 0.0 {
            return Err(Error::config("modulation b must be non-negative"));
        }
        if !(self.noise_sigma >= 0.0) || !self.noise_sigma.is_finite() {
            return Err(Error::config(format!(
                "noise sigma must be finite and non-negative, got {}",
                self.noise_sigma
            )));
        }
        Ok(())
    }

    pub fn with_noise(&self, noise_sigma: f64) -> Self {
        Self {
            noise_sigma,
            ..self.clone()
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }

    /// Warning text when the noiseless fringes leave the quantizer range.
    pub fn clipping_warning(&self, spec: &QuantizationSpec) -> Option<String> {
        let (a_lo, a_hi) = self.background.min_max();
        let (_, b_hi) = self.modulation.min_max();
        let (lo, hi) = (a_lo - b_hi, a_hi + b_hi);
        (lo < spec.black_level || hi > spec.white_level).then(|| {
            format!(
                "fringes span [{lo}, {hi}] beyond quantizer range [{}, {}]; they will clip",
                spec.black_level, spec.white_level
            )
        })
    }

    fn phase_map(&self) -> Result<RealImage> {
        self.validate()?;
        self.phase.render(self.width, self.height)
    }

    /// Noise-free fringe term `b·cos(φ + shift)`, without background.
    pub fn signal(&self, shift: f64) -> Result<RealImage> {
        let phase = self.phase_map()?;
        RealImage::new(
            self.width,
            self.height,
            phase
                .data()
                .iter()
                .enumerate()
                .map(|(i, &p)| self.modulation.at(i) * (p + shift).cos())
                .collect(),
        )
    }

    fn render(&self, shift: f64, seed: u64) -> Result<RealImage> {
        let signal = self.signal(shift)?;
        let noise = self.noise(seed);
        RealImage::new(
            self.width,
            self.height,
            signal
                .data()
                .iter()
                .enumerate()
                .map(|(i, &s)| self.background.at(i) + s + noise.as_ref().map_or(0.0, |n| n[i]))
                .collect(),
        )
    }

    fn noise(&self, seed: u64) -> Option<Vec<f64>> {
        (self.noise_sigma > 0.0)
            .then(|| GaussianSource::new(seed).normals(self.width * self.height, self.noise_sigma))
    }

    /// Fringe-free frame `a + n` with noise drawn from `seed`.
    pub fn background_frame(&self, seed: u64) -> Result<RealImage> {
        self.validate()?;
        let noise = self.noise(seed);
        RealImage::new(
            self.width,
            self.height,
            (0..self.width * self.height)
                .map(|i| self.background.at(i) + noise.as_ref().map_or(0.0, |n| n[i]))
                .collect(),
        )
    }
}

/// Centered quadratic phase `π·f_max·r²/r_max`, `r_max` the distance from
/// `center` to the farthest corner. Its local frequency `|∇φ|/2π` grows
/// linearly from 0 at the center to `f_max` at that corner.
pub fn make_phase_defocus(
    width: usize,
    height: usize,
    center: (f64, f64),
    f_max: f64,
) -> Result<RealImage> {
    if !(f_max > 0.0 && f_max <= 0.5) {
        return Err(Error::config(format!(
            "defocus peak frequency must be in (0, 0.5] fringes/pixel, got {f_max}"
        )));
    }
    let (x0, y0) = center;
    let r_max = [
        (0.0, 0.0),
        (width as f64 - 1.0, 0.0),
        (0.0, height as f64 - 1.0),
    ]
    .iter()
    .chain(std::iter::once(&(width as f64 - 1.0, height as f64 - 1.0)))
    .map(|&(cx, cy)| ((cx - x0).powi(2) + (cy - y0).powi(2)).sqrt())
    .fold(0.0, f64::max);
    if r_max == 0.0 {
        return Err(Error::config(
            "defocus needs an image larger than one pixel",
        ));
    }
    RealImage::from_fn(width, height, |x, y| {
        let r2 = (x as f64 - x0).powi(2) + (y as f64 - y0).powi(2);
        PI * f_max * r2 / r_max
    })
}

/// Center of a `width × height` pixel grid.
pub fn image_center(width: usize, height: usize) -> (f64, f64) {
    ((width as f64 - 1.0) / 2.0, (height as f64 - 1.0) / 2.0)
}

/// Single interferogram `a + b·cos(φ) + n`, noise drawn from `model.seed`.
pub fn synth_fringe(model: &FringeModel) -> Result<RealImage> {
    model.render(0.0, model.seed)
}

/// Fringes and the matching background-only frame `a + n`.
///
/// The background noise is an independent draw seeded with `seed + 1`.
pub fn synth_profilometry_pair(model: &FringeModel) -> Result<(RealImage, RealImage)> {
    if !matches!(model.phase, PhaseField::ProfilometryCarrier { .. }) {
        return Err(Error::config(
            "profilometry pair needs a profilometry-carrier phase field",
        ));
    }
    let fringes = synth_fringe(model)?;
    let background = model.background_frame(model.seed.wrapping_add(1))?;
    Ok((fringes, background))
}

/// `M` phase-stepped frames sharing a model.
#[derive(Debug, Clone, PartialEq)]
pub struct FringeStack {
    frames: Vec<RealImage>,
    omega0: f64,
    model: Option<FringeModel>,
}

impl FringeStack {
    /// Wraps frames acquired elsewhere (files, other generators).
    pub fn from_frames(frames: Vec<RealImage>) -> Result<Self> {
        if frames.len() < 3 {
            return Err(Error::config(format!(
                "a phase-shifted stack needs at least 3 frames, got {}",
                frames.len()
            )));
        }
        let dims = frames[0].dims();
        if frames.iter().any(|f| f.dims() != dims) {
            return Err(Error::config("stack frames differ in size"));
        }
        let omega0 = 2.0 * PI / frames.len() as f64;
        Ok(Self {
            frames,
            omega0,
            model: None,
        })
    }

    pub fn frames(&self) -> &[RealImage] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    pub fn dims(&self) -> (usize, usize) {
        self.frames[0].dims()
    }

    pub fn model(&self) -> Option<&FringeModel> {
        self.model.as_ref()
    }

    pub fn into_frames(self) -> Vec<RealImage> {
        self.frames
    }
}

/// Frames `a + b·cos(φ + m·ω₀) + n_m`, `ω₀ = 2π/M`, frame `m` noise seeded
/// with `seed + m`.
pub fn synth_phase_shifted_stack(model: &FringeModel, frames: usize) -> Result<FringeStack> {
    if frames < 3 {
        return Err(Error::config(format!(
            "a phase-shifted stack needs at least 3 frames, got {frames}"
        )));
    }
    let omega0 = 2.0 * PI / frames as f64;
    let frames = (0..frames)
        .map(|m| model.render(m as f64 * omega0, model.seed.wrapping_add(m as u64)))
        .collect::<Result<Vec<_>>>()?;
    Ok(FringeStack {
        frames,
        omega0,
        model: Some(model.clone()),
    })
}

/// Noise level giving the requested spatial signal-to-noise ratio,
/// `sqrt(power(b·cos φ over region) / snr)`.
pub fn noise_sigma_for_snr(model: &FringeModel, snr: f64, region: Option<&Mask>) -> Result<f64> {
    if !(snr > 0.0) {
        return Err(Error::config(format!(
            "target SNR must be positive, got {snr}"
        )));
    }
    let signal_power = model.signal(0.0)?.power(region)?;
    Ok((signal_power / snr).sqrt())
}

/// Gaussian bump `amplitude·exp(-r²/(2·sigma²))` around `center`.
pub fn surface_gaussian(
    width: usize,
    height: usize,
    center: (f64, f64),
    amplitude: f64,
    sigma: f64,
) -> Result<RealImage> {
    if !(sigma > 0.0) {
        return Err(Error::config("bump width must be positive"));
    }
    RealImage::from_fn(width, height, |x, y| {
        let r2 = (x as f64 - center.0).powi(2) + (y as f64 - center.1).powi(2);
        amplitude * (-r2 / (2.0 * sigma * sigma)).exp()
    })
}

/// Planar surface `slope_x·x + slope_y·y`.
pub fn surface_ramp(width: usize, height: usize, slope_x: f64, slope_y: f64) -> Result<RealImage> {
    RealImage::from_fn(width, height, |x, y| {
        slope_x * x as f64 + slope_y * y as f64
    })
}
