//! Single-lobe Fourier demodulation of carrier fringes.
//!
//! A spatial carrier moves the `e^{iφ}` half of `b·cos φ` away from DC. Keeping
//! that lobe and transforming back yields the analytic signal `(b/2)·e^{iφ}`.
//! No phase unwrapping is done here.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{ComplexImage, Mask, RealImage};
use crate::spectral::{dft2, filter_spectrum, idft2, SpectralRegions, Spectrum};

/// Fraction of the lobe energy the fitted radius must enclose.
const LOBE_ENERGY: f64 = 0.99;
/// Smallest fitted radius, in bins of the shorter image axis.
const MIN_RADIUS_BINS: f64 = 2.0;
/// Bins around DC the filter must leave untouched.
const DC_GUARD_BINS: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LobeProfile {
    /// 1 inside the radius, 0 outside.
    Hard,
    /// 1 inside the radius, falling to 0 over `taper × radius` beyond it.
    RaisedCosine { taper: f64 },
}

impl Default for LobeProfile {
    fn default() -> Self {
        LobeProfile::RaisedCosine { taper: 0.2 }
    }
}

/// Circular pass band around one spectral lobe, in cycles/pixel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LobeFilter {
    pub center: (f64, f64),
    pub radius: f64,
    pub profile: LobeProfile,
}

impl LobeFilter {
    pub fn new(center: (f64, f64), radius: f64, profile: LobeProfile) -> Result<Self> {
        let filter = Self {
            center,
            radius,
            profile,
        };
        filter.validate()?;
        Ok(filter)
    }

    pub fn with_profile(self, profile: LobeProfile) -> Self {
        Self { profile, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::config(format!(
                "lobe radius must be positive, got {}",
                self.radius
            )));
        }
        if !(self.center.0.is_finite() && self.center.1.is_finite()) {
            return Err(Error::config("lobe center must be finite"));
        }
        if let LobeProfile::RaisedCosine { taper } = self.profile {
            if !(taper >= 0.0 && taper.is_finite()) {
                return Err(Error::config(format!(
                    "taper must be non-negative, got {taper}"
                )));
            }
        }
        Ok(())
    }

    /// Radius beyond which the weight is zero.
    pub fn outer_radius(&self) -> f64 {
        match self.profile {
            LobeProfile::Hard => self.radius,
            LobeProfile::RaisedCosine { taper } => self.radius * (1.0 + taper),
        }
    }

    /// Weight at frequency `(u, v)`.
    pub fn weight(&self, u: f64, v: f64) -> f64 {
        let d = (u - self.center.0).hypot(v - self.center.1);
        if d <= self.radius {
            return 1.0;
        }
        match self.profile {
            LobeProfile::Hard => 0.0,
            LobeProfile::RaisedCosine { taper } => {
                let width = taper * self.radius;
                if width == 0.0 || d >= self.radius + width {
                    0.0
                } else {
                    0.5 * (1.0 + (PI * (d - self.radius) / width).cos())
                }
            }
        }
    }

    /// Refuses filters that pass any bin within the DC guard of a
    /// `width × height` spectrum.
    pub fn check_dims(&self, width: usize, height: usize) -> Result<()> {
        self.validate()?;
        let guard = DC_GUARD_BINS / width.min(height) as f64;
        let distance = self.center.0.hypot(self.center.1);
        if distance <= self.outer_radius() + guard {
            return Err(Error::domain(format!(
                "lobe filter at ({:.4}, {:.4}) with radius {:.4} overlaps DC",
                self.center.0,
                self.center.1,
                self.outer_radius()
            )));
        }
        Ok(())
    }
}

/// Bins of the half plane `u > 0` (plus `u = 0, v > 0`).
fn in_half_plane(spectrum: &Spectrum, j: usize, k: usize) -> bool {
    let (u, v) = spectrum.frequency(j, k);
    u > 0.0 || (u == 0.0 && v > 0.0)
}

/// 8-connected components of `mask`, without wrap-around.
fn components(mask: &Mask) -> Vec<Vec<usize>> {
    let (w, h) = mask.dims();
    let mut label = vec![false; w * h];
    let mut out = Vec::new();
    for start in 0..w * h {
        if label[start] || !mask.bits()[start] {
            continue;
        }
        label[start] = true;
        let mut stack = vec![start];
        let mut members = Vec::new();
        while let Some(i) = stack.pop() {
            members.push(i);
            let (x, y) = ((i % w) as isize, (i / w) as isize);
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                        continue;
                    }
                    let n = ny as usize * w + nx as usize;
                    if !label[n] && mask.bits()[n] {
                        label[n] = true;
                        stack.push(n);
                    }
                }
            }
        }
        out.push(members);
    }
    out
}

/// Fits a filter to the strongest signal component in the `u > 0` half plane.
///
/// The center is the component's energy centroid and the radius the smallest
/// one around it holding 99% of the component's noise-corrected energy (at
/// least two bins). The default raised-cosine taper is applied outside it.
pub fn fit_lobe(fringes: &RealImage, regions: &SpectralRegions) -> Result<LobeFilter> {
    let spectrum = dft2(fringes)?;
    let eta = spectrum.noise_density(regions)?;
    fit_lobe_spectrum(&spectrum, regions, eta)
}

pub fn fit_lobe_spectrum(
    spectrum: &Spectrum,
    regions: &SpectralRegions,
    eta: f64,
) -> Result<LobeFilter> {
    let (w, h) = spectrum.dims();
    if regions.dims() != (w, h) {
        return Err(Error::config("regions do not match the image size"));
    }
    let no_carrier = || Error::domain("no carrier detected");
    let half = Mask::from_fn(w, h, |j, k| {
        regions.sn.get(j, k) && in_half_plane(spectrum, j, k)
    });
    let power = spectrum.power();
    let energy = |i: usize| (power[i] - eta).max(0.0);
    let lobe = components(&half)
        .into_iter()
        .map(|c| {
            let e: f64 = c.iter().map(|&i| energy(i)).sum();
            (c, e)
        })
        .filter(|(_, e)| *e > 0.0)
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or_else(no_carrier)?
        .0;

    let total: f64 = lobe.iter().map(|&i| energy(i)).sum();
    let (mut cu, mut cv) = (0.0, 0.0);
    for &i in &lobe {
        let (u, v) = spectrum.frequency(i % w, i / w);
        cu += energy(i) * u;
        cv += energy(i) * v;
    }
    let center = (cu / total, cv / total);

    let mut by_distance: Vec<(f64, f64)> = lobe
        .iter()
        .map(|&i| {
            let (u, v) = spectrum.frequency(i % w, i / w);
            ((u - center.0).hypot(v - center.1), energy(i))
        })
        .collect();
    by_distance.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut acc = 0.0;
    let mut radius = 0.0;
    for (d, e) in by_distance {
        acc += e;
        radius = d;
        if acc >= LOBE_ENERGY * total {
            break;
        }
    }
    let radius = radius.max(MIN_RADIUS_BINS / w.min(h) as f64);
    let filter = LobeFilter {
        center,
        radius,
        profile: LobeProfile::default(),
    };
    filter.check_dims(w, h).map_err(|_| no_carrier())?;
    Ok(filter)
}

/// Keeps the filtered lobe and returns the analytic signal `(b/2)·e^{iφ}`.
///
/// With `keep_carrier = false` the carrier `e^{i2π(u₀x + v₀y)}` at the filter
/// center is divided out, leaving the phase relative to the carrier.
pub fn demodulate_carrier(
    fringes: &RealImage,
    filter: &LobeFilter,
    keep_carrier: bool,
) -> Result<ComplexImage> {
    let (w, h) = fringes.dims();
    filter.check_dims(w, h)?;
    let spectrum = dft2(fringes)?;
    let filtered = filter_spectrum(&spectrum, |j, k| {
        let (u, v) = spectrum.frequency(j, k);
        filter.weight(u, v)
    })?;
    let analytic = idft2(&filtered)?;
    if keep_carrier {
        return Ok(analytic);
    }
    let (u0, v0) = filter.center;
    ComplexImage::from_fn(w, h, |x, y| {
        let ramp = -2.0 * PI * (u0 * x as f64 + v0 * y as f64);
        analytic.get(x, y) * Complex64::from_polar(1.0, ramp)
    })
}

/// Energy of the filtered spectrum over the energy of the `u > 0` half of
/// the noise-corrected signal region.
pub fn lobe_containment(
    fringes: &RealImage,
    regions: &SpectralRegions,
    filter: &LobeFilter,
) -> Result<f64> {
    let spectrum = dft2(fringes)?;
    let eta = spectrum.noise_density(regions)?;
    let (w, _) = spectrum.dims();
    let (mut inside, mut total) = (0.0, 0.0);
    for (i, c) in spectrum.data().data().iter().enumerate() {
        let (j, k) = (i % w, i / w);
        if !regions.sn.get(j, k) || !in_half_plane(&spectrum, j, k) {
            continue;
        }
        let e = (c.norm_sqr() - eta).max(0.0);
        let (u, v) = spectrum.frequency(j, k);
        total += e;
        inside += e * filter.weight(u, v).powi(2);
    }
    if total == 0.0 {
        return Err(Error::domain("no signal energy in the signal region"));
    }
    Ok(inside / total)
}

/// Per-pixel argument in `(−π, π]`.
///
/// The returned image's mask marks pixels with non-zero magnitude; the others
/// are set to 0.
pub fn wrapped_phase(analytic: &ComplexImage) -> RealImage {
    let (w, h) = analytic.dims();
    let valid = Mask::from_fn(w, h, |x, y| analytic.get(x, y) != Complex64::default());
    let phase = RealImage::from_fn(w, h, |x, y| {
        let z = analytic.get(x, y);
        if z == Complex64::default() {
            0.0
        } else {
            wrap(z.arg())
        }
    })
    .expect("argument is finite");
    phase.with_mask(valid).expect("mask matches")
}

/// Maps an angle to `(−π, π]`.
pub fn wrap(angle: f64) -> f64 {
    let r = angle.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}
