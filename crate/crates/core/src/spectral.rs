//! 2-D Fourier analysis of fringe images.
//!
//! Transforms are unitary (`1/√(W·H)` in both directions) and spectra are
//! stored DC-centered: bin `(j, k)` of a `W × H` spectrum sits at frequency
//! `u = (j − W/2)/W`, `v = (k − H/2)/H` cycles/pixel (integer division).
//! With this normalization white noise of variance σ² has a flat expected
//! power of σ² per bin, so the noise floor η is directly a variance.

use num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{ComplexImage, Mask, RealImage};

/// Noise floors below this fraction of the mean bin power are FFT round-off.
const ROUNDOFF_FLOOR: f64 = 1e-24;

/// What a spectrum was computed from.
///
/// Real images have Hermitian spectra with the fringe energy split over two
/// mirrored lobes. Analytic signals carry a single lobe.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalKind {
    Real,
    Analytic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    data: ComplexImage,
    kind: SignalKind,
}

impl Spectrum {
    pub fn data(&self) -> &ComplexImage {
        &self.data
    }

    pub fn kind(&self) -> SignalKind {
        self.kind
    }

    pub fn with_kind(mut self, kind: SignalKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn dims(&self) -> (usize, usize) {
        self.data.dims()
    }

    pub fn bins(&self) -> usize {
        self.data.len()
    }

    /// Frequency `(u, v)` in cycles/pixel of the DC-centered bin `(j, k)`.
    pub fn frequency(&self, j: usize, k: usize) -> (f64, f64) {
        let (w, h) = self.dims();
        (centered_freq(j, w), centered_freq(k, h))
    }

    pub fn radius(&self, j: usize, k: usize) -> f64 {
        let (u, v) = self.frequency(j, k);
        u.hypot(v)
    }

    /// Bin position after point reflection through DC, `(u, v) → (−u, −v)`.
    pub fn mirror(&self, j: usize, k: usize) -> (usize, usize) {
        let (w, h) = self.dims();
        (mirror_index(j, w), mirror_index(k, h))
    }

    pub fn power(&self) -> Vec<f64> {
        self.data.data().iter().map(|c| c.norm_sqr()).collect()
    }

    pub fn total_energy(&self) -> f64 {
        self.data.data().iter().map(|c| c.norm_sqr()).sum()
    }

    fn roundoff_floor(&self) -> f64 {
        ROUNDOFF_FLOOR * self.total_energy() / self.bins() as f64
    }

    /// Noise-power density over the noise-only region,
    /// `η = (1/A_NR) Σ_{NR} |S(u,v)|²`.
    ///
    /// Values at the FFT round-off level are reported as exactly zero.
    pub fn noise_density(&self, regions: &SpectralRegions) -> Result<f64> {
        regions.check_dims(self.dims())?;
        let count = regions.nr.count();
        if count == 0 {
            return Err(Error::domain("noise-only region is empty"));
        }
        let sum: f64 = self
            .data
            .data()
            .iter()
            .zip(regions.nr.bits())
            .filter(|(_, &m)| m)
            .map(|(c, _)| c.norm_sqr())
            .sum();
        let eta = sum / count as f64;
        Ok(if eta <= self.roundoff_floor() {
            0.0
        } else {
            eta
        })
    }

    /// Noise-corrected energy `max(|S|² − η, 0)` of every signal bin.
    fn corrected<'a>(
        &'a self,
        regions: &'a SpectralRegions,
        eta: f64,
    ) -> impl Iterator<Item = (usize, f64)> + 'a {
        self.data
            .data()
            .iter()
            .zip(regions.sn.bits())
            .enumerate()
            .filter(|(_, (_, &m))| m)
            .map(move |(i, (c, _))| (i, (c.norm_sqr() - eta).max(0.0)))
    }

    pub fn signal_energy(&self, regions: &SpectralRegions, eta: f64) -> f64 {
        self.corrected(regions, eta).map(|(_, e)| e).sum()
    }

    /// Signal-to-noise ratio against the full-band noise power.
    ///
    /// `SNR_K = Σ_SN max(|S|² − η, 0) / (W·H·η)` for real fringes. Analytic
    /// signals are scored against the per-quadrature floor `η/2`, which puts
    /// them on the same scale as the real fringes they were demodulated
    /// from: a least-squares phase-shifting step over `M` frames multiplies
    /// the fringe SNR by `M`. Returns `+∞` when η is zero and signal energy
    /// is present, and `0` when there is no signal energy.
    pub fn snr(&self, regions: &SpectralRegions, eta: f64) -> Result<f64> {
        if !(eta >= 0.0) {
            return Err(Error::domain(format!(
                "noise density must be non-negative, got {eta}"
            )));
        }
        regions.check_dims(self.dims())?;
        let numerator = self.signal_energy(regions, eta);
        if numerator == 0.0 {
            return Ok(0.0);
        }
        if eta == 0.0 {
            return Ok(f64::INFINITY);
        }
        let noise_power = match self.kind {
            SignalKind::Real => self.bins() as f64 * eta,
            SignalKind::Analytic => self.bins() as f64 * eta / 2.0,
        };
        Ok(numerator / noise_power)
    }

    /// Radius (cycles/pixel) of the smallest DC-centered disk holding
    /// `energy_fraction` of the noise-corrected signal energy.
    pub fn bandwidth(
        &self,
        regions: &SpectralRegions,
        eta: f64,
        energy_fraction: f64,
    ) -> Result<f64> {
        if !(energy_fraction > 0.0 && energy_fraction < 1.0) {
            return Err(Error::config(format!(
                "energy fraction must be in (0, 1), got {energy_fraction}"
            )));
        }
        regions.check_dims(self.dims())?;
        let (w, _) = self.dims();
        let mut bins: Vec<(f64, f64)> = self
            .corrected(regions, eta)
            .filter(|&(_, e)| e > 0.0)
            .map(|(i, e)| (self.radius(i % w, i / w), e))
            .collect();
        let total: f64 = bins.iter().map(|b| b.1).sum();
        if total == 0.0 {
            return Err(Error::domain("no signal energy in the signal region"));
        }
        bins.sort_by(|a, b| a.0.total_cmp(&b.0));
        let target = energy_fraction * total;
        let mut acc = 0.0;
        for (r, e) in &bins {
            acc += e;
            if acc >= target {
                return Ok(*r);
            }
        }
        Ok(bins.last().map_or(0.0, |b| b.0))
    }
}

fn centered_freq(j: usize, n: usize) -> f64 {
    (j as f64 - (n / 2) as f64) / n as f64
}

fn mirror_index(j: usize, n: usize) -> usize {
    (2 * (n / 2) + n - j) % n
}

/// Signal-plus-noise, noise-only and DC regions of a spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralRegions {
    pub sn: Mask,
    pub nr: Mask,
    pub dc: Mask,
    /// Set when detection found no signal bins.
    pub sn_empty: bool,
}

impl SpectralRegions {
    pub fn new(sn: Mask, nr: Mask, dc: Mask) -> Result<Self> {
        if sn.dims() != nr.dims() || sn.dims() != dc.dims() {
            return Err(Error::config("region masks differ in size"));
        }
        let overlap = sn.intersection(&nr).count()
            + sn.intersection(&dc).count()
            + nr.intersection(&dc).count();
        if overlap > 0 {
            return Err(Error::config(
                "signal, noise and DC regions must be disjoint",
            ));
        }
        let sn_empty = sn.is_empty();
        Ok(Self {
            sn,
            nr,
            dc,
            sn_empty,
        })
    }

    /// Given signal region, a DC disk of `dc_radius` bins, noise everywhere else.
    pub fn from_signal(sn: &Mask, dc_radius: f64) -> Result<Self> {
        let (w, h) = sn.dims();
        let dc = dc_disk(w, h, dc_radius);
        let sn = sn.intersection(&dc.complement());
        let nr = sn.union(&dc).complement();
        Self::new(sn, nr, dc)
    }

    pub fn dims(&self) -> (usize, usize) {
        self.sn.dims()
    }

    fn check_dims(&self, dims: (usize, usize)) -> Result<()> {
        if self.dims() != dims {
            return Err(Error::config(format!(
                "regions are {}x{}, spectrum is {}x{}",
                self.dims().0,
                self.dims().1,
                dims.0,
                dims.1
            )));
        }
        Ok(())
    }

    /// True when every mask satisfies `mask(u, v) = mask(−u, −v)`.
    pub fn is_symmetric(&self) -> bool {
        [&self.sn, &self.nr, &self.dc]
            .iter()
            .all(|m| is_point_symmetric(m))
    }
}

/// Disk of `radius` bins (index units) around the DC bin.
pub fn dc_disk(width: usize, height: usize, radius: f64) -> Mask {
    let (cx, cy) = ((width / 2) as f64, (height / 2) as f64);
    Mask::from_fn(width, height, |j, k| {
        (j as f64 - cx).hypot(k as f64 - cy) <= radius
    })
}

pub fn is_point_symmetric(mask: &Mask) -> bool {
    let (w, h) = mask.dims();
    (0..h)
        .all(|k| (0..w).all(|j| mask.get(j, k) == mask.get(mirror_index(j, w), mirror_index(k, h))))
}

/// Tuning of [`default_regions`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionParams {
    /// DC exclusion radius in bins.
    pub dc_radius: f64,
    /// Detection threshold as a multiple of the bootstrap noise floor.
    pub threshold: f64,
    /// Share of bins farthest from DC used for the bootstrap floor.
    pub annulus_fraction: f64,
    /// Dilation of the detected region, in bins.
    pub dilation: usize,
}

impl Default for RegionParams {
    fn default() -> Self {
        Self {
            dc_radius: 3.0,
            threshold: 3.0,
            annulus_fraction: 0.1,
            dilation: 1,
        }
    }
}

/// Automatic region detection on a real fringe image.
///
/// `eta_probe`, when given, is an image holding noise only (a background
/// frame); its non-DC mean power is the bootstrap floor. Otherwise the floor
/// is the mean power of the outer annulus of the fringe spectrum.
pub fn default_regions(
    fringes: &RealImage,
    eta_probe: Option<&RealImage>,
) -> Result<SpectralRegions> {
    let spectrum = dft2(fringes)?;
    let probe = match eta_probe {
        Some(img) => Some(probe_floor(&dft2(img)?, RegionParams::default().dc_radius)?),
        None => None,
    };
    detect_regions(&spectrum, probe, &RegionParams::default())
}

/// Mean power of every non-DC bin, the floor of a noise-only image.
pub fn probe_floor(spectrum: &Spectrum, dc_radius: f64) -> Result<f64> {
    let (w, h) = spectrum.dims();
    let regions = SpectralRegions::from_signal(&Mask::filled(w, h, false), dc_radius)?;
    spectrum.noise_density(&regions)
}

/// Region detection on any spectrum: the signal region holds the bins whose
/// 3×3 box-smoothed power exceeds `threshold · η̂`, dilated, with DC removed.
/// Masks are made point-symmetric for real-image spectra.
pub fn detect_regions(
    spectrum: &Spectrum,
    probe_eta: Option<f64>,
    params: &RegionParams,
) -> Result<SpectralRegions> {
    let (w, h) = spectrum.dims();
    let power = spectrum.power();
    let eta_hat = match probe_eta {
        Some(eta) => eta,
        None => annulus_floor(spectrum, &power, params.annulus_fraction),
    }
    .max(spectrum.roundoff_floor());
    let smoothed = box_smooth(&power, w, h);
    let level = params.threshold * eta_hat;
    let mut sn = Mask::new(w, h, smoothed.iter().map(|&p| p > level).collect())?;
    for _ in 0..params.dilation {
        sn = dilate(&sn);
    }
    if spectrum.kind == SignalKind::Real {
        sn = symmetrize(&sn);
    }
    SpectralRegions::from_signal(&sn, params.dc_radius)
}

/// Regions for data whose noiseless version is known.
///
/// The signal region is the smallest set of non-DC bins holding
/// `energy_fraction` of the reference spectrum's energy, strongest bins first.
/// Unlike [`detect_regions`] this does not depend on the noise level.
pub fn energy_regions(
    reference: &Spectrum,
    energy_fraction: f64,
    dc_radius: f64,
) -> Result<SpectralRegions> {
    if !(energy_fraction > 0.0 && energy_fraction <= 1.0) {
        return Err(Error::config(format!(
            "energy fraction must be in (0, 1], got {energy_fraction}"
        )));
    }
    let (w, h) = reference.dims();
    let dc = dc_disk(w, h, dc_radius);
    let power = reference.power();
    let mut order: Vec<usize> = (0..power.len()).filter(|&i| !dc.bits()[i]).collect();
    order.sort_by(|&a, &b| power[b].total_cmp(&power[a]));
    let total: f64 = order.iter().map(|&i| power[i]).sum();
    let mut bits = vec![false; power.len()];
    let mut acc = 0.0;
    for &i in &order {
        if acc >= energy_fraction * total || power[i] == 0.0 {
            break;
        }
        acc += power[i];
        bits[i] = true;
    }
    let mut sn = Mask::new(w, h, bits)?;
    if reference.kind == SignalKind::Real {
        sn = symmetrize(&sn);
    }
    SpectralRegions::from_signal(&sn, dc_radius)
}

/// [`energy_regions`] of a noiseless real image at 99.9% of its energy.
pub fn reference_regions(reference: &RealImage) -> Result<SpectralRegions> {
    energy_regions(&dft2(reference)?, 0.999, RegionParams::default().dc_radius)
}

fn annulus_floor(spectrum: &Spectrum, power: &[f64], fraction: f64) -> f64 {
    let (w, _) = spectrum.dims();
    let mut by_radius: Vec<(f64, f64)> = power
        .iter()
        .enumerate()
        .map(|(i, &p)| (spectrum.radius(i % w, i / w), p))
        .collect();
    by_radius.sort_by(|a, b| b.0.total_cmp(&a.0));
    let n = ((by_radius.len() as f64 * fraction).ceil() as usize).clamp(1, by_radius.len());
    by_radius[..n].iter().map(|b| b.1).sum::<f64>() / n as f64
}

/// 3×3 box filter with periodic boundaries.
fn box_smooth(values: &[f64], w: usize, h: usize) -> Vec<f64> {
    let mut out = vec![0.0; values.len()];
    for k in 0..h {
        for j in 0..w {
            let mut acc = 0.0;
            for dk in [h - 1, 0, 1] {
                for dj in [w - 1, 0, 1] {
                    acc += values[((k + dk) % h) * w + (j + dj) % w];
                }
            }
            out[k * w + j] = acc / 9.0;
        }
    }
    out
}

/// One-bin dilation over the 8-neighborhood with periodic boundaries.
fn dilate(mask: &Mask) -> Mask {
    let (w, h) = mask.dims();
    Mask::from_fn(w, h, |j, k| {
        [h - 1, 0, 1].iter().any(|&dk| {
            [w - 1, 0, 1]
                .iter()
                .any(|&dj| mask.get((j + dj) % w, (k + dk) % h))
        })
    })
}

fn symmetrize(mask: &Mask) -> Mask {
    let (w, h) = mask.dims();
    Mask::from_fn(w, h, |j, k| {
        mask.get(j, k) || mask.get(mirror_index(j, w), mirror_index(k, h))
    })
}

/// Unnormalized 2-D FFT of a row-major buffer, in place.
fn fft2(buf: &mut [Complex64], width: usize, height: usize, direction: FftDirection) {
    let mut planner = FftPlanner::new();
    let rows = planner.plan_fft(width, direction);
    for row in buf.chunks_exact_mut(width) {
        rows.process(row);
    }
    let cols = planner.plan_fft(height, direction);
    let mut column = vec![Complex64::default(); height];
    for j in 0..width {
        for k in 0..height {
            column[k] = buf[k * width + j];
        }
        cols.process(&mut column);
        for k in 0..height {
            buf[k * width + j] = column[k];
        }
    }
}

/// Moves DC from index 0 to index `n/2` along both axes.
fn fftshift(buf: &[Complex64], width: usize, height: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::default(); buf.len()];
    for k in 0..height {
        let src_k = (k + height - height / 2) % height;
        for j in 0..width {
            let src_j = (j + width - width / 2) % width;
            out[k * width + j] = buf[src_k * width + src_j];
        }
    }
    out
}

fn ifftshift(buf: &[Complex64], width: usize, height: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::default(); buf.len()];
    for k in 0..height {
        let src_k = (k + height / 2) % height;
        for j in 0..width {
            let src_j = (j + width / 2) % width;
            out[k * width + j] = buf[src_k * width + src_j];
        }
    }
    out
}

fn forward(img: &ComplexImage, kind: SignalKind) -> Result<Spectrum> {
    let (w, h) = img.dims();
    if w < 2 || h < 2 {
        return Err(Error::config(format!(
            "transform needs at least 2x2 samples, got {w}x{h}"
        )));
    }
    let mut buf = img.data().to_vec();
    fft2(&mut buf, w, h, FftDirection::Forward);
    let scale = 1.0 / ((w * h) as f64).sqrt();
    buf.iter_mut().for_each(|c| *c *= scale);
    Ok(Spectrum {
        data: ComplexImage::new(w, h, fftshift(&buf, w, h))?,
        kind,
    })
}

/// Unitary, DC-centered 2-D DFT of a real image.
pub fn dft2(img: &RealImage) -> Result<Spectrum> {
    forward(&img.to_complex(), SignalKind::Real)
}

/// Unitary, DC-centered 2-D DFT of a complex (analytic) image.
pub fn dft2_complex(img: &ComplexImage) -> Result<Spectrum> {
    forward(img, SignalKind::Analytic)
}

/// Inverse of [`dft2`] / [`dft2_complex`].
pub fn idft2(spectrum: &Spectrum) -> Result<ComplexImage> {
    let (w, h) = spectrum.dims();
    let mut buf = ifftshift(spectrum.data.data(), w, h);
    fft2(&mut buf, w, h, FftDirection::Inverse);
    let scale = 1.0 / ((w * h) as f64).sqrt();
    buf.iter_mut().for_each(|c| *c *= scale);
    ComplexImage::new(w, h, buf)
}

/// Spectrum with every bin multiplied by the real weight `filter(j, k)`.
pub fn filter_spectrum(
    spectrum: &Spectrum,
    filter: impl Fn(usize, usize) -> f64,
) -> Result<Spectrum> {
    let (w, _) = spectrum.dims();
    let data = spectrum
        .data
        .data()
        .iter()
        .enumerate()
        .map(|(i, &c)| c * filter(i % w, i / w))
        .collect();
    Ok(Spectrum {
        data: ComplexImage::new(w, spectrum.dims().1, data)?,
        kind: spectrum.kind,
    })
}

/// η from the noise-only region of `img`'s spectrum.
pub fn estimate_noise_density(img: &RealImage, regions: &SpectralRegions) -> Result<f64> {
    dft2(img)?.noise_density(regions)
}

/// Spectral SNR of real fringes, see [`Spectrum::snr`].
pub fn estimate_snr(fringes: &RealImage, regions: &SpectralRegions, eta: f64) -> Result<f64> {
    dft2(fringes)?.snr(regions, eta)
}

/// Spectral SNR of an analytic signal, see [`Spectrum::snr`].
pub fn estimate_analytic_snr(
    analytic: &ComplexImage,
    regions: &SpectralRegions,
    eta: f64,
) -> Result<f64> {
    dft2_complex(analytic)?.snr(regions, eta)
}

/// Fringe bandwidth in fringes/pixel, see [`Spectrum::bandwidth`].
pub fn estimate_bandwidth(
    fringes: &RealImage,
    regions: &SpectralRegions,
    eta: f64,
    energy_fraction: f64,
) -> Result<f64> {
    dft2(fringes)?.bandwidth(regions, eta, energy_fraction)
}
