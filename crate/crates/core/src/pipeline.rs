//! End-to-end information estimate of a fringe image or analytic signal.

use crate::error::{Error, Result};
use crate::grid::{ComplexImage, RealImage};
use crate::infotheory::{fringe_info_rate, InfoReport};
use crate::spectral::{
    detect_regions, dft2, dft2_complex, probe_floor, RegionParams, SpectralRegions, Spectrum,
};

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyzeOptions {
    /// Fixed regions; detected from the data when absent.
    pub regions: Option<SpectralRegions>,
    pub camera_bits: f64,
    /// Energy share defining the bandwidth radius.
    pub energy_fraction: f64,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        Self {
            regions: None,
            camera_bits: 8.0,
            energy_fraction: 0.99,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub eta: f64,
    pub regions: SpectralRegions,
    pub report: InfoReport,
}

/// Noise floor, SNR, bandwidth and information rate of a real fringe image.
///
/// With a background frame (same optics, fringes off, or any matched
/// noise-only frame) the noise floor is the mean power of all its non-DC
/// bins, and it also seeds region detection. Otherwise the floor comes from
/// the fringe spectrum's own noise-only region.
pub fn analyze(
    fringes: &RealImage,
    background: Option<&RealImage>,
    options: &AnalyzeOptions,
) -> Result<Analysis> {
    let spectrum = dft2(fringes)?;
    let background = match background {
        Some(bg) if bg.dims() != fringes.dims() => {
            return Err(Error::config(format!(
                "background is {}x{}, fringes are {}x{}",
                bg.width(),
                bg.height(),
                fringes.width(),
                fringes.height()
            )))
        }
        Some(bg) => Some(dft2(bg)?),
        None => None,
    };
    estimate(&spectrum, background.as_ref(), fringes.len(), options)
}

/// Same estimate for an analytic signal, typically a demodulated stack.
///
/// `noise` is an optional matched noise-only analytic signal, for instance
/// the demodulated difference between a noisy and a noiseless stack.
pub fn analyze_analytic(
    analytic: &ComplexImage,
    noise: Option<&ComplexImage>,
    options: &AnalyzeOptions,
) -> Result<Analysis> {
    let spectrum = dft2_complex(analytic)?;
    let noise = match noise {
        Some(n) if n.dims() != analytic.dims() => {
            return Err(Error::config(
                "noise signal differs in size from the analytic signal",
            ))
        }
        Some(n) => Some(dft2_complex(n)?),
        None => None,
    };
    estimate(&spectrum, noise.as_ref(), analytic.len(), options)
}

fn estimate(
    spectrum: &Spectrum,
    noise: Option<&Spectrum>,
    pixels: usize,
    options: &AnalyzeOptions,
) -> Result<Analysis> {
    let params = RegionParams::default();
    let probe = match noise {
        Some(n) => Some(probe_floor(n, params.dc_radius)?),
        None => None,
    };
    let regions = match &options.regions {
        Some(r) => r.clone(),
        None => detect_regions(spectrum, probe, &params)?,
    };
    let eta = match probe {
        Some(eta) => eta,
        None => spectrum.noise_density(&regions)?,
    };
    finish(spectrum, regions, eta, pixels, options)
}

fn finish(
    spectrum: &Spectrum,
    regions: SpectralRegions,
    eta: f64,
    pixels: usize,
    options: &AnalyzeOptions,
) -> Result<Analysis> {
    if !(options.camera_bits > 0.0) {
        return Err(Error::config(format!(
            "camera bits must be positive, got {}",
            options.camera_bits
        )));
    }
    let no_signal = |pixels| {
        InfoReport::empty(pixels, options.camera_bits)
            .with_warning("no fringe signal detected: signal region is empty")
    };
    if regions.sn.is_empty() {
        return Ok(Analysis {
            eta,
            regions,
            report: no_signal(pixels),
        });
    }
    let snr = spectrum.snr(&regions, eta)?;
    if snr == 0.0 {
        return Ok(Analysis {
            eta,
            regions,
            report: no_signal(pixels),
        });
    }
    let bandwidth = spectrum.bandwidth(&regions, eta, options.energy_fraction)?;
    let mut report = fringe_info_rate(bandwidth, snr, pixels, options.camera_bits)?;
    if snr.is_infinite() {
        report = report.with_warning("noise floor is zero: SNR is unbounded");
    }
    Ok(Analysis {
        eta,
        regions,
        report,
    })
}
