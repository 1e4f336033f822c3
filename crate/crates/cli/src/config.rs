//! Serializable run configurations, one per subcommand.
//!
//! Every field has a default so a config file only needs the values it
//! changes. The resolved config is echoed into the run manifest.

use std::f64::consts::PI;
use std::path::PathBuf;

use fringe_info::infotheory::ChannelModel;
use fringe_info::synth::{
    carrier_sensitivity, image_center, surface_gaussian, surface_ramp, FringeModel, PhaseField,
};
use fringe_info::RealImage;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SurfaceSpec {
    Flat,
    Gaussian {
        amplitude: f64,
        sigma: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<(f64, f64)>,
    },
    Ramp {
        slope_x: f64,
        slope_y: f64,
    },
}

impl SurfaceSpec {
    fn render(&self, width: usize, height: usize) -> CliResult<RealImage> {
        Ok(match self {
            SurfaceSpec::Flat => RealImage::constant(width, height, 0.0)?,
            SurfaceSpec::Gaussian {
                amplitude,
                sigma,
                center,
            } => surface_gaussian(
                width,
                height,
                center.unwrap_or_else(|| image_center(width, height)),
                *amplitude,
                *sigma,
            )?,
            SurfaceSpec::Ramp { slope_x, slope_y } => {
                surface_ramp(width, height, *slope_x, *slope_y)?
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PhaseSpec {
    Defocus {
        f_max: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<(f64, f64)>,
    },
    ProfilometryCarrier {
        period: f64,
        theta: f64,
        surface: SurfaceSpec,
    },
}

impl PhaseSpec {
    fn render(&self, width: usize, height: usize) -> CliResult<PhaseField> {
        Ok(match self {
            PhaseSpec::Defocus { f_max, center } => PhaseField::Defocus {
                center: center.unwrap_or_else(|| image_center(width, height)),
                f_max: *f_max,
            },
            PhaseSpec::ProfilometryCarrier {
                period,
                theta,
                surface,
            } => PhaseField::ProfilometryCarrier {
                period: *period,
                theta: *theta,
                surface: surface.render(width, height)?,
            },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub width: usize,
    pub height: usize,
    pub background: f64,
    pub modulation: f64,
    pub phase: PhaseSpec,
    /// Noise standard deviation in intensity units.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_sigma: Option<f64>,
    /// Spatial SNR `power(b·cos φ)/σ²` to set the noise from instead.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_snr: Option<f64>,
    /// Phase-shifted stack of this many frames instead of a single image.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frames: Option<usize>,
    /// Also write a fringe-free background frame.
    pub with_background: bool,
    /// Stored bit depth, 8 or 16.
    pub bits: u32,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            width: 200,
            height: 200,
            background: 127.5,
            modulation: 127.5,
            phase: PhaseSpec::Defocus {
                f_max: 0.5,
                center: None,
            },
            noise_sigma: None,
            target_snr: None,
            frames: None,
            with_background: false,
            bits: 8,
            seed: 0,
        }
    }
}

impl SynthConfig {
    /// Noise-free model.
    pub fn clean_model(&self) -> CliResult<FringeModel> {
        let model = FringeModel {
            width: self.width,
            height: self.height,
            background: self.background.into(),
            modulation: self.modulation.into(),
            phase: self.phase.render(self.width, self.height)?,
            noise_sigma: 0.0,
            seed: self.seed,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn model(&self) -> CliResult<FringeModel> {
        let clean = self.clean_model()?;
        let sigma = match (self.noise_sigma, self.target_snr) {
            (Some(_), Some(_)) => {
                return Err(CliError::config(
                    "give either noise_sigma or target_snr, not both",
                ))
            }
            (Some(s), None) => s,
            (None, Some(snr)) => fringe_info::synth::noise_sigma_for_snr(&clean, snr, None)?,
            (None, None) => 0.0,
        };
        let model = clean.with_noise(sigma);
        model.validate()?;
        Ok(model)
    }
}

pub const RECIPES: &[&str] = &[
    "nyquist",
    "nyquist-snr3",
    "nyquist-snr1",
    "eighth-band",
    "eighth-band-snr2",
    "stack12",
    "profilometry",
];

/// Named synthesis presets.
pub fn recipe(name: &str) -> CliResult<SynthConfig> {
    let defocus = |f_max| PhaseSpec::Defocus {
        f_max,
        center: None,
    };
    let noisy = |f_max, snr| SynthConfig {
        modulation: 60.0,
        phase: defocus(f_max),
        target_snr: Some(snr),
        ..SynthConfig::default()
    };
    Ok(match name {
        "nyquist" => SynthConfig::default(),
        "nyquist-snr3" => noisy(0.5, 3.0),
        "nyquist-snr1" => noisy(0.5, 1.0),
        "eighth-band" => SynthConfig {
            phase: defocus(0.125),
            ..SynthConfig::default()
        },
        "eighth-band-snr2" => noisy(0.125, 2.03),
        "stack12" => SynthConfig {
            background: 128.0,
            frames: Some(12),
            with_background: true,
            ..noisy(0.125, 8.1)
        },
        "profilometry" => {
            let (period, theta) = (10.0, PI / 6.0);
            SynthConfig {
                width: 640,
                height: 512,
                background: 128.0,
                modulation: 60.0,
                phase: PhaseSpec::ProfilometryCarrier {
                    period,
                    theta,
                    // 10 rad peak surface phase
                    surface: SurfaceSpec::Gaussian {
                        amplitude: 10.0 / carrier_sensitivity(period, theta),
                        sigma: 80.0,
                        center: None,
                    },
                },
                target_snr: Some(11.2),
                with_background: true,
                ..SynthConfig::default()
            }
        }
        other => {
            return Err(CliError::config(format!(
                "unknown recipe '{other}', expected one of {}",
                RECIPES.join(", ")
            )))
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyzeConfig {
    pub image: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub background: Option<PathBuf>,
    pub camera_bits: f64,
    pub energy_fraction: f64,
    pub format: Format,
}

impl Default for AnalyzeConfig {
    fn default() -> Self {
        Self {
            image: PathBuf::new(),
            background: None,
            camera_bits: 8.0,
            energy_fraction: 0.99,
            format: Format::Json,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PsaConfig {
    pub stack: PathBuf,
    /// Kernel JSON; least squares over the stack's frame count when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel: Option<PathBuf>,
    pub camera_bits: f64,
    pub format: Format,
}

impl Default for PsaConfig {
    fn default() -> Self {
        Self {
            stack: PathBuf::new(),
            kernel: None,
            camera_bits: 8.0,
            format: Format::Json,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CarrierConfig {
    pub image: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub background: Option<PathBuf>,
    /// Keep the carrier ramp in the output phase.
    pub keep_carrier: bool,
    /// Raised-cosine taper as a fraction of the lobe radius; 0 is a hard mask.
    pub taper: f64,
}

impl Default for CarrierConfig {
    fn default() -> Self {
        Self {
            image: PathBuf::new(),
            background: None,
            keep_carrier: false,
            taper: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TablesConfig {
    /// Target capacity of the trade table, bits/s.
    pub capacity: f64,
    /// Channel bandwidths of the trade table, Hz.
    pub bandwidths: Vec<f64>,
    /// Fringe bandwidth of the doubling curve, fringes/pixel.
    pub curve_bandwidth: f64,
    pub curve_snrs: Vec<f64>,
    pub curve_frames: Vec<f64>,
}

impl Default for TablesConfig {
    fn default() -> Self {
        Self {
            capacity: 30_000.0,
            bandwidths: vec![1500.0, 3000.0, 6000.0, 9000.0, 12000.0],
            curve_bandwidth: 0.5,
            curve_snrs: vec![1.0, 3.0, 10.0, 20.0, 100.0],
            curve_frames: (1..=32).map(f64::from).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompressConfig {
    /// The noiseless image; its noise settings are ignored.
    pub fringes: SynthConfig,
    /// Noise of the compared noisy image.
    pub noisy_sigma: f64,
    /// Noise levels of the size sweep.
    pub sweep_sigmas: Vec<f64>,
}

impl Default for CompressConfig {
    fn default() -> Self {
        Self {
            // about six fringes from center to corner; a Nyquist-rate chirp
            // is already nearly incompressible when noiseless
            fringes: SynthConfig {
                phase: PhaseSpec::Defocus {
                    f_max: 0.0625,
                    center: None,
                },
                ..SynthConfig::default()
            },
            // spatial SNR 3 for b = 127.5
            noisy_sigma: 52.0,
            sweep_sigmas: vec![2.0, 8.0, 32.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Payload {
    /// Real and imaginary planes of the analytic signal.
    #[default]
    Complex,
    /// Wrapped phase only.
    WrappedPhase,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DownlinkConfig {
    /// Stack manifest; supplies frames, size and the measured SNR and bandwidth.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stack: Option<PathBuf>,
    pub frames: usize,
    pub width: usize,
    pub height: usize,
    pub camera_bits: f64,
    /// Link capacity in bits/s; computed from `channel` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub capacity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub channel: Option<ChannelModel>,
    pub payload: Payload,
    pub float_bits: u32,
    pub phase_bits: u32,
    /// Fringe bandwidth and single-frame SNR used when no stack is given.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bandwidth: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snr: Option<f64>,
}

impl Default for DownlinkConfig {
    fn default() -> Self {
        Self {
            stack: None,
            frames: 12,
            width: 200,
            height: 200,
            camera_bits: 8.0,
            capacity: None,
            channel: None,
            payload: Payload::Complex,
            float_bits: 32,
            phase_bits: 8,
            bandwidth: None,
            snr: None,
        }
    }
}
