//! Information-theoretic quantities: source entropy, AWGN channel capacity,
//! and the ε-entropy rate `B·log₂(1 + SNR)` of fringe images and of
//! phase-shifting analytic signals.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest meaningful fringe bandwidth: the corner of the Nyquist square.
pub const MAX_BANDWIDTH: f64 = std::f64::consts::SQRT_2 * 0.5;

/// Discrete memoryless source.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSource {
    probabilities: Vec<f64>,
    symbol_rate: Option<f64>,
}

impl DiscreteSource {
    pub fn new(probabilities: Vec<f64>, symbol_rate: Option<f64>) -> Result<Self> {
        if probabilities.is_empty() {
            return Err(Error::domain("source needs at least one symbol"));
        }
        if let Some(p) = probabilities.iter().find(|&&p| !(p > 0.0 && p <= 1.0)) {
            return Err(Error::domain(format!(
                "symbol probabilities must lie in (0, 1], got {p}"
            )));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::domain(format!(
                "symbol probabilities sum to {total}, expected 1"
            )));
        }
        if let Some(r) = symbol_rate {
            if !(r >= 0.0) || !r.is_finite() {
                return Err(Error::domain(format!(
                    "symbol rate must be non-negative, got {r}"
                )));
            }
        }
        Ok(Self {
            probabilities,
            symbol_rate,
        })
    }

    pub fn uniform(symbols: usize, symbol_rate: Option<f64>) -> Result<Self> {
        Self::new(vec![1.0 / symbols as f64; symbols], symbol_rate)
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn symbol_rate(&self) -> Option<f64> {
        self.symbol_rate
    }
}

/// `H = −Σ p log₂ p` in bits/symbol.
pub fn discrete_entropy(src: &DiscreteSource) -> f64 {
    -src.probabilities.iter().map(|&p| p * p.log2()).sum::<f64>()
}

/// `R = r·H` in bits/second.
pub fn info_rate_discrete(src: &DiscreteSource) -> Result<f64> {
    let r = src
        .symbol_rate
        .ok_or_else(|| Error::config("information rate needs a symbol rate"))?;
    Ok(r * discrete_entropy(src))
}

/// Band-limited additive white Gaussian noise channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    /// Hz, or fringes/pixel for spatial channels.
    pub bandwidth: f64,
    pub signal_power: f64,
    pub noise_power: f64,
    #[serde(default = "unit_attenuation")]
    pub attenuation: f64,
}

fn unit_attenuation() -> f64 {
    1.0
}

impl ChannelModel {
    pub fn new(bandwidth: f64, signal_power: f64, noise_power: f64) -> Result<Self> {
        let ch = Self {
            bandwidth,
            signal_power,
            noise_power,
            attenuation: 1.0,
        };
        ch.validate()?;
        Ok(ch)
    }

    /// Channel fed by a source of mean-square amplitude `source_power`:
    /// received power `S = a²·E{x²}`.
    pub fn from_source(
        bandwidth: f64,
        attenuation: f64,
        source_power: f64,
        noise_power: f64,
    ) -> Result<Self> {
        let ch = Self {
            bandwidth,
            signal_power: attenuation * attenuation * source_power,
            noise_power,
            attenuation,
        };
        ch.validate()?;
        Ok(ch)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth > 0.0) {
            return Err(Error::domain(format!(
                "channel bandwidth must be positive, got {}",
                self.bandwidth
            )));
        }
        if !(self.noise_power > 0.0) {
            return Err(Error::domain(format!(
                "channel noise power must be positive, got {}",
                self.noise_power
            )));
        }
        if !(self.signal_power >= 0.0) {
            return Err(Error::domain(format!(
                "signal power must be non-negative, got {}",
                self.signal_power
            )));
        }
        if !(self.attenuation > 0.0 && self.attenuation <= 1.0) {
            return Err(Error::domain(format!(
                "attenuation must be in (0, 1], got {}",
                self.attenuation
            )));
        }
        Ok(())
    }

    pub fn snr(&self) -> f64 {
        self.signal_power / self.noise_power
    }
}

/// `C = B·log₂(1 + S/N)`.
pub fn channel_capacity(ch: &ChannelModel) -> Result<f64> {
    ch.validate()?;
    Ok(ch.bandwidth * ch.snr().ln_1p() / std::f64::consts::LN_2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reliability {
    Reliable,
    Unreliable,
}

/// Negligible-error transmission needs `R < C`; `R = C` counts as unreliable.
pub fn reliability(rate: f64, capacity: f64) -> Reliability {
    if rate < capacity {
        Reliability::Reliable
    } else {
        Reliability::Unreliable
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TradeRow {
    pub capacity: f64,
    pub bandwidth: f64,
    pub snr: f64,
}

/// For each bandwidth, the S/N keeping capacity at `capacity`:
/// `S/N = 2^(C/B) − 1`.
pub fn capacity_trade_table(capacity: f64, bandwidths: &[f64]) -> Result<Vec<TradeRow>> {
    if !(capacity > 0.0) {
        return Err(Error::domain(format!(
            "target capacity must be positive, got {capacity}"
        )));
    }
    bandwidths
        .iter()
        .map(|&b| {
            if !(b > 0.0) {
                return Err(Error::domain(format!(
                    "bandwidth must be positive, got {b}"
                )));
            }
            Ok(TradeRow {
                capacity,
                bandwidth: b,
                snr: (capacity / b).exp2() - 1.0,
            })
        })
        .collect()
}

/// Information content of one fringe image or analytic signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfoReport {
    /// Fringe bandwidth, fringes/pixel.
    pub bandwidth: f64,
    #[serde(with = "crate::serde_float")]
    pub snr: f64,
    /// bits/pixel
    #[serde(with = "crate::serde_float")]
    pub rate: f64,
    pub pixels: usize,
    #[serde(with = "crate::serde_float")]
    pub total_bits: f64,
    pub camera_bits: f64,
    #[serde(with = "crate::serde_float")]
    pub utilization: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl InfoReport {
    fn from_rate(bandwidth: f64, snr: f64, rate: f64, pixels: usize, camera_bits: f64) -> Self {
        let utilization = rate / camera_bits;
        let mut warnings = Vec::new();
        if utilization > 1.0 {
            warnings.push(format!(
                "estimated {rate} bits/pixel exceeds the {camera_bits}-bit digitizer capacity"
            ));
        }
        Self {
            bandwidth,
            snr,
            rate,
            pixels,
            total_bits: rate * pixels as f64,
            camera_bits,
            utilization,
            warnings,
        }
    }

    /// Report for an image without detectable fringe signal.
    pub fn empty(pixels: usize, camera_bits: f64) -> Self {
        Self::from_rate(0.0, 0.0, 0.0, pixels, camera_bits)
    }

    pub fn with_warning(mut self, warning: impl Into<String>) -> Self {
        self.warnings.push(warning.into());
        self
    }
}

fn check_bandwidth(bandwidth: f64) -> Result<()> {
    if !(bandwidth > 0.0 && bandwidth <= MAX_BANDWIDTH) {
        return Err(Error::domain(format!(
            "fringe bandwidth must be in (0, {MAX_BANDWIDTH}] fringes/pixel, got {bandwidth}"
        )));
    }
    Ok(())
}

fn check_snr(snr: f64) -> Result<()> {
    if !(snr >= 0.0) {
        return Err(Error::domain(format!(
            "SNR must be non-negative, got {snr}"
        )));
    }
    Ok(())
}

/// ε-entropy rate `B_f·log₂(1 + SNR_K)` in bits/pixel, with totals for
/// `pixels` samples digitized at `camera_bits` bits/pixel.
pub fn fringe_info_rate(
    bandwidth: f64,
    snr: f64,
    pixels: usize,
    camera_bits: f64,
) -> Result<InfoReport> {
    check_bandwidth(bandwidth)?;
    check_snr(snr)?;
    if !(camera_bits > 0.0) {
        return Err(Error::config(format!(
            "camera bits must be positive, got {camera_bits}"
        )));
    }
    let rate = bandwidth * snr.log2_1p();
    Ok(InfoReport::from_rate(
        bandwidth,
        snr,
        rate,
        pixels,
        camera_bits,
    ))
}

trait Log2OnePlus {
    fn log2_1p(self) -> f64;
}

impl Log2OnePlus for f64 {
    fn log2_1p(self) -> f64 {
        self.ln_1p() / std::f64::consts::LN_2
    }
}

/// Rate of the analytic signal from `frames` phase-shifted fringes,
/// `B_f·log₂(1 + M·SNR_K)`.
pub fn analytic_info_rate(bandwidth: f64, snr: f64, frames: f64) -> Result<f64> {
    check_snr(snr)?;
    if !(frames >= 1.0) {
        return Err(Error::domain(format!(
            "frame count must be at least 1, got {frames}"
        )));
    }
    Ok(bandwidth * (frames * snr).log2_1p())
}

/// Frames needed to double the single-frame rate, `M = 2 + SNR_K`.
pub fn doubling_frames(snr: f64) -> Result<f64> {
    check_snr(snr)?;
    Ok(2.0 + snr)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub snr: f64,
    pub frames: f64,
    pub rate: f64,
}

/// Analytic rate on an `(SNR, M)` grid, SNR-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoublingCurve {
    pub bandwidth: f64,
    pub points: Vec<CurvePoint>,
}

impl DoublingCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("snr_k,frames,rate_bits_per_pixel\n");
        for p in &self.points {
            out.push_str(&format!("{},{},{}\n", p.snr, p.frames, p.rate));
        }
        out
    }
}

pub fn doubling_curve(bandwidth: f64, snrs: &[f64], frames: &[f64]) -> Result<DoublingCurve> {
    if snrs.is_empty() || frames.is_empty() {
        return Err(Error::config(
            "doubling curve needs non-empty SNR and frame ranges",
        ));
    }
    let mut points = Vec::with_capacity(snrs.len() * frames.len());
    for &snr in snrs {
        for &m in frames {
            points.push(CurvePoint {
                snr,
                frames: m,
                rate: analytic_info_rate(bandwidth, snr, m)?,
            });
        }
    }
    Ok(DoublingCurve { bandwidth, points })
}
