//! Phase-shifting algorithms as linear filters over a stack of frames.
//!
//! A kernel of `M` complex taps `c_m` has frequency transfer function
//! `H(ω) = Σ_m c_m·e^{−iωm}`. With this sign convention the least-squares
//! kernel `c_m = e^{i·m·ω₀}` applied to `a + b·cos(φ + m·ω₀)` returns
//! `(M·b/2)·e^{−iφ}`: the demodulated phase comes out negated.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{ComplexImage, RealImage};
use crate::rng::GaussianSource;
use crate::synth::FringeStack;

/// Sign `σ` in `arg(output) = σ·φ` for kernels passing the quadrature check.
pub const PHASE_SIGN: f64 = -1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct PsaKernel {
    taps: Vec<Complex64>,
    omega0: f64,
}

impl PsaKernel {
    /// Any non-empty tap list; `ω₀ = 2π/M`. Demodulation additionally
    /// requires `M ≥ 3` and the quadrature conditions.
    pub fn new(taps: Vec<Complex64>) -> Result<Self> {
        if taps.is_empty() {
            return Err(Error::config("kernel needs at least one tap"));
        }
        if taps.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::config("kernel taps must be finite"));
        }
        let omega0 = 2.0 * PI / taps.len() as f64;
        Ok(Self { taps, omega0 })
    }

    pub fn taps(&self) -> &[Complex64] {
        &self.taps
    }

    pub fn frames(&self) -> usize {
        self.taps.len()
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    pub fn scaled(&self, k: Complex64) -> Result<Self> {
        Self::new(self.taps.iter().map(|&c| c * k).collect())
    }

    /// `Σ|c_m|²`, equal to `(1/2π)∫|H(ω)|²dω`.
    pub fn tap_energy(&self) -> f64 {
        self.taps.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn to_json(&self) -> String {
        let file = KernelFile {
            frames: self.frames(),
            taps: self.taps.iter().map(|c| [c.re, c.im]).collect(),
        };
        serde_json::to_string(&file).expect("kernel serializes")
    }

    /// Parses `{"M": 4, "taps": [[re, im], ...]}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: KernelFile = serde_json::from_str(text)
            .map_err(|e| Error::config(format!("bad kernel JSON: {e}")))?;
        if file.frames != file.taps.len() {
            return Err(Error::config(format!(
                "kernel declares M = {} but lists {} taps",
                file.frames,
                file.taps.len()
            )));
        }
        Self::new(
            file.taps
                .iter()
                .map(|&[re, im]| Complex64::new(re, im))
                .collect(),
        )
    }
}

#[derive(Serialize, Deserialize)]
struct KernelFile {
    #[serde(rename = "M")]
    frames: usize,
    taps: Vec<[f64; 2]>,
}

/// `c_m = e^{i·m·2π/M}`, the kernel with the largest SNR gain (`G = M`).
pub fn least_squares_kernel(frames: usize) -> Result<PsaKernel> {
    if frames < 3 {
        return Err(Error::config(format!(
            "least-squares kernel needs M >= 3, got {frames}"
        )));
    }
    let omega0 = 2.0 * PI / frames as f64;
    PsaKernel::new(
        (0..frames)
            .map(|m| Complex64::from_polar(1.0, m as f64 * omega0))
            .collect(),
    )
}

/// `H(ω) = Σ_m c_m·e^{−iωm}`.
pub fn ftf_eval(kernel: &PsaKernel, omega: f64) -> Complex64 {
    kernel
        .taps
        .iter()
        .enumerate()
        .map(|(m, &c)| c * Complex64::from_polar(1.0, -omega * m as f64))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Condition {
    /// `H(0) = 0`: background rejected.
    DcRejected,
    /// `H(−ω₀) = 0`: conjugate lobe rejected.
    ConjugateRejected,
    /// `H(ω₀) ≠ 0`: signal passed.
    SignalPassed,
    /// At least three frames.
    MinimumFrames,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub condition: Condition,
    /// `|H|` at the offending frequency, or the frame count.
    pub magnitude: f64,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.condition {
            Condition::DcRejected => write!(f, "|H(0)| = {} is not zero", self.magnitude),
            Condition::ConjugateRejected => {
                write!(f, "|H(-w0)| = {} is not zero", self.magnitude)
            }
            Condition::SignalPassed => write!(f, "|H(w0)| = {} vanishes", self.magnitude),
            Condition::MinimumFrames => {
                write!(f, "kernel has {} taps, needs at least 3", self.magnitude)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureReport {
    pub h_dc: f64,
    pub h_conjugate: f64,
    pub h_signal: f64,
    pub tolerance: f64,
    pub violations: Vec<Violation>,
}

impl QuadratureReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks `H(0) = H(−ω₀) = 0` and `H(ω₀) ≠ 0` within `1e-9·Σ|c_m|`.
pub fn validate_quadrature(kernel: &PsaKernel) -> QuadratureReport {
    let tolerance = 1e-9 * kernel.taps.iter().map(|c| c.norm()).sum::<f64>();
    let h_dc = ftf_eval(kernel, 0.0).norm();
    let h_conjugate = ftf_eval(kernel, -kernel.omega0).norm();
    let h_signal = ftf_eval(kernel, kernel.omega0).norm();
    let mut violations = Vec::new();
    if kernel.frames() < 3 {
        violations.push(Violation {
            condition: Condition::MinimumFrames,
            magnitude: kernel.frames() as f64,
        });
    }
    if h_dc > tolerance {
        violations.push(Violation {
            condition: Condition::DcRejected,
            magnitude: h_dc,
        });
    }
    if h_conjugate > tolerance {
        violations.push(Violation {
            condition: Condition::ConjugateRejected,
            magnitude: h_conjugate,
        });
    }
    if h_signal <= tolerance {
        violations.push(Violation {
            condition: Condition::SignalPassed,
            magnitude: h_signal,
        });
    }
    QuadratureReport {
        h_dc,
        h_conjugate,
        h_signal,
        tolerance,
        violations,
    }
}

/// `Σ_m c_m·I_m` pixel by pixel, without any validation.
fn apply_taps(frames: &[RealImage], taps: &[Complex64]) -> Result<ComplexImage> {
    let (w, h) = frames[0].dims();
    let mut out = vec![Complex64::default(); w * h];
    for (frame, &c) in frames.iter().zip(taps) {
        for (o, &v) in out.iter_mut().zip(frame.data()) {
            *o += c * v;
        }
    }
    ComplexImage::new(w, h, out)
}

/// Combines the stack into one analytic signal `Σ_{m=0}^{M−1} c_m·I_m`.
///
/// Refuses kernels whose frame count differs from the stack or that fail
/// [`validate_quadrature`].
pub fn demodulate_stack(stack: &FringeStack, kernel: &PsaKernel) -> Result<ComplexImage> {
    if kernel.frames() != stack.len() {
        return Err(Error::config(format!(
            "kernel has {} taps, stack has {} frames",
            kernel.frames(),
            stack.len()
        )));
    }
    let report = validate_quadrature(kernel);
    if !report.is_ok() {
        return Err(Error::Quadrature(
            report.violations.iter().map(ToString::to_string).collect(),
        ));
    }
    apply_taps(stack.frames(), kernel.taps())
}

/// `G = |H(ω₀)|² / Σ|c_m|²`.
pub fn snr_gain(kernel: &PsaKernel) -> Result<f64> {
    let energy = kernel.tap_energy();
    if energy == 0.0 {
        return Err(Error::domain("kernel taps are all zero"));
    }
    Ok(ftf_eval(kernel, kernel.omega0).norm_sqr() / energy)
}

/// Monte Carlo estimate of [`snr_gain`].
///
/// Each trial is one pixel: a unit-modulation signal stack
/// `cos(φ_t + m·ω₀)` with a random phase, and an independent noise stack of
/// standard deviation `sigma`. The output signal amplitude is the coherent
/// average of `out·e^{iφ_t}`, which keeps only the `e^{−iφ}` component; the
/// output noise power is the mean `|out|²` of the noise stacks. The gain is
/// the output SNR over the input SNR `(1/2)²/σ²` of the same component.
pub fn monte_carlo_gain(kernel: &PsaKernel, trials: usize, sigma: f64, seed: u64) -> Result<f64> {
    if trials < 10_000 {
        return Err(Error::config(format!(
            "Monte Carlo gain needs at least 10^4 trials, got {trials}"
        )));
    }
    if !(sigma > 0.0) {
        return Err(Error::config("noise sigma must be positive"));
    }
    let mut source = GaussianSource::new(seed);
    let phases: Vec<f64> = (0..trials).map(|_| 2.0 * PI * source.uniform()).collect();
    let omega0 = kernel.omega0();
    let signal = (0..kernel.frames())
        .map(|m| {
            RealImage::new(
                trials,
                1,
                phases
                    .iter()
                    .map(|&p| (p + m as f64 * omega0).cos())
                    .collect(),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let noise = (0..kernel.frames())
        .map(|_| RealImage::new(trials, 1, source.normals(trials, sigma)))
        .collect::<Result<Vec<_>>>()?;
    let out_signal = apply_taps(&signal, kernel.taps())?;
    let out_noise = apply_taps(&noise, kernel.taps())?;
    let coherent: Complex64 = out_signal
        .data()
        .iter()
        .zip(&phases)
        .map(|(&z, &p)| z * Complex64::from_polar(1.0, p))
        .sum::<Complex64>()
        / trials as f64;
    let noise_power = out_noise.power(None)?;
    if noise_power == 0.0 {
        return Err(Error::domain("kernel taps are all zero"));
    }
    let snr_in = 0.25 / (sigma * sigma);
    Ok(coherent.norm_sqr() / noise_power / snr_in)
}
