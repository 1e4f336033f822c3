//! Shannon information content of fringe patterns.
//!
//! The crate synthesizes noisy fringe images, estimates their noise floor,
//! signal-to-noise ratio and bandwidth from the 2-D spectrum, turns those into
//! an information rate in bits/pixel, and demodulates phase-shifted stacks or
//! carrier fringes into a single analytic signal.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod carrier;
pub mod error;
pub mod grid;
pub mod infotheory;
pub mod pipeline;
pub mod psa;
pub mod rng;
pub mod serde_float;
pub mod spectral;
pub mod synth;

pub use error::{Error, ErrorKind, Result};
pub use grid::{ComplexImage, Mask, QuantizationSpec, RealImage};
pub use infotheory::InfoReport;
pub use pipeline::{analyze, analyze_analytic, Analysis, AnalyzeOptions};
pub use psa::PsaKernel;
pub use spectral::{SpectralRegions, Spectrum};
pub use synth::{FringeModel, FringeStack, PhaseField};
