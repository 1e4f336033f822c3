//! Command-line front end: synthesis, analysis reports, phase-shifting
//! compression, tables, the PNG size experiment and a downlink budget.
//!
//! Settings resolve in the order defaults, recipe, `--config` file, flags.
//! Every run writes `manifest.json` into the output directory; passing that
//! file back through `--config` repeats the run.

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;

use config::{
    AnalyzeConfig, CarrierConfig, CompressConfig, DownlinkConfig, Format, Payload, PsaConfig,
    SynthConfig, TablesConfig,
};
use error::CliResult;
use fringe_info::infotheory::ChannelModel;

#[derive(Debug, Parser)]
#[command(
    name = "fringe-info",
    version,
    about = "Information content of fringe patterns"
)]
pub struct Cli {
    /// JSON config for the subcommand, or a manifest from an earlier run.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Report format.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Random seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize fringes, background frames or phase-shifted stacks.
    Synth(SynthArgs),
    /// Estimate noise floor, SNR, bandwidth and information rate of an image.
    Analyze(AnalyzeArgs),
    /// Demodulate a phase-shifted stack into one analytic signal.
    PsaDemod(PsaArgs),
    /// Demodulate carrier fringes by single-lobe Fourier filtering.
    CarrierDemod(CarrierArgs),
    /// Capacity trade table and frame-doubling curve.
    Tables(TablesArgs),
    /// PNG sizes of noiseless and noisy fringes.
    CompressCompare(CompressArgs),
    /// Link time for raw stacks against one demodulated signal.
    DownlinkBudget(DownlinkArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Synth(_) => "synth",
            Command::Analyze(_) => "analyze",
            Command::PsaDemod(_) => "psa-demod",
            Command::CarrierDemod(_) => "carrier-demod",
            Command::Tables(_) => "tables",
            Command::CompressCompare(_) => "compress-compare",
            Command::DownlinkBudget(_) => "downlink-budget",
        }
    }
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Preset; see `config::RECIPES`.
    #[arg(long)]
    pub recipe: Option<String>,
    #[arg(long)]
    pub frames: Option<usize>,
    #[arg(long)]
    pub noise_sigma: Option<f64>,
    #[arg(long)]
    pub target_snr: Option<f64>,
    #[arg(long)]
    pub bits: Option<u32>,
    /// Also write a background frame.
    #[arg(long)]
    pub with_background: bool,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    pub image: Option<PathBuf>,
    #[arg(long)]
    pub background: Option<PathBuf>,
    #[arg(long)]
    pub camera_bits: Option<f64>,
    #[arg(long)]
    pub energy_fraction: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PsaArgs {
    /// Stack file written by `synth`.
    #[arg(long)]
    pub stack: Option<PathBuf>,
    /// Kernel JSON `{"M": .., "taps": [[re, im], ..]}`.
    #[arg(long)]
    pub kernel: Option<PathBuf>,
    #[arg(long)]
    pub camera_bits: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CarrierArgs {
    pub image: Option<PathBuf>,
    #[arg(long)]
    pub background: Option<PathBuf>,
    /// Keep the carrier ramp in the phase.
    #[arg(long)]
    pub keep_carrier: bool,
    #[arg(long)]
    pub taper: Option<f64>,
}

#[derive(Debug, Args)]
pub struct TablesArgs {
    #[arg(long)]
    pub capacity: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub bandwidths: Option<Vec<f64>>,
    #[arg(long)]
    pub curve_bandwidth: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CompressArgs {
    /// Preset for the noiseless image.
    #[arg(long)]
    pub recipe: Option<String>,
    #[arg(long)]
    pub noisy_sigma: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub sweep_sigmas: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct DownlinkArgs {
    #[arg(long)]
    pub stack: Option<PathBuf>,
    #[arg(long)]
    pub frames: Option<usize>,
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long)]
    pub height: Option<usize>,
    #[arg(long)]
    pub camera_bits: Option<f64>,
    /// Link capacity, bits/s.
    #[arg(long)]
    pub capacity: Option<f64>,
    /// Channel bandwidth in Hz, with --signal-power and --noise-power.
    #[arg(long)]
    pub channel_bandwidth: Option<f64>,
    #[arg(long)]
    pub signal_power: Option<f64>,
    #[arg(long)]
    pub noise_power: Option<f64>,
    #[arg(long, value_enum)]
    pub payload: Option<Payload>,
    #[arg(long)]
    pub float_bits: Option<u32>,
    #[arg(long)]
    pub phase_bits: Option<u32>,
    #[arg(long)]
    pub bandwidth: Option<f64>,
    #[arg(long)]
    pub snr: Option<f64>,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn resolve<C: DeserializeOwned>(cli: &Cli, base: C) -> CliResult<C> {
    match &cli.config {
        Some(path) => manifest::load_config(path, cli.command.name()),
        None => Ok(base),
    }
}

fn finish<C: Serialize>(cli: &Cli, config: &C, outputs: Vec<String>) -> CliResult<()> {
    manifest::write_manifest(&cli.out, cli.command.name(), config, &outputs)
}

fn with_output_dir(out: &Path) -> CliResult<()> {
    commands::ensure_dir(out)
}

pub fn run(cli: &Cli) -> CliResult<()> {
    with_output_dir(&cli.out)?;
    match &cli.command {
        Command::Synth(a) => {
            let base = match &a.recipe {
                Some(name) => config::recipe(name)?,
                None => SynthConfig::default(),
            };
            let mut cfg = resolve(cli, base)?;
            set(&mut cfg.seed, cli.seed);
            if a.frames.is_some() {
                cfg.frames = a.frames;
            }
            if a.noise_sigma.is_some() {
                cfg.noise_sigma = a.noise_sigma;
                cfg.target_snr = None;
            }
            if a.target_snr.is_some() {
                cfg.target_snr = a.target_snr;
                cfg.noise_sigma = None;
            }
            set(&mut cfg.bits, a.bits);
            cfg.with_background |= a.with_background;
            let outputs = commands::synth(&cfg, &cli.out)?;
            finish(cli, &cfg, outputs)
        }
        Command::Analyze(a) => {
            let mut cfg: AnalyzeConfig = resolve(cli, AnalyzeConfig::default())?;
            set(&mut cfg.image, a.image.clone());
            if a.background.is_some() {
                cfg.background = a.background.clone();
            }
            set(&mut cfg.camera_bits, a.camera_bits);
            set(&mut cfg.energy_fraction, a.energy_fraction);
            set(&mut cfg.format, cli.format);
            let outputs = commands::analyze_cmd(&cfg, &cli.out)?;
            finish(cli, &cfg, outputs)
        }
        Command::PsaDemod(a) => {
            let mut cfg: PsaConfig = resolve(cli, PsaConfig::default())?;
            set(&mut cfg.stack, a.stack.clone());
            if a.kernel.is_some() {
                cfg.kernel = a.kernel.clone();
            }
            set(&mut cfg.camera_bits, a.camera_bits);
            set(&mut cfg.format, cli.format);
            let outputs = commands::psa_demod(&cfg, &cli.out)?;
            finish(cli, &cfg, outputs)
        }
        Command::CarrierDemod(a) => {
            let mut cfg: CarrierConfig = resolve(cli, CarrierConfig::default())?;
            set(&mut cfg.image, a.image.clone());
            if a.background.is_some() {
                cfg.background = a.background.clone();
            }
            cfg.keep_carrier |= a.keep_carrier;
            set(&mut cfg.taper, a.taper);
            let outputs = commands::carrier_demod(&cfg, &cli.out)?;
            finish(cli, &cfg, outputs)
        }
        Command::Tables(a) => {
            let mut cfg: TablesConfig = resolve(cli, TablesConfig::default())?;
            set(&mut cfg.capacity, a.capacity);
            set(&mut cfg.bandwidths, a.bandwidths.clone());
            set(&mut cfg.curve_bandwidth, a.curve_bandwidth);
            let outputs = commands::tables(&cfg, &cli.out)?;
            finish(cli, &cfg, outputs)
        }
        Command::CompressCompare(a) => {
            let mut base = CompressConfig::default();
            if let Some(name) = &a.recipe {
                base.fringes = config::recipe(name)?;
            }
            let mut cfg = resolve(cli, base)?;
            set(&mut cfg.fringes.seed, cli.seed);
            set(&mut cfg.noisy_sigma, a.noisy_sigma);
            set(&mut cfg.sweep_sigmas, a.sweep_sigmas.clone());
            let outputs =
                commands::compress_compare(&cfg, &cli.out, cli.format.unwrap_or_default())?;
            finish(cli, &cfg, outputs)
        }
        Command::DownlinkBudget(a) => {
            let mut cfg: DownlinkConfig = resolve(cli, DownlinkConfig::default())?;
            if a.stack.is_some() {
                cfg.stack = a.stack.clone();
            }
            set(&mut cfg.frames, a.frames);
            set(&mut cfg.width, a.width);
            set(&mut cfg.height, a.height);
            set(&mut cfg.camera_bits, a.camera_bits);
            if a.capacity.is_some() {
                cfg.capacity = a.capacity;
            }
            if let (Some(b), Some(s), Some(n)) =
                (a.channel_bandwidth, a.signal_power, a.noise_power)
            {
                cfg.channel = Some(ChannelModel::new(b, s, n)?);
            }
            set(&mut cfg.payload, a.payload);
            set(&mut cfg.float_bits, a.float_bits);
            set(&mut cfg.phase_bits, a.phase_bits);
            if a.bandwidth.is_some() {
                cfg.bandwidth = a.bandwidth;
            }
            if a.snr.is_some() {
                cfg.snr = a.snr;
            }
            let outputs =
                commands::downlink_budget(&cfg, &cli.out, cli.format.unwrap_or_default())?;
            finish(cli, &cfg, outputs)
        }
    }
}
