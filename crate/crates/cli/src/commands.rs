//! Subcommand implementations. Each returns the names of the files it wrote.

use std::fs;
use std::path::{Path, PathBuf};

use fringe_info::carrier::{
    demodulate_carrier, fit_lobe_spectrum, lobe_containment, wrapped_phase, LobeFilter, LobeProfile,
};
use fringe_info::grid::{
    load_image, png_bytes, save_complex, save_image, save_mask_pgm, save_phase_pgm, write_atomic,
    BitDepth, StoredImage,
};
use fringe_info::infotheory::{
    analytic_info_rate, capacity_trade_table, channel_capacity, doubling_curve, fringe_info_rate,
    ChannelModel, InfoReport, TradeRow,
};
use fringe_info::psa::{demodulate_stack, least_squares_kernel, snr_gain, PsaKernel};
use fringe_info::spectral::dft2;
use fringe_info::synth::{synth_fringe, synth_phase_shifted_stack};
use fringe_info::{
    analyze, analyze_analytic, AnalyzeOptions, FringeStack, QuantizationSpec, RealImage,
};
use serde::{Deserialize, Serialize};

use crate::config::{
    AnalyzeConfig, CarrierConfig, CompressConfig, DownlinkConfig, Format, Payload, PsaConfig,
    SynthConfig, TablesConfig,
};
use crate::error::{CliError, CliResult};
use crate::manifest::{emit_report, write_json, StackFile};

const STACK_FILE: &str = "stack.json";

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn depth(bits: u32) -> CliResult<BitDepth> {
    Ok(BitDepth::from_bits(bits)?)
}

fn load_optional(path: Option<&PathBuf>) -> CliResult<Option<RealImage>> {
    Ok(match path {
        Some(p) => Some(load_image(p)?),
        None => None,
    })
}

pub fn synth(cfg: &SynthConfig, out: &Path) -> CliResult<Vec<String>> {
    let model = cfg.model()?;
    let depth = depth(cfg.bits)?;
    let spec = QuantizationSpec::codes(cfg.bits)?;
    if let Some(warning) = model.clipping_warning(&spec) {
        eprintln!("warning: {warning}");
    }
    let mut outputs = Vec::new();
    let mut save = |img: &RealImage, name: String| -> CliResult<()> {
        save_image(img, out.join(&name), depth)?;
        outputs.push(name);
        Ok(())
    };
    match cfg.frames {
        Some(m) => {
            let stack = synth_phase_shifted_stack(&model, m)?;
            let mut names = Vec::new();
            for (i, frame) in stack.frames().iter().enumerate() {
                let name = format!("frame_{i:02}.pgm");
                save(frame, name.clone())?;
                names.push(PathBuf::from(name));
            }
            let background = if cfg.with_background {
                let name = "background.pgm".to_string();
                save(
                    &model.background_frame(model.seed.wrapping_add(m as u64))?,
                    name.clone(),
                )?;
                Some(PathBuf::from(name))
            } else {
                None
            };
            let file = StackFile {
                frame_count: m,
                frames: names,
                background,
            };
            write_json(&out.join(STACK_FILE), &file)?;
            outputs.push(STACK_FILE.to_string());
        }
        None => {
            save(&synth_fringe(&model)?, "fringes.pgm".to_string())?;
            if cfg.with_background {
                save(
                    &model.background_frame(model.seed.wrapping_add(1))?,
                    "background.pgm".to_string(),
                )?;
            }
        }
    }
    eprintln!(
        "synthesized {}x{} fringes, noise sigma {:.4}",
        cfg.width, cfg.height, model.noise_sigma
    );
    Ok(outputs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeOutput {
    pub image: PathBuf,
    pub eta: f64,
    pub sn_bins: usize,
    pub nr_bins: usize,
    pub report: InfoReport,
}

pub fn analyze_cmd(cfg: &AnalyzeConfig, out: &Path) -> CliResult<Vec<String>> {
    if cfg.image.as_os_str().is_empty() {
        return Err(CliError::config("analyze needs an image"));
    }
    let image = StoredImage::load(&cfg.image)?.image;
    let background = load_optional(cfg.background.as_ref())?;
    let options = AnalyzeOptions {
        regions: None,
        camera_bits: cfg.camera_bits,
        energy_fraction: cfg.energy_fraction,
    };
    let analysis = analyze(&image, background.as_ref(), &options)?;
    for w in &analysis.report.warnings {
        eprintln!("warning: {w}");
    }
    save_mask_pgm(&analysis.regions.sn, out.join("sn_mask.pgm"))?;
    let output = AnalyzeOutput {
        image: cfg.image.clone(),
        eta: analysis.eta,
        sn_bins: analysis.regions.sn.count(),
        nr_bins: analysis.regions.nr.count(),
        report: analysis.report,
    };
    let report = emit_report(out, &output, cfg.format)?;
    Ok(vec!["sn_mask.pgm".to_string(), report])
}

fn load_stack(path: &Path) -> CliResult<(FringeStack, Option<RealImage>)> {
    let (file, dir) = StackFile::load(path)?;
    let frames = file
        .frames
        .iter()
        .map(|f| load_image(dir.join(f)))
        .collect::<Result<Vec<_>, _>>()?;
    let stack = FringeStack::from_frames(frames)?;
    let background = match &file.background {
        Some(b) => Some(load_image(dir.join(b))?),
        None => None,
    };
    Ok((stack, background))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsaOutput {
    #[serde(rename = "M")]
    pub frames: usize,
    pub kernel_gain: f64,
    pub before: InfoReport,
    pub after: InfoReport,
}

pub fn psa_demod(cfg: &PsaConfig, out: &Path) -> CliResult<Vec<String>> {
    if cfg.stack.as_os_str().is_empty() {
        return Err(CliError::config("psa-demod needs a stack file"));
    }
    let (stack, background) = load_stack(&cfg.stack)?;
    let kernel = match &cfg.kernel {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            PsaKernel::from_json(&text)?
        }
        None => least_squares_kernel(stack.len())?,
    };
    let analytic = demodulate_stack(&stack, &kernel)?;
    let options = AnalyzeOptions {
        camera_bits: cfg.camera_bits,
        ..AnalyzeOptions::default()
    };
    let before = analyze(&stack.frames()[0], background.as_ref(), &options)?.report;
    let after = analyze_analytic(&analytic, None, &options)?.report;
    save_complex(&analytic, out.join("analytic.raw"))?;
    // the kernel returns e^{-iφ}; store φ itself
    let phase = wrapped_phase(&analytic.map(|z| z.conj())?);
    save_phase_pgm(&phase, out.join("phase.pgm"))?;
    let output = PsaOutput {
        frames: stack.len(),
        kernel_gain: snr_gain(&kernel)?,
        before,
        after,
    };
    eprintln!(
        "rate {:.3} -> {:.3} bits/pixel",
        output.before.rate, output.after.rate
    );
    let report = emit_report(out, &output, cfg.format)?;
    Ok(vec!["analytic.raw".into(), "phase.pgm".into(), report])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CarrierOutput {
    pub filter: LobeFilter,
    pub containment: f64,
    pub keep_carrier: bool,
    pub report: InfoReport,
}

pub fn carrier_demod(cfg: &CarrierConfig, out: &Path) -> CliResult<Vec<String>> {
    if cfg.image.as_os_str().is_empty() {
        return Err(CliError::config("carrier-demod needs an image"));
    }
    let image = load_image(&cfg.image)?;
    let background = load_optional(cfg.background.as_ref())?;
    let analysis = analyze(&image, background.as_ref(), &AnalyzeOptions::default())?;
    let profile = if cfg.taper == 0.0 {
        LobeProfile::Hard
    } else {
        LobeProfile::RaisedCosine { taper: cfg.taper }
    };
    let filter =
        fit_lobe_spectrum(&dft2(&image)?, &analysis.regions, analysis.eta)?.with_profile(profile);
    filter.validate()?;
    let analytic = demodulate_carrier(&image, &filter, cfg.keep_carrier)?;
    save_complex(&analytic, out.join("analytic.raw"))?;
    save_phase_pgm(&wrapped_phase(&analytic), out.join("phase.pgm"))?;
    let output = CarrierOutput {
        filter,
        containment: lobe_containment(&image, &analysis.regions, &filter)?,
        keep_carrier: cfg.keep_carrier,
        report: analysis.report,
    };
    write_json(&out.join("filter.json"), &output)?;
    print!("{}", crate::manifest::to_json(&output));
    Ok(vec![
        "analytic.raw".into(),
        "phase.pgm".into(),
        "filter.json".into(),
    ])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TablesOutput {
    pub capacity: f64,
    pub rows: Vec<TradeRow>,
    /// `C` of a 3000 Hz line at S/N = 1000.
    pub telephone_capacity: f64,
}

pub fn tables(cfg: &TablesConfig, out: &Path) -> CliResult<Vec<String>> {
    let rows = capacity_trade_table(cfg.capacity, &cfg.bandwidths)?;
    let mut table = String::from("capacity_bits_per_s,bandwidth_hz,snr\n");
    for r in &rows {
        table.push_str(&format!("{},{},{}\n", r.capacity, r.bandwidth, r.snr));
    }
    write_atomic(&out.join("trade_table.csv"), table.as_bytes())?;
    let curve = doubling_curve(cfg.curve_bandwidth, &cfg.curve_snrs, &cfg.curve_frames)?;
    write_atomic(&out.join("doubling_curve.csv"), curve.to_csv().as_bytes())?;
    let telephone = channel_capacity(&ChannelModel::new(3000.0, 1000.0, 1.0)?)?;
    let output = TablesOutput {
        capacity: cfg.capacity,
        rows,
        telephone_capacity: telephone,
    };
    print!("{}", crate::manifest::to_json(&output));
    Ok(vec!["trade_table.csv".into(), "doubling_curve.csv".into()])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizePoint {
    pub sigma: f64,
    pub bytes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompressOutput {
    pub noiseless_bytes: usize,
    pub noisy_bytes: usize,
    pub ratio: f64,
    pub sweep: Vec<SizePoint>,
}

pub fn compress_compare(
    cfg: &CompressConfig,
    out: &Path,
    format: Format,
) -> CliResult<Vec<String>> {
    let base = SynthConfig {
        noise_sigma: None,
        target_snr: None,
        frames: None,
        ..cfg.fringes.clone()
    };
    let depth = depth(base.bits)?;
    let clean = base.model()?;
    let encode = |sigma: f64| -> CliResult<(RealImage, Vec<u8>)> {
        let img = synth_fringe(&clean.with_noise(sigma))?;
        let bytes = png_bytes(&img, depth)?;
        Ok((img, bytes))
    };
    let (_, noiseless) = encode(0.0)?;
    let (_, noisy) = encode(cfg.noisy_sigma)?;
    write_atomic(&out.join("noiseless.png"), &noiseless)?;
    write_atomic(&out.join("noisy.png"), &noisy)?;
    let sweep = cfg
        .sweep_sigmas
        .iter()
        .map(|&sigma| {
            Ok(SizePoint {
                sigma,
                bytes: encode(sigma)?.1.len(),
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    let output = CompressOutput {
        noiseless_bytes: noiseless.len(),
        noisy_bytes: noisy.len(),
        ratio: noisy.len() as f64 / noiseless.len() as f64,
        sweep,
    };
    let report = emit_report(out, &output, format)?;
    Ok(vec!["noiseless.png".into(), "noisy.png".into(), report])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyBudget {
    pub payload_bits: f64,
    pub transmit_seconds: f64,
    #[serde(
        default,
        skip_serializing_if = "Option::is_none",
        with = "optional_float"
    )]
    pub rate_bits_per_pixel: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DownlinkOutput {
    #[serde(rename = "M")]
    pub frames: usize,
    pub width: usize,
    pub height: usize,
    pub capacity: f64,
    pub payload: Payload,
    pub raw: StrategyBudget,
    pub compressed: StrategyBudget,
}

mod optional_float {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(x) => fringe_info::serde_float::serialize(x, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        #[derive(Deserialize)]
        struct Wrap(#[serde(with = "fringe_info::serde_float")] f64);
        Ok(Option::<Wrap>::deserialize(d)?.map(|w| w.0))
    }
}

pub fn downlink_budget(cfg: &DownlinkConfig, out: &Path, format: Format) -> CliResult<Vec<String>> {
    let (frames, width, height, measured) = match &cfg.stack {
        Some(path) => {
            let (stack, background) = load_stack(path)?;
            let (w, h) = stack.dims();
            let report = analyze(
                &stack.frames()[0],
                background.as_ref(),
                &AnalyzeOptions::default(),
            )?
            .report;
            (stack.len(), w, h, Some((report.bandwidth, report.snr)))
        }
        None => {
            let measured = match (cfg.bandwidth, cfg.snr) {
                (Some(b), Some(s)) => Some((b, s)),
                (None, None) => None,
                _ => return Err(CliError::config("give both bandwidth and snr, or neither")),
            };
            (cfg.frames, cfg.width, cfg.height, measured)
        }
    };
    if frames == 0 || width == 0 || height == 0 {
        return Err(CliError::config("frames and image size must be positive"));
    }
    let capacity = match (cfg.capacity, &cfg.channel) {
        (Some(c), _) => c,
        (None, Some(ch)) => channel_capacity(ch)?,
        (None, None) => return Err(CliError::config("give a capacity or a channel model")),
    };
    if !(capacity > 0.0 && capacity.is_finite()) {
        return Err(CliError::config(format!(
            "capacity must be positive and finite, got {capacity}"
        )));
    }
    let pixels = (width * height) as f64;
    let raw_bits = frames as f64 * pixels * cfg.camera_bits;
    let compressed_bits = match cfg.payload {
        Payload::Complex => pixels * 2.0 * f64::from(cfg.float_bits),
        Payload::WrappedPhase => pixels * f64::from(cfg.phase_bits),
    };
    let (raw_rate, compressed_rate) = match measured {
        Some((bandwidth, snr)) if bandwidth > 0.0 => (
            Some(fringe_info_rate(bandwidth, snr, width * height, cfg.camera_bits)?.rate),
            Some(analytic_info_rate(bandwidth, snr, frames as f64)?),
        ),
        _ => (None, None),
    };
    let output = DownlinkOutput {
        frames,
        width,
        height,
        capacity,
        payload: cfg.payload,
        raw: StrategyBudget {
            payload_bits: raw_bits,
            transmit_seconds: raw_bits / capacity,
            rate_bits_per_pixel: raw_rate,
        },
        compressed: StrategyBudget {
            payload_bits: compressed_bits,
            transmit_seconds: compressed_bits / capacity,
            rate_bits_per_pixel: compressed_rate,
        },
    };
    let report = emit_report(out, &output, format)?;
    Ok(vec![report])
}
