//! End-to-end acceptance checks, one line per criterion.
//!
//! Runs without the test harness so every line is printed; the process
//! fails if any criterion fails.

use std::f64::consts::PI;
use std::fs;
use std::process::Command;

use fringe_info::grid::{quantize, QuantizationSpec, RealImage};
use fringe_info::infotheory::{
    analytic_info_rate, capacity_trade_table, channel_capacity, doubling_frames, fringe_info_rate,
    reliability, ChannelModel, Reliability,
};
use fringe_info::psa::{
    demodulate_stack, least_squares_kernel, monte_carlo_gain, snr_gain, PsaKernel,
};
use fringe_info::rng::GaussianSource;
use fringe_info::spectral::{default_regions, dft2, reference_regions};
use fringe_info::synth::{
    image_center, noise_sigma_for_snr, synth_fringe, synth_phase_shifted_stack,
    synth_profilometry_pair, Field, FringeModel, FringeStack, PhaseField,
};
use fringe_info::{analyze, analyze_analytic, Analysis, AnalyzeOptions};
use fringe_info_cli::commands::compress_compare;
use fringe_info_cli::config::{recipe, CompressConfig, Format};
use num_complex::Complex64;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn within(name: &str, value: f64, lo: f64, hi: f64) -> Result<String, String> {
    let text = format!("{name} {value:.4}");
    if (lo..=hi).contains(&value) {
        Ok(text)
    } else {
        Err(format!("{text} outside [{lo}, {hi}]"))
    }
}

fn near(name: &str, value: f64, target: f64, rel: f64) -> Result<String, String> {
    within(name, value, target * (1.0 - rel), target * (1.0 + rel))
}

fn require(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn e<T: std::fmt::Display>(err: T) -> String {
    err.to_string()
}

fn q8() -> QuantizationSpec {
    QuantizationSpec::codes(8).unwrap()
}

fn defocus(b: f64, f_max: f64, seed: u64) -> FringeModel {
    let (w, h) = (200, 200);
    FringeModel {
        width: w,
        height: h,
        background: Field::Constant(127.5),
        modulation: Field::Constant(b),
        phase: PhaseField::Defocus {
            center: image_center(w, h),
            f_max,
        },
        noise_sigma: 0.0,
        seed,
    }
}

/// 8-bit fringes analysed against the known noiseless reference: η from the
/// difference frame, signal support from the reference's energy.
fn reference_analysis(clean: &FringeModel, sigma: f64) -> Result<Analysis, String> {
    let reference = synth_fringe(clean).map_err(e)?;
    let regions = reference_regions(&reference).map_err(e)?;
    let noisy = quantize(&synth_fringe(&clean.with_noise(sigma)).map_err(e)?, &q8()).map_err(e)?;
    let noise = noisy.zip_map(&reference, |a, b| a - b).map_err(e)?;
    let options = AnalyzeOptions {
        regions: Some(regions),
        ..AnalyzeOptions::default()
    };
    analyze(&noisy, Some(&noise), &options).map_err(e)
}

/// Noise level whose estimated SNR_K hits `target`.
fn calibrated(clean: &FringeModel, target: f64) -> Result<Analysis, String> {
    let mut sigma = noise_sigma_for_snr(clean, target, None).map_err(e)?;
    for _ in 0..6 {
        let a = reference_analysis(clean, sigma)?;
        sigma *= (a.report.snr / target).sqrt();
    }
    reference_analysis(clean, sigma)
}

fn defocus_rates(f_max: f64, quant: (f64, f64), noisy: &[(f64, f64, f64)]) -> Check {
    let mut lines = Vec::new();
    let q = reference_analysis(&defocus(127.5, f_max, 1), 0.0)?;
    if quant.0 < 0.0 {
        lines.push(within("quantization-only SNR", q.report.snr, 3.5e4, 1.4e5)?);
    }
    lines.push(within(
        "rate",
        q.report.rate,
        quant.1 - quant.0.abs(),
        quant.1 + quant.0.abs(),
    )?);
    for &(target, rate, tol) in noisy {
        let a = calibrated(&defocus(40.0, f_max, 7), target)?;
        lines.push(near(&format!("SNR {target}"), a.report.snr, target, 0.1)?);
        lines.push(within("rate", a.report.rate, rate - tol, rate + tol)?);
    }
    Ok(lines.join(", "))
}

fn criterion_1() -> Check {
    defocus_rates(0.5, (-0.5, 8.0), &[(3.0, 1.0, 0.1), (1.0, 0.5, 0.05)])
}

fn criterion_2() -> Check {
    defocus_rates(0.125, (0.2, 2.0), &[(2.03, 0.2, 0.03)])
}

fn criterion_3() -> Check {
    let rows =
        capacity_trade_table(30_000.0, &[1500.0, 3000.0, 6000.0, 9000.0, 12000.0]).map_err(e)?;
    let printed: [f64; 5] = [1_100_000.0, 1000.0, 31.0, 9.0, 5.0];
    for (row, &snr) in rows.iter().zip(&printed) {
        let exact = row.bandwidth * (1.0 + row.snr).log2();
        require(
            (exact - 30_000.0).abs() < 1e-6,
            format!("row {row:?} gives {exact}"),
        )?;
        let rounded = row.bandwidth * (1.0 + snr).log2();
        require(
            (rounded - 30_000.0).abs() <= 1500.0,
            format!("printed S/N {snr} at {} Hz gives {rounded}", row.bandwidth),
        )?;
    }
    let phone = channel_capacity(&ChannelModel::new(3000.0, 1000.0, 1.0).map_err(e)?).map_err(e)?;
    require(
        (phone - 29_901.7).abs() <= 0.1,
        format!("telephone C {phone}"),
    )?;
    Ok(format!("5 rows back-substitute, telephone C {phone:.1}"))
}

fn criterion_4() -> Check {
    for m in 3..=16 {
        let g = snr_gain(&least_squares_kernel(m).map_err(e)?).map_err(e)?;
        require((g - m as f64).abs() <= 1e-12, format!("M {m}: gain {g}"))?;
    }
    let mut worst: f64 = 0.0;
    for (m, seed) in [(3, 1), (7, 2), (12, 3)] {
        let k = least_squares_kernel(m).map_err(e)?;
        let mc = monte_carlo_gain(&k, 100_000, 1.0, seed).map_err(e)?;
        worst = worst.max((mc / m as f64 - 1.0).abs());
    }
    require(worst <= 0.03, format!("Monte Carlo relative error {worst}"))?;
    let mut rng = GaussianSource::new(42);
    for i in 0..1000 {
        let m = 3 + i % 14;
        let parts = rng.normals(2 * m, 1.0);
        let taps = parts
            .chunks(2)
            .map(|c| Complex64::new(c[0], c[1]))
            .collect();
        let g = snr_gain(&PsaKernel::new(taps).map_err(e)?).map_err(e)?;
        require(
            g <= m as f64 * (1.0 + 1e-12),
            format!("random kernel M {m}: gain {g}"),
        )?;
    }
    Ok(format!(
        "exact for M 3..16, Monte Carlo within {:.2}%, 1000 random kernels bounded",
        worst * 100.0
    ))
}

const ANALYTIC_STACK_SEED: u64 = 21;

/// Stack at spatial SNR `target`, 8-bit frames and a matched background.
fn stack_analysis(target: f64, frames: usize) -> Result<(Analysis, Analysis), String> {
    let (w, h) = (200, 200);
    let base = FringeModel {
        background: Field::Constant(128.0),
        modulation: Field::Constant(60.0),
        seed: ANALYTIC_STACK_SEED,
        ..defocus(60.0, 0.125, 0)
    };
    let sigma = noise_sigma_for_snr(&base, target, None).map_err(e)?;
    let model = base.with_noise(sigma);
    let stack = synth_phase_shifted_stack(&model, frames).map_err(e)?;
    let frames_q = stack
        .frames()
        .iter()
        .map(|f| quantize(f, &q8()))
        .collect::<Result<Vec<_>, _>>()
        .map_err(e)?;
    let stack = FringeStack::from_frames(frames_q).map_err(e)?;
    let bg = RealImage::new(w, h, GaussianSource::new(999).normals(w * h, sigma))
        .and_then(|n| n.map(|v| v + 128.0))
        .and_then(|n| quantize(&n, &q8()))
        .map_err(e)?;
    let options = AnalyzeOptions::default();
    let single = analyze(&stack.frames()[0], Some(&bg), &options).map_err(e)?;
    let z = demodulate_stack(&stack, &least_squares_kernel(stack.len()).map_err(e)?).map_err(e)?;
    let analytic = analyze_analytic(&z, None, &options).map_err(e)?;
    Ok((single, analytic))
}

fn criterion_5() -> Check {
    require(
        doubling_frames(1.0).map_err(e)? == 3.0 && doubling_frames(20.0).map_err(e)? == 22.0,
        "doubling frame count",
    )?;
    let mut ratios = Vec::new();
    for target in [1.0, 3.0, 8.0, 20.0] {
        let (probe, _) = stack_analysis(target, 3)?;
        let m = (2.0 + probe.report.snr).round() as usize;
        let (single, analytic) = stack_analysis(target, m.max(3))?;
        let ratio = analytic.report.rate / single.report.rate;
        require(
            (ratio / 2.0 - 1.0).abs() <= 0.1,
            format!("SNR {:.2}, M {m}: rate ratio {ratio:.3}", probe.report.snr),
        )?;
        ratios.push(format!("M {m} x{ratio:.2}"));
    }
    Ok(ratios.join(", "))
}

fn criterion_6() -> Check {
    let (single, analytic) = stack_analysis(8.1, 12)?;
    Ok([
        near("single SNR", single.report.snr, 8.1, 0.1)?,
        within("B_f", single.report.bandwidth, 0.1, 0.15)?,
        within("single rate", single.report.rate, 0.35, 0.45)?,
        near("analytic SNR", analytic.report.snr, 97.0, 0.15)?,
        within("analytic rate", analytic.report.rate, 0.74, 0.90)?,
    ]
    .join(", "))
}

fn criterion_7() -> Check {
    let model = FringeModel {
        modulation: Field::Constant(60.0),
        ..defocus(60.0, 0.125, 0)
    };
    let phase = model.phase.render(model.width, model.height).map_err(e)?;
    let mut worst = (0.0f64, 0.0f64);
    for m in [3, 4, 12] {
        let stack = synth_phase_shifted_stack(&model, m).map_err(e)?;
        let z = demodulate_stack(&stack, &least_squares_kernel(m).map_err(e)?).map_err(e)?;
        let amplitude = m as f64 * 60.0 / 2.0;
        for (zi, &p) in z.data().iter().zip(phase.data()) {
            let d = (-zi.arg() - p).rem_euclid(2.0 * PI);
            worst.0 = worst.0.max(d.min(2.0 * PI - d));
            worst.1 = worst.1.max((zi.norm() / amplitude - 1.0).abs());
        }
    }
    require(worst.0 <= 1e-6, format!("phase error {:.3e} rad", worst.0))?;
    require(worst.1 <= 1e-9, format!("amplitude error {:.3e}", worst.1))?;
    Ok(format!(
        "phase error {:.1e} rad, amplitude error {:.1e}",
        worst.0, worst.1
    ))
}

fn criterion_8() -> Check {
    let mut lines = Vec::new();
    for (i, target) in [1.0, 3.0, 10.0, 100.0].into_iter().enumerate() {
        let clean = defocus(60.0, 0.125, 100 + i as u64);
        let sigma = noise_sigma_for_snr(&clean, target, None).map_err(e)?;
        let signal = clean.signal(0.0).map_err(e)?;
        let noise = RealImage::new(
            200,
            200,
            GaussianSource::new(500 + i as u64).normals(200 * 200, sigma),
        )
        .map_err(e)?;
        let truth = signal.power(None).map_err(e)? / noise.power(None).map_err(e)?;
        let img = synth_fringe(&clean)
            .and_then(|c| c.zip_map(&noise, |a, b| a + b))
            .map_err(e)?;
        let est = analyze(&img, None, &AnalyzeOptions::default())
            .map_err(e)?
            .report
            .snr;
        lines.push(near(
            &format!("truth {truth:.2}: estimate"),
            est,
            truth,
            0.1,
        )?);
    }
    let sigma = 7.5;
    let bg = RealImage::new(200, 200, GaussianSource::new(77).normals(200 * 200, sigma))
        .and_then(|n| n.map(|v| v + 127.5))
        .map_err(e)?;
    let fringes = synth_fringe(&defocus(60.0, 0.125, 78).with_noise(sigma)).map_err(e)?;
    let eta = analyze(&fringes, Some(&bg), &AnalyzeOptions::default())
        .map_err(e)?
        .eta;
    lines.push(near("background η/σ²", eta / (sigma * sigma), 1.0, 0.1)?);
    Ok(lines.join(", "))
}

fn criterion_9() -> Check {
    // Parseval
    let img = RealImage::new(64, 48, GaussianSource::new(5).normals(64 * 48, 3.0)).map_err(e)?;
    let spatial: f64 = img.data().iter().map(|v| v * v).sum();
    let spectral = dft2(&img).map_err(e)?.total_energy();
    require(
        (spectral / spatial - 1.0).abs() <= 1e-9,
        format!("Parseval {spectral} vs {spatial}"),
    )?;

    // mask symmetry
    let fringes = synth_fringe(&defocus(60.0, 0.125, 9).with_noise(10.0)).map_err(e)?;
    let regions = default_regions(&fringes, None).map_err(e)?;
    require(
        regions.is_symmetric(),
        "default regions are not point-symmetric",
    )?;

    // scale invariance of the SNR estimate and of the kernel gain
    let options = AnalyzeOptions::default();
    let base = analyze(&fringes, None, &options).map_err(e)?.report.snr;
    let scaled = fringes.scale(3.7).map_err(e)?;
    let again = analyze(&scaled, None, &options).map_err(e)?.report.snr;
    require(
        (again / base - 1.0).abs() <= 1e-9,
        format!("SNR {base} changes to {again} under scaling"),
    )?;
    let k = least_squares_kernel(7).map_err(e)?;
    let g = snr_gain(&k.scaled(Complex64::new(-2.0, 5.0)).map_err(e)?).map_err(e)?;
    require((g - 7.0).abs() <= 1e-12, format!("scaled kernel gain {g}"))?;

    // limits of the rate in the noise power
    let rates: Vec<f64> = [1e-12, 1e-6, 1.0, 1e6, 1e12]
        .iter()
        .map(|n| fringe_info_rate(0.5, 1.0 / n, 1, 8.0).map(|r| r.rate))
        .collect::<Result<_, _>>()
        .map_err(e)?;
    require(
        rates.windows(2).all(|w| w[0] > w[1]) && rates[0] > 19.0 && rates[4] < 1e-11,
        format!("rate limits {rates:?}"),
    )?;
    let analytic: Vec<f64> = (1..=32)
        .map(|m| analytic_info_rate(0.5, 3.0, m as f64))
        .collect::<Result<_, _>>()
        .map_err(e)?;
    require(
        analytic.windows(2).all(|w| w[0] < w[1]),
        "analytic rate is not increasing in M",
    )?;

    // reliability boundary
    require(
        reliability(29_999.0, 30_000.0) == Reliability::Reliable
            && reliability(30_000.0, 30_000.0) == Reliability::Unreliable
            && reliability(30_001.0, 30_000.0) == Reliability::Unreliable,
        "reliability boundary",
    )?;

    // byte-identical reruns
    let dir = tempfile::tempdir().map_err(e)?;
    let bin = env!("CARGO_BIN_EXE_fringe-info");
    let synth = |name: &str| -> Result<Vec<u8>, String> {
        let out = dir.path().join(name);
        let status = Command::new(bin)
            .arg("--out")
            .arg(&out)
            .args(["synth", "--recipe", "nyquist-snr1", "--seed", "5"])
            .output()
            .map_err(e)?;
        require(status.status.success(), "synth failed")?;
        fs::read(out.join("fringes.pgm")).map_err(e)
    };
    let first = synth("a")?;
    let manifest = dir.path().join("a").join("manifest.json");
    let rerun = dir.path().join("b");
    let status = Command::new(bin)
        .arg("--out")
        .arg(&rerun)
        .arg("--config")
        .arg(&manifest)
        .arg("synth")
        .output()
        .map_err(e)?;
    require(status.status.success(), "manifest rerun failed")?;
    require(
        first == fs::read(rerun.join("fringes.pgm")).map_err(e)? && first == synth("c")?,
        "reruns differ",
    )?;
    Ok("Parseval, symmetry, scale invariance, limits, reliability, reruns".into())
}

fn criterion_10() -> Check {
    let dir = tempfile::tempdir().map_err(e)?;
    let cfg = CompressConfig::default();
    compress_compare(&cfg, dir.path(), Format::Json).map_err(e)?;
    let noiseless = fs::metadata(dir.path().join("noiseless.png"))
        .map_err(e)?
        .len() as f64;
    let noisy = fs::metadata(dir.path().join("noisy.png")).map_err(e)?.len() as f64;
    within("size ratio", noisy / noiseless, 2.0, f64::INFINITY)
}

fn criterion_11() -> Check {
    let model = recipe("profilometry").and_then(|c| c.model()).map_err(e)?;
    let (fringes, background) = synth_profilometry_pair(&model).map_err(e)?;
    let fringes = quantize(&fringes, &q8()).map_err(e)?;
    let background = quantize(&background, &q8()).map_err(e)?;
    let a = analyze(&fringes, Some(&background), &AnalyzeOptions::default()).map_err(e)?;
    Ok([
        within("B_f", a.report.bandwidth, 0.09, 0.13)?,
        near("SNR", a.report.snr, 11.2, 0.1)?,
        within("rate", a.report.rate, 0.34, 0.46)?,
    ]
    .join(", "))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("full-band defocus rates", criterion_1),
        ("eighth-band defocus rates", criterion_2),
        ("capacity trade table", criterion_3),
        ("PSA gain", criterion_4),
        ("frame doubling law", criterion_5),
        ("twelve-frame compression pipeline", criterion_6),
        ("noiseless demodulation", criterion_7),
        ("spectral estimator oracle", criterion_8),
        ("property suites", criterion_9),
        ("PNG size ratio", criterion_10),
        ("profilometry stand-in", criterion_11),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
