use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fringe-info"))
}

fn run(out: &Path, args: &[&str]) -> Output {
    bin().arg("--out").arg(out).args(args).output().unwrap()
}

fn ok(out: &Path, args: &[&str]) -> Output {
    let o = run(out, args);
    assert!(
        o.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    o
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("not a number: {v}"))
}

#[test]
fn synth_rerun_from_manifest_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, c) = (
        dir.path().join("a"),
        dir.path().join("b"),
        dir.path().join("c"),
    );
    ok(&a, &["synth", "--recipe", "nyquist-snr3", "--seed", "11"]);
    ok(&b, &["synth", "--recipe", "nyquist-snr3", "--seed", "11"]);
    let manifest = a.join("manifest.json");
    ok(&c, &["--config", manifest.to_str().unwrap(), "synth"]);
    let first = fs::read(a.join("fringes.pgm")).unwrap();
    assert_eq!(first, fs::read(b.join("fringes.pgm")).unwrap());
    assert_eq!(first, fs::read(c.join("fringes.pgm")).unwrap());
    assert_eq!(
        fs::read(&manifest).unwrap(),
        fs::read(c.join("manifest.json")).unwrap()
    );

    let other = dir.path().join("d");
    ok(
        &other,
        &["synth", "--recipe", "nyquist-snr3", "--seed", "12"],
    );
    assert_ne!(first, fs::read(other.join("fringes.pgm")).unwrap());
}

#[test]
fn analyze_rerun_reproduces_report() {
    let dir = tempfile::tempdir().unwrap();
    let s = dir.path().join("s");
    ok(
        &s,
        &["synth", "--recipe", "eighth-band-snr2", "--with-background"],
    );
    let img = s.join("fringes.pgm");
    let bg = s.join("background.pgm");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let o = ok(
        &a,
        &[
            "analyze",
            img.to_str().unwrap(),
            "--background",
            bg.to_str().unwrap(),
        ],
    );
    ok(
        &b,
        &[
            "--config",
            a.join("manifest.json").to_str().unwrap(),
            "analyze",
        ],
    );
    let report = fs::read(a.join("report.json")).unwrap();
    assert_eq!(report, fs::read(b.join("report.json")).unwrap());
    assert_eq!(report, o.stdout);
    let v = json(&a.join("report.json"));
    assert!(f(&v["report"]["rate"]) > 0.0);
    assert!(a.join("sn_mask.pgm").exists());
    assert_eq!(json(&a.join("manifest.json"))["command"], "analyze");
}

#[test]
fn csv_report_format() {
    let dir = tempfile::tempdir().unwrap();
    let s = dir.path().join("s");
    ok(&s, &["synth", "--recipe", "eighth-band"]);
    let a = dir.path().join("a");
    ok(
        &a,
        &[
            "--format",
            "csv",
            "analyze",
            s.join("fringes.pgm").to_str().unwrap(),
        ],
    );
    let text = fs::read_to_string(a.join("report.csv")).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.contains("report.rate"));
    assert_eq!(lines.count(), 1);
}

#[test]
fn exit_codes_distinguish_failures() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    // I/O
    assert_eq!(
        run(&out, &["analyze", "missing.pgm"]).status.code(),
        Some(3)
    );
    // configuration
    assert_eq!(
        run(&out, &["synth", "--recipe", "nope"]).status.code(),
        Some(2)
    );
    assert_eq!(
        run(&out, &["tables", "--capacity", "-5"]).status.code(),
        Some(2)
    );
    assert_eq!(run(&out, &["no-such-command"]).status.code(), Some(2));
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"capacity": 1.0, "typo": 2}"#).unwrap();
    assert_eq!(
        run(&out, &["--config", cfg.to_str().unwrap(), "tables"])
            .status
            .code(),
        Some(2)
    );
    // domain: a baseband pattern has no carrier lobe
    let s = dir.path().join("s");
    ok(&s, &["synth", "--recipe", "eighth-band"]);
    let o = run(
        &out,
        &["carrier-demod", s.join("fringes.pgm").to_str().unwrap()],
    );
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no carrier"));
}

#[test]
fn manifest_of_another_command_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("t");
    ok(&t, &["tables"]);
    let o = run(
        &dir.path().join("x"),
        &[
            "--config",
            t.join("manifest.json").to_str().unwrap(),
            "synth",
        ],
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn every_recipe_synthesizes() {
    let dir = tempfile::tempdir().unwrap();
    for name in fringe_info_cli::config::RECIPES {
        let out = dir.path().join(name);
        ok(&out, &["synth", "--recipe", name]);
        assert!(out.join("fringes.pgm").exists() || out.join("stack.json").exists());
    }
}

#[test]
fn tables_reproduce_trade_rows() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("t");
    let o = ok(&t, &["tables"]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((f(&v["telephone_capacity"]) - 29_901.7).abs() < 0.1);
    let table = fs::read_to_string(t.join("trade_table.csv")).unwrap();
    let rows: Vec<Vec<f64>> = table
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 5);
    for r in &rows {
        let c = r[1] * (1.0 + r[2]).log2();
        assert!((c - 30_000.0).abs() <= 0.05 * 30_000.0, "{r:?}");
    }
    let curve = fs::read_to_string(t.join("doubling_curve.csv")).unwrap();
    assert!(curve.starts_with("snr_k,frames,rate_bits_per_pixel"));

    let custom = dir.path().join("c");
    ok(
        &custom,
        &["tables", "--capacity", "1000", "--bandwidths", "100,250"],
    );
    let table = fs::read_to_string(custom.join("trade_table.csv")).unwrap();
    assert_eq!(table.lines().count(), 3);
}

#[test]
fn compress_compare_sizes() {
    let dir = tempfile::tempdir().unwrap();
    let c = dir.path().join("c");
    ok(&c, &["compress-compare"]);
    let v = json(&c.join("report.json"));
    assert!(f(&v["ratio"]) >= 2.0, "{v}");
    assert_eq!(
        fs::read(c.join("noisy.png")).unwrap().len() as f64,
        f(&v["noisy_bytes"])
    );
    let sizes: Vec<f64> = v["sweep"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| f(&p["bytes"]))
        .collect();
    assert_eq!(sizes.len(), 3);
    assert!(sizes.windows(2).all(|w| w[0] <= w[1]), "{sizes:?}");

    let same = dir.path().join("same");
    ok(&same, &["compress-compare", "--noisy-sigma", "0"]);
    assert_eq!(f(&json(&same.join("report.json"))["ratio"]), 1.0);
}

#[test]
fn downlink_budget_arithmetic() {
    let dir = tempfile::tempdir().unwrap();
    let budget = |name: &str, frames: &str| {
        let out = dir.path().join(name);
        ok(
            &out,
            &[
                "downlink-budget",
                "--capacity",
                "30000",
                "--frames",
                frames,
                "--bandwidth",
                "0.125",
                "--snr",
                "8.1",
            ],
        );
        json(&out.join("report.json"))
    };
    let twelve = budget("m12", "12");
    assert!((f(&twelve["raw"]["transmit_seconds"]) - 128.0).abs() < 1e-9);
    let three = budget("m3", "3");
    assert_eq!(
        twelve["compressed"]["payload_bits"],
        three["compressed"]["payload_bits"]
    );
    for v in [&twelve, &three] {
        assert!(f(&v["compressed"]["rate_bits_per_pixel"]) >= f(&v["raw"]["rate_bits_per_pixel"]));
    }

    let phase = dir.path().join("phase");
    ok(
        &phase,
        &[
            "downlink-budget",
            "--capacity",
            "30000",
            "--payload",
            "wrapped-phase",
        ],
    );
    assert_eq!(
        f(&json(&phase.join("report.json"))["compressed"]["payload_bits"]),
        200.0 * 200.0 * 8.0
    );

    let channel = dir.path().join("channel");
    ok(
        &channel,
        &[
            "downlink-budget",
            "--channel-bandwidth",
            "3000",
            "--signal-power",
            "1000",
            "--noise-power",
            "1",
        ],
    );
    assert!((f(&json(&channel.join("report.json"))["capacity"]) - 29_901.7).abs() < 0.1);

    assert_eq!(
        run(&dir.path().join("x"), &["downlink-budget"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn downlink_budget_from_stack() {
    let dir = tempfile::tempdir().unwrap();
    let s = dir.path().join("s");
    ok(&s, &["synth", "--recipe", "stack12"]);
    let d = dir.path().join("d");
    ok(
        &d,
        &[
            "downlink-budget",
            "--stack",
            s.join("stack.json").to_str().unwrap(),
            "--capacity",
            "30000",
        ],
    );
    let v = json(&d.join("report.json"));
    assert_eq!(v["M"], 12);
    assert!((f(&v["raw"]["transmit_seconds"]) - 128.0).abs() < 1e-9);
}

#[test]
fn psa_demod_stack_report() {
    let dir = tempfile::tempdir().unwrap();
    let s = dir.path().join("s");
    ok(&s, &["synth", "--recipe", "stack12"]);
    let p = dir.path().join("p");
    ok(
        &p,
        &[
            "psa-demod",
            "--stack",
            s.join("stack.json").to_str().unwrap(),
        ],
    );
    let v = json(&p.join("report.json"));
    assert_eq!(v["M"], 12);
    assert!((f(&v["kernel_gain"]) - 12.0).abs() < 1e-12);
    assert!(f(&v["after"]["rate"]) > 1.5 * f(&v["before"]["rate"]));
    assert!(p.join("analytic.raw").exists() && p.join("phase.pgm").exists());
}

#[test]
fn psa_demod_rejects_short_kernels() {
    let dir = tempfile::tempdir().unwrap();
    let s = dir.path().join("s");
    ok(&s, &["synth", "--recipe", "eighth-band", "--frames", "3"]);
    let kernel = dir.path().join("k.json");
    fs::write(&kernel, r#"{"M": 1, "taps": [[1.0, 0.0]]}"#).unwrap();
    let o = run(
        &dir.path().join("p"),
        &[
            "psa-demod",
            "--stack",
            s.join("stack.json").to_str().unwrap(),
            "--kernel",
            kernel.to_str().unwrap(),
        ],
    );
    assert_eq!(o.status.code(), Some(2));

    // a one-frame stack file
    let one = dir.path().join("one.json");
    fs::write(&one, r#"{"M": 1, "frames": ["s/frame_00.pgm"]}"#).unwrap();
    let o = run(
        &dir.path().join("q"),
        &["psa-demod", "--stack", one.to_str().unwrap()],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("at least 3"));

    assert_eq!(
        run(&dir.path().join("r"), &["synth", "--frames", "1"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn noiseless_integer_stack_reports_unbounded_snr() {
    // period-4 carrier with quarter-period steps: every sample is an integer
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("synth.json");
    fs::write(
        &cfg,
        r#"{
            "background": 128.0,
            "modulation": 100.0,
            "phase": {"kind": "profilometry-carrier", "period": 4.0, "theta": 0.5,
                      "surface": {"kind": "flat"}},
            "frames": 4
        }"#,
    )
    .unwrap();
    let s = dir.path().join("s");
    ok(&s, &["--config", cfg.to_str().unwrap(), "synth"]);
    let p = dir.path().join("p");
    let o = ok(
        &p,
        &[
            "psa-demod",
            "--stack",
            s.join("stack.json").to_str().unwrap(),
        ],
    );
    let v = json(&p.join("report.json"));
    assert_eq!(v["after"]["snr"], "inf");
    assert!(String::from_utf8_lossy(&o.stderr).contains("rate"));
}

#[test]
fn carrier_demod_writes_phase_and_filter() {
    let dir = tempfile::tempdir().unwrap();
    let s = dir.path().join("s");
    ok(&s, &["synth", "--recipe", "profilometry"]);
    let c = dir.path().join("c");
    ok(
        &c,
        &[
            "carrier-demod",
            s.join("fringes.pgm").to_str().unwrap(),
            "--background",
            s.join("background.pgm").to_str().unwrap(),
        ],
    );
    let v = json(&c.join("filter.json"));
    assert!((f(&v["filter"]["center"][0]) - 0.1).abs() < 2.0 / 640.0);
    assert!(f(&v["containment"]) > 0.99);
    assert_eq!(v["keep_carrier"], false);
    for name in ["analytic.raw", "phase.pgm", "manifest.json"] {
        assert!(c.join(name).exists(), "{name}");
    }
    let hard = dir.path().join("h");
    ok(
        &hard,
        &[
            "carrier-demod",
            s.join("fringes.pgm").to_str().unwrap(),
            "--taper",
            "0",
            "--keep-carrier",
        ],
    );
    let v = json(&hard.join("filter.json"));
    assert_eq!(v["filter"]["profile"]["kind"], "hard");
    assert_eq!(v["keep_carrier"], true);
}
