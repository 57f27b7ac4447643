use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const FOUR_CHANNELS: &str = r#"{
    "n": 4,
    "single_carrier_variance": 1.0,
    "transmittance": { "model": "explicit", "values": [0.9, 0.7, 0.6, 0.2], "domain": "fourier" },
    "noise_variances": 0.5,
    "eve": { "w": 2.0, "transmittances": 0.5 },
    "allocation": { "method": "constant", "nu_eve": { "explicit": 2.0 } },
    "seed": 7,
    "trials": 200
}"#;

fn amqd() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_amqd"));
    c.env_remove("AMQD_SEED");
    c
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str], cfg: &Path, out: &Path) -> Output {
    amqd()
        .args(args)
        .arg("--config")
        .arg(cfg)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn csv_rows(path: &Path) -> Vec<csv::StringRecord> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|x| x.unwrap()).collect()
}

fn header(path: &Path) -> csv::StringRecord {
    csv::Reader::from_path(path).unwrap().headers().unwrap().clone()
}

fn col(h: &csv::StringRecord, name: &str) -> usize {
    h.iter()
        .position(|c| c == name)
        .unwrap_or_else(|| panic!("missing column {name}"))
}

#[test]
fn allocate_reports_one_row_per_channel() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "s.json", FOUR_CHANNELS);
    let out = dir.path().join("a.csv");
    assert!(run(&["allocate"], &cfg, &out).status.success());
    let h = header(&out);
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 4);
    // values are |T|, so nu = 0.5 / |T|^2: 0.62, 1.02, 1.39, 12.5 against nu_eve = 2
    let selected: Vec<&str> = rows.iter().map(|r| &r[col(&h, "selected")]).collect();
    assert_eq!(selected, ["true", "true", "true", "false"]);
    let hash = &rows[0][col(&h, "scenario_hash")];
    assert_eq!(hash.len(), 64);
    assert!(rows
        .iter()
        .all(|r| &r[col(&h, "scenario_hash")] == hash && &r[col(&h, "seed")] == "7"));
    let c: f64 = rows[0][col(&h, "constant_variance")].parse().unwrap();
    assert!((c - (2.0 - 0.5 / (0.9 * 0.9))).abs() < 1e-12);
}

#[test]
fn all_noisy_channels_select_nothing() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "s.json",
        &FOUR_CHANNELS.replace(r#"{ "explicit": 2.0 }"#, r#"{ "explicit": 0.1 }"#),
    );
    let out = dir.path().join("a.csv");
    assert!(run(&["allocate"], &cfg, &out).status.success());
    let h = header(&out);
    for r in csv_rows(&out) {
        assert_eq!(&r[col(&h, "selected")], "false");
        assert_eq!(r[col(&h, "rate_constant")].parse::<f64>().unwrap(), 0.0);
    }
}

#[test]
fn identity_channel_decodes_exactly() {
    let dir = TempDir::new().unwrap();
    let text = r#"{
        "n": 16,
        "single_carrier_variance": 1.0,
        "transmittance": { "model": "constant", "value": 1.0, "domain": "fourier" },
        "noise_variances": 0.0,
        "eve": { "w": 1.0, "transmittances": 0.5 },
        "seed": 3,
        "trials": 100
    }"#;
    let cfg = write(&dir, "s.json", text);
    let out = dir.path().join("sim.csv");
    let o = run(&["simulate"], &cfg, &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary: Value =
        serde_json::from_str(&fs::read_to_string(amqd_core::cli::summary_path(&out)).unwrap()).unwrap();
    assert!(summary["max_decode_error"].as_f64().unwrap() < 1e-12);
    assert_eq!(csv_rows(&out).len(), 100);
}

#[test]
fn simulate_matches_expected_output_power() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "s.json", FOUR_CHANNELS);
    let out = dir.path().join("sim.csv");
    assert!(run(&["simulate", "--trials", "4000"], &cfg, &out).status.success());
    let summary: Value =
        serde_json::from_str(&fs::read_to_string(amqd_core::cli::summary_path(&out)).unwrap()).unwrap();
    assert_eq!(summary["trials"], 4000);
    assert_eq!(summary["tau_within_3se"], true);
    for c in summary["channels"].as_array().unwrap() {
        let z = (c["empirical_variance"].as_f64().unwrap() - c["expected_variance"].as_f64().unwrap())
            / c["standard_error"].as_f64().unwrap();
        assert!(z.abs() < 4.0, "channel off by {z} SE");
    }
}

#[test]
fn seed_flag_and_env_agree_and_change_output() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "s.json", FOUR_CHANNELS);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let c = dir.path().join("c.csv");
    assert!(run(&["simulate", "--seed", "99"], &cfg, &a).status.success());
    let o = amqd()
        .env("AMQD_SEED", "99")
        .args(["simulate", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&b)
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(run(&["simulate"], &cfg, &c).status.success());
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
}

#[test]
fn sweep_marks_poles_and_keeps_going() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "s.json", FOUR_CHANNELS);
    let out = dir.path().join("sw.csv");
    let o = run(
        &[
            "sweep",
            "--param",
            "transmittance",
            "--from",
            "0.1",
            "--to",
            "1.0",
            "--steps",
            "10",
        ],
        &cfg,
        &out,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let h = header(&out);
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 10);
    let status: Vec<&str> = rows.iter().map(|r| &r[col(&h, "status")]).collect();
    // weak gains leave nothing above the threshold; unit gain is a key-rate pole
    assert_eq!(status[..2], ["domain", "domain"]);
    assert!(status[2..9].iter().all(|s| *s == "ok"));
    assert_eq!(status[9], "pole");
    assert_eq!(&rows[9][col(&h, "rate_amqd")], "");
    assert!(rows[0][col(&h, "message")].contains("no sub-channel"));
}

#[test]
fn sweep_over_ancilla_noise_is_monotone() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "s.json", FOUR_CHANNELS);
    let out = dir.path().join("sw.json");
    let o = amqd()
        .args([
            "--format", "json", "sweep", "--param", "W", "--from", "1", "--to", "6", "--steps", "11", "--config",
        ])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(o.status.success());
    let rows: Vec<Value> = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(rows.len(), 11);
    for key in ["oneway_rr_hom", "oneway_dr_hom", "twoway_rr_hom", "twoway_dr_hom"] {
        let v: Vec<f64> = rows.iter().map(|r| r[key].as_f64().unwrap()).collect();
        assert!(v.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{key} rises with W");
    }
    // Eve's AMQD mean gain sits below her single-carrier gain here
    assert!(rows
        .iter()
        .all(|r| r["kappa"].as_f64().unwrap() >= 1.0 || r["kappa_ordered"] == false));
}

#[test]
fn sweep_over_n_rejects_fractional_values_per_row() {
    let dir = TempDir::new().unwrap();
    let text = FOUR_CHANNELS.replace(
        r#""model": "explicit", "values": [0.9, 0.7, 0.6, 0.2]"#,
        r#""model": "ramp", "from": 0.9, "to": 0.3"#,
    );
    let cfg = write(&dir, "s.json", &text);
    let out = dir.path().join("sw.csv");
    assert!(run(
        &["sweep", "--param", "n", "--from", "2", "--to", "4", "--steps", "5"],
        &cfg,
        &out
    )
    .status
    .success());
    let h = header(&out);
    let status: Vec<String> = csv_rows(&out)
        .iter()
        .map(|r| r[col(&h, "status")].to_string())
        .collect();
    assert_eq!(status, ["ok", "invalid_parameter", "ok", "invalid_parameter", "ok"]);
}

#[test]
fn bad_inputs_map_to_exit_codes() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("x.csv");

    let broken = write(&dir, "broken.json", "{\n  \"n\": 4,\n  \"bogus\": 1\n}");
    let o = run(&["allocate"], &broken, &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("broken.json:3:"));

    let cfg = write(&dir, "s.json", FOUR_CHANNELS);
    let o = run(
        &["sweep", "--param", "bogus", "--from", "0", "--to", "1", "--steps", "2"],
        &cfg,
        &out,
    );
    assert_eq!(o.status.code(), Some(2));

    let o = run(&["allocate"], &dir.path().join("missing.json"), &out);
    assert_eq!(o.status.code(), Some(1));

    // a perfect Eve channel is rejected while the scenario is built
    let perfect = write(
        &dir,
        "perfect.json",
        &FOUR_CHANNELS.replace(r#""transmittances": 0.5"#, r#""transmittances": 1.0"#),
    );
    let o = run(&["allocate"], &perfect, &out);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn numerical_failures_exit_with_three() {
    use amqd_core::cli::CliError;
    use amqd_core::AmqdError;
    assert_eq!(CliError::from(AmqdError::Pole("t = 1".into())).exit_code(), 3);
    assert_eq!(CliError::from(AmqdError::Domain("x".into())).exit_code(), 3);
    assert_eq!(CliError::from(AmqdError::InvalidParameter("x".into())).exit_code(), 2);
}

#[test]
fn shipped_scenarios_run() {
    let dir = TempDir::new().unwrap();
    let scenarios = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    for entry in fs::read_dir(scenarios).unwrap() {
        let cfg = entry.unwrap().path();
        let out = dir.path().join("out.csv");
        let o = run(&["allocate"], &cfg, &out);
        assert!(
            o.status.success(),
            "{}: {}",
            cfg.display(),
            String::from_utf8_lossy(&o.stderr)
        );
    }
}
