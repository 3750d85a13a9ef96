//! End-to-end runs of the proctensor binary: determinism, config
//! precedence, resume safety, and spot recomputation of emitted rows.

use std::path::Path;
use std::process::{Command, Output};

use proctensor_core::haar::SeedSpec;
use proctensor_core::measures::Estimator;
use proctensor_core::process::{
    coarse_grain, draw_unitaries, InitialState, InteractionMode, ProcessSpec,
};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_proctensor"))
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("spawn proctensor");
    assert!(
        out.status.success(),
        "command failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("read {name}: {e}"))
}

#[test]
fn identical_configs_give_byte_identical_csv() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        run_ok(bin()
            .args(["fig4", "--k", "1", "--d-e", "2,4", "--samples", "4", "--master-seed", "11"])
            .arg("--out")
            .arg(dir.path()));
    }
    assert_eq!(read(a.path(), "fig4.csv"), read(b.path(), "fig4.csv"));

    // A completed rerun into the same directory reproduces the same bytes.
    let before = read(a.path(), "fig4.csv");
    run_ok(bin()
        .args(["fig4", "--k", "1", "--d-e", "2,4", "--samples", "4", "--master-seed", "11"])
        .arg("--out")
        .arg(a.path()));
    assert_eq!(read(a.path(), "fig4.csv"), before);
}

#[test]
fn worker_count_does_not_change_results() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for (dir, workers) in [(&a, "1"), (&b, "3")] {
        run_ok(bin()
            .args(["fig4", "--k", "1,2", "--d-e", "2", "--samples", "5", "--workers", workers])
            .arg("--out")
            .arg(dir.path()));
    }
    assert_eq!(read(a.path(), "fig4.csv"), read(b.path(), "fig4.csv"));
}

#[test]
fn config_file_flags_and_env_compose_in_precedence_order() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("campaign.toml");
    std::fs::write(
        &config,
        "[grid]\nk = [1]\nd_e = [2]\nsamples = 3\n\n[run]\nmaster_seed = 21\nworkers = 7\n",
    )
    .unwrap();
    let out = dir.path().join("results");
    run_ok(bin()
        .arg("fig4")
        .arg("--config")
        .arg(&config)
        .args(["--samples", "2"])
        .env("PROCTENSOR_WORKERS", "2")
        .arg("--out")
        .arg(&out));

    let summary: serde_json::Value =
        serde_json::from_str(&read(&out, "fig4_summary.json")).unwrap();
    assert_eq!(summary["config"]["master_seed"], 21, "file fills unflagged keys");
    assert_eq!(summary["config"]["workers"], 2, "env overrides file");
    assert_eq!(summary["series"][0]["points"][0]["samples"], 2, "flag overrides file");
    assert_eq!(summary["schema_version"], 1);

    let rows = read(&out, "fig4.csv");
    assert_eq!(rows.lines().count(), 1 + 2, "header plus one row per sample");
}

#[test]
fn interrupted_runs_are_cleaned_up_on_restart() {
    let dir = tempfile::tempdir().unwrap();
    let stale_manifest = serde_json::json!({
        "schema_version": 1,
        "campaign": "fig4",
        "status": "running",
        "config_digest": "0123456789abcdef",
        "prng_algorithm": "other",
        "outputs": ["stale.csv", "fig4.csv"],
    });
    std::fs::write(dir.path().join("manifest.json"), stale_manifest.to_string()).unwrap();
    std::fs::write(dir.path().join("stale.csv"), "partial junk").unwrap();
    std::fs::write(dir.path().join("fig4.csv"), "partial junk").unwrap();
    std::fs::write(dir.path().join("unrelated.txt"), "keep me").unwrap();

    run_ok(bin()
        .args(["fig4", "--k", "1", "--d-e", "2", "--samples", "2"])
        .arg("--out")
        .arg(dir.path()));

    assert!(!dir.path().join("stale.csv").exists(), "stale listed output removed");
    assert!(dir.path().join("unrelated.txt").exists(), "unlisted files untouched");
    let csv = read(dir.path(), "fig4.csv");
    assert!(csv.starts_with("campaign,"), "fresh CSV written");
    let manifest: serde_json::Value = serde_json::from_str(&read(dir.path(), "manifest.json")).unwrap();
    assert_eq!(manifest["status"], "complete");
}

#[test]
fn purity_scan_matches_the_exact_zero_step_value() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(bin()
        .args(["purity", "scan", "--k", "0", "--d-e", "8", "--samples", "400"])
        .arg("--out")
        .arg(dir.path()));
    let summary: serde_json::Value =
        serde_json::from_str(&read(dir.path(), "purity_summary.json")).unwrap();
    let point = &summary["series"][0]["points"][0];
    let mean = point["mean_purity"].as_f64().unwrap();
    let se = point["se_purity"].as_f64().unwrap();
    let exact = point["purity_closed_form"].as_f64().unwrap();
    assert!((exact - 10.0 / 17.0).abs() < 1e-12);
    assert!((mean - exact).abs() < 5.0 * se, "mean {mean} vs exact {exact} (se {se})");
}

#[test]
fn tail_report_shape_is_complete_and_consistent() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(bin()
        .args(["tail", "--k", "1", "--d-e", "4", "--samples", "100"])
        .args(["--epsilons", "0.2,0.5"])
        .arg("--out")
        .arg(dir.path()));
    let summary: serde_json::Value =
        serde_json::from_str(&read(dir.path(), "tail_summary.json")).unwrap();
    let reports = summary["reports"].as_array().unwrap();
    assert_eq!(reports.len(), 1);
    let r = &reports[0];
    assert_eq!(r["samples"], 100);
    assert_eq!(r["epsilons"].as_array().unwrap().len(), 2);
    assert!(r["passed"].is_boolean());
    for i in 0..2 {
        let frac = r["exceed_fractions"][i].as_f64().unwrap();
        let lo = r["wilson_lower"][i].as_f64().unwrap();
        let hi = r["wilson_upper"][i].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&frac));
        assert!(lo <= frac && frac <= hi);
    }
    let csv = read(dir.path(), "tail.csv");
    assert_eq!(csv.lines().count(), 1 + 100, "one row per sample");
}

#[test]
fn coarse_rows_recompute_from_their_seed() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(bin()
        .args(["coarse", "--k", "2", "--d-e", "8", "--d-s", "2", "--samples", "5"])
        .arg("--out")
        .arg(dir.path()));
    let csv = read(dir.path(), "coarse.csv");
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 5 * 2, "two retained slots per sample at k = 2");

    for row in rows.iter().step_by(2).take(5) {
        let fields: Vec<&str> = row.split(',').collect();
        let k: usize = fields[2].parse().unwrap();
        let d_s: usize = fields[3].parse().unwrap();
        let d_e: usize = fields[4].parse().unwrap();
        let seed: u64 = fields[6].parse().unwrap();
        let retained: usize = fields[7].parse().unwrap();
        let fine_written: f64 = fields[8].parse().unwrap();
        let coarse_written: f64 = fields[9].parse().unwrap();

        let spec = ProcessSpec::new(
            k,
            d_s,
            d_e,
            InteractionMode::Random,
            InitialState::BasisZero,
            SeedSpec::new(seed, 0),
        )
        .unwrap();
        let unitaries = draw_unitaries(&spec).unwrap();
        let fine = proctensor_core::process::build_choi_with_unitaries(&spec, &unitaries).unwrap();
        let coarse = coarse_grain(&spec, &unitaries, &[retained]).unwrap();
        let fine_again = Estimator::MaxMixed.evaluate(&fine).unwrap();
        let coarse_again = Estimator::MaxMixed.evaluate(&coarse).unwrap();
        assert!((fine_again - fine_written).abs() < 1e-12, "row {row}");
        assert!((coarse_again - coarse_written).abs() < 1e-12, "row {row}");
    }
}

#[test]
fn wg_eval_prints_exact_rationals() {
    let out = run_ok(bin().args(["wg", "eval", "--n", "2", "--d", "5"]));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("exact=1/24"), "{text}");
    assert!(text.contains("exact=-1/120"), "{text}");

    let out = run_ok(bin().args(["wg", "eval", "--n", "3", "--d", "6", "--cycle-type", "3"]));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("class=3"), "{text}");

    let bad = bin().args(["wg", "eval", "--n", "3", "--d", "6", "--cycle-type", "2"]).output().unwrap();
    assert!(!bad.status.success(), "mismatched cycle type must be rejected");
}

#[test]
fn bound_eval_reports_the_known_constant() {
    let out = run_ok(bin().args([
        "bound", "eval", "--d-e", "16", "--d-s", "2", "--k", "1", "--mode", "constant",
    ]));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((report["c"].as_f64().unwrap() - 8.0 / 9.0).abs() < 1e-12);
    assert!((report["eta"].as_f64().unwrap() - 3.0).abs() < 1e-12);
    assert!(report["bk"].as_f64().unwrap() > 0.0);

    let random = run_ok(bin().args([
        "bound", "eval", "--d-e", "16", "--d-s", "2", "--k", "1", "--mode", "random",
    ]));
    let report: serde_json::Value = serde_json::from_slice(&random.stdout).unwrap();
    assert!(
        (report["c"].as_f64().unwrap() - 16.0 / 9.0).abs() < 1e-12,
        "independent draws double the exponent at k = 1"
    );
}

#[test]
fn avg_state_purity_agrees_with_its_closed_form() {
    let out = run_ok(bin().args(["purity", "avg-state", "--d-e", "3", "--d-s", "2", "--k", "1"]));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let purity = report["purity"].as_f64().unwrap();
    let closed = report["purity_closed_form"].as_f64().unwrap();
    assert!((purity - closed).abs() < 1e-12);
    assert_eq!(report["dim"], 8);
}
