use std::path::Path;
use std::process::Command;

use smplab_core::format::{instance_to_json, parse_instance, parse_report, Report};

fn smplab(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_smplab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn report_at(path: &Path) -> Report {
    parse_report(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn value(report: &Report, name: &str) -> f64 {
    report.records.iter().find(|r| r.name == name).unwrap().value
}

#[test]
fn gap_submodular_reaches_pinned_ratios() {
    let dir = tempfile::tempdir().unwrap();
    for (eps, threshold) in [("0.05", 1.75), ("0.02", 1.88), ("0.01", 1.9)] {
        let out = dir.path().join(format!("gap-{eps}.json"));
        let status = smplab(&["gap-submodular", "--eps", eps, "--out", out.to_str().unwrap()]);
        assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
        let report = report_at(&out);
        assert!(report.passed);
        assert!(value(&report, "ratio") >= threshold);
        assert!(value(&report, "alg_opt(0)") < 1.0);
        assert!(out.with_extension("csv").exists());
    }
}

#[test]
fn gap_kext_default_parameters() {
    let out = smplab(&["gap-kext", "--k", "3"]);
    assert!(out.status.success());
    let report = parse_report(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(report.params["w"], "81");
    assert_eq!(report.params["p"], "1/27");
    let bound = report
        .records
        .iter()
        .find(|r| r.name == "non-adaptive bound 1+kp")
        .unwrap();
    assert_eq!(bound.exact.as_deref(), Some("10/9"));
    assert!(value(&report, "adaptive k(1-(1-p)^w)") >= 2.85);
    assert!(value(&report, "ratio") >= 2.5);
}

#[test]
fn gap_kext_explicit_tree_matches_formula() {
    let out = smplab(&["gap-kext", "--k", "2", "--w", "3", "--p", "1/4", "--min-ratio", "0.5"]);
    assert!(out.status.success());
    let report = parse_report(&String::from_utf8(out.stdout).unwrap()).unwrap();
    // 2(1 - (3/4)^3) = 74/64
    let explicit = report.records.iter().find(|r| r.name == "adap(fan descent)").unwrap();
    assert_eq!(explicit.pass, Some(true));
    assert!((explicit.value - 74.0 / 64.0).abs() < 1e-12);
}

#[test]
fn violated_bound_gives_status_one_and_names_it() {
    let out = smplab(&["gap-submodular", "--eps", "1/2", "--min-ratio", "1.5"]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("adap(0)/alg_opt(0) >= 1.5"), "{stderr}");
}

#[test]
fn reports_are_reproducible_without_timings() {
    let dir = tempfile::tempdir().unwrap();
    let mut reports = Vec::new();
    for run in 0..2 {
        let out = dir.path().join(format!("mc{run}.json"));
        let status = smplab(&[
            "gap-submodular",
            "--eps",
            "1/2",
            "--mode",
            "mc",
            "--trials",
            "3000",
            "--seed",
            "9",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(status.status.success());
        reports.push(report_at(&out).without_timings().to_json());
    }
    assert_eq!(reports[0], reports[1]);
}

#[test]
fn generate_then_eval_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("lb.json");
    let status = smplab(&[
        "generate",
        "--kind",
        "submodular-lb",
        "--eps",
        "1/2",
        "--out",
        file.to_str().unwrap(),
    ]);
    assert!(status.status.success());
    let text = std::fs::read_to_string(&file).unwrap();
    assert_eq!(instance_to_json(&parse_instance(&text).unwrap()), text);
    let out = smplab(&["eval", file.to_str().unwrap(), "--what", "adap"]);
    let report = parse_report(&String::from_utf8(out.stdout).unwrap()).unwrap();
    // adap(0) at eps = 1/2 is 41/32
    assert_eq!(report.records[0].exact.as_deref(), Some("41/32"));
}

#[test]
fn truncated_instance_is_a_named_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("cut.json");
    let full = smplab(&["generate", "--kind", "random", "--seed", "2"]).stdout;
    std::fs::write(&file, &full[..full.len() / 2]).unwrap();
    let out = smplab(&["eval", file.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("parse error"));
}

#[test]
fn unknown_valuation_kind_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("odd.json");
    let text = String::from_utf8(smplab(&["generate", "--kind", "random", "--seed", "5"]).stdout).unwrap();
    let mut doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    doc["valuation"]["kind"] = "supermodular_thing".into();
    std::fs::write(&file, doc.to_string()).unwrap();
    let out = smplab(&["eval", file.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(
        stderr.contains("unknown valuation kind `supermodular_thing`"),
        "{stderr}"
    );
}

#[test]
fn verify_suite_counts_every_verifier() {
    let out = smplab(&["verify-suite", "--cases", "24", "--seed", "1"]);
    assert!(out.status.success());
    let report = parse_report(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(report.records.len(), 9);
    assert!(report.records.iter().all(|r| r.value == 24.0 && r.pass == Some(true)));
}

#[test]
fn reduce_weighted_checks_both_bounds() {
    for seed in ["0", "1", "2"] {
        let out = smplab(&["reduce-weighted", "--k", "2", "--seed", seed]);
        assert!(out.status.success());
        let report = parse_report(&String::from_utf8(out.stdout).unwrap()).unwrap();
        assert_eq!(report.records.iter().filter(|r| r.pass == Some(true)).count(), 2);
        assert!(report.details.contains_key("buckets"));
    }
}

#[test]
fn matroid_encoding_k3_passes() {
    let out = smplab(&["gap-matroid-encoding", "--k", "3", "--cases", "2000"]);
    assert!(out.status.success());
}

#[test]
fn composite_k_is_rejected() {
    let out = smplab(&["gap-matroid-encoding", "--k", "4"]);
    assert_eq!(out.status.code(), Some(2));
}
