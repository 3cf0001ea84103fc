use std::process::Command;

use bvdisp::estimates::Estimate;
use bvdisp_cli::acceptance::{run_criterion, SuiteOptions};
use bvdisp_cli::config::*;
use bvdisp_cli::{error_record, run};

fn bvdisp() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bvdisp"))
}

fn small_resolvent() -> ExperimentConfig {
    ExperimentConfig::new(Experiment::Resolvent(ResolventJob {
        coefficient: CoefficientSpec::Family { n_jumps: 4, tv: 1.0, m: 1.0, lo: -3.0, hi: 3.0 },
        taus: vec![-1.0, 1.0],
        grid: GridSpec { lo: -8.0, hi: 8.0, n: 801 },
        ..ResolventJob::default()
    }))
}

#[test]
fn toml_and_json_round_trip() {
    let mut c = small_resolvent();
    c.seed = 7;
    let toml_text = c.to_toml().unwrap();
    let dir = tempfile::tempdir().unwrap();
    let tp = dir.path().join("c.toml");
    let jp = dir.path().join("c.json");
    std::fs::write(&tp, &toml_text).unwrap();
    std::fs::write(&jp, serde_json::to_string(&c).unwrap()).unwrap();
    let from_toml = ExperimentConfig::load(&tp).unwrap();
    let from_json = ExperimentConfig::load(&jp).unwrap();
    assert_eq!(from_toml, c);
    assert_eq!(from_json, c);
    assert_eq!(from_toml.hash(), c.hash());
}

#[test]
fn hash_tracks_content() {
    let a = small_resolvent();
    let mut b = small_resolvent();
    assert_eq!(a.hash(), b.hash());
    assert_eq!(a.hash().len(), 64);
    b.seed = 1;
    assert_ne!(a.hash(), b.hash());
}

#[test]
fn unknown_fields_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.toml");
    std::fs::write(&p, "seed = 1\ncolour = \"red\"\n[experiment]\nsubcommand = \"accept\"\n").unwrap();
    assert!(ExperimentConfig::load(&p).is_err());
}

#[test]
fn same_config_same_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = small_resolvent();
    c.seed = 3;
    c.output.csv = Some(dir.path().join("a.csv"));
    let first = run(&c).unwrap();
    let bytes = std::fs::read(dir.path().join("a.csv")).unwrap();
    let second = run(&c).unwrap();
    assert_eq!(first.csv, second.csv);
    assert_eq!(bytes, second.csv.as_bytes());
    assert!(first.csv.lines().count() >= 3);
}

#[test]
fn sidecar_carries_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = small_resolvent();
    c.output.csv = Some(dir.path().join("r.csv"));
    c.output.json = Some(dir.path().join("r.json"));
    let out = run(&c).unwrap();
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.csv.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["config_sha256"], c.hash());
    assert_eq!(meta["subcommand"], "resolvent");
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    assert_eq!(report["provenance"]["config_sha256"], out.provenance.config_sha256);
    assert!(report["report"]["rows"].is_array());
}

#[test]
fn family_seed_changes_coefficient() {
    let spec = CoefficientSpec::Family { n_jumps: 6, tv: 2.0, m: 1.0, lo: -4.0, hi: 4.0 };
    assert_eq!(spec.resolve(5).unwrap(), spec.resolve(5).unwrap());
    assert_ne!(spec.resolve(5).unwrap(), spec.resolve(6).unwrap());
}

#[test]
fn endpoint_pair_is_a_structured_error() {
    let c = ExperimentConfig::new(Experiment::Estimate(EstimateJob {
        coefficient: CoefficientSpec::default(),
        estimate: EstimateSpec::Homogeneous { estimate: Estimate::Strichartz { p: 4.0, q: f64::INFINITY, besov: false } },
        packet: Default::default(),
        gaussian: Default::default(),
        source: Default::default(),
    }));
    let e = run(&c).unwrap_err();
    assert_eq!(error_record(&e)["error"]["kind"], "inadmissible_pair");
}

#[test]
fn binary_reports_errors_with_exit_code_two() {
    let out = bvdisp()
        .args(["estimate", "--kind", "strichartz", "--p", "4", "--q", "inf", "--lebesgue"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let record: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(record["error"]["kind"], "inadmissible_pair");
}

#[test]
fn binary_prints_config() {
    let out = bvdisp().args(["--seed", "9", "--print-config", "resolvent", "--tau", "-1,2"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let c: ExperimentConfig = toml::from_str(&text).unwrap();
    assert_eq!(c.seed, 9);
    match c.experiment {
        Experiment::Resolvent(job) => assert_eq!(job.taus, vec![-1.0, 2.0]),
        other => panic!("wrong subcommand {}", other.name()),
    }
}

#[test]
fn binary_runs_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    let csv = dir.path().join("out.csv");
    std::fs::write(&cfg, small_resolvent().to_toml().unwrap()).unwrap();
    let out = bvdisp().arg("--csv").arg(&csv).arg("run").arg(&cfg).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    assert!(std::fs::read_to_string(&csv).unwrap().starts_with("tau"));
    assert!(dir.path().join("out.csv.meta.json").exists());
}

#[test]
fn unknown_criterion_fails_cleanly() {
    let o = run_criterion(13, &SuiteOptions::default());
    assert!(!o.passed);
    assert_eq!(o.quantity, "error");
}

#[test]
fn cheap_criteria_pass_in_quick_mode() {
    let opts = SuiteOptions { quick: true, seed: 0 };
    for id in [1, 2, 7, 11] {
        let o = run_criterion(id, &opts);
        assert!(o.passed, "{}", o.line());
    }
}
