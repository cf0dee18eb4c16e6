use std::fs;

use cvwitness::harness::{self, report, run_experiment, ExperimentConfig, ExperimentKind, RunRecord, RECORDS_FILE, SUMMARY_FILE};
use cvwitness::witness::WitnessAnalysis;
use serde_json::Value;

fn small(kind: &str, extra: &str) -> ExperimentConfig {
    let text = format!(
        r#"{{"experiment": "{kind}", "num_modes": 2, "cutoff": 5, "orders": [1, 2],
            "sample_count": 12, "seed": 9 {extra}}}"#
    );
    ExperimentConfig::from_json(&text).unwrap()
}

fn strip_wall_time(line: &str) -> Value {
    let mut v: Value = serde_json::from_str(line).unwrap();
    v.as_object_mut().unwrap().remove("wall_time_s");
    v
}

#[test]
fn runs_are_reproducible_across_thread_counts() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let mut cfg = small("full_insep_scan", "");
    cfg.threads = Some(1);
    run_experiment(&cfg, Some(a.path())).unwrap();
    cfg.threads = Some(3);
    run_experiment(&cfg, Some(b.path())).unwrap();
    let la = fs::read_to_string(a.path().join(RECORDS_FILE)).unwrap();
    let lb = fs::read_to_string(b.path().join(RECORDS_FILE)).unwrap();
    assert_eq!(la.lines().count(), 12);
    for (x, y) in la.lines().zip(lb.lines()) {
        assert_eq!(strip_wall_time(x), strip_wall_time(y));
    }
    assert_eq!(
        fs::read_to_string(a.path().join(SUMMARY_FILE)).unwrap(),
        fs::read_to_string(b.path().join(SUMMARY_FILE)).unwrap()
    );
}

#[test]
fn summary_rates_are_means_of_record_flags() {
    let cfg = small("baseline_compare", r#", "van_loock_relabel": true"#);
    let out = run_experiment(&cfg, None).unwrap();
    assert_eq!(out.degenerate_cells, 0);
    let criteria: Vec<&str> = out.summary.iter().map(|r| r.criterion.as_str()).collect();
    assert_eq!(criteria, ["qfi_order_1", "qfi_order_2", "van_loock", "van_loock_best", "ppt"]);
    for row in &out.summary {
        let flags: Vec<bool> = out
            .records
            .iter()
            .map(|r| r.flags().into_iter().find(|(k, _)| *k == row.criterion).unwrap().1)
            .collect();
        let mean = flags.iter().filter(|&&f| f).count() as f64 / flags.len() as f64;
        assert_eq!(row.rate, Some(mean));
        assert_eq!(row.n, 12);
        assert!(row.std.is_some());
    }
}

#[test]
fn ladder_monotonicity_holds_per_record() {
    let cfg = small("full_insep_scan", "");
    for rec in run_experiment(&cfg, None).unwrap().records {
        let g: Vec<f64> = rec.certificates.iter().map(|c| c.g).collect();
        assert!(g[1] >= g[0] - 1e-9, "{g:?}");
    }
}

#[test]
fn stored_specs_regenerate_witness_values() {
    let cfg = small("loss_sweep", r#", "loss_grid": [0.8]"#);
    let out = run_experiment(&cfg, None).unwrap();
    for rec in out.records.iter().take(4) {
        let rho = rec.state.as_ref().unwrap().build(cfg.generation.leakage_tol).unwrap();
        let certs = WitnessAnalysis::new(&rho, 2).unwrap().certify_orders(&rec.certificates[0].structure, &[1, 2], &cfg.witness).unwrap();
        for (a, b) in certs.iter().zip(&rec.certificates) {
            assert!((a.g - b.g).abs() < 1e-10);
        }
    }
}

#[test]
fn empty_run_is_a_vacuous_success() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small("full_insep_scan", "");
    cfg.sample_count = 0;
    let out = run_experiment(&cfg, Some(dir.path())).unwrap();
    assert!(out.records.is_empty() && out.summary.is_empty());
    let csv = fs::read_to_string(dir.path().join(SUMMARY_FILE)).unwrap();
    assert_eq!(csv.lines().count(), 1);
}

#[test]
fn generation_failures_mark_cells_degenerate() {
    let cfg = small("full_insep_scan", r#", "generation": {"max_resamples": 1, "leakage_tol": 1e-300}"#);
    let out = run_experiment(&cfg, None).unwrap();
    assert_eq!(out.degenerate_cells, 1);
    assert!(out.exceeds(&cfg));
    assert!(out.records.iter().all(|r| r.error.is_some() && r.state.is_none()));
    assert!(out.summary[0].degenerate && out.summary[0].n == 0 && out.summary[0].failures == 12);
}

#[test]
fn report_writes_headers_and_skips_corrupt_lines() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.jsonl");
    fs::write(&empty, "").unwrap();
    let o = report(&empty, &dir.path().join("e"), 10).unwrap();
    assert_eq!((o.records, o.skipped), (0, 0));
    let rates = fs::read_to_string(dir.path().join("e/rates.csv")).unwrap();
    let scatter = fs::read_to_string(dir.path().join("e/scatter.csv")).unwrap();
    assert!(rates.starts_with("experiment,cell,") && rates.lines().count() == 1);
    assert_eq!(scatter.trim(), "experiment,cell,index,criterion,value,detected");

    let run = dir.path().join("run");
    let mut cfg = small("full_insep_scan", "");
    cfg.sample_count = 10;
    run_experiment(&cfg, Some(&run)).unwrap();
    let mut text = fs::read_to_string(run.join(RECORDS_FILE)).unwrap();
    text.push_str("{not json\n");
    fs::write(run.join(RECORDS_FILE), text).unwrap();
    let o = report(&run.join(RECORDS_FILE), &dir.path().join("r"), 10).unwrap();
    assert_eq!((o.records, o.skipped), (10, 1));
    assert_eq!(o.scatter.len(), 10 * 4);
    let row = o.rates.iter().find(|r| r.criterion == "qfi_order_2").unwrap();
    // Ten records in ten splits: the batch std is the sample std of the flags.
    let p = row.rate.unwrap();
    let expected = (10.0 * p * (1.0 - p) / 9.0).sqrt();
    assert!((row.std.unwrap() - expected).abs() < 1e-12);
}

#[test]
fn cells_follow_the_experiment() {
    let cfg = ExperimentConfig::from_json(
        r#"{"experiment": "structure_scan", "num_modes": 4, "cutoff": 3, "orders": [1], "sample_count": 1, "seed": 0}"#,
    )
    .unwrap();
    let labels: Vec<String> = harness::cells(&cfg).unwrap().into_iter().map(|c| c.label).collect();
    assert_eq!(labels, ["(4)", "(3,1)", "(2,2)", "(2,1,1)"]);
    let cfg = small("loss_sweep", r#", "loss_grid": [1.0, 0.5]"#);
    let cells = harness::cells(&cfg).unwrap();
    assert_eq!(cells.iter().map(|c| c.eta).collect::<Vec<_>>(), [Some(1.0), Some(0.5)]);
    assert_eq!(cfg.experiment, ExperimentKind::LossSweep);
}

#[test]
fn invalid_configs_are_rejected() {
    let cases = [
        r#"{"experiment": "full_insep_scan", "num_modes": 2, "cutoff": 4, "orders": [1], "sample_count": 1, "seed": 0, "bogus": 1}"#,
        r#"{"experiment": "full_insep_scan", "num_modes": 2, "cutoff": 4, "orders": [5], "sample_count": 1, "seed": 0}"#,
        r#"{"experiment": "full_insep_scan", "num_modes": 2, "cutoff": 4, "orders": [2, 1], "sample_count": 1, "seed": 0}"#,
        r#"{"experiment": "spdc_scan", "num_modes": 2, "cutoff": 4, "orders": [1], "sample_count": 1, "seed": 0}"#,
        r#"{"experiment": "loss_sweep", "num_modes": 2, "cutoff": 4, "orders": [1], "sample_count": 1, "seed": 0}"#,
        r#"{"experiment": "loss_sweep", "num_modes": 2, "cutoff": 4, "orders": [1], "sample_count": 1, "seed": 0, "loss_grid": [1.5]}"#,
        r#"{"experiment": "full_insep_scan", "num_modes": 5, "cutoff": 6, "orders": [1], "sample_count": 1, "seed": 0}"#,
        r#"{"experiment": "full_insep_scan", "num_modes": 3, "cutoff": 4, "orders": [1], "sample_count": 1, "seed": 0, "structures": [[[0, 1]]]}"#,
        r#"{"experiment": "nope", "num_modes": 2, "cutoff": 4, "orders": [1], "sample_count": 1, "seed": 0}"#,
    ];
    for text in cases {
        assert!(matches!(ExperimentConfig::from_json(text), Err(cvwitness::Error::Config(_))), "{text}");
    }
}

#[test]
fn records_round_trip_through_json() {
    let cfg = ExperimentConfig::from_json(
        r#"{"experiment": "spdc_scan", "num_modes": 3, "cutoff": 5, "orders": [1], "sample_count": 2, "seed": 4}"#,
    )
    .unwrap();
    let out = run_experiment(&cfg, None).unwrap();
    for rec in &out.records {
        let back: RunRecord = serde_json::from_str(&serde_json::to_string(rec).unwrap()).unwrap();
        assert_eq!(&back, rec);
        assert_eq!(rec.config_hash, cfg.hash());
    }
}
