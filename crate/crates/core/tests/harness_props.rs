//! Scenario-runner properties at toy scale: reproducibility of seeded runs,
//! report shape invariants, and the qualitative behavior each scenario is
//! built to exhibit. Shapes are kept tiny so the whole file runs in seconds;
//! the full desk-scale runs live in the acceptance suite.

use lowrank::harness::{
    parse_config, run_scenario, ConstraintFamily, NoiseKind, Scenario, ScenarioConfig,
    write_report_json, write_rows_csv,
};

fn small(scenario: Scenario) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::defaults_for(scenario);
    cfg.n = 10;
    cfg.m = 10;
    cfg.r = 1;
    cfg.s_grid = vec![25, 50, 100];
    cfg.trials = 2;
    cfg.iterations = 250;
    cfg.seed = 0xa11ce;
    cfg
}

#[test]
fn identical_configs_give_identical_reports() {
    let cfg = small(Scenario::ScalingL1);
    let first = run_scenario(&cfg).unwrap();
    let second = run_scenario(&cfg).unwrap();

    assert_eq!(first.rows.len(), second.rows.len());
    for (a, b) in first.rows.iter().zip(&second.rows) {
        assert_eq!(a, b, "seeded rows must match bitwise");
    }
    assert_eq!(first.aggregates, second.aggregates);
    assert_eq!(first.assertions, second.assertions);
    assert_eq!(first.slope, second.slope);

    // A different seed moves the numbers.
    let mut other = cfg.clone();
    other.seed ^= 1;
    let third = run_scenario(&other).unwrap();
    assert_ne!(
        first.rows.iter().map(|r| r.value.to_bits()).collect::<Vec<_>>(),
        third.rows.iter().map(|r| r.value.to_bits()).collect::<Vec<_>>()
    );
}

#[test]
fn report_rows_cover_the_grid_in_sorted_order() {
    let cfg = small(Scenario::ScalingL1);
    let report = run_scenario(&cfg).unwrap();

    assert_eq!(
        report.rows.len() + report.estimator_failures,
        cfg.s_grid.len() * cfg.trials,
        "one metric row per (s, trial) minus recorded failures"
    );
    let keys: Vec<(usize, usize)> = report.rows.iter().map(|r| (r.s, r.trial)).collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
    assert!(report.rows.iter().all(|r| r.metric == "excess_l1"));
    assert!(report.rows.iter().all(|r| r.scenario == "scaling-l1"));

    // Aggregates carry the primary metric at every grid size.
    for &s in &cfg.s_grid {
        assert!(
            report
                .aggregates
                .iter()
                .any(|a| a.metric == "excess_l1" && a.s == s),
            "missing aggregate at s = {s}"
        );
    }
    assert!(report.wall_time_secs > 0.0);
    assert!(!report.claim.is_empty());
    assert!(report.constraint_used.contains("max"));
}

#[test]
fn report_files_round_trip_through_disk() {
    let cfg = small(Scenario::ScalingL1);
    let report = run_scenario(&cfg).unwrap();
    let dir = std::env::temp_dir().join("lowrank-harness-io");
    std::fs::create_dir_all(&dir).unwrap();

    let csv_path = dir.join("rows.csv");
    write_rows_csv(&report.rows, &csv_path).unwrap();
    let text = std::fs::read_to_string(&csv_path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("scenario,n,m,r,s,trial,metric,value,seed"));
    assert_eq!(lines.count(), report.rows.len());

    let json_path = dir.join("report.json");
    write_report_json(&report, &json_path).unwrap();
    let parsed: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json_path).unwrap()).unwrap();
    assert_eq!(parsed["config"]["scenario"], "scaling-l1");
    assert_eq!(parsed["config"]["n"], 10);
    assert_eq!(
        parsed["rows"].as_array().unwrap().len(),
        report.rows.len()
    );
    assert!(parsed["assertions"].as_array().unwrap().len() >= 1);

    std::fs::remove_file(&csv_path).ok();
    std::fs::remove_file(&json_path).ok();
}

#[test]
fn config_file_text_drives_the_runner() {
    let cfg = parse_config(
        "scenario = scaling-l2   # noiseless squared-loss run\n\
         n = 8\nm = 8\nr = 1\ns_grid = 32,64,128\ntrials = 2\n\
         iterations = 250\nseed = 99\n",
    )
    .unwrap();
    assert_eq!(cfg.noise, NoiseKind::None);
    let report = run_scenario(&cfg).unwrap();
    assert!(report.rows.iter().all(|r| r.metric == "excess_l2"));
    // Noiseless squared-loss excess is nonnegative up to solver slack and
    // shrinks as coverage grows.
    let mean_at = |s: usize| {
        report
            .aggregates
            .iter()
            .find(|a| a.metric == "excess_l2" && a.s == s)
            .unwrap()
            .mean
    };
    assert!(mean_at(32) > -1e-6);
    assert!(mean_at(128) > -1e-6);
    assert!(
        mean_at(128) < mean_at(32),
        "noiseless excess must shrink with coverage: {} vs {}",
        mean_at(128),
        mean_at(32)
    );
}

#[test]
fn recovery_scenario_runs_both_arms_and_echoes_the_cap() {
    let mut cfg = small(Scenario::RecoveryIndNoise);
    cfg.noise = NoiseKind::Gaussian;
    cfg.sigma = 0.3;
    cfg.s_grid = vec![50, 100, 200];
    let report = run_scenario(&cfg).unwrap();

    assert!(report.rows.iter().all(|r| r.metric == "mse_to_m"));
    // The without-replacement arm exists exactly where s ≤ nm = 100.
    let wo_sizes: Vec<usize> = report
        .aggregates
        .iter()
        .filter(|a| a.metric == "mse_to_m_wo")
        .map(|a| a.s)
        .collect();
    assert_eq!(wo_sizes, vec![50, 100]);
    assert!(report
        .appendix
        .iter()
        .any(|line| line.contains("cap") && line.contains("K = 2")));
    assert!(report
        .appendix
        .iter()
        .any(|line| line.contains("with-replacement arm only")));
    assert!(report.all_assertions_passed(), "assertions: {:?}", report.assertions);

    // Adversarial noise is not an independent-noise model.
    let mut bad = cfg.clone();
    bad.noise = NoiseKind::Adversarial;
    let err = run_scenario(&bad).unwrap_err();
    assert!(err.to_string().contains("independent zero-mean noise"));
}

#[test]
fn spiky_scenario_stays_at_the_information_floor() {
    let mut cfg = ScenarioConfig::defaults_for(Scenario::SpikyCounterexample);
    cfg.n = 12;
    cfg.m = 12;
    cfg.r = 2;
    cfg.s_grid = vec![72];
    cfg.trials = 3;
    cfg.iterations = 400;
    cfg.seed = 0x5f1;
    let report = run_scenario(&cfg).unwrap();

    let floor = report
        .aggregates
        .iter()
        .find(|a| a.metric == "mse_full" && a.s == 72)
        .unwrap();
    assert!(
        floor.mean >= 0.4,
        "spiky reconstruction error {} fell below the floor",
        floor.mean
    );
    assert!(report.all_assertions_passed());
    // The split diagnostics exist and show where the error lives.
    let unobs = report
        .aggregates
        .iter()
        .find(|a| a.metric == "mse_unobserved_per_entry")
        .unwrap();
    let obs = report
        .aggregates
        .iter()
        .find(|a| a.metric == "mse_observed_per_entry")
        .unwrap();
    assert!(unobs.mean > obs.mean, "error must concentrate on unseen entries");

    // Noisy observations are out of scope for this construction.
    let mut bad = cfg.clone();
    bad.noise = NoiseKind::Gaussian;
    bad.sigma = 0.1;
    assert!(run_scenario(&bad).is_err());
}

#[test]
fn replacement_compare_links_the_exact_reduction() {
    let mut cfg = ScenarioConfig::defaults_for(Scenario::ReplacementCompare);
    cfg.n = 8;
    cfg.m = 8;
    cfg.r = 1;
    cfg.s_grid = vec![16, 32, 64];
    cfg.trials = 2;
    cfg.iterations = 250;
    cfg.sigma = 0.2;
    cfg.seed = 0xbeef;
    let report = run_scenario(&cfg).unwrap();

    assert!(report.rows.iter().all(|r| r.metric == "error_diff_wo_minus_w"));
    for metric in ["error_with", "error_without"] {
        assert!(report.aggregates.iter().any(|a| a.metric == metric));
    }
    let exact = report
        .assertions
        .iter()
        .find(|a| a.name == "exact_tiny_universe_reduction")
        .expect("exact check must be linked");
    assert!(exact.passed);
    assert!(report
        .appendix
        .iter()
        .any(|line| line.contains("E_wo") && line.contains("exceedance")));
}

#[test]
fn box_variant_reports_the_paired_comparison() {
    let mut cfg = small(Scenario::ScalingL2);
    cfg.constraint = ConstraintFamily::MaxBox;
    cfg.s_grid = vec![30, 60, 120];
    let report = run_scenario(&cfg).unwrap();
    for metric in ["excess_l2", "excess_l2_unboxed", "excess_l2_box_minus_unboxed"] {
        assert!(
            report.aggregates.iter().any(|a| a.metric == metric),
            "missing {metric}"
        );
    }
    assert!(report
        .assertions
        .iter()
        .any(|a| a.name == "box_no_worse_within_2se"));
    assert!(report.constraint_used.contains("entry box"));
}

#[test]
fn oversized_noise_fails_the_magnitude_precondition() {
    let mut cfg = small(Scenario::ScalingL2);
    cfg.noise = NoiseKind::Gaussian;
    cfg.sigma = 50.0;
    let err = run_scenario(&cfg).unwrap_err();
    assert!(err.to_string().contains("noise magnitude precondition failed"));

    // The same amplitude is fine for the L1 scenario, which assumes nothing
    // about the perturbation.
    cfg.scenario = Scenario::ScalingL1;
    cfg.sigma = 2.0;
    run_scenario(&cfg).unwrap();
}

#[test]
fn strict_mode_adds_success_frequencies() {
    let mut cfg = small(Scenario::ScalingL2);
    cfg.strict_noise_check = true;
    cfg.success_threshold = 10.0; // generous: every trial counts as a success
    let report = run_scenario(&cfg).unwrap();
    let freqs: Vec<&lowrank::harness::AggregateRow> = report
        .aggregates
        .iter()
        .filter(|a| a.metric == "excess_l2_success_freq")
        .collect();
    assert_eq!(freqs.len(), cfg.s_grid.len());
    assert!(freqs.iter().all(|a| a.mean == 1.0));
}
