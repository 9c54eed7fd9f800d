use trilateral_cds::experiments::{
    emit_report, parse_report_csv, run_calibration, run_collateral_study, run_figure1, run_table3, run_table4,
    Experiment, ScenarioConfig,
};
use trilateral_cds::hazard::CreditQuality;
use trilateral_cds::joint_default::DependenceAxis;
use trilateral_cds::Error;

fn small(n_paths: usize) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::default();
    cfg.mc.n_paths = n_paths;
    cfg
}

#[test]
fn config_round_trips_through_json_with_a_stable_hash() {
    let cfg = small(1000);
    let json = serde_json::to_string_pretty(&cfg).unwrap();
    let back: ScenarioConfig = serde_json::from_str(&json).unwrap();
    assert_eq!(back, cfg);
    assert_eq!(back.hash(), cfg.hash());
    assert_eq!(cfg.hash().len(), 64);

    let mut other = cfg.clone();
    other.mc.seed += 1;
    assert_ne!(other.hash(), cfg.hash());
    let mut moved = cfg.clone();
    moved.out_dir = "elsewhere".into();
    assert_eq!(moved.hash(), cfg.hash());

    // Missing fields take their defaults; unknown fields are rejected.
    let partial: ScenarioConfig = serde_json::from_str(r#"{"mc": {"n_paths": 1000}}"#).unwrap();
    assert_eq!(partial, cfg);
    assert!(serde_json::from_str::<ScenarioConfig>(r#"{"paths": 10}"#).is_err());

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scenario.json");
    std::fs::write(&path, &json).unwrap();
    assert_eq!(ScenarioConfig::load(&path).unwrap(), cfg);
}

#[test]
fn invalid_configurations_are_rejected() {
    let mut bad_range = small(100);
    bad_range.sweep.min = -1.5;
    assert!(matches!(bad_range.validate(), Err(Error::Schema(_))));

    let mut inverted = small(100);
    inverted.sweep.min = 0.5;
    inverted.sweep.max = 0.0;
    assert!(inverted.validate().is_err());

    let mut no_points = small(100);
    no_points.sweep.points = 0;
    assert!(no_points.validate().is_err());

    let mut bad_rho = small(100);
    bad_rho.collateral.rho_bc = vec![0.0, 1.2];
    assert!(bad_rho.validate().is_err());

    let mut bad_recovery = small(100);
    bad_recovery.contract.recovery.reference = 1.5;
    assert!(bad_recovery.validate().is_err());

    let mut riskfree_reference = small(100);
    riskfree_reference.parties.reference = CreditQuality::RiskFree;
    assert!(riskfree_reference.validate().is_err());

    assert!(small(1).validate().is_err());
}

#[test]
fn sweep_grid_hits_zero_exactly() {
    let grid = ScenarioConfig::default().sweep.grid();
    assert_eq!(grid.len(), 21);
    assert_eq!(grid[0], -1.0);
    assert_eq!(grid[10], 0.0);
    assert_eq!(grid[20], 1.0);
}

#[test]
fn reports_round_trip_through_csv_and_refuse_to_be_empty() {
    let exp = Experiment::new(small(100)).unwrap();
    let report = run_calibration(&exp).unwrap();
    assert_eq!(report.rows.len(), CreditQuality::RISKY.len());
    assert_eq!(report.config_hash, exp.config_hash());

    let parsed = parse_report_csv(&report.name, &report.to_csv().unwrap()).unwrap();
    assert_eq!(parsed.config_hash, report.config_hash);
    assert_eq!(parsed.input_columns, report.input_columns);
    assert_eq!(parsed.value_columns, report.value_columns);
    assert_eq!(parsed.rows, report.rows);

    let dir = tempfile::tempdir().unwrap();
    let written = emit_report(std::slice::from_ref(&report), dir.path()).unwrap();
    assert_eq!(written.len(), 2);
    assert!(written.iter().all(|p| p.exists()));

    let mut empty = report.clone();
    empty.rows.clear();
    assert!(matches!(emit_report(&[empty], dir.path()), Err(Error::EmptyResults(_))));
    assert!(matches!(emit_report(&[], dir.path()), Err(Error::EmptyResults(_))));
}

#[test]
fn quality_tables_have_signed_monotone_deltas_and_reproduce() {
    let exp = Experiment::new(small(4000)).unwrap();
    let t3 = run_table3(&exp).unwrap();
    let t4 = run_table4(&exp).unwrap();
    assert_eq!(t3.points.len(), 5);
    assert_eq!(t3.points[0].delta, 0.0);
    assert_eq!(t3.points[0].breakeven, t4.points[0].breakeven);

    let d3 = t3.deltas();
    let d4 = t4.deltas();
    // A riskier buyer raises the breakeven, a riskier seller lowers it.
    assert!(d3[1..].iter().all(|d| *d > 0.0), "{d3:?}");
    assert!(d4[1..].iter().all(|d| *d < 0.0), "{d4:?}");
    assert!(d3.windows(2).all(|w| w[1] > w[0]), "{d3:?}");
    assert!(d4.windows(2).all(|w| w[1] < w[0]), "{d4:?}");
    assert!(t3.points[1..].iter().all(|p| p.delta_std_error > 0.0 && p.delta_std_error.is_finite()));

    let again = run_table3(&Experiment::new(small(4000)).unwrap()).unwrap();
    assert_eq!(again, t3);

    let report = t3.to_report(exp.config_hash());
    assert_eq!(report.column("delta").unwrap(), d3);
}

#[test]
fn dependence_sweep_clips_to_the_admissible_range_and_records_why() {
    let mut cfg = small(2000);
    cfg.sweep.points = 5;
    let exp = Experiment::new(cfg).unwrap();
    let fig = run_figure1(&exp).unwrap();
    assert_eq!(fig.sweeps.len(), 4);
    assert_eq!(fig.base, fig.requested_base);
    for sweep in &fig.sweeps {
        let (lo, hi) = sweep.interval;
        assert!(lo <= 0.0 && 0.0 <= hi, "{:?}: [{lo}, {hi}]", sweep.axis);
        assert_eq!(sweep.points.len(), 5);
        for p in &sweep.points {
            assert!(lo <= p.used && p.used <= hi);
            assert_eq!(p.clipped, p.used != p.requested);
            if p.used == 0.0 {
                assert_eq!(p.breakeven, fig.base_breakeven);
            }
        }
        let n_clipped = sweep.points.iter().filter(|p| p.clipped).count();
        assert_eq!(sweep.clipped.len(), n_clipped);
        for c in &sweep.clipped {
            assert_eq!(c.axis, sweep.axis);
            assert!(!c.report.bounds.is_empty());
        }
        assert!(sweep.slope_bps.is_finite());
        assert!(sweep.slope_std_error_bps >= 0.0);
    }
    // Stronger dependence with the seller or reference lowers the breakeven.
    for axis in [DependenceAxis::RhoAC, DependenceAxis::RhoBC] {
        assert!(fig.sweep(axis).unwrap().slope_bps < 0.0, "{axis:?}");
    }
    let reports = fig.to_reports(exp.config_hash());
    assert!(!reports.is_empty());
    assert!(reports.iter().all(|r| !r.rows.is_empty() && r.config_hash == exp.config_hash()));
}

#[test]
fn collateral_study_satisfies_the_decomposition() {
    let exp = Experiment::new(small(4000)).unwrap();
    let study = run_collateral_study(&exp).unwrap();
    assert_eq!(study.points.len(), 6);
    assert_eq!(study.degenerate_residual, 0.0);
    for p in &study.points {
        assert!(!p.clipped);
        assert!(p.psi > 0.0 && p.psi <= 1.0);
        assert_eq!(p.residual, p.xi / p.psi);
        assert!((p.value - (p.riskfree_value + p.residual)).abs() <= 1e-12 * p.value.abs().max(1.0));
    }
    let first = &study.points[0];
    assert_eq!(first.rho_bc, 0.0);
    assert_eq!(first.residual, 0.0);
    let last = study.points.last().unwrap();
    assert!(last.residual.abs() > 3.0 * last.residual_std_error, "z = {}", last.z_score());
    assert_eq!(study.to_report(exp.config_hash()).rows.len(), 6);
}
