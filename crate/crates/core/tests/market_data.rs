use proptest::prelude::*;
use trilateral_cds::market_data::{
    build_curve, load_snapshot, parse_snapshot_csv, parse_snapshot_json, CurveKind, CurvePoint, MarketSnapshot,
};
use trilateral_cds::Error;

fn horizon() -> impl Strategy<Value = f64> {
    0.0..12.0f64
}

proptest! {
    #[test]
    fn discount_factors_compose(a in horizon(), b in horizon(), c in horizon()) {
        let mut t = [a, b, c];
        t.sort_by(f64::total_cmp);
        let curve = MarketSnapshot::table1().discount_curve;
        let whole = curve.discount_factor(t[0], t[2]).unwrap();
        let parts = curve.discount_factor(t[0], t[1]).unwrap() * curve.discount_factor(t[1], t[2]).unwrap();
        prop_assert!((whole - parts).abs() <= 1e-14 * whole);
        prop_assert!(whole > 0.0);
    }

    #[test]
    fn parallel_shift_moves_every_term_by_the_shift(t in 0.0..20.0f64, bps in -50.0..400.0f64) {
        let credit = MarketSnapshot::table1().credit_curve.with_extrapolation(true);
        let shifted = credit.shifted(bps);
        let direct = credit.spread_at(t, bps).unwrap();
        prop_assert!((shifted.value_at(t).unwrap() - direct).abs() <= 1e-15);
        prop_assert!((direct - credit.value_at(t).unwrap() - bps * 1e-4).abs() <= 1e-15);
    }

    #[test]
    fn interest_interpolation_stays_between_nodes(t in 0.0..10.0f64) {
        let curve = MarketSnapshot::table1().discount_curve;
        let r = curve.zero_rate(t).unwrap();
        let values: Vec<f64> = curve.points().iter().map(|p| p.value).collect();
        let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(lo <= r && r <= hi);
    }
}

#[test]
fn snapshot_round_trips_through_both_formats() {
    let snap = MarketSnapshot::table1();
    assert_eq!(parse_snapshot_csv(&snap.to_csv()).unwrap(), snap);
    assert_eq!(parse_snapshot_json(&snap.to_json().unwrap()).unwrap(), snap);

    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("market.csv");
    let json = dir.path().join("market.json");
    std::fs::write(&csv, snap.to_csv()).unwrap();
    std::fs::write(&json, snap.to_json().unwrap()).unwrap();
    assert_eq!(load_snapshot(&csv).unwrap(), snap);
    assert_eq!(load_snapshot(&json).unwrap(), snap);
}

#[test]
fn valuation_date_survives_the_round_trip() {
    let text = "# valuation_date=2024-03-15\nkind,term_days,value\n\
                interest,30,0.01\ninterest,365,0.02\n\
                credit,365,0.01\ncredit,1825,0.02\n\
                caplet,365,0.2\ncaplet,730,0.21\n";
    let snap = parse_snapshot_csv(text).unwrap();
    assert_eq!(snap.valuation_date.unwrap().to_string(), "2024-03-15");
    assert_eq!(parse_snapshot_csv(&snap.to_csv()).unwrap(), snap);
}

#[test]
fn negative_rates_are_accepted_with_a_warning() {
    let text = "kind,term_days,value\ninterest,30,-0.002\ninterest,365,0.01\n\
                credit,365,0.01\ncredit,1825,0.02\ncaplet,365,0.2\ncaplet,730,0.2\n";
    let snap = parse_snapshot_csv(text).unwrap();
    assert_eq!(snap.warnings.len(), 1);
    assert!(snap.discount_curve.discount_factor(0.0, 30.0 / 365.0).unwrap() > 1.0);
}

#[test]
fn malformed_inputs_are_rejected() {
    assert!(matches!(
        build_curve(CurveKind::Interest, vec![CurvePoint::new(30, 0.01)]),
        Err(Error::EmptyCurve(1))
    ));
    assert!(matches!(
        build_curve(CurveKind::Interest, vec![CurvePoint::new(365, 0.01), CurvePoint::new(30, 0.01)]),
        Err(Error::NonMonotoneTerms { .. })
    ));
    let missing_caplet = "kind,term_days,value\ninterest,30,0.01\ninterest,365,0.01\ncredit,365,0.01\ncredit,730,0.01\n";
    assert!(matches!(parse_snapshot_csv(missing_caplet), Err(Error::Schema(_))));
    let bad_number = "kind,term_days,value\ninterest,30,abc\n";
    assert!(matches!(parse_snapshot_csv(bad_number), Err(Error::Parse { line: 2, .. })));
    let credit = MarketSnapshot::table1().credit_curve;
    assert!(matches!(credit.discount_factor(0.0, 1.0), Err(Error::WrongCurveKind { .. })));
}

#[test]
fn discount_factor_is_one_over_an_empty_interval() {
    let curve = MarketSnapshot::table1().discount_curve;
    assert_eq!(curve.discount_factor(2.5, 2.5).unwrap(), 1.0);
    assert!(curve.discount_factor(3.0, 2.0).is_err());
}
