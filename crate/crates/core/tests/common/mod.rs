//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use trilateral_cds::joint_default::{trivariate_cells, DependenceSpec, PeriodDependence, PeriodMarginals};
use trilateral_cds::pricer::RecoverySpec;

/// Default probabilities, pairwise covariances `(AB, AC, BC)` and third
/// central cross-moment of a joint distribution, recomputed by enumerating
/// the eight outcomes independently of the closed-form cell expressions.
pub fn enumerate_moments(cells: &[f64; 8], m: &PeriodMarginals) -> ([f64; 3], [f64; 3], f64) {
    let q = [m.q_a(), m.q_b(), m.q_c()];
    let mut defaults = [0.0; 3];
    let mut cov = [0.0; 3];
    let mut third = 0.0;
    for k in 0..8 {
        let y = [(k & 1) as f64, ((k >> 1) & 1) as f64, ((k >> 2) & 1) as f64];
        let d = [y[0] - q[0], y[1] - q[1], y[2] - q[2]];
        for i in 0..3 {
            defaults[i] += cells[k] * y[i];
        }
        cov[0] += cells[k] * d[0] * d[1];
        cov[1] += cells[k] * d[0] * d[2];
        cov[2] += cells[k] * d[1] * d[2];
        third += cells[k] * d[0] * d[1] * d[2];
    }
    (defaults, cov, third)
}

/// Halves the dependence until the joint distribution is admissible. The
/// admissible set is convex and contains independence, so this terminates.
pub fn shrink_to_admissible(m: &PeriodMarginals, spec: DependenceSpec) -> DependenceSpec {
    let mut s = spec;
    while !trivariate_cells(m, &PeriodDependence::from_spec(m, &s)).is_admissible() {
        s = DependenceSpec {
            rho_ab: 0.5 * s.rho_ab,
            rho_ac: 0.5 * s.rho_ac,
            rho_bc: 0.5 * s.rho_bc,
            zeta_abc: 0.5 * s.zeta_abc,
        };
    }
    s
}

/// Payoff multiplier of a close-out amount owed to the buyer (`owed_by_seller`)
/// or by the buyer, in each default state of the two counterparties.
pub fn closeout(y_a: usize, y_b: usize, r: &RecoverySpec, owed_by_seller: bool) -> f64 {
    match (y_a, y_b, owed_by_seller) {
        (0, 0, _) => 1.0,
        (1, 1, _) => r.joint,
        // A defaults while owed: the surviving seller pays at its non-default rate.
        (1, 0, true) => r.nondefault_b,
        (0, 1, true) => r.default_b,
        // A defaults while owing: A's default recovery applies.
        (1, 0, false) => r.default_a,
        (0, 1, false) => r.nondefault_a,
        _ => unreachable!(),
    }
}

/// `(owed_by_buyer, owed_by_seller, protection)` as discounted expectations
/// over the eight default states.
pub fn enumerate_factors(cells: &[f64; 8], r: &RecoverySpec, discount: f64) -> (f64, f64, f64) {
    let (mut buyer, mut seller, mut protection) = (0.0, 0.0, 0.0);
    for (k, p) in cells.iter().enumerate() {
        let (y_a, y_b, y_c) = (k & 1, (k >> 1) & 1, (k >> 2) & 1);
        if y_c == 0 {
            buyer += p * closeout(y_a, y_b, r, false);
            seller += p * closeout(y_a, y_b, r, true);
        } else {
            protection += p * closeout(y_a, y_b, r, true);
        }
    }
    (discount * buyer, discount * seller, discount * protection)
}
