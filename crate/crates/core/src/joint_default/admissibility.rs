use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{trivariate_cells, DependenceSpec, PeriodDependence, PeriodMarginals};

/// Bisection tolerance for feasible-interval edges.
pub const BOUND_TOL: f64 = 1e-6;

/// One of the four dependence parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DependenceAxis {
    RhoAB,
    RhoAC,
    RhoBC,
    ZetaABC,
}

impl DependenceAxis {
    pub const ALL: [DependenceAxis; 4] = [
        DependenceAxis::RhoAB,
        DependenceAxis::RhoAC,
        DependenceAxis::RhoBC,
        DependenceAxis::ZetaABC,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DependenceAxis::RhoAB => "rho_ab",
            DependenceAxis::RhoAC => "rho_ac",
            DependenceAxis::RhoBC => "rho_bc",
            DependenceAxis::ZetaABC => "zeta_abc",
        }
    }
}

impl fmt::Display for DependenceAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DependenceAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DependenceAxis::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown dependence axis `{s}`"))
    }
}

/// Feasible range of one axis with the other three held fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisBound {
    pub axis: DependenceAxis,
    /// `None` when no value along the axis gives an admissible distribution.
    pub interval: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub marginals: PeriodMarginals,
    pub spec: DependenceSpec,
    pub admissible: bool,
    pub violating_cells: Vec<(String, f64)>,
    pub bounds: Vec<AxisBound>,
}

/// Checks whether `spec` yields a valid joint distribution for `marginals` and
/// reports, per axis, the feasible interval in `[-1, 1]` holding the other
/// parameters at their values in `spec`.
pub fn admissibility_region(marginals: &PeriodMarginals, spec: &DependenceSpec) -> AdmissibilityReport {
    let admissible_at = |s: &DependenceSpec| {
        trivariate_cells(marginals, &PeriodDependence::from_spec(marginals, s)).is_admissible()
    };
    let dist = trivariate_cells(marginals, &PeriodDependence::from_spec(marginals, spec));
    let bounds = DependenceAxis::ALL
        .into_iter()
        .map(|axis| AxisBound {
            axis,
            interval: feasible_interval(|x| admissible_at(&spec.with(axis, x)), spec.get(axis)),
        })
        .collect();
    AdmissibilityReport {
        marginals: *marginals,
        spec: *spec,
        admissible: dist.is_admissible(),
        violating_cells: dist.violations(),
        bounds,
    }
}

/// Interval of `x ∈ [-1, 1]` where the convex predicate `feasible` holds,
/// located by bisection to [`BOUND_TOL`]. The search is anchored at `hint`
/// when feasible, otherwise at 0. The returned edges are feasible points.
pub fn feasible_interval(feasible: impl Fn(f64) -> bool, hint: f64) -> Option<(f64, f64)> {
    let anchor = if (-1.0..=1.0).contains(&hint) && feasible(hint) {
        hint
    } else if feasible(0.0) {
        0.0
    } else {
        return None;
    };
    let edge = |target: f64| {
        if feasible(target) {
            return target;
        }
        let (mut inside, mut outside) = (anchor, target);
        while (outside - inside).abs() > BOUND_TOL {
            let mid = 0.5 * (inside + outside);
            if feasible(mid) {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        inside
    };
    Some((edge(-1.0), edge(1.0)))
}
