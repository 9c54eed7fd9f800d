//! CDS valuation under trilateral default risk: closed-form pricing with
//! default-free counterparties, regression Monte Carlo with risky
//! counterparties, the fully collateralized decomposition, and breakeven
//! spread solving.

mod breakeven;
mod collateral;
mod contract;
mod factors;
mod regression;
mod riskfree;
mod trilateral;

pub use breakeven::breakeven_spread;
pub use collateral::{price_collateralized, CollateralModel};
pub use contract::{CdsContract, CollateralSpec, RecoverySpec, SettlementRule};
pub use factors::{period_factors, period_factors_unchecked, RiskyPeriodFactors};
pub use regression::{monomial_exponents, regression_continuation, ContinuationFit};
pub use riskfree::{price_riskfree, riskfree_legs, RiskFreeLegs};
pub use trilateral::{
    price_trilateral, MarginalGrid, ScenarioPaths, TrilateralModel, BUYER_STREAM, REFERENCE_STREAM,
    SELLER_STREAM,
};

pub(crate) use regression::chunked_sum;

use serde::{Deserialize, Serialize};

/// Monte Carlo settings shared by the simulation-based pricers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct McConfig {
    pub n_paths: usize,
    pub seed: u64,
    pub substeps_per_year: f64,
    pub antithetic: bool,
    /// Total degree of the monomial basis used for continuation values.
    pub regression_degree: u32,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            n_paths: 200_000,
            seed: 42,
            substeps_per_year: 52.0,
            antithetic: true,
            regression_degree: 2,
        }
    }
}

/// Discounted contribution of one period to each leg, averaged over paths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodLeg {
    pub period: usize,
    pub start: f64,
    pub end: f64,
    /// Premium payment at the period end (negative for the buyer).
    pub premium: f64,
    /// Default payment net of accrued premium.
    pub protection: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionDiagnostic {
    /// Index of the date whose state the continuation value is regressed on.
    pub date: usize,
    pub requested_degree: u32,
    pub used_degree: u32,
    pub r_squared: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub method: String,
    pub n_paths: usize,
    pub seed: Option<u64>,
    pub antithetic: bool,
    pub regressions: Vec<RegressionDiagnostic>,
}

impl Diagnostics {
    pub(crate) fn closed_form() -> Self {
        Self {
            method: "closed-form".into(),
            n_paths: 0,
            seed: None,
            antithetic: false,
            regressions: Vec::new(),
        }
    }

    /// Dates where the regression fell back to a lower degree.
    pub fn fallbacks(&self) -> impl Iterator<Item = &RegressionDiagnostic> {
        self.regressions.iter().filter(|r| r.used_degree < r.requested_degree)
    }
}

/// Components of the fully collateralized value `V = V^F + ξ / ψ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollateralDecomposition {
    /// Value if both counterparties were default-free over the first period.
    pub riskfree_value: f64,
    pub riskfree_std_error: f64,
    /// Expected joint survival of the two counterparties over the first period.
    pub psi: f64,
    /// Expected dependence-weighted gap between market value and default payment.
    pub xi: f64,
    /// `ξ / ψ`, the exposure left after full collateralization.
    pub residual: f64,
    pub residual_std_error: f64,
    /// Counterparty-risk-free value on the same paths over every period.
    pub counterparty_riskfree_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValuationResult {
    /// Value to the protection buyer.
    pub value: f64,
    pub std_error: f64,
    pub breakeven_spread: Option<f64>,
    pub breakeven_std_error: Option<f64>,
    pub legs: Vec<PeriodLeg>,
    pub collateral: Option<CollateralDecomposition>,
    pub diagnostics: Diagnostics,
    /// Per-path contributions whose mean is `value`; paired differences
    /// across scenarios on common paths give low-variance deltas.
    #[serde(skip)]
    pub path_values: Vec<f64>,
    /// Per-path `-∂V/∂s` at fixed exercise decisions.
    #[serde(skip)]
    pub path_annuity: Vec<f64>,
}

impl ValuationResult {
    /// Per-path influence of the breakeven estimate `mean(V_i(s*)) / mean(annuity_i)`.
    pub fn breakeven_influence(&self) -> Option<Vec<f64>> {
        if self.path_values.is_empty() || self.path_values.len() != self.path_annuity.len() {
            return None;
        }
        let annuity = chunked_sum(&self.path_annuity) / self.path_annuity.len() as f64;
        if !(annuity > 0.0) {
            return None;
        }
        Some(self.path_values.iter().map(|v| v / annuity).collect())
    }
}

/// Sample mean and its standard error. With antithetic sampling, paths
/// `2k` and `2k + 1` are averaged first so the error reflects the pairing.
pub fn mean_and_std_error(values: &[f64], antithetic: bool) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = chunked_sum(values) / n as f64;
    let units: Vec<f64> = if antithetic && n % 2 == 0 {
        values.chunks(2).map(|c| 0.5 * (c[0] + c[1])).collect()
    } else {
        values.to_vec()
    };
    let k = units.len();
    if k < 2 {
        return (mean, 0.0);
    }
    let unit_mean = chunked_sum(&units) / k as f64;
    let ss = regression::chunked_sum_by(&units, |u| (u - unit_mean) * (u - unit_mean));
    (mean, (ss / (k - 1) as f64 / k as f64).sqrt())
}

/// Standard error of the mean of paired differences `a_i - b_i`.
pub fn paired_std_error(a: &[f64], b: &[f64], antithetic: bool) -> Option<f64> {
    if a.len() != b.len() || a.is_empty() {
        return None;
    }
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    Some(mean_and_std_error(&diff, antithetic).1)
}
