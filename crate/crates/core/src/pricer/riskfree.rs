use serde::{Deserialize, Serialize};

use super::{CdsContract, Diagnostics, PeriodLeg, ValuationResult};
use crate::error::{check_unit_interval, Error, Result};
use crate::hazard::SurvivalModel;
use crate::market_data::Curve;
use crate::schedule::PaymentSchedule;

/// Unit-notional building blocks of a CDS between default-free counterparties.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskFreeLegs {
    /// `P_i (S_{i-1} - S_i)`: discounted default probability of each period.
    pub default_weight: Vec<f64>,
    /// `P_i S_i δ_i`: discounted surviving accrual of each period.
    pub survival_accrual: Vec<f64>,
    /// Period accruals `δ_i`.
    pub accruals: Vec<f64>,
    pub recovery: f64,
}

impl RiskFreeLegs {
    /// `Σ P_i (S_{i-1} - S_i)(1 - φ_C)`.
    pub fn protection_total(&self) -> f64 {
        (1.0 - self.recovery) * self.default_weight.iter().sum::<f64>()
    }

    /// Premium paid per unit spread, including half-period accrual on default.
    pub fn annuity_total(&self) -> f64 {
        self.default_weight
            .iter()
            .zip(&self.survival_accrual)
            .zip(&self.accruals)
            .map(|((w, sa), d)| 0.5 * w * d + sa)
            .sum()
    }

    /// Value per unit notional at `spread`.
    pub fn value(&self, spread: f64) -> f64 {
        self.protection_total() - spread * self.annuity_total()
    }

    pub fn breakeven(&self) -> Result<f64> {
        let annuity = self.annuity_total();
        if !(annuity > 0.0) {
            return Err(Error::NoRoot(format!("premium annuity {annuity} is not positive")));
        }
        Ok(self.protection_total() / annuity)
    }
}

/// Legs from survival probabilities at every schedule date
/// (`survival[0]` at the schedule start, which is also the valuation date).
pub fn riskfree_legs(
    survival: &[f64],
    discount: &Curve,
    recovery: f64,
    schedule: &PaymentSchedule,
) -> Result<RiskFreeLegs> {
    check_unit_interval("reference recovery", recovery)?;
    let dates = schedule.dates();
    if survival.len() != dates.len() {
        return Err(Error::GridMismatch(format!(
            "{} survival probabilities for {} schedule dates",
            survival.len(),
            dates.len()
        )));
    }
    let t0 = schedule.start();
    let periods = schedule.periods();
    let mut default_weight = Vec::with_capacity(periods);
    let mut survival_accrual = Vec::with_capacity(periods);
    for i in 1..dates.len() {
        let df = discount.discount_factor(t0, dates[i])?;
        default_weight.push(df * (survival[i - 1] - survival[i]));
        survival_accrual.push(df * survival[i] * (dates[i] - dates[i - 1]));
    }
    Ok(RiskFreeLegs {
        default_weight,
        survival_accrual,
        accruals: schedule.accruals(),
        recovery,
    })
}

/// Closed-form value of a CDS whose counterparties cannot default.
pub fn price_riskfree(
    contract: &CdsContract,
    survival: &SurvivalModel,
    discount: &Curve,
    reference_recovery: f64,
) -> Result<ValuationResult> {
    contract.validate()?;
    let probs = survival.survival_at_dates(&contract.schedule)?;
    let legs = riskfree_legs(&probs, discount, reference_recovery, &contract.schedule)?;
    let dates = contract.schedule.dates();
    let period_legs: Vec<PeriodLeg> = (0..contract.schedule.periods())
        .map(|j| PeriodLeg {
            period: j,
            start: dates[j],
            end: dates[j + 1],
            premium: -contract.spread * contract.notional * legs.survival_accrual[j],
            protection: legs.default_weight[j] * contract.default_payment(j, reference_recovery),
        })
        .collect();
    Ok(ValuationResult {
        value: contract.notional * legs.value(contract.spread),
        std_error: 0.0,
        breakeven_spread: legs.breakeven().ok(),
        breakeven_std_error: Some(0.0),
        legs: period_legs,
        collateral: None,
        diagnostics: Diagnostics::closed_form(),
        path_values: Vec::new(),
        path_annuity: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market_data::{build_curve, CurveKind, CurvePoint};

    fn flat(rate: f64) -> Curve {
        build_curve(
            CurveKind::Interest,
            vec![CurvePoint::new(1, rate), CurvePoint::new(36500, rate)],
        )
        .unwrap()
    }

    #[test]
    fn zero_hazard_is_pure_premium() {
        let c = CdsContract::standard_5y(1e6, 0.01).unwrap();
        let disc = flat(0.03);
        let v = price_riskfree(&c, &SurvivalModel::FlatHazard(0.0), &disc, 0.4).unwrap();
        let expect: f64 = (1..=20)
            .map(|i| -(-0.03 * 0.25 * i as f64).exp() * 0.01 * 1e6 * 0.25)
            .sum();
        assert!((v.value - expect).abs() < 1e-8);
        assert_eq!(v.breakeven_spread, Some(0.0));
    }

    #[test]
    fn legs_sum_to_value() {
        let c = CdsContract::standard_5y(1e6, 0.02).unwrap();
        let v = price_riskfree(&c, &SurvivalModel::FlatHazard(0.03), &flat(0.02), 0.4).unwrap();
        let total: f64 = v.legs.iter().map(|l| l.premium + l.protection).sum();
        assert!((total - v.value).abs() < 1e-8);
    }
}
