use serde::{Deserialize, Serialize};

use super::RecoverySpec;
use crate::error::Result;
use crate::joint_default::{trivariate_joint, PeriodDependence, PeriodMarginals};

/// Risk-adjusted discount factors for one period on one path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskyPeriodFactors {
    /// Applied to the end-of-period value when it is negative for the buyer
    /// (the buyer owes, so the buyer's default recovery applies).
    pub owed_by_buyer: f64,
    /// Applied when the end-of-period value is non-negative for the buyer.
    pub owed_by_seller: f64,
    /// Discounts the default payment on a reference-entity default.
    pub protection: f64,
}

impl RiskyPeriodFactors {
    /// Premium-leg factor chosen by the sign of the end-of-period value.
    #[inline]
    pub fn premium(&self, end_value: f64) -> f64 {
        if end_value >= 0.0 {
            self.owed_by_seller
        } else {
            self.owed_by_buyer
        }
    }
}

/// Expands the expected close-out payoffs against the joint default
/// distribution, without checking admissibility.
pub fn period_factors_unchecked(
    m: &PeriodMarginals,
    d: &PeriodDependence,
    r: &RecoverySpec,
    discount: f64,
) -> RiskyPeriodFactors {
    let (pa, pb, pc) = (m.p_a, m.p_b, m.p_c);
    let (qa, qb, qc) = (m.q_a(), m.q_b(), m.q_c());
    let (s_ab, s_ac, s_bc, th) = (d.sigma_ab, d.sigma_ac, d.sigma_bc, d.theta_abc);
    let (ra, rb, nra, nrb, rab) = (r.default_a, r.default_b, r.nondefault_a, r.nondefault_b, r.joint);

    let owed_by_buyer = pa * pb * pc
        + qa * pb * pc * ra
        + pa * qb * pc * nra
        + qa * qb * pc * rab
        + pc * s_ab * (1.0 - ra - nra + rab)
        + s_ac * (pb * (1.0 - ra) + qb * (nra - rab))
        + s_bc * (pa * (1.0 - nra) + qa * (ra - rab))
        + th * (-1.0 + nra - rab + ra);

    let owed_by_seller = pa * pb * pc
        + qa * pb * pc * nrb
        + pa * qb * pc * rb
        + qa * qb * pc * rab
        + pc * s_ab * (1.0 - rb - nrb + rab)
        + s_ac * (pb * (1.0 - nrb) + qb * (rb - rab))
        + s_bc * (pa * (1.0 - rb) + qa * (nrb - rab))
        + th * (-1.0 + nrb - rab + rb);

    let protection = pa * pb * qc
        + qa * pb * qc * nrb
        + pa * qb * qc * rb
        + qa * qb * qc * rab
        + qc * s_ab * (1.0 - rb - nrb + rab)
        - s_ac * (pb * (1.0 - nrb) + qb * (rb - rab))
        - s_bc * (pa * (1.0 - rb) + qa * (nrb - rab))
        + th * (1.0 - nrb + rab - rb);

    RiskyPeriodFactors {
        owed_by_buyer: owed_by_buyer * discount,
        owed_by_seller: owed_by_seller * discount,
        protection: protection * discount,
    }
}

/// Period factors after confirming the joint distribution is admissible.
pub fn period_factors(
    m: &PeriodMarginals,
    d: &PeriodDependence,
    r: &RecoverySpec,
    discount: f64,
) -> Result<RiskyPeriodFactors> {
    trivariate_joint(m, d)?;
    Ok(period_factors_unchecked(m, d, r, discount))
}
