//! Stochastic hazard rates: CIR dynamics, path simulation, survival
//! probabilities and calibration to breakeven spread curves.

mod calibration;
mod cir;
mod paths;

pub use calibration::{
    calibrate_cir, riskfree_breakeven_spread, CalibrationConfig, CirBounds, CirCalibration,
    InitialHazard, NodeFit,
};
pub use cir::CirParams;
pub use paths::{simulate_paths, trapezoid_survival, HazardPathSet, SimulationOptions};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schedule::PaymentSchedule;

/// Credit quality of a party: risk-free, or the A-rated spread curve plus a
/// parallel shift.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CreditQuality {
    RiskFree,
    A,
    APlus100,
    APlus200,
    APlus300,
}

impl CreditQuality {
    pub const RISKY: [CreditQuality; 4] = [
        CreditQuality::A,
        CreditQuality::APlus100,
        CreditQuality::APlus200,
        CreditQuality::APlus300,
    ];

    /// Parallel shift over the base credit curve, `None` for risk-free.
    pub fn shift_bps(self) -> Option<f64> {
        match self {
            CreditQuality::RiskFree => None,
            CreditQuality::A => Some(0.0),
            CreditQuality::APlus100 => Some(100.0),
            CreditQuality::APlus200 => Some(200.0),
            CreditQuality::APlus300 => Some(300.0),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            CreditQuality::RiskFree => "riskfree",
            CreditQuality::A => "A",
            CreditQuality::APlus100 => "A+100bps",
            CreditQuality::APlus200 => "A+200bps",
            CreditQuality::APlus300 => "A+300bps",
        }
    }
}

impl fmt::Display for CreditQuality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for CreditQuality {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s.trim().to_ascii_lowercase().replace(' ', "");
        Ok(match norm.as_str() {
            "riskfree" | "risk-free" | "-" | "none" => CreditQuality::RiskFree,
            "a" => CreditQuality::A,
            "a+100bps" | "a+100" => CreditQuality::APlus100,
            "a+200bps" | "a+200" => CreditQuality::APlus200,
            "a+300bps" | "a+300" => CreditQuality::APlus300,
            _ => {
                return Err(Error::Schema(format!(
                    "unknown credit quality `{s}` (expected riskfree, A, A+100bps, A+200bps, A+300bps)"
                )))
            }
        })
    }
}

impl Serialize for CreditQuality {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.label())
    }
}

impl<'de> Deserialize<'de> for CreditQuality {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Deterministic survival term structure used by the closed-form pricer.
#[derive(Debug, Clone, PartialEq)]
pub enum SurvivalModel {
    /// `E[exp(-∫h)]` under CIR, affine closed form.
    Cir(CirParams),
    FlatHazard(f64),
    /// Survival probabilities `p̄(t, T_i)` at every schedule date, `T_0` first.
    Explicit(Vec<f64>),
}

impl SurvivalModel {
    /// Survival probabilities from the schedule start to each schedule date.
    pub fn survival_at_dates(&self, schedule: &PaymentSchedule) -> Result<Vec<f64>> {
        let t0 = schedule.start();
        match self {
            SurvivalModel::Cir(p) => {
                p.validate()?;
                let base = p.survival(t0);
                Ok(schedule.dates().iter().map(|&t| p.survival(t) / base).collect())
            }
            SurvivalModel::FlatHazard(h) => {
                if !(*h >= 0.0) {
                    return Err(Error::InvalidParams(format!("hazard {h} must be >= 0")));
                }
                Ok(schedule.dates().iter().map(|&t| (-h * (t - t0)).exp()).collect())
            }
            SurvivalModel::Explicit(v) => {
                if v.len() != schedule.dates().len() {
                    return Err(Error::GridMismatch(format!(
                        "{} survival probabilities for {} schedule dates",
                        v.len(),
                        schedule.dates().len()
                    )));
                }
                if v.iter().any(|p| !(0.0..=1.0).contains(p)) {
                    return Err(Error::OutOfRange {
                        name: "survival probability".into(),
                        value: v.iter().copied().find(|p| !(0.0..=1.0).contains(p)).unwrap(),
                        range: "[0, 1]".into(),
                    });
                }
                Ok(v.clone())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quality_labels_round_trip() {
        for q in [
            CreditQuality::RiskFree,
            CreditQuality::A,
            CreditQuality::APlus100,
            CreditQuality::APlus200,
            CreditQuality::APlus300,
        ] {
            assert_eq!(q.label().parse::<CreditQuality>().unwrap(), q);
        }
        assert!("BBB".parse::<CreditQuality>().is_err());
        assert_eq!(CreditQuality::APlus200.shift_bps(), Some(200.0));
    }
}
