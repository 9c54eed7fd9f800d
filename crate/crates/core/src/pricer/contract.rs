use serde::{Deserialize, Serialize};

use crate::error::{check_unit_interval, Error, Result};
use crate::schedule::PaymentSchedule;

/// A CDS seen from the protection buyer (A), who pays `spread` to the seller (B).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdsContract {
    pub notional: f64,
    /// Premium per annum as a decimal.
    pub spread: f64,
    pub schedule: PaymentSchedule,
    #[serde(default = "default_buyer")]
    pub buyer: String,
    #[serde(default = "default_seller")]
    pub seller: String,
}

fn default_buyer() -> String {
    "A".into()
}

fn default_seller() -> String {
    "B".into()
}

impl CdsContract {
    pub fn new(notional: f64, spread: f64, schedule: PaymentSchedule) -> Result<Self> {
        let c = Self {
            notional,
            spread,
            schedule,
            buyer: default_buyer(),
            seller: default_seller(),
        };
        c.validate()?;
        Ok(c)
    }

    /// Five-year quarterly contract starting at the valuation date.
    pub fn standard_5y(notional: f64, spread: f64) -> Result<Self> {
        Self::new(notional, spread, PaymentSchedule::regular(0.0, 5.0, 4)?)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.notional > 0.0 && self.notional.is_finite()) {
            return Err(Error::OutOfRange {
                name: "notional".into(),
                value: self.notional,
                range: "(0, inf)".into(),
            });
        }
        if !self.spread.is_finite() {
            return Err(Error::OutOfRange {
                name: "spread".into(),
                value: self.spread,
                range: "finite".into(),
            });
        }
        Ok(())
    }

    pub fn with_spread(&self, spread: f64) -> Self {
        Self {
            spread,
            ..self.clone()
        }
    }

    /// Premium cash flow `X_{j+1} = -s N δ_j` at the end of period `j`.
    pub fn premium_flow(&self, j: usize) -> f64 {
        -self.spread * self.notional * self.schedule.accrual(j)
    }

    /// Accrued premium on default in period `j`: half the full period premium.
    pub fn accrued_on_default(&self, j: usize) -> f64 {
        0.5 * self.spread * self.notional * self.schedule.accrual(j)
    }

    /// Default payment `R = N (1 - φ_C) - α` for a reference default in period `j`.
    pub fn default_payment(&self, j: usize, reference_recovery: f64) -> f64 {
        self.notional * (1.0 - reference_recovery) - self.accrued_on_default(j)
    }
}

/// Close-out convention when a counterparty defaults while the contract has
/// positive value to it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SettlementRule {
    /// The surviving party owes the defaulter nothing.
    OneWay,
    /// The surviving party pays the full market value.
    TwoWay,
}

impl SettlementRule {
    pub fn nondefault_recovery(self) -> f64 {
        match self {
            SettlementRule::OneWay => 0.0,
            SettlementRule::TwoWay => 1.0,
        }
    }
}

/// Recovery rates applied at each period end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecoverySpec {
    /// Fraction of a negative value (owed by A) that B recovers when A defaults.
    pub default_a: f64,
    /// Fraction of a positive value (owed by B) that A recovers when B defaults.
    pub default_b: f64,
    /// Fraction of value owed to a defaulted A that B still pays.
    pub nondefault_a: f64,
    /// Fraction of value owed to a defaulted B that A still pays.
    pub nondefault_b: f64,
    /// Recovery when A and B default together.
    pub joint: f64,
    /// Recovery of the reference entity.
    pub reference: f64,
}

impl Default for RecoverySpec {
    fn default() -> Self {
        Self::new(0.4, 0.4, 0.4, SettlementRule::TwoWay)
    }
}

impl RecoverySpec {
    /// Counterparty recoveries with the joint rate set to their product.
    pub fn new(default_a: f64, default_b: f64, reference: f64, settlement: SettlementRule) -> Self {
        let nondefault = settlement.nondefault_recovery();
        Self {
            default_a,
            default_b,
            nondefault_a: nondefault,
            nondefault_b: nondefault,
            joint: default_a * default_b,
            reference,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_unit_interval("recovery default_a", self.default_a)?;
        check_unit_interval("recovery default_b", self.default_b)?;
        check_unit_interval("recovery nondefault_a", self.nondefault_a)?;
        check_unit_interval("recovery nondefault_b", self.nondefault_b)?;
        check_unit_interval("recovery joint", self.joint)?;
        check_unit_interval("recovery reference", self.reference)
    }
}

/// Collateral threshold `H`: 0 is full collateralization, positive is
/// partial, negative is over-collateralization.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CollateralSpec {
    pub threshold: f64,
}

impl CollateralSpec {
    pub fn full() -> Self {
        Self { threshold: 0.0 }
    }

    /// Only full collateralization has a pricing route.
    pub fn ensure_priceable(&self) -> Result<()> {
        if self.threshold == 0.0 {
            Ok(())
        } else {
            Err(Error::UnsupportedCollateral(self.threshold))
        }
    }

    /// Collateral posted against a mark-to-market value.
    pub fn posted(&self, value: f64) -> f64 {
        if value > self.threshold {
            value - self.threshold
        } else {
            0.0
        }
    }
}
