use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Premium dates `T_0 < T_1 < … < T_m` as year fractions from valuation.
///
/// `T_0` is the start of the first accrual period; cash flows fall on
/// `T_1..=T_m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaymentSchedule {
    dates: Vec<f64>,
}

impl PaymentSchedule {
    pub fn new(dates: Vec<f64>) -> Result<Self> {
        if dates.len() < 2 {
            return Err(Error::GridMismatch(format!(
                "schedule needs a start date and at least one payment, got {} dates",
                dates.len()
            )));
        }
        if dates[0] < 0.0 || dates.iter().any(|d| !d.is_finite()) {
            return Err(Error::GridMismatch("schedule dates must be finite and >= 0".into()));
        }
        if dates.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::GridMismatch("schedule dates must be strictly increasing".into()));
        }
        Ok(Self { dates })
    }

    /// Evenly spaced payments from `start` to `maturity` at `frequency` per year;
    /// the period count is rounded to the nearest integer (at least one).
    pub fn regular(start: f64, maturity: f64, frequency: u32) -> Result<Self> {
        if frequency == 0 || maturity <= start {
            return Err(Error::GridMismatch(format!(
                "cannot build a schedule from {start} to {maturity} at frequency {frequency}"
            )));
        }
        let periods = (((maturity - start) * f64::from(frequency)).round() as usize).max(1);
        let width = (maturity - start) / periods as f64;
        let mut dates: Vec<f64> = (0..=periods).map(|i| start + width * i as f64).collect();
        dates[periods] = maturity;
        Self::new(dates)
    }

    pub fn dates(&self) -> &[f64] {
        &self.dates
    }

    /// Number of payment periods `m`.
    pub fn periods(&self) -> usize {
        self.dates.len() - 1
    }

    pub fn start(&self) -> f64 {
        self.dates[0]
    }

    pub fn maturity(&self) -> f64 {
        self.dates[self.dates.len() - 1]
    }

    /// Accrual fraction `δ(T_{j}, T_{j+1})` of period `j` (0-based).
    pub fn accrual(&self, j: usize) -> f64 {
        self.dates[j + 1] - self.dates[j]
    }

    pub fn accruals(&self) -> Vec<f64> {
        self.dates.windows(2).map(|w| w[1] - w[0]).collect()
    }
}
