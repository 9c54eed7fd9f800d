use serde::{Deserialize, Serialize};

use super::CreditQuality;
use crate::error::{Error, Result};

/// Parameters of `dh = a (b - h) dt + σ sqrt(h) dW`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CirParams {
    /// Mean-reversion speed `a` (per year).
    pub mean_reversion: f64,
    /// Long-term mean hazard level `b`.
    pub long_term_mean: f64,
    pub volatility: f64,
    /// Hazard rate at the valuation date.
    pub initial: f64,
}

impl CirParams {
    pub fn new(mean_reversion: f64, long_term_mean: f64, volatility: f64, initial: f64) -> Result<Self> {
        let p = Self {
            mean_reversion,
            long_term_mean,
            volatility,
            initial,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        if !(self.mean_reversion > 0.0 && self.mean_reversion.is_finite()) {
            return bad(format!("mean reversion {} must be > 0", self.mean_reversion));
        }
        if !(self.long_term_mean > 0.0 && self.long_term_mean.is_finite()) {
            return bad(format!("long-term mean {} must be > 0", self.long_term_mean));
        }
        if !(self.volatility >= 0.0 && self.volatility.is_finite()) {
            return bad(format!("volatility {} must be >= 0", self.volatility));
        }
        if !(self.initial >= 0.0 && self.initial.is_finite()) {
            return bad(format!("initial hazard {} must be >= 0", self.initial));
        }
        Ok(())
    }

    /// Published risk-neutral parameters per credit quality; the initial
    /// hazard is set to the long-term mean.
    ///
    /// Row labels are taken as authoritative: long-term mean first, then
    /// mean-reversion speed.
    pub fn published(quality: CreditQuality) -> Option<CirParams> {
        let (mean, speed, vol) = match quality {
            CreditQuality::RiskFree => return None,
            CreditQuality::A => (0.035, 0.14, 0.022),
            CreditQuality::APlus100 => (0.056, 0.18, 0.028),
            CreditQuality::APlus200 => (0.077, 0.25, 0.039),
            CreditQuality::APlus300 => (0.099, 0.36, 0.056),
        };
        Some(CirParams {
            mean_reversion: speed,
            long_term_mean: mean,
            volatility: vol,
            initial: mean,
        })
    }

    pub fn satisfies_feller(&self) -> bool {
        2.0 * self.mean_reversion * self.long_term_mean >= self.volatility * self.volatility
    }

    /// `E[h(t)] = b + (h0 - b) e^{-a t}`.
    pub fn expected_hazard(&self, t: f64) -> f64 {
        self.long_term_mean + (self.initial - self.long_term_mean) * (-self.mean_reversion * t).exp()
    }

    /// `∫_0^t E[h(u)] du`, the integrated hazard of the deterministic skeleton.
    pub fn integrated_mean_hazard(&self, t: f64) -> f64 {
        let a = self.mean_reversion;
        self.long_term_mean * t + (self.initial - self.long_term_mean) * (-(-a * t).exp_m1()) / a
    }

    /// Survival probability `E[exp(-∫_0^t h du)]` from the affine bond-price formula.
    pub fn survival(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 1.0;
        }
        let (a, b, s, h0) = (
            self.mean_reversion,
            self.long_term_mean,
            self.volatility,
            self.initial,
        );
        if s < 1e-7 {
            return (-self.integrated_mean_hazard(t)).exp();
        }
        let gamma = (a * a + 2.0 * s * s).sqrt();
        let growth = (gamma * t).exp_m1();
        let denom = (gamma + a) * growth + 2.0 * gamma;
        let b_term = 2.0 * growth / denom;
        // ln(2γ) + (a+γ)t/2 - ln(denom), rewritten in terms of γ - a so the
        // bracket keeps its precision when σ is small.
        let eps = 2.0 * s * s / (gamma + a);
        let bracket = (eps / (gamma + a)).ln_1p()
            - (eps * (-gamma * t).exp() / (gamma + a)).ln_1p()
            - 0.5 * eps * t;
        let log_a_term = (2.0 * a * b / (s * s)) * bracket;
        (log_a_term - b_term * h0).exp()
    }
}
