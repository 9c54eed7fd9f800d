use serde::{Deserialize, Serialize};

use super::{CirParams, SurvivalModel};
use crate::error::{Error, Result};
use crate::market_data::{Curve, CurveKind};
use crate::optim::nelder_mead;
use crate::pricer::riskfree_legs;
use crate::schedule::PaymentSchedule;

/// Breakeven spread of a CDS with default-free counterparties: the premium
/// equating the premium leg (with half-period accrued on default) and the
/// protection leg.
pub fn riskfree_breakeven_spread(
    survival: &SurvivalModel,
    discount: &Curve,
    recovery: f64,
    schedule: &PaymentSchedule,
) -> Result<f64> {
    let survival = survival.survival_at_dates(schedule)?;
    let legs = riskfree_legs(&survival, discount, recovery, schedule)?;
    legs.breakeven()
}

/// How the initial hazard `h0` is chosen during calibration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialHazard {
    /// Fitted jointly with `(a, b, σ)`.
    Fitted,
    /// `h0 = b`.
    LongTermMean,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CirBounds {
    pub mean_reversion: (f64, f64),
    pub long_term_mean: (f64, f64),
    pub volatility: (f64, f64),
    pub initial: (f64, f64),
}

impl Default for CirBounds {
    fn default() -> Self {
        Self {
            mean_reversion: (0.01, 2.0),
            long_term_mean: (1e-4, 0.5),
            volatility: (1e-4, 0.5),
            initial: (1e-5, 0.5),
        }
    }
}

impl CirBounds {
    fn validate(&self) -> Result<()> {
        for (name, (lo, hi)) in [
            ("mean_reversion", self.mean_reversion),
            ("long_term_mean", self.long_term_mean),
            ("volatility", self.volatility),
            ("initial", self.initial),
        ] {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidBounds(format!("{name}: [{lo}, {hi}]")));
            }
        }
        if self.mean_reversion.0 <= 0.0 || self.long_term_mean.0 <= 0.0 || self.volatility.0 < 0.0 {
            return Err(Error::InvalidBounds(
                "mean reversion and long-term mean must be positive, volatility non-negative".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CalibrationConfig {
    /// Reference-entity recovery used inside the breakeven formula.
    pub recovery: f64,
    /// Premium payments per year on each calibration instrument.
    pub frequency: u32,
    pub initial: InitialHazard,
    pub bounds: CirBounds,
    /// Keep `2ab >= σ²` so the hazard stays away from zero.
    pub enforce_feller: bool,
    /// Fail when the root-mean-square spread error exceeds this.
    pub max_rmse: f64,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            recovery: 0.4,
            frequency: 4,
            initial: InitialHazard::Fitted,
            bounds: CirBounds::default(),
            enforce_feller: true,
            max_rmse: 5e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeFit {
    pub term_days: u32,
    pub target: f64,
    pub model: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CirCalibration {
    pub params: CirParams,
    /// Sum of squared spread errors.
    pub objective: f64,
    pub rmse: f64,
    pub nodes: Vec<NodeFit>,
}

fn squash(u: f64, (lo, hi): (f64, f64)) -> f64 {
    lo + (hi - lo) / (1.0 + (-u).exp())
}

fn unsquash(x: f64, (lo, hi): (f64, f64)) -> f64 {
    let w = ((x - lo) / (hi - lo)).clamp(1e-6, 1.0 - 1e-6);
    (w / (1.0 - w)).ln()
}

const FELLER_FRACTION: (f64, f64) = (1e-3, 0.999);

struct Problem<'a> {
    cfg: &'a CalibrationConfig,
    discount: &'a Curve,
    nodes: Vec<(u32, f64, PaymentSchedule)>,
}

impl Problem<'_> {
    fn decode(&self, u: &[f64]) -> CirParams {
        let b = &self.cfg.bounds;
        let a = squash(u[0], b.mean_reversion);
        let mean = squash(u[1], b.long_term_mean);
        let vol = if self.cfg.enforce_feller {
            (squash(u[2], FELLER_FRACTION) * (2.0 * a * mean).sqrt())
                .clamp(b.volatility.0, b.volatility.1)
        } else {
            squash(u[2], b.volatility)
        };
        let initial = match self.cfg.initial {
            InitialHazard::Fitted => squash(u[3], b.initial),
            InitialHazard::LongTermMean => mean,
            InitialHazard::Fixed(h) => h,
        };
        CirParams {
            mean_reversion: a,
            long_term_mean: mean,
            volatility: vol,
            initial,
        }
    }

    fn model_spreads(&self, p: &CirParams) -> Result<Vec<f64>> {
        let model = SurvivalModel::Cir(*p);
        self.nodes
            .iter()
            .map(|(_, _, sched)| {
                riskfree_breakeven_spread(&model, self.discount, self.cfg.recovery, sched)
            })
            .collect()
    }

    fn objective(&self, p: &CirParams) -> f64 {
        match self.model_spreads(p) {
            Ok(s) => s
                .iter()
                .zip(&self.nodes)
                .map(|(m, (_, target, _))| (m - target).powi(2))
                .sum(),
            Err(_) => f64::INFINITY,
        }
    }
}

/// Least-squares fit of CIR parameters to the breakeven spreads of a credit
/// curve, shifted in parallel by `shift_bps`.
pub fn calibrate_cir(
    credit_curve: &Curve,
    shift_bps: f64,
    discount: &Curve,
    cfg: &CalibrationConfig,
) -> Result<CirCalibration> {
    if credit_curve.kind() != CurveKind::CreditSpread {
        return Err(Error::WrongCurveKind {
            expected: CurveKind::CreditSpread.to_string(),
            found: credit_curve.kind().to_string(),
        });
    }
    if credit_curve.points().len() < 3 {
        return Err(Error::Schema("calibration needs at least 3 curve nodes".into()));
    }
    cfg.bounds.validate()?;
    if let InitialHazard::Fixed(h) = cfg.initial {
        if !(h >= 0.0) {
            return Err(Error::InvalidBounds(format!("fixed initial hazard {h}")));
        }
    }
    let nodes = credit_curve
        .points()
        .iter()
        .zip(credit_curve.terms())
        .map(|(p, &t)| {
            Ok((
                p.term_days,
                p.value + shift_bps * 1e-4,
                PaymentSchedule::regular(0.0, t, cfg.frequency)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let problem = Problem { cfg, discount, nodes };

    let lgd = 1.0 - cfg.recovery;
    let first = problem.nodes[0].1 / lgd;
    let last = problem.nodes[problem.nodes.len() - 1].1 / lgd;
    let b = &cfg.bounds;
    let clampb = |x: f64, (lo, hi): (f64, f64)| x.clamp(lo, hi);

    let mut best: Option<(Vec<f64>, f64)> = None;
    for &speed in &[0.1, 0.4, 1.0] {
        for &vol_frac in &[0.2, 0.6] {
            let mean_guess = clampb(last * 1.2, b.long_term_mean);
            let u0 = vec![
                unsquash(clampb(speed, b.mean_reversion), b.mean_reversion),
                unsquash(mean_guess, b.long_term_mean),
                if cfg.enforce_feller {
                    unsquash(vol_frac, FELLER_FRACTION)
                } else {
                    unsquash(clampb(vol_frac * 0.1, b.volatility), b.volatility)
                },
                unsquash(clampb(first, b.initial), b.initial),
            ];
            let dims = if cfg.initial == InitialHazard::Fitted { 4 } else { 3 };
            let f = |u: &[f64]| {
                let mut full = u0.clone();
                full[..dims].copy_from_slice(u);
                problem.objective(&problem.decode(&full))
            };
            let mut x = u0[..dims].to_vec();
            let mut value = f64::INFINITY;
            // Restart the simplex a few times to escape premature collapse.
            for _ in 0..4 {
                let m = nelder_mead(&f, &x, &vec![0.7; dims], 1e-14, 4000);
                let improved = m.value < value * (1.0 - 1e-9);
                x = m.x;
                value = m.value;
                if !improved {
                    break;
                }
            }
            let mut full = u0.clone();
            full[..dims].copy_from_slice(&x);
            if best.as_ref().is_none_or(|(_, v)| value < *v) {
                best = Some((full, value));
            }
        }
    }
    let (u, objective) = best.expect("at least one start");
    let params = problem.decode(&u);
    let spreads = problem.model_spreads(&params)?;
    let nodes: Vec<NodeFit> = problem
        .nodes
        .iter()
        .zip(&spreads)
        .map(|((days, target, _), &model)| NodeFit {
            term_days: *days,
            target: *target,
            model,
        })
        .collect();
    let rmse = (objective / nodes.len() as f64).sqrt();
    if !(rmse <= cfg.max_rmse) {
        return Err(Error::CalibrationFailed {
            objective,
            threshold: cfg.max_rmse * cfg.max_rmse * nodes.len() as f64,
        });
    }
    Ok(CirCalibration {
        params,
        objective,
        rmse,
        nodes,
    })
}
