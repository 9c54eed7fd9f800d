use std::sync::Arc;

use rayon::prelude::*;

use super::regression::{chunked_sum, regression_continuation};
use super::{
    breakeven_spread, mean_and_std_error, period_factors_unchecked, CdsContract, Diagnostics,
    McConfig, PeriodLeg, RecoverySpec, RegressionDiagnostic, RiskyPeriodFactors, ValuationResult,
};
use crate::error::{Error, Result};
use crate::hazard::{simulate_paths, CirParams, HazardPathSet, SimulationOptions};
use crate::joint_default::{
    trivariate_cells, DependenceAxis, DependenceSpec, PeriodDependence, PeriodMarginals,
    ADMISSIBILITY_TOL,
};
use crate::market_data::Curve;
use crate::schedule::PaymentSchedule;

const CHUNK: usize = 4096;

/// Random stream per role. Streams follow the role, not the credit
/// quality, so swapping a party's quality re-uses its Brownian drivers.
pub const BUYER_STREAM: u64 = 1;
pub const SELLER_STREAM: u64 = 2;
pub const REFERENCE_STREAM: u64 = 3;

/// Hazard paths for buyer (A), seller (B) and reference entity (C) on a
/// common grid; `None` marks a default-free counterparty.
#[derive(Debug, Clone)]
pub struct ScenarioPaths {
    pub buyer: Option<Arc<HazardPathSet>>,
    pub seller: Option<Arc<HazardPathSet>>,
    pub reference: Arc<HazardPathSet>,
}

impl ScenarioPaths {
    /// Simulates each risky party on its own role stream.
    pub fn simulate(
        buyer: Option<&CirParams>,
        seller: Option<&CirParams>,
        reference: &CirParams,
        schedule: &PaymentSchedule,
        cfg: &McConfig,
    ) -> Result<Self> {
        let sim = |p: &CirParams, stream: u64| {
            let opts = SimulationOptions {
                substeps_per_year: cfg.substeps_per_year,
                antithetic: cfg.antithetic,
                stream,
            };
            simulate_paths(p, schedule.dates(), cfg.n_paths, cfg.seed, &opts).map(Arc::new)
        };
        Ok(Self {
            buyer: buyer.map(|p| sim(p, BUYER_STREAM)).transpose()?,
            seller: seller.map(|p| sim(p, SELLER_STREAM)).transpose()?,
            reference: sim(reference, REFERENCE_STREAM)?,
        })
    }

    pub fn n_paths(&self) -> usize {
        self.reference.n_paths()
    }

    fn check(&self, schedule: &PaymentSchedule) -> Result<()> {
        let n = self.n_paths();
        for (role, set) in [("buyer", &self.buyer), ("seller", &self.seller)] {
            if let Some(s) = set {
                if s.n_paths() != n {
                    return Err(Error::GridMismatch(format!(
                        "{role} has {} paths, reference has {n}",
                        s.n_paths()
                    )));
                }
                s.check_grid(schedule.dates())?;
            }
        }
        self.reference.check_grid(schedule.dates())
    }

    /// Hazard columns at grid date `k` for the stochastic entities.
    fn state_at(&self, k: usize) -> Vec<Vec<f64>> {
        [&self.buyer, &self.seller, &Some(self.reference.clone())]
            .into_iter()
            .flatten()
            .map(|set| (0..set.n_paths()).map(|i| set.hazard(i, k)).collect())
            .collect()
    }
}

fn survival(set: Option<&HazardPathSet>, path: usize, j: usize) -> f64 {
    set.map_or(1.0, |s| (-s.integrated_hazard(path, j)).exp())
}

/// Period survival probabilities of A, B and C on every path and period,
/// stored period-major.
#[derive(Debug, Clone)]
pub struct MarginalGrid {
    n_paths: usize,
    periods: usize,
    cells: Vec<PeriodMarginals>,
}

impl MarginalGrid {
    pub fn from_paths(paths: &ScenarioPaths) -> Self {
        let n = paths.n_paths();
        let m = paths.reference.periods();
        let mut cells = vec![PeriodMarginals { p_a: 1.0, p_b: 1.0, p_c: 1.0 }; n * m];
        cells.par_chunks_mut(n).enumerate().for_each(|(j, row)| {
            for (i, c) in row.iter_mut().enumerate() {
                *c = PeriodMarginals {
                    p_a: survival(paths.buyer.as_deref(), i, j),
                    p_b: survival(paths.seller.as_deref(), i, j),
                    p_c: survival(Some(&paths.reference), i, j),
                };
            }
        });
        Self { n_paths: n, periods: m, cells }
    }

    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    pub fn periods(&self) -> usize {
        self.periods
    }

    pub fn get(&self, path: usize, period: usize) -> &PeriodMarginals {
        &self.cells[period * self.n_paths + path]
    }

    pub fn iter(&self) -> impl Iterator<Item = &PeriodMarginals> {
        self.cells.iter()
    }

    /// Path-period with the most negative joint cell under `spec`, if any
    /// cell falls outside `[0, 1]`.
    pub fn worst_violation(&self, spec: &DependenceSpec) -> Option<(usize, usize, Vec<(String, f64)>)> {
        let worst = self
            .cells
            .par_iter()
            .enumerate()
            .filter_map(|(idx, m)| {
                let dist = trivariate_cells(m, &PeriodDependence::from_spec(m, spec));
                let low = dist.cells.iter().copied().fold(f64::INFINITY, f64::min);
                let high = dist.cells.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let excess = (-low).max(high - 1.0);
                (excess > ADMISSIBILITY_TOL).then_some((excess, idx))
            })
            .max_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)))?;
        let idx = worst.1;
        let m = &self.cells[idx];
        let cells = trivariate_cells(m, &PeriodDependence::from_spec(m, spec)).violations();
        Some((idx % self.n_paths, idx / self.n_paths, cells))
    }

    pub fn is_admissible(&self, spec: &DependenceSpec) -> bool {
        self.worst_violation(spec).is_none()
    }

    /// Values of `axis` (others held at `base`) keeping every path-period's
    /// joint distribution inside `[0, 1]`, intersected with `[-1, 1]`.
    ///
    /// Each cell is affine in a single dependence parameter, so the
    /// admissible set is an exact intersection of half-lines.
    pub fn feasible_interval(&self, base: &DependenceSpec, axis: DependenceAxis) -> Option<(f64, f64)> {
        let at0 = base.with(axis, 0.0);
        let at1 = base.with(axis, 1.0);
        let (lo, hi) = self
            .cells
            .par_chunks(CHUNK)
            .map(|chunk| {
                let mut lo = -1.0_f64;
                let mut hi = 1.0_f64;
                for m in chunk {
                    let c0 = trivariate_cells(m, &PeriodDependence::from_spec(m, &at0)).cells;
                    let c1 = trivariate_cells(m, &PeriodDependence::from_spec(m, &at1)).cells;
                    for k in 0..8 {
                        let slope = c1[k] - c0[k];
                        // c0 + slope x >= 0 and c0 + slope x <= 1; the exact
                        // bounds leave the admissibility tolerance as headroom
                        // for rounding at the interval ends.
                        for (bound, sign) in [(-c0[k], 1.0), (1.0 - c0[k], -1.0)] {
                            let s = sign * slope;
                            let b = sign * bound;
                            if s > 0.0 {
                                lo = lo.max(b / s);
                            } else if s < 0.0 {
                                hi = hi.min(b / s);
                            } else if b > 0.0 {
                                lo = f64::INFINITY;
                            }
                        }
                    }
                }
                (lo, hi)
            })
            .collect::<Vec<_>>()
            .into_iter()
            .fold((-1.0_f64, 1.0_f64), |(l, h), (a, b)| (l.max(a), h.min(b)));
        (lo <= hi).then_some((lo, hi))
    }
}

/// Risky period factors on every path, ready for repeated valuation at
/// different spreads on the same paths.
pub struct TrilateralModel {
    contract: CdsContract,
    paths: ScenarioPaths,
    recovery: RecoverySpec,
    cfg: McConfig,
    /// Period-major `[owed_by_buyer, owed_by_seller, protection]`.
    factors: Vec<RiskyPeriodFactors>,
    n: usize,
    m: usize,
}

impl TrilateralModel {
    pub fn new(
        contract: &CdsContract,
        paths: &ScenarioPaths,
        dependence: &DependenceSpec,
        recovery: &RecoverySpec,
        discount: &Curve,
        cfg: &McConfig,
    ) -> Result<Self> {
        contract.validate()?;
        recovery.validate()?;
        dependence.validate()?;
        paths.check(&contract.schedule)?;
        let grid = MarginalGrid::from_paths(paths);
        if let Some((_, _, cells)) = grid.worst_violation(dependence) {
            return Err(Error::Admissibility { cells });
        }
        let dates = contract.schedule.dates();
        let discounts = dates
            .windows(2)
            .map(|w| discount.discount_factor(w[0], w[1]))
            .collect::<Result<Vec<_>>>()?;
        let n = paths.n_paths();
        let m = contract.schedule.periods();
        let mut factors = vec![
            RiskyPeriodFactors {
                owed_by_buyer: 0.0,
                owed_by_seller: 0.0,
                protection: 0.0
            };
            n * m
        ];
        factors.par_chunks_mut(n).enumerate().for_each(|(j, row)| {
            for (i, f) in row.iter_mut().enumerate() {
                let marg = grid.get(i, j);
                let dep = PeriodDependence::from_spec(marg, dependence);
                *f = period_factors_unchecked(marg, &dep, recovery, discounts[j]);
            }
        });
        Ok(Self {
            contract: contract.clone(),
            paths: paths.clone(),
            recovery: *recovery,
            cfg: *cfg,
            factors,
            n,
            m,
        })
    }

    pub fn contract(&self) -> &CdsContract {
        &self.contract
    }

    /// Backward induction at `spread` followed by a forward pass that splits
    /// the value into per-period legs.
    pub fn price(&self, spread: f64) -> Result<ValuationResult> {
        let (n, m) = (self.n, self.m);
        let contract = self.contract.with_spread(spread);
        let phi_c = self.recovery.reference;
        // 1 where the end-of-period value is fitted non-negative for the buyer.
        let mut owed_by_seller = vec![0u8; n * m];
        let mut value = vec![0.0; n];
        let mut regressions = Vec::new();

        for j in (0..m).rev() {
            let x = contract.premium_flow(j);
            let r = contract.default_payment(j, phi_c);
            let fitted = if j + 1 == m {
                None
            } else {
                let state = self.paths.state_at(j + 1);
                let cols: Vec<&[f64]> = state.iter().map(|c| c.as_slice()).collect();
                let (fit, diag) = self.fit_with_fallback(&cols, &value, j + 1)?;
                regressions.push(diag);
                Some(fit)
            };
            let factors = &self.factors[j * n..(j + 1) * n];
            value
                .par_chunks_mut(CHUNK)
                .zip(owed_by_seller[j * n..(j + 1) * n].par_chunks_mut(CHUNK))
                .enumerate()
                .for_each(|(c, (vals, signs))| {
                    for (k, (v, sign)) in vals.iter_mut().zip(signs.iter_mut()).enumerate() {
                        let i = c * CHUNK + k;
                        let w_fit = fitted.as_ref().map_or(0.0, |f| f[i]) + x;
                        let f = &factors[i];
                        let o = f.premium(w_fit);
                        *sign = u8::from(w_fit >= 0.0);
                        *v = o * (*v + x) + f.protection * r;
                    }
                });
        }
        regressions.reverse();

        // Forward pass: cumulative risky discounting along each path.
        let notional = contract.notional;
        let accruals = contract.schedule.accruals();
        let paths_idx: Vec<usize> = (0..n).collect();
        let chunks: Vec<(Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>)> = paths_idx
            .par_chunks(CHUNK)
            .map(|idx| {
                let mut prem = vec![0.0; m];
                let mut prot = vec![0.0; m];
                let mut pv = Vec::with_capacity(idx.len());
                let mut ann = Vec::with_capacity(idx.len());
                for &i in idx {
                    let mut cum = 1.0;
                    let mut total = 0.0;
                    let mut annuity = 0.0;
                    for j in 0..m {
                        let f = &self.factors[j * n + i];
                        let o = if owed_by_seller[j * n + i] == 1 {
                            f.owed_by_seller
                        } else {
                            f.owed_by_buyer
                        };
                        let x = contract.premium_flow(j);
                        let r = contract.default_payment(j, phi_c);
                        let p = cum * o * x;
                        let q = cum * f.protection * r;
                        prem[j] += p;
                        prot[j] += q;
                        total += p + q;
                        annuity += cum * notional * accruals[j] * (o + 0.5 * f.protection);
                        cum *= o;
                    }
                    pv.push(total);
                    ann.push(annuity);
                }
                (prem, prot, pv, ann)
            })
            .collect();
        let mut prem = vec![0.0; m];
        let mut prot = vec![0.0; m];
        let mut path_values = Vec::with_capacity(n);
        let mut path_annuity = Vec::with_capacity(n);
        for (p, q, pv, ann) in chunks {
            for j in 0..m {
                prem[j] += p[j];
                prot[j] += q[j];
            }
            path_values.extend(pv);
            path_annuity.extend(ann);
        }
        let dates = contract.schedule.dates();
        let legs = (0..m)
            .map(|j| PeriodLeg {
                period: j,
                start: dates[j],
                end: dates[j + 1],
                premium: prem[j] / n as f64,
                protection: prot[j] / n as f64,
            })
            .collect();
        let (mean, se) = mean_and_std_error(&path_values, self.cfg.antithetic);
        Ok(ValuationResult {
            value: mean,
            std_error: se,
            breakeven_spread: None,
            breakeven_std_error: None,
            legs,
            collateral: None,
            diagnostics: Diagnostics {
                method: "regression-monte-carlo".into(),
                n_paths: n,
                seed: Some(self.paths.reference.seed),
                antithetic: self.cfg.antithetic,
                regressions,
            },
            path_values,
            path_annuity,
        })
    }

    fn fit_with_fallback(
        &self,
        cols: &[&[f64]],
        target: &[f64],
        date: usize,
    ) -> Result<(Vec<f64>, RegressionDiagnostic)> {
        let requested = self.cfg.regression_degree;
        let mut degree = requested;
        loop {
            match regression_continuation(cols, target, degree) {
                Ok(fit) => {
                    return Ok((
                        fit.fitted,
                        RegressionDiagnostic {
                            date,
                            requested_degree: requested,
                            used_degree: fit.degree,
                            r_squared: fit.r_squared,
                        },
                    ))
                }
                Err(Error::RegressionSingular(_)) if degree > 0 => degree -= 1,
                Err(e) => return Err(e),
            }
        }
    }

    /// Spread at which the value is zero, with its Monte Carlo error.
    pub fn breakeven(&self) -> Result<ValuationResult> {
        let at_zero = self.price(0.0)?;
        let annuity = chunked_sum(&at_zero.path_annuity) / self.n as f64;
        let guess = if annuity > 0.0 { at_zero.value / annuity } else { 0.0 };
        let s = breakeven_spread(|s| self.price(s).map(|r| r.value), self.contract.notional, guess)?;
        let mut result = self.price(s)?;
        let (_, se) = mean_and_std_error(&result.breakeven_influence().unwrap_or_default(), self.cfg.antithetic);
        result.breakeven_spread = Some(s);
        result.breakeven_std_error = Some(se);
        Ok(result)
    }
}

/// Regression Monte Carlo value of a CDS with defaultable buyer, seller and
/// reference entity.
pub fn price_trilateral(
    contract: &CdsContract,
    paths: &ScenarioPaths,
    dependence: &DependenceSpec,
    recovery: &RecoverySpec,
    discount: &Curve,
    cfg: &McConfig,
) -> Result<ValuationResult> {
    TrilateralModel::new(contract, paths, dependence, recovery, discount, cfg)?.price(contract.spread)
}
