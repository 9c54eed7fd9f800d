use rayon::prelude::*;

use super::regression::chunked_sum;
use super::trilateral::{MarginalGrid, ScenarioPaths};
use super::{
    mean_and_std_error, CdsContract, CollateralDecomposition, CollateralSpec, Diagnostics, McConfig,
    RecoverySpec, ValuationResult,
};
use crate::error::{Error, Result};
use crate::joint_default::{DependenceSpec, PeriodDependence};
use crate::market_data::Curve;

const CHUNK: usize = 4096;

/// Per path-period weights of the fully collateralized recursion.
#[derive(Debug, Clone, Copy, Default)]
struct CollateralWeights {
    /// `D p_C`: weight on the surviving value.
    survive: f64,
    /// `D q_C`: weight on the default payment.
    default: f64,
    /// `p_A p_B + σ_AB`: joint survival of the counterparties.
    psi: f64,
    /// `D (p_B σ_AC + p_A σ_BC - θ)`.
    kappa: f64,
}

/// Fully collateralized CDS on fixed paths.
///
/// When either counterparty defaults the collateral (the current value)
/// replaces the contract, so only the states where both survive carry
/// future value or the default payment. Conditioning on those states
/// gives, per period,
/// `V_j = D (p_C W + q_C R) + D (p_B σ_AC + p_A σ_BC - θ)(W - R) / ψ`
/// with `W` the next value plus the premium flow. Later periods use this
/// recursion path by path; the first period reports the averaged
/// decomposition `V = V^F + ξ / ψ`.
pub struct CollateralModel {
    contract: CdsContract,
    recovery: RecoverySpec,
    cfg: McConfig,
    seed: u64,
    weights: Vec<CollateralWeights>,
    n: usize,
    m: usize,
}

impl CollateralModel {
    pub fn new(
        contract: &CdsContract,
        paths: &ScenarioPaths,
        dependence: &DependenceSpec,
        recovery: &RecoverySpec,
        discount: &Curve,
        collateral: &CollateralSpec,
        cfg: &McConfig,
    ) -> Result<Self> {
        collateral.ensure_priceable()?;
        contract.validate()?;
        recovery.validate()?;
        dependence.validate()?;
        let schedule = &contract.schedule;
        for set in [&paths.buyer, &paths.seller].into_iter().flatten() {
            set.check_grid(schedule.dates())?;
        }
        paths.reference.check_grid(schedule.dates())?;
        let grid = MarginalGrid::from_paths(paths);
        if let Some((_, _, cells)) = grid.worst_violation(dependence) {
            return Err(Error::Admissibility { cells });
        }
        let discounts = schedule
            .dates()
            .windows(2)
            .map(|w| discount.discount_factor(w[0], w[1]))
            .collect::<Result<Vec<_>>>()?;
        let n = paths.n_paths();
        let m = schedule.periods();
        let mut weights = vec![CollateralWeights::default(); n * m];
        weights.par_chunks_mut(n).enumerate().for_each(|(j, row)| {
            let d = discounts[j];
            for (i, w) in row.iter_mut().enumerate() {
                let mg = grid.get(i, j);
                let dep = PeriodDependence::from_spec(mg, dependence);
                *w = CollateralWeights {
                    survive: d * mg.p_c,
                    default: d * mg.q_c(),
                    psi: mg.p_a * mg.p_b + dep.sigma_ab,
                    kappa: d * (mg.p_b * dep.sigma_ac + mg.p_a * dep.sigma_bc - dep.theta_abc),
                };
            }
        });
        if let Some(bad) = weights.iter().find(|w| !(w.psi > 0.0)) {
            return Err(Error::OutOfRange {
                name: "counterparty joint survival".into(),
                value: bad.psi,
                range: "(0, 1]".into(),
            });
        }
        Ok(Self {
            contract: contract.clone(),
            recovery: *recovery,
            cfg: *cfg,
            seed: paths.reference.seed,
            weights,
            n,
            m,
        })
    }

    pub fn price(&self, spread: f64) -> Result<ValuationResult> {
        self.price_with_payoff(spread, false)
    }

    /// Prices with the surviving value at every date replaced by the
    /// default payment, the degenerate case with no residual exposure.
    pub fn price_degenerate(&self, spread: f64) -> Result<ValuationResult> {
        self.price_with_payoff(spread, true)
    }

    fn price_with_payoff(&self, spread: f64, value_equals_payment: bool) -> Result<ValuationResult> {
        let (n, m) = (self.n, self.m);
        let contract = self.contract.with_spread(spread);
        let phi_c = self.recovery.reference;
        let mut value = vec![0.0; n];
        let mut riskfree = vec![0.0; n];
        // First-period per-path pieces: V^F contribution, ψ and ξ contribution.
        let mut f0 = vec![0.0; n];
        let mut g0 = vec![0.0; n];
        let mut x0 = vec![0.0; n];
        for j in (0..m).rev() {
            let x = contract.premium_flow(j);
            let r = contract.default_payment(j, phi_c);
            let w_row = &self.weights[j * n..(j + 1) * n];
            value
                .par_chunks_mut(CHUNK)
                .zip(riskfree.par_chunks_mut(CHUNK))
                .zip(w_row.par_chunks(CHUNK))
                .zip(f0.par_chunks_mut(CHUNK).zip(g0.par_chunks_mut(CHUNK)).zip(x0.par_chunks_mut(CHUNK)))
                .for_each(|(((vals, rf), ws), ((fs, gs), xs))| {
                    for k in 0..vals.len() {
                        let wt = &ws[k];
                        let w = if value_equals_payment { r } else { vals[k] + x };
                        let base = wt.survive * w + wt.default * r;
                        let gap = wt.kappa * (w - r);
                        rf[k] = wt.survive * (rf[k] + x) + wt.default * r;
                        if j == 0 {
                            fs[k] = base;
                            gs[k] = wt.psi;
                            xs[k] = gap;
                        }
                        vals[k] = base + gap / wt.psi;
                    }
                });
        }

        let nf = n as f64;
        let vf = chunked_sum(&f0) / nf;
        let psi = chunked_sum(&g0) / nf;
        let xi = chunked_sum(&x0) / nf;
        let residual = xi / psi;
        let z: Vec<f64> = x0
            .iter()
            .zip(&g0)
            .map(|(xv, gv)| (xv - residual * gv) / psi)
            .collect();
        let (_, vf_se) = mean_and_std_error(&f0, self.cfg.antithetic);
        let (_, residual_se) = mean_and_std_error(&z, self.cfg.antithetic);
        let path_values: Vec<f64> = f0.iter().zip(&z).map(|(f, zi)| f + residual + zi).collect();
        let (_, se) = mean_and_std_error(&path_values, self.cfg.antithetic);
        let counterparty_riskfree_value = chunked_sum(&riskfree) / nf;

        Ok(ValuationResult {
            value: vf + residual,
            std_error: se,
            breakeven_spread: None,
            breakeven_std_error: None,
            // The ratio form does not separate into additive period legs.
            legs: Vec::new(),
            collateral: Some(CollateralDecomposition {
                riskfree_value: vf,
                riskfree_std_error: vf_se,
                psi,
                xi,
                residual,
                residual_std_error: residual_se,
                counterparty_riskfree_value,
            }),
            diagnostics: Diagnostics {
                method: "full-collateral".into(),
                n_paths: n,
                seed: Some(self.seed),
                antithetic: self.cfg.antithetic,
                regressions: Vec::new(),
            },
            path_values,
            path_annuity: Vec::new(),
        })
    }

    /// Breakeven spread. The collateralized value is affine in the spread,
    /// so two valuations fix the root; a third confirms it.
    pub fn breakeven(&self) -> Result<ValuationResult> {
        let v0 = self.price(0.0)?;
        let v1 = self.price(1.0)?;
        let slope = v1.value - v0.value;
        if !(slope < 0.0) {
            return Err(Error::NoRoot(format!("value does not decrease in the spread (slope {slope})")));
        }
        let s = -v0.value / slope;
        let mut result = self.price(s)?;
        if result.value.abs() > self.contract.notional * 1e-8 {
            return Err(Error::NoRoot(format!(
                "affine root {s} leaves value {}",
                result.value
            )));
        }
        result.path_annuity = v0
            .path_values
            .iter()
            .zip(&v1.path_values)
            .map(|(a, b)| a - b)
            .collect();
        let (_, se) = mean_and_std_error(
            &result.breakeven_influence().unwrap_or_default(),
            self.cfg.antithetic,
        );
        result.breakeven_spread = Some(s);
        result.breakeven_std_error = Some(se);
        Ok(result)
    }
}

/// Fully collateralized value with its decomposition into the
/// counterparty-risk-free part and the residual exposure.
pub fn price_collateralized(
    contract: &CdsContract,
    paths: &ScenarioPaths,
    dependence: &DependenceSpec,
    recovery: &RecoverySpec,
    discount: &Curve,
    collateral: &CollateralSpec,
    cfg: &McConfig,
) -> Result<ValuationResult> {
    CollateralModel::new(contract, paths, dependence, recovery, discount, collateral, cfg)?
        .price(contract.spread)
}
