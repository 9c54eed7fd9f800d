use serde::{Deserialize, Serialize};

use super::report::{Layout, Report};
use super::{Experiment, Parties};
use crate::error::{Error, Result};
use crate::hazard::{riskfree_breakeven_spread, CreditQuality, SurvivalModel};
use crate::joint_default::{admissibility_region, AdmissibilityReport, DependenceAxis, DependenceSpec};
use crate::pricer::{
    mean_and_std_error, paired_std_error, CollateralModel, CollateralSpec, MarginalGrid,
    ScenarioPaths, TrilateralModel, ValuationResult, REFERENCE_STREAM,
};

const BP: f64 = 1e4;

fn breakeven(exp: &Experiment, paths: &ScenarioPaths, dep: &DependenceSpec) -> Result<ValuationResult> {
    TrilateralModel::new(
        &exp.contract()?,
        paths,
        dep,
        &exp.recovery()?,
        &exp.market.discount_curve,
        &exp.config.mc,
    )?
    .breakeven()
}

fn influence(r: &ValuationResult) -> Vec<f64> {
    r.breakeven_influence().unwrap_or_default()
}

/// CIR fit for every configured quality, with the 5y default-free breakeven.
pub fn run_calibration(exp: &Experiment) -> Result<Report> {
    let mut report = Report::new(
        "calibration",
        "Risk-neutral CIR parameters fitted to the shifted credit curve",
        exp.config_hash(),
        &["quality"],
        &[
            "mean_reversion",
            "long_term_mean",
            "volatility",
            "initial_hazard",
            "rmse",
            "breakeven_5y",
        ],
        Layout::Rows,
    );
    let contract = exp.contract()?;
    for &q in &exp.config.qualities {
        let Some(p) = exp.cir(q)? else { continue };
        let rmse = match exp.config.hazard_source {
            super::HazardSource::Calibrated => exp.calibration(q)?.rmse,
            super::HazardSource::Published => f64::NAN,
        };
        let s5 = riskfree_breakeven_spread(
            &SurvivalModel::Cir(p),
            &exp.market.discount_curve,
            exp.config.contract.recovery.reference,
            &contract.schedule,
        )?;
        report.push(
            vec![q.label().into()],
            vec![p.mean_reversion, p.long_term_mean, p.volatility, p.initial, rmse, s5],
        );
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityPoint {
    pub buyer: CreditQuality,
    pub seller: CreditQuality,
    pub breakeven: f64,
    pub std_error: f64,
    /// Breakeven minus the counterparty-risk-free breakeven on the same paths.
    pub delta: f64,
    pub delta_std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityTable {
    pub name: String,
    pub title: String,
    pub points: Vec<QualityPoint>,
}

impl QualityTable {
    pub fn to_report(&self, config_hash: &str) -> Report {
        let mut r = Report::new(
            &self.name,
            &self.title,
            config_hash,
            &["party_a", "party_b"],
            &["breakeven", "std_error", "delta"],
            Layout::Columns,
        );
        let label = |q: CreditQuality| match q {
            CreditQuality::RiskFree => "-".to_string(),
            q => q.label().to_string(),
        };
        for p in &self.points {
            r.push(
                vec![label(p.buyer), label(p.seller)],
                vec![p.breakeven, p.std_error, p.delta],
            );
        }
        r
    }

    pub fn deltas(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.delta).collect()
    }
}

fn quality_table(exp: &Experiment, buyer_varies: bool, name: &str, title: &str) -> Result<QualityTable> {
    let reference = exp.config.parties.reference;
    let riskfree = Parties {
        buyer: CreditQuality::RiskFree,
        seller: CreditQuality::RiskFree,
        reference,
    };
    let base = breakeven(exp, &exp.scenario(&riskfree)?, &DependenceSpec::independent())?;
    let base_s = base.breakeven_spread.expect("breakeven populated");
    let base_inf = influence(&base);
    let mut points = vec![QualityPoint {
        buyer: CreditQuality::RiskFree,
        seller: CreditQuality::RiskFree,
        breakeven: base_s,
        std_error: base.breakeven_std_error.unwrap_or(0.0),
        delta: 0.0,
        delta_std_error: 0.0,
    }];
    for &q in exp.config.qualities.iter().filter(|q| **q != CreditQuality::RiskFree) {
        let parties = if buyer_varies {
            Parties { buyer: q, ..riskfree }
        } else {
            Parties { seller: q, ..riskfree }
        };
        let r = breakeven(exp, &exp.scenario(&parties)?, &DependenceSpec::independent())?;
        let s = r.breakeven_spread.expect("breakeven populated");
        points.push(QualityPoint {
            buyer: parties.buyer,
            seller: parties.seller,
            breakeven: s,
            std_error: r.breakeven_std_error.unwrap_or(0.0),
            delta: s - base_s,
            delta_std_error: paired_std_error(&influence(&r), &base_inf, exp.config.mc.antithetic)
                .unwrap_or(f64::NAN),
        });
    }
    Ok(QualityTable {
        name: name.into(),
        title: title.into(),
        points,
    })
}

/// Breakevens with a risky buyer against a default-free seller.
pub fn run_table3(exp: &Experiment) -> Result<QualityTable> {
    quality_table(
        exp,
        true,
        "table3",
        "Impact of the credit quality of the protection buyer on CDS premia",
    )
}

/// Breakevens with a risky seller against a default-free buyer.
pub fn run_table4(exp: &Experiment) -> Result<QualityTable> {
    quality_table(
        exp,
        false,
        "table4",
        "Impact of the credit quality of the protection seller on CDS premia",
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub requested: f64,
    /// Value priced after clipping to the admissible interval.
    pub used: f64,
    pub clipped: bool,
    pub breakeven: f64,
    pub std_error: f64,
    pub delta_from_base: f64,
}

/// Why a requested sweep value was clipped: the worst path-period at the
/// requested value and its admissibility analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipRecord {
    pub axis: DependenceAxis,
    pub requested: f64,
    pub used: f64,
    pub path: usize,
    pub period: usize,
    pub report: AdmissibilityReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axis: DependenceAxis,
    /// Admissible interval over every path and period.
    pub interval: (f64, f64),
    pub points: Vec<SweepPoint>,
    /// Least-squares slope of breakeven on the swept value, in bp per unit.
    pub slope_bps: f64,
    pub slope_std_error_bps: f64,
    pub clipped: Vec<ClipRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Figure1Result {
    pub parties: Parties,
    pub base: DependenceSpec,
    /// Requested base before clipping, when it was inadmissible.
    pub requested_base: DependenceSpec,
    pub base_breakeven: f64,
    pub base_std_error: f64,
    pub sweeps: Vec<SweepResult>,
}

impl Figure1Result {
    pub fn to_reports(&self, config_hash: &str) -> Vec<Report> {
        let mut points = Report::new(
            "figure1",
            "Impact of default correlations and comrelation on CDS premia",
            config_hash,
            &["axis", "clipped"],
            &["requested", "used", "breakeven", "std_error", "delta_from_base"],
            Layout::Rows,
        );
        let mut slopes = Report::new(
            "figure1_slopes",
            "Sensitivity slopes of the CDS premium (bp per unit dependence)",
            config_hash,
            &["axis"],
            &["slope_bps", "slope_std_error_bps", "interval_lo", "interval_hi"],
            Layout::Rows,
        );
        for s in &self.sweeps {
            for p in &s.points {
                points.push(
                    vec![s.axis.name().into(), p.clipped.to_string()],
                    vec![p.requested, p.used, p.breakeven, p.std_error, p.delta_from_base],
                );
            }
            slopes.push(
                vec![s.axis.name().into()],
                vec![s.slope_bps, s.slope_std_error_bps, s.interval.0, s.interval.1],
            );
        }
        vec![points, slopes]
    }

    pub fn sweep(&self, axis: DependenceAxis) -> Option<&SweepResult> {
        self.sweeps.iter().find(|s| s.axis == axis)
    }
}

fn clip_record(grid: &MarginalGrid, axis: DependenceAxis, spec: &DependenceSpec, used: f64) -> Option<ClipRecord> {
    let (path, period, _) = grid.worst_violation(spec)?;
    Some(ClipRecord {
        axis,
        requested: spec.get(axis),
        used,
        path,
        period,
        report: admissibility_region(grid.get(path, period), spec),
    })
}

/// Sweeps each configured dependence axis with the others at the base,
/// clipping to the range admissible on every path and period.
pub fn run_figure1(exp: &Experiment) -> Result<Figure1Result> {
    let parties = exp.config.parties;
    let paths = exp.scenario(&parties)?;
    let grid = MarginalGrid::from_paths(&paths);
    let antithetic = exp.config.mc.antithetic;

    let requested_base = exp.config.sweep.base.spec();
    let mut base = requested_base;
    for axis in DependenceAxis::ALL {
        let v = base.get(axis);
        if v != 0.0 && !grid.is_admissible(&base) {
            let (lo, hi) = grid
                .feasible_interval(&base.with(axis, 0.0), axis)
                .ok_or_else(|| Error::Admissibility { cells: Vec::new() })?;
            base = base.with(axis, v.clamp(lo, hi));
        }
    }
    if let Some((_, _, cells)) = grid.worst_violation(&base) {
        return Err(Error::Admissibility { cells });
    }
    let base_r = breakeven(exp, &paths, &base)?;
    let base_s = base_r.breakeven_spread.expect("breakeven populated");

    let mut sweeps = Vec::new();
    for &axis in &exp.config.sweep.axes {
        let (lo, hi) = grid
            .feasible_interval(&base, axis)
            .ok_or_else(|| Error::Admissibility { cells: Vec::new() })?;
        let mut priced: Vec<(f64, ValuationResult)> = Vec::new();
        let mut points = Vec::new();
        let mut clipped = Vec::new();
        for x in exp.config.sweep.grid() {
            let used = x.clamp(lo, hi);
            let was_clipped = used != x;
            if was_clipped {
                clipped.extend(clip_record(&grid, axis, &base.with(axis, x), used));
            }
            let idx = match priced.iter().position(|(u, _)| *u == used) {
                Some(i) => i,
                None => {
                    let r = if used == base.get(axis) {
                        base_r.clone()
                    } else {
                        breakeven(exp, &paths, &base.with(axis, used))?
                    };
                    priced.push((used, r));
                    priced.len() - 1
                }
            };
            let r = &priced[idx].1;
            let s = r.breakeven_spread.expect("breakeven populated");
            points.push(SweepPoint {
                requested: x,
                used,
                clipped: was_clipped,
                breakeven: s,
                std_error: r.breakeven_std_error.unwrap_or(0.0),
                delta_from_base: s - base_s,
            });
        }
        // Least squares over the distinct admissible values actually priced.
        let xs: Vec<f64> = priced.iter().map(|(u, _)| *u).collect();
        let xbar = xs.iter().sum::<f64>() / xs.len() as f64;
        let sxx: f64 = xs.iter().map(|x| (x - xbar).powi(2)).sum();
        let (slope, slope_se) = if sxx > 0.0 {
            let weights: Vec<f64> = xs.iter().map(|x| (x - xbar) / sxx).collect();
            let slope: f64 = priced
                .iter()
                .zip(&weights)
                .map(|((_, r), w)| w * r.breakeven_spread.expect("breakeven populated"))
                .sum();
            let infl: Vec<Vec<f64>> = priced.iter().map(|(_, r)| influence(r)).collect();
            let per_path: Vec<f64> = (0..infl[0].len())
                .map(|i| infl.iter().zip(&weights).map(|(v, w)| w * v[i]).sum())
                .collect();
            (slope, mean_and_std_error(&per_path, antithetic).1)
        } else {
            (0.0, 0.0)
        };
        sweeps.push(SweepResult {
            axis,
            interval: (lo, hi),
            points,
            slope_bps: slope * BP,
            slope_std_error_bps: slope_se * BP,
            clipped,
        });
    }
    Ok(Figure1Result {
        parties,
        base,
        requested_base,
        base_breakeven: base_s,
        base_std_error: base_r.breakeven_std_error.unwrap_or(0.0),
        sweeps,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollateralPoint {
    pub requested_rho_bc: f64,
    pub rho_bc: f64,
    pub clipped: bool,
    pub value: f64,
    pub std_error: f64,
    pub riskfree_value: f64,
    pub psi: f64,
    pub xi: f64,
    /// `V - V^F = ξ / ψ`.
    pub residual: f64,
    pub residual_std_error: f64,
    pub counterparty_riskfree_value: f64,
}

impl CollateralPoint {
    /// Residual in units of its standard error.
    pub fn z_score(&self) -> f64 {
        if self.residual_std_error > 0.0 {
            self.residual / self.residual_std_error
        } else if self.residual == 0.0 {
            0.0
        } else {
            f64::INFINITY.copysign(self.residual)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollateralStudy {
    pub parties: Parties,
    pub spread: f64,
    pub points: Vec<CollateralPoint>,
    /// Residual when the surviving value always equals the default payment,
    /// at the strongest dependence of the sweep.
    pub degenerate_residual: f64,
    pub clipped: Vec<ClipRecord>,
}

impl CollateralStudy {
    pub fn to_report(&self, config_hash: &str) -> Report {
        let mut r = Report::new(
            "collateral",
            "Fully collateralized CDS: value, counterparty-risk-free part and residual exposure",
            config_hash,
            &["clipped"],
            &[
                "requested_rho_bc",
                "rho_bc",
                "value",
                "std_error",
                "riskfree_value",
                "psi",
                "xi",
                "residual",
                "residual_std_error",
                "z_score",
            ],
            Layout::Rows,
        );
        for p in &self.points {
            r.push(
                vec![p.clipped.to_string()],
                vec![
                    p.requested_rho_bc,
                    p.rho_bc,
                    p.value,
                    p.std_error,
                    p.riskfree_value,
                    p.psi,
                    p.xi,
                    p.residual,
                    p.residual_std_error,
                    p.z_score(),
                ],
            );
        }
        r
    }
}

/// Fully collateralized valuation across a seller–reference correlation sweep.
pub fn run_collateral_study(exp: &Experiment) -> Result<CollateralStudy> {
    let study = &exp.config.collateral;
    let parties = study.parties;
    let seller_stream = if study.seller_shares_reference_driver {
        REFERENCE_STREAM
    } else {
        crate::pricer::SELLER_STREAM
    };
    let paths = exp.scenario_with_streams(&parties, seller_stream)?;
    let grid = MarginalGrid::from_paths(&paths);
    let base = exp.config.dependence.with(DependenceAxis::RhoBC, 0.0);
    let (lo, hi) = grid
        .feasible_interval(&base, DependenceAxis::RhoBC)
        .ok_or_else(|| Error::Admissibility { cells: Vec::new() })?;
    let contract = exp.contract()?;
    let recovery = exp.recovery()?;
    let model = |rho: f64| {
        CollateralModel::new(
            &contract,
            &paths,
            &base.with(DependenceAxis::RhoBC, rho),
            &recovery,
            &exp.market.discount_curve,
            &CollateralSpec::full(),
            &exp.config.mc,
        )
    };
    let mut points = Vec::new();
    let mut clipped = Vec::new();
    for &x in &study.rho_bc {
        let used = x.clamp(lo, hi);
        if used != x {
            clipped.extend(clip_record(&grid, DependenceAxis::RhoBC, &base.with(DependenceAxis::RhoBC, x), used));
        }
        let r = model(used)?.price(contract.spread)?;
        let c = r.collateral.expect("collateral decomposition populated");
        points.push(CollateralPoint {
            requested_rho_bc: x,
            rho_bc: used,
            clipped: used != x,
            value: r.value,
            std_error: r.std_error,
            riskfree_value: c.riskfree_value,
            psi: c.psi,
            xi: c.xi,
            residual: c.residual,
            residual_std_error: c.residual_std_error,
            counterparty_riskfree_value: c.counterparty_riskfree_value,
        });
    }
    if points.is_empty() {
        return Err(Error::EmptyResults("collateral study has no rho_bc points".into()));
    }
    let strongest = points
        .iter()
        .map(|p| p.rho_bc)
        .fold(0.0_f64, |a, b| if b.abs() > a.abs() { b } else { a });
    let degenerate = model(strongest)?.price_degenerate(contract.spread)?;
    Ok(CollateralStudy {
        parties,
        spread: contract.spread,
        points,
        degenerate_residual: degenerate.collateral.expect("collateral decomposition populated").residual,
        clipped,
    })
}
