//! Joint default distributions of Bernoulli default indicators.
//!
//! Indicators are `Y_j = 1` on default (probability `q_j`) and `0` on survival
//! (probability `p_j`). Dependence enters through pairwise covariances
//! `σ_ij = E[(Y_i - q_i)(Y_j - q_j)]` and the third-order cross moment
//! ("comvariance") `θ = E[(Y_A - q_A)(Y_B - q_B)(Y_C - q_C)]`. Users specify
//! the scale-free versions: Pearson correlations `ρ_ij` and the comrelation
//! `ζ`, which are mapped to `σ`/`θ` against each period's marginals.

mod admissibility;
mod nvariate;
mod sample;

pub use admissibility::{admissibility_region, AdmissibilityReport, AxisBound, DependenceAxis};
pub use nvariate::{nvariate_joint, trivariate_moment_vector};
pub use sample::sample_comrelation;

use serde::{Deserialize, Serialize};

use crate::error::{check_correlation, check_unit_interval, Error, Result};

/// Cells within this distance outside `[0, 1]` are treated as rounding noise.
pub const ADMISSIBILITY_TOL: f64 = 1e-12;

/// Survival probabilities of the buyer (A), seller (B) and reference entity (C)
/// over one period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodMarginals {
    pub p_a: f64,
    pub p_b: f64,
    pub p_c: f64,
}

impl PeriodMarginals {
    pub fn new(p_a: f64, p_b: f64, p_c: f64) -> Result<Self> {
        check_unit_interval("p_A", p_a)?;
        check_unit_interval("p_B", p_b)?;
        check_unit_interval("p_C", p_c)?;
        Ok(Self { p_a, p_b, p_c })
    }

    pub fn q_a(&self) -> f64 {
        1.0 - self.p_a
    }

    pub fn q_b(&self) -> f64 {
        1.0 - self.p_b
    }

    pub fn q_c(&self) -> f64 {
        1.0 - self.p_c
    }

    pub fn survival(&self) -> [f64; 3] {
        [self.p_a, self.p_b, self.p_c]
    }
}

/// Scale-free dependence: pairwise correlations and the comrelation.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DependenceSpec {
    #[serde(default)]
    pub rho_ab: f64,
    #[serde(default)]
    pub rho_ac: f64,
    #[serde(default)]
    pub rho_bc: f64,
    #[serde(default)]
    pub zeta_abc: f64,
}

impl DependenceSpec {
    pub fn independent() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<()> {
        check_correlation("rho_AB", self.rho_ab)?;
        check_correlation("rho_AC", self.rho_ac)?;
        check_correlation("rho_BC", self.rho_bc)?;
        check_correlation("zeta_ABC", self.zeta_abc)
    }

    pub fn is_independent(&self) -> bool {
        self.rho_ab == 0.0 && self.rho_ac == 0.0 && self.rho_bc == 0.0 && self.zeta_abc == 0.0
    }

    pub fn get(&self, axis: DependenceAxis) -> f64 {
        match axis {
            DependenceAxis::RhoAB => self.rho_ab,
            DependenceAxis::RhoAC => self.rho_ac,
            DependenceAxis::RhoBC => self.rho_bc,
            DependenceAxis::ZetaABC => self.zeta_abc,
        }
    }

    pub fn with(mut self, axis: DependenceAxis, value: f64) -> Self {
        match axis {
            DependenceAxis::RhoAB => self.rho_ab = value,
            DependenceAxis::RhoAC => self.rho_ac = value,
            DependenceAxis::RhoBC => self.rho_bc = value,
            DependenceAxis::ZetaABC => self.zeta_abc = value,
        }
        self
    }
}

/// Period-level moments implied by a [`DependenceSpec`] and the period marginals.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PeriodDependence {
    pub sigma_ab: f64,
    pub sigma_ac: f64,
    pub sigma_bc: f64,
    pub theta_abc: f64,
}

impl PeriodDependence {
    /// Maps correlations/comrelation onto covariances/comvariance without
    /// range checks; callers validate the spec once up front.
    pub fn from_spec(m: &PeriodMarginals, spec: &DependenceSpec) -> Self {
        Self {
            sigma_ab: spec.rho_ab * indicator_sd_product(m.p_a, m.p_b),
            sigma_ac: spec.rho_ac * indicator_sd_product(m.p_a, m.p_c),
            sigma_bc: spec.rho_bc * indicator_sd_product(m.p_b, m.p_c),
            theta_abc: spec.zeta_abc * third_moment_scale(m),
        }
    }
}

fn indicator_sd_product(p_i: f64, p_j: f64) -> f64 {
    (p_i * (1.0 - p_i) * p_j * (1.0 - p_j)).sqrt()
}

/// `E|Y - q|^3 = p q (p^2 + q^2)` for a Bernoulli indicator.
pub fn third_absolute_central_moment(p: f64) -> f64 {
    let q = 1.0 - p;
    p * q * (p * p + q * q)
}

fn third_moment_scale(m: &PeriodMarginals) -> f64 {
    (third_absolute_central_moment(m.p_a)
        * third_absolute_central_moment(m.p_b)
        * third_absolute_central_moment(m.p_c))
    .cbrt()
}

/// `σ_ij = ρ_ij · sqrt(p_i q_i p_j q_j)`.
pub fn covariance_from_correlation(p_i: f64, p_j: f64, rho_ij: f64) -> Result<f64> {
    check_unit_interval("p_i", p_i)?;
    check_unit_interval("p_j", p_j)?;
    check_correlation("rho", rho_ij)?;
    Ok(rho_ij * indicator_sd_product(p_i, p_j))
}

/// `θ = ζ · cbrt(∏ p_j q_j (p_j² + q_j²))`.
pub fn comvariance_from_comrelation(marginals: &PeriodMarginals, zeta: f64) -> Result<f64> {
    check_correlation("zeta", zeta)?;
    Ok(zeta * third_moment_scale(marginals))
}

/// The eight joint probabilities of `(Y_A, Y_B, Y_C)`.
///
/// Cell index is `y_A + 2 y_B + 4 y_C`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrivariateDistribution {
    pub cells: [f64; 8],
}

pub fn cell_index(y_a: u8, y_b: u8, y_c: u8) -> usize {
    usize::from(y_a) | (usize::from(y_b) << 1) | (usize::from(y_c) << 2)
}

pub fn cell_label(index: usize) -> String {
    format!("p{}{}{}", index & 1, (index >> 1) & 1, (index >> 2) & 1)
}

impl TrivariateDistribution {
    pub fn p(&self, y_a: u8, y_b: u8, y_c: u8) -> f64 {
        self.cells[cell_index(y_a, y_b, y_c)]
    }

    pub fn total(&self) -> f64 {
        self.cells.iter().sum()
    }

    /// Cells outside `[0, 1]` beyond [`ADMISSIBILITY_TOL`].
    pub fn violations(&self) -> Vec<(String, f64)> {
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, &v)| !(-ADMISSIBILITY_TOL..=1.0 + ADMISSIBILITY_TOL).contains(&v))
            .map(|(i, &v)| (cell_label(i), v))
            .collect()
    }

    pub fn is_admissible(&self) -> bool {
        self.cells
            .iter()
            .all(|v| (-ADMISSIBILITY_TOL..=1.0 + ADMISSIBILITY_TOL).contains(v))
    }
}

/// Evaluates the eight cell formulas without the admissibility check.
pub fn trivariate_cells(m: &PeriodMarginals, d: &PeriodDependence) -> TrivariateDistribution {
    let (pa, pb, pc) = (m.p_a, m.p_b, m.p_c);
    let (qa, qb, qc) = (m.q_a(), m.q_b(), m.q_c());
    let (s_ab, s_ac, s_bc, th) = (d.sigma_ab, d.sigma_ac, d.sigma_bc, d.theta_abc);
    let p000 = pa * pb * pc + pc * s_ab + pb * s_ac + pa * s_bc - th;
    let p100 = qa * pb * pc - pc * s_ab - pb * s_ac + qa * s_bc + th;
    let p010 = pa * qb * pc - pc * s_ab + qb * s_ac - pa * s_bc + th;
    let p001 = pa * pb * qc + qc * s_ab - pb * s_ac - pa * s_bc + th;
    let p110 = qa * qb * pc + pc * s_ab - qb * s_ac - qa * s_bc - th;
    let p101 = qa * pb * qc - qc * s_ab + pb * s_ac - qa * s_bc - th;
    let p011 = pa * qb * qc - qc * s_ab - qb * s_ac + pa * s_bc - th;
    let p111 = qa * qb * qc + qc * s_ab + qb * s_ac + qa * s_bc + th;
    let mut cells = [0.0; 8];
    cells[cell_index(0, 0, 0)] = p000;
    cells[cell_index(1, 0, 0)] = p100;
    cells[cell_index(0, 1, 0)] = p010;
    cells[cell_index(0, 0, 1)] = p001;
    cells[cell_index(1, 1, 0)] = p110;
    cells[cell_index(1, 0, 1)] = p101;
    cells[cell_index(0, 1, 1)] = p011;
    cells[cell_index(1, 1, 1)] = p111;
    TrivariateDistribution { cells }
}

/// Joint distribution of the three indicators; fails if any cell leaves `[0, 1]`.
pub fn trivariate_joint(
    m: &PeriodMarginals,
    d: &PeriodDependence,
) -> Result<TrivariateDistribution> {
    let dist = trivariate_cells(m, d);
    if dist.is_admissible() {
        Ok(dist)
    } else {
        Err(Error::Admissibility {
            cells: dist.violations(),
        })
    }
}
