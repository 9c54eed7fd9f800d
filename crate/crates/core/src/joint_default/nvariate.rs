use super::{PeriodDependence, PeriodMarginals, ADMISSIBILITY_TOL};
use crate::error::{check_unit_interval, Error, Result};

/// Joint distribution of `n` Bernoulli indicators from their survival
/// probabilities and the vector of central cross moments.
///
/// `moments[k]` holds `E[∏ (Y_i - q_i)^{k_i}]` where bit `i - 1` of `k` is
/// `k_i`, so variable 1 is the least significant bit. The returned vector
/// uses the same layout for outcomes `(y_1, …, y_n)`. The result is the
/// Kronecker product `M_n ⊗ … ⊗ M_1` applied to `moments`, with
/// `M_i = [[p_i, -1], [q_i, 1]]`, evaluated one axis at a time.
pub fn nvariate_joint(survival: &[f64], moments: &[f64]) -> Result<Vec<f64>> {
    let n = survival.len();
    if n == 0 || n > 30 {
        return Err(Error::DimensionMismatch(format!(
            "need 1..=30 variables, got {n}"
        )));
    }
    let size = 1usize << n;
    if moments.len() != size {
        return Err(Error::DimensionMismatch(format!(
            "moment vector has {} entries, expected 2^{n} = {size}",
            moments.len()
        )));
    }
    for (i, &p) in survival.iter().enumerate() {
        check_unit_interval(&format!("p_{}", i + 1), p)?;
    }
    if moments[0] != 1.0 {
        return Err(Error::OutOfRange {
            name: "sigma_0".into(),
            value: moments[0],
            range: "{1}".into(),
        });
    }
    for i in 0..n {
        let m = moments[1 << i];
        if m != 0.0 {
            return Err(Error::OutOfRange {
                name: format!("first central moment of variable {}", i + 1),
                value: m,
                range: "{0}".into(),
            });
        }
    }

    let mut v = moments.to_vec();
    for (axis, &p) in survival.iter().enumerate() {
        let q = 1.0 - p;
        let stride = 1usize << axis;
        for block in (0..size).step_by(stride << 1) {
            for k in block..block + stride {
                let (lo, hi) = (v[k], v[k + stride]);
                v[k] = p * lo - hi;
                v[k + stride] = q * lo + hi;
            }
        }
    }

    let violations: Vec<(String, f64)> = v
        .iter()
        .enumerate()
        .filter(|(_, &x)| !(-ADMISSIBILITY_TOL..=1.0 + ADMISSIBILITY_TOL).contains(&x))
        .map(|(k, &x)| (outcome_label(k, n), x))
        .collect();
    if violations.is_empty() {
        Ok(v)
    } else {
        Err(Error::Admissibility { cells: violations })
    }
}

fn outcome_label(k: usize, n: usize) -> String {
    let bits: String = (0..n).map(|i| if k >> i & 1 == 1 { '1' } else { '0' }).collect();
    format!("p{bits}")
}

/// Moment vector for three indicators in the layout [`nvariate_joint`] expects.
pub fn trivariate_moment_vector(d: &PeriodDependence) -> [f64; 8] {
    [1.0, 0.0, 0.0, d.sigma_ab, 0.0, d.sigma_ac, d.sigma_bc, d.theta_abc]
}

impl PeriodMarginals {
    /// Convenience for [`nvariate_joint`] with the three period marginals.
    pub fn nvariate(&self, d: &PeriodDependence) -> Result<Vec<f64>> {
        nvariate_joint(&self.survival(), &trivariate_moment_vector(d))
    }
}
