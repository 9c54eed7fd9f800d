use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};

const CHUNK: usize = 4096;
const RCOND: f64 = 1e-13;

/// Least-squares continuation estimate at one exercise date.
#[derive(Debug, Clone)]
pub struct ContinuationFit {
    pub fitted: Vec<f64>,
    pub r_squared: f64,
    pub degree: u32,
    pub coefficients: Vec<f64>,
}

/// Exponent tuples of all monomials in `vars` variables with total degree
/// `<= degree`, intercept first.
pub fn monomial_exponents(vars: usize, degree: u32) -> Vec<Vec<u32>> {
    let mut out = vec![vec![0; vars]];
    for total in 1..=degree {
        let mut current = vec![0u32; vars];
        fill(&mut out, &mut current, 0, total);
    }
    out
}

fn fill(out: &mut Vec<Vec<u32>>, current: &mut Vec<u32>, idx: usize, remaining: u32) {
    if current.is_empty() {
        return;
    }
    if idx + 1 == current.len() {
        current[idx] = remaining;
        out.push(current.clone());
        current[idx] = 0;
        return;
    }
    for e in (0..=remaining).rev() {
        current[idx] = e;
        fill(out, current, idx + 1, remaining - e);
    }
    current[idx] = 0;
}

fn basis_row(state: &[&[f64]], scale: &[(f64, f64)], i: usize, exps: &[Vec<u32>], row: &mut [f64]) {
    for (slot, e) in row.iter_mut().zip(exps) {
        let mut v = 1.0;
        for (k, &power) in e.iter().enumerate() {
            if power > 0 {
                let z = (state[k][i] - scale[k].0) / scale[k].1;
                v *= z.powi(power as i32);
            }
        }
        *slot = v;
    }
}

/// Regresses `realized` on monomials (up to `degree`) of the state columns.
///
/// State columns are standardised before the basis is formed; columns with
/// zero dispersion carry no information and are dropped. Sums are
/// accumulated over fixed-size chunks so the result does not depend on the
/// thread pool.
pub fn regression_continuation(
    state: &[&[f64]],
    realized: &[f64],
    degree: u32,
) -> Result<ContinuationFit> {
    let n = realized.len();
    if let Some(bad) = state.iter().position(|c| c.len() != n) {
        return Err(Error::DimensionMismatch(format!(
            "state column {bad} has {} rows, expected {n}",
            state[bad].len()
        )));
    }
    let mut columns: Vec<&[f64]> = Vec::new();
    let mut scale = Vec::new();
    for col in state {
        let mean = chunked_sum(col) / n.max(1) as f64;
        let var = chunked_sum_by(col, |x| (x - mean) * (x - mean)) / n.max(1) as f64;
        if var > 0.0 {
            columns.push(col);
            scale.push((mean, var.sqrt()));
        }
    }
    let exps = monomial_exponents(columns.len(), if columns.is_empty() { 0 } else { degree });
    let p = exps.len();
    if n < p {
        return Err(Error::RegressionSingular(format!(
            "{n} observations for {p} basis functions"
        )));
    }

    let partials: Vec<(Vec<f64>, Vec<f64>)> = (0..n)
        .collect::<Vec<_>>()
        .par_chunks(CHUNK)
        .map(|idx| {
            let mut xtx = vec![0.0; p * p];
            let mut xty = vec![0.0; p];
            let mut row = vec![0.0; p];
            for &i in idx {
                basis_row(&columns, &scale, i, &exps, &mut row);
                let y = realized[i];
                for a in 0..p {
                    xty[a] += row[a] * y;
                    for b in a..p {
                        xtx[a * p + b] += row[a] * row[b];
                    }
                }
            }
            (xtx, xty)
        })
        .collect();
    let mut xtx = DMatrix::<f64>::zeros(p, p);
    let mut xty = DVector::<f64>::zeros(p);
    for (m, v) in &partials {
        for a in 0..p {
            xty[a] += v[a];
            for b in a..p {
                xtx[(a, b)] += m[a * p + b];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            xtx[(a, b)] = xtx[(b, a)];
        }
    }

    let svd = xtx.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smax > 0.0) || smin <= RCOND * smax {
        return Err(Error::RegressionSingular(format!(
            "normal matrix condition {:.3e}",
            if smin > 0.0 { smax / smin } else { f64::INFINITY }
        )));
    }
    let beta = svd
        .solve(&xty, 0.0)
        .map_err(|e| Error::RegressionSingular(e.to_string()))?;
    let coefficients: Vec<f64> = beta.iter().copied().collect();

    let mut fitted = vec![0.0; n];
    fitted
        .par_chunks_mut(CHUNK)
        .enumerate()
        .for_each(|(c, out)| {
            let mut row = vec![0.0; p];
            for (off, slot) in out.iter_mut().enumerate() {
                basis_row(&columns, &scale, c * CHUNK + off, &exps, &mut row);
                *slot = row.iter().zip(&coefficients).map(|(x, b)| x * b).sum();
            }
        });

    let mean_y = chunked_sum(realized) / n as f64;
    let sst = chunked_sum_by(realized, |y| (y - mean_y) * (y - mean_y));
    let residuals: Vec<f64> = realized.iter().zip(&fitted).map(|(y, f)| y - f).collect();
    let ssr = chunked_sum_by(&residuals, |r| r * r);
    let r_squared = if sst <= f64::EPSILON * mean_y.abs().max(1.0) * n as f64 {
        1.0
    } else {
        1.0 - ssr / sst
    };
    Ok(ContinuationFit {
        fitted,
        r_squared,
        degree: if columns.is_empty() { 0 } else { degree },
        coefficients,
    })
}

/// Order-stable parallel sum.
pub(crate) fn chunked_sum(values: &[f64]) -> f64 {
    chunked_sum_by(values, |x| x)
}

pub(crate) fn chunked_sum_by(values: &[f64], f: impl Fn(f64) -> f64 + Sync) -> f64 {
    values
        .par_chunks(CHUNK)
        .map(|c| c.iter().map(|&x| f(x)).sum::<f64>())
        .collect::<Vec<_>>()
        .into_iter()
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_sizes() {
        assert_eq!(monomial_exponents(3, 2).len(), 10);
        assert_eq!(monomial_exponents(2, 2).len(), 6);
        assert_eq!(monomial_exponents(3, 1).len(), 4);
        assert_eq!(monomial_exponents(0, 2).len(), 1);
    }

    #[test]
    fn constant_target() {
        let x: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let y = vec![3.5; 50];
        let fit = regression_continuation(&[&x], &y, 2).unwrap();
        assert_eq!(fit.r_squared, 1.0);
        assert!(fit.fitted.iter().all(|v| (v - 3.5).abs() < 1e-10));
    }

    #[test]
    fn quadratic_target_is_recovered() {
        let n = 200;
        let a: Vec<f64> = (0..n).map(|i| 0.01 + 0.0003 * i as f64).collect();
        let b: Vec<f64> = (0..n).map(|i| 0.05 + 0.02 * ((i * 7 % 13) as f64 / 13.0)).collect();
        let c: Vec<f64> = (0..n).map(|i| 0.02 * ((i * 11 % 17) as f64 / 17.0)).collect();
        let y: Vec<f64> = (0..n)
            .map(|i| 1.0 + 3.0 * a[i] - 2.0 * b[i] * c[i] + 40.0 * a[i] * a[i] + 5.0 * c[i])
            .collect();
        let fit = regression_continuation(&[&a, &b, &c], &y, 2).unwrap();
        let worst = fit
            .fitted
            .iter()
            .zip(&y)
            .map(|(f, t)| (f - t).abs())
            .fold(0.0, f64::max);
        assert!(worst <= 1e-10, "max residual {worst}");
    }

    #[test]
    fn underdetermined_is_singular() {
        let n = 9;
        let a: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let b: Vec<f64> = (0..n).map(|i| (i * i) as f64 * 0.3 + 1.0).collect();
        let c: Vec<f64> = (0..n).map(|i| ((i * 5) % 7) as f64).collect();
        let y: Vec<f64> = (0..n).map(|i| i as f64).collect();
        assert!(matches!(
            regression_continuation(&[&a, &b, &c], &y, 2),
            Err(Error::RegressionSingular(_))
        ));
    }
}
