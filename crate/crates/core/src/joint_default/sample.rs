use crate::error::{Error, Result};

/// Sample comrelation of `k ≥ 2` aligned series:
///
/// ```text
/// Σ_i ∏_j (x_ji - μ_j)  /  ( ∏_j Σ_i |x_ji - μ_j|^k )^(1/k)
/// ```
///
/// For two series this is the Pearson correlation. Hölder's inequality
/// bounds the result to `[-1, 1]`.
pub fn sample_comrelation<S: AsRef<[f64]>>(series: &[S]) -> Result<f64> {
    let k = series.len();
    if k < 2 {
        return Err(Error::DimensionMismatch(format!(
            "comrelation needs at least 2 series, got {k}"
        )));
    }
    let n = series[0].as_ref().len();
    if n < 2 {
        return Err(Error::DimensionMismatch(format!(
            "series need at least 2 observations, got {n}"
        )));
    }
    if let Some(bad) = series.iter().position(|s| s.as_ref().len() != n) {
        return Err(Error::DimensionMismatch(format!(
            "series {bad} has {} observations, expected {n}",
            series[bad].as_ref().len()
        )));
    }

    let centered: Vec<Vec<f64>> = series
        .iter()
        .map(|s| {
            let s = s.as_ref();
            let mean = s.iter().sum::<f64>() / n as f64;
            s.iter().map(|x| x - mean).collect()
        })
        .collect();

    let order = k as i32;
    // Normalise each series by its largest deviation so k-th powers stay in range.
    let mut log_norm = 0.0;
    let mut scaled = Vec::with_capacity(k);
    for (j, dev) in centered.iter().enumerate() {
        let max = dev.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if max == 0.0 {
            return Err(Error::DegenerateSeries(j));
        }
        let s: Vec<f64> = dev.iter().map(|x| x / max).collect();
        let abs_moment: f64 = s.iter().map(|x| x.abs().powi(order)).sum();
        log_norm += abs_moment.ln();
        scaled.push(s);
    }

    let numerator: f64 = (0..n)
        .map(|i| scaled.iter().map(|s| s[i]).product::<f64>())
        .sum();
    let denominator = (log_norm / k as f64).exp();
    Ok(numerator / denominator)
}
