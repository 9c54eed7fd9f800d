use thiserror::Error;

/// Errors raised across the valuation engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("curve needs at least 2 points, got {0}")]
    EmptyCurve(usize),
    #[error("curve terms must be strictly increasing (term {prev} followed by {next})")]
    NonMonotoneTerms { prev: u32, next: u32 },
    #[error("invalid curve point at term {term_days}: {reason}")]
    InvalidPoint { term_days: u32, reason: String },
    #[error("term {0} years lies outside the curve and extrapolation is disabled")]
    OutOfRangeTerm(f64),
    #[error("expected a {expected} curve, got {found}")]
    WrongCurveKind { expected: String, found: String },
    #[error("parse error at line {line}, field `{field}`: {message}")]
    Parse { line: usize, field: String, message: String },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("{name} = {value} is outside {range}")]
    OutOfRange { name: String, value: f64, range: String },
    #[error("joint distribution is not admissible; violating cells: {}", format_cells(.cells))]
    Admissibility { cells: Vec<(String, f64)> },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("degenerate series {0}: zero dispersion")]
    DegenerateSeries(usize),
    #[error("invalid CIR parameters: {0}")]
    InvalidParams(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("no breakeven root: {0}")]
    NoRoot(String),
    #[error("calibration failed: objective {objective:.3e} above threshold {threshold:.3e}")]
    CalibrationFailed { objective: f64, threshold: f64 },
    #[error("invalid calibration bounds: {0}")]
    InvalidBounds(String),
    #[error("regression is singular: {0}")]
    RegressionSingular(String),
    #[error("could not bracket a root of the pricing function on [{lo}, {hi}]")]
    NoBracket { lo: f64, hi: f64 },
    #[error("unsupported collateral threshold {0}: only full collateralization (H = 0) is priced")]
    UnsupportedCollateral(f64),
    #[error("nothing to report: {0}")]
    EmptyResults(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn format_cells(cells: &[(String, f64)]) -> String {
    cells
        .iter()
        .map(|(name, v)| format!("{name}={v:.3e}"))
        .collect::<Vec<_>>()
        .join(", ")
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_unit_interval(name: &str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            name: name.to_string(),
            value,
            range: "[0, 1]".into(),
        })
    }
}

pub(crate) fn check_correlation(name: &str, value: f64) -> Result<()> {
    if (-1.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            name: name.to_string(),
            value,
            range: "[-1, 1]".into(),
        })
    }
}
