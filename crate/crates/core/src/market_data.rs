//! Term structures for discounting and calibration.
//!
//! Interest curves interpolate linearly in the continuously compounded zero
//! rate (log-linear discount factors between nodes). Credit-spread and caplet
//! curves interpolate linearly in the quoted value. Terms are quoted in days
//! and converted to year fractions on ACT/365 fixed. Beyond the outermost
//! nodes the curve is held flat unless extrapolation is switched off.

use std::fmt;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const BUNDLED_TABLE1: &str = include_str!("../data/table1.csv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    Interest,
    CreditSpread,
    CapletVol,
}

impl CurveKind {
    /// Tag used in the CSV/JSON snapshot files.
    pub fn file_tag(self) -> &'static str {
        match self {
            CurveKind::Interest => "interest",
            CurveKind::CreditSpread => "credit",
            CurveKind::CapletVol => "caplet",
        }
    }

    pub fn from_file_tag(tag: &str) -> Option<Self> {
        match tag.trim() {
            "interest" => Some(CurveKind::Interest),
            "credit" => Some(CurveKind::CreditSpread),
            "caplet" => Some(CurveKind::CapletVol),
            _ => None,
        }
    }
}

impl fmt::Display for CurveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.file_tag())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum DayCount {
    #[default]
    Act365Fixed,
}

impl DayCount {
    pub fn year_fraction(self, days: u32) -> f64 {
        match self {
            DayCount::Act365Fixed => f64::from(days) / 365.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub term_days: u32,
    pub value: f64,
}

impl CurvePoint {
    pub fn new(term_days: u32, value: f64) -> Self {
        Self { term_days, value }
    }
}

/// An immutable term structure.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    kind: CurveKind,
    points: Vec<CurvePoint>,
    day_count: DayCount,
    /// Year fractions of each node, cached.
    terms: Vec<f64>,
    extrapolate: bool,
}

/// Builds a curve after validating the node layout.
///
/// Interest rates may be negative; credit spreads and volatilities may not.
pub fn build_curve(kind: CurveKind, points: Vec<CurvePoint>) -> Result<Curve> {
    if points.len() < 2 {
        return Err(Error::EmptyCurve(points.len()));
    }
    for pair in points.windows(2) {
        if pair[1].term_days <= pair[0].term_days {
            return Err(Error::NonMonotoneTerms {
                prev: pair[0].term_days,
                next: pair[1].term_days,
            });
        }
    }
    for p in &points {
        if p.term_days == 0 {
            return Err(Error::InvalidPoint {
                term_days: 0,
                reason: "term must be positive".into(),
            });
        }
        if !p.value.is_finite() {
            return Err(Error::InvalidPoint {
                term_days: p.term_days,
                reason: format!("value {} is not finite", p.value),
            });
        }
        if kind != CurveKind::Interest && p.value < 0.0 {
            return Err(Error::InvalidPoint {
                term_days: p.term_days,
                reason: format!("negative {kind} value {}", p.value),
            });
        }
    }
    let day_count = DayCount::Act365Fixed;
    let terms = points
        .iter()
        .map(|p| day_count.year_fraction(p.term_days))
        .collect();
    Ok(Curve {
        kind,
        points,
        day_count,
        terms,
        extrapolate: true,
    })
}

impl Curve {
    pub fn kind(&self) -> CurveKind {
        self.kind
    }

    pub fn points(&self) -> &[CurvePoint] {
        &self.points
    }

    pub fn day_count(&self) -> DayCount {
        self.day_count
    }

    /// Node terms as year fractions.
    pub fn terms(&self) -> &[f64] {
        &self.terms
    }

    pub fn with_extrapolation(mut self, enabled: bool) -> Self {
        self.extrapolate = enabled;
        self
    }

    /// Copy of this curve with every node moved by `bps` basis points.
    pub fn shifted(&self, bps: f64) -> Curve {
        let mut out = self.clone();
        for p in &mut out.points {
            p.value += bps * 1e-4;
        }
        out
    }

    /// Interpolated node value at `t` years (linear between nodes, flat outside).
    pub fn value_at(&self, t: f64) -> Result<f64> {
        let first = self.terms[0];
        let last = *self.terms.last().expect("curve has at least two nodes");
        if t <= first {
            if t < first && !self.extrapolate && t > 0.0 {
                return Err(Error::OutOfRangeTerm(t));
            }
            return Ok(self.points[0].value);
        }
        if t >= last {
            if t > last && !self.extrapolate {
                return Err(Error::OutOfRangeTerm(t));
            }
            return Ok(self.points[self.points.len() - 1].value);
        }
        let i = self.terms.partition_point(|&x| x <= t);
        let (t0, t1) = (self.terms[i - 1], self.terms[i]);
        let (v0, v1) = (self.points[i - 1].value, self.points[i].value);
        let w = (t - t0) / (t1 - t0);
        Ok(v0 + w * (v1 - v0))
    }

    fn expect_kind(&self, expected: CurveKind) -> Result<()> {
        if self.kind == expected {
            Ok(())
        } else {
            Err(Error::WrongCurveKind {
                expected: expected.to_string(),
                found: self.kind.to_string(),
            })
        }
    }

    /// Continuously compounded zero rate to `t` years.
    pub fn zero_rate(&self, t: f64) -> Result<f64> {
        self.expect_kind(CurveKind::Interest)?;
        self.value_at(t)
    }

    /// Discount factor from `t` to `u` (years from the valuation date).
    pub fn discount_factor(&self, t: f64, u: f64) -> Result<f64> {
        self.expect_kind(CurveKind::Interest)?;
        if !(t >= 0.0 && u >= t) {
            return Err(Error::OutOfRange {
                name: "discount interval".into(),
                value: u - t,
                range: format!("0 <= t ({t}) <= u ({u})"),
            });
        }
        if t == u {
            return Ok(1.0);
        }
        let integral_u = self.value_at(u)? * u;
        let integral_t = if t == 0.0 { 0.0 } else { self.value_at(t)? * t };
        Ok((-(integral_u - integral_t)).exp())
    }

    /// Credit spread at `term` years with a parallel overlay of `shift_bps`.
    pub fn spread_at(&self, term: f64, shift_bps: f64) -> Result<f64> {
        self.expect_kind(CurveKind::CreditSpread)?;
        Ok(self.value_at(term)? + shift_bps * 1e-4)
    }
}

/// The three term structures that drive one valuation run.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketSnapshot {
    pub valuation_date: Option<NaiveDate>,
    pub discount_curve: Curve,
    pub credit_curve: Curve,
    pub caplet_curve: Curve,
    /// Non-fatal observations made while loading (e.g. negative rates).
    pub warnings: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SnapshotRow {
    kind: String,
    term_days: u32,
    value: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct SnapshotJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    valuation_date: Option<NaiveDate>,
    points: Vec<SnapshotRow>,
}

impl MarketSnapshot {
    /// The bundled spot market (rates, A-rated spreads, caplet vols).
    pub fn table1() -> MarketSnapshot {
        parse_snapshot_csv(BUNDLED_TABLE1).expect("bundled market data is valid")
    }

    fn from_rows(
        valuation_date: Option<NaiveDate>,
        rows: Vec<(usize, SnapshotRow)>,
    ) -> Result<MarketSnapshot> {
        let mut buckets: [Vec<CurvePoint>; 3] = Default::default();
        let mut warnings = Vec::new();
        for (line, row) in rows {
            let kind = CurveKind::from_file_tag(&row.kind).ok_or_else(|| Error::Parse {
                line,
                field: "kind".into(),
                message: format!("unknown curve kind `{}`", row.kind),
            })?;
            if !row.value.is_finite() {
                return Err(Error::Parse {
                    line,
                    field: "value".into(),
                    message: "value is not finite".into(),
                });
            }
            if kind == CurveKind::Interest && row.value < 0.0 {
                warnings.push(format!(
                    "line {line}: negative interest rate {} at {} days",
                    row.value, row.term_days
                ));
            }
            let slot = match kind {
                CurveKind::Interest => 0,
                CurveKind::CreditSpread => 1,
                CurveKind::CapletVol => 2,
            };
            buckets[slot].push(CurvePoint::new(row.term_days, row.value));
        }
        let [interest, credit, caplet] = buckets;
        let build = |kind: CurveKind, pts: Vec<CurvePoint>| -> Result<Curve> {
            if pts.is_empty() {
                return Err(Error::Schema(format!("missing `{}` section", kind.file_tag())));
            }
            build_curve(kind, pts)
        };
        Ok(MarketSnapshot {
            valuation_date,
            discount_curve: build(CurveKind::Interest, interest)?,
            credit_curve: build(CurveKind::CreditSpread, credit)?,
            caplet_curve: build(CurveKind::CapletVol, caplet)?,
            warnings,
        })
    }

    fn rows(&self) -> Vec<SnapshotRow> {
        [&self.discount_curve, &self.credit_curve, &self.caplet_curve]
            .into_iter()
            .flat_map(|c| {
                c.points().iter().map(|p| SnapshotRow {
                    kind: c.kind().file_tag().to_string(),
                    term_days: p.term_days,
                    value: p.value,
                })
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        if let Some(date) = self.valuation_date {
            out.push_str(&format!("# valuation_date={date}\n"));
        }
        out.push_str("kind,term_days,value\n");
        for row in self.rows() {
            out.push_str(&format!("{},{},{}\n", row.kind, row.term_days, row.value));
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = SnapshotJson {
            valuation_date: self.valuation_date,
            points: self.rows(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }
}

/// Parses the CSV snapshot format: header `kind,term_days,value`, optional
/// `# valuation_date=YYYY-MM-DD` comment line.
pub fn parse_snapshot_csv(text: &str) -> Result<MarketSnapshot> {
    let mut valuation_date = None;
    let mut header_seen = false;
    let mut rows = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(comment) = trimmed.strip_prefix('#') {
            if let Some(date) = comment.trim().strip_prefix("valuation_date=") {
                let parsed = NaiveDate::parse_from_str(date.trim(), "%Y-%m-%d").map_err(|e| {
                    Error::Parse {
                        line,
                        field: "valuation_date".into(),
                        message: e.to_string(),
                    }
                })?;
                valuation_date = Some(parsed);
            }
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if !header_seen {
            if fields != ["kind", "term_days", "value"] {
                return Err(Error::Schema(format!(
                    "line {line}: expected header `kind,term_days,value`, found `{trimmed}`"
                )));
            }
            header_seen = true;
            continue;
        }
        if fields.len() != 3 {
            return Err(Error::Parse {
                line,
                field: "row".into(),
                message: format!("expected 3 fields, found {}", fields.len()),
            });
        }
        let term_days = fields[1].parse::<u32>().map_err(|e| Error::Parse {
            line,
            field: "term_days".into(),
            message: e.to_string(),
        })?;
        let value = fields[2].parse::<f64>().map_err(|e| Error::Parse {
            line,
            field: "value".into(),
            message: e.to_string(),
        })?;
        rows.push((
            line,
            SnapshotRow {
                kind: fields[0].to_string(),
                term_days,
                value,
            },
        ));
    }
    if !header_seen {
        return Err(Error::Schema("missing header `kind,term_days,value`".into()));
    }
    MarketSnapshot::from_rows(valuation_date, rows)
}

pub fn parse_snapshot_json(text: &str) -> Result<MarketSnapshot> {
    let doc: SnapshotJson = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        field: "json".into(),
        message: e.to_string(),
    })?;
    let rows = doc
        .points
        .into_iter()
        .enumerate()
        .map(|(i, r)| (i + 1, r))
        .collect();
    MarketSnapshot::from_rows(doc.valuation_date, rows)
}

/// Loads a snapshot; `.json` files use the JSON layout, everything else CSV.
pub fn load_snapshot(path: impl AsRef<Path>) -> Result<MarketSnapshot> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("json") => parse_snapshot_json(&text),
        _ => parse_snapshot_csv(&text),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn flat(kind: CurveKind, v: f64) -> Curve {
        build_curve(kind, vec![CurvePoint::new(30, v), CurvePoint::new(3650, v)]).unwrap()
    }

    #[test]
    fn table1_interest_row_builds() {
        let snap = MarketSnapshot::table1();
        assert_eq!(snap.discount_curve.points().len(), 11);
        assert_eq!(snap.discount_curve.points()[0], CurvePoint::new(31, 0.0028));
        assert_eq!(snap.discount_curve.points()[10], CurvePoint::new(5475, 0.0405));
    }

    #[test]
    fn single_point_is_rejected() {
        let err = build_curve(CurveKind::Interest, vec![CurvePoint::new(31, 0.01)]).unwrap_err();
        assert!(matches!(err, Error::EmptyCurve(1)));
    }

    #[test]
    fn unsorted_terms_are_rejected() {
        let err = build_curve(
            CurveKind::Interest,
            vec![CurvePoint::new(91, 0.01), CurvePoint::new(31, 0.01)],
        )
        .unwrap_err();
        assert!(matches!(err, Error::NonMonotoneTerms { prev: 91, next: 31 }));
    }

    #[test]
    fn discount_identity_and_flat_rate() {
        let c = flat(CurveKind::Interest, 0.05);
        assert_eq!(c.discount_factor(0.0, 0.0).unwrap(), 1.0);
        assert_abs_diff_eq!(c.discount_factor(0.0, 1.0).unwrap(), 0.951229424500714, epsilon = 1e-12);
        assert_abs_diff_eq!(c.discount_factor(2.0, 3.0).unwrap(), (-0.05f64).exp(), epsilon = 1e-14);
    }

    #[test]
    fn discount_at_node_uses_node_rate() {
        let c = MarketSnapshot::table1().discount_curve;
        // 365 days is a node, so the zero rate is read directly.
        let expected = (-0.0043f64 * 1.0).exp();
        assert_abs_diff_eq!(c.discount_factor(0.0, 1.0).unwrap(), expected, epsilon = 1e-15);
    }

    #[test]
    fn spread_lookup_and_shift() {
        let c = MarketSnapshot::table1().credit_curve;
        assert_abs_diff_eq!(c.spread_at(5.0, 0.0).unwrap(), 0.0070, epsilon = 1e-15);
        assert_abs_diff_eq!(c.spread_at(5.0, 200.0).unwrap(), 0.0270, epsilon = 1e-15);
        assert_eq!(c.spread_at(1.0, 0.0).unwrap(), 0.0045);
    }

    #[test]
    fn wrong_kind_is_rejected() {
        let snap = MarketSnapshot::table1();
        assert!(matches!(
            snap.discount_curve.spread_at(1.0, 0.0),
            Err(Error::WrongCurveKind { .. })
        ));
        assert!(matches!(
            snap.credit_curve.discount_factor(0.0, 1.0),
            Err(Error::WrongCurveKind { .. })
        ));
    }

    #[test]
    fn extrapolation_can_be_disabled() {
        let c = flat(CurveKind::Interest, 0.02).with_extrapolation(false);
        assert!(matches!(c.discount_factor(0.0, 20.0), Err(Error::OutOfRangeTerm(_))));
        let c = flat(CurveKind::Interest, 0.02);
        assert_abs_diff_eq!(c.discount_factor(0.0, 20.0).unwrap(), (-0.4f64).exp(), epsilon = 1e-14);
    }

    #[test]
    fn missing_caplet_section_is_schema_error() {
        let text = "kind,term_days,value\ninterest,31,0.01\ninterest,91,0.01\ncredit,31,0.01\ncredit,91,0.01\n";
        assert!(matches!(parse_snapshot_csv(text), Err(Error::Schema(_))));
    }

    #[test]
    fn bad_number_reports_line_and_field() {
        let text = "kind,term_days,value\ninterest,31,abc\n";
        match parse_snapshot_csv(text) {
            Err(Error::Parse { line, field, .. }) => {
                assert_eq!(line, 2);
                assert_eq!(field, "value");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn negative_rate_is_kept_and_flagged() {
        let text = BUNDLED_TABLE1.replace("interest,31,0.0028", "interest,31,-0.0015");
        let snap = parse_snapshot_csv(&text).unwrap();
        assert_eq!(snap.discount_curve.points()[0].value, -0.0015);
        assert_eq!(snap.warnings.len(), 1);
        let again = parse_snapshot_csv(&snap.to_csv()).unwrap();
        assert_eq!(again.discount_curve.points()[0].value, -0.0015);
    }
}
