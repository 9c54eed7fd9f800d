use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const HASH_PREFIX: &str = "# config_hash=";

/// How the plain-text summary lays out a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    /// One line per row.
    Rows,
    /// One column per row, matching tables that list scenarios across the page.
    Columns,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub inputs: Vec<String>,
    pub values: Vec<f64>,
}

/// A table of scenario points: text input columns followed by numeric
/// output columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub name: String,
    pub title: String,
    pub config_hash: String,
    pub input_columns: Vec<String>,
    pub value_columns: Vec<String>,
    pub rows: Vec<ReportRow>,
    pub layout: Layout,
}

impl Report {
    pub fn new(
        name: &str,
        title: &str,
        config_hash: &str,
        input_columns: &[&str],
        value_columns: &[&str],
        layout: Layout,
    ) -> Self {
        Self {
            name: name.into(),
            title: title.into(),
            config_hash: config_hash.into(),
            input_columns: input_columns.iter().map(|s| s.to_string()).collect(),
            value_columns: value_columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
            layout,
        }
    }

    pub fn push(&mut self, inputs: Vec<String>, values: Vec<f64>) {
        debug_assert_eq!(inputs.len(), self.input_columns.len());
        debug_assert_eq!(values.len(), self.value_columns.len());
        self.rows.push(ReportRow { inputs, values });
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.value_columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r.values[k]).collect())
    }

    /// CSV with a leading `# config_hash=` comment. Numbers use the shortest
    /// representation that parses back to the same `f64`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(self.input_columns.iter().chain(&self.value_columns))?;
        for row in &self.rows {
            let values = row.values.iter().map(|v| v.to_string());
            w.write_record(row.inputs.iter().cloned().chain(values))?;
        }
        let body = String::from_utf8(w.into_inner().map_err(|e| e.into_error())?)
            .expect("csv output is utf-8");
        Ok(format!("{HASH_PREFIX}{}\n{body}", self.config_hash))
    }

    pub fn summary(&self) -> String {
        let fmt = |v: f64| {
            if v == 0.0 || (1e-3..1e4).contains(&v.abs()) {
                format!("{v:.6}")
            } else {
                format!("{v:.4e}")
            }
        };
        let mut grid: Vec<Vec<String>> = Vec::new();
        let header: Vec<String> = self.input_columns.iter().chain(&self.value_columns).cloned().collect();
        grid.push(header);
        for row in &self.rows {
            grid.push(row.inputs.iter().cloned().chain(row.values.iter().map(|v| fmt(*v))).collect());
        }
        if self.layout == Layout::Columns {
            let cols = grid[0].len();
            grid = (0..cols).map(|c| grid.iter().map(|r| r[c].clone()).collect()).collect();
        }
        let widths: Vec<usize> = (0..grid[0].len())
            .map(|c| grid.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.title);
        let _ = writeln!(out, "config hash: {}", self.config_hash);
        let _ = writeln!(out);
        for (i, row) in grid.iter().enumerate() {
            let line: Vec<String> = row
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(c, (cell, w))| if c == 0 { format!("{cell:<w$}") } else { format!("{cell:>w$}") })
                .collect();
            let _ = writeln!(out, "{}", line.join("  ").trim_end());
            if i == 0 && self.layout == Layout::Rows {
                let total: usize = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
                let _ = writeln!(out, "{}", "-".repeat(total));
            }
        }
        out
    }
}

/// Writes `<name>.csv` and `<name>.txt` for each report into `dir`.
/// Nothing is written when there is nothing to report.
pub fn emit_report(reports: &[Report], dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    if reports.is_empty() {
        return Err(Error::EmptyResults("no reports".into()));
    }
    if let Some(r) = reports.iter().find(|r| r.rows.is_empty()) {
        return Err(Error::EmptyResults(format!("report `{}` has no rows", r.name)));
    }
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for r in reports {
        let csv_path = dir.join(format!("{}.csv", r.name));
        fs::write(&csv_path, r.to_csv()?)?;
        let txt_path = dir.join(format!("{}.txt", r.name));
        fs::write(&txt_path, r.summary())?;
        written.push(csv_path);
        written.push(txt_path);
    }
    Ok(written)
}

/// Parses a CSV written by [`Report::to_csv`]. Columns that parse as
/// numbers in every row are treated as values; the leading run of columns
/// that do not are inputs.
pub fn parse_report_csv(name: &str, text: &str) -> Result<Report> {
    let mut lines = text.splitn(2, '\n');
    let first = lines.next().unwrap_or_default();
    let hash = first
        .strip_prefix(HASH_PREFIX)
        .ok_or_else(|| Error::Schema("missing config hash line".into()))?
        .trim()
        .to_string();
    let body = lines.next().unwrap_or_default();
    let mut rdr = csv::Reader::from_reader(body.as_bytes());
    let header: Vec<String> = rdr.headers()?.iter().map(String::from).collect();
    let records: Vec<csv::StringRecord> = rdr.records().collect::<std::result::Result<_, _>>()?;
    let numeric = |c: usize| records.iter().all(|r| r[c].parse::<f64>().is_ok());
    let n_inputs = if records.is_empty() {
        0
    } else {
        (0..header.len()).take_while(|&c| !numeric(c)).count()
    };
    let mut report = Report {
        name: name.into(),
        title: name.into(),
        config_hash: hash,
        input_columns: header[..n_inputs].to_vec(),
        value_columns: header[n_inputs..].to_vec(),
        rows: Vec::new(),
        layout: Layout::Rows,
    };
    for (line, rec) in records.iter().enumerate() {
        let inputs = (0..n_inputs).map(|c| rec[c].to_string()).collect();
        let values = (n_inputs..header.len())
            .map(|c| {
                rec[c].parse::<f64>().map_err(|e| Error::Parse {
                    line: line + 3,
                    field: header[c].clone(),
                    message: e.to_string(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        report.rows.push(ReportRow { inputs, values });
    }
    Ok(report)
}
