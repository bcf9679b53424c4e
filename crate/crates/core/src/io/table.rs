// SPDX-License-Identifier: Apache-2.0

//! Tab-delimited text tables with `#` comment lines and a column header.
//!
//! Values are written in Rust's shortest round-trip form, so parsing what was
//! printed gives back identical `f64`s.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::fitting::{Dataset, DatasetKind};
use crate::units::{mhz_to_gamma, Unit};

/// Header comment recording tool version, configuration hash and preset.
pub fn provenance(config_hash: &str, preset: &str) -> String {
    format!("eitlab {} config={config_hash} preset={preset}", env!("CARGO_PKG_VERSION"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// Comment lines without the leading `# `.
    pub comments: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            comments: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn with_comment(mut self, comment: impl Into<String>) -> Self {
        self.comments.push(comment.into());
        self
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.comments {
            let _ = writeln!(out, "# {c}");
        }
        let _ = writeln!(out, "{}", self.columns.join("\t"));
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(out, "{}", cells.join("\t"));
        }
        out
    }

    /// Parses a table; cells may be separated by tabs, commas or spaces.
    pub fn parse(text: &str, source_name: &str) -> Result<Self> {
        let error = |line: usize, column: Option<usize>, message: String| Error::Input {
            source_name: source_name.to_string(),
            line: Some(line),
            column,
            message,
        };
        let mut table = Table {
            comments: Vec::new(),
            columns: Vec::new(),
            rows: Vec::new(),
        };
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let trimmed = raw.trim();
            if let Some(comment) = trimmed.strip_prefix('#') {
                table.comments.push(comment.trim_start().to_string());
                continue;
            }
            if trimmed.is_empty() {
                continue;
            }
            let cells = split_cells(raw);
            if table.columns.is_empty() {
                table.columns = cells.into_iter().map(|(_, c)| c.to_string()).collect();
                continue;
            }
            if cells.len() != table.columns.len() {
                return Err(error(
                    line_no,
                    None,
                    format!("expected {} columns, found {}", table.columns.len(), cells.len()),
                ));
            }
            let row = cells
                .into_iter()
                .map(|(col, cell)| {
                    cell.parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| error(line_no, Some(col), format!("`{cell}` is not a finite number")))
                })
                .collect::<Result<Vec<f64>>>()?;
            table.rows.push(row);
        }
        if table.columns.is_empty() {
            return Err(error(1, None, "missing column header".into()));
        }
        Ok(table)
    }
}

/// Cells with their 1-based character columns.
fn split_cells(line: &str) -> Vec<(usize, &str)> {
    let mut cells = Vec::new();
    let mut start = None;
    for (i, ch) in line.char_indices() {
        let separator = ch == '\t' || ch == ',' || ch.is_whitespace();
        match (separator, start) {
            (true, Some(s)) => {
                cells.push((s, &line[s..i]));
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        cells.push((s, &line[s..]));
    }
    cells
        .into_iter()
        .map(|(s, c)| (line[..s].chars().count() + 1, c))
        .collect()
}

pub const DETUNING_MHZ: &str = "detuning[MHz]";
pub const DETUNING_GAMMA3: &str = "detuning[gamma3]";
pub const TRANSMISSION: &str = "transmission";
pub const WEIGHT: &str = "weight";

/// Measured or modelled transmission against probe detuning.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumFile {
    pub comments: Vec<String>,
    /// Unit of `detuning`: MHz or Gamma3.
    pub unit: Unit,
    pub detuning: Vec<f64>,
    pub transmission: Vec<f64>,
    pub weight: Option<Vec<f64>>,
}

impl SpectrumFile {
    pub fn to_table(&self) -> Table {
        let detuning = if self.unit == Unit::MHz { DETUNING_MHZ } else { DETUNING_GAMMA3 };
        let mut columns = vec![detuning, TRANSMISSION];
        if self.weight.is_some() {
            columns.push(WEIGHT);
        }
        let mut table = Table::new(&columns);
        table.comments = self.comments.clone();
        for i in 0..self.detuning.len() {
            let mut row = vec![self.detuning[i], self.transmission[i]];
            if let Some(w) = &self.weight {
                row.push(w[i]);
            }
            table.push(row);
        }
        table
    }

    pub fn render(&self) -> String {
        self.to_table().render()
    }

    pub fn parse(text: &str, source_name: &str) -> Result<Self> {
        let table = Table::parse(text, source_name)?;
        let header_error = |message: String| Error::Input {
            source_name: source_name.to_string(),
            line: None,
            column: None,
            message,
        };
        let unit = match table.columns.first().map(String::as_str) {
            Some(DETUNING_MHZ) => Unit::MHz,
            Some(DETUNING_GAMMA3) => Unit::Gamma3,
            other => {
                return Err(header_error(format!(
                    "first column must be `{DETUNING_MHZ}` or `{DETUNING_GAMMA3}`, found {other:?}"
                )))
            }
        };
        if table.columns.get(1).map(String::as_str) != Some(TRANSMISSION) {
            return Err(header_error(format!("second column must be `{TRANSMISSION}`")));
        }
        let weight = match table.columns.get(2).map(String::as_str) {
            None => None,
            Some(WEIGHT) if table.columns.len() == 3 => table.column(WEIGHT),
            Some(_) => return Err(header_error(format!("only an optional third `{WEIGHT}` column is allowed"))),
        };
        Ok(Self {
            detuning: table.column(&table.columns[0]).unwrap_or_default(),
            transmission: table.column(TRANSMISSION).unwrap_or_default(),
            weight,
            unit,
            comments: table.comments,
        })
    }

    /// Converts to a fit dataset with detunings in Gamma3 units.
    pub fn to_dataset(&self, kind: DatasetKind, gamma3: f64) -> Result<Dataset> {
        let detuning = match self.unit {
            Unit::MHz => self.detuning.iter().map(|&d| mhz_to_gamma(d, gamma3)).collect(),
            _ => self.detuning.clone(),
        };
        Dataset::new(kind, detuning, self.transmission.clone(), self.weight.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SpectrumFile {
        SpectrumFile {
            comments: vec![provenance("0123456789abcdef", "fig2")],
            unit: Unit::MHz,
            detuning: vec![-22.8, 0.1 + 0.2, 1.0 / 3.0, 5e-310],
            transmission: vec![0.999_999_999_999_9, 5.004e-4, std::f64::consts::FRAC_1_SQRT_2, 1.0],
            weight: Some(vec![1.0, 0.0, 2.5, 1.0]),
        }
    }

    #[test]
    fn round_trip_is_bitwise() {
        let s = sample();
        let back = SpectrumFile::parse(&s.render(), "mem").unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn provenance_header_comes_first() {
        let text = sample().render();
        assert!(text.starts_with("# eitlab "));
        assert!(text.lines().nth(1).unwrap().starts_with(DETUNING_MHZ));
    }

    #[test]
    fn bad_cell_is_located() {
        let text = "detuning[MHz]\ttransmission\n1.0\t0.5\n2.0\tabc\n";
        match SpectrumFile::parse(text, "data.tsv").unwrap_err() {
            Error::Input { line, column, ref message, .. } => {
                assert_eq!((line, column), (Some(3), Some(5)));
                assert!(message.contains("abc"));
            }
            other => panic!("{other:?}"),
        }
        let shown = SpectrumFile::parse(text, "data.tsv").unwrap_err().to_string();
        assert!(shown.starts_with("data.tsv:3:5"), "{shown}");
    }

    #[test]
    fn ragged_row_is_rejected() {
        let text = "detuning[MHz] transmission\n1.0 0.5 0.3\n";
        assert!(SpectrumFile::parse(text, "x").is_err());
    }

    #[test]
    fn header_is_checked() {
        assert!(SpectrumFile::parse("freq\ttransmission\n1\t1\n", "x").is_err());
        assert!(SpectrumFile::parse("detuning[MHz],transmission\n1,1\n", "x").is_ok());
    }
}
