//! Minimal CSV dialect: comma separated, header row, LF endings, reals with 17
//! significant digits so that every value reads back to the same bits.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Real(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    fn render(&self, out: &mut String) {
        match self {
            Cell::Real(v) => write!(out, "{}", format_real(*v)),
            Cell::Int(v) => write!(out, "{v}"),
            Cell::Text(s) => write!(out, "{s}"),
        }
        .expect("writing to a String cannot fail");
    }
}

pub fn format_real(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            for (i, cell) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                cell.render(&mut out);
            }
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        fs::write(path, self.render()).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }

    /// Reads text written by [`Table::render`]. Fields that parse as integers
    /// become `Int`, other numbers `Real`, the rest `Text`.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut lines = text.split_terminator('\n');
        let header = lines.next().ok_or_else(|| CliError::Io("empty CSV".into()))?;
        let header: Vec<String> = header.split(',').map(str::to_string).collect();
        let mut rows = Vec::new();
        for (n, line) in lines.enumerate() {
            let row: Vec<Cell> = line.split(',').map(parse_cell).collect();
            if row.len() != header.len() {
                return Err(CliError::Io(format!("CSV row {} has {} fields, expected {}", n + 1, row.len(), header.len())));
            }
            rows.push(row);
        }
        Ok(Self { header, rows })
    }

    pub fn column(&self, name: &str) -> Option<Vec<&Cell>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| &r[i]).collect())
    }

    pub fn real_column(&self, name: &str) -> Option<Vec<f64>> {
        self.column(name)?
            .into_iter()
            .map(|c| match c {
                Cell::Real(v) => Some(*v),
                Cell::Int(v) => Some(*v as f64),
                Cell::Text(_) => None,
            })
            .collect()
    }
}

fn parse_cell(field: &str) -> Cell {
    if let Ok(i) = field.parse::<i64>() {
        Cell::Int(i)
    } else if let Ok(v) = field.parse::<f64>() {
        Cell::Real(v)
    } else {
        Cell::Text(field.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reals_keep_seventeen_digits() {
        assert_eq!(format_real(0.1), "1.0000000000000001e-1");
        assert_eq!(format_real(-2.5), "-2.5000000000000000e0");
        assert_eq!(format_real(f64::NAN), "NaN");
        for v in [0.1, 1.0 / 3.0, 1e-300, -7.25e12, f64::MIN_POSITIVE, 0.0] {
            assert_eq!(format_real(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let mut t = Table::new(&["step", "branch", "lambda", "u_max"]);
        t.push(vec![Cell::Int(0), Cell::Text("lower".into()), Cell::Real(0.05), Cell::Real(1.0 / 7.0)]);
        t.push(vec![Cell::Int(-1), Cell::Text("upper".into()), Cell::Real(3.0), Cell::Real(f64::NAN)]);
        let text = t.render();
        assert!(text.ends_with('\n') && !text.contains('\r'));
        let back = Table::parse(&text).unwrap();
        assert_eq!(back.render(), text);
        assert_eq!(back.real_column("lambda").unwrap(), vec![0.05, 3.0]);
    }

    #[test]
    fn header_only_table() {
        let t = Table::new(&["a", "b"]);
        assert_eq!(t.render(), "a,b\n");
        assert!(Table::parse("a,b\n").unwrap().rows.is_empty());
    }

    #[test]
    fn ragged_rows_are_rejected() {
        assert!(Table::parse("a,b\n1\n").is_err());
    }
}
