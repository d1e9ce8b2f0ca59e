use std::path::Path;

use crate::error::{CliError, Result};

/// Scientific notation with five significant digits and a signed two-digit
/// exponent, e.g. `3.0057e-04`.
pub fn fmt_sci(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string().to_lowercase();
    }
    let s = format!("{x:.4e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

/// Coarse mesh size as it appears in the tables, `1/n`.
pub fn fmt_h(coarse_n: usize) -> String {
    format!("1/{coarse_n}")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvTable {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    /// Panics when the row width differs from the header; tables are built
    /// by code, so that is a programming error.
    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "csv row width");
        self.rows.push(row);
    }

    pub fn header(&self) -> &[String] {
        &self.header
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn to_text(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }

    /// Reads back a table written by `to_text`.
    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Vec<String> = lines
            .next()
            .ok_or("empty table")?
            .split(',')
            .map(|s| s.trim().to_string())
            .collect();
        let mut rows = Vec::new();
        for (i, l) in lines.enumerate() {
            let row: Vec<String> = l.split(',').map(|s| s.trim().to_string()).collect();
            if row.len() != header.len() {
                return Err(format!("row {} has {} columns, header has {}", i + 1, row.len(), header.len()));
            }
            rows.push(row);
        }
        Ok(Self { header, rows })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(CliError::io(format!("writing {}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_style_numbers() {
        assert_eq!(fmt_sci(3.0057e-4), "3.0057e-04");
        assert_eq!(fmt_sci(3.157), "3.1570e+00");
        assert_eq!(fmt_sci(-12345.678), "-1.2346e+04");
        assert_eq!(fmt_sci(0.0), "0.0000e+00");
        assert_eq!(fmt_sci(1.5e-120), "1.5000e-120");
        assert_eq!(fmt_sci(f64::NAN), "nan");
    }

    #[test]
    fn round_trip() {
        let mut t = CsvTable::new(&["a", "b"]);
        t.push(vec!["1".into(), fmt_sci(0.5)]);
        assert_eq!(CsvTable::parse(&t.to_text()).unwrap(), t);
        assert!(CsvTable::parse("a,b\n1\n").is_err());
    }

    #[test]
    #[should_panic(expected = "csv row width")]
    fn ragged_rows_are_rejected() {
        CsvTable::new(&["a", "b"]).push(vec!["1".into()]);
    }
}
