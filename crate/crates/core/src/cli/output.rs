//! CSV emission: header row, LF endings, floats at 17 significant digits.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Float)
    }
}

/// `{:.16e}` round-trips every finite double.
pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v:.16e}")
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(f) => format_float(*f),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }
}

pub fn write_csv<W: Write>(out: W, header: &[&str], rows: &[Vec<Cell>]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e.to_string()));
    w.write_record(header).map_err(csv_err)?;
    for (i, row) in rows.iter().enumerate() {
        if row.len() != header.len() {
            return Err(Error::input(format!(
                "csv row {i} has {} cells, schema has {}",
                row.len(),
                header.len()
            )));
        }
        w.write_record(row.iter().map(Cell::render))
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(path: &Path, header: &[&str], rows: &[Vec<Cell>]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    write_csv(File::create(path)?, header, rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn render(header: &[&str], rows: &[Vec<Cell>]) -> String {
        let mut buf = Vec::new();
        write_csv(&mut buf, header, rows).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn header_only() {
        assert_eq!(render(&["n", "ratio"], &[]), "n,ratio\n");
    }

    #[test]
    fn rows_and_quoting() {
        let s = render(
            &["u1", "tol", "iterations", "cpu_seconds", "limit"],
            &[vec![
                2.0.into(),
                1e-6.into(),
                2usize.into(),
                0.5.into(),
                (-1.0).into(),
            ]],
        );
        assert_eq!(
            s,
            "u1,tol,iterations,cpu_seconds,limit\n\
             2.0000000000000000e0,9.9999999999999995e-7,2,5.0000000000000000e-1,-1.0000000000000000e0\n"
        );
        let s = render(&["a"], &[vec!["x,y".into()]]);
        assert_eq!(s, "a\n\"x,y\"\n");
    }

    #[test]
    fn schema_mismatch() {
        let mut buf = Vec::new();
        assert!(write_csv(&mut buf, &["a", "b"], &[vec![1.0.into()]]).is_err());
    }

    proptest! {
        #[test]
        fn floats_round_trip(v in prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO) {
            let back: f64 = format_float(v).parse().unwrap();
            prop_assert_eq!(back.to_bits(), v.to_bits());
        }
    }
}
