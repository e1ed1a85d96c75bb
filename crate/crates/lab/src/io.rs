//! CSV and JSON report writers.
//!
//! Every CSV row ends with the `config_hash` column. Floats are printed in
//! scientific notation with 17 significant digits and round-trip exactly.

use std::path::{Path, PathBuf};

use obstacle_core::grid::Grid;
use serde::Serialize;

use crate::{LabError, Result};

/// `x` with 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Empty cell for `None`.
pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// A CSV file assembled in memory and written on [`Csv::finish`].
#[derive(Debug)]
pub struct Csv {
    path: PathBuf,
    hash: String,
    columns: usize,
    text: String,
}

impl Csv {
    pub fn new(path: impl Into<PathBuf>, header: &[&str], hash: &str) -> Self {
        let mut text = header.join(",");
        text.push_str(",config_hash\n");
        Csv {
            path: path.into(),
            hash: hash.to_string(),
            columns: header.len(),
            text,
        }
    }

    pub fn row(&mut self, cells: &[String]) {
        assert_eq!(cells.len(), self.columns, "row width does not match the header of {}", self.path.display());
        for c in cells {
            self.text.push_str(c);
            self.text.push(',');
        }
        self.text.push_str(&self.hash);
        self.text.push('\n');
    }

    pub fn finish(self) -> Result<PathBuf> {
        std::fs::write(&self.path, self.text).map_err(|e| LabError::io(&self.path, e))?;
        Ok(self.path)
    }
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| LabError::io(path, e))
}

pub fn ensure_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| LabError::io(path, e))
}

/// Reads boundary values from a CSV with columns `i,j[,k],...,u,...`:
/// the index columns name the node, `u` its value. Every boundary node
/// must be given; other rows are ignored.
pub fn read_boundary_values<const D: usize>(path: &Path, grid: &Grid<D>) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
    let bad = |msg: String| LabError::Config(format!("{}: {msg}", path.display()));
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<&str> = lines.next().ok_or_else(|| bad("empty file".into()))?.split(',').map(str::trim).collect();
    let names = ["i", "j", "k"];
    let index_cols: Vec<usize> = names[..D]
        .iter()
        .map(|n| header.iter().position(|h| h == n).ok_or_else(|| bad(format!("missing column `{n}`"))))
        .collect::<Result<_>>()?;
    let u_col = header.iter().position(|h| *h == "u").ok_or_else(|| bad("missing column `u`".into()))?;
    let mut values = vec![f64::NAN; grid.len()];
    for (line_no, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        let parse_index = |c: usize| -> Result<usize> {
            let v: usize = cells
                .get(c)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| bad(format!("row {}: bad index", line_no + 2)))?;
            if v >= grid.nodes_per_axis {
                return Err(bad(format!("row {}: index {v} outside the grid", line_no + 2)));
            }
            Ok(v)
        };
        let mut coords = [0usize; D];
        for (k, &c) in index_cols.iter().enumerate() {
            coords[k] = parse_index(c)?;
        }
        let u: f64 = cells
            .get(u_col)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad(format!("row {}: bad value", line_no + 2)))?;
        values[grid.index(&coords)] = u;
    }
    for i in 0..grid.len() {
        if grid.is_boundary(i) && values[i].is_nan() {
            return Err(bad(format!("no value for boundary node {:?}", grid.coords(i))));
        }
        if !grid.is_boundary(i) {
            values[i] = 0.0;
        }
    }
    Ok(values)
}

/// Header of the solution dump: `i,j[,k],x,y[,z],u,active`.
pub fn solution_header(dimension: usize) -> Vec<&'static str> {
    let mut h: Vec<&str> = ["i", "j", "k"][..dimension].to_vec();
    h.extend(&["x", "y", "z"][..dimension]);
    h.extend(["u", "active"]);
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, std::f64::consts::PI / 16.0, 1e-300, -2.5e17] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(0.5), "5.0000000000000000e-1");
    }

    #[test]
    fn csv_rows_carry_the_hash() {
        let dir = tempfile::tempdir().unwrap();
        let mut csv = Csv::new(dir.path().join("t.csv"), &["r", "phi"], "abc");
        csv.row(&[num(0.5), opt(None)]);
        let path = csv.finish().unwrap();
        let text = std::fs::read_to_string(path).unwrap();
        assert_eq!(text, "r,phi,config_hash\n5.0000000000000000e-1,,abc\n");
    }

    #[test]
    fn boundary_values_need_every_boundary_node() {
        let dir = tempfile::tempdir().unwrap();
        let grid = Grid::<2>::unit_box(17).unwrap();
        let path = dir.path().join("b.csv");
        let mut text = String::from("i,j,u\n");
        for i in 0..grid.len() {
            if grid.is_boundary(i) {
                let c = grid.coords(i);
                text.push_str(&format!("{},{},{}\n", c[0], c[1], 0.25));
            }
        }
        std::fs::write(&path, &text).unwrap();
        let v = read_boundary_values(&path, &grid).unwrap();
        assert_eq!(v[0], 0.25);
        assert_eq!(v[grid.index(&[8, 8])], 0.0);
        let truncated: String = text.lines().take(10).map(|l| format!("{l}\n")).collect();
        std::fs::write(&path, truncated).unwrap();
        assert!(read_boundary_values(&path, &grid).unwrap_err().to_string().contains("no value"));
    }
}
