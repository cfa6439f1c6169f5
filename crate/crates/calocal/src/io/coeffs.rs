//! Coefficient CSV format, shared by truth profiles and predictions.
//!
//! Header `row,col,a,A`, one line per cell in row-major order, values at
//! 9 significant digits. `A` is the reciprocal `1/a` and is derived on
//! write; readers ignore it.

use std::path::Path;

use super::atomic_write;
use crate::aging::AgingProfile;
use crate::error::{Error, Result};
use crate::sim::DetectorGeometry;

pub fn write_coefficients(path: &Path, geom: &DetectorGeometry, a: &[f64]) -> Result<()> {
    if a.len() != geom.n_cells() {
        return Err(Error::Shape(format!(
            "got {} coefficients for a {}x{} grid",
            a.len(),
            geom.n_rows,
            geom.n_cols
        )));
    }
    if let Some(i) = a.iter().position(|v| !v.is_finite() || *v <= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "coefficient at flat index {i} is {}; must be finite and > 0",
            a[i]
        )));
    }
    atomic_write(path, |w| {
        writeln!(w, "row,col,a,A")?;
        for (i, &v) in a.iter().enumerate() {
            writeln!(
                w,
                "{},{},{:.8e},{:.8e}",
                i / geom.n_cols,
                i % geom.n_cols,
                v,
                1.0 / v
            )?;
        }
        Ok(())
    })
}

/// Reads a coefficient CSV back as `(n_rows, n_cols, a)`. The grid must be
/// completely covered, each cell exactly once.
pub fn read_coefficients(path: &Path) -> Result<(usize, usize, Vec<f64>)> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == "row,col,a,A" => {}
        other => {
            return Err(Error::Format(format!(
                "{}: expected header \"row,col,a,A\", got {other:?}",
                path.display()
            )))
        }
    }
    let mut cells: Vec<(usize, usize, f64)> = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::Format(format!(
                "{}:{}: expected 4 fields, got {}",
                path.display(),
                lineno + 2,
                fields.len()
            )));
        }
        let parse_err = |what: &str| {
            Error::Format(format!(
                "{}:{}: cannot parse {what}",
                path.display(),
                lineno + 2
            ))
        };
        let row: usize = fields[0].trim().parse().map_err(|_| parse_err("row"))?;
        let col: usize = fields[1].trim().parse().map_err(|_| parse_err("col"))?;
        let a: f64 = fields[2].trim().parse().map_err(|_| parse_err("a"))?;
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::Format(format!(
                "{}:{}: coefficient {a} must be finite and > 0",
                path.display(),
                lineno + 2
            )));
        }
        cells.push((row, col, a));
    }
    if cells.is_empty() {
        return Err(Error::Format(format!("{}: no cells", path.display())));
    }
    let n_rows = cells.iter().map(|c| c.0).max().unwrap() + 1;
    let n_cols = cells.iter().map(|c| c.1).max().unwrap() + 1;
    if cells.len() != n_rows * n_cols {
        return Err(Error::Format(format!(
            "{}: {} cells do not cover a {n_rows}x{n_cols} grid",
            path.display(),
            cells.len()
        )));
    }
    let mut a = vec![f64::NAN; n_rows * n_cols];
    for (row, col, v) in cells {
        let idx = row * n_cols + col;
        if !a[idx].is_nan() {
            return Err(Error::Format(format!(
                "{}: cell ({row},{col}) appears more than once",
                path.display()
            )));
        }
        a[idx] = v;
    }
    if a.iter().any(|v| v.is_nan()) {
        return Err(Error::Format(format!(
            "{}: grid has missing cells",
            path.display()
        )));
    }
    Ok((n_rows, n_cols, a))
}

/// Reads a coefficient CSV as a validated [`AgingProfile`] (every value in
/// `(0, 1]`). Predictions can exceed 1; read those with
/// [`read_coefficients`] instead.
pub fn read_profile(path: &Path) -> Result<AgingProfile> {
    let (n_rows, n_cols, a) = read_coefficients(path)?;
    let geom = DetectorGeometry::new(n_rows, n_cols, DetectorGeometry::default().cell_pitch_mm)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    AgingProfile::new(geom, a).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}
