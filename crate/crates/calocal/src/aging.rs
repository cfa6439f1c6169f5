//! Synthetic aging: dose-linear per-cell response coefficients, damage
//! application, and cell-level calibration.
//!
//! A coefficient `a_i` is the response ratio damaged/undamaged in (0, 1];
//! `a_i = 1` means the cell is unaffected. The reciprocal `A_i = 1/a_i` is
//! exposed read-only for the inverse convention.

use crate::error::{Error, Result};
use crate::sim::{DetectorGeometry, EventSet};

/// Per-cell response-ratio coefficients, row-major over the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct AgingProfile {
    geometry: DetectorGeometry,
    a: Vec<f64>,
}

impl AgingProfile {
    pub fn new(geometry: DetectorGeometry, a: Vec<f64>) -> Result<Self> {
        if a.len() != geometry.n_cells() {
            return Err(Error::Shape(format!(
                "profile has {} cells, geometry needs {}",
                a.len(),
                geometry.n_cells()
            )));
        }
        if let Some(i) = a.iter().position(|v| !v.is_finite() || *v <= 0.0 || *v > 1.0) {
            return Err(Error::InvalidArgument(format!(
                "coefficient at flat index {i} is {}; must lie in (0, 1]",
                a[i]
            )));
        }
        Ok(Self { geometry, a })
    }

    #[inline]
    pub fn geometry(&self) -> &DetectorGeometry {
        &self.geometry
    }

    /// Response ratios `a_i` (damaged / undamaged).
    #[inline]
    pub fn a(&self) -> &[f64] {
        &self.a
    }

    /// Reciprocal convention `A_i = 1 / a_i`.
    pub fn big_a(&self) -> Vec<f64> {
        self.a.iter().map(|v| 1.0 / v).collect()
    }
}

/// Builds a dose-linear profile: `a_i = max(1 - k * D_i / max(D), a_min)`.
/// The hottest cell receives the smallest coefficient.
pub fn make_linear_profile(
    geom: &DetectorGeometry,
    dose: &[f64],
    k: f64,
    a_min: f64,
) -> Result<AgingProfile> {
    if dose.len() != geom.n_cells() {
        return Err(Error::Shape(format!(
            "dose has {} cells, geometry needs {}",
            dose.len(),
            geom.n_cells()
        )));
    }
    if let Some(i) = dose.iter().position(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::InvalidArgument(format!(
            "dose at flat index {i} is {}; must be finite and >= 0",
            dose[i]
        )));
    }
    if !(0.0..1.0).contains(&k) {
        return Err(Error::InvalidArgument(format!(
            "slope must lie in [0, 1), got {k}"
        )));
    }
    if !(a_min > 0.0 && a_min <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "floor must lie in (0, 1], got {a_min}"
        )));
    }
    let max_dose = dose.iter().cloned().fold(0.0f64, f64::max);
    if max_dose <= 0.0 {
        return Err(Error::InvalidArgument(
            "dose map is all zero; no cell ever saw energy".into(),
        ));
    }
    let a = dose
        .iter()
        .map(|&d| (1.0 - k * d / max_dose).max(a_min))
        .collect();
    AgingProfile::new(*geom, a)
}

/// Scales every cell of every event by its coefficient: the damaged readout.
pub fn apply_damage(e: &EventSet, p: &AgingProfile) -> Result<EventSet> {
    if !p.geometry().same_grid(e.geometry()) {
        return Err(Error::Shape(format!(
            "profile grid {}x{} does not match event grid {}x{}",
            p.geometry().n_rows,
            p.geometry().n_cols,
            e.geometry().n_rows,
            e.geometry().n_cols
        )));
    }
    let n_cells = e.geometry().n_cells();
    let damaged = e
        .raw()
        .iter()
        .enumerate()
        .map(|(i, v)| v * p.a[i % n_cells])
        .collect();
    e.with_events(damaged)
}

/// Divides every cell by its coefficient: cell-level calibration.
pub fn calibrate(e: &EventSet, coeffs: &[f64]) -> Result<EventSet> {
    let n_cells = e.geometry().n_cells();
    if coeffs.len() != n_cells {
        return Err(Error::Shape(format!(
            "got {} coefficients, event grid needs {n_cells}",
            coeffs.len()
        )));
    }
    if let Some(i) = coeffs.iter().position(|v| !v.is_finite() || *v <= 0.0) {
        let (r, c) = (i / e.geometry().n_cols, i % e.geometry().n_cols);
        return Err(Error::InvalidArgument(format!(
            "coefficient for cell ({r},{c}) is {}; must be finite and > 0",
            coeffs[i]
        )));
    }
    let calibrated = e
        .raw()
        .iter()
        .enumerate()
        .map(|(i, v)| v / coeffs[i % n_cells])
        .collect();
    e.with_events(calibrated)
}
