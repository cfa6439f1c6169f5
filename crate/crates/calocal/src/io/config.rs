//! Run configuration: a TOML document with `[detector]`, `[shower]`,
//! `[aging]`, `[train]` and `[metrics]` sections. Unknown keys are rejected;
//! missing keys take the documented defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::{DetectorGeometry, ShowerModel};
use crate::wgan::TrainConfig;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub detector: DetectorSection,
    pub shower: ShowerSection,
    pub aging: AgingSection,
    pub train: TrainConfig,
    pub metrics: MetricsSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorSection {
    pub n_rows: usize,
    pub n_cols: usize,
    pub cell_pitch_mm: f64,
}

impl Default for DetectorSection {
    fn default() -> Self {
        let g = DetectorGeometry::default();
        Self {
            n_rows: g.n_rows,
            n_cols: g.n_cols,
            cell_pitch_mm: g.cell_pitch_mm,
        }
    }
}

/// Shower model plus the simulation inputs (`n_events`, `beam_energy_gev`,
/// `seed`) the `simulate` command needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShowerSection {
    pub visible_fraction: f64,
    pub radius: f64,
    pub center_spread: f64,
    pub fluctuation_shape: f64,
    pub sparsity_threshold: f64,
    pub n_events: usize,
    pub beam_energy_gev: f64,
    pub seed: u64,
}

impl Default for ShowerSection {
    fn default() -> Self {
        let m = ShowerModel::default();
        Self {
            visible_fraction: m.visible_fraction,
            radius: m.radius,
            center_spread: m.center_spread,
            fluctuation_shape: m.fluctuation_shape,
            sparsity_threshold: m.sparsity_threshold,
            n_events: 5000,
            beam_energy_gev: 10.0,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AgingSection {
    /// Slope of the dose-linear damage model, in [0, 1).
    pub slope_k: f64,
    /// Smallest allowed coefficient, in (0, 1].
    pub a_min: f64,
}

impl Default for AgingSection {
    fn default() -> Self {
        Self {
            slope_k: 0.3,
            a_min: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricsSection {
    pub n_bins: usize,
    /// Histogram range; taken from the pooled samples when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hist_lo: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hist_hi: Option<f64>,
}

impl Default for MetricsSection {
    fn default() -> Self {
        Self {
            n_bins: 60,
            hist_lo: None,
            hist_hi: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let cfg: RunConfig = toml::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry()?;
        self.shower_model().validate().map_err(config_err)?;
        if !(self.shower.n_events >= 1) {
            return Err(Error::Config("shower.n_events must be >= 1".into()));
        }
        if !(self.shower.beam_energy_gev > 0.0 && self.shower.beam_energy_gev.is_finite()) {
            return Err(Error::Config(format!(
                "shower.beam_energy_gev must be > 0, got {}",
                self.shower.beam_energy_gev
            )));
        }
        if !(0.0..1.0).contains(&self.aging.slope_k) {
            return Err(Error::Config(format!(
                "aging.slope_k must lie in [0, 1), got {}",
                self.aging.slope_k
            )));
        }
        if !(self.aging.a_min > 0.0 && self.aging.a_min <= 1.0) {
            return Err(Error::Config(format!(
                "aging.a_min must lie in (0, 1], got {}",
                self.aging.a_min
            )));
        }
        self.train.validate().map_err(config_err)?;
        if self.metrics.n_bins == 0 {
            return Err(Error::Config("metrics.n_bins must be >= 1".into()));
        }
        if let (Some(lo), Some(hi)) = (self.metrics.hist_lo, self.metrics.hist_hi) {
            if !lo.is_finite() || !hi.is_finite() || lo >= hi {
                return Err(Error::Config(format!(
                    "metrics histogram range [{lo}, {hi}) is empty"
                )));
            }
        }
        Ok(())
    }

    pub fn geometry(&self) -> Result<DetectorGeometry> {
        DetectorGeometry::new(
            self.detector.n_rows,
            self.detector.n_cols,
            self.detector.cell_pitch_mm,
        )
        .map_err(config_err)
    }

    pub fn shower_model(&self) -> ShowerModel {
        ShowerModel {
            visible_fraction: self.shower.visible_fraction,
            radius: self.shower.radius,
            center_spread: self.shower.center_spread,
            fluctuation_shape: self.shower.fluctuation_shape,
            sparsity_threshold: self.shower.sparsity_threshold,
        }
    }
}

fn config_err(e: Error) -> Error {
    Error::Config(e.to_string())
}
