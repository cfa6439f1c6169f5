//! Calorimeter-aging calibration at desk scale.
//!
//! The crate generates toy hadronic-shower event sets on a granular cell
//! grid, injects synthetic dose-linear aging per cell, and recovers the
//! per-cell aging coefficients by adversarial distribution matching: a
//! diagonal multiplicative generator (whose weights *are* the predicted
//! coefficients) maps undamaged events toward the damaged distribution
//! against a small weight-clipped critic.
//!
//! # Layout
//!
//! - [`sim`] — toy shower simulation and event sets
//! - [`aging`] — dose-linear damage profiles, damage application, calibration
//! - [`nn`] — dense scorer network, analytic gradients, RMSProp, clipping
//! - [`wgan`] — the adversarial trainer and ratio-of-means baseline
//! - [`metrics`] — MAE, R², energy sums, empirical Wasserstein-1, histograms
//! - [`io`] — binary event files, coefficient CSVs, JSONL reports, TOML config
//! - [`cli`] — the five pipeline commands behind the `calocal` binary
//!
//! # Quick start
//!
//! ```
//! use calocal::aging::{apply_damage, make_linear_profile};
//! use calocal::sim::{integrated_dose, simulate_events, DetectorGeometry, ShowerModel};
//! use calocal::wgan::{train_calibration, TrainConfig};
//!
//! # fn main() -> calocal::Result<()> {
//! let geom = DetectorGeometry::new(8, 8, 30.0)?;
//! let model = ShowerModel::default();
//! let undamaged = simulate_events(&geom, &model, 400, 10.0, 1)?;
//! let source = simulate_events(&geom, &model, 400, 10.0, 2)?;
//!
//! let dose = integrated_dose(&source)?;
//! let truth = make_linear_profile(&geom, &dose, 0.3, 0.5)?;
//! let damaged = apply_damage(&source, &truth)?;
//!
//! let cfg = TrainConfig {
//!     epochs: 5,
//!     batch_size: 32,
//!     critic_hidden: vec![32, 16],
//!     mask_half_width: 3,
//!     ..TrainConfig::default()
//! };
//! let (coefficients, report) = train_calibration(&undamaged, &damaged, &cfg, Some(&truth))?;
//! assert_eq!(coefficients.len(), geom.n_cells());
//! assert_eq!(report.epochs.len(), 5);
//! # Ok(())
//! # }
//! ```
//!
//! Runnable walkthroughs live under `examples/`; the `calocal` binary drives
//! the same pipeline through files.

pub mod aging;
pub mod cli;
pub mod error;
pub mod io;
pub mod metrics;
pub mod nn;
mod rng;
pub mod sim;
pub mod wgan;

pub use error::{Error, Result};
