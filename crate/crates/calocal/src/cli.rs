//! Command implementations behind the `calocal` binary.
//!
//! Pipeline: `simulate` writes an event set, `damage` derives a dose-linear
//! truth profile from its input and writes the damaged set, `calibrate`
//! trains the adversarial recovery and writes coefficients plus a JSON-lines
//! report, `evaluate` writes a flat metrics JSON, and `report` emits
//! plot-ready CSV figure data.
//!
//! Exit codes: 0 success, 2 usage/config error, 3 data/format error,
//! 4 training divergence. Every command reads and validates all of its
//! inputs before writing any output, and all writes are atomic.

use std::path::Path;

use crate::aging::{apply_damage, calibrate, make_linear_profile};
use crate::error::{Error, Result};
use crate::io::config::RunConfig;
use crate::io::report::{read_report, write_report, ReportHeader};
use crate::io::{atomic_write, coeffs, events};
use crate::metrics::{energy_sum, histogram, mae, r_squared, wasserstein1_empirical, Histogram};
use crate::sim::{integrated_dose, simulate_events_threaded};
use crate::wgan::{central_mask, train_calibration};

/// Environment variable capping the simulation worker count.
pub const THREADS_ENV: &str = "CALOCAL_THREADS";

/// Maps an error to the documented process exit code.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) => 2,
        Error::Diverged { .. } => 4,
        _ => 3,
    }
}

fn sim_threads() -> Result<usize> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .parse::<usize>()
            .map(|n| n.max(1))
            .map_err(|_| Error::Config(format!("{THREADS_ENV}={v} is not a worker count"))),
        Err(_) => Ok(1),
    }
}

pub fn cmd_simulate(
    config_path: &Path,
    seed_override: Option<u64>,
    out_path: &Path,
    csv_out: Option<&Path>,
) -> Result<()> {
    let cfg = RunConfig::load(config_path)?;
    let geom = cfg.geometry()?;
    let model = cfg.shower_model();
    let seed = seed_override.unwrap_or(cfg.shower.seed);
    let threads = sim_threads()?;
    let set = simulate_events_threaded(
        &geom,
        &model,
        cfg.shower.n_events,
        cfg.shower.beam_energy_gev,
        seed,
        threads,
    )?;
    events::write_events(out_path, &set)?;
    if let Some(csv) = csv_out {
        events::write_events_csv(csv, &set)?;
    }
    eprintln!(
        "simulated {} events on a {}x{} grid (seed {seed}) -> {}",
        set.n_events(),
        geom.n_rows,
        geom.n_cols,
        out_path.display()
    );
    Ok(())
}

pub fn cmd_damage(
    config_path: &Path,
    in_path: &Path,
    out_path: &Path,
    profile_out: &Path,
    csv_out: Option<&Path>,
) -> Result<()> {
    let cfg = RunConfig::load(config_path)?;
    let set = events::read_events(in_path)?;
    let dose = integrated_dose(&set)?;
    let profile = make_linear_profile(set.geometry(), &dose, cfg.aging.slope_k, cfg.aging.a_min)?;
    let damaged = apply_damage(&set, &profile)?;
    events::write_events(out_path, &damaged)?;
    coeffs::write_coefficients(profile_out, set.geometry(), profile.a())?;
    if let Some(csv) = csv_out {
        events::write_events_csv(csv, &damaged)?;
    }
    eprintln!(
        "damaged {} events (slope_k={}, a_min={}) -> {}; truth profile -> {}",
        damaged.n_events(),
        cfg.aging.slope_k,
        cfg.aging.a_min,
        out_path.display(),
        profile_out.display()
    );
    Ok(())
}

pub fn cmd_calibrate(
    config_path: &Path,
    undamaged_path: &Path,
    damaged_path: &Path,
    coeffs_out: &Path,
    report_out: &Path,
    truth_path: Option<&Path>,
    seed_override: Option<u64>,
) -> Result<()> {
    let mut cfg = RunConfig::load(config_path)?;
    if let Some(seed) = seed_override {
        cfg.train.seed = seed;
    }
    let undamaged = events::read_events(undamaged_path)?;
    let damaged = events::read_events(damaged_path)?;
    let truth = truth_path.map(coeffs::read_profile).transpose()?;

    let (full, report) = train_calibration(&undamaged, &damaged, &cfg.train, truth.as_ref())?;

    coeffs::write_coefficients(coeffs_out, undamaged.geometry(), &full)?;
    let header = ReportHeader {
        config: cfg,
        undamaged_path: undamaged_path.display().to_string(),
        damaged_path: damaged_path.display().to_string(),
        truth_path: truth_path.map(|p| p.display().to_string()),
        normalization_scale: report.normalization_scale,
    };
    write_report(report_out, &header, &report)?;
    let last = report.epochs.last().expect("epochs >= 1");
    match last.mae_vs_truth {
        Some(m) => eprintln!(
            "calibrated in {:.1}s: epoch {} MAE {:.5}, W1 estimate {:.5}",
            report.wall_seconds, last.epoch, m, last.wasserstein_estimate
        ),
        None => eprintln!(
            "calibrated in {:.1}s: epoch {} W1 estimate {:.5}",
            report.wall_seconds, last.epoch, last.wasserstein_estimate
        ),
    }
    Ok(())
}

pub fn cmd_evaluate(
    config_path: &Path,
    damaged_path: &Path,
    undamaged_path: &Path,
    coeffs_path: &Path,
    truth_path: Option<&Path>,
    out_path: &Path,
) -> Result<()> {
    let cfg = RunConfig::load(config_path)?;
    let damaged = events::read_events(damaged_path)?;
    let undamaged = events::read_events(undamaged_path)?;
    let (n_rows, n_cols, pred) = coeffs::read_coefficients(coeffs_path)?;
    if !(n_rows == damaged.geometry().n_rows && n_cols == damaged.geometry().n_cols) {
        return Err(Error::Shape(format!(
            "coefficient grid {n_rows}x{n_cols} does not match event grid {}x{}",
            damaged.geometry().n_rows,
            damaged.geometry().n_cols
        )));
    }

    let sums_undamaged = energy_sum(&undamaged);
    let sums_damaged = energy_sum(&damaged);
    let calibrated = calibrate(&damaged, &pred)?;
    let sums_calibrated = energy_sum(&calibrated);
    let w1_before = wasserstein1_empirical(&sums_damaged, &sums_undamaged)?;
    let w1_after = wasserstein1_empirical(&sums_calibrated, &sums_undamaged)?;

    let mut doc = serde_json::Map::new();
    if let Some(tp) = truth_path {
        let truth = coeffs::read_profile(tp)?;
        if !truth.geometry().same_grid(damaged.geometry()) {
            return Err(Error::Shape("truth profile grid mismatch".into()));
        }
        let mask = central_mask(damaged.geometry(), cfg.train.mask_half_width)?;
        let pred_masked: Vec<f64> = mask.iter().map(|&i| pred[i]).collect();
        let truth_masked: Vec<f64> = mask.iter().map(|&i| truth.a()[i]).collect();
        doc.insert("mae".into(), mae(&pred_masked, &truth_masked)?.into());
        // R^2 is undefined against a constant truth (e.g. no aging at all).
        let r2 = r_squared(&pred_masked, &truth_masked).ok();
        doc.insert("r2".into(), r2.into());
    }
    doc.insert("w1_before".into(), w1_before.into());
    doc.insert("w1_after".into(), w1_after.into());

    atomic_write(out_path, |w| {
        let json = serde_json::to_string_pretty(&serde_json::Value::Object(doc.clone()))
            .map_err(|e| Error::Format(format!("metrics serialization: {e}")))?;
        writeln!(w, "{json}")?;
        Ok(())
    })?;
    eprintln!(
        "evaluated: w1_before {w1_before:.4}, w1_after {w1_after:.4} -> {}",
        out_path.display()
    );
    Ok(())
}

fn write_histogram_csv(path: &Path, h: &Histogram) -> Result<()> {
    atomic_write(path, |w| {
        writeln!(w, "bin_lo,bin_hi,count")?;
        for (i, &count) in h.counts.iter().enumerate() {
            writeln!(w, "{:.8e},{:.8e},{count}", h.edges[i], h.edges[i + 1])?;
        }
        writeln!(w, "# underflow={} overflow={}", h.underflow, h.overflow)?;
        Ok(())
    })
}

/// Histogram range: configured bounds if set, otherwise the pooled sample
/// range (padded when degenerate).
fn auto_range(pools: &[&[f64]], lo: Option<f64>, hi: Option<f64>) -> (f64, f64) {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for pool in pools {
        for &v in *pool {
            min = min.min(v);
            max = max.max(v);
        }
    }
    let mut lo = lo.unwrap_or(min);
    let mut hi = hi.unwrap_or(max);
    if lo >= hi {
        lo -= 0.5;
        hi += 0.5;
    }
    (lo, hi)
}

pub fn cmd_report(report_path: &Path, figures_dir: &Path) -> Result<()> {
    let (header, epochs, fin) = read_report(report_path)?;
    let cfg = &header.config;
    let undamaged = events::read_events(Path::new(&header.undamaged_path))?;
    let damaged = events::read_events(Path::new(&header.damaged_path))?;
    let truth = header
        .truth_path
        .as_ref()
        .map(|p| coeffs::read_profile(Path::new(p)))
        .transpose()?;

    let geom = *undamaged.geometry();
    let mask = central_mask(&geom, cfg.train.mask_half_width)?;
    if fin.final_coefficients.len() != mask.len()
        || fin.border_coefficients.len() != geom.n_cells() - mask.len()
    {
        return Err(Error::Format(format!(
            "{}: coefficient counts do not match the configured mask",
            report_path.display()
        )));
    }
    let mut in_mask = vec![false; geom.n_cells()];
    for &i in &mask {
        in_mask[i] = true;
    }
    let mut full = vec![0.0; geom.n_cells()];
    let mut border_iter = fin.border_coefficients.iter();
    for (i, slot) in full.iter_mut().enumerate() {
        if !in_mask[i] {
            *slot = *border_iter.next().expect("count checked above");
        }
    }
    for (&i, &c) in mask.iter().zip(&fin.final_coefficients) {
        full[i] = c;
    }

    std::fs::create_dir_all(figures_dir)?;
    let n_bins = cfg.metrics.n_bins;

    // Coefficient distribution (predicted; truth alongside when known).
    let truth_a: Option<&[f64]> = truth.as_ref().map(|t| t.a());
    let coeff_pools: Vec<&[f64]> = match truth_a {
        Some(t) => vec![&full, t],
        None => vec![&full],
    };
    let (lo, hi) = auto_range(&coeff_pools, None, None);
    write_histogram_csv(
        &figures_dir.join("coefficients_hist.csv"),
        &histogram(&full, n_bins, lo, hi)?,
    )?;
    if let Some(t) = truth_a {
        write_histogram_csv(
            &figures_dir.join("truth_coefficients_hist.csv"),
            &histogram(t, n_bins, lo, hi)?,
        )?;
    }

    // Energy-sum distributions before and after calibration, common binning.
    let sums_undamaged = energy_sum(&undamaged);
    let sums_damaged = energy_sum(&damaged);
    let calibrated = calibrate(&damaged, &full)?;
    let sums_calibrated = energy_sum(&calibrated);
    let (lo, hi) = auto_range(
        &[&sums_undamaged, &sums_damaged, &sums_calibrated],
        cfg.metrics.hist_lo,
        cfg.metrics.hist_hi,
    );
    write_histogram_csv(
        &figures_dir.join("energy_sum_undamaged.csv"),
        &histogram(&sums_undamaged, n_bins, lo, hi)?,
    )?;
    write_histogram_csv(
        &figures_dir.join("energy_sum_damaged.csv"),
        &histogram(&sums_damaged, n_bins, lo, hi)?,
    )?;
    write_histogram_csv(
        &figures_dir.join("energy_sum_calibrated.csv"),
        &histogram(&sums_calibrated, n_bins, lo, hi)?,
    )?;

    // Truth-vs-predicted scatter pairs over the training mask.
    if let Some(t) = truth_a {
        atomic_write(&figures_dir.join("truth_vs_predicted.csv"), |w| {
            writeln!(w, "row,col,truth_a,predicted_a")?;
            for &i in &mask {
                writeln!(
                    w,
                    "{},{},{:.8e},{:.8e}",
                    i / geom.n_cols,
                    i % geom.n_cols,
                    t[i],
                    full[i]
                )?;
            }
            Ok(())
        })?;
    }

    // MAE learning curve.
    if epochs.iter().any(|e| e.mae_vs_truth.is_some()) {
        atomic_write(&figures_dir.join("mae_per_epoch.csv"), |w| {
            writeln!(w, "epoch,mae")?;
            for e in &epochs {
                if let Some(m) = e.mae_vs_truth {
                    writeln!(w, "{},{:.8e}", e.epoch, m)?;
                }
            }
            Ok(())
        })?;
    }

    eprintln!("figure data written to {}", figures_dir.display());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_the_taxonomy() {
        assert_eq!(exit_code(&Error::Config("x".into())), 2);
        assert_eq!(exit_code(&Error::Format("x".into())), 3);
        assert_eq!(
            exit_code(&Error::Io(std::io::Error::new(
                std::io::ErrorKind::NotFound,
                "x"
            ))),
            3
        );
        assert_eq!(
            exit_code(&Error::Diverged {
                epoch: 3,
                detail: "x".into()
            }),
            4
        );
        assert_eq!(exit_code(&Error::Shape("x".into())), 3);
    }

    #[test]
    fn auto_range_pads_degenerate_pools() {
        let v = vec![1.0, 1.0];
        let (lo, hi) = auto_range(&[&v], None, None);
        assert!(lo < 1.0 && hi > 1.0);
        let (lo, hi) = auto_range(&[&v], Some(0.0), Some(2.0));
        assert_eq!((lo, hi), (0.0, 2.0));
    }
}
