//! End-to-end coefficient recovery at reduced scale: two independent event
//! sets, synthetic aging on one, adversarial training to recover the
//! per-cell coefficients, scored against the known truth.
//!
//! Runs in under a minute. The full-scale run (24x24 grid, 5000+5000
//! events, 100 epochs) lives in the acceptance suite.
//!
//! Run with: `cargo run --release --example recover_coefficients`

use calocal::aging::{apply_damage, make_linear_profile};
use calocal::metrics::{mae, r_squared};
use calocal::sim::{integrated_dose, simulate_events, DetectorGeometry, ShowerModel};
use calocal::wgan::{central_mask, train_calibration, TrainConfig};

fn main() -> calocal::Result<()> {
    let geom = DetectorGeometry::new(12, 12, 30.0)?;
    let model = ShowerModel::default();
    // Independent draws: the trainer never sees paired events.
    let undamaged = simulate_events(&geom, &model, 3000, 10.0, 1)?;
    let source = simulate_events(&geom, &model, 3000, 10.0, 2)?;

    let dose = integrated_dose(&source)?;
    let truth = make_linear_profile(&geom, &dose, 0.3, 0.5)?;
    let damaged = apply_damage(&source, &truth)?;

    let cfg = TrainConfig {
        epochs: 40,
        batch_size: 64,
        critic_hidden: vec![64, 32],
        mask_half_width: 4, // central 8x8 block
        seed: 3,
        ..TrainConfig::default()
    };
    println!(
        "training {} epochs on the central {}x{} cells...",
        cfg.epochs,
        2 * cfg.mask_half_width,
        2 * cfg.mask_half_width
    );
    let (coefficients, report) = train_calibration(&undamaged, &damaged, &cfg, Some(&truth))?;

    for rec in &report.epochs {
        if rec.epoch % 5 == 0 || rec.epoch == 1 {
            println!(
                "epoch {:3}: wasserstein estimate {:+.5}, MAE {:.5}",
                rec.epoch,
                rec.wasserstein_estimate,
                rec.mae_vs_truth.unwrap()
            );
        }
    }

    let mask = central_mask(&geom, cfg.mask_half_width)?;
    let pred: Vec<f64> = mask.iter().map(|&i| coefficients[i]).collect();
    let want: Vec<f64> = mask.iter().map(|&i| truth.a()[i]).collect();
    println!(
        "final masked-cell MAE {:.5}, R2 {:.4} ({:.1}s)",
        mae(&pred, &want)?,
        r_squared(&pred, &want)?,
        report.wall_seconds
    );

    let (i, worst) = mask
        .iter()
        .map(|&i| (i, (coefficients[i] - truth.a()[i]).abs()))
        .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .unwrap();
    println!(
        "worst cell ({}, {}): predicted {:.4}, true {:.4} (|err| {:.4})",
        i / geom.n_cols,
        i % geom.n_cols,
        coefficients[i],
        truth.a()[i],
        worst
    );
    Ok(())
}
