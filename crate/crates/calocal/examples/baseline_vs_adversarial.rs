//! Compare the ratio-of-means baseline against the adversarial trainer on
//! the same data.
//!
//! The baseline matches per-cell means; the adversarial trainer matches
//! whole distributions. On shared-shower damage the baseline is exact by
//! construction; on independent draws both face the same statistical floor.
//!
//! Run with: `cargo run --release --example baseline_vs_adversarial`

use calocal::aging::{apply_damage, make_linear_profile};
use calocal::metrics::mae;
use calocal::sim::{integrated_dose, simulate_events, DetectorGeometry, ShowerModel};
use calocal::wgan::{central_mask, ratio_of_means_baseline, train_calibration, TrainConfig};

fn main() -> calocal::Result<()> {
    let geom = DetectorGeometry::new(12, 12, 30.0)?;
    let model = ShowerModel::default();
    let undamaged = simulate_events(&geom, &model, 1500, 10.0, 21)?;
    let source = simulate_events(&geom, &model, 1500, 10.0, 22)?;
    let dose = integrated_dose(&source)?;
    let truth = make_linear_profile(&geom, &dose, 0.3, 0.5)?;
    let damaged = apply_damage(&source, &truth)?;

    let mask = central_mask(&geom, 4)?;
    let score = |estimate: &[f64]| {
        let pred: Vec<f64> = mask.iter().map(|&i| estimate[i]).collect();
        let want: Vec<f64> = mask.iter().map(|&i| truth.a()[i]).collect();
        mae(&pred, &want).unwrap()
    };

    // Shared showers (same events on both sides): the ratio is exact.
    let damaged_shared = apply_damage(&undamaged, &truth)?;
    let exact = ratio_of_means_baseline(&undamaged, &damaged_shared)?;
    println!("baseline, shared showers:      MAE {:.2e}", score(&exact));

    // Independent draws: sampling noise enters.
    let base = ratio_of_means_baseline(&undamaged, &damaged)?;
    println!("baseline, independent draws:   MAE {:.5}", score(&base));

    let cfg = TrainConfig {
        epochs: 30,
        critic_hidden: vec![64, 32],
        mask_half_width: 4,
        seed: 23,
        ..TrainConfig::default()
    };
    let (adversarial, _) = train_calibration(&undamaged, &damaged, &cfg, None)?;
    println!("adversarial, independent draws: MAE {:.5}", score(&adversarial));
    Ok(())
}
