//! Build a dose-linear aging profile, damage an event set with it, and show
//! the resulting energy-sum shift.
//!
//! Run with: `cargo run --release --example inject_aging`

use calocal::aging::{apply_damage, calibrate, make_linear_profile};
use calocal::metrics::{energy_sum, wasserstein1_empirical};
use calocal::sim::{integrated_dose, simulate_events, DetectorGeometry, ShowerModel};

fn main() -> calocal::Result<()> {
    let geom = DetectorGeometry::default();
    let events = simulate_events(&geom, &ShowerModel::default(), 3000, 10.0, 7)?;

    // Hotter cells age more: a_i = max(1 - k * dose_i / max_dose, a_min).
    let dose = integrated_dose(&events)?;
    let profile = make_linear_profile(&geom, &dose, 0.3, 0.5)?;
    let lo = profile.a().iter().cloned().fold(f64::INFINITY, f64::min);
    println!("aging coefficients span [{lo:.3}, 1.000]");
    println!(
        "reciprocal convention: hottest cell A = {:.3}",
        profile.big_a().iter().cloned().fold(0.0f64, f64::max)
    );

    let damaged = apply_damage(&events, &profile)?;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let sums_before = energy_sum(&events);
    let sums_after = energy_sum(&damaged);
    println!(
        "mean energy sum: {:.1} MeV undamaged -> {:.1} MeV damaged",
        mean(&sums_before),
        mean(&sums_after)
    );
    println!(
        "energy-sum W1 distance: {:.2} MeV",
        wasserstein1_empirical(&sums_after, &sums_before)?
    );

    // With the true coefficients, cell-level calibration undoes the damage.
    let restored = calibrate(&damaged, profile.a())?;
    let worst = events
        .raw()
        .iter()
        .zip(restored.raw())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    println!("calibrating with the true profile restores events to {worst:.2e} MeV");
    Ok(())
}
