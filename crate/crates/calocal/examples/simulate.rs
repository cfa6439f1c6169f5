//! Generate a toy shower event set and print summary statistics.
//!
//! Run with: `cargo run --release --example simulate`

use calocal::metrics::energy_sum;
use calocal::sim::{integrated_dose, simulate_events, DetectorGeometry, ShowerModel};

fn main() -> calocal::Result<()> {
    let geom = DetectorGeometry::default(); // 24x24 grid
    let model = ShowerModel::default();
    let beam_gev = 10.0;
    let events = simulate_events(&geom, &model, 2000, beam_gev, 42)?;

    let sums = energy_sum(&events);
    let mean = sums.iter().sum::<f64>() / sums.len() as f64;
    let var = sums.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / sums.len() as f64;
    println!(
        "{} events of {beam_gev} GeV on a {}x{} grid",
        events.n_events(),
        geom.n_rows,
        geom.n_cols
    );
    println!(
        "visible energy per event: mean {mean:.1} MeV, std {:.1} MeV (target {:.1} MeV)",
        var.sqrt(),
        model.visible_fraction * beam_gev * 1000.0
    );

    let occupancy = events
        .iter_events()
        .map(|ev| ev.iter().filter(|&&v| v > 0.0).count())
        .sum::<usize>() as f64
        / events.n_events() as f64;
    println!("cells above threshold per event: {occupancy:.1}");

    let dose = integrated_dose(&events)?;
    let (hot, hot_dose) = dose
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap();
    println!(
        "hottest cell ({}, {}): integrated dose {:.0} MeV; corner cell (0, 0): {:.1} MeV",
        hot / geom.n_cols,
        hot % geom.n_cols,
        hot_dose,
        dose[0]
    );
    Ok(())
}
