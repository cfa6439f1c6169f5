//! Parametric toy shower generator on a granular cell grid.
//!
//! Each event is a single-particle shower: a Gaussian-jittered impact point,
//! an exponential radial deposit profile normalized to the expected visible
//! energy, independent multiplicative Gamma fluctuations per cell, and a
//! sparsity threshold. Every random draw is keyed by `(seed, event, cell)`,
//! so generation order and worker count never change the output.

use rand_distr::{Distribution, Gamma, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{master_key, substream};

/// Readout grid dimensions. `cell_pitch_mm` is carried as metadata only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorGeometry {
    pub n_rows: usize,
    pub n_cols: usize,
    pub cell_pitch_mm: f64,
}

impl DetectorGeometry {
    pub fn new(n_rows: usize, n_cols: usize, cell_pitch_mm: f64) -> Result<Self> {
        if n_rows < 2 || n_cols < 2 {
            return Err(Error::InvalidArgument(format!(
                "grid must be at least 2x2, got {n_rows}x{n_cols}"
            )));
        }
        Ok(Self {
            n_rows,
            n_cols,
            cell_pitch_mm,
        })
    }

    #[inline]
    pub fn n_cells(&self) -> usize {
        self.n_rows * self.n_cols
    }

    /// Grid-shape equality; the cell pitch is metadata and does not matter
    /// for any computation.
    #[inline]
    pub fn same_grid(&self, other: &Self) -> bool {
        self.n_rows == other.n_rows && self.n_cols == other.n_cols
    }
}

impl Default for DetectorGeometry {
    /// 24x24 grid.
    fn default() -> Self {
        Self {
            n_rows: 24,
            n_cols: 24,
            cell_pitch_mm: 30.0,
        }
    }
}

/// Knobs of the toy shower model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShowerModel {
    /// Mean fraction of the beam energy deposited visibly, in (0, 1].
    pub visible_fraction: f64,
    /// Radial e-folding length of the deposit profile, in cell units.
    pub radius: f64,
    /// Gaussian jitter of the impact point around the grid center, cell units.
    pub center_spread: f64,
    /// Gamma shape k of the per-cell multiplicative noise (mean 1).
    pub fluctuation_shape: f64,
    /// Deposits below this many MeV are zeroed.
    pub sparsity_threshold: f64,
}

impl Default for ShowerModel {
    fn default() -> Self {
        Self {
            visible_fraction: 0.02,
            radius: 2.5,
            center_spread: 1.5,
            fluctuation_shape: 2.0,
            sparsity_threshold: 0.05,
        }
    }
}

impl ShowerModel {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite();
        if !(ok(self.visible_fraction) && self.visible_fraction > 0.0 && self.visible_fraction <= 1.0)
        {
            return Err(Error::InvalidArgument(format!(
                "visible_fraction must lie in (0, 1], got {}",
                self.visible_fraction
            )));
        }
        if !(ok(self.radius) && self.radius > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "radius must be > 0, got {}",
                self.radius
            )));
        }
        if !(ok(self.center_spread) && self.center_spread >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "center_spread must be >= 0, got {}",
                self.center_spread
            )));
        }
        if !(ok(self.fluctuation_shape) && self.fluctuation_shape > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "fluctuation_shape must be > 0, got {}",
                self.fluctuation_shape
            )));
        }
        if !(ok(self.sparsity_threshold) && self.sparsity_threshold >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "sparsity_threshold must be >= 0, got {}",
                self.sparsity_threshold
            )));
        }
        Ok(())
    }
}

/// A batch of events: per-cell visible energies in MeV, row-major per event.
#[derive(Debug, Clone, PartialEq)]
pub struct EventSet {
    geometry: DetectorGeometry,
    events: Vec<f64>,
    beam_energy_gev: f64,
    seed: u64,
}

impl EventSet {
    pub fn new(
        geometry: DetectorGeometry,
        events: Vec<f64>,
        beam_energy_gev: f64,
        seed: u64,
    ) -> Result<Self> {
        let n_cells = geometry.n_cells();
        if events.is_empty() || !events.len().is_multiple_of(n_cells) {
            return Err(Error::Shape(format!(
                "event buffer length {} is not a positive multiple of {n_cells}",
                events.len()
            )));
        }
        if !(beam_energy_gev.is_finite() && beam_energy_gev > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "beam energy must be > 0 GeV, got {beam_energy_gev}"
            )));
        }
        if let Some(i) = events.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidArgument(format!(
                "cell energy at flat index {i} is {}; energies must be finite and >= 0",
                events[i]
            )));
        }
        Ok(Self {
            geometry,
            events,
            beam_energy_gev,
            seed,
        })
    }

    #[inline]
    pub fn geometry(&self) -> &DetectorGeometry {
        &self.geometry
    }

    #[inline]
    pub fn n_events(&self) -> usize {
        self.events.len() / self.geometry.n_cells()
    }

    #[inline]
    pub fn beam_energy_gev(&self) -> f64 {
        self.beam_energy_gev
    }

    #[inline]
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Flat cell energies of event `i`, row-major.
    #[inline]
    pub fn event(&self, i: usize) -> &[f64] {
        let n = self.geometry.n_cells();
        &self.events[i * n..(i + 1) * n]
    }

    pub fn iter_events(&self) -> impl Iterator<Item = &[f64]> {
        self.events.chunks_exact(self.geometry.n_cells())
    }

    #[inline]
    pub fn raw(&self) -> &[f64] {
        &self.events
    }

    /// Same events with every cell passed through 32-bit precision, as the
    /// on-disk format stores them.
    pub fn quantized_f32(&self) -> EventSet {
        EventSet {
            geometry: self.geometry,
            events: self.events.iter().map(|&v| v as f32 as f64).collect(),
            beam_energy_gev: self.beam_energy_gev as f32 as f64,
            seed: self.seed,
        }
    }

    pub(crate) fn with_events(&self, events: Vec<f64>) -> Result<EventSet> {
        EventSet::new(self.geometry, events, self.beam_energy_gev, self.seed)
    }
}

/// Generates `n_events` single-particle showers.
///
/// Per event: the impact point is the grid center plus per-axis Gaussian
/// jitter; the mean deposit of a cell falls off as `exp(-d/radius)` with `d`
/// the distance from cell center to impact, normalized so the expected
/// visible sum equals `visible_fraction * beam_energy * 1000` MeV; each cell
/// is scaled by an independent Gamma(shape, mean 1) draw; deposits below the
/// sparsity threshold are zeroed.
pub fn simulate_events(
    geom: &DetectorGeometry,
    model: &ShowerModel,
    n_events: usize,
    beam_energy_gev: f64,
    seed: u64,
) -> Result<EventSet> {
    simulate_events_threaded(geom, model, n_events, beam_energy_gev, seed, 1)
}

/// Same as [`simulate_events`], with events partitioned across `n_threads`
/// workers. Output is identical for every worker count.
pub fn simulate_events_threaded(
    geom: &DetectorGeometry,
    model: &ShowerModel,
    n_events: usize,
    beam_energy_gev: f64,
    seed: u64,
    n_threads: usize,
) -> Result<EventSet> {
    model.validate()?;
    if n_events == 0 {
        return Err(Error::InvalidArgument("n_events must be >= 1".into()));
    }
    if !(beam_energy_gev.is_finite() && beam_energy_gev > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "beam energy must be > 0 GeV, got {beam_energy_gev}"
        )));
    }
    let n_cells = geom.n_cells();
    let key = master_key(seed);
    let mut events = vec![0.0f64; n_events * n_cells];

    let workers = n_threads.max(1).min(n_events);
    if workers == 1 {
        fill_events(geom, model, beam_energy_gev, &key, 0, &mut events);
    } else {
        let chunk_events = n_events.div_ceil(workers);
        let chunks: Vec<(usize, &mut [f64])> = events
            .chunks_mut(chunk_events * n_cells)
            .enumerate()
            .map(|(i, c)| (i * chunk_events, c))
            .collect();
        std::thread::scope(|scope| {
            for (first_event, chunk) in chunks {
                let key = &key;
                scope.spawn(move || {
                    fill_events(geom, model, beam_energy_gev, key, first_event, chunk);
                });
            }
        });
    }

    EventSet::new(*geom, events, beam_energy_gev, seed)
}

fn fill_events(
    geom: &DetectorGeometry,
    model: &ShowerModel,
    beam_energy_gev: f64,
    key: &[u8; 32],
    first_event: usize,
    out: &mut [f64],
) {
    let n_cells = geom.n_cells();
    let target_mev = model.visible_fraction * beam_energy_gev * 1000.0;
    let jitter = Normal::new(0.0, model.center_spread).expect("validated spread");
    let noise = Gamma::new(model.fluctuation_shape, 1.0 / model.fluctuation_shape)
        .expect("validated shape");
    let center_r = (geom.n_rows as f64 - 1.0) / 2.0;
    let center_c = (geom.n_cols as f64 - 1.0) / 2.0;
    let mut weights = vec![0.0f64; n_cells];

    for (k, event) in out.chunks_exact_mut(n_cells).enumerate() {
        let ev = (first_event + k) as u64;
        // Stream counters: `base` for event-level draws, `base + 1 + cell`
        // per cell. Collision-free across any (event, cell) pair.
        let base = ev * (n_cells as u64 + 1);

        let mut ev_rng = substream(key, base);
        let impact_r = center_r + jitter.sample(&mut ev_rng);
        let impact_c = center_c + jitter.sample(&mut ev_rng);

        let mut total = 0.0;
        for r in 0..geom.n_rows {
            let dr = r as f64 - impact_r;
            for c in 0..geom.n_cols {
                let dc = c as f64 - impact_c;
                let d = (dr * dr + dc * dc).sqrt();
                let w = (-d / model.radius).exp();
                weights[r * geom.n_cols + c] = w;
                total += w;
            }
        }
        let scale = target_mev / total;

        for (i, (cell, &w)) in event.iter_mut().zip(weights.iter()).enumerate() {
            let mut cell_rng = substream(key, base + 1 + i as u64);
            let v = w * scale * noise.sample(&mut cell_rng);
            *cell = if v < model.sparsity_threshold { 0.0 } else { v };
        }
    }
}

/// Elementwise sum of cell energies over all events: the integrated dose map.
pub fn integrated_dose(e: &EventSet) -> Result<Vec<f64>> {
    if e.n_events() == 0 {
        return Err(Error::InvalidArgument("empty event set".into()));
    }
    let mut dose = vec![0.0f64; e.geometry().n_cells()];
    for event in e.iter_events() {
        for (d, v) in dose.iter_mut().zip(event) {
            *d += v;
        }
    }
    Ok(dose)
}
