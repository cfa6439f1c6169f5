//! Adversarial coefficient recovery.
//!
//! A diagonal multiplicative generator maps undamaged events toward the
//! damaged distribution; its weights, `exp(u_i)` per masked cell, are the
//! predicted aging coefficients. A small weight-clipped scorer ("critic")
//! estimates how far apart the two distributions are, and both sides are
//! trained with RMSProp. Cells outside the training mask are filled in by
//! the ratio-of-means baseline.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::aging::AgingProfile;
use crate::error::{Error, Result};
use crate::metrics;
use crate::nn::{Grads, Matrix, Mlp, MlpRmsProp, RmsProp, DEFAULT_EPS, DEFAULT_RHO};
use crate::rng::{master_key, substream};
use crate::sim::{DetectorGeometry, EventSet};

/// Negative slope of the critic's hidden leaky rectifier.
pub const CRITIC_ALPHA: f64 = 0.2;

/// Cells with an undamaged mean below this (MeV) fall back to coefficient 1
/// in the ratio-of-means baseline.
pub const BASELINE_MEAN_EPS: f64 = 1e-9;

// Training streams live far away from the simulator's per-cell counters.
const STREAM_CRITIC_INIT: u64 = 1 << 63;
const STREAM_REAL_SAMPLER: u64 = (1 << 63) + 1;
const STREAM_FAKE_SAMPLER: u64 = (1 << 63) + 2;

/// How critic inputs are scaled before training.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Normalization {
    /// Divide by the global mean nonzero cell energy of the undamaged set.
    Auto,
    /// Divide by a fixed value.
    Fixed(f64),
}

impl Serialize for Normalization {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Normalization::Auto => s.serialize_str("auto"),
            Normalization::Fixed(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for Normalization {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl serde::de::Visitor<'_> for V {
            type Value = Normalization;
            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                write!(f, "\"auto\" or a positive number")
            }
            fn visit_str<E: serde::de::Error>(self, v: &str) -> std::result::Result<Normalization, E> {
                if v == "auto" {
                    Ok(Normalization::Auto)
                } else {
                    Err(E::custom(format!("expected \"auto\", got \"{v}\"")))
                }
            }
            fn visit_f64<E: serde::de::Error>(self, v: f64) -> std::result::Result<Normalization, E> {
                Ok(Normalization::Fixed(v))
            }
            fn visit_i64<E: serde::de::Error>(self, v: i64) -> std::result::Result<Normalization, E> {
                Ok(Normalization::Fixed(v as f64))
            }
            fn visit_u64<E: serde::de::Error>(self, v: u64) -> std::result::Result<Normalization, E> {
                Ok(Normalization::Fixed(v as f64))
            }
        }
        d.deserialize_any(V)
    }
}

/// Hyperparameters of a calibration run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    /// Critic updates per generator update.
    pub n_critic: usize,
    /// Critic weights are clamped into `[-clip, clip]` after every update.
    pub clip: f64,
    pub critic_hidden: Vec<usize>,
    pub lr_critic: f64,
    pub lr_generator: f64,
    /// The training mask is the centered `2h x 2h` block.
    pub mask_half_width: usize,
    pub normalization: Normalization,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            batch_size: 64,
            n_critic: 5,
            clip: 0.01,
            critic_hidden: vec![128, 64],
            lr_critic: 5e-5,
            lr_generator: 1e-3,
            mask_half_width: 6,
            normalization: Normalization::Auto,
            seed: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 || self.n_critic == 0 {
            return Err(Error::InvalidArgument(
                "epochs, batch_size and n_critic must all be >= 1".into(),
            ));
        }
        if !(self.clip > 0.0 && self.clip.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "clip must be > 0, got {}",
                self.clip
            )));
        }
        if self.critic_hidden.contains(&0) {
            return Err(Error::InvalidArgument(
                "critic hidden dims must be >= 1".into(),
            ));
        }
        for (name, lr) in [("lr_critic", self.lr_critic), ("lr_generator", self.lr_generator)] {
            if !(lr > 0.0 && lr.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be > 0, got {lr}"
                )));
            }
        }
        if let Normalization::Fixed(s) = self.normalization {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "normalization scale must be > 0, got {s}"
                )));
            }
        }
        Ok(())
    }
}

/// Diagonal multiplicative generator over the masked cells.
/// Predicted coefficient per cell: `a_i = exp(u_i)`, positive by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorParams {
    u: Vec<f64>,
    mask: Vec<usize>,
}

impl GeneratorParams {
    /// Identity generator (`u = 0`) over the given masked cells.
    pub fn identity(mask: Vec<usize>) -> Result<Self> {
        if mask.is_empty() {
            return Err(Error::InvalidArgument("empty mask".into()));
        }
        let mut seen = mask.clone();
        seen.sort_unstable();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument("mask indices must be unique".into()));
        }
        Ok(Self {
            u: vec![0.0; mask.len()],
            mask,
        })
    }

    #[inline]
    pub fn mask(&self) -> &[usize] {
        &self.mask
    }

    #[inline]
    pub fn log_coefficients(&self) -> &[f64] {
        &self.u
    }

    /// Predicted coefficients `exp(u)`, in mask order.
    pub fn coefficients(&self) -> Vec<f64> {
        self.u.iter().map(|v| v.exp()).collect()
    }

    /// Replaces the log-coefficients; values must be finite and match the
    /// mask size.
    pub fn set_log_coefficients(&mut self, u: &[f64]) -> Result<()> {
        if u.len() != self.mask.len() {
            return Err(Error::Shape(format!(
                "got {} log-coefficients for mask size {}",
                u.len(),
                self.mask.len()
            )));
        }
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("log-coefficient".into()));
        }
        self.u.copy_from_slice(u);
        Ok(())
    }

    /// Applies the generator to a batch of masked event vectors:
    /// `y_i = exp(u_i) * x_i`, per row.
    pub fn apply(&self, batch: &Matrix) -> Result<Matrix> {
        if batch.cols() != self.u.len() {
            return Err(Error::Shape(format!(
                "batch width {} does not match mask size {}",
                batch.cols(),
                self.u.len()
            )));
        }
        let coeffs = self.coefficients();
        let mut out = batch.clone();
        for r in 0..out.rows() {
            for (y, c) in out.row_mut(r).iter_mut().zip(&coeffs) {
                *y *= c;
            }
        }
        Ok(out)
    }
}

/// Indices of the centered `2h x 2h` block, row-major.
pub fn central_mask(geom: &DetectorGeometry, half_width: usize) -> Result<Vec<usize>> {
    let side = 2 * half_width;
    if half_width == 0 {
        return Err(Error::InvalidArgument("mask half-width must be >= 1".into()));
    }
    if side > geom.n_rows.min(geom.n_cols) {
        return Err(Error::InvalidArgument(format!(
            "mask block {side}x{side} exceeds the {}x{} grid",
            geom.n_rows, geom.n_cols
        )));
    }
    let r0 = (geom.n_rows - side) / 2;
    let c0 = (geom.n_cols - side) / 2;
    let mut idx = Vec::with_capacity(side * side);
    for r in r0..r0 + side {
        for c in c0..c0 + side {
            idx.push(r * geom.n_cols + c);
        }
    }
    Ok(idx)
}

/// Critic objective on one pair of batches:
/// `loss = mean(C(fake)) - mean(C(real))` (the critic descends this), with
/// parameter gradients accumulated over both batches.
pub fn critic_loss_and_grads(critic: &Mlp, real: &Matrix, fake: &Matrix) -> Result<(f64, Grads)> {
    if real.rows() == 0 || fake.rows() == 0 {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    if real.cols() != fake.cols() {
        return Err(Error::Shape(format!(
            "real batch width {} vs fake batch width {}",
            real.cols(),
            fake.cols()
        )));
    }
    let (scores_fake, cache_fake) = critic.forward_batch(fake)?;
    let (scores_real, cache_real) = critic.forward_batch(real)?;
    let mut grads = Grads::zeros_like(critic);
    let up_fake = vec![1.0 / fake.rows() as f64; fake.rows()];
    critic.backward_batch(fake, &cache_fake, &up_fake, &mut grads, false)?;
    let up_real = vec![-1.0 / real.rows() as f64; real.rows()];
    critic.backward_batch(real, &cache_real, &up_real, &mut grads, false)?;
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    Ok((mean(&scores_fake) - mean(&scores_real), grads))
}

/// Generator objective on one batch of undamaged masked vectors:
/// `loss = -mean(C(G(x)))`, with the gradient w.r.t. every `u_i`.
pub fn generator_loss_and_grads(
    critic: &Mlp,
    generator: &GeneratorParams,
    batch: &Matrix,
) -> Result<(f64, Vec<f64>)> {
    if batch.rows() == 0 {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    let transformed = generator.apply(batch)?;
    let (scores, cache) = critic.forward_batch(&transformed)?;
    let n = transformed.rows();
    let upstream = vec![-1.0 / n as f64; n];
    let mut unused = Grads::zeros_like(critic);
    let input_grads = critic
        .backward_batch(&transformed, &cache, &upstream, &mut unused, true)?
        .expect("input grads requested");
    // d/du_i of exp(u_i)*x_i is the transformed value itself.
    let mut grad_u = vec![0.0; generator.mask().len()];
    for r in 0..n {
        for ((g, ig), y) in grad_u
            .iter_mut()
            .zip(input_grads.row(r))
            .zip(transformed.row(r))
        {
            *g += ig * y;
        }
    }
    let loss = -scores.iter().sum::<f64>() / n as f64;
    Ok((loss, grad_u))
}

/// `coeff_i = mean_i(damaged) / mean_i(undamaged)` per cell, with cells whose
/// undamaged mean is below [`BASELINE_MEAN_EPS`] falling back to 1.
pub fn ratio_of_means_baseline(undamaged: &EventSet, damaged: &EventSet) -> Result<Vec<f64>> {
    if !undamaged.geometry().same_grid(damaged.geometry()) {
        return Err(Error::Shape("event sets have different geometries".into()));
    }
    let n_cells = undamaged.geometry().n_cells();
    let mean_per_cell = |e: &EventSet| {
        let mut m = vec![0.0f64; n_cells];
        for ev in e.iter_events() {
            for (acc, v) in m.iter_mut().zip(ev) {
                *acc += v;
            }
        }
        let n = e.n_events() as f64;
        m.iter_mut().for_each(|v| *v /= n);
        m
    };
    let mu = mean_per_cell(undamaged);
    let md = mean_per_cell(damaged);
    Ok(mu
        .iter()
        .zip(&md)
        .map(|(&u, &d)| if u > BASELINE_MEAN_EPS { d / u } else { 1.0 })
        .collect())
}

/// One epoch's worth of training diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub critic_loss: f64,
    pub generator_loss: f64,
    /// Running estimate of `mean(C(real)) - mean(C(fake))`.
    pub wasserstein_estimate: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mae_vs_truth: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub r2_vs_truth: Option<f64>,
}

/// Full results of one calibration run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub epochs: Vec<EpochRecord>,
    /// Predicted coefficients for masked cells, in mask order.
    pub final_coefficients: Vec<f64>,
    /// Baseline coefficients for cells outside the mask, in row-major order
    /// of their indices.
    pub border_coefficients: Vec<f64>,
    /// Scale the critic inputs were divided by.
    pub normalization_scale: f64,
    /// Not serialized: differs between otherwise identical runs.
    pub wall_seconds: f64,
}

/// Shuffled epoch-style batch drawing over `0..n`; reshuffles whenever the
/// remaining tail cannot fill a batch.
struct BatchSampler {
    indices: Vec<usize>,
    pos: usize,
    rng: rand_chacha::ChaCha8Rng,
}

impl BatchSampler {
    fn new(n: usize, mut rng: rand_chacha::ChaCha8Rng) -> Self {
        use rand::seq::SliceRandom;
        let mut indices: Vec<usize> = (0..n).collect();
        indices.shuffle(&mut rng);
        Self {
            indices,
            pos: 0,
            rng,
        }
    }

    fn next_batch(&mut self, batch_size: usize) -> &[usize] {
        use rand::seq::SliceRandom;
        if self.pos + batch_size > self.indices.len() {
            self.indices.shuffle(&mut self.rng);
            self.pos = 0;
        }
        let batch = &self.indices[self.pos..self.pos + batch_size];
        self.pos += batch_size;
        batch
    }
}

/// Builds the masked, normalized event matrix.
fn masked_matrix(e: &EventSet, mask: &[usize], scale: f64) -> Matrix {
    let mut m = Matrix::zeros(e.n_events(), mask.len());
    for (r, ev) in e.iter_events().enumerate() {
        for (dst, &idx) in m.row_mut(r).iter_mut().zip(mask) {
            *dst = ev[idx] / scale;
        }
    }
    m
}

/// Trains the calibration and returns full-grid predicted coefficients plus
/// the per-epoch report.
///
/// Per batch cycle: `n_critic` critic updates (fresh shuffled batches of
/// damaged events against generator-transformed undamaged events, RMSProp
/// step, then weight clipping) followed by one generator RMSProp step. An
/// epoch runs `min(n_events) / batch_size` cycles. Masked cells take
/// `exp(u)` at the final step; the rest take the ratio-of-means baseline.
pub fn train_calibration(
    undamaged: &EventSet,
    damaged: &EventSet,
    cfg: &TrainConfig,
    truth: Option<&AgingProfile>,
) -> Result<(Vec<f64>, TrainReport)> {
    let start = Instant::now();
    cfg.validate()?;
    if !undamaged.geometry().same_grid(damaged.geometry()) {
        return Err(Error::Shape("event sets have different geometries".into()));
    }
    if let Some(t) = truth {
        if !t.geometry().same_grid(undamaged.geometry()) {
            return Err(Error::Shape("truth profile geometry mismatch".into()));
        }
    }
    let (n_u, n_d) = (undamaged.n_events(), damaged.n_events());
    if n_u < cfg.batch_size || n_d < cfg.batch_size {
        return Err(Error::InvalidArgument(format!(
            "need at least batch_size={} events per set, got {n_u} and {n_d}",
            cfg.batch_size
        )));
    }
    let geom = *undamaged.geometry();
    let mask = central_mask(&geom, cfg.mask_half_width)?;

    let scale = match cfg.normalization {
        Normalization::Fixed(s) => s,
        Normalization::Auto => {
            let (sum, count) = undamaged
                .raw()
                .iter()
                .filter(|&&v| v > 0.0)
                .fold((0.0, 0usize), |(s, c), &v| (s + v, c + 1));
            if count == 0 {
                return Err(Error::InvalidArgument(
                    "undamaged set is all zero; cannot derive a normalization scale".into(),
                ));
            }
            sum / count as f64
        }
    };

    let fake_inputs = masked_matrix(undamaged, &mask, scale);
    let real_inputs = masked_matrix(damaged, &mask, scale);

    let key = master_key(cfg.seed);
    let mut critic = {
        let mut dims = Vec::with_capacity(cfg.critic_hidden.len() + 2);
        dims.push(mask.len());
        dims.extend_from_slice(&cfg.critic_hidden);
        dims.push(1);
        let mut rng = substream(&key, STREAM_CRITIC_INIT);
        let mut mlp = Mlp::new(&dims, CRITIC_ALPHA, &mut rng)?;
        // Stay inside the feasible region from step one.
        mlp.clip_weights(cfg.clip)?;
        mlp
    };
    let mut generator = GeneratorParams::identity(mask.clone())?;

    let mut critic_opt = MlpRmsProp::new(&critic, cfg.lr_critic, DEFAULT_RHO, DEFAULT_EPS)?;
    let mut gen_opt = RmsProp::new(cfg.lr_generator, DEFAULT_RHO, DEFAULT_EPS)?;

    let mut real_sampler = BatchSampler::new(n_d, substream(&key, STREAM_REAL_SAMPLER));
    let mut fake_sampler = BatchSampler::new(n_u, substream(&key, STREAM_FAKE_SAMPLER));

    let truth_masked: Option<Vec<f64>> =
        truth.map(|t| mask.iter().map(|&i| t.a()[i]).collect());

    let cycles = n_u.min(n_d) / cfg.batch_size;
    let mut records = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        // Any non-finite loss or gradient inside a step means the run blew
        // up; surface it as a divergence pointing at this epoch.
        let diverged = |e: Error| match e {
            Error::NonFinite(detail) => Error::Diverged { epoch, detail },
            other => other,
        };
        let mut critic_loss_sum = 0.0;
        let mut gen_loss_sum = 0.0;
        for _ in 0..cycles {
            for _ in 0..cfg.n_critic {
                let real = real_inputs.gather(real_sampler.next_batch(cfg.batch_size));
                let fake_src = fake_inputs.gather(fake_sampler.next_batch(cfg.batch_size));
                let fake = generator.apply(&fake_src)?;
                let (loss, grads) =
                    critic_loss_and_grads(&critic, &real, &fake).map_err(diverged)?;
                if !loss.is_finite() {
                    return Err(Error::Diverged {
                        epoch,
                        detail: format!("critic loss is {loss}"),
                    });
                }
                critic_opt.step(&mut critic, &grads).map_err(diverged)?;
                critic.clip_weights(cfg.clip)?;
                critic_loss_sum += loss;
            }
            let batch = fake_inputs.gather(fake_sampler.next_batch(cfg.batch_size));
            let (loss, grad_u) =
                generator_loss_and_grads(&critic, &generator, &batch).map_err(diverged)?;
            if !loss.is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    detail: format!("generator loss is {loss}"),
                });
            }
            gen_opt.step(&mut generator.u, &grad_u).map_err(diverged)?;
            gen_loss_sum += loss;
        }
        let n_critic_steps = (cycles * cfg.n_critic) as f64;
        let critic_loss = critic_loss_sum / n_critic_steps;
        let (mae_vs_truth, r2_vs_truth) = match &truth_masked {
            Some(t) => {
                let pred = generator.coefficients();
                (metrics::mae(&pred, t).ok(), metrics::r_squared(&pred, t).ok())
            }
            None => (None, None),
        };
        records.push(EpochRecord {
            epoch,
            critic_loss,
            generator_loss: gen_loss_sum / cycles as f64,
            wasserstein_estimate: -critic_loss,
            mae_vs_truth,
            r2_vs_truth,
        });
    }

    let masked_coeffs = generator.coefficients();
    let baseline = ratio_of_means_baseline(undamaged, damaged)?;
    let in_mask = {
        let mut flags = vec![false; geom.n_cells()];
        for &i in &mask {
            flags[i] = true;
        }
        flags
    };
    let mut full = vec![0.0; geom.n_cells()];
    let mut border = Vec::with_capacity(geom.n_cells() - mask.len());
    for (i, slot) in full.iter_mut().enumerate() {
        if in_mask[i] {
            continue;
        }
        // Keep every coefficient strictly positive so downstream calibration
        // never divides by zero; a non-positive ratio means the cell carried
        // no usable signal.
        let c = if baseline[i] > 0.0 { baseline[i] } else { 1.0 };
        *slot = c;
        border.push(c);
    }
    for (&i, &c) in mask.iter().zip(&masked_coeffs) {
        full[i] = c;
    }

    let report = TrainReport {
        epochs: records,
        final_coefficients: masked_coeffs,
        border_coefficients: border,
        normalization_scale: scale,
        wall_seconds: start.elapsed().as_secs_f64(),
    };
    Ok((full, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aging::{apply_damage, make_linear_profile};
    use crate::nn::Dense;
    use crate::sim::{integrated_dose, simulate_events, ShowerModel};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn central_mask_24x24() {
        let geom = DetectorGeometry::default();
        let mask = central_mask(&geom, 6).unwrap();
        assert_eq!(mask.len(), 144);
        assert_eq!(mask[0], 6 * 24 + 6);
        assert_eq!(*mask.last().unwrap(), 17 * 24 + 17);
        for &i in &mask {
            let (r, c) = (i / 24, i % 24);
            assert!((6..=17).contains(&r) && (6..=17).contains(&c));
        }
    }

    #[test]
    fn full_mask_and_errors() {
        let geom = DetectorGeometry::new(8, 8, 1.0).unwrap();
        let all = central_mask(&geom, 4).unwrap();
        assert_eq!(all, (0..64).collect::<Vec<_>>());
        assert!(central_mask(&geom, 0).is_err());
        assert!(central_mask(&geom, 5).is_err());
    }

    #[test]
    fn generator_identity_and_arithmetic() {
        let g = GeneratorParams::identity(vec![0, 1]).unwrap();
        let x = Matrix::from_rows(&[vec![3.0, -2.0]]).unwrap();
        assert_eq!(g.apply(&x).unwrap(), x);

        let mut g = GeneratorParams::identity(vec![0]).unwrap();
        g.u[0] = 0.5f64.ln();
        let x = Matrix::from_rows(&[vec![4.0]]).unwrap();
        assert_eq!(g.apply(&x).unwrap().row(0), &[2.0]);
    }

    #[test]
    fn generator_rejects_mismatch_and_duplicates() {
        let g = GeneratorParams::identity(vec![0, 1]).unwrap();
        let x = Matrix::from_rows(&[vec![1.0]]).unwrap();
        assert!(g.apply(&x).is_err());
        assert!(GeneratorParams::identity(vec![0, 0]).is_err());
        assert!(GeneratorParams::identity(vec![]).is_err());
    }

    fn linear_critic(w: Vec<f64>) -> Mlp {
        let n = w.len();
        Mlp::from_layers(vec![Dense::new(n, 1, w, vec![0.0]).unwrap()], CRITIC_ALPHA).unwrap()
    }

    #[test]
    fn critic_loss_zero_on_identical_batches() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let critic = Mlp::new(&[3, 8, 1], CRITIC_ALPHA, &mut rng).unwrap();
        let batch = Matrix::from_rows(&[
            vec![0.1, 0.5, -0.2],
            vec![1.0, -0.4, 0.3],
            vec![0.0, 0.0, 2.0],
        ])
        .unwrap();
        let (loss, _) = critic_loss_and_grads(&critic, &batch, &batch).unwrap();
        assert_eq!(loss, 0.0);
    }

    #[test]
    fn critic_loss_linear_closed_form() {
        let critic = linear_critic(vec![0.7, -0.3]);
        let real = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 2.0]]).unwrap();
        let fake = Matrix::from_rows(&[vec![2.0, 1.0], vec![4.0, 3.0]]).unwrap();
        // loss = w . (mean(fake) - mean(real))
        let expect = 0.7 * (3.0 - 0.5) + (-0.3) * (2.0 - 1.0);
        let (loss, _) = critic_loss_and_grads(&critic, &real, &fake).unwrap();
        assert!((loss - expect).abs() < 1e-12);
    }

    #[test]
    fn critic_rejects_empty_or_mismatched_batches() {
        let critic = linear_critic(vec![1.0, 1.0]);
        let b = Matrix::from_rows(&[vec![1.0, 2.0]]).unwrap();
        let empty = Matrix::zeros(0, 2);
        assert!(critic_loss_and_grads(&critic, &empty, &b).is_err());
        assert!(critic_loss_and_grads(&critic, &b, &empty).is_err());
        let narrow = Matrix::from_rows(&[vec![1.0]]).unwrap();
        assert!(critic_loss_and_grads(&critic, &b, &narrow).is_err());
    }

    #[test]
    fn generator_grad_linear_closed_form() {
        // u = 0, linear critic: grad_u_i = -w_i * mean(x_i)
        let critic = linear_critic(vec![0.5, -1.5]);
        let g = GeneratorParams::identity(vec![0, 1]).unwrap();
        let batch = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 6.0]]).unwrap();
        let (_, grad_u) = generator_loss_and_grads(&critic, &g, &batch).unwrap();
        assert!((grad_u[0] - (-0.5 * 2.0)).abs() < 1e-12);
        assert!((grad_u[1] - (1.5 * 4.0)).abs() < 1e-12);
    }

    #[test]
    fn generator_grad_zero_on_zero_events() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let critic = Mlp::new(&[3, 6, 1], CRITIC_ALPHA, &mut rng).unwrap();
        let g = GeneratorParams::identity(vec![0, 1, 2]).unwrap();
        let zeros = Matrix::zeros(5, 3);
        let (_, grad_u) = generator_loss_and_grads(&critic, &g, &zeros).unwrap();
        assert!(grad_u.iter().all(|&v| v == 0.0));
    }

    fn fd_close(analytic: f64, numeric: f64, what: &str) {
        let diff = (analytic - numeric).abs();
        let scale = analytic.abs().max(numeric.abs());
        assert!(
            diff <= 1e-8 || diff / scale <= 1e-4,
            "{what}: analytic={analytic:e} numeric={numeric:e}"
        );
    }

    #[test]
    fn critic_grads_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        for trial in 0..20 {
            // Scale weights up so hidden units straddle both rectifier slopes.
            let mut critic = Mlp::new(&[4, 6, 5, 1], CRITIC_ALPHA, &mut rng).unwrap();
            for idx in 0..critic.n_params() {
                critic.set_param(idx, critic.param(idx) * 30.0);
            }
            let rand_mat = |rng: &mut ChaCha8Rng, rows: usize| {
                let data: Vec<Vec<f64>> = (0..rows)
                    .map(|_| (0..4).map(|_| rng.random_range(0.0..3.0)).collect())
                    .collect();
                Matrix::from_rows(&data).unwrap()
            };
            let real = rand_mat(&mut rng, 5);
            let fake = rand_mat(&mut rng, 7);
            let (_, grads) = critic_loss_and_grads(&critic, &real, &fake).unwrap();
            let h = 1e-6;
            for idx in 0..critic.n_params() {
                let orig = critic.param(idx);
                let mut c = critic.clone();
                c.set_param(idx, orig + h);
                let plus = critic_loss_and_grads(&c, &real, &fake).unwrap().0;
                c.set_param(idx, orig - h);
                let minus = critic_loss_and_grads(&c, &real, &fake).unwrap().0;
                fd_close(
                    grads.param(idx),
                    (plus - minus) / (2.0 * h),
                    &format!("trial {trial} param {idx}"),
                );
            }
        }
    }

    #[test]
    fn generator_grads_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        for trial in 0..20 {
            let mut critic = Mlp::new(&[3, 6, 1], CRITIC_ALPHA, &mut rng).unwrap();
            for idx in 0..critic.n_params() {
                critic.set_param(idx, critic.param(idx) * 30.0);
            }
            let mut g = GeneratorParams::identity(vec![0, 1, 2]).unwrap();
            for u in &mut g.u {
                *u = rng.random_range(-0.4..0.4);
            }
            let rows: Vec<Vec<f64>> = (0..6)
                .map(|_| (0..3).map(|_| rng.random_range(0.0..3.0)).collect())
                .collect();
            let batch = Matrix::from_rows(&rows).unwrap();
            let (_, grad_u) = generator_loss_and_grads(&critic, &g, &batch).unwrap();
            let h = 1e-6;
            for (i, &analytic) in grad_u.iter().enumerate() {
                let orig = g.u[i];
                let mut gp = g.clone();
                gp.u[i] = orig + h;
                let plus = generator_loss_and_grads(&critic, &gp, &batch).unwrap().0;
                gp.u[i] = orig - h;
                let minus = generator_loss_and_grads(&critic, &gp, &batch).unwrap().0;
                fd_close(
                    analytic,
                    (plus - minus) / (2.0 * h),
                    &format!("trial {trial} u[{i}]"),
                );
            }
        }
    }

    #[test]
    fn baseline_recovers_shared_shower_damage_exactly() {
        let geom = DetectorGeometry::new(8, 8, 1.0).unwrap();
        let e = simulate_events(&geom, &ShowerModel::default(), 300, 10.0, 50).unwrap();
        let dose = integrated_dose(&e).unwrap();
        let p = make_linear_profile(&geom, &dose, 0.3, 0.5).unwrap();
        let damaged = apply_damage(&e, &p).unwrap();
        let coeffs = ratio_of_means_baseline(&e, &damaged).unwrap();
        let mu: Vec<f64> = {
            let mut m = vec![0.0; 64];
            for ev in e.iter_events() {
                for (acc, v) in m.iter_mut().zip(ev) {
                    *acc += v;
                }
            }
            m
        };
        for i in 0..64 {
            if mu[i] > 0.0 {
                assert!(
                    (coeffs[i] - p.a()[i]).abs() <= 1e-12,
                    "cell {i}: {} vs {}",
                    coeffs[i],
                    p.a()[i]
                );
            } else {
                assert_eq!(coeffs[i], 1.0);
            }
        }
    }

    #[test]
    fn baseline_all_zero_cell_falls_back_to_one() {
        let geom = DetectorGeometry::new(2, 2, 1.0).unwrap();
        let u = EventSet::new(geom, vec![0.0, 1.0, 2.0, 3.0], 10.0, 0).unwrap();
        let d = EventSet::new(geom, vec![0.0, 0.5, 1.0, 1.5], 10.0, 0).unwrap();
        let coeffs = ratio_of_means_baseline(&u, &d).unwrap();
        assert_eq!(coeffs, vec![1.0, 0.5, 0.5, 0.5]);
    }

    /// Small but real end-to-end recovery: 8x8 grid, shared geometry,
    /// independent draws, reduced net. Seconds, not minutes.
    fn tiny_run(truth_damage: bool) -> (Vec<f64>, TrainReport, AgingProfile) {
        let geom = DetectorGeometry::new(8, 8, 30.0).unwrap();
        let model = ShowerModel::default();
        let undamaged = simulate_events(&geom, &model, 600, 10.0, 101).unwrap();
        let source = simulate_events(&geom, &model, 600, 10.0, 202).unwrap();
        let dose = integrated_dose(&source).unwrap();
        let profile = if truth_damage {
            make_linear_profile(&geom, &dose, 0.3, 0.5).unwrap()
        } else {
            AgingProfile::new(geom, vec![1.0; 64]).unwrap()
        };
        let damaged = apply_damage(&source, &profile).unwrap();
        let cfg = TrainConfig {
            epochs: 12,
            batch_size: 32,
            critic_hidden: vec![32, 16],
            mask_half_width: 3,
            seed: 7,
            ..TrainConfig::default()
        };
        let (coeffs, report) = train_calibration(&undamaged, &damaged, &cfg, Some(&profile)).unwrap();
        (coeffs, report, profile)
    }

    #[test]
    fn training_moves_toward_truth() {
        let (coeffs, report, profile) = tiny_run(true);
        assert_eq!(report.epochs.len(), 12);
        let first = report.epochs.first().unwrap().mae_vs_truth.unwrap();
        let last = report.epochs.last().unwrap().mae_vs_truth.unwrap();
        assert!(last < first, "MAE should drop: {first} -> {last}");
        assert!(coeffs.iter().all(|&c| c > 0.0));
        assert_eq!(coeffs.len(), 64);
        // Masked cells carry exp(u), border cells the baseline.
        let mask = central_mask(profile.geometry(), 3).unwrap();
        for (&i, &c) in mask.iter().zip(&report.final_coefficients) {
            assert_eq!(coeffs[i], c);
        }
    }

    #[test]
    fn training_is_deterministic() {
        let (c1, r1, _) = tiny_run(true);
        let (c2, r2, _) = tiny_run(true);
        assert_eq!(c1, c2);
        assert_eq!(r1.epochs, r2.epochs);
        assert_eq!(r1.final_coefficients, r2.final_coefficients);
        assert_eq!(r1.border_coefficients, r2.border_coefficients);
        assert_eq!(r1.normalization_scale, r2.normalization_scale);
    }

    #[test]
    fn training_rejects_insufficient_events() {
        let geom = DetectorGeometry::new(8, 8, 1.0).unwrap();
        let e = simulate_events(&geom, &ShowerModel::default(), 10, 10.0, 1).unwrap();
        let cfg = TrainConfig {
            batch_size: 64,
            ..TrainConfig::default()
        };
        assert!(matches!(
            train_calibration(&e, &e, &cfg, None),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn baseline_error_shrinks_with_sample_size() {
        // Law-of-large-numbers check on fixed truth: 500 -> 5000 -> 50000
        // independent events per set.
        let geom = DetectorGeometry::default();
        let model = ShowerModel::default();
        let reference =
            crate::sim::simulate_events_threaded(&geom, &model, 20_000, 10.0, 900, 4).unwrap();
        let dose = integrated_dose(&reference).unwrap();
        let truth = make_linear_profile(&geom, &dose, 0.3, 0.5).unwrap();

        let mut errs = Vec::new();
        for (n, seed_u, seed_d) in [(500, 901, 902), (5000, 903, 904), (50_000, 905, 906)] {
            let u = crate::sim::simulate_events_threaded(&geom, &model, n, 10.0, seed_u, 4).unwrap();
            let s = crate::sim::simulate_events_threaded(&geom, &model, n, 10.0, seed_d, 4).unwrap();
            let d = apply_damage(&s, &truth).unwrap();
            let est = ratio_of_means_baseline(&u, &d).unwrap();
            // Score only cells with real occupancy.
            let mu: Vec<f64> = {
                let mut m = vec![0.0; geom.n_cells()];
                for ev in u.iter_events() {
                    for (acc, v) in m.iter_mut().zip(ev) {
                        *acc += v;
                    }
                }
                m.iter().map(|v| v / n as f64).collect()
            };
            let idx: Vec<usize> = (0..geom.n_cells()).filter(|&i| mu[i] >= 1.0).collect();
            let pred: Vec<f64> = idx.iter().map(|&i| est[i]).collect();
            let tr: Vec<f64> = idx.iter().map(|&i| truth.a()[i]).collect();
            errs.push(crate::metrics::mae(&pred, &tr).unwrap());
        }
        assert!(
            errs[0] > errs[1] && errs[1] > errs[2],
            "baseline MAE should shrink with events: {errs:?}"
        );
    }

    #[test]
    fn critic_stays_clipped_through_updates() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        let clip = 0.01;
        let mut critic = Mlp::new(&[4, 16, 8, 1], CRITIC_ALPHA, &mut rng).unwrap();
        critic.clip_weights(clip).unwrap();
        let mut opt = crate::nn::MlpRmsProp::new(&critic, 5e-5, 0.9, 1e-8).unwrap();
        for _ in 0..50 {
            let rows: Vec<Vec<f64>> = (0..8)
                .map(|_| (0..4).map(|_| rng.random_range(0.0..4.0)).collect())
                .collect();
            let real = Matrix::from_rows(&rows[..4]).unwrap();
            let fake = Matrix::from_rows(&rows[4..]).unwrap();
            let (_, grads) = critic_loss_and_grads(&critic, &real, &fake).unwrap();
            opt.step(&mut critic, &grads).unwrap();
            critic.clip_weights(clip).unwrap();
            assert!(critic.max_abs_param() <= clip);
        }
    }

    #[test]
    fn config_serde_roundtrip_and_normalization_forms() {
        let cfg: TrainConfig = toml::from_str("normalization = \"auto\"").unwrap();
        assert_eq!(cfg.normalization, Normalization::Auto);
        assert_eq!(cfg.epochs, 100);
        let cfg: TrainConfig = toml::from_str("normalization = 2.5").unwrap();
        assert_eq!(cfg.normalization, Normalization::Fixed(2.5));
        assert!(toml::from_str::<TrainConfig>("normalization = \"mean\"").is_err());
        assert!(toml::from_str::<TrainConfig>("unknown_key = 1").is_err());
    }
}
