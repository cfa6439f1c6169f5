//! Evaluation metrics: MAE, R-squared, per-event energy sums, the empirical
//! one-dimensional Wasserstein distance, and histogram extraction.

use crate::error::{Error, Result};
use crate::sim::EventSet;

/// Mean absolute error between two equal-length vectors.
pub fn mae(pred: &[f64], truth: &[f64]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::Shape(format!(
            "length mismatch: {} vs {}",
            pred.len(),
            truth.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::InvalidArgument("need at least one element".into()));
    }
    Ok(pred
        .iter()
        .zip(truth)
        .map(|(p, t)| (p - t).abs())
        .sum::<f64>()
        / pred.len() as f64)
}

/// Coefficient of determination `1 - SS_res/SS_tot`, totals about the truth
/// mean. Errors on constant truth.
pub fn r_squared(pred: &[f64], truth: &[f64]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::Shape(format!(
            "length mismatch: {} vs {}",
            pred.len(),
            truth.len()
        )));
    }
    if truth.len() < 2 {
        return Err(Error::InvalidArgument("need at least two elements".into()));
    }
    let mean = truth.iter().sum::<f64>() / truth.len() as f64;
    let ss_tot: f64 = truth.iter().map(|t| (t - mean) * (t - mean)).sum();
    if ss_tot == 0.0 {
        return Err(Error::InvalidArgument(
            "truth is constant; R^2 is undefined".into(),
        ));
    }
    let ss_res: f64 = pred
        .iter()
        .zip(truth)
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// Per-event total visible energy in MeV.
pub fn energy_sum(e: &EventSet) -> Vec<f64> {
    e.iter_events().map(|ev| ev.iter().sum()).collect()
}

/// Empirical Wasserstein-1 distance between two samples: the integral of
/// `|F_a - F_b|` over the real line, computed by sweeping the merged sorted
/// samples. For equal sizes this reduces to the mean absolute difference of
/// sorted order statistics.
pub fn wasserstein1_empirical(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidArgument("empty sample".into()));
    }
    if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("sample value".into()));
    }
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_by(|x, y| x.partial_cmp(y).unwrap());
    sb.sort_by(|x, y| x.partial_cmp(y).unwrap());

    let (n, m) = (sa.len() as f64, sb.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut last = sa[0].min(sb[0]);
    let mut w = 0.0;
    while i < sa.len() || j < sb.len() {
        let next = match (sa.get(i), sb.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => unreachable!(),
        };
        w += (i as f64 / n - j as f64 / m).abs() * (next - last);
        while i < sa.len() && sa[i] == next {
            i += 1;
        }
        while j < sb.len() && sb[j] == next {
            j += 1;
        }
        last = next;
    }
    Ok(w)
}

/// Uniformly binned histogram with explicit under/overflow counts.
///
/// Bins are left-closed right-open; the last bin also includes its right
/// edge, so a value equal to `hi` is counted rather than overflowed.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub underflow: u64,
    pub overflow: u64,
}

pub fn histogram(values: &[f64], n_bins: usize, lo: f64, hi: f64) -> Result<Histogram> {
    if n_bins == 0 {
        return Err(Error::InvalidArgument("need at least one bin".into()));
    }
    if !lo.is_finite() || !hi.is_finite() || lo >= hi {
        return Err(Error::InvalidArgument(format!(
            "bad histogram range [{lo}, {hi})"
        )));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::NonFinite("histogram input".into()));
    }
    let width = (hi - lo) / n_bins as f64;
    let edges = (0..=n_bins)
        .map(|i| {
            if i == n_bins {
                hi
            } else {
                lo + i as f64 * width
            }
        })
        .collect();
    let mut counts = vec![0u64; n_bins];
    let (mut underflow, mut overflow) = (0u64, 0u64);
    for &v in values {
        if v < lo {
            underflow += 1;
        } else if v > hi {
            overflow += 1;
        } else if v == hi {
            counts[n_bins - 1] += 1;
        } else {
            let idx = (((v - lo) / (hi - lo)) * n_bins as f64) as usize;
            counts[idx.min(n_bins - 1)] += 1;
        }
    }
    Ok(Histogram {
        edges,
        counts,
        underflow,
        overflow,
    })
}
