//! RMSProp: per-parameter second-moment scaling of gradient steps.

use super::{Grads, Mlp};
use crate::error::{Error, Result};

/// Default second-moment decay.
pub const DEFAULT_RHO: f64 = 0.9;
/// Default denominator fuzz.
pub const DEFAULT_EPS: f64 = 1e-8;

/// RMSProp state for one flat parameter tensor.
///
/// Update rule, elementwise:
/// `s <- rho*s + (1-rho)*g^2; theta <- theta - lr*g/(sqrt(s)+eps)`.
#[derive(Debug, Clone)]
pub struct RmsProp {
    lr: f64,
    rho: f64,
    eps: f64,
    sq: Vec<f64>,
}

impl RmsProp {
    pub fn new(lr: f64, rho: f64, eps: f64) -> Result<Self> {
        if !(lr > 0.0 && lr.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "learning rate must be finite and > 0, got {lr}"
            )));
        }
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "decay must lie in (0, 1), got {rho}"
            )));
        }
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "epsilon must be finite and > 0, got {eps}"
            )));
        }
        Ok(Self {
            lr,
            rho,
            eps,
            sq: Vec::new(),
        })
    }

    /// Running second-moment accumulators (empty until the first step).
    pub fn second_moment(&self) -> &[f64] {
        &self.sq
    }

    /// Applies one update in place. The accumulator is sized on first use.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        if params.len() != grads.len() {
            return Err(Error::Shape(format!(
                "params ({}) and grads ({}) differ in length",
                params.len(),
                grads.len()
            )));
        }
        if self.sq.is_empty() {
            self.sq = vec![0.0; params.len()];
        } else if self.sq.len() != params.len() {
            return Err(Error::Shape(
                "optimizer state does not match parameter tensor".into(),
            ));
        }
        if let Some(i) = grads.iter().position(|g| !g.is_finite()) {
            return Err(Error::NonFinite(format!(
                "gradient entry {i} is {}",
                grads[i]
            )));
        }
        for ((p, &g), s) in params.iter_mut().zip(grads).zip(self.sq.iter_mut()) {
            *s = self.rho * *s + (1.0 - self.rho) * g * g;
            *p -= self.lr * g / (s.sqrt() + self.eps);
        }
        Ok(())
    }
}

/// RMSProp over every tensor of an [`Mlp`] (one state per weight matrix and
/// bias vector).
#[derive(Debug, Clone)]
pub struct MlpRmsProp {
    states: Vec<(RmsProp, RmsProp)>,
}

impl MlpRmsProp {
    pub fn new(mlp: &Mlp, lr: f64, rho: f64, eps: f64) -> Result<Self> {
        let states = mlp
            .layers()
            .iter()
            .map(|_| Ok((RmsProp::new(lr, rho, eps)?, RmsProp::new(lr, rho, eps)?)))
            .collect::<Result<_>>()?;
        Ok(Self { states })
    }

    pub fn step(&mut self, mlp: &mut Mlp, grads: &Grads) -> Result<()> {
        if grads.layers.len() != self.states.len() {
            return Err(Error::Shape(
                "gradient layer count does not match optimizer state".into(),
            ));
        }
        for ((layer, lg), (sw, sb)) in mlp
            .layers_mut()
            .iter_mut()
            .zip(grads.layers.iter())
            .zip(self.states.iter_mut())
        {
            sw.step(&mut layer.w, &lg.dw)?;
            sb.step(&mut layer.b, &lg.db)?;
        }
        Ok(())
    }
}
