//! Dense MLP scorer with hand-written backprop.
//!
//! The network is a chain of affine layers with leaky-rectifier activations
//! on every hidden layer and a raw scalar output (no output nonlinearity).
//! `backward` returns gradients with respect to every parameter *and* the
//! input vector; the latter is what drives the multiplicative generator.

use rand::Rng;

use super::Matrix;
use crate::error::{Error, Result};

/// Half-width of the uniform weight initialization range. Matches the
/// default clip range so a freshly initialized scorer is already feasible.
pub const INIT_RANGE: f64 = 0.01;

/// One affine layer: `z = W x + b`, weights row-major `(out_dim, in_dim)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub(crate) in_dim: usize,
    pub(crate) out_dim: usize,
    pub(crate) w: Vec<f64>,
    pub(crate) b: Vec<f64>,
}

impl Dense {
    pub fn new(in_dim: usize, out_dim: usize, w: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if in_dim == 0 || out_dim == 0 {
            return Err(Error::InvalidArgument("layer dims must be > 0".into()));
        }
        if w.len() != in_dim * out_dim || b.len() != out_dim {
            return Err(Error::Shape(format!(
                "layer params: got w={}, b={}, expected w={}, b={}",
                w.len(),
                b.len(),
                in_dim * out_dim,
                out_dim
            )));
        }
        if w.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("layer parameter".into()));
        }
        Ok(Self {
            in_dim,
            out_dim,
            w,
            b,
        })
    }

    #[inline]
    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    #[inline]
    pub fn biases(&self) -> &[f64] {
        &self.b
    }
}

/// Parameters of the scorer network.
///
/// Invariants: consecutive layer dims chain, the final layer has a single
/// output, and `alpha` is the negative slope of the hidden leaky rectifier.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layers: Vec<Dense>,
    alpha: f64,
}

/// Per-sample forward cache: the input vector of every layer
/// (`inputs[0]` is the raw input, `inputs[l]` the activation feeding layer `l`).
#[derive(Debug, Clone)]
pub struct Cache {
    inputs: Vec<Vec<f64>>,
}

/// Batched forward cache: activation matrices feeding layers `1..L`.
#[derive(Debug, Clone)]
pub struct BatchCache {
    activations: Vec<Matrix>,
}

/// Parameter gradients, shaped exactly like the network.
#[derive(Debug, Clone)]
pub struct Grads {
    pub layers: Vec<LayerGrads>,
}

#[derive(Debug, Clone)]
pub struct LayerGrads {
    pub dw: Vec<f64>,
    pub db: Vec<f64>,
}

impl Grads {
    pub fn zeros_like(mlp: &Mlp) -> Self {
        Self {
            layers: mlp
                .layers
                .iter()
                .map(|l| LayerGrads {
                    dw: vec![0.0; l.w.len()],
                    db: vec![0.0; l.b.len()],
                })
                .collect(),
        }
    }

    pub fn zero(&mut self) {
        for l in &mut self.layers {
            l.dw.fill(0.0);
            l.db.fill(0.0);
        }
    }

    /// Flat parameter count (weights then biases, per layer).
    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.dw.len() + l.db.len()).sum()
    }

    /// Flat read access matching [`Mlp::param`] indexing.
    pub fn param(&self, mut idx: usize) -> f64 {
        for l in &self.layers {
            if idx < l.dw.len() {
                return l.dw[idx];
            }
            idx -= l.dw.len();
            if idx < l.db.len() {
                return l.db[idx];
            }
            idx -= l.db.len();
        }
        panic!("parameter index out of range");
    }
}

#[inline]
fn leaky(z: f64, alpha: f64) -> f64 {
    if z > 0.0 {
        z
    } else {
        alpha * z
    }
}

/// Activation slope recovered from the activation *output*. The leaky
/// rectifier preserves sign for `alpha > 0`, so the output is enough.
#[inline]
fn slope_from_output(y: f64, alpha: f64) -> f64 {
    if y > 0.0 {
        1.0
    } else {
        alpha
    }
}

impl Mlp {
    /// Builds a scorer with layer sizes `dims` (input first, final must be 1),
    /// weights and biases drawn uniformly from `[-INIT_RANGE, INIT_RANGE]`.
    pub fn new<R: Rng + ?Sized>(dims: &[usize], alpha: f64, rng: &mut R) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::InvalidArgument(
                "need at least an input and an output layer".into(),
            ));
        }
        if *dims.last().unwrap() != 1 {
            return Err(Error::InvalidArgument(format!(
                "final layer must have 1 output, got {}",
                dims.last().unwrap()
            )));
        }
        let mut layers = Vec::with_capacity(dims.len() - 1);
        for win in dims.windows(2) {
            let (ni, no) = (win[0], win[1]);
            if ni == 0 || no == 0 {
                return Err(Error::InvalidArgument("layer dims must be > 0".into()));
            }
            let w = (0..ni * no)
                .map(|_| rng.random_range(-INIT_RANGE..=INIT_RANGE))
                .collect();
            let b = (0..no)
                .map(|_| rng.random_range(-INIT_RANGE..=INIT_RANGE))
                .collect();
            layers.push(Dense::new(ni, no, w, b)?);
        }
        Self::from_layers(layers, alpha)
    }

    /// Builds a scorer from explicit layers (used by tests and tooling).
    pub fn from_layers(layers: Vec<Dense>, alpha: f64) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidArgument("no layers".into()));
        }
        for pair in layers.windows(2) {
            if pair[0].out_dim != pair[1].in_dim {
                return Err(Error::Shape(format!(
                    "layer dims do not chain: {} -> {}",
                    pair[0].out_dim, pair[1].in_dim
                )));
            }
        }
        if layers.last().unwrap().out_dim != 1 {
            return Err(Error::Shape("final layer output dim must be 1".into()));
        }
        if !alpha.is_finite() || !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidArgument(format!(
                "activation slope must be finite in [0, 1], got {alpha}"
            )));
        }
        Ok(Self { layers, alpha })
    }

    #[inline]
    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    #[inline]
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    #[inline]
    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    #[inline]
    pub(crate) fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    /// Flat parameter count (weights then biases, per layer).
    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    /// Flat read access; ordering is weights then biases, layer by layer.
    pub fn param(&self, mut idx: usize) -> f64 {
        for l in &self.layers {
            if idx < l.w.len() {
                return l.w[idx];
            }
            idx -= l.w.len();
            if idx < l.b.len() {
                return l.b[idx];
            }
            idx -= l.b.len();
        }
        panic!("parameter index out of range");
    }

    /// Flat write access matching [`Mlp::param`].
    pub fn set_param(&mut self, mut idx: usize, v: f64) {
        for l in &mut self.layers {
            if idx < l.w.len() {
                l.w[idx] = v;
                return;
            }
            idx -= l.w.len();
            if idx < l.b.len() {
                l.b[idx] = v;
                return;
            }
            idx -= l.b.len();
        }
        panic!("parameter index out of range");
    }

    /// Largest absolute weight or bias across the network.
    pub fn max_abs_param(&self) -> f64 {
        self.layers
            .iter()
            .flat_map(|l| l.w.iter().chain(l.b.iter()))
            .fold(0.0, |m, &v| m.max(v.abs()))
    }

    /// Clamps every weight and bias into `[-c, c]`. Idempotent.
    pub fn clip_weights(&mut self, c: f64) -> Result<()> {
        if !c.is_finite() || c <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "clip range must be > 0, got {c}"
            )));
        }
        for l in &mut self.layers {
            for v in l.w.iter_mut().chain(l.b.iter_mut()) {
                *v = v.clamp(-c, c);
            }
        }
        Ok(())
    }

    /// Scores one input. Returns the raw final pre-activation and the cache
    /// needed by [`Mlp::backward`].
    pub fn forward(&self, x: &[f64]) -> Result<(f64, Cache)> {
        if x.len() != self.input_dim() {
            return Err(Error::Shape(format!(
                "input dim {} does not match network input {}",
                x.len(),
                self.input_dim()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("network input".into()));
        }
        let n_layers = self.layers.len();
        let mut inputs = Vec::with_capacity(n_layers);
        inputs.push(x.to_vec());
        for (li, layer) in self.layers.iter().enumerate() {
            let cur = inputs.last().unwrap();
            let mut z = vec![0.0; layer.out_dim];
            for (o, zo) in z.iter_mut().enumerate() {
                let row = &layer.w[o * layer.in_dim..(o + 1) * layer.in_dim];
                let mut acc = layer.b[o];
                for (wv, xv) in row.iter().zip(cur.iter()) {
                    acc += wv * xv;
                }
                *zo = acc;
            }
            if li + 1 == n_layers {
                return Ok((z[0], Cache { inputs }));
            }
            for zo in &mut z {
                *zo = leaky(*zo, self.alpha);
            }
            inputs.push(z);
        }
        unreachable!("empty layer list is rejected at construction")
    }

    /// Backpropagates a scalar `upstream` through a cached forward pass.
    /// Returns gradients of `upstream * score` w.r.t. every parameter and
    /// w.r.t. the input vector.
    pub fn backward(&self, cache: &Cache, upstream: f64) -> Result<(Grads, Vec<f64>)> {
        self.check_cache(cache)?;
        let mut grads = Grads::zeros_like(self);
        let mut delta = vec![upstream];
        for li in (0..self.layers.len()).rev() {
            let layer = &self.layers[li];
            let input = &cache.inputs[li];
            let lg = &mut grads.layers[li];
            for (o, &d) in delta.iter().enumerate() {
                lg.db[o] += d;
                let row = &mut lg.dw[o * layer.in_dim..(o + 1) * layer.in_dim];
                for (g, xv) in row.iter_mut().zip(input.iter()) {
                    *g += d * xv;
                }
            }
            // Backpropagate to this layer's input.
            let mut prev = vec![0.0; layer.in_dim];
            for (o, &d) in delta.iter().enumerate() {
                let row = &layer.w[o * layer.in_dim..(o + 1) * layer.in_dim];
                for (p, wv) in prev.iter_mut().zip(row.iter()) {
                    *p += d * wv;
                }
            }
            if li > 0 {
                // Through the activation that produced this layer's input.
                for (p, &y) in prev.iter_mut().zip(input.iter()) {
                    *p *= slope_from_output(y, self.alpha);
                }
            }
            delta = prev;
        }
        Ok((grads, delta))
    }

    fn check_cache(&self, cache: &Cache) -> Result<()> {
        if cache.inputs.len() != self.layers.len() {
            return Err(Error::Shape("stale cache: layer count mismatch".into()));
        }
        for (l, inp) in self.layers.iter().zip(cache.inputs.iter()) {
            if inp.len() != l.in_dim {
                return Err(Error::Shape("stale cache: layer input dim mismatch".into()));
            }
        }
        Ok(())
    }

    /// Batched forward pass: one score per row of `x`.
    pub fn forward_batch(&self, x: &Matrix) -> Result<(Vec<f64>, BatchCache)> {
        if x.cols() != self.input_dim() {
            return Err(Error::Shape(format!(
                "batch width {} does not match network input {}",
                x.cols(),
                self.input_dim()
            )));
        }
        if x.data().iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("network batch input".into()));
        }
        let n = x.rows();
        let n_layers = self.layers.len();
        let mut activations: Vec<Matrix> = Vec::with_capacity(n_layers.saturating_sub(1));
        let mut scores = vec![0.0; n];
        for (li, layer) in self.layers.iter().enumerate() {
            let last = li + 1 == n_layers;
            let mut z = Matrix::zeros(n, layer.out_dim);
            for r in 0..n {
                let cur = if li == 0 {
                    x.row(r)
                } else {
                    activations[li - 1].row(r)
                };
                let zr = z.row_mut(r);
                for (o, zo) in zr.iter_mut().enumerate() {
                    let row = &layer.w[o * layer.in_dim..(o + 1) * layer.in_dim];
                    let mut acc = layer.b[o];
                    for (wv, xv) in row.iter().zip(cur.iter()) {
                        acc += wv * xv;
                    }
                    *zo = acc;
                }
            }
            if last {
                for (s, zr) in scores.iter_mut().zip(0..n) {
                    *s = z.row(zr)[0];
                }
                return Ok((scores, BatchCache { activations }));
            }
            for v in z.data_mut() {
                *v = leaky(*v, self.alpha);
            }
            activations.push(z);
        }
        unreachable!("empty layer list is rejected at construction")
    }

    /// Batched backward pass with one `upstream` scalar per sample.
    /// Parameter gradients are accumulated into `grads` (summed over the
    /// batch); per-sample input gradients are returned when requested.
    pub fn backward_batch(
        &self,
        x: &Matrix,
        cache: &BatchCache,
        upstream: &[f64],
        grads: &mut Grads,
        want_input_grads: bool,
    ) -> Result<Option<Matrix>> {
        let n = x.rows();
        if upstream.len() != n || cache.activations.len() + 1 != self.layers.len() {
            return Err(Error::Shape("stale batch cache".into()));
        }
        if grads.layers.len() != self.layers.len() {
            return Err(Error::Shape("gradient buffer shape mismatch".into()));
        }
        let mut delta = Matrix::zeros(n, 1);
        for (r, &u) in upstream.iter().enumerate() {
            delta.row_mut(r)[0] = u;
        }
        for li in (0..self.layers.len()).rev() {
            let layer = &self.layers[li];
            let input: &Matrix = if li == 0 { x } else { &cache.activations[li - 1] };
            let lg = &mut grads.layers[li];
            for r in 0..n {
                let d_row = delta.row(r);
                let in_row = input.row(r);
                for (o, &d) in d_row.iter().enumerate() {
                    lg.db[o] += d;
                    let grow = &mut lg.dw[o * layer.in_dim..(o + 1) * layer.in_dim];
                    for (g, xv) in grow.iter_mut().zip(in_row.iter()) {
                        *g += d * xv;
                    }
                }
            }
            if li == 0 && !want_input_grads {
                return Ok(None);
            }
            // delta_prev = (delta @ W) [* activation slope except at the raw input]
            let mut prev = Matrix::zeros(n, layer.in_dim);
            for r in 0..n {
                let d_row = delta.row(r);
                let p_row = prev.row_mut(r);
                for (o, &d) in d_row.iter().enumerate() {
                    let wrow = &layer.w[o * layer.in_dim..(o + 1) * layer.in_dim];
                    for (p, wv) in p_row.iter_mut().zip(wrow.iter()) {
                        *p += d * wv;
                    }
                }
                if li > 0 {
                    let in_row = input.row(r);
                    for (p, &y) in p_row.iter_mut().zip(in_row.iter()) {
                        *p *= slope_from_output(y, self.alpha);
                    }
                }
            }
            if li == 0 {
                return Ok(Some(prev));
            }
            delta = prev;
        }
        unreachable!("loop returns at layer 0")
    }
}
