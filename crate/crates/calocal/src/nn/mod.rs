//! Minimal dense-network kernel: an MLP scorer with analytic gradients for
//! both parameters and inputs, an RMSProp optimizer, and weight clipping.
//!
//! Everything is plain `f64` on the heap; no autodiff, no BLAS. The scorer
//! has a single raw (linear) output and leaky-rectifier hidden activations,
//! which keeps its Lipschitz constant bounded once weights are clipped.

mod matrix;
mod mlp;
mod optim;

pub use matrix::Matrix;
pub use mlp::{BatchCache, Cache, Dense, Grads, Mlp, INIT_RANGE};
pub use optim::{MlpRmsProp, RmsProp, DEFAULT_EPS, DEFAULT_RHO};
