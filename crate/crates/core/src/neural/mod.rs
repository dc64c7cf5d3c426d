//! Dense feed-forward networks with reverse-mode gradients and Adam.
//!
//! Networks work on row-major batches (`n_samples x n_features`). A forward
//! pass returns a [`ForwardTrace`] that `backward` consumes; the trace is
//! validated against the network so a stale or foreign trace is an error
//! rather than a silent wrong gradient.

mod activation;
mod adam;
mod network;

pub use activation::{lrelu, sigmoid, Activation};
pub use adam::{adam_step, AdamState, DEFAULT_BETA1, DEFAULT_BETA2, DEFAULT_EPSILON};
pub use network::{glorot_init, DenseLayer, ForwardTrace, Gradients, LayerGradient, Network};


/// LReLU slope used by every network in the model.
pub const DEFAULT_LRELU_ALPHA: f64 = 0.4;
