use serde::{Deserialize, Serialize};

/// Largest f64 strictly below 1. Saturating activations are clamped to this
/// so their open codomains hold for every finite input.
const BELOW_ONE: f64 = 1.0 - f64::EPSILON / 2.0;

/// Element-wise activation of a dense layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Activation {
    LeakyRelu { alpha: f64 },
    Tanh,
    Sigmoid,
    Identity,
}

impl Activation {
    pub fn tag(&self) -> &'static str {
        match self {
            Activation::LeakyRelu { .. } => "lrelu",
            Activation::Tanh => "tanh",
            Activation::Sigmoid => "sigmoid",
            Activation::Identity => "identity",
        }
    }

    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        match *self {
            Activation::LeakyRelu { alpha } => lrelu(x, alpha),
            Activation::Tanh => x.tanh().clamp(-BELOW_ONE, BELOW_ONE),
            Activation::Sigmoid => sigmoid(x),
            Activation::Identity => x,
        }
    }

    /// Derivative with respect to the pre-activation, given both the
    /// pre-activation and the (already computed) activation output.
    #[inline]
    pub fn derivative(&self, pre: f64, post: f64) -> f64 {
        match *self {
            Activation::LeakyRelu { alpha } => {
                if pre >= 0.0 {
                    1.0
                } else {
                    alpha
                }
            }
            Activation::Tanh => 1.0 - post * post,
            Activation::Sigmoid => post * (1.0 - post),
            Activation::Identity => 1.0,
        }
    }
}

/// Leaky rectifier: `x` for non-negative input, `alpha * x` otherwise.
#[inline]
pub fn lrelu(x: f64, alpha: f64) -> f64 {
    if x >= 0.0 {
        x
    } else {
        alpha * x
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    let s = if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    };
    s.clamp(f64::MIN_POSITIVE, BELOW_ONE)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lrelu_branches() {
        assert_eq!(lrelu(2.0, 0.4), 2.0);
        assert!((lrelu(-1.0, 0.4) - (-0.4)).abs() < 1e-15);
        assert_eq!(lrelu(0.0, 0.4), 0.0);
    }

    #[test]
    fn saturating_codomains_are_open() {
        for x in [-1e6, -800.0, -40.0, -1.0, 0.0, 1.0, 40.0, 800.0, 1e6] {
            let s = Activation::Sigmoid.apply(x);
            assert!(s > 0.0 && s < 1.0, "sigmoid({x}) = {s}");
            let t = Activation::Tanh.apply(x);
            assert!(t > -1.0 && t < 1.0, "tanh({x}) = {t}");
        }
    }
}
