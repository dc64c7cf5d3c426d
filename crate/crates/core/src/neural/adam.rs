use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_BETA1: f64 = 0.9;
pub const DEFAULT_BETA2: f64 = 0.999;
pub const DEFAULT_EPSILON: f64 = 1e-9;

/// Bias-corrected Adam state for a list of flat parameter tensors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub learning_rate: f64,
    step_count: u64,
    first_moment: Vec<Vec<f64>>,
    second_moment: Vec<Vec<f64>>,
}

impl AdamState {
    /// Fresh state with zeroed moments for tensors of the given sizes.
    pub fn new(shapes: &[usize], learning_rate: f64) -> Result<Self> {
        Self::with_hyperparameters(
            shapes,
            learning_rate,
            DEFAULT_BETA1,
            DEFAULT_BETA2,
            DEFAULT_EPSILON,
        )
    }

    pub fn with_hyperparameters(
        shapes: &[usize],
        learning_rate: f64,
        beta1: f64,
        beta2: f64,
        epsilon: f64,
    ) -> Result<Self> {
        if !(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0) {
            return Err(Error::config(format!(
                "Adam betas must lie in (0,1), got {beta1}, {beta2}"
            )));
        }
        if !(epsilon > 0.0) {
            return Err(Error::config("Adam epsilon must be positive"));
        }
        // Zero is accepted so a network can be frozen inside a training loop.
        if !(learning_rate >= 0.0 && learning_rate.is_finite()) {
            return Err(Error::config(format!(
                "learning rate must be non-negative, got {learning_rate}"
            )));
        }
        Ok(Self {
            beta1,
            beta2,
            epsilon,
            learning_rate,
            step_count: 0,
            first_moment: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            second_moment: shapes.iter().map(|&n| vec![0.0; n]).collect(),
        })
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn first_moment(&self) -> &[Vec<f64>] {
        &self.first_moment
    }

    pub fn second_moment(&self) -> &[Vec<f64>] {
        &self.second_moment
    }

    /// One Adam update of `params` in place.
    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]]) -> Result<()> {
        if params.len() != self.first_moment.len() || grads.len() != params.len() {
            return Err(Error::dim(format!(
                "Adam tracks {} tensors, got {} parameters and {} gradients",
                self.first_moment.len(),
                params.len(),
                grads.len()
            )));
        }
        for (i, (p, g)) in params.iter().zip(grads).enumerate() {
            if p.len() != g.len() || p.len() != self.first_moment[i].len() {
                return Err(Error::dim(format!(
                    "tensor {i}: parameter {} / gradient {} / moment {} sizes differ",
                    p.len(),
                    g.len(),
                    self.first_moment[i].len()
                )));
            }
        }

        self.step_count += 1;
        let t = self.step_count as i32;
        let (b1, b2) = (self.beta1, self.beta2);
        let correction1 = 1.0 - b1.powi(t);
        let correction2 = 1.0 - b2.powi(t);
        let lr = self.learning_rate;
        let eps = self.epsilon;

        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.first_moment.iter_mut().zip(self.second_moment.iter_mut()))
        {
            for j in 0..p.len() {
                let gj = g[j];
                m[j] = b1 * m[j] + (1.0 - b1) * gj;
                v[j] = b2 * v[j] + (1.0 - b2) * gj * gj;
                let m_hat = m[j] / correction1;
                let v_hat = v[j] / correction2;
                p[j] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

/// Free-function form of [`AdamState::step`].
pub fn adam_step(params: &mut [&mut [f64]], grads: &[&[f64]], state: &mut AdamState) -> Result<()> {
    state.step(params, grads)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_matches_hand_evaluation() {
        let mut state = AdamState::new(&[1], 0.1).unwrap();
        let mut p = [0.0];
        state.step(&mut [&mut p[..]], &[&[1.0]]).unwrap();
        assert!((state.first_moment()[0][0] - 0.1).abs() < 1e-15);
        assert!((state.second_moment()[0][0] - 0.001).abs() < 1e-15);
        assert!((p[0] - (-0.1 / (1.0 + 1e-9))).abs() < 1e-15);
        assert_eq!(state.step_count(), 1);
    }

    #[test]
    fn zero_gradient_leaves_parameter_unchanged() {
        let mut state = AdamState::new(&[2], 0.1).unwrap();
        let mut p = [0.5, -3.0];
        state.step(&mut [&mut p[..]], &[&[0.0, 0.0]]).unwrap();
        assert_eq!(p, [0.5, -3.0]);
    }

    #[test]
    fn two_steps_move_further_than_one() {
        let mut one = AdamState::new(&[1], 0.01).unwrap();
        let mut p1 = [1.0];
        one.step(&mut [&mut p1[..]], &[&[0.7]]).unwrap();

        let mut two = AdamState::new(&[1], 0.01).unwrap();
        let mut p2 = [1.0];
        two.step(&mut [&mut p2[..]], &[&[0.7]]).unwrap();
        two.step(&mut [&mut p2[..]], &[&[0.7]]).unwrap();
        assert_eq!(two.step_count(), 2);
        assert!((p2[0] - 1.0).abs() > (p1[0] - 1.0).abs());
    }

    #[test]
    fn shape_mismatch_is_a_dimension_error() {
        let mut state = AdamState::new(&[2], 0.1).unwrap();
        let mut p = [0.0, 0.0, 0.0];
        let err = state.step(&mut [&mut p[..]], &[&[1.0, 1.0, 1.0]]).unwrap_err();
        assert!(matches!(err, Error::Dimension(_)));
        assert_eq!(state.step_count(), 0);
    }

    #[test]
    fn rejects_bad_hyperparameters() {
        assert!(AdamState::with_hyperparameters(&[1], 0.1, 1.0, 0.999, 1e-9).is_err());
        assert!(AdamState::with_hyperparameters(&[1], 0.1, 0.9, 0.999, 0.0).is_err());
        assert!(AdamState::new(&[1], -1.0).is_err());
    }
}
