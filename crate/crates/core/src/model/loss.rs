use ndarray::{Array2, ArrayView1, ArrayView2};

use crate::data::AttributeSchema;
use crate::error::{Error, Result};

/// Lower bound on any probability passed to `log`.
pub const PROB_FLOOR: f64 = 1e-7;

#[inline]
fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_FLOOR, 1.0 - PROB_FLOOR)
}

/// Value and gradient of a batch loss with respect to the network outputs.
#[derive(Debug, Clone)]
pub struct LossWithGradient {
    pub loss: f64,
    pub gradient: Array2<f64>,
}

/// Combined categorical cross-entropy / continuous squared-error loss.
///
/// Each one-hot block of the reconstruction is renormalised to sum to 1
/// before the log. The cross-entropy is summed over blocks and the squared
/// error over continuous dimensions; both are averaged over the batch and
/// mixed as `gamma * CE + (1 - gamma) * SE`.
pub fn reconstruction_loss(
    schema: &AttributeSchema,
    target: ArrayView2<f64>,
    reconstruction: ArrayView2<f64>,
    gamma: f64,
) -> Result<LossWithGradient> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::config(format!("gamma must lie in [0,1], got {gamma}")));
    }
    if target.dim() != reconstruction.dim() || target.ncols() != schema.encoded_dim() {
        return Err(Error::dim(format!(
            "reconstruction loss on {:?} vs {:?} for encoded dimension {}",
            target.dim(),
            reconstruction.dim(),
            schema.encoded_dim()
        )));
    }
    let n = target.nrows();
    if n == 0 {
        return Ok(LossWithGradient {
            loss: 0.0,
            gradient: Array2::zeros(target.dim()),
        });
    }
    let inv_n = 1.0 / n as f64;
    let blocks = schema.block_ranges();
    let split = schema.categorical_dim();
    let mut gradient = Array2::zeros(target.dim());
    let mut ce_total = 0.0;
    let mut se_total = 0.0;

    for ((x, x_hat), mut g) in target
        .outer_iter()
        .zip(reconstruction.outer_iter())
        .zip(gradient.outer_iter_mut())
    {
        for &(offset, width) in &blocks {
            let (ce, block_grad) = block_cross_entropy(
                x.slice(ndarray::s![offset..offset + width]),
                x_hat.slice(ndarray::s![offset..offset + width]),
            );
            ce_total += ce;
            for (j, bg) in block_grad.into_iter().enumerate() {
                g[offset + j] = gamma * inv_n * bg;
            }
        }
        for j in split..x.len() {
            let diff = x_hat[j] - x[j];
            se_total += diff * diff;
            g[j] = (1.0 - gamma) * inv_n * 2.0 * diff;
        }
    }
    Ok(LossWithGradient {
        loss: gamma * ce_total * inv_n + (1.0 - gamma) * se_total * inv_n,
        gradient,
    })
}

/// `-sum_j x_j log(p_j)` with `p = x_hat / sum(x_hat)` and its gradient in `x_hat`.
fn block_cross_entropy(x: ArrayView1<f64>, x_hat: ArrayView1<f64>) -> (f64, Vec<f64>) {
    let total = x_hat.sum().max(PROB_FLOOR);
    let mut ce = 0.0;
    let mut grad = vec![0.0; x.len()];
    let mut active_mass = 0.0;
    for (j, &xj) in x.iter().enumerate() {
        if xj == 0.0 {
            continue;
        }
        let p = x_hat[j] / total;
        if p > PROB_FLOOR {
            ce -= xj * p.ln();
            grad[j] -= xj / x_hat[j];
            active_mass += xj;
        } else {
            ce -= xj * PROB_FLOOR.ln();
        }
    }
    for g in &mut grad {
        *g += active_mass / total;
    }
    (ce, grad)
}

/// Discriminator loss: `-mean log d(prior) - mean log(1 - d(posterior))`.
pub fn adversarial_loss(d_on_prior: &[f64], d_on_posterior: &[f64]) -> f64 {
    let real: f64 = if d_on_prior.is_empty() {
        0.0
    } else {
        -d_on_prior.iter().map(|&d| clamp_prob(d).ln()).sum::<f64>() / d_on_prior.len() as f64
    };
    let fake: f64 = if d_on_posterior.is_empty() {
        0.0
    } else {
        -d_on_posterior
            .iter()
            .map(|&d| (1.0 - clamp_prob(d)).ln())
            .sum::<f64>()
            / d_on_posterior.len() as f64
    };
    real + fake
}

/// Gradients of [`adversarial_loss`] with respect to each discriminator output.
pub(crate) fn adversarial_loss_gradient(d_on_prior: &[f64], d_on_posterior: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let np = d_on_prior.len().max(1) as f64;
    let nq = d_on_posterior.len().max(1) as f64;
    let real = d_on_prior.iter().map(|&d| -1.0 / (np * clamp_prob(d))).collect();
    let fake = d_on_posterior
        .iter()
        .map(|&d| 1.0 / (nq * (1.0 - clamp_prob(d))))
        .collect();
    (real, fake)
}

/// Non-saturating generator loss `-mean log d(posterior)` and its gradient.
pub(crate) fn generator_loss(d_on_posterior: &[f64]) -> (f64, Vec<f64>) {
    let n = d_on_posterior.len().max(1) as f64;
    let loss = -d_on_posterior.iter().map(|&d| clamp_prob(d).ln()).sum::<f64>() / n;
    let grad = d_on_posterior
        .iter()
        .map(|&d| -1.0 / (n * clamp_prob(d)))
        .collect();
    (loss, grad)
}
