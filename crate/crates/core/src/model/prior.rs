use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Square lattice of isotropic 2-D Gaussians with a shared standard deviation.
///
/// Modes are indexed row-major: `k = row * side + col`, where `col` runs
/// along `z1` and `row` along `z2`, both ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorGrid {
    tau: usize,
    side: usize,
    lower: f64,
    upper: f64,
    spacing: f64,
    sigma: f64,
    means: Vec<[f64; 2]>,
}

impl PriorGrid {
    /// Places `tau` means on a `sqrt(tau) x sqrt(tau)` lattice inside
    /// `[lower, upper]^2`, each one half a spacing from the border of its
    /// cell. `sigma = None` uses a sixth of the spacing, so neighbouring modes
    /// are three standard deviations from their shared cell border.
    pub fn new(tau: usize, bounds: (f64, f64), sigma: Option<f64>) -> Result<Self> {
        let side = (tau as f64).sqrt().round() as usize;
        if tau < 4 || side * side != tau {
            return Err(Error::config(format!(
                "prior mode count must be a perfect square >= 4, got {tau}"
            )));
        }
        let (lower, upper) = bounds;
        if !(lower < upper) || !lower.is_finite() || !upper.is_finite() {
            return Err(Error::config(format!("invalid latent bounds [{lower}, {upper}]")));
        }
        let spacing = (upper - lower) / side as f64;
        let sigma = sigma.unwrap_or(spacing / 6.0);
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::config(format!("prior sigma must be >= 0, got {sigma}")));
        }
        let coord = |i: usize| lower + spacing * (i as f64 + 0.5);
        let means = (0..tau)
            .map(|k| [coord(k % side), coord(k / side)])
            .collect();
        Ok(Self {
            tau,
            side,
            lower,
            upper,
            spacing,
            sigma,
            means,
        })
    }

    pub fn tau(&self) -> usize {
        self.tau
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.lower, self.upper)
    }

    pub fn means(&self) -> &[[f64; 2]] {
        &self.means
    }

    pub fn mean(&self, k: usize) -> Option<[f64; 2]> {
        self.means.get(k).copied()
    }

    /// Index of the nearest mean in Euclidean distance; ties go to the lowest index.
    pub fn nearest_mode(&self, z: [f64; 2]) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (k, m) in self.means.iter().enumerate() {
            let d = (z[0] - m[0]).powi(2) + (z[1] - m[1]).powi(2);
            if d < best_d {
                best = k;
                best_d = d;
            }
        }
        best
    }

    /// One draw: a uniformly chosen mode plus isotropic Gaussian noise.
    pub fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> [f64; 2] {
        let m = self.means[rng.random_range(0..self.tau)];
        let n1: f64 = StandardNormal.sample(rng);
        let n2: f64 = StandardNormal.sample(rng);
        [m[0] + self.sigma * n1, m[1] + self.sigma * n2]
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<[f64; 2]> {
        (0..n).map(|_| self.sample_one(rng)).collect()
    }
}

/// Builds the prior over `[-1, 1]^2`-style bounds; see [`PriorGrid::new`].
pub fn build_prior_grid(tau: usize, bounds: (f64, f64), sigma: Option<f64>) -> Result<PriorGrid> {
    PriorGrid::new(tau, bounds, sigma)
}

/// `n` seeded draws from the prior.
pub fn sample_prior(grid: &PriorGrid, n: usize, seed: u64) -> Vec<[f64; 2]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    grid.sample(n, &mut rng)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_shapes() {
        assert_eq!(build_prior_grid(25, (-1.0, 1.0), None).unwrap().side(), 5);
        assert_eq!(build_prior_grid(9, (-1.0, 1.0), None).unwrap().side(), 3);
        assert!(matches!(
            build_prior_grid(10, (-1.0, 1.0), None),
            Err(Error::Config(_))
        ));
        assert!(build_prior_grid(1, (-1.0, 1.0), None).is_err());
    }

    #[test]
    fn centre_mode_of_nine_sits_at_origin() {
        let g = build_prior_grid(9, (-1.0, 1.0), None).unwrap();
        let m = g.mean(4).unwrap();
        assert!(m[0].abs() < 1e-15 && m[1].abs() < 1e-15);
        assert_eq!(g.nearest_mode([0.01, -0.02]), 4);
        assert!((g.sigma() - (2.0 / 3.0) / 6.0).abs() < 1e-15);
    }

    #[test]
    fn nearest_mode_ties_go_low() {
        let g = build_prior_grid(4, (-1.0, 1.0), None).unwrap();
        assert_eq!(g.nearest_mode([0.0, 0.0]), 0);
    }

    #[test]
    fn sampling_is_seeded() {
        let g = build_prior_grid(25, (-1.0, 1.0), None).unwrap();
        assert_eq!(sample_prior(&g, 50, 3), sample_prior(&g, 50, 3));
        assert_ne!(sample_prior(&g, 50, 3), sample_prior(&g, 50, 4));
    }
}
