use serde::{Deserialize, Serialize};

use super::grid::SampleGrid;
use super::maps::{quantile_sorted, RobustnessMap};
use super::posterior::AggregatedPosterior;
use crate::error::{Error, Result};
use crate::model::{AAEModel, PriorGrid};

/// Grid points nearest to prior mode `k` whose discriminator score reaches
/// `threshold`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdversarialRegion {
    pub k: usize,
    pub threshold: f64,
    pub grid: SampleGrid,
    /// Grid indices, ascending.
    pub members: Vec<usize>,
    /// Discriminator score of each member.
    pub scores: Vec<f64>,
    /// Grid index of the highest-scoring member.
    pub mode: Option<usize>,
    /// Highest score anywhere in mode `k`'s cell.
    pub cell_max: Option<f64>,
    pub diagnostic: Option<String>,
}

impl AdversarialRegion {
    pub fn from_map(map: &RobustnessMap, prior: &PriorGrid, k: usize, threshold: f64) -> Result<Self> {
        check_args(prior, k, threshold)?;
        let grid = map.grid;
        let mut members = Vec::new();
        let mut scores = Vec::new();
        let mut cell_max: Option<f64> = None;
        for (i, &d) in map.values.iter().enumerate() {
            if prior.nearest_mode(grid.point(i)) != k {
                continue;
            }
            cell_max = Some(cell_max.map_or(d, |m| m.max(d)));
            if d >= threshold {
                members.push(i);
                scores.push(d);
            }
        }
        let mode = scores
            .iter()
            .enumerate()
            .fold(None::<(usize, f64)>, |best, (j, &d)| match best {
                Some((_, bd)) if bd >= d => best,
                _ => Some((j, d)),
            })
            .map(|(j, _)| members[j]);
        let diagnostic = members.is_empty().then(|| match cell_max {
            Some(m) => format!("no grid point of mode {k} reaches {threshold}; the cell maximum is {m}"),
            None => format!("no grid point lies nearest to mode {k}; refine the grid"),
        });
        Ok(Self {
            k,
            threshold,
            grid,
            members,
            scores,
            mode,
            cell_max,
            diagnostic,
        })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn points(&self) -> Vec<[f64; 2]> {
        self.members.iter().map(|&i| self.grid.point(i)).collect()
    }

    pub fn mode_point(&self) -> Option<[f64; 2]> {
        self.mode.map(|i| self.grid.point(i))
    }

    /// Whether an arbitrary latent point satisfies both membership predicates.
    pub fn admits(&self, model: &AAEModel, z: [f64; 2]) -> Result<bool> {
        Ok(model.prior.nearest_mode(z) == self.k && model.discriminate(z)? >= self.threshold)
    }
}

fn check_args(prior: &PriorGrid, k: usize, threshold: f64) -> Result<()> {
    if k >= prior.tau() {
        return Err(Error::config(format!("mode {k} out of range for tau = {}", prior.tau())));
    }
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::config(format!("threshold must lie in [0,1], got {threshold}")));
    }
    Ok(())
}

pub fn adversarial_region(model: &AAEModel, grid: &SampleGrid, k: usize, threshold: f64) -> Result<AdversarialRegion> {
    check_args(&model.prior, k, threshold)?;
    let values = grid.evaluate(|pts| model.discriminate_points(pts))?;
    let map = RobustnessMap {
        grid: *grid,
        values,
        rho: 0.0,
        rho_mode: Default::default(),
        contour_levels: Vec::new(),
        change_set: Vec::new(),
    };
    AdversarialRegion::from_map(&map, &model.prior, k, threshold)
}

/// The `q`-quantile of discriminator scores over the posterior points assigned
/// to mode `k`: a threshold the training entries of that mode themselves meet
/// with probability `1 - q`.
pub fn posterior_threshold(model: &AAEModel, posterior: &AggregatedPosterior, k: usize, q: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::config(format!("quantile must lie in [0,1], got {q}")));
    }
    let pts: Vec<[f64; 2]> = posterior.members(k).into_iter().map(|i| posterior.points[i]).collect();
    if pts.is_empty() {
        return Err(Error::InsufficientData(format!("no posterior points in mode {k}")));
    }
    let mut d = model.discriminate_points(&pts)?;
    d.sort_by(f64::total_cmp);
    Ok(quantile_sorted(&d, q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::build_grid;
    use crate::analysis::test_support::*;

    fn tilted() -> AAEModel {
        model_with(
            constant_encoder([0.0, 0.0]),
            constant_decoder(),
            linear_discriminator(2.0, 1.0, 0.0),
            None,
        )
    }

    #[test]
    fn zero_threshold_is_the_whole_cell() {
        let m = tilted();
        let g = build_grid((-1.0, 1.0), 0.05).unwrap();
        let r = adversarial_region(&m, &g, 4, 0.0).unwrap();
        let cell: Vec<usize> = (0..g.len()).filter(|&i| m.prior.nearest_mode(g.point(i)) == 4).collect();
        assert_eq!(r.members, cell);
        assert!(r.diagnostic.is_none());
    }

    #[test]
    fn unit_threshold_is_empty_with_diagnostic() {
        let m = tilted();
        let g = build_grid((-1.0, 1.0), 0.05).unwrap();
        let r = adversarial_region(&m, &g, 4, 1.0).unwrap();
        assert!(r.is_empty());
        assert!(r.mode.is_none());
        assert!(r.diagnostic.as_deref().unwrap().contains("cell maximum"));
        assert!(r.cell_max.unwrap() < 1.0);
    }

    #[test]
    fn members_meet_both_predicates_and_mode_is_a_member() {
        let m = tilted();
        let g = build_grid((-1.0, 1.0), 0.02).unwrap();
        for k in 0..9 {
            let r = adversarial_region(&m, &g, k, 0.49).unwrap();
            for (&i, &d) in r.members.iter().zip(&r.scores) {
                let z = g.point(i);
                assert!(d >= 0.49);
                assert_eq!(m.discriminate(z).unwrap(), d);
                assert_eq!(m.prior.nearest_mode(z), k);
                assert!(r.admits(&m, z).unwrap());
            }
            if let Some(mode) = r.mode {
                assert!(r.members.contains(&mode));
                let best = r.scores.iter().copied().fold(f64::MIN, f64::max);
                assert_eq!(m.discriminate(g.point(mode)).unwrap(), best);
            }
        }
        // Mode 0 sits at the low corner where 2 z1 + z2 < 0 throughout.
        assert!(adversarial_region(&m, &g, 0, 0.49).unwrap().is_empty());
        assert!(!adversarial_region(&m, &g, 8, 0.49).unwrap().is_empty());
    }

    #[test]
    fn argument_checks() {
        let m = tilted();
        let g = build_grid((-1.0, 1.0), 0.5).unwrap();
        assert!(adversarial_region(&m, &g, 9, 0.5).is_err());
        assert!(adversarial_region(&m, &g, 0, 1.5).is_err());
    }

    #[test]
    fn threshold_from_posterior() {
        let m = tilted();
        let mu = m.prior.mean(4).unwrap();
        let post = AggregatedPosterior::from_points(&m, vec![mu, [mu[0] + 0.1, mu[1]], [mu[0] - 0.1, mu[1]]]);
        let t = posterior_threshold(&m, &post, 4, 0.0).unwrap();
        assert!((t - 1.0 / (1.0 + 0.2f64.exp())).abs() < 1e-12);
        assert!((posterior_threshold(&m, &post, 4, 0.5).unwrap() - 0.5).abs() < 1e-12);
        assert!(posterior_threshold(&m, &post, 0, 0.5).is_err());
    }
}
