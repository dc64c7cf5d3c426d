use serde::{Deserialize, Serialize};

use super::grid::SampleGrid;
use crate::data::{argmax, AttributeRef};
use crate::error::{Error, Result};
use crate::model::AAEModel;

pub const DEFAULT_BANDS: usize = 10;
pub const DEFAULT_RHO: f64 = 0.05;
pub const DEFAULT_CONTOUR_QUANTILES: [f64; 5] = [0.1, 0.25, 0.5, 0.75, 0.9];

/// Per-point attribute value the decoder would generate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombinationMap {
    pub attribute: String,
    pub grid: SampleGrid,
    /// Vocabulary index for categorical attributes, band index for continuous ones.
    pub labels: Vec<usize>,
    /// Block share of the winning value, or the decoded amount for continuous attributes.
    pub values: Vec<f64>,
    /// Interior band edges (raw units) for continuous attributes.
    pub band_edges: Option<Vec<f64>>,
    /// Points with a 4-neighbour of a different label, ascending.
    pub boundary: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum RhoMode {
    /// `|d(n) - d(z)| >= rho` for some neighbour `n`.
    #[default]
    Absolute,
    /// `d(n) >= d(z) + rho` for some neighbour `n`.
    Increase,
}

impl std::str::FromStr for RhoMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "absolute" => Ok(Self::Absolute),
            "increase" => Ok(Self::Increase),
            _ => Err(Error::config(format!("unknown rho mode {s:?}"))),
        }
    }
}

/// Discriminator output over the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessMap {
    pub grid: SampleGrid,
    pub values: Vec<f64>,
    pub rho: f64,
    pub rho_mode: RhoMode,
    /// `(quantile, level)` pairs.
    pub contour_levels: Vec<(f64, f64)>,
    pub change_set: Vec<usize>,
}

impl RobustnessMap {
    pub fn max(&self) -> Option<(usize, f64)> {
        self.values
            .iter()
            .copied()
            .enumerate()
            .fold(None, |best, (i, v)| match best {
                Some((_, bv)) if bv >= v => best,
                _ => Some((i, v)),
            })
    }
}

pub fn combination_map(model: &AAEModel, grid: &SampleGrid, attribute: &str) -> Result<CombinationMap> {
    combination_map_with_bands(model, grid, attribute, DEFAULT_BANDS)
}

pub fn combination_map_with_bands(
    model: &AAEModel,
    grid: &SampleGrid,
    attribute: &str,
    bands: usize,
) -> Result<CombinationMap> {
    let schema = model.codec.schema();
    let attr = schema.require(attribute)?;
    let decoded: Vec<(usize, f64)> = match attr {
        AttributeRef::Categorical(j) => {
            let (offset, width) = schema.block_ranges()[j];
            grid.evaluate(|pts| {
                let out = model.decode_points(pts)?;
                Ok(out
                    .outer_iter()
                    .map(|row| {
                        let block: Vec<f64> = row.iter().skip(offset).take(width).copied().collect();
                        let (best, top) = argmax(&block);
                        let total: f64 = block.iter().map(|v| v.max(0.0)).sum();
                        let conf = if total > 0.0 { top.max(0.0) / total } else { 1.0 / width as f64 };
                        (best, conf)
                    })
                    .collect())
            })?
        }
        AttributeRef::Continuous(j) => {
            let col = schema.categorical_dim() + j;
            grid.evaluate(|pts| {
                let out = model.decode_points(pts)?;
                Ok(out
                    .outer_iter()
                    .map(|row| (0, model.codec.unscale(j, row[col])))
                    .collect())
            })?
        }
    };
    let (mut labels, values): (Vec<usize>, Vec<f64>) = decoded.into_iter().unzip();
    let band_edges = match attr {
        AttributeRef::Categorical(_) => None,
        AttributeRef::Continuous(_) => {
            if bands == 0 {
                return Err(Error::config("band count must be at least 1"));
            }
            let mut sorted = values.clone();
            sorted.sort_by(f64::total_cmp);
            let edges: Vec<f64> = (1..bands)
                .map(|b| quantile_sorted(&sorted, b as f64 / bands as f64))
                .collect();
            for (l, v) in labels.iter_mut().zip(&values) {
                *l = edges.partition_point(|e| e <= v);
            }
            Some(edges)
        }
    };
    let boundary = (0..grid.len())
        .filter(|&i| grid.neighbors(i).any(|n| labels[n] != labels[i]))
        .collect();
    Ok(CombinationMap {
        attribute: attribute.to_string(),
        grid: *grid,
        labels,
        values,
        band_edges,
        boundary,
    })
}

pub fn robustness_map(model: &AAEModel, grid: &SampleGrid, rho: f64) -> Result<RobustnessMap> {
    robustness_map_with(model, grid, rho, RhoMode::Absolute, &DEFAULT_CONTOUR_QUANTILES)
}

pub fn robustness_map_with(
    model: &AAEModel,
    grid: &SampleGrid,
    rho: f64,
    rho_mode: RhoMode,
    contour_quantiles: &[f64],
) -> Result<RobustnessMap> {
    if !(rho >= 0.0 && rho.is_finite()) {
        return Err(Error::config(format!("rho must be non-negative, got {rho}")));
    }
    if let Some(q) = contour_quantiles.iter().find(|q| !(0.0..=1.0).contains(*q)) {
        return Err(Error::config(format!("contour quantile {q} outside [0,1]")));
    }
    let values = grid.evaluate(|pts| model.discriminate_points(pts))?;
    let mut sorted = values.clone();
    sorted.sort_by(f64::total_cmp);
    let contour_levels = contour_quantiles
        .iter()
        .map(|&q| (q, quantile_sorted(&sorted, q)))
        .collect();
    let change_set = (0..grid.len())
        .filter(|&i| {
            grid.neighbors(i).any(|n| match rho_mode {
                RhoMode::Absolute => (values[n] - values[i]).abs() >= rho,
                RhoMode::Increase => values[n] >= values[i] + rho,
            })
        })
        .collect();
    Ok(RobustnessMap {
        grid: *grid,
        values,
        rho,
        rho_mode,
        contour_levels,
        change_set,
    })
}

/// Linear-interpolation quantile of ascending data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::build_grid;
    use crate::analysis::test_support::*;
    use crate::neural::Activation;
    use ndarray::Array2;

    fn split_decoder() -> crate::neural::Network {
        // Block "a" prefers index 0 for z1 >= 0 and index 1 for z1 < 0.
        let mut w = Array2::zeros((6, 2));
        w[[0, 0]] = 1.0;
        w[[1, 0]] = -1.0;
        w[[5, 1]] = 0.5;
        layer(w, vec![0.5, 0.5, 0.3, 0.2, 0.1, 0.5], Activation::Identity)
    }

    #[test]
    fn constant_decoder_has_no_boundary() {
        let m = model_with(constant_encoder([0.0, 0.0]), constant_decoder(), constant_discriminator(0.5), None);
        let g = build_grid((-1.0, 1.0), 0.1).unwrap();
        for attr in ["a", "b"] {
            let map = combination_map(&m, &g, attr).unwrap();
            assert!(map.boundary.is_empty());
            assert_eq!(map.labels.len(), g.len());
        }
        assert!(combination_map(&m, &g, "missing").is_err());
    }

    #[test]
    fn vertical_decision_line() {
        let m = model_with(constant_encoder([0.0, 0.0]), split_decoder(), constant_discriminator(0.5), None);
        let g = build_grid((-1.0, 1.0), 0.1).unwrap();
        let map = combination_map(&m, &g, "a").unwrap();
        for i in 0..g.len() {
            let z = g.point(i);
            assert_eq!(map.labels[i], usize::from(z[0] < -1e-12), "{z:?}");
        }
        let cols: std::collections::BTreeSet<usize> = map.boundary.iter().map(|&i| g.row_col(i).1).collect();
        assert_eq!(cols.into_iter().collect::<Vec<_>>(), vec![9, 10]);
        assert_eq!(map.boundary.len(), 2 * g.side());
    }

    #[test]
    fn boundary_matches_brute_force_and_interior_is_uniform() {
        let m = model_with(constant_encoder([0.0, 0.0]), split_decoder(), constant_discriminator(0.5), None);
        let g = build_grid((-1.0, 1.0), 0.25).unwrap();
        let map = combination_map(&m, &g, "a").unwrap();
        let s = g.side() as i64;
        for i in 0..g.len() {
            let (r, c) = g.row_col(i);
            let mut differs = false;
            for (dr, dc) in [(0i64, 1i64), (0, -1), (1, 0), (-1, 0)] {
                let (nr, nc) = (r as i64 + dr, c as i64 + dc);
                if nr >= 0 && nc >= 0 && nr < s && nc < s {
                    differs |= map.labels[g.index(nr as usize, nc as usize)] != map.labels[i];
                }
            }
            assert_eq!(map.boundary.contains(&i), differs);
        }
    }

    #[test]
    fn continuous_attribute_gets_bands() {
        let m = model_with(constant_encoder([0.0, 0.0]), split_decoder(), constant_discriminator(0.5), None);
        let g = build_grid((-1.0, 1.0), 0.1).unwrap();
        let map = combination_map_with_bands(&m, &g, "amount", 4).unwrap();
        let edges = map.band_edges.clone().unwrap();
        assert_eq!(edges.len(), 3);
        assert!(edges.windows(2).all(|w| w[0] <= w[1]));
        for (l, v) in map.labels.iter().zip(&map.values) {
            assert!(*l < 4);
            if *l > 0 {
                assert!(*v >= edges[*l - 1]);
            }
            if *l < 3 {
                assert!(*v < edges[*l]);
            }
        }
        // The amount depends on z2 only, so bands change between rows.
        assert!(!map.boundary.is_empty());
        assert!(map.boundary.iter().all(|&i| g.neighbors(i).any(|n| map.labels[n] != map.labels[i])));
    }

    #[test]
    fn robustness_constant_and_codomain() {
        let m = model_with(constant_encoder([0.0, 0.0]), constant_decoder(), constant_discriminator(0.5), None);
        let g = build_grid((-1.0, 1.0), 0.1).unwrap();
        let r = robustness_map(&m, &g, 0.01).unwrap();
        assert!(r.change_set.is_empty());
        assert!(r.values.iter().all(|&v| v > 0.0 && v < 1.0));
        assert!(robustness_map(&m, &g, -0.1).is_err());
    }

    #[test]
    fn steep_sigmoid_changes_near_zero() {
        let m = model_with(
            constant_encoder([0.0, 0.0]),
            constant_decoder(),
            linear_discriminator(10.0, 0.0, 0.0),
            None,
        );
        let g = build_grid((-1.0, 1.0), 0.1).unwrap();
        let r = robustness_map(&m, &g, 0.2).unwrap();
        let sig = |x: f64| 1.0 / (1.0 + (-10.0 * x).exp());
        for i in 0..g.len() {
            let z1 = g.point(i)[0];
            let expect = [z1 - 0.1, z1 + 0.1]
                .iter()
                .filter(|n| (-1.0 - 1e-9..=1.0 + 1e-9).contains(*n))
                .any(|&n| (sig(n) - sig(z1)).abs() >= 0.2);
            assert_eq!(r.change_set.contains(&i), expect, "z1={z1}");
        }
        assert!(r.change_set.iter().all(|&i| g.point(i)[0].abs() <= 0.15));
        assert!(!r.change_set.is_empty());

        let up = robustness_map_with(&m, &g, 0.2, RhoMode::Increase, &[0.5]).unwrap();
        assert!(up.change_set.len() < r.change_set.len());
        assert!(up.change_set.iter().all(|i| r.change_set.contains(i)));
    }

    #[test]
    fn maps_are_pure() {
        let m = model_with(
            constant_encoder([0.0, 0.0]),
            split_decoder(),
            linear_discriminator(3.0, -2.0, 0.1),
            None,
        );
        let g = build_grid((-1.0, 1.0), 0.05).unwrap();
        assert_eq!(robustness_map(&m, &g, 0.05).unwrap(), robustness_map(&m, &g, 0.05).unwrap());
        assert_eq!(combination_map(&m, &g, "b").unwrap(), combination_map(&m, &g, "b").unwrap());
    }

    #[test]
    fn quantiles() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&v, 0.0), 1.0);
        assert_eq!(quantile_sorted(&v, 1.0), 4.0);
        assert!((quantile_sorted(&v, 0.5) - 2.5).abs() < 1e-12);
    }
}
