use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_POINT_BUDGET: u64 = 100_000_000;
pub const DEFAULT_DELTA: f64 = 1e-2;

/// Points evaluated per network call; fixed so results never depend on the
/// number of worker threads.
pub(crate) const CHUNK: usize = 4096;

/// Square lattice over `[lower, upper]²` with spacing `delta`.
///
/// Point `i` sits at row `i / side` and column `i % side`; the column runs
/// along `z1` and the row along `z2`, both starting from `lower`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleGrid {
    lower: f64,
    upper: f64,
    delta: f64,
    side: usize,
}

impl SampleGrid {
    pub fn new(bounds: (f64, f64), delta: f64) -> Result<Self> {
        Self::with_budget(bounds, delta, DEFAULT_POINT_BUDGET)
    }

    pub fn with_budget(bounds: (f64, f64), delta: f64, budget: u64) -> Result<Self> {
        let (lower, upper) = bounds;
        if !(lower.is_finite() && upper.is_finite() && lower < upper) {
            return Err(Error::config(format!("grid bounds must satisfy lower < upper, got [{lower}, {upper}]")));
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::config(format!("grid spacing must be positive, got {delta}")));
        }
        let per_axis = ((upper - lower) / delta + 1e-9).floor() + 1.0;
        let points = per_axis * per_axis;
        if points > budget as f64 {
            let allowed_side = (budget as f64).sqrt().floor().max(2.0);
            return Err(Error::Budget {
                points: points.min(u64::MAX as f64) as u64,
                budget,
                suggested_delta: (upper - lower) / (allowed_side - 1.0),
            });
        }
        Ok(Self {
            lower,
            upper,
            delta,
            side: per_axis as usize,
        })
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.lower, self.upper)
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Lattice points per axis.
    pub fn side(&self) -> usize {
        self.side
    }

    pub fn len(&self) -> usize {
        self.side * self.side
    }

    pub fn is_empty(&self) -> bool {
        self.side == 0
    }

    /// Bytes needed to hold every point as two `f64`s.
    pub fn memory_estimate(&self) -> u64 {
        self.len() as u64 * 16
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        self.lower + i as f64 * self.delta
    }

    pub fn point(&self, index: usize) -> [f64; 2] {
        let (row, col) = self.row_col(index);
        [self.coordinate(col), self.coordinate(row)]
    }

    pub fn row_col(&self, index: usize) -> (usize, usize) {
        (index / self.side, index % self.side)
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.side + col
    }

    pub fn points(&self) -> Vec<[f64; 2]> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    /// Lattice neighbours one step left, right, down and up.
    pub fn neighbors(&self, index: usize) -> impl Iterator<Item = usize> + '_ {
        let (r, c) = self.row_col(index);
        let s = self.side;
        [
            (c > 0).then(|| self.index(r, c - 1)),
            (c + 1 < s).then(|| self.index(r, c + 1)),
            (r > 0).then(|| self.index(r - 1, c)),
            (r + 1 < s).then(|| self.index(r + 1, c)),
        ]
        .into_iter()
        .flatten()
    }

    /// Applies `f` to fixed-size chunks of points in parallel and
    /// concatenates the results in lattice order.
    pub(crate) fn evaluate<T, F>(&self, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(&[[f64; 2]]) -> Result<Vec<T>> + Sync,
    {
        let n = self.len();
        let starts: Vec<usize> = (0..n).step_by(CHUNK).collect();
        let parts: Vec<Vec<T>> = starts
            .par_iter()
            .map(|&start| {
                let end = (start + CHUNK).min(n);
                let pts: Vec<[f64; 2]> = (start..end).map(|i| self.point(i)).collect();
                f(&pts)
            })
            .collect::<Result<_>>()?;
        Ok(parts.into_iter().flatten().collect())
    }
}

pub fn build_grid(bounds: (f64, f64), delta: f64) -> Result<SampleGrid> {
    SampleGrid::new(bounds, delta)
}
