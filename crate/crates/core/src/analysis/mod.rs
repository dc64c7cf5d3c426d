//! Equidistant probing of the latent plane: combination and robustness maps,
//! the aggregated posterior and adversarial sampling regions.

mod export;
mod grid;
mod maps;
mod posterior;
mod region;
#[cfg(test)]
pub(crate) mod test_support;

pub use export::{
    export_contours, export_map, export_marked, export_region, map_csv, read_region, region_csv, GridMap,
    MapFormat,
};
pub use grid::{build_grid, SampleGrid, DEFAULT_DELTA, DEFAULT_POINT_BUDGET};
pub use maps::{
    combination_map, combination_map_with_bands, quantile_sorted, robustness_map, robustness_map_with,
    CombinationMap, RhoMode, RobustnessMap, DEFAULT_BANDS, DEFAULT_CONTOUR_QUANTILES, DEFAULT_RHO,
};
pub use posterior::{aggregated_posterior, AggregatedPosterior, ModePurity};
pub use region::{adversarial_region, posterior_threshold, AdversarialRegion};
