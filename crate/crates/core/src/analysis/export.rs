use std::fmt::Write as _;
use std::path::Path;

use super::grid::SampleGrid;
use super::maps::{CombinationMap, RobustnessMap};
use super::region::AdversarialRegion;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapFormat {
    /// `z1,z2,value[,band]`, one row per grid point in lattice order.
    Csv,
    /// Binary 8-bit grayscale (P5).
    Pgm,
    /// Binary 8-bit colour (P6).
    Ppm,
}

impl std::str::FromStr for MapFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "pgm" => Ok(Self::Pgm),
            "ppm" => Ok(Self::Ppm),
            _ => Err(Error::config(format!("unknown map format {s:?} (csv, pgm, ppm)"))),
        }
    }
}

/// Common view of the grid-valued maps for export.
pub trait GridMap {
    fn grid(&self) -> &SampleGrid;
    fn value(&self, index: usize) -> f64;
    fn band(&self, _index: usize) -> Option<usize> {
        None
    }
    /// Intensity in `[0, 1]` for grayscale output.
    fn intensity(&self, index: usize) -> f64;
    /// Category used for indexed colour output.
    fn category(&self, index: usize) -> usize;
    /// Boundary or significant-change points.
    fn marked(&self) -> &[usize];
}

impl GridMap for RobustnessMap {
    fn grid(&self) -> &SampleGrid {
        &self.grid
    }

    fn value(&self, index: usize) -> f64 {
        self.values[index]
    }

    fn intensity(&self, index: usize) -> f64 {
        self.values[index]
    }

    fn category(&self, index: usize) -> usize {
        self.contour_levels
            .iter()
            .filter(|(_, level)| self.values[index] >= *level)
            .count()
    }

    fn marked(&self) -> &[usize] {
        &self.change_set
    }
}

impl GridMap for CombinationMap {
    fn grid(&self) -> &SampleGrid {
        &self.grid
    }

    fn value(&self, index: usize) -> f64 {
        match self.band_edges {
            Some(_) => self.values[index],
            None => self.labels[index] as f64,
        }
    }

    fn band(&self, index: usize) -> Option<usize> {
        self.band_edges.as_ref().map(|_| self.labels[index])
    }

    fn intensity(&self, index: usize) -> f64 {
        let top = self.labels.iter().copied().max().unwrap_or(0).max(1);
        self.labels[index] as f64 / top as f64
    }

    fn category(&self, index: usize) -> usize {
        self.labels[index]
    }

    fn marked(&self) -> &[usize] {
        &self.boundary
    }
}

pub fn export_map<M: GridMap>(map: &M, path: &Path, format: MapFormat) -> Result<()> {
    let bytes = match format {
        MapFormat::Csv => map_csv(map).into_bytes(),
        MapFormat::Pgm => pixmap(map, false),
        MapFormat::Ppm => pixmap(map, true),
    };
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn map_csv<M: GridMap>(map: &M) -> String {
    let g = map.grid();
    let banded = g.len() > 0 && map.band(0).is_some();
    let mut out = String::from(if banded { "z1,z2,value,band\n" } else { "z1,z2,value\n" });
    for i in 0..g.len() {
        let z = g.point(i);
        let _ = write!(out, "{},{},{}", z[0], z[1], map.value(i));
        if let Some(b) = map.band(i) {
            let _ = write!(out, ",{b}");
        }
        out.push('\n');
    }
    out
}

/// Image rows run from the highest `z2` at the top to the lowest at the bottom.
fn pixmap<M: GridMap>(map: &M, colour: bool) -> Vec<u8> {
    let g = map.grid();
    let side = g.side();
    let mut out = format!("{}\n{side} {side}\n255\n", if colour { "P6" } else { "P5" }).into_bytes();
    for row in (0..side).rev() {
        for col in 0..side {
            let i = g.index(row, col);
            if colour {
                out.extend_from_slice(&palette(map.category(i)));
            } else {
                out.push((map.intensity(i).clamp(0.0, 1.0) * 255.0).round() as u8);
            }
        }
    }
    out
}

fn palette(c: usize) -> [u8; 3] {
    const COLOURS: [[u8; 3]; 12] = [
        [31, 119, 180],
        [255, 127, 14],
        [44, 160, 44],
        [214, 39, 40],
        [148, 103, 189],
        [140, 86, 75],
        [227, 119, 194],
        [127, 127, 127],
        [188, 189, 34],
        [23, 190, 207],
        [0, 0, 0],
        [255, 255, 255],
    ];
    COLOURS[c % COLOURS.len()]
}

/// `z1,z2` of the boundary or significant-change points.
pub fn export_marked<M: GridMap>(map: &M, path: &Path) -> Result<()> {
    let g = map.grid();
    let mut out = String::from("z1,z2\n");
    for &i in map.marked() {
        let z = g.point(i);
        let _ = writeln!(out, "{},{}", z[0], z[1]);
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn export_contours(map: &RobustnessMap, path: &Path) -> Result<()> {
    let mut out = String::from("quantile,level\n");
    for (q, l) in &map.contour_levels {
        let _ = writeln!(out, "{q},{l}");
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn region_csv(region: &AdversarialRegion) -> String {
    let mut out = String::from("k,threshold,z1,z2,d,is_mode\n");
    for (&i, &d) in region.members.iter().zip(&region.scores) {
        let z = region.grid.point(i);
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            region.k,
            region.threshold,
            z[0],
            z[1],
            d,
            u8::from(region.mode == Some(i))
        );
    }
    out
}

pub fn export_region(region: &AdversarialRegion, path: &Path) -> Result<()> {
    std::fs::write(path, region_csv(region)).map_err(|e| Error::io(path, e))
}

/// Reads a region file back; the grid is taken from the caller.
pub fn read_region(text: &str, grid: &SampleGrid) -> Result<AdversarialRegion> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let mut k = None;
    let mut threshold = None;
    let mut members = Vec::new();
    let mut scores = Vec::new();
    let mut mode = None;
    let to_index = |z: f64| ((z - grid.bounds().0) / grid.delta()).round() as usize;
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse {
            line: line + 2,
            message: e.to_string(),
        })?;
        let field = |j: usize| -> Result<f64> {
            rec.get(j).and_then(|s| s.parse().ok()).ok_or_else(|| Error::Parse {
                line: line + 2,
                message: format!("column {j} is not a number"),
            })
        };
        k = Some(field(0)? as usize);
        threshold = Some(field(1)?);
        let (z1, z2) = (field(2)?, field(3)?);
        let i = grid.index(to_index(z2), to_index(z1));
        members.push(i);
        scores.push(field(4)?);
        if field(5)? != 0.0 {
            mode = Some(i);
        }
    }
    let (Some(k), Some(threshold)) = (k, threshold) else {
        return Err(Error::InsufficientData("region file has no members".into()));
    };
    Ok(AdversarialRegion {
        k,
        threshold,
        grid: *grid,
        members,
        scores,
        mode,
        cell_max: None,
        diagnostic: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::test_support::*;
    use crate::analysis::{adversarial_region, build_grid, combination_map, robustness_map};

    #[test]
    fn csv_rows_and_determinism() {
        let m = model_with(
            constant_encoder([0.0, 0.0]),
            constant_decoder(),
            linear_discriminator(1.0, -1.0, 0.0),
            None,
        );
        let g = build_grid((-1.0, 1.0), 0.5).unwrap();
        let r = robustness_map(&m, &g, 0.05).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.csv");
        let b = dir.path().join("b.csv");
        export_map(&r, &a, MapFormat::Csv).unwrap();
        export_map(&r, &b, MapFormat::Csv).unwrap();
        let text = std::fs::read_to_string(&a).unwrap();
        assert_eq!(text.lines().count(), 26);
        assert_eq!(text.lines().next(), Some("z1,z2,value"));
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

        let amount = combination_map(&m, &g, "amount").unwrap();
        assert!(map_csv(&amount).starts_with("z1,z2,value,band\n"));
    }

    #[test]
    fn pixmap_dimensions() {
        let m = model_with(
            constant_encoder([0.0, 0.0]),
            constant_decoder(),
            linear_discriminator(1.0, 0.0, 0.0),
            None,
        );
        let g = build_grid((-1.0, 1.0), 0.1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let r = robustness_map(&m, &g, 0.05).unwrap();
        let pgm = dir.path().join("r.pgm");
        export_map(&r, &pgm, MapFormat::Pgm).unwrap();
        let bytes = std::fs::read(&pgm).unwrap();
        let header = b"P5\n21 21\n255\n";
        assert!(bytes.starts_with(header));
        assert_eq!(bytes.len(), header.len() + 21 * 21);
        // Left column has the lowest z1, hence the darkest pixel.
        assert!(bytes[header.len()] < bytes[header.len() + 20]);

        let c = combination_map(&m, &g, "a").unwrap();
        let ppm = dir.path().join("c.ppm");
        export_map(&c, &ppm, MapFormat::Ppm).unwrap();
        let bytes = std::fs::read(&ppm).unwrap();
        assert_eq!(bytes.len(), b"P6\n21 21\n255\n".len() + 3 * 21 * 21);
    }

    #[test]
    fn unwritable_path_is_an_io_error() {
        let m = model_with(constant_encoder([0.0, 0.0]), constant_decoder(), constant_discriminator(0.5), None);
        let g = build_grid((-1.0, 1.0), 0.5).unwrap();
        let r = robustness_map(&m, &g, 0.05).unwrap();
        let err = export_map(&r, Path::new("/nonexistent-dir/x.csv"), MapFormat::Csv).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn region_round_trip() {
        let m = model_with(
            constant_encoder([0.0, 0.0]),
            constant_decoder(),
            linear_discriminator(2.0, 1.0, 0.0),
            None,
        );
        let g = build_grid((-1.0, 1.0), 0.05).unwrap();
        let r = adversarial_region(&m, &g, 5, 0.6).unwrap();
        assert!(!r.is_empty());
        let back = read_region(&region_csv(&r), &g).unwrap();
        assert_eq!(back.members, r.members);
        assert_eq!(back.scores, r.scores);
        assert_eq!(back.mode, r.mode);
        assert_eq!((back.k, back.threshold), (5, 0.6));
    }
}
