//! Normalized offset grids, dimensional hull forms and hydrostatics.
//!
//! Grid convention: `x*` runs from the aft end (0) to the forward end (1),
//! `z*` runs from the keel (-1) to the calm waterline (0), and `y*` is the
//! half-breadth normalized by the half-beam `B/2`. Offsets are stored
//! station-major: entry `(i, j)` lives at `i * n_waterlines + j`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{trapezoid, trapezoid_weights};

/// Default number of stations.
pub const DEFAULT_STATIONS: usize = 40;
/// Default number of waterlines.
pub const DEFAULT_WATERLINES: usize = 20;
/// Largest normalized half-breadth considered sane.
pub const OFFSET_CAP: f64 = 1.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OffsetGrid {
    stations: Vec<f64>,
    waterlines: Vec<f64>,
    offsets: Vec<f64>,
}

fn strictly_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] < w[1])
}

/// `n` equally spaced points on `[lo, hi]`, endpoints exact.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let step = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|k| if k == n - 1 { hi } else { lo + step * k as f64 })
        .collect()
}

impl OffsetGrid {
    pub fn new(stations: Vec<f64>, waterlines: Vec<f64>, offsets: Vec<f64>) -> Result<Self> {
        if stations.len() < 2 || waterlines.len() < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 stations and 2 waterlines, got {}x{}",
                stations.len(),
                waterlines.len()
            )));
        }
        if !stations.iter().chain(&waterlines).all(|v| v.is_finite()) {
            return Err(Error::InvalidGrid("non-finite grid coordinate".into()));
        }
        if !strictly_increasing(&stations) || !strictly_increasing(&waterlines) {
            return Err(Error::InvalidGrid(
                "stations and waterlines must be strictly increasing".into(),
            ));
        }
        let expected = stations.len() * waterlines.len();
        if offsets.len() != expected {
            return Err(Error::ShapeMismatch {
                expected,
                got: offsets.len(),
            });
        }
        if !offsets.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidGrid("non-finite offset".into()));
        }
        Ok(OffsetGrid {
            stations,
            waterlines,
            offsets,
        })
    }

    /// Equally spaced grid on `[0,1] x [-1,0]` filled from `f(x*, z*)`.
    pub fn from_fn(
        n_stations: usize,
        n_waterlines: usize,
        mut f: impl FnMut(f64, f64) -> f64,
    ) -> Result<Self> {
        if n_stations < 2 || n_waterlines < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 stations and 2 waterlines, got {n_stations}x{n_waterlines}"
            )));
        }
        let stations = linspace(0.0, 1.0, n_stations);
        let waterlines = linspace(-1.0, 0.0, n_waterlines);
        let mut offsets = Vec::with_capacity(n_stations * n_waterlines);
        for &x in &stations {
            for &z in &waterlines {
                offsets.push(f(x, z));
            }
        }
        Self::new(stations, waterlines, offsets)
    }

    /// Same template as `self` with new offset values.
    pub fn with_offsets(&self, offsets: Vec<f64>) -> Result<Self> {
        Self::new(self.stations.clone(), self.waterlines.clone(), offsets)
    }

    pub fn stations(&self) -> &[f64] {
        &self.stations
    }

    pub fn waterlines(&self) -> &[f64] {
        &self.waterlines
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    pub fn n_stations(&self) -> usize {
        self.stations.len()
    }

    pub fn n_waterlines(&self) -> usize {
        self.waterlines.len()
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    pub fn get(&self, station: usize, waterline: usize) -> f64 {
        self.offsets[station * self.waterlines.len() + waterline]
    }

    pub fn set(&mut self, station: usize, waterline: usize, value: f64) {
        let nw = self.waterlines.len();
        self.offsets[station * nw + waterline] = value;
    }

    /// Offsets of one station, keel to waterline.
    pub fn station_row(&self, station: usize) -> &[f64] {
        let nw = self.waterlines.len();
        &self.offsets[station * nw..(station + 1) * nw]
    }

    /// True when both grids sample the same station and waterline coordinates.
    pub fn same_template(&self, other: &OffsetGrid) -> bool {
        self.stations == other.stations && self.waterlines == other.waterlines
    }

    /// Every offset multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> OffsetGrid {
        OffsetGrid {
            stations: self.stations.clone(),
            waterlines: self.waterlines.clone(),
            offsets: self.offsets.iter().map(|y| y * factor).collect(),
        }
    }
}

/// Standard parabolic Wigley hull on an equally spaced grid.
pub fn wigley_grid(n_stations: usize, n_waterlines: usize) -> Result<OffsetGrid> {
    OffsetGrid::from_fn(n_stations, n_waterlines, |x, z| {
        let xi = 2.0 * x - 1.0;
        (1.0 - xi * xi) * (1.0 - z * z)
    })
}

/// Diagnostics from [`validate`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub negative: usize,
    pub over_cap: usize,
}

impl ValidityReport {
    pub fn is_valid(&self) -> bool {
        self.negative == 0 && self.over_cap == 0
    }
}

pub fn validate(grid: &OffsetGrid) -> ValidityReport {
    let mut report = ValidityReport::default();
    for &y in grid.offsets() {
        if y < 0.0 {
            report.negative += 1;
        } else if y > OFFSET_CAP {
            report.over_cap += 1;
        }
    }
    report
}

/// Copy of `grid` with negative offsets set to zero, plus the number of
/// nodes that changed.
pub fn clamp(grid: &OffsetGrid) -> (OffsetGrid, usize) {
    let mut changed = 0;
    let offsets = grid
        .offsets
        .iter()
        .map(|&y| {
            if y < 0.0 {
                changed += 1;
                0.0
            } else {
                y
            }
        })
        .collect();
    (
        OffsetGrid {
            stations: grid.stations.clone(),
            waterlines: grid.waterlines.clone(),
            offsets,
        },
        changed,
    )
}

/// A normalized grid together with its principal dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HullForm {
    pub grid: OffsetGrid,
    length: f64,
    length_to_beam: f64,
    beam_to_draft: f64,
}

fn check_dims(length: f64, length_to_beam: f64, beam_to_draft: f64) -> Result<()> {
    for (name, v) in [("L", length), ("L/B", length_to_beam), ("B/T", beam_to_draft)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::InvalidDimension(format!("{name} = {v} must be positive")));
        }
    }
    Ok(())
}

impl HullForm {
    pub fn new(grid: OffsetGrid, length: f64, length_to_beam: f64, beam_to_draft: f64) -> Result<Self> {
        check_dims(length, length_to_beam, beam_to_draft)?;
        Ok(HullForm {
            grid,
            length,
            length_to_beam,
            beam_to_draft,
        })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn length_to_beam(&self) -> f64 {
        self.length_to_beam
    }

    pub fn beam_to_draft(&self) -> f64 {
        self.beam_to_draft
    }

    pub fn beam(&self) -> f64 {
        self.length / self.length_to_beam
    }

    pub fn draft(&self) -> f64 {
        self.beam() / self.beam_to_draft
    }

    /// Same normalized geometry at a different length.
    pub fn with_length(&self, length: f64) -> Result<Self> {
        HullForm::new(self.grid.clone(), length, self.length_to_beam, self.beam_to_draft)
    }

    pub fn dimensional(&self) -> DimensionalSurface {
        // dimensions were validated on construction
        dimensionalize(&self.grid, self.length, self.length_to_beam, self.beam_to_draft)
            .expect("validated hull dimensions")
    }
}

/// Hull surface in meters. `x` per station, `z` per waterline, `y` per node
/// (station-major).
#[derive(Debug, Clone, PartialEq)]
pub struct DimensionalSurface {
    pub x: Vec<f64>,
    pub z: Vec<f64>,
    pub y: Vec<f64>,
}

impl DimensionalSurface {
    pub fn node(&self, station: usize, waterline: usize) -> [f64; 3] {
        [
            self.x[station],
            self.y[station * self.z.len() + waterline],
            self.z[waterline],
        ]
    }
}

pub fn dimensionalize(
    grid: &OffsetGrid,
    length: f64,
    length_to_beam: f64,
    beam_to_draft: f64,
) -> Result<DimensionalSurface> {
    check_dims(length, length_to_beam, beam_to_draft)?;
    let half_beam = 0.5 * length / length_to_beam;
    let draft = length / length_to_beam / beam_to_draft;
    Ok(DimensionalSurface {
        x: grid.stations().iter().map(|x| x * length).collect(),
        z: grid.waterlines().iter().map(|z| z * draft).collect(),
        y: grid.offsets().iter().map(|y| y * half_beam).collect(),
    })
}

/// Inverse of [`dimensionalize`].
pub fn normalize(
    surface: &DimensionalSurface,
    length: f64,
    length_to_beam: f64,
    beam_to_draft: f64,
) -> Result<OffsetGrid> {
    check_dims(length, length_to_beam, beam_to_draft)?;
    let half_beam = 0.5 * length / length_to_beam;
    let draft = length / length_to_beam / beam_to_draft;
    OffsetGrid::new(
        surface.x.iter().map(|x| x / length).collect(),
        surface.z.iter().map(|z| z / draft).collect(),
        surface.y.iter().map(|y| y / half_beam).collect(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HydrostaticsReport {
    /// m³
    pub displaced_volume: f64,
    /// m²
    pub wetted_surface: f64,
    /// m²
    pub midship_area: f64,
    pub block_coefficient: f64,
    pub prismatic_coefficient: f64,
    /// L / ∇^(1/3)
    pub slenderness: f64,
}

impl HydrostaticsReport {
    /// C_B ≤ C_P holds whenever the midship section is the largest section.
    /// Generated forms can break it, so it is reported rather than enforced.
    pub fn fullness_consistent(&self) -> bool {
        self.block_coefficient <= self.prismatic_coefficient + 1e-12
    }
}

fn triangle_area(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> f64 {
    let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    let v = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
    let cx = u[1] * v[2] - u[2] * v[1];
    let cy = u[2] * v[0] - u[0] * v[2];
    let cz = u[0] * v[1] - u[1] * v[0];
    0.5 * (cx * cx + cy * cy + cz * cz).sqrt()
}

/// Indices of the station(s) nearest `x* = 0.5`. Two indices when two
/// stations are equally near.
fn midship_stations(stations: &[f64]) -> Vec<usize> {
    let dist: Vec<f64> = stations.iter().map(|x| (x - 0.5).abs()).collect();
    let best = dist.iter().cloned().fold(f64::INFINITY, f64::min);
    dist.iter()
        .enumerate()
        .filter(|(_, d)| **d - best <= 1e-12)
        .map(|(i, _)| i)
        .collect()
}

/// Wetted area of one side of the hull: triangulated centerplane-offset
/// surface, plus flat closures where the keel line or the end stations
/// carry non-zero half-breadths.
pub(crate) fn side_wetted_area(s: &DimensionalSurface) -> f64 {
    let ns = s.x.len();
    let nw = s.z.len();
    let mut area = 0.0;
    for i in 0..ns - 1 {
        for j in 0..nw - 1 {
            let p00 = s.node(i, j);
            let p10 = s.node(i + 1, j);
            let p01 = s.node(i, j + 1);
            let p11 = s.node(i + 1, j + 1);
            area += triangle_area(p00, p10, p11) + triangle_area(p00, p11, p01);
        }
    }
    let keel: Vec<f64> = (0..ns).map(|i| s.y[i * nw]).collect();
    area += trapezoid(&s.x, &keel);
    area += trapezoid(&s.z, &s.y[0..nw]);
    area += trapezoid(&s.z, &s.y[(ns - 1) * nw..ns * nw]);
    area
}

pub fn hydrostatics(hull: &HullForm) -> Result<HydrostaticsReport> {
    let s = hull.dimensional();
    let ns = s.x.len();
    let nw = s.z.len();
    let wx = trapezoid_weights(&s.x);
    let wz = trapezoid_weights(&s.z);

    let mut volume = 0.0;
    for i in 0..ns {
        let row: f64 = (0..nw).map(|j| wz[j] * s.y[i * nw + j]).sum();
        volume += wx[i] * row;
    }
    volume *= 2.0;
    if !(volume > 0.0) {
        return Err(Error::DegenerateHull(format!("displaced volume {volume} is not positive")));
    }

    let mids = midship_stations(hull.grid.stations());
    let midship_area = mids
        .iter()
        .map(|&i| 2.0 * trapezoid(&s.z, &s.y[i * nw..(i + 1) * nw]))
        .sum::<f64>()
        / mids.len() as f64;
    if !(midship_area > 0.0) {
        return Err(Error::DegenerateHull("midship section area is zero".into()));
    }

    let wetted_surface = 2.0 * side_wetted_area(&s);
    let (l, b, t) = (hull.length(), hull.beam(), hull.draft());
    Ok(HydrostaticsReport {
        displaced_volume: volume,
        wetted_surface,
        midship_area,
        block_coefficient: volume / (l * b * t),
        prismatic_coefficient: volume / (midship_area * l),
        slenderness: l / volume.cbrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn box_grid(ns: usize, nw: usize) -> OffsetGrid {
        OffsetGrid::from_fn(ns, nw, |_, _| 1.0).unwrap()
    }

    #[test]
    fn dimensionalize_scales_nodewise() {
        let grid = OffsetGrid::new(vec![0.0, 0.5], vec![-1.0, 0.0], vec![0.0, 0.0, 1.0, 0.0]).unwrap();
        let s = dimensionalize(&grid, 100.0, 10.0, 2.5).unwrap();
        assert_eq!(s.node(1, 0), [50.0, 5.0, -4.0]);
    }

    #[test]
    fn dimensionalize_rejects_bad_dims() {
        let grid = wigley_grid(5, 3).unwrap();
        assert!(matches!(
            dimensionalize(&grid, 0.0, 10.0, 2.5),
            Err(Error::InvalidDimension(_))
        ));
        assert!(dimensionalize(&grid, 100.0, -1.0, 2.5).is_err());
        assert!(dimensionalize(&grid, 100.0, 10.0, 0.0).is_err());
        assert!(HullForm::new(grid, 100.0, 10.0, f64::NAN).is_err());
    }

    #[test]
    fn zero_offsets_stay_zero() {
        let grid = OffsetGrid::from_fn(6, 4, |_, _| 0.0).unwrap();
        let s = dimensionalize(&grid, 120.0, 7.0, 3.0).unwrap();
        assert!(s.y.iter().all(|&y| y == 0.0));
    }

    #[test]
    fn wigley_midship_waterplane_is_half_beam() {
        let grid = wigley_grid(41, 21).unwrap();
        let hull = HullForm::new(grid, 100.0, 10.0, 2.5).unwrap();
        let s = hull.dimensional();
        assert_eq!(s.node(20, 20)[1], 5.0);
        assert_eq!(s.node(0, 7)[1], 0.0);
    }

    #[test]
    fn wigley_grid_rejects_tiny_counts() {
        assert!(matches!(wigley_grid(1, 5), Err(Error::InvalidGrid(_))));
        assert!(matches!(wigley_grid(5, 1), Err(Error::InvalidGrid(_))));
    }

    #[test]
    fn grid_must_increase() {
        let r = OffsetGrid::new(vec![0.0, 0.0], vec![-1.0, 0.0], vec![0.0; 4]);
        assert!(matches!(r, Err(Error::InvalidGrid(_))));
        let r = OffsetGrid::new(vec![0.0, 1.0], vec![-1.0, 0.0], vec![0.0; 3]);
        assert!(matches!(r, Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn box_barge_is_a_full_block() {
        let hull = HullForm::new(box_grid(40, 20), 100.0, 10.0, 2.5).unwrap();
        let h = hydrostatics(&hull).unwrap();
        assert!((h.displaced_volume - 4000.0).abs() < 1e-9);
        assert!((h.block_coefficient - 1.0).abs() < 1e-12);
        assert!((h.prismatic_coefficient - 1.0).abs() < 1e-12);
        // sides + bottom + two end faces
        let expected = 2.0 * 100.0 * 4.0 + 100.0 * 10.0 + 2.0 * 10.0 * 4.0;
        assert!((h.wetted_surface - expected).abs() < 1e-9);
    }

    #[test]
    fn wigley_fine_grid_coefficients() {
        let hull = HullForm::new(wigley_grid(80, 40).unwrap(), 100.0, 10.0, 2.5).unwrap();
        let h = hydrostatics(&hull).unwrap();
        assert!((h.block_coefficient - 0.4444).abs() < 0.002, "{h:?}");
        assert!((h.prismatic_coefficient - 0.6667).abs() < 0.002, "{h:?}");
        assert!(h.fullness_consistent());
    }

    #[test]
    fn zero_volume_is_degenerate() {
        let grid = OffsetGrid::from_fn(10, 5, |_, _| 0.0).unwrap();
        let hull = HullForm::new(grid, 100.0, 10.0, 2.5).unwrap();
        assert!(matches!(hydrostatics(&hull), Err(Error::DegenerateHull(_))));
    }

    #[test]
    fn even_station_count_averages_the_middle_pair() {
        assert_eq!(midship_stations(&linspace(0.0, 1.0, 40)), vec![19, 20]);
        assert_eq!(midship_stations(&linspace(0.0, 1.0, 41)), vec![20]);
    }

    #[test]
    fn validate_and_clamp() {
        let mut grid = wigley_grid(40, 20).unwrap();
        assert!(validate(&grid).is_valid());
        grid.set(10, 5, -0.01);
        let report = validate(&grid);
        assert_eq!(report.negative, 1);
        assert_eq!(report.over_cap, 0);
        let (clamped, changed) = clamp(&grid);
        assert_eq!(changed, 1);
        assert_eq!(clamped.get(10, 5), 0.0);
        for (k, (a, b)) in grid.offsets().iter().zip(clamped.offsets()).enumerate() {
            if k != 10 * 20 + 5 {
                assert_eq!(a, b);
            }
        }
        // validate does not mutate
        assert_eq!(grid.get(10, 5), -0.01);
    }

    #[test]
    fn over_cap_is_flagged() {
        let mut grid = wigley_grid(6, 4).unwrap();
        grid.set(2, 3, 1.6);
        assert_eq!(validate(&grid).over_cap, 1);
    }
}
