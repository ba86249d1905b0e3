//! Principal-component compression of offset grids and generative sampling
//! of new hull forms in scaled score space.

use std::path::Path;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{clamp, hydrostatics, validate, HullForm, OffsetGrid, ValidityReport};

pub const PCA_FORMAT: &str = "hullopt-pca/v1";

/// Relative threshold under which a singular value counts as zero.
const ZERO_SINGULAR: f64 = 1e-10;

/// Slack allowed when constructing a strict [`ScoreVector`].
const SCORE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridTemplate {
    pub stations: Vec<f64>,
    pub waterlines: Vec<f64>,
    /// Always `"station-major"`.
    pub flattening: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub format: String,
    pub grid_template: GridTemplate,
    pub means: Vec<f64>,
    /// `l x d`, row-major.
    pub compression: Vec<f64>,
    pub n_axes: usize,
    pub score_min: Vec<f64>,
    pub score_max: Vec<f64>,
    pub explained_variance: Vec<f64>,
    /// Raw scores of the parents, in canonical parent order.
    pub parent_scores: Vec<Vec<f64>>,
    /// SHA-256 over the canonically ordered parent offsets and template.
    pub parents_digest: String,
}

/// Scaled principal scores, each in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreVector(Vec<f64>);

impl ScoreVector {
    /// Rejects values outside `[0, 1]`.
    pub fn strict(values: Vec<f64>) -> Result<Self> {
        for (j, v) in values.iter().enumerate() {
            if !(v.is_finite() && *v >= -SCORE_SLACK && *v <= 1.0 + SCORE_SLACK) {
                return Err(Error::ScoreOutOfRange(format!("scaled score {j} = {v}")));
            }
        }
        Ok(ScoreVector(values.into_iter().map(|v| v.clamp(0.0, 1.0)).collect()))
    }

    /// Clips values into `[0, 1]`.
    pub fn clipped(values: Vec<f64>) -> Self {
        ScoreVector(values.into_iter().map(|v| v.clamp(0.0, 1.0)).collect())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// The five design parameters (for a three-axis model): scaled scores plus
/// length-to-beam and beam-to-draft ratios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HullParams {
    pub scores: ScoreVector,
    pub length_to_beam: f64,
    pub beam_to_draft: f64,
}

impl HullParams {
    /// Flat vector `[λ̄_1..λ̄_d, L/B, B/T]`.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.scores.as_slice().to_vec();
        v.push(self.length_to_beam);
        v.push(self.beam_to_draft);
        v
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        if values.len() < 3 {
            return Err(Error::ShapeMismatch {
                expected: 3,
                got: values.len(),
            });
        }
        let d = values.len() - 2;
        Ok(HullParams {
            scores: ScoreVector::strict(values[..d].to_vec())?,
            length_to_beam: values[d],
            beam_to_draft: values[d + 1],
        })
    }
}

/// A reconstructed grid with the diagnostics gathered before clamping.
#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub grid: OffsetGrid,
    pub report: ValidityReport,
    pub clamped: usize,
}

fn canonical_order(parents: &[OffsetGrid]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..parents.len()).collect();
    idx.sort_by(|&a, &b| {
        let (pa, pb) = (parents[a].offsets(), parents[b].offsets());
        pa.iter()
            .zip(pb)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    idx
}

fn digest_parents(template: &OffsetGrid, ordered: &[&OffsetGrid]) -> String {
    let mut h = Sha256::new();
    for v in template.stations().iter().chain(template.waterlines()) {
        h.update(v.to_le_bytes());
    }
    for g in ordered {
        for v in g.offsets() {
            h.update(v.to_le_bytes());
        }
    }
    hex::encode(h.finalize())
}

/// Fit the compression on `parents`. `axes = None` keeps `n - 1` axes.
///
/// Parents are put into a canonical order first, so the fitted model does
/// not depend on the order they are supplied in.
pub fn fit(parents: &[OffsetGrid], axes: Option<usize>) -> Result<PcaModel> {
    let n = parents.len();
    if n < 2 {
        return Err(Error::InsufficientParents(n));
    }
    let template = &parents[0];
    for (i, p) in parents.iter().enumerate().skip(1) {
        if !p.same_template(template) {
            return Err(Error::GridMismatch(format!("parent {i} is on a different grid")));
        }
    }
    let requested = axes.unwrap_or(n - 1);
    if requested == 0 || requested > n - 1 {
        return Err(Error::InvalidConfig(format!(
            "number of axes must be in 1..={} for {n} parents, got {requested}",
            n - 1
        )));
    }

    let order = canonical_order(parents);
    let ordered: Vec<&OffsetGrid> = order.iter().map(|&i| &parents[i]).collect();
    let l = template.len();

    let mut means = vec![0.0; l];
    for g in &ordered {
        for (m, y) in means.iter_mut().zip(g.offsets()) {
            *m += y;
        }
    }
    for m in &mut means {
        *m /= n as f64;
    }

    let centered = DMatrix::from_fn(n, l, |i, k| ordered[i].offsets()[k] - means[k]);
    let svd = centered.clone().svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::Numerical("SVD did not return right singular vectors".into()))?;
    let mut pairs: Vec<(f64, usize)> = svd.singular_values.iter().cloned().zip(0..).collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));

    let sigma_max = pairs.first().map(|p| p.0).unwrap_or(0.0);
    let is_zero = |s: f64| s <= ZERO_SINGULAR * sigma_max || s <= f64::MIN_POSITIVE;
    let kept: Vec<(f64, usize)> = pairs
        .iter()
        .take(requested)
        .cloned()
        .take_while(|p| !is_zero(p.0))
        .collect();
    if kept.is_empty() {
        return Err(Error::RankDeficient(
            "all singular values are zero; parents are identical".into(),
        ));
    }
    if kept.len() < requested {
        log::warn!(
            "rank deficiency: {} of {requested} requested axes have zero singular value and were dropped",
            requested - kept.len()
        );
    }
    let d = kept.len();
    let total: f64 = pairs.iter().filter(|p| !is_zero(p.0)).map(|p| p.0 * p.0).sum();

    let mut compression = vec![0.0; l * d];
    for (col, &(_, row)) in kept.iter().enumerate() {
        let v: Vec<f64> = (0..l).map(|k| v_t[(row, k)]).collect();
        let mut pivot = 0;
        for k in 1..l {
            if v[k].abs() > v[pivot].abs() {
                pivot = k;
            }
        }
        let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
        for k in 0..l {
            compression[k * d + col] = sign * v[k];
        }
    }

    let explained_variance = kept.iter().map(|p| p.0 * p.0 / total).collect();

    let mut model = PcaModel {
        format: PCA_FORMAT.to_string(),
        grid_template: GridTemplate {
            stations: template.stations().to_vec(),
            waterlines: template.waterlines().to_vec(),
            flattening: "station-major".to_string(),
        },
        means,
        compression,
        n_axes: d,
        score_min: vec![f64::INFINITY; d],
        score_max: vec![f64::NEG_INFINITY; d],
        explained_variance,
        parent_scores: Vec::with_capacity(n),
        parents_digest: digest_parents(template, &ordered),
    };
    for g in &ordered {
        let s = model.project(g.offsets());
        for j in 0..d {
            model.score_min[j] = model.score_min[j].min(s[j]);
            model.score_max[j] = model.score_max[j].max(s[j]);
        }
        model.parent_scores.push(s);
    }
    for j in 0..d {
        if !(model.score_max[j] - model.score_min[j] > 0.0) {
            return Err(Error::FitRejected(format!("score axis {j} has no spread")));
        }
    }
    Ok(model)
}

impl PcaModel {
    pub fn n_nodes(&self) -> usize {
        self.means.len()
    }

    /// Column `j` of the compression matrix.
    pub fn axis(&self, j: usize) -> Vec<f64> {
        let d = self.n_axes;
        (0..self.n_nodes()).map(|k| self.compression[k * d + j]).collect()
    }

    fn project(&self, offsets: &[f64]) -> Vec<f64> {
        let d = self.n_axes;
        let mut s = vec![0.0; d];
        for (k, (y, m)) in offsets.iter().zip(&self.means).enumerate() {
            let c = y - m;
            let row = &self.compression[k * d..(k + 1) * d];
            for j in 0..d {
                s[j] += row[j] * c;
            }
        }
        s
    }

    pub fn template_grid(&self) -> OffsetGrid {
        OffsetGrid::new(
            self.grid_template.stations.clone(),
            self.grid_template.waterlines.clone(),
            self.means.clone(),
        )
        .expect("model template is valid")
    }

    fn check_grid(&self, grid: &OffsetGrid) -> Result<()> {
        if grid.stations() != self.grid_template.stations.as_slice()
            || grid.waterlines() != self.grid_template.waterlines.as_slice()
        {
            return Err(Error::GridMismatch(
                "grid does not share the model's station/waterline template".into(),
            ));
        }
        Ok(())
    }

    fn check_scores(&self, scores: &[f64]) -> Result<()> {
        if scores.len() != self.n_axes {
            return Err(Error::ShapeMismatch {
                expected: self.n_axes,
                got: scores.len(),
            });
        }
        Ok(())
    }

    /// Raw principal scores of `grid`.
    pub fn compress(&self, grid: &OffsetGrid) -> Result<Vec<f64>> {
        self.check_grid(grid)?;
        Ok(self.project(grid.offsets()))
    }

    /// `W̃ λ` without the mean, as a flat station-major vector.
    pub fn reconstruct_centered(&self, scores: &[f64]) -> Result<Vec<f64>> {
        self.check_scores(scores)?;
        let d = self.n_axes;
        Ok((0..self.n_nodes())
            .map(|k| {
                let row = &self.compression[k * d..(k + 1) * d];
                row.iter().zip(scores).map(|(w, s)| w * s).sum()
            })
            .collect())
    }

    /// `W̃ λ + μ` without clamping.
    pub fn reconstruct_raw(&self, scores: &[f64]) -> Result<OffsetGrid> {
        let centered = self.reconstruct_centered(scores)?;
        let offsets = centered.iter().zip(&self.means).map(|(c, m)| c + m).collect();
        self.template_grid().with_offsets(offsets)
    }

    /// Reconstruct, validate and clamp negative offsets to zero.
    pub fn reconstruct(&self, scores: &[f64]) -> Result<Reconstruction> {
        let raw = self.reconstruct_raw(scores)?;
        let report = validate(&raw);
        let (grid, clamped) = clamp(&raw);
        if clamped > 0 {
            log::debug!("clamped {clamped} negative reconstructed offsets");
        }
        Ok(Reconstruction {
            grid,
            report,
            clamped,
        })
    }

    /// Min-max scaling by the parent score extremes, strict range check.
    pub fn scale_scores(&self, raw: &[f64]) -> Result<ScoreVector> {
        self.check_scores(raw)?;
        ScoreVector::strict(self.scale_unchecked(raw))
    }

    /// Min-max scaling without range checks.
    pub fn scale_unchecked(&self, raw: &[f64]) -> Vec<f64> {
        raw.iter()
            .zip(self.score_min.iter().zip(&self.score_max))
            .map(|(v, (lo, hi))| (v - lo) / (hi - lo))
            .collect()
    }

    pub fn unscale_scores(&self, scaled: &ScoreVector) -> Result<Vec<f64>> {
        self.unscale_slice(scaled.as_slice())
    }

    fn unscale_slice(&self, scaled: &[f64]) -> Result<Vec<f64>> {
        self.check_scores(scaled)?;
        Ok(scaled
            .iter()
            .zip(self.score_min.iter().zip(&self.score_max))
            .map(|(s, (lo, hi))| lo + s * (hi - lo))
            .collect())
    }

    /// Deterministic hull for a parameter set at the given length.
    pub fn hull_from_params(&self, params: &HullParams, length: f64) -> Result<(HullForm, Reconstruction)> {
        let raw = self.unscale_scores(&params.scores)?;
        let rec = self.reconstruct(&raw)?;
        let hull = HullForm::new(rec.grid.clone(), length, params.length_to_beam, params.beam_to_draft)?;
        Ok((hull, rec))
    }

    /// Scaled scores of each parent, canonical order.
    pub fn parent_scaled_scores(&self) -> Vec<Vec<f64>> {
        self.parent_scores.iter().map(|s| self.scale_unchecked(s)).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str, path: &Path) -> Result<Self> {
        let model: PcaModel =
            serde_json::from_str(text).map_err(|e| Error::format(path, e.to_string()))?;
        if model.format != PCA_FORMAT {
            return Err(Error::Version {
                found: model.format,
                expected: PCA_FORMAT.to_string(),
            });
        }
        let l = model.grid_template.stations.len() * model.grid_template.waterlines.len();
        if model.means.len() != l
            || model.compression.len() != l * model.n_axes
            || model.score_min.len() != model.n_axes
            || model.score_max.len() != model.n_axes
        {
            return Err(Error::format(path, "inconsistent PCA model dimensions"));
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, path)
    }
}

/// Closed sampling interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lo && v <= self.hi
    }

    /// `lo + u (hi - lo)`; exact at collapsed bounds.
    pub fn at(&self, u: f64) -> f64 {
        self.lo + u * (self.hi - self.lo)
    }

    fn check(&self, name: &str) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite()) || self.lo > self.hi {
            return Err(Error::InvalidBounds(format!("{name}: [{}, {}]", self.lo, self.hi)));
        }
        Ok(())
    }
}

/// Sampling limits for generated hulls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingBounds {
    pub scores: Vec<Interval>,
    pub length_to_beam: Interval,
    pub beam_to_draft: Interval,
    pub length: Interval,
}

impl SamplingBounds {
    /// Limits used for dataset generation: scores in [0,1], L/B in [6.9, 9],
    /// B/T in [2.0, 3.5], L in [150, 350] m.
    pub fn dataset_default(n_axes: usize) -> Self {
        SamplingBounds {
            scores: vec![Interval::new(0.0, 1.0); n_axes],
            length_to_beam: Interval::new(6.9, 9.0),
            beam_to_draft: Interval::new(2.0, 3.5),
            length: Interval::new(150.0, 350.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (j, b) in self.scores.iter().enumerate() {
            b.check(&format!("score {j}"))?;
        }
        self.length_to_beam.check("L/B")?;
        self.beam_to_draft.check("B/T")?;
        self.length.check("L")?;
        if self.length.lo <= 0.0 || self.length_to_beam.lo <= 0.0 || self.beam_to_draft.lo <= 0.0 {
            return Err(Error::InvalidBounds("dimensions must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampledHull {
    pub params: HullParams,
    pub hull: HullForm,
    pub clamped: usize,
}

/// Seed for the `index`-th task of a stream rooted at `root`.
pub fn task_seed(root: u64, index: u64) -> u64 {
    root.wrapping_add(index)
}

/// Draw one hull uniformly inside `bounds`. Draw order: scores, L/B, B/T, L.
pub fn sample_hull(model: &PcaModel, bounds: &SamplingBounds, seed: u64) -> Result<SampledHull> {
    bounds.validate()?;
    if bounds.scores.len() != model.n_axes {
        return Err(Error::ShapeMismatch {
            expected: model.n_axes,
            got: bounds.scores.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scaled: Vec<f64> = bounds.scores.iter().map(|b| b.at(rng.gen::<f64>())).collect();
    let length_to_beam = bounds.length_to_beam.at(rng.gen::<f64>());
    let beam_to_draft = bounds.beam_to_draft.at(rng.gen::<f64>());
    let length = bounds.length.at(rng.gen::<f64>());
    let params = HullParams {
        scores: ScoreVector::clipped(scaled),
        length_to_beam,
        beam_to_draft,
    };
    let (hull, rec) = model.hull_from_params(&params, length)?;
    Ok(SampledHull {
        params,
        hull,
        clamped: rec.clamped,
    })
}

/// Ordinary least-squares line and correlation coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r: f64,
    pub n: usize,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    let n = xs.len();
    if n != ys.len() {
        return Err(Error::ShapeMismatch {
            expected: n,
            got: ys.len(),
        });
    }
    if n < 2 {
        return Err(Error::FitRejected("fewer than 2 points".into()));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
        sxy += (x - mx) * (y - my);
    }
    if xs.iter().all(|x| *x == xs[0]) || !(sxx > 0.0) {
        return Err(Error::FitRejected("fewer than 2 distinct abscissae".into()));
    }
    let slope = sxy / sxx;
    let r = if syy > 0.0 { sxy / (sxx * syy).sqrt() } else { 0.0 };
    Ok(LinearFit {
        slope,
        intercept: my - slope * mx,
        r,
        n,
    })
}

/// One hull's scaled leading scores and fullness coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationPoint {
    pub lambda1: f64,
    pub lambda2: f64,
    pub block_coefficient: f64,
    pub prismatic_coefficient: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationReport {
    pub points: Vec<CorrelationPoint>,
    pub lambda1_vs_cb: LinearFit,
    pub lambda2_vs_cp: LinearFit,
}

impl CorrelationReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("lambda1,cb,lambda2,cp\n");
        for p in &self.points {
            s.push_str(&format!(
                "{},{},{},{}\n",
                p.lambda1, p.block_coefficient, p.lambda2, p.prismatic_coefficient
            ));
        }
        s
    }
}

/// Linear fits of λ̄₁ against C_B and λ̄₂ against C_P over `hulls`.
pub fn correlation_report(model: &PcaModel, hulls: &[HullForm]) -> Result<CorrelationReport> {
    if model.n_axes < 2 {
        return Err(Error::FitRejected("correlation study needs two score axes".into()));
    }
    let mut points = Vec::with_capacity(hulls.len());
    for hull in hulls {
        let scaled = model.scale_unchecked(&model.compress(&hull.grid)?);
        let h = hydrostatics(hull)?;
        points.push(CorrelationPoint {
            lambda1: scaled[0],
            lambda2: scaled[1],
            block_coefficient: h.block_coefficient,
            prismatic_coefficient: h.prismatic_coefficient,
        });
    }
    let col = |f: fn(&CorrelationPoint) -> f64| points.iter().map(f).collect::<Vec<_>>();
    let lambda1_vs_cb = linear_fit(&col(|p| p.lambda1), &col(|p| p.block_coefficient))?;
    let lambda2_vs_cp = linear_fit(&col(|p| p.lambda2), &col(|p| p.prismatic_coefficient))?;
    Ok(CorrelationReport {
        points,
        lambda1_vs_cb,
        lambda2_vs_cp,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parents::bundled_parents;
    use proptest::prelude::*;

    fn grids() -> Vec<OffsetGrid> {
        bundled_parents().into_iter().map(|p| p.grid).collect()
    }

    fn model() -> PcaModel {
        fit(&grids(), None).unwrap()
    }

    fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn compression_columns_are_orthonormal() {
        let m = model();
        for a in 0..m.n_axes {
            for b in 0..m.n_axes {
                let dot: f64 = m.axis(a).iter().zip(m.axis(b)).map(|(x, y)| x * y).sum();
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn full_rank_variance_sums_to_one() {
        let m = model();
        assert_eq!(m.n_axes, 3);
        let ev = &m.explained_variance;
        assert!(ev.windows(2).all(|w| w[0] >= w[1]));
        assert!(ev.iter().all(|v| (0.0..=1.0).contains(v)));
        assert!((ev.iter().sum::<f64>() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn sign_convention_makes_largest_entry_positive() {
        let m = model();
        for j in 0..m.n_axes {
            let col = m.axis(j);
            let big = col.iter().cloned().fold(0.0f64, |a, v| if v.abs() > a.abs() { v } else { a });
            assert!(big > 0.0);
        }
    }

    #[test]
    fn parents_round_trip_losslessly() {
        let m = model();
        for g in grids() {
            let s = m.compress(&g).unwrap();
            let back = m.reconstruct_raw(&s).unwrap();
            assert!(max_abs_diff(back.offsets(), g.offsets()) <= 1e-9);
        }
    }

    #[test]
    fn compress_matches_stored_parent_scores() {
        let m = model();
        let gs = grids();
        for stored in &m.parent_scores {
            let hit = gs.iter().any(|g| max_abs_diff(&m.compress(g).unwrap(), stored) < 1e-10);
            assert!(hit);
        }
    }

    #[test]
    fn mean_hull_compresses_to_zero() {
        let m = model();
        let s = m.compress(&m.template_grid()).unwrap();
        assert!(s.iter().all(|v| v.abs() < 1e-12));
        let back = m.reconstruct_raw(&vec![0.0; m.n_axes]).unwrap();
        assert_eq!(back.offsets(), m.means.as_slice());
    }

    #[test]
    fn reconstruction_error_non_increasing_in_axes() {
        let gs = grids();
        let probe = crate::geometry::wigley_grid(40, 20).unwrap().scaled(0.9);
        let mut prev = f64::INFINITY;
        for d in 1..=3 {
            let m = fit(&gs, Some(d)).unwrap();
            let s = m.compress(&probe).unwrap();
            let back = m.reconstruct_raw(&s).unwrap();
            let err: f64 = back
                .offsets()
                .iter()
                .zip(probe.offsets())
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            assert!(err <= prev + 1e-12);
            prev = err;
        }
    }

    #[test]
    fn scaling_hits_parent_extremes() {
        let m = model();
        let scaled = m.parent_scaled_scores();
        for j in 0..m.n_axes {
            let col: Vec<f64> = scaled.iter().map(|s| s[j]).collect();
            assert!(col.contains(&1.0));
            assert!(col.contains(&0.0));
        }
    }

    #[test]
    fn identical_parents_are_rank_deficient() {
        let g = crate::geometry::wigley_grid(40, 20).unwrap();
        assert!(matches!(fit(&[g.clone(), g], None), Err(Error::RankDeficient(_))));
    }

    #[test]
    fn fit_preconditions() {
        let g = crate::geometry::wigley_grid(40, 20).unwrap();
        assert!(matches!(fit(std::slice::from_ref(&g), None), Err(Error::InsufficientParents(1))));
        let other = crate::geometry::wigley_grid(30, 20).unwrap();
        assert!(matches!(fit(&[g.clone(), other], None), Err(Error::GridMismatch(_))));
        assert!(fit(&grids(), Some(4)).is_err());
    }

    #[test]
    fn duplicate_parent_drops_an_axis() {
        let mut gs = grids();
        gs.push(gs[0].clone());
        let m = fit(&gs, Some(4)).unwrap();
        assert_eq!(m.n_axes, 3);
    }

    #[test]
    fn parent_order_does_not_change_the_model() {
        let gs = grids();
        let a = fit(&gs, None).unwrap().to_json().unwrap();
        let mut rev = gs.clone();
        rev.reverse();
        let b = fit(&rev, None).unwrap().to_json().unwrap();
        let shuffled = vec![gs[2].clone(), gs[0].clone(), gs[3].clone(), gs[1].clone()];
        let c = fit(&shuffled, None).unwrap().to_json().unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn model_file_round_trips() {
        let m = model();
        let text = m.to_json().unwrap();
        let back = PcaModel::from_json(&text, Path::new("mem")).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_json().unwrap(), text);
        let bad = text.replace(PCA_FORMAT, "hullopt-pca/v0");
        assert!(matches!(PcaModel::from_json(&bad, Path::new("m")), Err(Error::Version { .. })));
    }

    #[test]
    fn score_vector_modes() {
        assert!(ScoreVector::strict(vec![0.2, 1.1]).is_err());
        assert!(ScoreVector::strict(vec![0.2, f64::NAN]).is_err());
        assert_eq!(ScoreVector::clipped(vec![-0.5, 1.5]).as_slice(), &[0.0, 1.0]);
    }

    #[test]
    fn sampling_is_deterministic() {
        let m = model();
        let b = SamplingBounds::dataset_default(3);
        let a = sample_hull(&m, &b, 42).unwrap();
        let c = sample_hull(&m, &b, 42).unwrap();
        assert_eq!(a, c);
        let d = sample_hull(&m, &b, 43).unwrap();
        assert_ne!(a.params, d.params);
    }

    #[test]
    fn collapsed_bounds_reproduce_a_parent() {
        let m = model();
        let scaled = m.parent_scaled_scores();
        let gs = grids();
        for (j, s) in scaled.iter().enumerate() {
            let bounds = SamplingBounds {
                scores: s.iter().map(|&v| Interval::new(v, v)).collect(),
                length_to_beam: Interval::new(7.0, 7.0),
                beam_to_draft: Interval::new(2.5, 2.5),
                length: Interval::new(200.0, 200.0),
            };
            let hull = sample_hull(&m, &bounds, 1).unwrap().hull;
            let parent = gs
                .iter()
                .find(|g| max_abs_diff(&m.compress(g).unwrap(), &m.parent_scores[j]) < 1e-10)
                .unwrap();
            assert!(max_abs_diff(hull.grid.offsets(), parent.offsets()) < 1e-9);
            assert_eq!(hull.length(), 200.0);
        }
    }

    #[test]
    fn inverted_bounds_are_rejected() {
        let m = model();
        let mut b = SamplingBounds::dataset_default(3);
        b.length_to_beam = Interval::new(9.0, 7.0);
        assert!(matches!(sample_hull(&m, &b, 0), Err(Error::InvalidBounds(_))));
    }

    #[test]
    fn showcase_parameters_give_a_valid_hull() {
        let m = model();
        let params = HullParams {
            scores: ScoreVector::strict(vec![0.3, 0.2, 0.8]).unwrap(),
            length_to_beam: 8.0,
            beam_to_draft: 3.0,
        };
        let (hull, _) = m.hull_from_params(&params, 200.0).unwrap();
        assert!(validate(&hull.grid).is_valid());
        assert!(hydrostatics(&hull).is_ok());
    }

    #[test]
    fn linear_fit_cases() {
        let f = linear_fit(&[0.0, 1.0], &[1.0, 3.0]).unwrap();
        assert!((f.r - 1.0).abs() < 1e-15);
        assert!((f.slope - 2.0).abs() < 1e-15);
        let f = linear_fit(&[0.0, 2.0], &[1.0, -3.0]).unwrap();
        assert!((f.r + 1.0).abs() < 1e-15);
        assert!(matches!(
            linear_fit(&[0.5; 12], &[0.1; 12]),
            Err(Error::FitRejected(_))
        ));
    }

    #[test]
    fn constant_lambda1_set_is_rejected() {
        let m = model();
        let mut b = SamplingBounds::dataset_default(3);
        b.scores[0] = Interval::new(0.4, 0.4);
        b.scores[1] = Interval::new(0.5, 0.5);
        b.scores[2] = Interval::new(0.5, 0.5);
        let hulls: Vec<HullForm> = (0..12).map(|k| sample_hull(&m, &b, k).unwrap().hull).collect();
        assert!(matches!(correlation_report(&m, &hulls), Err(Error::FitRejected(_))));
    }

    proptest! {
        #[test]
        fn scale_unscale_are_inverse(a in 0.0f64..1.0, b in 0.0f64..1.0, c in 0.0f64..1.0) {
            let m = model();
            let sv = ScoreVector::strict(vec![a, b, c]).unwrap();
            let raw = m.unscale_scores(&sv).unwrap();
            let back = m.scale_unchecked(&raw);
            for (x, y) in back.iter().zip(sv.as_slice()) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }

        #[test]
        fn reconstruction_is_affine(
            l1 in proptest::collection::vec(-2.0f64..2.0, 3),
            l2 in proptest::collection::vec(-2.0f64..2.0, 3),
            a in -3.0f64..3.0,
            b in -3.0f64..3.0,
        ) {
            let m = model();
            let mix: Vec<f64> = l1.iter().zip(&l2).map(|(x, y)| a * x + b * y).collect();
            let lhs = m.reconstruct_raw(&mix).unwrap();
            let r1 = m.reconstruct_centered(&l1).unwrap();
            let r2 = m.reconstruct_centered(&l2).unwrap();
            for k in 0..m.n_nodes() {
                let rhs = a * r1[k] + b * r2[k] + m.means[k];
                prop_assert!((lhs.offsets()[k] - rhs).abs() < 1e-12);
            }
            // compress is the adjoint of the centered reconstruction
            let back = m.compress(&lhs).unwrap();
            for (x, y) in back.iter().zip(&mix) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }

        #[test]
        fn sampled_scores_stay_in_unit_box(seed in 0u64..10_000) {
            let m = model();
            let s = sample_hull(&m, &SamplingBounds::dataset_default(3), seed).unwrap();
            prop_assert!(s.params.scores.as_slice().iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }
}
