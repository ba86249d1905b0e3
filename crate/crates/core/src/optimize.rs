//! Design-space search for the hull with the lowest operational merit.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{hydrostatics, linspace, HullForm, HydrostaticsReport};
use crate::hydro::{hull_merit, Fluid, MichellSettings, SpeedRange};
use crate::parents::Parent;
use crate::pca::{HullParams, Interval, PcaModel};
use crate::surrogate::{feature_row, MlpModel};

/// Upper bound on refinement passes; each pass must improve β to continue.
const MAX_PASSES: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub scores: Vec<Interval>,
    pub length_to_beam: Interval,
    pub beam_to_draft: Interval,
    /// Fixed hull length, m.
    pub length: f64,
    pub speed: SpeedRange,
}

impl SearchSpace {
    /// Scores in [0, 1], L/B in [7, 9], B/T in [2.0, 3.1].
    pub fn standard(n_axes: usize, length: f64, speed: SpeedRange) -> Self {
        SearchSpace {
            scores: vec![Interval::new(0.0, 1.0); n_axes],
            length_to_beam: Interval::new(7.0, 9.0),
            beam_to_draft: Interval::new(2.0, 3.1),
            length,
            speed,
        }
    }

    /// Case 1: L = 300 m over Fn 0.20 to 0.24.
    pub fn case1(n_axes: usize) -> Self {
        Self::standard(n_axes, 300.0, SpeedRange::uniform(0.20, 0.24, 5).expect("valid range"))
    }

    /// Case 2: L = 170 m over Fn 0.26 to 0.30.
    pub fn case2(n_axes: usize) -> Self {
        Self::standard(n_axes, 170.0, SpeedRange::uniform(0.26, 0.30, 5).expect("valid range"))
    }

    /// Bounds of every design axis: scores, then L/B, then B/T.
    pub fn bounds(&self) -> Vec<Interval> {
        let mut b = self.scores.clone();
        b.push(self.length_to_beam);
        b.push(self.beam_to_draft);
        b
    }

    pub fn validate(&self) -> Result<()> {
        for (j, b) in self.bounds().iter().enumerate() {
            if !(b.lo.is_finite() && b.hi.is_finite() && b.lo <= b.hi) {
                return Err(Error::InvalidBounds(format!("axis {j}: [{}, {}]", b.lo, b.hi)));
            }
        }
        if self.scores.iter().any(|b| b.lo < 0.0 || b.hi > 1.0) {
            return Err(Error::InvalidBounds("score bounds must lie in [0, 1]".into()));
        }
        if !(self.length > 0.0 && self.length_to_beam.lo > 0.0 && self.beam_to_draft.lo > 0.0) {
            return Err(Error::InvalidBounds("dimensions must be positive".into()));
        }
        self.speed.validate()
    }

    fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.scores.len() + 2 && self.bounds().iter().zip(p).all(|(b, v)| b.contains(*v))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub n1: usize,
    pub n2: usize,
    pub k: usize,
    pub shrink_factor: f64,
    pub convergence_tol: f64,
    pub seed: u64,
    /// Visit the axes in a seeded random order on each refinement pass.
    pub shuffle_axes: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            n1: 3000,
            n2: 3000,
            k: 15,
            shrink_factor: 0.5,
            convergence_tol: 1e-4,
            seed: 0,
            shuffle_axes: false,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.n1 >= 1
            && self.n2 >= 2
            && self.k >= 1
            && self.shrink_factor > 0.0
            && self.shrink_factor <= 1.0
            && self.convergence_tol >= 0.0;
        if !ok {
            return Err(Error::InvalidConfig(format!("bad search config {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub best_params: Vec<f64>,
    pub best_beta: f64,
    /// β_min after every Monte-Carlo round and refinement pass.
    pub beta_history: Vec<f64>,
    pub evaluations: usize,
    /// Candidates whose objective raised a warning.
    pub warnings: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub beta: f64,
    pub warning: bool,
}

/// Batch objective over design vectors `[λ̄_1..λ̄_d, L/B, B/T]`.
pub trait Objective {
    fn evaluate(&self, candidates: &[Vec<f64>]) -> Result<Vec<Evaluation>>;
}

/// Wraps a plain function; candidates are evaluated in parallel.
pub struct FnObjective<F>(pub F);

impl<F: Fn(&[f64]) -> f64 + Sync> Objective for FnObjective<F> {
    fn evaluate(&self, candidates: &[Vec<f64>]) -> Result<Vec<Evaluation>> {
        Ok(candidates
            .par_iter()
            .map(|c| Evaluation {
                beta: (self.0)(c),
                warning: false,
            })
            .collect())
    }
}

/// β from surrogate predictions at the speed range's evaluation points.
pub struct SurrogateObjective<'a> {
    pub model: &'a MlpModel,
    pub length: f64,
    pub speed: &'a SpeedRange,
}

impl Objective for SurrogateObjective<'_> {
    fn evaluate(&self, candidates: &[Vec<f64>]) -> Result<Vec<Evaluation>> {
        let speeds = self.speed.points();
        let mut rows = Vec::with_capacity(candidates.len() * speeds.len() * self.model.n_features());
        for c in candidates {
            for &f in &speeds {
                rows.extend(feature_row(c, self.length, f)?);
            }
        }
        let preds = self.model.predict_features(&rows)?;
        preds
            .chunks(speeds.len())
            .map(|p| {
                let values: Vec<f64> = p.iter().map(|q| q.value).collect();
                let warning = p.iter().any(|q| q.out_of_range || q.value <= 0.0);
                Ok(Evaluation {
                    beta: self.speed.merit_on_points(&values)?,
                    warning,
                })
            })
            .collect()
    }
}

/// Surrogate β of a single design vector.
pub fn beta_of_candidate(model: &MlpModel, params: &[f64], length: f64, speed: &SpeedRange) -> Result<Evaluation> {
    speed.validate()?;
    let obj = SurrogateObjective { model, length, speed };
    Ok(obj.evaluate(&[params.to_vec()])?[0])
}

/// Index and value of the smallest β; the first wins ties.
pub fn best_of(evals: &[Evaluation]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, e) in evals.iter().enumerate() {
        if e.beta.is_finite() && best.is_none_or(|(_, b)| e.beta < b) {
            best = Some((i, e.beta));
        }
    }
    best
}

/// `n` candidates drawn uniformly inside `bounds`, axis by axis per candidate.
pub fn draw_candidates(bounds: &[Interval], n: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| bounds.iter().map(|b| b.at(rng.gen::<f64>())).collect())
        .collect()
}

fn shrink(bounds: &[Interval], global: &[Interval], center: &[f64], factor: f64) -> Vec<Interval> {
    bounds
        .iter()
        .zip(global)
        .zip(center)
        .map(|((b, g), &c)| {
            // slide the window back inside the global range rather than cut it
            let w = (factor * b.width()).min(g.width());
            let lo = (c - 0.5 * w).clamp(g.lo, g.hi - w);
            Interval::new(lo, (lo + w).min(g.hi))
        })
        .collect()
}

fn relative_gain(old: f64, new: f64) -> f64 {
    (old - new) / old.abs().max(f64::MIN_POSITIVE)
}

/// Repeated Monte-Carlo search with bounds shrinking around the incumbent.
pub fn monte_carlo_search(objective: &impl Objective, space: &SearchSpace, config: &SearchConfig) -> Result<SearchResult> {
    space.validate()?;
    config.validate()?;
    let global = space.bounds();
    let mut bounds = global.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut history = Vec::new();
    let (mut evaluations, mut warnings) = (0, 0);
    for round in 0..config.k {
        let candidates = draw_candidates(&bounds, config.n1, &mut rng);
        let evals = objective.evaluate(&candidates)?;
        evaluations += evals.len();
        warnings += evals.iter().filter(|e| e.warning).count();
        let previous = best.as_ref().map(|b| b.1);
        if let Some((i, beta)) = best_of(&evals) {
            if previous.is_none_or(|p| beta < p) {
                best = Some((candidates[i].clone(), beta));
            }
        }
        let Some((center, beta)) = &best else {
            return Err(Error::Numerical("no finite objective value in the first round".into()));
        };
        history.push(*beta);
        log::debug!("round {}: beta_min {beta}", round + 1);
        // a round that found nothing better says nothing about convergence
        if let Some(p) = previous {
            let gain = relative_gain(p, *beta);
            if gain > 0.0 && gain < config.convergence_tol {
                break;
            }
        }
        bounds = shrink(&bounds, &global, center, config.shrink_factor);
    }
    let (best_params, best_beta) = best.expect("at least one round ran");
    Ok(SearchResult {
        best_params,
        best_beta,
        beta_history: history,
        evaluations,
        warnings,
    })
}

/// Sweep one axis at a time over an equispaced grid spanning its full
/// range, keeping any improvement, until a pass gains less than the
/// convergence tolerance.
pub fn coordinate_refinement(
    objective: &impl Objective,
    space: &SearchSpace,
    config: &SearchConfig,
    incumbent: &[f64],
) -> Result<SearchResult> {
    space.validate()?;
    config.validate()?;
    if !space.contains(incumbent) {
        return Err(Error::InvalidBounds(format!("incumbent {incumbent:?} outside the search space")));
    }
    let global = space.bounds();
    let first = objective.evaluate(&[incumbent.to_vec()])?[0];
    let mut current = incumbent.to_vec();
    let mut beta = first.beta;
    let (mut evaluations, mut warnings) = (1, usize::from(first.warning));
    let mut history = Vec::new();
    let mut order: Vec<usize> = (0..global.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(3);
    for _ in 0..MAX_PASSES {
        if config.shuffle_axes {
            order.shuffle(&mut rng);
        }
        let start = beta;
        for &axis in &order {
            let candidates: Vec<Vec<f64>> = linspace(global[axis].lo, global[axis].hi, config.n2)
                .into_iter()
                .map(|v| {
                    let mut c = current.clone();
                    c[axis] = v;
                    c
                })
                .collect();
            let evals = objective.evaluate(&candidates)?;
            evaluations += evals.len();
            warnings += evals.iter().filter(|e| e.warning).count();
            if let Some((i, b)) = best_of(&evals) {
                if b < beta {
                    beta = b;
                    current = candidates[i].clone();
                }
            }
        }
        history.push(beta);
        if !(relative_gain(start, beta) > config.convergence_tol) {
            break;
        }
    }
    Ok(SearchResult {
        best_params: current,
        best_beta: beta,
        beta_history: history,
        evaluations,
        warnings,
    })
}

/// One bundled parent scored against the optimum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParentComparison {
    pub name: String,
    pub params: Vec<f64>,
    pub block_coefficient: f64,
    pub surrogate_beta: f64,
    pub hydro_beta: f64,
    /// (β_parent − β_opt) / β_opt in percent, hydro values.
    pub difference_percent: f64,
}

#[derive(Debug, Clone)]
pub struct OptimizedHull {
    pub monte_carlo: SearchResult,
    pub refinement: SearchResult,
    pub params: HullParams,
    pub hull: HullForm,
    pub hydrostatics: HydrostaticsReport,
    pub surrogate_beta: f64,
    pub hydro_beta: f64,
    /// |β_surrogate − β_hydro| / β_hydro
    pub audit_delta: f64,
}

pub fn check_provenance(model: &MlpModel, pca: &PcaModel) -> Result<()> {
    if model.provenance.pca_digest != pca.parents_digest {
        return Err(Error::Provenance(format!(
            "surrogate was trained on data from PCA model {}, but the given PCA model is {}",
            model.provenance.pca_digest, pca.parents_digest
        )));
    }
    if model.n_axes() != pca.n_axes {
        return Err(Error::ShapeMismatch {
            expected: pca.n_axes,
            got: model.n_axes(),
        });
    }
    Ok(())
}

/// Monte-Carlo search, then coordinate refinement, then a hydro re-score
/// of the winner.
pub fn optimize_hull(model: &MlpModel, pca: &PcaModel, space: &SearchSpace, config: &SearchConfig) -> Result<OptimizedHull> {
    check_provenance(model, pca)?;
    if space.scores.len() != pca.n_axes {
        return Err(Error::ShapeMismatch {
            expected: pca.n_axes,
            got: space.scores.len(),
        });
    }
    let objective = SurrogateObjective {
        model,
        length: space.length,
        speed: &space.speed,
    };
    let monte_carlo = monte_carlo_search(&objective, space, config)?;
    let refinement = coordinate_refinement(&objective, space, config, &monte_carlo.best_params)?;
    let params = HullParams::from_slice(&refinement.best_params)?;
    let (hull, _) = pca.hull_from_params(&params, space.length)?;
    let hydrostatics = hydrostatics(&hull)?;
    let hydro_beta = hull_merit(&hull, &space.speed, Fluid::default(), MichellSettings::default())?;
    let surrogate_beta = refinement.best_beta;
    Ok(OptimizedHull {
        monte_carlo,
        refinement,
        params,
        hull,
        hydrostatics,
        surrogate_beta,
        hydro_beta,
        audit_delta: (surrogate_beta - hydro_beta).abs() / hydro_beta,
    })
}

/// Hydro and surrogate β of each parent at the search length, relative to
/// the optimum's hydro β.
pub fn compare_parents(
    model: &MlpModel,
    pca: &PcaModel,
    parents: &[Parent],
    space: &SearchSpace,
    optimum_beta: f64,
) -> Result<Vec<ParentComparison>> {
    parents
        .iter()
        .map(|p| {
            let raw = pca.compress(&p.grid)?;
            let mut params = pca.scale_unchecked(&raw);
            params.push(p.length_to_beam);
            params.push(p.beam_to_draft);
            let hull = p.hull(space.length)?;
            let hydro_beta = hull_merit(&hull, &space.speed, Fluid::default(), MichellSettings::default())?;
            let surrogate_beta = beta_of_candidate(model, &params, space.length, &space.speed)?.beta;
            Ok(ParentComparison {
                name: p.name.to_string(),
                params,
                block_coefficient: hydrostatics(&hull)?.block_coefficient,
                surrogate_beta,
                hydro_beta,
                difference_percent: 100.0 * (hydro_beta - optimum_beta) / optimum_beta,
            })
        })
        .collect()
}
