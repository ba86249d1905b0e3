//! Stage implementations behind the command-line verbs. Each stage reads
//! its inputs from files and writes its artifacts to files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dataset::{generate, Dataset, DatasetHeader, DESK_HULLS, PAPER_HULLS};
use crate::error::{Error, Result};
use crate::geometry::{hydrostatics, HullForm, HydrostaticsReport, OffsetGrid};
use crate::hydro::{curve_csv, Fluid, HullEvaluator, MichellSettings, SpeedRange};
use crate::optimize::{compare_parents, optimize_hull, ParentComparison, SearchConfig, SearchSpace};
use crate::parents::{bundled_parents, Parent};
use crate::pca::{fit, HullParams, PcaModel};
use crate::surrogate::{train_with, AdamConfig, MlpModel, TrainingConfig, TrainingHistory};
use crate::table;

pub const SEARCH_FORMAT: &str = "hullopt-search/v1";
pub const OFFSETS_EXTENSION: &str = "offsets";

/// Problem size of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    /// 200 hulls, 2000 epochs, batches of 128.
    Desk,
    /// 1131 hulls, 8000 epochs, batches of 2000.
    Paper,
}

impl Scale {
    pub fn n_hulls(self) -> usize {
        match self {
            Scale::Desk => DESK_HULLS,
            Scale::Paper => PAPER_HULLS,
        }
    }

    pub fn training(self, seed: u64) -> TrainingConfig {
        match self {
            Scale::Desk => TrainingConfig {
                epochs: 2000,
                batch_size: 128,
                hidden_layers: 36,
                hidden_width: 32,
                adam: AdamConfig::default(),
                seed,
            },
            Scale::Paper => TrainingConfig {
                seed,
                ..TrainingConfig::default()
            },
        }
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn parent_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(format!("{name}.{OFFSETS_EXTENSION}"))
}

/// Write the bundled parents as offset tables plus `parents.csv`, a
/// summary of their hydrostatics and scaled scores under a fit on all four.
pub fn write_parents(dir: &Path) -> Result<Vec<PathBuf>> {
    create_dir(dir)?;
    let parents = bundled_parents();
    let grids: Vec<OffsetGrid> = parents.iter().map(|p| p.grid.clone()).collect();
    let model = fit(&grids, None)?;
    let mut paths = Vec::new();
    let mut summary = String::from("name,L_over_B,B_over_T,C_B,C_P,L_over_vol13");
    for j in 1..=model.n_axes {
        let _ = write!(summary, ",lambda{j}");
    }
    summary.push('\n');
    for p in &parents {
        let path = parent_path(dir, p.name);
        table::write(&p.grid, &path)?;
        paths.push(path);
        let h = hydrostatics(&p.hull(100.0)?)?;
        let scores = model.scale_unchecked(&model.compress(&p.grid)?);
        let _ = write!(
            summary,
            "{},{},{},{:.4},{:.4},{:.4}",
            p.name, p.length_to_beam, p.beam_to_draft, h.block_coefficient, h.prismatic_coefficient, h.slenderness
        );
        for s in scores {
            let _ = write!(summary, ",{s:.4}");
        }
        summary.push('\n');
    }
    let summary_path = dir.join("parents.csv");
    write(&summary_path, &summary)?;
    paths.push(summary_path);
    Ok(paths)
}

/// Offset tables in `dir`, in file-name order.
pub fn read_parent_grids(dir: &Path) -> Result<Vec<OffsetGrid>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == OFFSETS_EXTENSION))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::InsufficientParents(0));
    }
    files.iter().map(|p| table::read(p)).collect()
}

pub fn fit_pca(parents_dir: &Path, axes: Option<usize>, out: &Path) -> Result<PcaModel> {
    let grids = read_parent_grids(parents_dir)?;
    let model = fit(&grids, axes)?;
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    model.save(out)?;
    Ok(model)
}

/// Directory of per-hull part files used while `out` is being generated.
pub fn parts_dir(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".parts");
    out.with_file_name(name)
}

/// Generate and save a dataset. Interrupted runs resume from the part
/// files left next to `out`; they are removed once the dataset is written.
pub fn gen_dataset(pca: &PcaModel, n_hulls: usize, seed: u64, out: &Path) -> Result<Dataset> {
    let header = DatasetHeader::new(pca, n_hulls, seed);
    let parts = parts_dir(out);
    let ds = generate(pca, &header, Some(&parts))?;
    write(out, &ds.to_csv()?)?;
    fs::remove_dir_all(&parts).map_err(|e| Error::io(&parts, e))?;
    Ok(ds)
}

/// History file written next to a model file.
pub fn history_path(model_out: &Path) -> PathBuf {
    model_out.with_extension("history.csv")
}

pub fn train_surrogate(
    dataset: &Dataset,
    config: &TrainingConfig,
    out: &Path,
    mut progress: impl FnMut(usize, f64, f64),
) -> Result<(MlpModel, TrainingHistory)> {
    let set = dataset.training_set()?;
    let (model, history) = train_with(&set, config, |r| progress(r.epoch, r.train_mape, r.test_mape))?;
    write(out, &model.to_json()?)?;
    write(&history_path(out), &history.to_csv())?;
    Ok((model, history))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchReport {
    pub format: String,
    pub pca_digest: String,
    pub dataset_digest: String,
    pub surrogate_test_mape: f64,
    pub space: SearchSpace,
    pub config: SearchConfig,
    pub monte_carlo_beta: Vec<f64>,
    pub refinement_beta: Vec<f64>,
    pub evaluations: usize,
    pub warnings: usize,
    pub parameter_names: Vec<String>,
    pub best_params: Vec<f64>,
    pub surrogate_beta: f64,
    pub hydro_beta: f64,
    pub audit_delta: f64,
    pub hydrostatics: HydrostaticsReport,
    pub parents: Vec<ParentComparison>,
}

impl SearchReport {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// Parents against the optimum, hydro β, as a fixed-width table.
    pub fn comparison_table(&self) -> String {
        let mut s = format!("{:<16}", "hull");
        for n in &self.parameter_names {
            let _ = write!(s, "{n:>10}");
        }
        let _ = writeln!(s, "{:>12}{:>12}{:>12}", "beta_hydro", "beta_dnn", "diff_%");
        let mut row = |name: &str, params: &[f64], hydro: f64, dnn: f64, diff: Option<f64>| {
            let _ = write!(s, "{name:<16}");
            for v in params {
                let _ = write!(s, "{v:>10.4}");
            }
            let diff = diff.map_or("-".to_string(), |d| format!("{d:+.2}"));
            let _ = writeln!(s, "{hydro:>12.4e}{dnn:>12.4e}{diff:>12}");
        };
        row("optimum", &self.best_params, self.hydro_beta, self.surrogate_beta, None);
        for p in &self.parents {
            row(&p.name, &p.params, p.hydro_beta, p.surrogate_beta, Some(p.difference_percent));
        }
        s
    }
}

#[derive(Debug, Clone)]
pub struct SearchOutputs {
    pub report: SearchReport,
    pub hull: HullForm,
    pub elapsed_search: f64,
}

pub const REPORT_FILE: &str = "search_report.json";
pub const WINNER_OFFSETS: &str = "optimum.offsets";
pub const WINNER_MESH: &str = "optimum.obj";

/// Run the search, re-score the winner and compare it with `parents`;
/// writes the report, the winning offset table and its mesh into `out_dir`.
pub fn run_search(
    model: &MlpModel,
    pca: &PcaModel,
    parents: &[Parent],
    space: &SearchSpace,
    config: &SearchConfig,
    out_dir: &Path,
) -> Result<SearchOutputs> {
    let t = Instant::now();
    let opt = optimize_hull(model, pca, space, config)?;
    let elapsed_search = t.elapsed().as_secs_f64();
    let comparisons = compare_parents(model, pca, parents, space, opt.hydro_beta)?;
    let mut names: Vec<String> = (1..=pca.n_axes).map(|j| format!("lambda{j}")).collect();
    names.push("L_over_B".into());
    names.push("B_over_T".into());
    let report = SearchReport {
        format: SEARCH_FORMAT.into(),
        pca_digest: pca.parents_digest.clone(),
        dataset_digest: model.provenance.dataset_digest.clone(),
        surrogate_test_mape: model.provenance.best_test_mape,
        space: space.clone(),
        config: config.clone(),
        monte_carlo_beta: opt.monte_carlo.beta_history.clone(),
        refinement_beta: opt.refinement.beta_history.clone(),
        evaluations: opt.monte_carlo.evaluations + opt.refinement.evaluations,
        warnings: opt.monte_carlo.warnings + opt.refinement.warnings,
        parameter_names: names,
        best_params: opt.params.to_vec(),
        surrogate_beta: opt.surrogate_beta,
        hydro_beta: opt.hydro_beta,
        audit_delta: opt.audit_delta,
        hydrostatics: opt.hydrostatics,
        parents: comparisons,
    };
    create_dir(out_dir)?;
    write(&out_dir.join(REPORT_FILE), &report.to_json()?)?;
    table::write(&opt.hull.grid, &out_dir.join(WINNER_OFFSETS))?;
    table::write_obj(&opt.hull, &out_dir.join(WINNER_MESH))?;
    Ok(SearchOutputs {
        report,
        hull: opt.hull,
        elapsed_search,
    })
}

/// Hydro resistance curve of `hull`, optionally with surrogate predictions
/// for the design vector `params` appended as a `C_T_dnn` column.
pub fn export_curves(
    hull: &HullForm,
    froude: &[f64],
    surrogate: Option<(&MlpModel, &[f64])>,
    out: &Path,
) -> Result<String> {
    let ev = HullEvaluator::new(hull, Fluid::default(), MichellSettings::default())?;
    let curve = ev.curve(froude)?;
    let mut text = curve_csv(&curve);
    if let Some((model, params)) = surrogate {
        let preds = model.predict_curve(params, hull.length(), froude)?;
        let mut lines = text.lines();
        let mut out_text = format!("{},C_T_dnn\n", lines.next().unwrap_or_default());
        for (line, p) in lines.zip(preds) {
            let _ = writeln!(out_text, "{line},{}", p.value);
        }
        text = out_text;
    }
    write(out, &text)?;
    Ok(text)
}

/// Hull from a design vector through the PCA model.
pub fn hull_from_design(pca: &PcaModel, params: &[f64], length: f64) -> Result<HullForm> {
    Ok(pca.hull_from_params(&HullParams::from_slice(params)?, length)?.0)
}

/// Uniform speed range helper used by the CLI.
pub fn speed_range(fn_lower: f64, fn_upper: f64, n_points: usize) -> Result<SpeedRange> {
    SpeedRange::uniform(fn_lower, fn_upper, n_points)
}
