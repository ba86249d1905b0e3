//! Surrogate training data: sampled hulls evaluated over a Froude grid.

use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::linspace;
use crate::hydro::{Fluid, HullEvaluator, MichellSettings};
use crate::pca::{sample_hull, task_seed, PcaModel, SamplingBounds};
use crate::surrogate::{feature_names, TrainingSet};

pub const DATASET_FORMAT: &str = "hullopt-dataset/v1";

/// Hull counts of the full-scale study: total and held out for testing.
pub const PAPER_HULLS: usize = 1131;
pub const PAPER_TEST_HULLS: usize = 125;
pub const DESK_HULLS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "train" => Some(Split::Train),
            "test" => Some(Split::Test),
            _ => None,
        }
    }
}

/// Everything that determines a dataset besides the PCA model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub format: String,
    pub n_axes: usize,
    pub n_hulls: usize,
    pub n_test_hulls: usize,
    pub froude: Vec<f64>,
    pub seed: u64,
    pub bounds: SamplingBounds,
    pub fluid: Fluid,
    pub solver: MichellSettings,
    pub pca_digest: String,
}

impl DatasetHeader {
    pub fn new(model: &PcaModel, n_hulls: usize, seed: u64) -> Self {
        DatasetHeader {
            format: DATASET_FORMAT.into(),
            n_axes: model.n_axes,
            n_hulls,
            n_test_hulls: test_hulls_for(n_hulls),
            froude: default_froude_grid(),
            seed,
            bounds: SamplingBounds::dataset_default(model.n_axes),
            fluid: Fluid::default(),
            solver: MichellSettings::default(),
            pca_digest: model.parents_digest.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.format != DATASET_FORMAT {
            return Err(Error::Version {
                found: self.format.clone(),
                expected: DATASET_FORMAT.into(),
            });
        }
        if self.n_hulls < 2 || self.n_test_hulls == 0 || self.n_test_hulls >= self.n_hulls {
            return Err(Error::InvalidConfig(format!(
                "need at least one train and one test hull, got {} of {}",
                self.n_test_hulls, self.n_hulls
            )));
        }
        if self.froude.is_empty() || !self.froude.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidConfig("Froude grid must be strictly increasing".into()));
        }
        if self.bounds.scores.len() != self.n_axes {
            return Err(Error::ShapeMismatch {
                expected: self.n_axes,
                got: self.bounds.scores.len(),
            });
        }
        self.bounds.validate()
    }

    fn n_columns(&self) -> usize {
        // hull, split, scores, L/B, B/T, L, Fn, Re, C_T
        self.n_axes + 8
    }
}

/// 21 speeds from Fn 0.15 to 0.35.
pub fn default_froude_grid() -> Vec<f64> {
    linspace(0.15, 0.35, 21)
}

/// Test hulls in the full-scale proportion 125 / 1131, at least one.
pub fn test_hulls_for(n_hulls: usize) -> usize {
    let n = (n_hulls * PAPER_TEST_HULLS + PAPER_HULLS / 2) / PAPER_HULLS;
    n.max(1).min(n_hulls.saturating_sub(1))
}

/// Hull-level split: the first `n_test` hulls of a seeded shuffle are held out.
pub fn split_hulls(n_hulls: usize, n_test: usize, seed: u64) -> Vec<Split> {
    let mut idx: Vec<usize> = (0..n_hulls).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2);
    idx.shuffle(&mut rng);
    let mut split = vec![Split::Train; n_hulls];
    for &i in &idx[..n_test.min(n_hulls)] {
        split[i] = Split::Test;
    }
    split
}

/// One `(hull, Fn)` evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub hull: usize,
    pub split: Split,
    /// `[λ̄_1..λ̄_d, L/B, B/T]`
    pub params: Vec<f64>,
    pub length: f64,
    pub froude: f64,
    pub reynolds: f64,
    pub merit: f64,
}

impl Sample {
    fn to_line(&self) -> String {
        let mut cols = vec![self.hull.to_string(), self.split.as_str().to_string()];
        cols.extend(self.params.iter().map(|v| v.to_string()));
        for v in [self.length, self.froude, self.reynolds, self.merit] {
            cols.push(v.to_string());
        }
        cols.join(",")
    }

    fn parse(line: &str, n_columns: usize, path: &Path) -> Result<Self> {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != n_columns {
            return Err(Error::format(path, format!("expected {n_columns} columns: {line}")));
        }
        let bad = |what: &str| Error::format(path, format!("bad {what} in row: {line}"));
        let hull = cols[0].parse().map_err(|_| bad("hull index"))?;
        let split = Split::parse(cols[1]).ok_or_else(|| bad("split"))?;
        let nums = cols[2..]
            .iter()
            .map(|c| c.parse::<f64>().map_err(|_| bad("number")))
            .collect::<Result<Vec<f64>>>()?;
        if nums.iter().any(|v| !v.is_finite()) {
            return Err(bad("non-finite value"));
        }
        let k = nums.len();
        Ok(Sample {
            hull,
            split,
            params: nums[..k - 4].to_vec(),
            length: nums[k - 4],
            froude: nums[k - 3],
            reynolds: nums[k - 2],
            merit: nums[k - 1],
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub header: DatasetHeader,
    pub samples: Vec<Sample>,
}

fn column_header(n_axes: usize) -> String {
    let mut cols = vec!["hull".to_string(), "split".to_string()];
    cols.extend((1..=n_axes).map(|j| format!("lambda{j}")));
    cols.extend(["L_over_B", "B_over_T", "L", "Fn", "Re", "C_T"].map(String::from));
    cols.join(",")
}

fn hull_samples(model: &PcaModel, header: &DatasetHeader, index: usize, split: Split) -> Result<Vec<Sample>> {
    let sampled = sample_hull(model, &header.bounds, task_seed(header.seed, index as u64))?;
    let ev = HullEvaluator::new(&sampled.hull, header.fluid, header.solver)?;
    let params = sampled.params.to_vec();
    header
        .froude
        .iter()
        .map(|&f| {
            let r = ev.evaluate(f)?;
            if !(r.merit_coefficient > 0.0) {
                return Err(Error::Numerical(format!("hull {index}: C_T = {} at Fn {f}", r.merit_coefficient)));
            }
            Ok(Sample {
                hull: index,
                split,
                params: params.clone(),
                length: sampled.hull.length(),
                froude: f,
                reynolds: r.flow.reynolds,
                merit: r.merit_coefficient,
            })
        })
        .collect()
}

fn part_path(dir: &Path, index: usize) -> PathBuf {
    dir.join(format!("hull-{index:05}.csv"))
}

/// Rows of a finished part file, or `None` if it is missing or does not
/// match the expected hull.
fn read_part(path: &Path, header: &DatasetHeader, index: usize, split: Split) -> Option<Vec<Sample>> {
    let text = fs::read_to_string(path).ok()?;
    let rows: Vec<Sample> = text
        .lines()
        .map(|l| Sample::parse(l, header.n_columns(), path))
        .collect::<Result<_>>()
        .ok()?;
    let ok = rows.len() == header.froude.len()
        && rows
            .iter()
            .zip(&header.froude)
            .all(|(r, f)| r.hull == index && r.split == split && r.froude == *f);
    ok.then_some(rows)
}

fn write_part(path: &Path, rows: &[Sample]) -> Result<()> {
    let mut text = String::new();
    for r in rows {
        text.push_str(&r.to_line());
        text.push('\n');
    }
    // rename makes the finished file its own completion marker
    let tmp = path.with_extension("csv.tmp");
    fs::write(&tmp, text).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Sample and evaluate every hull, in parallel over hulls. With `parts_dir`
/// each finished hull is written to its own file there, and a rerun reuses
/// those files instead of recomputing.
pub fn generate(model: &PcaModel, header: &DatasetHeader, parts_dir: Option<&Path>) -> Result<Dataset> {
    header.validate()?;
    if header.n_axes != model.n_axes || header.pca_digest != model.parents_digest {
        return Err(Error::Provenance(format!(
            "dataset header expects PCA model {} with {} axes, got {} with {}",
            header.pca_digest, header.n_axes, model.parents_digest, model.n_axes
        )));
    }
    if let Some(dir) = parts_dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let splits = split_hulls(header.n_hulls, header.n_test_hulls, header.seed);
    let per_hull: Vec<Vec<Sample>> = (0..header.n_hulls)
        .into_par_iter()
        .map(|i| {
            let Some(dir) = parts_dir else {
                return hull_samples(model, header, i, splits[i]);
            };
            let path = part_path(dir, i);
            if let Some(rows) = read_part(&path, header, i, splits[i]) {
                return Ok(rows);
            }
            let rows = hull_samples(model, header, i, splits[i])?;
            write_part(&path, &rows)?;
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    Ok(Dataset {
        header: header.clone(),
        samples: per_hull.into_iter().flatten().collect(),
    })
}

impl Dataset {
    pub fn to_csv(&self) -> Result<String> {
        let mut s = format!("# {DATASET_FORMAT}\n# {}\n", serde_json::to_string(&self.header)?);
        s.push_str(&column_header(self.header.n_axes));
        s.push('\n');
        for r in &self.samples {
            s.push_str(&r.to_line());
            s.push('\n');
        }
        Ok(s)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut lines = text.lines();
        let first = lines.next().unwrap_or("");
        let found = first.strip_prefix("# ").unwrap_or("<missing>");
        if found != DATASET_FORMAT {
            return Err(Error::Version {
                found: found.into(),
                expected: DATASET_FORMAT.into(),
            });
        }
        let meta = lines
            .next()
            .and_then(|l| l.strip_prefix("# "))
            .ok_or_else(|| Error::format(path, "missing provenance header"))?;
        let header: DatasetHeader = serde_json::from_str(meta).map_err(|e| Error::format(path, e.to_string()))?;
        header.validate()?;
        if lines.next() != Some(column_header(header.n_axes).as_str()) {
            return Err(Error::format(path, "unexpected column header"));
        }
        let samples = lines
            .map(|l| Sample::parse(l, header.n_columns(), path))
            .collect::<Result<Vec<_>>>()?;
        let ds = Dataset { header, samples };
        ds.check(path)?;
        Ok(ds)
    }

    fn check(&self, path: &Path) -> Result<()> {
        let h = &self.header;
        if self.samples.len() != h.n_hulls * h.froude.len() {
            return Err(Error::format(
                path,
                format!("expected {} rows, found {}", h.n_hulls * h.froude.len(), self.samples.len()),
            ));
        }
        let splits = split_hulls(h.n_hulls, h.n_test_hulls, h.seed);
        for (k, s) in self.samples.iter().enumerate() {
            let i = k / h.froude.len();
            if s.hull != i || s.split != splits[i] || s.froude != h.froude[k % h.froude.len()] {
                return Err(Error::format(path, format!("row {k} does not match the header")));
            }
            if !(s.merit > 0.0) {
                return Err(Error::format(path, format!("row {k}: non-positive C_T")));
            }
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    /// SHA-256 of the serialized file.
    pub fn digest(&self) -> Result<String> {
        Ok(hex::encode(Sha256::digest(self.to_csv()?.as_bytes())))
    }

    pub fn n_rows(&self, split: Split) -> usize {
        self.samples.iter().filter(|s| s.split == split).count()
    }

    /// Raw features `[params.., Fn, Re]` and targets, split by hull.
    pub fn training_set(&self) -> Result<TrainingSet> {
        let n_features = self.header.n_axes + 4;
        debug_assert_eq!(feature_names(self.header.n_axes).len(), n_features);
        let mut set = TrainingSet {
            n_features,
            train_x: Vec::new(),
            train_y: Vec::new(),
            test_x: Vec::new(),
            test_y: Vec::new(),
            dataset_digest: self.digest()?,
            pca_digest: self.header.pca_digest.clone(),
        };
        for s in &self.samples {
            let (x, y) = match s.split {
                Split::Train => (&mut set.train_x, &mut set.train_y),
                Split::Test => (&mut set.test_x, &mut set.test_y),
            };
            x.extend_from_slice(&s.params);
            x.push(s.froude);
            x.push(s.reynolds);
            y.push(s.merit);
        }
        Ok(set)
    }
}
