//! Record of the artifacts produced by each pipeline stage.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const MANIFEST_FORMAT: &str = "hullopt-manifest/v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Parents,
    Pca,
    Dataset,
    Surrogate,
    SearchReport,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Parents => "parents",
            Stage::Pca => "pca",
            Stage::Dataset => "dataset",
            Stage::Surrogate => "surrogate",
            Stage::SearchReport => "search-report",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub path: PathBuf,
    pub format: String,
    /// SHA-256 of the file contents.
    pub sha256: String,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineManifest {
    pub format: String,
    pub tool_version: String,
    pub artifacts: BTreeMap<Stage, Artifact>,
}

impl Default for PipelineManifest {
    fn default() -> Self {
        PipelineManifest {
            format: MANIFEST_FORMAT.into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            artifacts: BTreeMap::new(),
        }
    }
}

pub fn file_digest(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

impl PipelineManifest {
    /// Load `path`, or start an empty manifest if it does not exist.
    pub fn open(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Ok(Self::default());
        }
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?;
        let found = value.get("format").and_then(|v| v.as_str()).unwrap_or("<missing>");
        if found != MANIFEST_FORMAT {
            return Err(Error::Version {
                found: found.into(),
                expected: MANIFEST_FORMAT.into(),
            });
        }
        serde_json::from_value(value).map_err(|e| Error::format(path, e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn record(&mut self, stage: Stage, path: &Path, format: &str, seed: Option<u64>) -> Result<()> {
        let sha256 = file_digest(path)?;
        self.artifacts.insert(
            stage,
            Artifact {
                path: path.to_path_buf(),
                format: format.into(),
                sha256,
                seed,
            },
        );
        Ok(())
    }

    pub fn path_of(&self, stage: Stage) -> Option<&Path> {
        self.artifacts.get(&stage).map(|a| a.path.as_path())
    }

    /// Check that `path`, when it is the recorded artifact of `stage`, still
    /// has the recorded contents.
    pub fn verify(&self, stage: Stage, path: &Path) -> Result<()> {
        let Some(a) = self.artifacts.get(&stage) else {
            return Ok(());
        };
        if a.path != path {
            return Ok(());
        }
        let actual = file_digest(path)?;
        if actual != a.sha256 {
            return Err(Error::Provenance(format!(
                "{} artifact {} changed since it was recorded: manifest sha256 {}, file sha256 {}",
                stage.name(),
                path.display(),
                a.sha256,
                actual
            )));
        }
        Ok(())
    }

    /// Verify every recorded artifact.
    pub fn verify_all(&self) -> Result<()> {
        for (stage, a) in &self.artifacts {
            self.verify(*stage, &a.path)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn records_and_detects_changes() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("a.json");
        fs::write(&file, "one").unwrap();
        let mpath = dir.path().join("manifest.json");
        let mut m = PipelineManifest::open(&mpath).unwrap();
        m.record(Stage::Pca, &file, "x/v1", Some(3)).unwrap();
        m.save(&mpath).unwrap();
        let back = PipelineManifest::open(&mpath).unwrap();
        assert_eq!(back, m);
        back.verify_all().unwrap();
        fs::write(&file, "two").unwrap();
        assert!(matches!(back.verify(Stage::Pca, &file), Err(Error::Provenance(_))));
        // other paths are not tracked
        back.verify(Stage::Pca, &dir.path().join("b.json")).unwrap();
        fs::write(&mpath, "{\"format\": \"hullopt-manifest/v0\"}").unwrap();
        assert!(matches!(PipelineManifest::open(&mpath), Err(Error::Version { .. })));
    }
}
