use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::DEFAULT_RATIO;
use crate::error::{Error, Result};
use crate::reranker::TrainingConfig;
use crate::screener::ScreenerConfig;

pub const DEFAULT_SEED: u64 = 42;

/// Input files and artifact locations. Artifact paths left unset live in
/// `artifacts` under their default names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PathsConfig {
    pub catalog: Option<PathBuf>,
    pub vulnerabilities: Option<PathBuf>,
    pub artifacts: PathBuf,
    pub index: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub vocab: Option<PathBuf>,
    /// Stopword list; the bundled English list when unset.
    pub stopwords: Option<PathBuf>,
    /// A fixed split manifest. When unset, `train` derives one from the seed.
    pub split: Option<PathBuf>,
}

impl Default for PathsConfig {
    fn default() -> Self {
        Self {
            catalog: None,
            vulnerabilities: None,
            artifacts: PathBuf::from("artifacts"),
            index: None,
            model: None,
            vocab: None,
            stopwords: None,
            split: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub paths: PathsConfig,
    pub screener: ScreenerConfig,
    pub training: TrainingConfig,
    pub seed: u64,
    /// Training : validation : testing.
    pub ratio: [u32; 3],
    /// Pinned split sizes; overrides `ratio` when set.
    pub split_sizes: Option<[usize; 3]>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            paths: PathsConfig::default(),
            screener: ScreenerConfig::default(),
            training: TrainingConfig {
                seed: DEFAULT_SEED,
                ..TrainingConfig::default()
            },
            seed: DEFAULT_SEED,
            ratio: DEFAULT_RATIO,
            split_sizes: None,
        }
    }
}

impl PipelineConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Parse {
                line,
                column,
                message,
                ..
            } => Error::Parse {
                path: path.to_path_buf(),
                line,
                column,
                message,
            },
            other => other,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text).map_err(|e| Error::Parse {
            path: PathBuf::from("<config>"),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        self.screener.validate()?;
        self.training.validate()?;
        if self.ratio.contains(&0) {
            return Err(Error::Config(format!(
                "split ratio components must be positive: {:?}",
                self.ratio
            )));
        }
        Ok(())
    }

    /// Applies a seed override; the training seed always follows the pipeline seed.
    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        if let Some(s) = seed {
            self.seed = s;
        }
        self.training.seed = self.seed;
        self
    }

    pub fn artifact(&self, name: &str) -> PathBuf {
        self.paths.artifacts.join(name)
    }

    pub fn index_path(&self) -> PathBuf {
        self.paths
            .index
            .clone()
            .unwrap_or_else(|| self.artifact("index.json"))
    }

    pub fn model_path(&self) -> PathBuf {
        self.paths
            .model
            .clone()
            .unwrap_or_else(|| self.artifact("model.json"))
    }

    pub fn vocab_path(&self) -> PathBuf {
        self.paths
            .vocab
            .clone()
            .unwrap_or_else(|| self.artifact("vocab.txt"))
    }

    /// Where `train` writes the split it used, and where `evaluate` reads it.
    pub fn split_path(&self) -> PathBuf {
        self.paths
            .split
            .clone()
            .unwrap_or_else(|| self.artifact("split.json"))
    }
}
