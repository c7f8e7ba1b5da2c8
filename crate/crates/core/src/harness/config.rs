use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::manifest::blob_hash;
use super::mock::MockLlmSpec;
use crate::dataset::{BuildOptions, SplitRatios};
use crate::error::{Error, Result};
use crate::generation::{Demonstration, GenerationConfig, PoolInput, Provider, RetryPolicy, TaskSpec};
use crate::metrics::M2Document;
use crate::rerank::{Method, RerankOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataPaths {
    /// One input per line, or JSONL `{id, source, target?}` when the file
    /// ends in `.jsonl`.
    pub inputs: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub targets: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m2_gold: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptSet {
    pub name: String,
    pub demonstrations: Vec<Demonstration>,
    /// Quality dial used for this set when running against the mock.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mock_quality: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mock_quality: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Endpoints {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub completion_url: Option<String>,
    pub provider: Provider,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corrector_url: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MetricKind {
    #[serde(rename = "m2_f05")]
    M2F05,
    /// ROUGE-1, ROUGE-2 and ROUGE-L; ROUGE-L F1 is the headline score.
    #[serde(rename = "rouge")]
    Rouge,
}

impl MetricKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MetricKind::M2F05 => "m2_f05",
            MetricKind::Rouge => "rouge",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RerankSection {
    /// Method used by `rerank`, `evaluate` and `robustness`.
    pub method: Method,
    #[serde(flatten)]
    pub options: RerankOptions,
}

impl Default for RerankSection {
    fn default() -> Self {
        RerankSection {
            method: Method::Mbrd,
            options: RerankOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetSection {
    pub build: BuildOptions,
    pub split: SplitRatios,
    pub seed: u64,
}

fn default_concurrency() -> usize {
    8
}

fn default_methods() -> Vec<Method> {
    vec![Method::Greedy, Method::Mbrd, Method::OracleRank, Method::OracleCombine]
}

/// One experiment, read from a single JSON file. Relative paths are resolved
/// against the directory holding that file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub task: TaskSpec,
    pub data: DataPaths,
    #[serde(default)]
    pub generation: GenerationConfig,
    pub prompt_sets: Vec<PromptSet>,
    #[serde(default)]
    pub models: Vec<ModelSpec>,
    #[serde(default)]
    pub endpoints: Endpoints,
    pub cache_path: PathBuf,
    pub metric: MetricKind,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub mock: MockLlmSpec,
    #[serde(default)]
    pub rerank: RerankSection,
    /// Methods compared by the oracle, robustness and swap reports.
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default)]
    pub dataset: DatasetSection,
    #[serde(default = "default_concurrency")]
    pub concurrency: usize,
    #[serde(default)]
    pub retry: RetryPolicy,
    /// Blob hash of the file the config was loaded from.
    #[serde(skip)]
    pub file_hash: Option<String>,
}

impl ExperimentConfig {
    /// Reads, resolves and validates a config file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        config.resolve_paths(base);
        config.file_hash = Some(blob_hash(text.as_bytes()));
        config.validate()?;
        Ok(config)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        join(&mut self.data.inputs);
        if let Some(p) = self.data.targets.as_mut() {
            join(p);
        }
        if let Some(p) = self.data.m2_gold.as_mut() {
            join(p);
        }
        join(&mut self.cache_path);
        join(&mut self.output_dir);
    }

    pub fn validate(&self) -> Result<()> {
        if self.prompt_sets.is_empty() {
            return Err(Error::Config("prompt_sets must not be empty".into()));
        }
        for file in [Some(&self.data.inputs), self.data.targets.as_ref(), self.data.m2_gold.as_ref()]
            .into_iter()
            .flatten()
        {
            if !file.is_file() {
                return Err(Error::Config(format!("data file {} does not exist", file.display())));
            }
        }
        if self.metric == MetricKind::M2F05 && self.data.m2_gold.is_none() {
            return Err(Error::Config("metric m2_f05 needs data.m2_gold".into()));
        }
        self.generation.validate()?;
        self.mock.validate()?;
        self.primary_task().validate()?;
        for set in &self.prompt_sets {
            self.task_for(set).validate()?;
            if let Some(q) = set.mock_quality {
                self.mock.with_quality(q).validate()?;
            }
        }
        for model in &self.models {
            if let Some(q) = model.mock_quality {
                self.mock.with_quality(q).validate()?;
            }
        }
        if self.concurrency == 0 {
            return Err(Error::Config("concurrency must be at least 1".into()));
        }
        Ok(())
    }

    /// The task as used by `generate`: its own demonstrations, or the first
    /// prompt set's when it has none.
    pub fn primary_task(&self) -> TaskSpec {
        if self.task.demonstrations.is_empty() && !self.task.zero_shot {
            self.task_for(&self.prompt_sets[0])
        } else {
            self.task.clone()
        }
    }

    pub fn task_for(&self, set: &PromptSet) -> TaskSpec {
        self.task.clone().with_demonstrations(set.demonstrations.clone())
    }

    pub fn mock_for_set(&self, set: &PromptSet) -> MockLlmSpec {
        set.mock_quality.map_or(self.mock, |q| self.mock.with_quality(q))
    }

    pub fn mock_for_model(&self, model: &ModelSpec) -> MockLlmSpec {
        model.mock_quality.map_or(self.mock, |q| self.mock.with_quality(q))
    }

    pub fn gold(&self) -> Result<Option<M2Document>> {
        self.data.m2_gold.as_ref().map(M2Document::read).transpose()
    }

    /// Inputs with ids and, when available, targets. Targets come from the
    /// targets file, else from the first annotator of the M2 gold.
    pub fn load_inputs(&self) -> Result<Vec<PoolInput>> {
        let mut inputs = read_inputs(&self.data.inputs)?;
        let targets: Option<Vec<String>> = match (&self.data.targets, &self.data.m2_gold) {
            (Some(path), _) => Some(read_lines(path)?),
            (None, Some(_)) => {
                let gold = self.gold()?.expect("m2 path present");
                Some(
                    gold.sentences
                        .iter()
                        .map(|s| s.corrected(0).map(|t| t.join(" ")))
                        .collect::<Result<_>>()?,
                )
            }
            (None, None) => None,
        };
        if let Some(targets) = targets {
            if targets.len() != inputs.len() {
                return Err(Error::CorpusMismatch(format!(
                    "{} inputs but {} targets",
                    inputs.len(),
                    targets.len()
                )));
            }
            for (input, target) in inputs.iter_mut().zip(targets) {
                input.target = Some(target);
            }
        }
        Ok(inputs)
    }
}

pub fn read_lines(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text.lines().map(|l| l.trim_end_matches('\r').to_string()).collect())
}

fn read_inputs(path: &Path) -> Result<Vec<PoolInput>> {
    if path.extension().is_some_and(|e| e == "jsonl") {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        text.lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                serde_json::from_str(l).map_err(|e| Error::Parse {
                    line: i + 1,
                    message: e.to_string(),
                })
            })
            .collect()
    } else {
        Ok(read_lines(path)?
            .into_iter()
            .enumerate()
            .map(|(i, source)| PoolInput {
                id: i.to_string(),
                source,
                target: None,
            })
            .collect())
    }
}
