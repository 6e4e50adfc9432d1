//! Pipeline configuration files.
//!
//! A configuration is a TOML document with one level of sections:
//!
//! ```toml
//! [corpus]
//! slices = ["1980", "1985", "1990"]
//! targets = ["trump"]
//!
//! [inputs]
//! neighbors = "data/neighbors_{slice}.jsonl"
//! similarities = "data/similarity_{slice}.jsonl"
//! counts = "data/counts.jsonl"
//!
//! [graph]
//! k_dist = [3, 1]
//! k_sub = [6, 2]
//!
//! [alignment]
//! strategy = "both"
//! persistence_threshold = 2
//!
//! [output]
//! dir = "out"
//! format = "json"
//! weight_shading = true
//!
//! [run]
//! seed = 0
//! ```
//!
//! Relative paths are resolved against the directory holding the file.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::align::{AlignmentStrategy, DEFAULT_PERSISTENCE};
use crate::export::ExportFormat;
use crate::graph::{GraphConfig, GraphConfigError};
use crate::lemma::{Lemma, LemmaError, SliceId};

pub const SLICE_PLACEHOLDER: &str = "{slice}";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("invalid graph settings: {0}")]
    Graph(#[from] GraphConfigError),
    #[error("invalid lemma in config: {0}")]
    Lemma(#[from] LemmaError),
    #[error("input file {0} does not exist")]
    MissingInput(PathBuf),
}

/// Which alignment strategies a run executes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategySelection {
    Previous,
    History,
    Both,
}

impl StrategySelection {
    pub fn strategies(self) -> Vec<AlignmentStrategy> {
        match self {
            StrategySelection::Previous => vec![AlignmentStrategy::PreviousSlice],
            StrategySelection::History => vec![AlignmentStrategy::AllHistory],
            StrategySelection::Both => AlignmentStrategy::ALL.to_vec(),
        }
    }
}

impl FromStr for StrategySelection {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "previous" | "previous_slice" => Ok(StrategySelection::Previous),
            "history" | "all_history" => Ok(StrategySelection::History),
            "both" => Ok(StrategySelection::Both),
            other => Err(format!("unknown strategy {other:?}, expected previous, history or both")),
        }
    }
}

impl fmt::Display for StrategySelection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StrategySelection::Previous => "previous",
            StrategySelection::History => "history",
            StrategySelection::Both => "both",
        })
    }
}

/// A path that may contain `{slice}`, replaced by each slice label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PathTemplate(pub String);

impl PathTemplate {
    pub fn is_per_slice(&self) -> bool {
        self.0.contains(SLICE_PLACEHOLDER)
    }

    pub fn resolve(&self, base: &Path, slice: &SliceId) -> PathBuf {
        base.join(self.0.replace(SLICE_PLACEHOLDER, &slice.label))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CorpusSection {
    slices: Vec<String>,
    targets: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InputsSection {
    neighbors: PathTemplate,
    #[serde(default)]
    similarities: Option<PathTemplate>,
    #[serde(default)]
    counts: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphSection {
    #[serde(default)]
    depth: Option<usize>,
    k_dist: Vec<usize>,
    k_sub: Vec<usize>,
}

impl Default for GraphSection {
    fn default() -> Self {
        let g = GraphConfig::default();
        GraphSection {
            depth: Some(g.depth),
            k_dist: g.k_dist,
            k_sub: g.k_sub,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AlignmentSection {
    #[serde(default = "default_strategy")]
    strategy: StrategySelection,
    #[serde(default = "default_persistence")]
    persistence_threshold: usize,
}

fn default_strategy() -> StrategySelection {
    StrategySelection::Both
}

fn default_persistence() -> usize {
    DEFAULT_PERSISTENCE
}

impl Default for AlignmentSection {
    fn default() -> Self {
        AlignmentSection {
            strategy: default_strategy(),
            persistence_threshold: default_persistence(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutputSection {
    #[serde(default = "default_out")]
    dir: String,
    #[serde(default = "default_format")]
    format: ExportFormat,
    #[serde(default)]
    weight_shading: bool,
}

fn default_out() -> String {
    "out".into()
}

fn default_format() -> ExportFormat {
    ExportFormat::Json
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: default_out(),
            format: default_format(),
            weight_shading: false,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunSection {
    #[serde(default)]
    seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    corpus: CorpusSection,
    inputs: InputsSection,
    #[serde(default)]
    graph: GraphSection,
    #[serde(default)]
    alignment: AlignmentSection,
    #[serde(default)]
    output: OutputSection,
    #[serde(default)]
    run: RunSection,
}

/// Values given on the command line or through the environment; each one
/// replaces the corresponding config entry.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub targets: Option<Vec<String>>,
    pub strategy: Option<StrategySelection>,
    pub out_dir: Option<PathBuf>,
    pub format: Option<ExportFormat>,
    pub seed: Option<u64>,
}

/// Slice labels and targets name output files and directories.
fn usable_in_paths(name: &str) -> bool {
    !name.is_empty() && !name.starts_with('.') && !name.contains(['/', '\\'])
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub slices: Vec<SliceId>,
    pub targets: Vec<Lemma>,
    pub graph: GraphConfig,
    pub strategy: StrategySelection,
    pub persistence_threshold: usize,
    pub neighbors: PathTemplate,
    pub similarities: Option<PathTemplate>,
    pub counts: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub format: ExportFormat,
    pub weight_shading: bool,
    pub seed: u64,
    /// Directory relative input paths are resolved against.
    pub base_dir: PathBuf,
}

impl PipelineConfig {
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        Self::from_toml(&text, &base, overrides).map_err(|e| match e {
            ConfigError::Parse { message, .. } => ConfigError::Parse {
                path: path.to_path_buf(),
                message,
            },
            other => other,
        })
    }

    pub fn from_toml(text: &str, base_dir: &Path, overrides: &Overrides) -> Result<Self, ConfigError> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: PathBuf::from("<config>"),
            message: e.to_string(),
        })?;
        let labels = &file.corpus.slices;
        if labels.is_empty() {
            return Err(ConfigError::Invalid("corpus.slices is empty".into()));
        }
        for (i, label) in labels.iter().enumerate() {
            if !usable_in_paths(label) || label.chars().any(char::is_whitespace) {
                return Err(ConfigError::Invalid(format!("slice label {label:?} is not usable in file names")));
            }
            if labels[..i].contains(label) {
                return Err(ConfigError::Invalid(format!("slice label {label:?} appears twice")));
            }
        }
        let target_names = overrides.targets.clone().unwrap_or(file.corpus.targets);
        if target_names.is_empty() {
            return Err(ConfigError::Invalid("no targets given".into()));
        }
        let mut targets = Vec::with_capacity(target_names.len());
        for t in target_names {
            let t = Lemma::new(t)?;
            if !usable_in_paths(t.as_str()) {
                return Err(ConfigError::Invalid(format!("target {t:?} is not usable as a directory name")));
            }
            if targets.contains(&t) {
                return Err(ConfigError::Invalid(format!("target {t:?} appears twice")));
            }
            targets.push(t);
        }
        let graph = GraphConfig {
            depth: file.graph.depth.unwrap_or(file.graph.k_dist.len()),
            k_dist: file.graph.k_dist,
            k_sub: file.graph.k_sub,
        };
        graph.validate()?;
        if file.alignment.persistence_threshold == 0 {
            return Err(ConfigError::Invalid("alignment.persistence_threshold must be at least 1".into()));
        }
        if !file.inputs.neighbors.is_per_slice() {
            return Err(ConfigError::Invalid(format!(
                "inputs.neighbors must contain {SLICE_PLACEHOLDER}"
            )));
        }
        if let Some(t) = &file.inputs.similarities {
            if !t.is_per_slice() {
                return Err(ConfigError::Invalid(format!(
                    "inputs.similarities must contain {SLICE_PLACEHOLDER}"
                )));
            }
        }
        Ok(PipelineConfig {
            slices: SliceId::chronology(labels),
            targets,
            graph,
            strategy: overrides.strategy.unwrap_or(file.alignment.strategy),
            persistence_threshold: file.alignment.persistence_threshold,
            neighbors: file.inputs.neighbors,
            similarities: file.inputs.similarities,
            counts: file.inputs.counts.map(|c| base_dir.join(c)),
            out_dir: overrides.out_dir.clone().unwrap_or_else(|| base_dir.join(file.output.dir)),
            format: overrides.format.unwrap_or(file.output.format),
            weight_shading: file.output.weight_shading,
            seed: overrides.seed.unwrap_or(file.run.seed),
            base_dir: base_dir.to_path_buf(),
        })
    }

    pub fn neighbor_path(&self, slice: &SliceId) -> PathBuf {
        self.neighbors.resolve(&self.base_dir, slice)
    }

    pub fn similarity_path(&self, slice: &SliceId) -> Option<PathBuf> {
        self.similarities.as_ref().map(|t| t.resolve(&self.base_dir, slice))
    }

    /// Every input file the run reads, in a fixed order.
    pub fn input_paths(&self) -> Vec<PathBuf> {
        let mut paths: Vec<PathBuf> = self.slices.iter().map(|s| self.neighbor_path(s)).collect();
        paths.extend(self.slices.iter().filter_map(|s| self.similarity_path(s)));
        paths.extend(self.counts.clone());
        paths
    }

    pub fn check_inputs(&self) -> Result<(), ConfigError> {
        match self.input_paths().into_iter().find(|p| !p.is_file()) {
            Some(p) => Err(ConfigError::MissingInput(p)),
            None => Ok(()),
        }
    }

    /// SHA-256 over the effective settings. Paths enter as written in the
    /// config, so the hash does not depend on where the tree is checked out.
    pub fn hash(&self) -> String {
        #[derive(Serialize)]
        struct Canonical<'a> {
            slices: Vec<&'a str>,
            targets: &'a [Lemma],
            graph: &'a GraphConfig,
            strategy: StrategySelection,
            persistence_threshold: usize,
            neighbors: &'a PathTemplate,
            similarities: &'a Option<PathTemplate>,
            counts: Option<String>,
            format: ExportFormat,
            weight_shading: bool,
            seed: u64,
        }
        let counts = self.counts.as_ref().map(|c| {
            c.strip_prefix(&self.base_dir)
                .unwrap_or(c)
                .to_string_lossy()
                .replace('\\', "/")
        });
        let canonical = Canonical {
            slices: self.slices.iter().map(|s| s.label.as_str()).collect(),
            targets: &self.targets,
            graph: &self.graph,
            strategy: self.strategy,
            persistence_threshold: self.persistence_threshold,
            neighbors: &self.neighbors,
            similarities: &self.similarities,
            counts,
            format: self.format,
            weight_shading: self.weight_shading,
            seed: self.seed,
        };
        let bytes = serde_json::to_vec(&canonical).expect("plain data serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}
