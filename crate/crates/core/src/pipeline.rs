//! End-to-end runs over a configured corpus.
//!
//! Every stage reads the artifacts of the stage before it from the output
//! directory, so a partial command after an earlier one produces the same
//! files as the corresponding part of [`Command::All`]. Layout:
//!
//! ```text
//! out/
//!   manifest.json
//!   frequency.csv                      when a counts file is configured
//!   <target>/graphs/<slice>.json       plus .graphml or .dot on request
//!   <target>/communities/<slice>.json
//!   <target>/series.csv, series.json
//!   <target>/<strategy>/alignment_raw.json, alignment.json
//!   <target>/<strategy>/lineages.csv, lineages.json
//!   <target>/<strategy>/distribution.csv, distribution.json
//!   <target>/<strategy>/clusters/<slice>.json
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::align::{align, refine_with, AlignmentResult, AlignmentStrategy};
use crate::cluster::{components, peripheral, SenseCommunity};
use crate::config::{ConfigError, PipelineConfig};
use crate::export::{self, json, table, ExportError, ExportFormat, ExportStyle, ImportError, Palette};
use crate::graph::{annotate_weights, build_graph, GraphConfigError, WordGraph};
use crate::lemma::{Lemma, SliceId};
use crate::metrics::{size_series, SeriesError};
use crate::store::{self, load_counts, load_similarities, NeighborStore, StoreError};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Validate,
    Build,
    Cluster,
    Align,
    Distribute,
    Timeseries,
    Export,
    All,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Build => "build",
            Command::Cluster => "cluster",
            Command::Align => "align",
            Command::Distribute => "distribute",
            Command::Timeseries => "timeseries",
            Command::Export => "export",
            Command::All => "all",
        }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{} problem(s) found in input files", .0.len())]
    InvalidInputs(Vec<StoreError>),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("artifact {0} is missing; run the earlier stage first")]
    MissingArtifact(PathBuf),
    #[error("{path}: {source}")]
    BadArtifact {
        path: PathBuf,
        #[source]
        source: ImportError,
    },
    #[error("{path}: {message}")]
    Inconsistent { path: PathBuf, message: String },
    #[error(transparent)]
    Graph(#[from] GraphConfigError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Export(#[from] ExportError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl PipelineError {
    /// Process exit status: 3 for configuration problems, 4 for missing
    /// inputs or artifacts, 5 for invalid data, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(ConfigError::MissingInput(_)) => 4,
            PipelineError::Config(_) | PipelineError::Graph(_) => 3,
            PipelineError::MissingArtifact(_) => 4,
            PipelineError::Store(StoreError::Io { .. }) => 4,
            PipelineError::InvalidInputs(_)
            | PipelineError::Store(_)
            | PipelineError::BadArtifact { .. }
            | PipelineError::Inconsistent { .. }
            | PipelineError::Series(_) => 5,
            PipelineError::Export(_) | PipelineError::Io { .. } => 1,
        }
    }
}

/// Writes through a temporary sibling file and a rename, so readers never
/// see a partial artifact.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), PipelineError> {
    let io = |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io)?;
    }
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    let mut f = fs::File::create(&tmp).map_err(io)?;
    f.write_all(bytes).map_err(io)?;
    f.sync_all().map_err(io)?;
    drop(f);
    fs::rename(&tmp, path).map_err(io)
}

fn read_artifact(path: &Path) -> Result<Vec<u8>, PipelineError> {
    fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => PipelineError::MissingArtifact(path.to_path_buf()),
        _ => PipelineError::Io {
            path: path.to_path_buf(),
            source: e,
        },
    })
}

fn bad(path: &Path) -> impl FnOnce(ImportError) -> PipelineError + '_ {
    move |source| PipelineError::BadArtifact {
        path: path.to_path_buf(),
        source,
    }
}

/// Artifact paths under the output directory.
#[derive(Debug, Clone)]
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Layout { root: root.into() }
    }

    pub fn manifest(&self) -> PathBuf {
        self.root.join(MANIFEST)
    }

    pub fn frequency(&self) -> PathBuf {
        self.root.join("frequency.csv")
    }

    fn target_dir(&self, target: &Lemma) -> PathBuf {
        self.root.join(target.as_str())
    }

    pub fn graph(&self, target: &Lemma, slice: &SliceId, ext: &str) -> PathBuf {
        self.target_dir(target).join("graphs").join(format!("{}.{ext}", slice.label))
    }

    pub fn communities(&self, target: &Lemma, slice: &SliceId) -> PathBuf {
        self.target_dir(target).join("communities").join(format!("{}.json", slice.label))
    }

    pub fn series(&self, target: &Lemma, ext: &str) -> PathBuf {
        self.target_dir(target).join(format!("series.{ext}"))
    }

    pub fn strategy_dir(&self, target: &Lemma, strategy: AlignmentStrategy) -> PathBuf {
        self.target_dir(target).join(strategy.short_name())
    }

    pub fn alignment_raw(&self, target: &Lemma, strategy: AlignmentStrategy) -> PathBuf {
        self.strategy_dir(target, strategy).join("alignment_raw.json")
    }

    pub fn alignment(&self, target: &Lemma, strategy: AlignmentStrategy) -> PathBuf {
        self.strategy_dir(target, strategy).join("alignment.json")
    }

    pub fn lineages(&self, target: &Lemma, strategy: AlignmentStrategy, ext: &str) -> PathBuf {
        self.strategy_dir(target, strategy).join(format!("lineages.{ext}"))
    }

    pub fn distribution(&self, target: &Lemma, strategy: AlignmentStrategy, ext: &str) -> PathBuf {
        self.strategy_dir(target, strategy).join(format!("distribution.{ext}"))
    }

    pub fn clusters(&self, target: &Lemma, strategy: AlignmentStrategy, slice: &SliceId, ext: &str) -> PathBuf {
        self.strategy_dir(target, strategy)
            .join("clusters")
            .join(format!("{}.{ext}", slice.label))
    }
}

/// Outcome of a successful command, printed by the CLI.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Summary {
    pub lines: Vec<String>,
}

impl Summary {
    fn note(&mut self, line: impl Into<String>) {
        self.lines.push(line.into());
    }
}

pub struct Pipeline {
    pub config: PipelineConfig,
    pub layout: Layout,
}

impl Pipeline {
    pub fn new(config: PipelineConfig) -> Self {
        let layout = Layout::new(config.out_dir.clone());
        Pipeline { config, layout }
    }

    fn style(&self, palette: Palette) -> ExportStyle {
        ExportStyle {
            weight_shading: self.config.weight_shading,
            palette,
            ..ExportStyle::default()
        }
    }

    fn pairs(&self) -> Vec<(&Lemma, &SliceId)> {
        self.config
            .targets
            .iter()
            .flat_map(|t| self.config.slices.iter().map(move |s| (t, s)))
            .collect()
    }

    pub fn run(&self, command: Command) -> Result<Summary, PipelineError> {
        let mut summary = Summary::default();
        match command {
            Command::Validate => {
                self.validate(&mut summary)?;
                return Ok(summary);
            }
            Command::Build => self.build(&mut summary)?,
            Command::Cluster => self.cluster(&mut summary)?,
            Command::Align => self.align(&mut summary)?,
            Command::Distribute => self.distribute(&mut summary)?,
            Command::Timeseries => self.timeseries(&mut summary)?,
            Command::Export => self.export(&mut summary)?,
            Command::All => {
                self.build(&mut summary)?;
                self.cluster(&mut summary)?;
                self.align(&mut summary)?;
                self.distribute(&mut summary)?;
                self.timeseries(&mut summary)?;
                self.export(&mut summary)?;
            }
        }
        self.write_manifest(command)?;
        summary.note(format!("manifest written to {}", self.layout.manifest().display()));
        Ok(summary)
    }

    /// Checks every input file and reports all problems, not just the first.
    pub fn validate(&self, summary: &mut Summary) -> Result<(), PipelineError> {
        self.config.check_inputs()?;
        let mut errors = Vec::new();
        let mut files = 0;
        for slice in &self.config.slices {
            errors.extend(store::validate_neighbors(&self.config.neighbor_path(slice), slice));
            files += 1;
            if let Some(p) = self.config.similarity_path(slice) {
                if let Err(e) = load_similarities(&p, slice) {
                    errors.push(e);
                }
                files += 1;
            }
        }
        if let Some(p) = &self.config.counts {
            if let Err(e) = load_counts(p, &self.config.slices) {
                errors.push(e);
            }
            files += 1;
        }
        if errors.is_empty() {
            summary.note(format!("{files} input file(s) valid"));
            Ok(())
        } else {
            Err(PipelineError::InvalidInputs(errors))
        }
    }

    fn load_store(&self) -> Result<NeighborStore, PipelineError> {
        self.config.check_inputs()?;
        let mut store = NeighborStore::new();
        for slice in &self.config.slices {
            store.load_file(&self.config.neighbor_path(slice), slice)?;
        }
        Ok(store)
    }

    pub fn build(&self, summary: &mut Summary) -> Result<(), PipelineError> {
        let store = self.load_store()?;
        let sims = self
            .config
            .slices
            .iter()
            .filter_map(|s| self.config.similarity_path(s).map(|p| load_similarities(&p, s)))
            .collect::<Result<Vec<_>, _>>()?;
        let style = self.style(Palette::default());
        let built: Vec<(usize, usize)> = self
            .pairs()
            .into_par_iter()
            .map(|(target, slice)| -> Result<(usize, usize), PipelineError> {
                let mut graph = build_graph(&store, target, slice, &self.config.graph)?;
                if let Some(s) = sims.iter().find(|s| &s.slice == slice) {
                    graph = annotate_weights(&graph, s)
                        .map_err(|e| PipelineError::Inconsistent {
                            path: self.layout.graph(target, slice, "json"),
                            message: e.to_string(),
                        })?
                        .0;
                }
                write_atomic(&self.layout.graph(target, slice, "json"), &json::graph_to_json(&graph)?)?;
                if matches!(self.config.format, ExportFormat::GraphMl | ExportFormat::Dot) {
                    let bytes = export::export_graph(&graph, &style, self.config.format)?;
                    write_atomic(&self.layout.graph(target, slice, self.config.format.extension()), &bytes)?;
                }
                Ok((graph.node_count(), graph.edge_count()))
            })
            .collect::<Result<_, _>>()?;
        let max = built.iter().map(|(n, _)| *n).max().unwrap_or(0);
        summary.note(format!(
            "built {} graph(s), largest has {max} node(s), bound {}",
            built.len(),
            self.config.graph.max_nodes()
        ));
        Ok(())
    }

    fn read_graph(&self, target: &Lemma, slice: &SliceId) -> Result<WordGraph, PipelineError> {
        let path = self.layout.graph(target, slice, "json");
        let graph = json::graph_from_json(&read_artifact(&path)?).map_err(bad(&path))?;
        if &graph.target != target || &graph.slice != slice {
            return Err(PipelineError::Inconsistent {
                path,
                message: format!("holds {}@{}, expected {target}@{slice}", graph.target, graph.slice.label),
            });
        }
        Ok(graph)
    }

    pub fn cluster(&self, summary: &mut Summary) -> Result<(), PipelineError> {
        let counts: Vec<usize> = self
            .pairs()
            .into_par_iter()
            .map(|(target, slice)| -> Result<usize, PipelineError> {
                let graph = self.read_graph(target, slice)?;
                let comms = components(&peripheral(&graph));
                write_atomic(
                    &self.layout.communities(target, slice),
                    &json::communities_to_json(target, slice, &comms)?,
                )?;
                Ok(comms.len())
            })
            .collect::<Result<_, _>>()?;
        summary.note(format!(
            "found {} communit(ies) across {} graph(s)",
            counts.iter().sum::<usize>(),
            counts.len()
        ));
        Ok(())
    }

    fn read_communities(&self, target: &Lemma) -> Result<BTreeMap<SliceId, Vec<SenseCommunity>>, PipelineError> {
        let mut map = BTreeMap::new();
        for slice in &self.config.slices {
            let path = self.layout.communities(target, slice);
            let (t, s, comms) = json::communities_from_json(&read_artifact(&path)?).map_err(bad(&path))?;
            if &t != target || &s != slice {
                return Err(PipelineError::Inconsistent {
                    path,
                    message: format!("holds {t}@{}, expected {target}@{slice}", s.label),
                });
            }
            map.insert(s, comms);
        }
        Ok(map)
    }

    pub fn align(&self, summary: &mut Summary) -> Result<(), PipelineError> {
        for target in &self.config.targets {
            let comms = self.read_communities(target)?;
            for strategy in self.config.strategy.strategies() {
                let raw = align(target, &comms, strategy);
                let refined = refine_with(&raw, self.config.persistence_threshold);
                write_atomic(&self.layout.alignment_raw(target, strategy), &json::alignment_to_json(&raw)?)?;
                write_atomic(&self.layout.alignment(target, strategy), &json::alignment_to_json(&refined)?)?;
                write_atomic(&self.layout.lineages(target, strategy, "csv"), &table::lineage_csv(&refined)?)?;
                write_atomic(&self.layout.lineages(target, strategy, "json"), &table::lineage_json(&refined)?)?;
                summary.note(format!(
                    "{target} {strategy}: {} lineage(s) before refinement, {} persistent plus residual",
                    raw.lineage_count(true),
                    refined.lineage_count(false)
                ));
            }
        }
        Ok(())
    }

    fn read_alignment(&self, target: &Lemma, strategy: AlignmentStrategy) -> Result<AlignmentResult, PipelineError> {
        let path = self.layout.alignment(target, strategy);
        let result = json::alignment_from_json(&read_artifact(&path)?).map_err(bad(&path))?;
        if &result.target != target || result.strategy != strategy || !result.is_refined() {
            return Err(PipelineError::Inconsistent {
                path,
                message: format!("expected the refined {strategy} alignment of {target}"),
            });
        }
        Ok(result)
    }

    pub fn distribute(&self, summary: &mut Summary) -> Result<(), PipelineError> {
        for target in &self.config.targets {
            for strategy in self.config.strategy.strategies() {
                let result = self.read_alignment(target, strategy)?;
                write_atomic(&self.layout.distribution(target, strategy, "csv"), &table::distribution_csv(&result)?)?;
                write_atomic(&self.layout.distribution(target, strategy, "json"), &table::distribution_json(&result)?)?;
                let undefined = crate::metrics::undefined_slices(&result);
                if !undefined.is_empty() {
                    let labels: Vec<&str> = undefined.iter().map(|s| s.label.as_str()).collect();
                    summary.note(format!("{target} {strategy}: no distribution for {}", labels.join(", ")));
                }
            }
        }
        summary.note("distributions written");
        Ok(())
    }

    pub fn timeseries(&self, summary: &mut Summary) -> Result<(), PipelineError> {
        for target in &self.config.targets {
            let graphs = self
                .config
                .slices
                .iter()
                .map(|s| self.read_graph(target, s))
                .collect::<Result<Vec<_>, _>>()?;
            if let Some(series) = size_series(&graphs)? {
                write_atomic(&self.layout.series(target, "csv"), &table::series_csv(&series)?)?;
                write_atomic(&self.layout.series(target, "json"), &table::series_json(&series)?)?;
                if let Some(peak) = series.peak() {
                    summary.note(format!("{target}: node count peaks at {}", peak.label));
                }
            }
        }
        if let Some(path) = &self.config.counts {
            let counts = load_counts(path, &self.config.slices)?;
            let rows: Vec<(Lemma, Vec<(SliceId, f64)>)> = self
                .config
                .targets
                .iter()
                .map(|t| (t.clone(), store::relative_frequency(&counts, t)))
                .collect();
            write_atomic(&self.layout.frequency(), &table::frequency_csv(&rows)?)?;
        }
        Ok(())
    }

    pub fn export(&self, summary: &mut Summary) -> Result<(), PipelineError> {
        let mut written = 0;
        for target in &self.config.targets {
            let graphs = self
                .config
                .slices
                .iter()
                .map(|s| self.read_graph(target, s))
                .collect::<Result<Vec<_>, _>>()?;
            for strategy in self.config.strategy.strategies() {
                let result = self.read_alignment(target, strategy)?;
                let style = self.style(Palette::for_result(&result));
                for graph in &graphs {
                    let mut formats = vec![ExportFormat::Json];
                    if matches!(self.config.format, ExportFormat::GraphMl | ExportFormat::Dot) {
                        formats.push(self.config.format);
                    }
                    for format in formats {
                        let bytes = export::export_clusters(graph, &result, &graph.slice, &style, format)?;
                        write_atomic(
                            &self.layout.clusters(target, strategy, &graph.slice, format.extension()),
                            &bytes,
                        )?;
                        written += 1;
                    }
                }
            }
        }
        summary.note(format!("exported {written} cluster view(s)"));
        Ok(())
    }

    fn write_manifest(&self, command: Command) -> Result<(), PipelineError> {
        let base = &self.config.base_dir;
        let inputs = self
            .config
            .input_paths()
            .into_iter()
            .filter(|p| p.is_file())
            .map(|p| {
                let digest = sha256_file(&p)?;
                Ok(FileEntry {
                    path: relative(&p, base),
                    sha256: digest,
                })
            })
            .collect::<Result<Vec<_>, PipelineError>>()?;
        let mut artifacts = Vec::new();
        for path in list_files(&self.layout.root)? {
            if path == self.layout.manifest() {
                continue;
            }
            artifacts.push(FileEntry {
                path: relative(&path, &self.layout.root),
                sha256: sha256_file(&path)?,
            });
        }
        let mut graphs = Vec::new();
        for (target, slice) in self.pairs() {
            if self.layout.graph(target, slice, "json").is_file() {
                let g = self.read_graph(target, slice)?;
                graphs.push(GraphEntry {
                    target: target.clone(),
                    slice: slice.label.clone(),
                    nodes: g.node_count(),
                    edges: g.edge_count(),
                    empty: g.empty,
                    node_bound: g.config.max_nodes(),
                });
            }
        }
        let manifest = Manifest {
            schema_version: export::SCHEMA_VERSION,
            kind: "run_manifest",
            tool: concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION")),
            command: command.name(),
            config_hash: self.config.hash(),
            inputs,
            artifacts,
            graphs,
        };
        write_atomic(&self.layout.manifest(), &json::to_pretty(&manifest)?)
    }
}

#[derive(Serialize)]
struct FileEntry {
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct GraphEntry {
    target: Lemma,
    slice: String,
    nodes: usize,
    edges: usize,
    empty: bool,
    node_bound: usize,
}

#[derive(Serialize)]
struct Manifest {
    schema_version: u32,
    kind: &'static str,
    tool: &'static str,
    command: &'static str,
    config_hash: String,
    inputs: Vec<FileEntry>,
    artifacts: Vec<FileEntry>,
    graphs: Vec<GraphEntry>,
}

fn sha256_file(path: &Path) -> Result<String, PipelineError> {
    let bytes = fs::read(path).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// `path` relative to `base` with forward slashes.
fn relative(path: &Path, base: &Path) -> String {
    let rel = path.strip_prefix(base).unwrap_or(path);
    rel.components()
        .map(|c| c.as_os_str().to_string_lossy().into_owned())
        .collect::<Vec<_>>()
        .join("/")
}

/// Regular files below `root`, sorted, skipping temporary files.
fn list_files(root: &Path) -> Result<Vec<PathBuf>, PipelineError> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        let entries = fs::read_dir(&dir).map_err(|source| PipelineError::Io {
            path: dir.clone(),
            source,
        })?;
        for entry in entries {
            let entry = entry.map_err(|source| PipelineError::Io {
                path: dir.clone(),
                source,
            })?;
            let path = entry.path();
            if path.is_dir() {
                stack.push(path);
            } else if !entry.file_name().to_string_lossy().starts_with('.') {
                out.push(path);
            }
        }
    }
    out.sort();
    Ok(out)
}
