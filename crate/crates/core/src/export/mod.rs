//! Serialization of graphs, cluster views, lineages and series.
//!
//! JSON is the canonical lossless format. GraphML carries the same content
//! for graph tools. DOT is presentation only: it encodes relation colors,
//! similarity shading and lineage colors, and cannot be read back.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::align::{AlignmentResult, AlignmentStrategy, LineageId};
use crate::graph::{GraphError, Relation, WordGraph};
use crate::lemma::{Lemma, SliceId};

pub mod dot;
pub mod graphml;
pub mod json;
pub mod table;

/// Version stamped into every JSON and GraphML document.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportFormat {
    Json,
    #[serde(rename = "graphml")]
    GraphMl,
    Dot,
    Csv,
}

impl ExportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ExportFormat::Json => "json",
            ExportFormat::GraphMl => "graphml",
            ExportFormat::Dot => "dot",
            ExportFormat::Csv => "csv",
        }
    }
}

impl fmt::Display for ExportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.extension())
    }
}

impl FromStr for ExportFormat {
    type Err = ExportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(ExportFormat::Json),
            "graphml" => Ok(ExportFormat::GraphMl),
            "dot" => Ok(ExportFormat::Dot),
            "csv" => Ok(ExportFormat::Csv),
            _ => Err(ExportError::UnknownFormat(s.to_string())),
        }
    }
}

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("unknown format {0:?}")]
    UnknownFormat(String),
    #[error("{what} cannot be written as {format}")]
    Unsupported { what: &'static str, format: ExportFormat },
    #[error("slice {0} is not part of the alignment")]
    UnknownSlice(String),
    #[error("graph is for slice {graph}, requested slice {requested}")]
    SliceMismatch { graph: String, requested: String },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Error)]
pub enum ImportError {
    #[error("{format} documents cannot be imported")]
    Unsupported { format: ExportFormat },
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error("unsupported schema_version {0} (expected {SCHEMA_VERSION})")]
    Version(u32),
    #[error("{path}: {source}")]
    Graph {
        path: String,
        #[source]
        source: GraphError,
    },
    #[error("XML error at byte {position}: {message}")]
    Xml { position: u64, message: String },
}

impl ImportError {
    pub(crate) fn schema(path: impl Into<String>, message: impl fmt::Display) -> Self {
        ImportError::Schema {
            path: path.into(),
            message: message.to_string(),
        }
    }
}

/// How edges are colored when both relations hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeColorRule {
    /// Substitution color wins over distributional.
    #[default]
    SubstitutionOverDistributional,
}

impl EdgeColorRule {
    pub fn dominant(self, relations: &std::collections::BTreeSet<Relation>) -> Relation {
        match self {
            EdgeColorRule::SubstitutionOverDistributional => {
                if relations.contains(&Relation::Substitution) {
                    Relation::Substitution
                } else {
                    Relation::Distributional
                }
            }
        }
    }
}

/// Lineage to color index. Index 0 is reserved for the residual lineage.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Palette {
    colors: BTreeMap<LineageId, usize>,
}

impl Palette {
    pub const RESIDUAL_INDEX: usize = 0;

    /// Residual at index 0, remaining lineages numbered 1.. in id order.
    pub fn for_lineages(ids: impl IntoIterator<Item = LineageId>) -> Self {
        let mut ids: Vec<LineageId> = ids.into_iter().filter(|id| !id.is_residual()).collect();
        ids.sort();
        ids.dedup();
        let mut colors: BTreeMap<LineageId, usize> =
            ids.into_iter().enumerate().map(|(i, id)| (id, i + 1)).collect();
        colors.insert(LineageId::RESIDUAL, Self::RESIDUAL_INDEX);
        Palette { colors }
    }

    pub fn for_result(result: &AlignmentResult) -> Self {
        Self::for_lineages(result.lineages.iter().map(|l| l.id))
    }

    pub fn index(&self, id: LineageId) -> Option<usize> {
        self.colors.get(&id).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExportStyle {
    pub edge_colors: EdgeColorRule,
    /// Shade weighted edges by similarity, darker meaning lower.
    pub weight_shading: bool,
    pub palette: Palette,
}

/// A node of a cluster view; the center has no lineage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterNode {
    pub lemma: Lemma,
    pub layer: usize,
    pub lineage: Option<LineageId>,
    pub color: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterEdge {
    pub a: Lemma,
    pub b: Lemma,
    pub relations: std::collections::BTreeSet<Relation>,
    pub weight: Option<f64>,
    /// Edge touched the center and is not part of the peripheral graph.
    pub removed: bool,
}

/// One slice of a target's graph colored by refined lineage.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterView {
    pub target: Lemma,
    pub slice: SliceId,
    pub strategy: AlignmentStrategy,
    pub nodes: Vec<ClusterNode>,
    pub edges: Vec<ClusterEdge>,
}

pub fn cluster_view(
    graph: &WordGraph,
    result: &AlignmentResult,
    slice: &SliceId,
    palette: &Palette,
) -> Result<ClusterView, ExportError> {
    if !result.slices.contains(slice) {
        return Err(ExportError::UnknownSlice(slice.label.clone()));
    }
    if &graph.slice != slice {
        return Err(ExportError::SliceMismatch {
            graph: graph.slice.label.clone(),
            requested: slice.label.clone(),
        });
    }
    let mut lineage_of: BTreeMap<&Lemma, LineageId> = BTreeMap::new();
    for lineage in &result.lineages {
        if let Some(members) = lineage.occurrences.get(slice) {
            for m in members {
                lineage_of.insert(m, lineage.id);
            }
        }
    }
    let nodes = graph
        .nodes()
        .map(|n| {
            let lineage = lineage_of.get(&n.lemma).copied();
            ClusterNode {
                lemma: n.lemma.clone(),
                layer: n.layer,
                lineage,
                color: lineage.and_then(|id| palette.index(id)),
            }
        })
        .collect();
    let edges = graph
        .edges()
        .map(|e| ClusterEdge {
            a: e.a.clone(),
            b: e.b.clone(),
            relations: e.relations.clone(),
            weight: e.weight,
            removed: e.touches(&graph.target),
        })
        .collect();
    Ok(ClusterView {
        target: graph.target.clone(),
        slice: slice.clone(),
        strategy: result.strategy,
        nodes,
        edges,
    })
}

pub fn export_graph(graph: &WordGraph, style: &ExportStyle, format: ExportFormat) -> Result<Vec<u8>, ExportError> {
    match format {
        ExportFormat::Json => json::graph_to_json(graph),
        ExportFormat::GraphMl => Ok(graphml::graph_to_graphml(graph).into_bytes()),
        ExportFormat::Dot => Ok(dot::graph_to_dot(graph, style).into_bytes()),
        ExportFormat::Csv => Err(ExportError::Unsupported {
            what: "graphs",
            format,
        }),
    }
}

pub fn import_graph(bytes: &[u8], format: ExportFormat) -> Result<WordGraph, ImportError> {
    match format {
        ExportFormat::Json => json::graph_from_json(bytes),
        ExportFormat::GraphMl => graphml::graph_from_graphml(bytes),
        ExportFormat::Dot | ExportFormat::Csv => Err(ImportError::Unsupported { format }),
    }
}

/// Exports the cluster view of `slice`. `graph` must be that slice's graph
/// and `result` the refined alignment it belongs to.
pub fn export_clusters(
    graph: &WordGraph,
    result: &AlignmentResult,
    slice: &SliceId,
    style: &ExportStyle,
    format: ExportFormat,
) -> Result<Vec<u8>, ExportError> {
    let view = cluster_view(graph, result, slice, &style.palette)?;
    match format {
        ExportFormat::Json => json::clusters_to_json(&view),
        ExportFormat::GraphMl => Ok(graphml::clusters_to_graphml(&view).into_bytes()),
        ExportFormat::Dot => Ok(dot::clusters_to_dot(&view, style).into_bytes()),
        ExportFormat::Csv => Err(ExportError::Unsupported {
            what: "cluster views",
            format,
        }),
    }
}

pub fn import_clusters(bytes: &[u8], format: ExportFormat) -> Result<ClusterView, ImportError> {
    match format {
        ExportFormat::Json => json::clusters_from_json(bytes),
        ExportFormat::GraphMl => graphml::clusters_from_graphml(bytes),
        ExportFormat::Dot | ExportFormat::Csv => Err(ImportError::Unsupported { format }),
    }
}

/// Checks a decoded cluster view against its own structure.
pub(crate) fn check_cluster_view(view: &ClusterView) -> Result<(), ImportError> {
    let mut layers = BTreeMap::new();
    for (i, n) in view.nodes.iter().enumerate() {
        if layers.insert(&n.lemma, n.layer).is_some() {
            return Err(ImportError::schema(format!("nodes[{i}]"), format!("duplicate node {:?}", n.lemma.as_str())));
        }
        if (n.lemma == view.target) != n.lineage.is_none() {
            return Err(ImportError::schema(
                format!("nodes[{i}]"),
                "exactly the center node must lack a lineage",
            ));
        }
    }
    if !layers.contains_key(&view.target) {
        return Err(ImportError::schema("nodes", format!("center {:?} missing", view.target.as_str())));
    }
    for (i, e) in view.edges.iter().enumerate() {
        for end in [&e.a, &e.b] {
            if !layers.contains_key(end) {
                return Err(ImportError::schema(
                    format!("edges[{i}]"),
                    format!("edge {:?}-{:?} references undeclared node {:?}", e.a.as_str(), e.b.as_str(), end.as_str()),
                ));
            }
        }
        if e.removed != (e.a == view.target || e.b == view.target) {
            return Err(ImportError::schema(
                format!("edges[{i}]"),
                "removed flag must mark exactly the center edges",
            ));
        }
    }
    Ok(())
}
