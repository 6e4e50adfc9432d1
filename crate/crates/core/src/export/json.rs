use std::collections::{BTreeMap, BTreeSet};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{check_cluster_view, ClusterEdge, ClusterNode, ClusterView, ExportError, ImportError, SCHEMA_VERSION};
use crate::align::{AlignmentResult, AlignmentStrategy, LineageEvent, LineageId, SenseLineage};
use crate::cluster::SenseCommunity;
use crate::graph::{GraphConfig, GraphEdge, GraphNode, WordGraph};
use crate::lemma::{Lemma, SliceId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum DocKind {
    WordGraph,
    ClusterView,
    Alignment,
    Communities,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphDoc {
    schema_version: u32,
    kind: DocKind,
    target: Lemma,
    slice: SliceId,
    empty: bool,
    config: GraphConfig,
    nodes: Vec<GraphNode>,
    edges: Vec<GraphEdge>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClusterDoc {
    schema_version: u32,
    kind: DocKind,
    target: Lemma,
    slice: SliceId,
    strategy: AlignmentStrategy,
    nodes: Vec<ClusterNode>,
    edges: Vec<ClusterEdge>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OccurrenceDoc {
    slice: SliceId,
    members: BTreeSet<Lemma>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LineageDoc {
    id: LineageId,
    residual: bool,
    occurrences: Vec<OccurrenceDoc>,
    events: Vec<LineageEvent>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AssignmentDoc {
    slice: SliceId,
    community: usize,
    lineage: LineageId,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AlignmentDoc {
    schema_version: u32,
    kind: DocKind,
    target: Lemma,
    strategy: AlignmentStrategy,
    persistence_threshold: Option<usize>,
    slices: Vec<SliceId>,
    lineages: Vec<LineageDoc>,
    assignment: Vec<AssignmentDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CommunityDoc {
    id: usize,
    members: BTreeSet<Lemma>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CommunitiesDoc {
    schema_version: u32,
    kind: DocKind,
    target: Lemma,
    slice: SliceId,
    communities: Vec<CommunityDoc>,
}

pub(crate) fn to_pretty<T: Serialize>(doc: &T) -> Result<Vec<u8>, ExportError> {
    let mut out = serde_json::to_vec_pretty(doc)?;
    out.push(b'\n');
    Ok(out)
}

fn parse<T: DeserializeOwned>(bytes: &[u8]) -> Result<T, ImportError> {
    let mut de = serde_json::Deserializer::from_slice(bytes);
    serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        ImportError::schema(path, e.into_inner())
    })
}

fn check_header(version: u32, kind: DocKind, expected: DocKind) -> Result<(), ImportError> {
    if version != SCHEMA_VERSION {
        return Err(ImportError::Version(version));
    }
    if kind != expected {
        return Err(ImportError::schema("kind", format!("expected {expected:?}, found {kind:?}")));
    }
    Ok(())
}

pub fn graph_to_json(graph: &WordGraph) -> Result<Vec<u8>, ExportError> {
    to_pretty(&GraphDoc {
        schema_version: SCHEMA_VERSION,
        kind: DocKind::WordGraph,
        target: graph.target.clone(),
        slice: graph.slice.clone(),
        empty: graph.empty,
        config: graph.config.clone(),
        nodes: graph.nodes().cloned().collect(),
        edges: graph.edges().cloned().collect(),
    })
}

pub fn graph_from_json(bytes: &[u8]) -> Result<WordGraph, ImportError> {
    let doc: GraphDoc = parse(bytes)?;
    check_header(doc.schema_version, doc.kind, DocKind::WordGraph)?;
    WordGraph::from_parts(doc.target, doc.slice, doc.config, doc.empty, doc.nodes, doc.edges)
        .map_err(|source| ImportError::Graph {
            path: "graph".into(),
            source,
        })
}

pub fn clusters_to_json(view: &ClusterView) -> Result<Vec<u8>, ExportError> {
    to_pretty(&ClusterDoc {
        schema_version: SCHEMA_VERSION,
        kind: DocKind::ClusterView,
        target: view.target.clone(),
        slice: view.slice.clone(),
        strategy: view.strategy,
        nodes: view.nodes.clone(),
        edges: view.edges.clone(),
    })
}

pub fn clusters_from_json(bytes: &[u8]) -> Result<ClusterView, ImportError> {
    let doc: ClusterDoc = parse(bytes)?;
    check_header(doc.schema_version, doc.kind, DocKind::ClusterView)?;
    let view = ClusterView {
        target: doc.target,
        slice: doc.slice,
        strategy: doc.strategy,
        nodes: doc.nodes,
        edges: doc.edges,
    };
    check_cluster_view(&view)?;
    Ok(view)
}

pub fn alignment_to_json(result: &AlignmentResult) -> Result<Vec<u8>, ExportError> {
    to_pretty(&AlignmentDoc {
        schema_version: SCHEMA_VERSION,
        kind: DocKind::Alignment,
        target: result.target.clone(),
        strategy: result.strategy,
        persistence_threshold: result.persistence_threshold,
        slices: result.slices.clone(),
        lineages: result
            .lineages
            .iter()
            .map(|l| LineageDoc {
                id: l.id,
                residual: l.residual,
                occurrences: l
                    .occurrences
                    .iter()
                    .map(|(slice, members)| OccurrenceDoc {
                        slice: slice.clone(),
                        members: members.clone(),
                    })
                    .collect(),
                events: l.events.clone(),
            })
            .collect(),
        assignment: result
            .assignment
            .iter()
            .map(|((slice, community), lineage)| AssignmentDoc {
                slice: slice.clone(),
                community: *community,
                lineage: *lineage,
            })
            .collect(),
    })
}

pub fn alignment_from_json(bytes: &[u8]) -> Result<AlignmentResult, ImportError> {
    let doc: AlignmentDoc = parse(bytes)?;
    check_header(doc.schema_version, doc.kind, DocKind::Alignment)?;
    let mut lineages = Vec::with_capacity(doc.lineages.len());
    let mut known = BTreeSet::new();
    for (i, l) in doc.lineages.into_iter().enumerate() {
        if l.residual != l.id.is_residual() || !known.insert(l.id) {
            return Err(ImportError::schema(format!("lineages[{i}].id"), format!("bad or duplicate id {}", l.id)));
        }
        let mut occurrences = BTreeMap::new();
        for o in l.occurrences {
            if !doc.slices.contains(&o.slice) {
                return Err(ImportError::schema(format!("lineages[{i}].occurrences"), format!("unknown slice {}", o.slice)));
            }
            occurrences.insert(o.slice, o.members);
        }
        lineages.push(SenseLineage {
            id: l.id,
            occurrences,
            events: l.events,
            residual: l.residual,
        });
    }
    let mut assignment = BTreeMap::new();
    for (i, a) in doc.assignment.into_iter().enumerate() {
        if !known.contains(&a.lineage) {
            return Err(ImportError::schema(format!("assignment[{i}].lineage"), format!("unknown lineage {}", a.lineage)));
        }
        assignment.insert((a.slice, a.community), a.lineage);
    }
    Ok(AlignmentResult {
        target: doc.target,
        strategy: doc.strategy,
        slices: doc.slices,
        lineages,
        assignment,
        persistence_threshold: doc.persistence_threshold,
    })
}

pub fn communities_to_json(target: &Lemma, slice: &SliceId, communities: &[SenseCommunity]) -> Result<Vec<u8>, ExportError> {
    to_pretty(&CommunitiesDoc {
        schema_version: SCHEMA_VERSION,
        kind: DocKind::Communities,
        target: target.clone(),
        slice: slice.clone(),
        communities: communities
            .iter()
            .map(|c| CommunityDoc {
                id: c.id,
                members: c.members.clone(),
            })
            .collect(),
    })
}

/// Returns the target, slice and communities stored by [`communities_to_json`].
pub fn communities_from_json(bytes: &[u8]) -> Result<(Lemma, SliceId, Vec<SenseCommunity>), ImportError> {
    let doc: CommunitiesDoc = parse(bytes)?;
    check_header(doc.schema_version, doc.kind, DocKind::Communities)?;
    let mut seen = BTreeSet::new();
    let mut communities = Vec::with_capacity(doc.communities.len());
    for (i, c) in doc.communities.into_iter().enumerate() {
        if c.members.is_empty() {
            return Err(ImportError::schema(format!("communities[{i}].members"), "empty community"));
        }
        if c.members.iter().any(|m| !seen.insert(m.clone())) {
            return Err(ImportError::schema(format!("communities[{i}].members"), "communities overlap"));
        }
        communities.push(SenseCommunity {
            id: c.id,
            slice: doc.slice.clone(),
            members: c.members,
        });
    }
    Ok((doc.target, doc.slice, communities))
}
