//! Word-centered neighborhood graphs built by layered expansion.
//!
//! Layer 1 holds the target's distributional and substitution neighbors.
//! Every node introduced at layer `l - 1` is then expanded with the layer-`l`
//! fan-out. A candidate that already exists only contributes an edge, so
//! reciprocal neighbors and shared second-layer neighbors shrink the graph
//! below its theoretical size.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lemma::{Lemma, SliceId};
use crate::store::{NeighborStore, PairSimilarity};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    Distributional,
    Substitution,
}

impl Relation {
    pub fn as_str(self) -> &'static str {
        match self {
            Relation::Distributional => "distributional",
            Relation::Substitution => "substitution",
        }
    }

    pub fn parse(s: &str) -> Option<Relation> {
        match s {
            "distributional" => Some(Relation::Distributional),
            "substitution" => Some(Relation::Substitution),
            _ => None,
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphConfigError {
    #[error("depth must be at least 1")]
    ZeroDepth,
    #[error("expected {depth} per-layer values for {name}, got {got}")]
    LayerCount {
        name: &'static str,
        depth: usize,
        got: usize,
    },
    #[error("layer 1 selects no neighbors (k_dist[0] = k_sub[0] = 0)")]
    EmptyFirstLayer,
}

/// Expansion depth and per-layer fan-out.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphConfig {
    pub depth: usize,
    /// Distributional neighbors taken per expanded node, one entry per layer.
    pub k_dist: Vec<usize>,
    /// Substitution neighbors taken per expanded node, one entry per layer.
    pub k_sub: Vec<usize>,
}

impl Default for GraphConfig {
    /// Depth 2 with (3, 1) distributional and (6, 2) substitution neighbors.
    fn default() -> Self {
        GraphConfig {
            depth: 2,
            k_dist: vec![3, 1],
            k_sub: vec![6, 2],
        }
    }
}

impl GraphConfig {
    pub fn new(k_dist: Vec<usize>, k_sub: Vec<usize>) -> Result<Self, GraphConfigError> {
        let config = GraphConfig {
            depth: k_dist.len(),
            k_dist,
            k_sub,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), GraphConfigError> {
        if self.depth == 0 {
            return Err(GraphConfigError::ZeroDepth);
        }
        for (name, ks) in [("k_dist", &self.k_dist), ("k_sub", &self.k_sub)] {
            if ks.len() != self.depth {
                return Err(GraphConfigError::LayerCount {
                    name,
                    depth: self.depth,
                    got: ks.len(),
                });
            }
        }
        if self.k_dist[0] + self.k_sub[0] == 0 {
            return Err(GraphConfigError::EmptyFirstLayer);
        }
        Ok(())
    }

    /// Candidates requested per expanded node at `layer` (1-based).
    pub fn fan_out(&self, layer: usize) -> usize {
        self.k_dist[layer - 1] + self.k_sub[layer - 1]
    }

    /// Largest possible node count: the center plus the product-sum of
    /// per-layer fan-outs. 37 for the default configuration.
    pub fn max_nodes(&self) -> usize {
        let mut total = 1;
        let mut width = 1;
        for layer in 1..=self.depth {
            width *= self.fan_out(layer);
            total += width;
        }
        total
    }

    /// Every candidate contributes at most one edge, so edges are bounded by
    /// the number of non-center node slots.
    pub fn max_edges(&self) -> usize {
        self.max_nodes() - 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphNode {
    pub lemma: Lemma,
    /// 0 for the center, otherwise the expansion round that introduced it.
    pub layer: usize,
    /// For each relation that proposed this node in its introduction round,
    /// the first parent that did so.
    pub provenance: BTreeMap<Relation, Lemma>,
}

/// Undirected edge; endpoints are stored in ascending lemma order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphEdge {
    pub a: Lemma,
    pub b: Lemma,
    pub relations: BTreeSet<Relation>,
    pub weight: Option<f64>,
}

impl GraphEdge {
    pub fn new(x: Lemma, y: Lemma, relation: Relation) -> Self {
        let (a, b) = if x <= y { (x, y) } else { (y, x) };
        GraphEdge {
            a,
            b,
            relations: BTreeSet::from([relation]),
            weight: None,
        }
    }

    pub fn touches(&self, lemma: &Lemma) -> bool {
        &self.a == lemma || &self.b == lemma
    }

    pub fn key(&self) -> (Lemma, Lemma) {
        (self.a.clone(), self.b.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error(transparent)]
    Config(#[from] GraphConfigError),
    #[error("target {0:?} must be the only node at layer 0")]
    Center(String),
    #[error("node {lemma:?} at layer {layer} exceeds depth {depth}")]
    LayerTooDeep {
        lemma: String,
        layer: usize,
        depth: usize,
    },
    #[error("node {0:?} declared more than once")]
    DuplicateNode(String),
    #[error("node {lemma:?} has unsound provenance: {reason}")]
    Provenance { lemma: String, reason: String },
    #[error("edge {a:?}-{b:?} references undeclared node {missing:?}")]
    DanglingEdge {
        a: String,
        b: String,
        missing: String,
    },
    #[error("edge {0:?}-{0:?} is a self-loop")]
    SelfLoop(String),
    #[error("edge {0:?}-{1:?} declared more than once")]
    DuplicateEdge(String, String),
    #[error("edge {0:?}-{1:?} has no relation")]
    NoRelation(String, String),
    #[error("edge {a:?}-{b:?} weight {weight} is outside [-1, 1]")]
    WeightOutOfRange { a: String, b: String, weight: f64 },
    #[error("graph has {nodes} nodes, above the configured bound {bound}")]
    TooManyNodes { nodes: usize, bound: usize },
    #[error("similarities are for slice {found}, graph is for slice {expected}")]
    SliceMismatch { expected: String, found: String },
}

/// The neighborhood graph of one target in one slice.
#[derive(Debug, Clone, PartialEq)]
pub struct WordGraph {
    pub target: Lemma,
    pub slice: SliceId,
    pub config: GraphConfig,
    /// Set when the target had no neighbor record in this slice.
    pub empty: bool,
    nodes: BTreeMap<Lemma, GraphNode>,
    edges: BTreeMap<(Lemma, Lemma), GraphEdge>,
}

impl WordGraph {
    fn center_only(target: Lemma, slice: SliceId, config: GraphConfig) -> Self {
        let mut nodes = BTreeMap::new();
        nodes.insert(
            target.clone(),
            GraphNode {
                lemma: target.clone(),
                layer: 0,
                provenance: BTreeMap::new(),
            },
        );
        WordGraph {
            target,
            slice,
            config,
            empty: false,
            nodes,
            edges: BTreeMap::new(),
        }
    }

    /// Reassembles a graph from parts, checking every structural invariant.
    pub fn from_parts(
        target: Lemma,
        slice: SliceId,
        config: GraphConfig,
        empty: bool,
        nodes: Vec<GraphNode>,
        edges: Vec<GraphEdge>,
    ) -> Result<Self, GraphError> {
        config.validate()?;
        let mut node_map = BTreeMap::new();
        for node in nodes {
            if node.layer > config.depth {
                return Err(GraphError::LayerTooDeep {
                    lemma: node.lemma.to_string(),
                    layer: node.layer,
                    depth: config.depth,
                });
            }
            if (node.layer == 0) != (node.lemma == target) {
                return Err(GraphError::Center(target.to_string()));
            }
            if node_map.contains_key(&node.lemma) {
                return Err(GraphError::DuplicateNode(node.lemma.to_string()));
            }
            node_map.insert(node.lemma.clone(), node);
        }
        if !node_map.contains_key(&target) {
            return Err(GraphError::Center(target.to_string()));
        }
        if node_map.len() > config.max_nodes() {
            return Err(GraphError::TooManyNodes {
                nodes: node_map.len(),
                bound: config.max_nodes(),
            });
        }
        let mut edge_map = BTreeMap::new();
        for edge in edges {
            for end in [&edge.a, &edge.b] {
                if !node_map.contains_key(end) {
                    return Err(GraphError::DanglingEdge {
                        a: edge.a.to_string(),
                        b: edge.b.to_string(),
                        missing: end.to_string(),
                    });
                }
            }
            if edge.a == edge.b {
                return Err(GraphError::SelfLoop(edge.a.to_string()));
            }
            if edge.relations.is_empty() {
                return Err(GraphError::NoRelation(edge.a.to_string(), edge.b.to_string()));
            }
            if let Some(w) = edge.weight {
                if !(-1.0..=1.0).contains(&w) {
                    return Err(GraphError::WeightOutOfRange {
                        a: edge.a.to_string(),
                        b: edge.b.to_string(),
                        weight: w,
                    });
                }
            }
            let edge = if edge.a <= edge.b {
                edge
            } else {
                GraphEdge {
                    a: edge.b,
                    b: edge.a,
                    ..edge
                }
            };
            let key = edge.key();
            if edge_map.contains_key(&key) {
                return Err(GraphError::DuplicateEdge(key.0.to_string(), key.1.to_string()));
            }
            edge_map.insert(key, edge);
        }
        let graph = WordGraph {
            target,
            slice,
            config,
            empty,
            nodes: node_map,
            edges: edge_map,
        };
        graph.check_provenance()?;
        Ok(graph)
    }

    fn check_provenance(&self) -> Result<(), GraphError> {
        for node in self.nodes.values() {
            let bad = |reason: String| GraphError::Provenance {
                lemma: node.lemma.to_string(),
                reason,
            };
            if node.layer == 0 {
                if !node.provenance.is_empty() {
                    return Err(bad("center carries provenance".into()));
                }
                continue;
            }
            if node.provenance.is_empty() {
                return Err(bad("no introducing parent".into()));
            }
            for (relation, parent) in &node.provenance {
                let parent_layer = self.nodes.get(parent).map(|p| p.layer);
                if parent_layer != Some(node.layer - 1) {
                    return Err(bad(format!(
                        "{relation} parent {parent:?} is not a node at layer {}",
                        node.layer - 1
                    )));
                }
                if !self.has_edge(&node.lemma, parent) {
                    return Err(bad(format!("no edge to {relation} parent {parent:?}")));
                }
            }
        }
        Ok(())
    }

    pub fn node(&self, lemma: &Lemma) -> Option<&GraphNode> {
        self.nodes.get(lemma)
    }

    /// Nodes in ascending lemma order.
    pub fn nodes(&self) -> impl Iterator<Item = &GraphNode> {
        self.nodes.values()
    }

    /// Edges in ascending (a, b) order.
    pub fn edges(&self) -> impl Iterator<Item = &GraphEdge> {
        self.edges.values()
    }

    pub fn edge(&self, x: &Lemma, y: &Lemma) -> Option<&GraphEdge> {
        let key = if x <= y {
            (x.clone(), y.clone())
        } else {
            (y.clone(), x.clone())
        };
        self.edges.get(&key)
    }

    pub fn has_edge(&self, x: &Lemma, y: &Lemma) -> bool {
        self.edge(x, y).is_some()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    fn add_edge(&mut self, x: &Lemma, y: &Lemma, relation: Relation) {
        let edge = GraphEdge::new(x.clone(), y.clone(), relation);
        self.edges
            .entry(edge.key())
            .and_modify(|e| {
                e.relations.insert(relation);
            })
            .or_insert(edge);
    }
}

/// Builds the neighborhood graph of `target` in `slice`.
///
/// Nodes of each layer are expanded in ascending lemma order; within one
/// expansion, distributional candidates precede substitution candidates.
/// Topology does not depend on this order, only which parent is recorded
/// first in provenance does.
pub fn build_graph(
    store: &NeighborStore,
    target: &Lemma,
    slice: &SliceId,
    config: &GraphConfig,
) -> Result<WordGraph, GraphConfigError> {
    config.validate()?;
    let mut graph = WordGraph::center_only(target.clone(), slice.clone(), config.clone());
    if !store.contains(slice, target) {
        graph.empty = true;
        return Ok(graph);
    }

    let mut frontier = vec![target.clone()];
    for layer in 1..=config.depth {
        let (k_dist, k_sub) = (config.k_dist[layer - 1], config.k_sub[layer - 1]);
        frontier.sort();
        let mut introduced = Vec::new();
        for parent in &frontier {
            let (dist, sub) = store.lookup(slice, parent, k_dist, k_sub);
            let candidates = dist
                .into_iter()
                .map(|l| (l, Relation::Distributional))
                .chain(sub.into_iter().map(|l| (l, Relation::Substitution)));
            for (candidate, relation) in candidates {
                if &candidate == parent {
                    continue;
                }
                match graph.nodes.get_mut(&candidate) {
                    Some(node) => {
                        if node.layer == layer {
                            node.provenance
                                .entry(relation)
                                .or_insert_with(|| parent.clone());
                        }
                    }
                    None => {
                        graph.nodes.insert(
                            candidate.clone(),
                            GraphNode {
                                lemma: candidate.clone(),
                                layer,
                                provenance: BTreeMap::from([(relation, parent.clone())]),
                            },
                        );
                        introduced.push(candidate.clone());
                    }
                }
                graph.add_edge(parent, &candidate, relation);
            }
        }
        frontier = introduced;
    }

    assert!(
        graph.node_count() <= config.max_nodes(),
        "graph for {target}@{slice} has {} nodes, bound is {}",
        graph.node_count(),
        config.max_nodes()
    );
    Ok(graph)
}

/// How many edges received a similarity value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightCoverage {
    pub weighted: usize,
    pub total: usize,
}

/// Copies contextual similarities onto matching edges. Edges without a
/// pair entry keep their current weight; topology is untouched.
pub fn annotate_weights(
    graph: &WordGraph,
    sims: &PairSimilarity,
) -> Result<(WordGraph, WeightCoverage), GraphError> {
    if sims.slice != graph.slice {
        return Err(GraphError::SliceMismatch {
            expected: graph.slice.label.clone(),
            found: sims.slice.label.clone(),
        });
    }
    let mut out = graph.clone();
    let mut weighted = 0;
    for edge in out.edges.values_mut() {
        if let Some(w) = sims.get(&edge.a, &edge.b) {
            edge.weight = Some(w);
            weighted += 1;
        }
    }
    let total = out.edges.len();
    Ok((out, WeightCoverage { weighted, total }))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphStats {
    pub nodes: usize,
    pub edges: usize,
    /// Node count per layer, index 0 being the center.
    pub layer_sizes: Vec<usize>,
    /// Edges whose endpoints share a layer.
    pub local_edges: usize,
    /// Edges whose endpoints sit on different layers, center edges included.
    pub global_edges: usize,
}

pub fn graph_stats(graph: &WordGraph) -> GraphStats {
    let deepest = graph.nodes().map(|n| n.layer).max().unwrap_or(0);
    let mut layer_sizes = vec![0; deepest + 1];
    for node in graph.nodes() {
        layer_sizes[node.layer] += 1;
    }
    let layer_of = |l: &Lemma| graph.nodes[l].layer;
    let local_edges = graph
        .edges()
        .filter(|e| layer_of(&e.a) == layer_of(&e.b))
        .count();
    GraphStats {
        nodes: graph.node_count(),
        edges: graph.edge_count(),
        layer_sizes,
        local_edges,
        global_edges: graph.edge_count() - local_edges,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lemma::lemma;
    use crate::store::NeighborRecord;

    fn slice() -> SliceId {
        SliceId::new(0, "1980")
    }

    fn record(word: &str, dist: &[(&str, f64)], sub: &[(&str, u64)]) -> NeighborRecord {
        NeighborRecord::new(
            slice(),
            lemma(word),
            dist.iter().map(|(l, c)| (lemma(l), *c)).collect(),
            sub.iter().map(|(l, f)| (lemma(l), *f)).collect(),
        )
        .unwrap()
    }

    /// w -> dist[a], sub[b]; a -> dist[b]; b absent.
    pub(crate) fn three_node_store() -> NeighborStore {
        NeighborStore::from_records([
            record("w", &[("a", 0.9)], &[("b", 5)]),
            record("a", &[("b", 0.8)], &[]),
        ])
        .unwrap()
    }

    fn small_config() -> GraphConfig {
        GraphConfig::new(vec![1, 1], vec![1, 1]).unwrap()
    }

    #[test]
    fn default_bound_is_37() {
        let config = GraphConfig::default();
        assert_eq!(config.max_nodes(), 37);
        assert_eq!(config.max_edges(), 36);
    }

    #[test]
    fn config_validation() {
        assert_eq!(GraphConfig::new(vec![], vec![]), Err(GraphConfigError::ZeroDepth));
        assert_eq!(
            GraphConfig::new(vec![0, 1], vec![0, 2]),
            Err(GraphConfigError::EmptyFirstLayer)
        );
        let bad = GraphConfig {
            depth: 2,
            k_dist: vec![3],
            k_sub: vec![6, 2],
        };
        assert!(matches!(bad.validate(), Err(GraphConfigError::LayerCount { .. })));
    }

    #[test]
    fn absent_target_gives_center_only_graph() {
        let g = build_graph(&NeighborStore::new(), &lemma("w"), &slice(), &small_config()).unwrap();
        assert!(g.empty);
        assert_eq!(g.node_count(), 1);
        assert_eq!(g.edge_count(), 0);
        assert_eq!(g.node(&lemma("w")).unwrap().layer, 0);
        assert_eq!(
            graph_stats(&g),
            GraphStats {
                nodes: 1,
                edges: 0,
                layer_sizes: vec![1],
                local_edges: 0,
                global_edges: 0
            }
        );
    }

    #[test]
    fn three_node_example() {
        let g = build_graph(&three_node_store(), &lemma("w"), &slice(), &small_config()).unwrap();
        let layers: Vec<_> = g.nodes().map(|n| (n.lemma.as_str(), n.layer)).collect();
        assert_eq!(layers, vec![("a", 1), ("b", 1), ("w", 0)]);
        let edges: Vec<_> = g
            .edges()
            .map(|e| (e.a.as_str(), e.b.as_str(), e.relations.iter().copied().collect::<Vec<_>>()))
            .collect();
        assert_eq!(
            edges,
            vec![
                ("a", "b", vec![Relation::Distributional]),
                ("a", "w", vec![Relation::Distributional]),
                ("b", "w", vec![Relation::Substitution]),
            ]
        );
        assert_eq!(
            graph_stats(&g),
            GraphStats {
                nodes: 3,
                edges: 3,
                layer_sizes: vec![1, 2],
                local_edges: 1,
                global_edges: 2
            }
        );
    }

    #[test]
    fn star_of_nine() {
        let dist: Vec<(String, f64)> = (0..3).map(|i| (format!("d{i}"), 0.9 - i as f64 * 0.1)).collect();
        let sub: Vec<(String, u64)> = (0..6).map(|i| (format!("s{i}"), 10 - i as u64)).collect();
        let dist_ref: Vec<(&str, f64)> = dist.iter().map(|(l, c)| (l.as_str(), *c)).collect();
        let sub_ref: Vec<(&str, u64)> = sub.iter().map(|(l, f)| (l.as_str(), *f)).collect();
        let store = NeighborStore::from_records([record("w", &dist_ref, &sub_ref)]).unwrap();
        let g = build_graph(&store, &lemma("w"), &slice(), &GraphConfig::default()).unwrap();
        assert_eq!(
            graph_stats(&g),
            GraphStats {
                nodes: 10,
                edges: 9,
                layer_sizes: vec![1, 9],
                local_edges: 0,
                global_edges: 9
            }
        );
    }

    #[test]
    fn relation_merge_and_back_edge_to_center() {
        // a is both a distributional and substitution neighbor of w; a lists w
        // back, which only adds (merges) an edge to the center.
        let store = NeighborStore::from_records([
            record("w", &[("a", 0.9)], &[("a", 3)]),
            record("a", &[("w", 0.9)], &[("c", 2)]),
        ])
        .unwrap();
        let g = build_graph(&store, &lemma("w"), &slice(), &small_config()).unwrap();
        let wa = g.edge(&lemma("w"), &lemma("a")).unwrap();
        assert_eq!(wa.relations.len(), 2);
        assert_eq!(g.node(&lemma("c")).unwrap().layer, 2);
        let a = g.node(&lemma("a")).unwrap();
        assert_eq!(a.provenance.len(), 2);
        assert_eq!(g.edge_count(), 2);
    }

    #[test]
    fn shared_second_layer_neighbor_records_both_parents() {
        let store = NeighborStore::from_records([
            record("w", &[("a", 0.9), ("b", 0.8)], &[]),
            record("a", &[("z", 0.7)], &[]),
            record("b", &[], &[("z", 4)]),
        ])
        .unwrap();
        let config = GraphConfig::new(vec![2, 1], vec![0, 1]).unwrap();
        let g = build_graph(&store, &lemma("w"), &slice(), &config).unwrap();
        let z = g.node(&lemma("z")).unwrap();
        assert_eq!(z.layer, 2);
        assert_eq!(z.provenance[&Relation::Distributional], lemma("a"));
        assert_eq!(z.provenance[&Relation::Substitution], lemma("b"));
        assert_eq!(graph_stats(&g).global_edges, 4);
    }

    #[test]
    fn annotate_counts_coverage() {
        let g = build_graph(&three_node_store(), &lemma("w"), &slice(), &small_config()).unwrap();
        let mut sims = PairSimilarity::new(slice());
        sims.insert(lemma("b"), lemma("a"), 0.88).unwrap();
        sims.insert(lemma("x"), lemma("y"), 0.1).unwrap();
        let (annotated, coverage) = annotate_weights(&g, &sims).unwrap();
        assert_eq!(coverage, WeightCoverage { weighted: 1, total: 3 });
        assert_eq!(annotated.edge(&lemma("a"), &lemma("b")).unwrap().weight, Some(0.88));
        assert_eq!(annotated.edge(&lemma("a"), &lemma("w")).unwrap().weight, None);

        let (same, coverage) = annotate_weights(&g, &PairSimilarity::new(slice())).unwrap();
        assert_eq!(same, g);
        assert_eq!(coverage.weighted, 0);

        let other = PairSimilarity::new(SliceId::new(1, "1985"));
        assert!(matches!(annotate_weights(&g, &other), Err(GraphError::SliceMismatch { .. })));
    }

    #[test]
    fn from_parts_rejects_dangling_edge() {
        let g = build_graph(&three_node_store(), &lemma("w"), &slice(), &small_config()).unwrap();
        let nodes: Vec<_> = g.nodes().filter(|n| n.lemma.as_str() != "b").cloned().collect();
        let edges: Vec<_> = g.edges().cloned().collect();
        let err = WordGraph::from_parts(g.target.clone(), slice(), g.config.clone(), false, nodes, edges)
            .unwrap_err();
        assert!(matches!(err, GraphError::DanglingEdge { ref missing, .. } if missing == "b"));
    }

    #[test]
    fn from_parts_round_trips_built_graph() {
        let g = build_graph(&three_node_store(), &lemma("w"), &slice(), &small_config()).unwrap();
        let rebuilt = WordGraph::from_parts(
            g.target.clone(),
            g.slice.clone(),
            g.config.clone(),
            g.empty,
            g.nodes().cloned().collect(),
            g.edges().cloned().collect(),
        )
        .unwrap();
        assert_eq!(rebuilt, g);
    }
}
