//! Sense communities: connected components of the graph with the center
//! node removed.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::graph::{GraphEdge, WordGraph};
use crate::lemma::{Lemma, SliceId};

/// A neighborhood graph minus its target and every edge touching it.
#[derive(Debug, Clone, PartialEq)]
pub struct PeripheralGraph {
    pub target: Lemma,
    pub slice: SliceId,
    pub nodes: BTreeSet<Lemma>,
    pub edges: Vec<GraphEdge>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SenseCommunity {
    /// Position in the canonical (size desc, smallest member asc) order.
    pub id: usize,
    pub slice: SliceId,
    pub members: BTreeSet<Lemma>,
}

impl SenseCommunity {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Smallest member, used for tie-breaking. Communities are never empty.
    pub fn first_member(&self) -> &Lemma {
        self.members.iter().next().expect("empty community")
    }
}

pub fn peripheral(graph: &WordGraph) -> PeripheralGraph {
    let target = &graph.target;
    PeripheralGraph {
        target: target.clone(),
        slice: graph.slice.clone(),
        nodes: graph
            .nodes()
            .map(|n| n.lemma.clone())
            .filter(|l| l != target)
            .collect(),
        edges: graph.edges().filter(|e| !e.touches(target)).cloned().collect(),
    }
}

struct DisjointSets {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        DisjointSets {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, x: usize, y: usize) {
        let (mut rx, mut ry) = (self.find(x), self.find(y));
        if rx == ry {
            return;
        }
        if self.size[rx] < self.size[ry] {
            std::mem::swap(&mut rx, &mut ry);
        }
        self.parent[ry] = rx;
        self.size[rx] += self.size[ry];
    }
}

/// Sorts member sets by size descending, then smallest member ascending.
pub fn canonical_order(sets: &mut [BTreeSet<Lemma>]) {
    sets.sort_by(|x, y| y.len().cmp(&x.len()).then_with(|| x.iter().next().cmp(&y.iter().next())));
}

/// Connected components of the peripheral graph, in canonical order with
/// ids assigned by position. Relation types and weights are ignored.
pub fn components(pg: &PeripheralGraph) -> Vec<SenseCommunity> {
    let index: BTreeMap<&Lemma, usize> = pg.nodes.iter().enumerate().map(|(i, l)| (l, i)).collect();
    let lemmas: Vec<&Lemma> = pg.nodes.iter().collect();
    let mut sets = DisjointSets::new(lemmas.len());
    for edge in &pg.edges {
        if let (Some(&i), Some(&j)) = (index.get(&edge.a), index.get(&edge.b)) {
            sets.union(i, j);
        }
    }
    let mut groups: BTreeMap<usize, BTreeSet<Lemma>> = BTreeMap::new();
    for (i, lemma) in lemmas.iter().enumerate() {
        groups.entry(sets.find(i)).or_default().insert((*lemma).clone());
    }
    let mut members: Vec<_> = groups.into_values().collect();
    canonical_order(&mut members);
    members
        .into_iter()
        .enumerate()
        .map(|(id, members)| SenseCommunity {
            id,
            slice: pg.slice.clone(),
            members,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_graph, GraphConfig};
    use crate::lemma::lemma;
    use crate::store::{NeighborRecord, NeighborStore};

    fn slice() -> SliceId {
        SliceId::new(0, "1980")
    }

    fn pg(nodes: &[&str], edges: &[(&str, &str)]) -> PeripheralGraph {
        PeripheralGraph {
            target: lemma("w"),
            slice: slice(),
            nodes: nodes.iter().map(|n| lemma(n)).collect(),
            edges: edges
                .iter()
                .map(|(a, b)| GraphEdge::new(lemma(a), lemma(b), crate::graph::Relation::Distributional))
                .collect(),
        }
    }

    #[test]
    fn center_only_graph_is_empty() {
        let g = build_graph(&NeighborStore::new(), &lemma("w"), &slice(), &GraphConfig::default()).unwrap();
        let p = peripheral(&g);
        assert!(p.nodes.is_empty() && p.edges.is_empty());
        assert!(components(&p).is_empty());
    }

    #[test]
    fn three_node_example() {
        let store = NeighborStore::from_records([
            NeighborRecord::new(slice(), lemma("w"), vec![(lemma("a"), 0.9)], vec![(lemma("b"), 5)]).unwrap(),
            NeighborRecord::new(slice(), lemma("a"), vec![(lemma("b"), 0.8)], vec![]).unwrap(),
        ])
        .unwrap();
        let config = GraphConfig::new(vec![1, 1], vec![1, 1]).unwrap();
        let p = peripheral(&build_graph(&store, &lemma("w"), &slice(), &config).unwrap());
        assert_eq!(p.nodes, [lemma("a"), lemma("b")].into_iter().collect());
        assert_eq!(p.edges.len(), 1);
        assert_eq!(p.edges[0].key(), (lemma("a"), lemma("b")));
        let c = components(&p);
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].members.len(), 2);
    }

    #[test]
    fn isolated_nodes_are_singletons() {
        let names: Vec<String> = (1..=9).map(|i| format!("n{i}")).collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let c = components(&pg(&refs, &[]));
        assert_eq!(c.len(), 9);
        assert!(c.iter().all(|c| c.len() == 1));
        assert_eq!(c[0].first_member(), &lemma("n1"));
    }

    #[test]
    fn ordering_and_ids() {
        let c = components(&pg(
            &["a", "b", "c", "d", "e", "f"],
            &[("e", "f"), ("c", "d"), ("d", "b")],
        ));
        let sets: Vec<Vec<&str>> = c.iter().map(|c| c.members.iter().map(Lemma::as_str).collect()).collect();
        assert_eq!(sets, vec![vec!["b", "c", "d"], vec!["e", "f"], vec!["a"]]);
        assert_eq!(c.iter().map(|c| c.id).collect::<Vec<_>>(), vec![0, 1, 2]);
    }
}
