//! Sense usage distributions and graph size series.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::align::{AlignmentResult, LineageId};
use crate::graph::{graph_stats, WordGraph};
use crate::lemma::{Lemma, SliceId};

/// Normalized community mass per lineage in one slice.
///
/// `mass` is empty when the slice has no peripheral nodes; such a
/// distribution is undefined rather than uniform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SenseDistribution {
    pub target: Lemma,
    pub slice: SliceId,
    pub mass: BTreeMap<LineageId, f64>,
    /// Member count per lineage, the numerators of `mass`.
    pub sizes: BTreeMap<LineageId, usize>,
    /// Peripheral node count, the shared denominator.
    pub total: usize,
}

impl SenseDistribution {
    pub fn is_defined(&self) -> bool {
        self.total > 0
    }
}

/// Size of each lineage at `slice` over the slice's total member count.
/// Lineages absent from the slice are omitted.
pub fn sense_distribution(result: &AlignmentResult, slice: &SliceId) -> SenseDistribution {
    let sizes: BTreeMap<LineageId, usize> = result
        .lineages
        .iter()
        .map(|l| (l.id, l.size_at(slice)))
        .filter(|&(_, n)| n > 0)
        .collect();
    let total: usize = sizes.values().sum();
    let mass = sizes
        .iter()
        .map(|(&id, &n)| (id, n as f64 / total as f64))
        .collect();
    SenseDistribution {
        target: result.target.clone(),
        slice: slice.clone(),
        mass,
        sizes,
        total,
    }
}

/// One distribution per slice that has any community, in chronological order.
pub fn distribution_series(result: &AlignmentResult) -> Vec<SenseDistribution> {
    result
        .slices
        .iter()
        .map(|s| sense_distribution(result, s))
        .filter(SenseDistribution::is_defined)
        .collect()
}

/// Slices aligned for `result` that have no peripheral nodes.
pub fn undefined_slices(result: &AlignmentResult) -> Vec<SliceId> {
    result
        .slices
        .iter()
        .filter(|s| result.total_members(s) == 0)
        .cloned()
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SizePoint {
    pub nodes: usize,
    pub edges: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphTimeSeries {
    pub target: Lemma,
    pub points: Vec<(SliceId, SizePoint)>,
}

impl GraphTimeSeries {
    /// Slice with the largest node count; the earliest wins ties.
    pub fn peak(&self) -> Option<&SliceId> {
        let mut best: Option<&(SliceId, SizePoint)> = None;
        for p in &self.points {
            if best.is_none_or(|b| p.1.nodes > b.1.nodes) {
                best = Some(p);
            }
        }
        best.map(|(s, _)| s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SeriesError {
    #[error("graphs mix targets {0:?} and {1:?}")]
    MixedTargets(String, String),
    #[error("slice {0} does not follow the previous slice")]
    Unordered(String),
}

pub fn size_series(graphs: &[WordGraph]) -> Result<Option<GraphTimeSeries>, SeriesError> {
    let Some(first) = graphs.first() else {
        return Ok(None);
    };
    let mut points: Vec<(SliceId, SizePoint)> = Vec::with_capacity(graphs.len());
    for g in graphs {
        if g.target != first.target {
            return Err(SeriesError::MixedTargets(first.target.to_string(), g.target.to_string()));
        }
        if points.last().is_some_and(|(s, _)| *s >= g.slice) {
            return Err(SeriesError::Unordered(g.slice.label.clone()));
        }
        let stats = graph_stats(g);
        points.push((
            g.slice.clone(),
            SizePoint {
                nodes: stats.nodes,
                edges: stats.edges,
            },
        ));
    }
    Ok(Some(GraphTimeSeries {
        target: first.target.clone(),
        points,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::align::{align, refine, AlignmentStrategy};
    use crate::cluster::SenseCommunity;
    use crate::graph::{GraphConfig, GraphEdge, GraphNode, Relation};
    use crate::lemma::lemma;
    use std::collections::BTreeSet;

    /// A graph with `nodes` nodes (all in layer 1) and `edges` edges: the star
    /// plus extra edges between consecutive pairs of neighbors.
    fn sized(ordinal: u32, nodes: usize, edges: usize) -> WordGraph {
        let w = lemma("w");
        let names: Vec<Lemma> = (1..nodes).map(|i| lemma(&format!("n{i:02}"))).collect();
        let mut node_list = vec![GraphNode {
            lemma: w.clone(),
            layer: 0,
            provenance: BTreeMap::new(),
        }];
        let mut edge_list = Vec::new();
        for n in &names {
            node_list.push(GraphNode {
                lemma: n.clone(),
                layer: 1,
                provenance: BTreeMap::from([(Relation::Distributional, w.clone())]),
            });
            edge_list.push(GraphEdge::new(w.clone(), n.clone(), Relation::Distributional));
        }
        let mut pairs = (0..names.len()).flat_map(|i| (i + 1..names.len()).map(move |j| (i, j)));
        while edge_list.len() < edges {
            let (i, j) = pairs.next().expect("enough pairs");
            edge_list.push(GraphEdge::new(names[i].clone(), names[j].clone(), Relation::Substitution));
        }
        let config = GraphConfig::new(vec![40, 1], vec![0, 0]).unwrap();
        WordGraph::from_parts(w, SliceId::new(ordinal, format!("s{ordinal}")), config, false, node_list, edge_list).unwrap()
    }

    fn result_with(sizes: &[&[usize]]) -> AlignmentResult {
        // Each slice holds communities of the given sizes with fresh members;
        // community i keeps member prefix "c{i}" so equal positions align.
        let mut map = BTreeMap::new();
        for (t, slice_sizes) in sizes.iter().enumerate() {
            let slice = SliceId::new(t as u32, format!("s{t}"));
            let comms = slice_sizes
                .iter()
                .enumerate()
                .map(|(i, &n)| SenseCommunity {
                    id: i,
                    slice: slice.clone(),
                    members: (0..n).map(|m| lemma(&format!("c{i}m{m}"))).collect::<BTreeSet<_>>(),
                })
                .collect();
            map.insert(slice, comms);
        }
        refine(&align(&lemma("w"), &map, AlignmentStrategy::PreviousSlice))
    }

    #[test]
    fn single_lineage_has_full_mass() {
        let r = result_with(&[&[5], &[5]]);
        let d = sense_distribution(&r, &r.slices[0]);
        assert_eq!(d.mass.len(), 1);
        assert_eq!(d.mass.values().next(), Some(&1.0));
    }

    #[test]
    fn ratios() {
        let r = result_with(&[&[3, 1], &[3, 1]]);
        let masses: Vec<f64> = sense_distribution(&r, &r.slices[0]).mass.values().copied().collect();
        assert_eq!(masses, vec![0.75, 0.25]);
        let r = result_with(&[&[2, 2], &[2, 2]]);
        let masses: Vec<f64> = sense_distribution(&r, &r.slices[1]).mass.values().copied().collect();
        assert_eq!(masses, vec![0.5, 0.5]);
    }

    #[test]
    fn empty_slice_is_undefined() {
        let r = result_with(&[&[2], &[], &[2]]);
        let d = sense_distribution(&r, &r.slices[1]);
        assert!(!d.is_defined());
        assert!(d.mass.is_empty());
        assert_eq!(distribution_series(&r).len(), 2);
        assert_eq!(undefined_slices(&r), vec![r.slices[1].clone()]);
    }

    #[test]
    fn stable_partition_gives_constant_series() {
        let r = result_with(&[&[4, 2], &[4, 2], &[4, 2]]);
        let series = distribution_series(&r);
        assert_eq!(series.len(), 3);
        assert!(series.windows(2).all(|w| w[0].mass == w[1].mass));
    }

    #[test]
    fn single_slice_series() {
        let r = result_with(&[&[1]]);
        // The lone lineage is ephemeral and lands in the residual.
        let series = distribution_series(&r);
        assert_eq!(series.len(), 1);
        assert_eq!(series[0].mass[&LineageId::RESIDUAL], 1.0);
    }

    #[test]
    fn size_series_peak() {
        let graphs = vec![sized(0, 10, 9), sized(1, 37, 44), sized(2, 20, 19)];
        let series = size_series(&graphs).unwrap().unwrap();
        let points: Vec<(usize, usize)> = series.points.iter().map(|(_, p)| (p.nodes, p.edges)).collect();
        assert_eq!(points, vec![(10, 9), (37, 44), (20, 19)]);
        assert_eq!(series.peak(), Some(&graphs[1].slice));
    }

    #[test]
    fn center_only_and_flat_series() {
        let series = size_series(&[sized(0, 1, 0)]).unwrap().unwrap();
        assert_eq!(series.points[0].1, SizePoint { nodes: 1, edges: 0 });
        let flat = [sized(0, 5, 4), sized(1, 5, 4), sized(2, 5, 4)];
        assert_eq!(size_series(&flat).unwrap().unwrap().peak(), Some(&flat[0].slice));
        assert_eq!(size_series(&[]).unwrap(), None);
    }

    #[test]
    fn series_rejects_mixed_targets_and_disorder() {
        let a = sized(1, 3, 2);
        let b = sized(0, 3, 2);
        assert!(matches!(size_series(&[a.clone(), b]), Err(SeriesError::Unordered(_))));
        let mut other = sized(2, 3, 2);
        other.target = lemma("v");
        assert!(matches!(size_series(&[a, other]), Err(SeriesError::MixedTargets(..))));
    }
}
