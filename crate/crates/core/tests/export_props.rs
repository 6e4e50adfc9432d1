use std::collections::BTreeMap;

use proptest::prelude::*;
use sensegraph::align::{align, refine, AlignmentStrategy, LineageId};
use sensegraph::cluster::{components, peripheral};
use sensegraph::export::json::{
    alignment_from_json, alignment_to_json, communities_from_json, communities_to_json,
};
use sensegraph::export::{
    cluster_view, export_clusters, export_graph, import_clusters, import_graph, ExportFormat, ExportStyle, Palette,
};
use sensegraph::graph::{build_graph, GraphConfig};
use sensegraph::synth::{generate, random_graph, random_partitions, rng, Scenario};

const LOSSLESS: [ExportFormat; 2] = [ExportFormat::Json, ExportFormat::GraphMl];

proptest! {
    #[test]
    fn graphs_round_trip(seed in any::<u64>()) {
        let g = random_graph(&mut rng(seed));
        for format in LOSSLESS {
            let bytes = export_graph(&g, &ExportStyle::default(), format).unwrap();
            prop_assert_eq!(&import_graph(&bytes, format).unwrap(), &g);
            prop_assert_eq!(export_graph(&g, &ExportStyle::default(), format).unwrap(), bytes);
        }
    }

    #[test]
    fn cluster_views_round_trip(seed in any::<u64>()) {
        let g = random_graph(&mut rng(seed));
        let map = BTreeMap::from([(g.slice.clone(), components(&peripheral(&g)))]);
        let result = refine(&align(&g.target, &map, AlignmentStrategy::AllHistory));
        let style = ExportStyle { palette: Palette::for_result(&result), ..ExportStyle::default() };
        let view = cluster_view(&g, &result, &g.slice, &style.palette).unwrap();
        for format in LOSSLESS {
            let bytes = export_clusters(&g, &result, &g.slice, &style, format).unwrap();
            prop_assert_eq!(&import_clusters(&bytes, format).unwrap(), &view);
        }
        let dot = String::from_utf8(export_clusters(&g, &result, &g.slice, &style, ExportFormat::Dot).unwrap()).unwrap();
        prop_assert_eq!(dot.matches(" -- ").count(), g.edge_count());
    }

    #[test]
    fn alignments_and_communities_round_trip(seed in any::<u64>()) {
        let map = random_partitions(&mut rng(seed), 5, 6);
        for strategy in [AlignmentStrategy::PreviousSlice, AlignmentStrategy::AllHistory] {
            let raw = align(&sensegraph::lemma::lemma("w"), &map, strategy);
            let refined = refine(&raw);
            prop_assert_eq!(alignment_from_json(&alignment_to_json(&raw).unwrap()).unwrap(), raw);
            prop_assert_eq!(alignment_from_json(&alignment_to_json(&refined).unwrap()).unwrap(), refined);
        }
        for (slice, comms) in &map {
            let target = sensegraph::lemma::lemma("w");
            let bytes = communities_to_json(&target, slice, comms).unwrap();
            prop_assert_eq!(communities_from_json(&bytes).unwrap(), (target, slice.clone(), comms.clone()));
        }
    }
}

#[test]
fn lineage_colors_are_stable_across_slices() {
    let scenario = Scenario::replacement();
    let corpus = generate(&scenario).unwrap();
    let store = corpus.store();
    let graphs: Vec<_> = corpus
        .slices
        .iter()
        .map(|s| build_graph(&store, &scenario.target, s, &GraphConfig::default()).unwrap())
        .collect();
    let map = graphs.iter().map(|g| (g.slice.clone(), components(&peripheral(g)))).collect();
    let result = refine(&align(&scenario.target, &map, AlignmentStrategy::PreviousSlice));
    let palette = Palette::for_result(&result);
    let mut seen: BTreeMap<LineageId, usize> = BTreeMap::new();
    for g in &graphs {
        for n in cluster_view(g, &result, &g.slice, &palette).unwrap().nodes {
            if let (Some(l), Some(c)) = (n.lineage, n.color) {
                assert_eq!(*seen.entry(l).or_insert(c), c, "{l} changed color");
            }
        }
    }
    assert_eq!(seen.len(), 2);
    assert_eq!(palette.index(LineageId::RESIDUAL), Some(0));
}

#[test]
fn dot_and_csv_are_not_importable() {
    let g = random_graph(&mut rng(3));
    let dot = export_graph(&g, &ExportStyle::default(), ExportFormat::Dot).unwrap();
    assert!(import_graph(&dot, ExportFormat::Dot).is_err());
    assert!(export_graph(&g, &ExportStyle::default(), ExportFormat::Csv).is_err());
}
