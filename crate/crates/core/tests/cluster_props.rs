use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::Rng;
use sensegraph::cluster::{components, peripheral};
use sensegraph::graph::{build_graph, GraphConfig};
use sensegraph::lemma::Lemma;
use sensegraph::synth::{generate, oracle_components, random_peripheral, rng, Block, Scenario, SliceSpec};

fn random_scenario(seed: u64) -> Scenario {
    let mut r = rng(seed);
    let n_slices = r.random_range(1..=4);
    let blocks = (0..r.random_range(1..=4))
        .map(|b| {
            let size = r.random_range(1..=7);
            let mut active: Vec<usize> = (0..n_slices).filter(|_| r.random_bool(0.6)).collect();
            if active.is_empty() {
                active.push(r.random_range(0..n_slices));
            }
            Block {
                name: format!("b{b}"),
                members: (0..size).map(|m| Lemma::new(format!("b{b}m{m}")).unwrap()).collect(),
                active,
                density: r.random_range(0.1..=1.0),
            }
        })
        .collect();
    Scenario {
        target: Lemma::new("center").unwrap(),
        slices: SliceSpec::Count(n_slices),
        leakage: 0.0,
        seed,
        blocks,
    }
}

proptest! {
    #[test]
    fn components_match_oracle(seed in any::<u64>()) {
        let g = random_peripheral(&mut rng(seed), 50);
        let fast: Vec<BTreeSet<Lemma>> = components(&g).into_iter().map(|c| c.members).collect();
        prop_assert_eq!(fast, oracle_components(&g).unwrap());
    }

    #[test]
    fn components_partition_without_crossing_edges(seed in any::<u64>()) {
        let g = random_peripheral(&mut rng(seed), 50);
        let comms = components(&g);
        let mut union = BTreeSet::new();
        for c in &comms {
            prop_assert!(!c.is_empty());
            for m in &c.members {
                prop_assert!(union.insert(m.clone()), "{} in two communities", m);
            }
        }
        prop_assert_eq!(&union, &g.nodes);
        prop_assert_eq!(comms.iter().map(|c| c.len()).sum::<usize>(), g.nodes.len());
        let home = |l: &Lemma| comms.iter().position(|c| c.members.contains(l));
        for e in &g.edges {
            prop_assert_eq!(home(&e.a), home(&e.b));
        }
        for (i, c) in comms.iter().enumerate() {
            prop_assert_eq!(c.id, i);
        }
    }

    #[test]
    fn planted_blocks_are_components(seed in any::<u64>()) {
        let scenario = random_scenario(seed);
        let corpus = generate(&scenario).unwrap();
        let store = corpus.store();
        let config = GraphConfig::default();
        for (t, slice) in corpus.slices.iter().enumerate() {
            let g = build_graph(&store, &scenario.target, slice, &config).unwrap();
            let comms = components(&peripheral(&g));
            prop_assert_eq!(comms.len(), scenario.reached_blocks(t, &config).len());
            for c in &comms {
                let owners: BTreeSet<&str> = c
                    .members
                    .iter()
                    .map(|m| scenario.blocks.iter().find(|b| b.members.contains(m)).unwrap().name.as_str())
                    .collect();
                prop_assert_eq!(owners.len(), 1);
            }
        }
    }
}

#[test]
fn generated_corpora_are_identical_for_equal_seeds() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let mut scenario = random_scenario(11);
    scenario.leakage = 0.3;
    let a = generate(&scenario).unwrap().write(dir_a.path()).unwrap();
    let b = generate(&scenario).unwrap().write(dir_b.path()).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(std::fs::read(x).unwrap(), std::fs::read(y).unwrap(), "{}", x.display());
    }
}
