use std::cmp::Ordering;
use std::io::Write;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;
use sensegraph::lemma::{lemma, Lemma, SliceId};
use sensegraph::store::{load_neighbors, NeighborRecord, NeighborStore};
use sensegraph::synth::{random_store, rng};

fn slice() -> SliceId {
    SliceId::new(0, "1980")
}

fn word(i: usize) -> String {
    format!("v{i:04}")
}

/// 500 records whose lists are shuffled and then put back in canonical order.
fn generated_file() -> tempfile::NamedTempFile {
    let mut r = rng(500);
    let vocab = 800;
    let mut f = tempfile::NamedTempFile::new().unwrap();
    for w in 0..500 {
        let mut pool: Vec<usize> = (0..vocab).filter(|&i| i != w).collect();
        pool.shuffle(&mut r);
        // Few distinct scores so that ties are common.
        let mut dist: Vec<(Lemma, f64)> = pool[..r.random_range(0..12)]
            .iter()
            .map(|&i| (lemma(&word(i)), f64::from(r.random_range(0..5u8)) / 5.0))
            .collect();
        let mut sub: Vec<(Lemma, u64)> = pool[20..20 + r.random_range(0..12)]
            .iter()
            .map(|&i| (lemma(&word(i)), r.random_range(1..4)))
            .collect();
        dist.shuffle(&mut r);
        sub.shuffle(&mut r);
        dist.sort_by(sensegraph::store::cmp_by_cosine);
        sub.sort_by(sensegraph::store::cmp_by_frequency);
        let record = NeighborRecord::new(slice(), lemma(&word(w)), dist, sub).unwrap();
        writeln!(f, "{}", record.to_json_line()).unwrap();
    }
    f
}

/// Reads the raw file without the library and sorts each list on its own.
fn resorted(path: &std::path::Path) -> Vec<(String, Vec<String>, Vec<String>)> {
    let text = std::fs::read_to_string(path).unwrap();
    text.lines()
        .map(|line| {
            let v: serde_json::Value = serde_json::from_str(line).unwrap();
            let pairs = |key: &str| -> Vec<(String, f64)> {
                v.get(key)
                    .and_then(|l| l.as_array())
                    .map(|l| {
                        l.iter()
                            .map(|p| (p[0].as_str().unwrap().to_string(), p[1].as_f64().unwrap()))
                            .collect()
                    })
                    .unwrap_or_default()
            };
            let order = |mut xs: Vec<(String, f64)>| -> Vec<String> {
                xs.sort_by(|x, y| match y.1.partial_cmp(&x.1).unwrap() {
                    Ordering::Equal => x.0.cmp(&y.0),
                    o => o,
                });
                xs.into_iter().map(|(l, _)| l).collect()
            };
            (v["word"].as_str().unwrap().to_string(), order(pairs("dist")), order(pairs("sub")))
        })
        .collect()
}

#[test]
fn five_hundred_records_match_resort_oracle() {
    let f = generated_file();
    let mut store = NeighborStore::new();
    assert_eq!(store.load_file(f.path(), &slice()).unwrap(), 500);
    let expected = resorted(f.path());
    assert_eq!(expected.len(), 500);
    for (w, dist, sub) in expected {
        let (d, s) = store.lookup(&slice(), &lemma(&w), usize::MAX, usize::MAX);
        let names = |xs: Vec<Lemma>| xs.into_iter().map(|l| l.to_string()).collect::<Vec<_>>();
        assert_eq!(names(d), dist, "dist of {w}");
        assert_eq!(names(s), sub, "sub of {w}");
    }
}

#[test]
fn loading_twice_gives_equal_stores() {
    let f = generated_file();
    let a = NeighborStore::from_records(load_neighbors(f.path(), &slice()).unwrap()).unwrap();
    let b = NeighborStore::from_records(load_neighbors(f.path(), &slice()).unwrap()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn sub_ties_break_by_lemma() {
    let r = NeighborRecord::new(
        slice(),
        lemma("w"),
        vec![],
        vec![(lemma("x"), 10), (lemma("y"), 10), (lemma("z"), 3)],
    )
    .unwrap();
    let store = NeighborStore::from_records(vec![r]).unwrap();
    assert_eq!(store.lookup(&slice(), &lemma("w"), 0, 2).1, vec![lemma("x"), lemma("y")]);
    assert_eq!(store.lookup(&slice(), &lemma("absent"), 3, 3), (vec![], vec![]));
}

proptest! {
    #[test]
    fn lookup_is_prefix_monotone(seed in any::<u64>(), kd in 0usize..12, ks in 0usize..12) {
        let (store, _) = random_store(&mut rng(seed), &slice());
        for record in store.records(&slice()) {
            let (d0, s0) = store.lookup(&slice(), &record.word, kd, ks);
            let (d1, s1) = store.lookup(&slice(), &record.word, kd + 1, ks + 1);
            prop_assert!(d1.starts_with(&d0));
            prop_assert!(s1.starts_with(&s0));
        }
    }

    #[test]
    fn loaded_lists_are_canonical(seed in any::<u64>()) {
        let (store, _) = random_store(&mut rng(seed), &slice());
        for record in store.records(&slice()) {
            prop_assert!(record.dist.windows(2).all(|w| sensegraph::store::cmp_by_cosine(&w[0], &w[1]) != Ordering::Greater));
            prop_assert!(record.sub.windows(2).all(|w| sensegraph::store::cmp_by_frequency(&w[0], &w[1]) != Ordering::Greater));
            prop_assert!(record.dist.iter().all(|(l, _)| l != &record.word));
        }
    }
}
