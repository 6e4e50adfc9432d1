//! Synthetic neighbor tables with planted sense blocks, random instance
//! generators, and brute-force reference implementations used as oracles.
//!
//! # Planted blocks
//!
//! A block is a set of lemmas standing for one sense. Its first member is
//! the hub: every other member lists the hub first in both neighbor lists,
//! and the hub lists the other members. Any member reached by the target's
//! first layer therefore pulls the block together through its hub, as long
//! as the second layer requests at least one neighbor. Without leakage no
//! list ever names a lemma of another block, so each reached block is
//! exactly one peripheral component.
//!
//! Leakage inserts a member of another active block at position 1 of a
//! member's substitution list, which merges blocks in the peripheral graph.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::align::{AlignmentStrategy, LineageId};
use crate::cluster::{PeripheralGraph, SenseCommunity};
use crate::graph::{annotate_weights, build_graph, GraphConfig, GraphEdge, Relation, WordGraph};
use crate::lemma::{Lemma, LemmaError, SliceId};
use crate::store::{NeighborRecord, NeighborStore, PairSimilarity, SliceCounts};

/// Seeded generator used by every randomized helper in this module.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error(transparent)]
    Lemma(#[from] LemmaError),
    #[error("blocks {first:?} and {second:?} both contain {lemma:?}")]
    OverlappingBlocks { first: String, second: String, lemma: String },
    #[error("block {0:?} contains the target")]
    ContainsTarget(String),
    #[error("block {0:?} has no members")]
    EmptyBlock(String),
    #[error("block {block:?} is active in slice {index}, but there are only {slices} slices")]
    SliceOutOfRange { block: String, index: usize, slices: usize },
    #[error("block {block:?} density {density} is outside (0, 1]")]
    Density { block: String, density: f64 },
    #[error("leakage {0} is outside [0, 1]")]
    Leakage(f64),
    #[error("scenario needs at least one slice")]
    NoSlices,
    #[error("slice label {0:?} appears twice")]
    DuplicateSlice(String),
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Slice labels, or a count that expands to `t0`, `t1`, ...
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SliceSpec {
    Count(usize),
    Labels(Vec<String>),
}

impl SliceSpec {
    pub fn labels(&self) -> Vec<String> {
        match self {
            SliceSpec::Count(n) => (0..*n).map(|i| format!("t{i}")).collect(),
            SliceSpec::Labels(l) => l.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Block {
    pub name: String,
    /// The first member is the hub.
    pub members: Vec<Lemma>,
    /// Zero-based indices of the slices where the block is in use.
    pub active: Vec<usize>,
    /// Share of the other members each member lists, at least one.
    #[serde(default = "full_density")]
    pub density: f64,
}

fn full_density() -> f64 {
    1.0
}

impl Block {
    pub fn is_active(&self, slice: usize) -> bool {
        self.active.contains(&slice)
    }

    fn hub(&self) -> &Lemma {
        &self.members[0]
    }

    /// Intra-block list length for one member.
    fn list_len(&self) -> usize {
        let others = self.members.len() - 1;
        if others == 0 {
            0
        } else {
            ((self.density * others as f64).ceil() as usize).clamp(1, others)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub target: Lemma,
    pub slices: SliceSpec,
    #[serde(default)]
    pub leakage: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(rename = "block", default)]
    pub blocks: Vec<Block>,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let scenario: Scenario = toml::from_str(&text).map_err(|e| ScenarioError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn slice_ids(&self) -> Vec<SliceId> {
        SliceId::chronology(&self.slices.labels())
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let labels = self.slices.labels();
        if labels.is_empty() {
            return Err(ScenarioError::NoSlices);
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(ScenarioError::DuplicateSlice(l.clone()));
            }
        }
        if !(0.0..=1.0).contains(&self.leakage) {
            return Err(ScenarioError::Leakage(self.leakage));
        }
        let mut owner: BTreeMap<&Lemma, &str> = BTreeMap::new();
        for block in &self.blocks {
            if block.members.is_empty() {
                return Err(ScenarioError::EmptyBlock(block.name.clone()));
            }
            if !(block.density > 0.0 && block.density <= 1.0) {
                return Err(ScenarioError::Density {
                    block: block.name.clone(),
                    density: block.density,
                });
            }
            if let Some(&index) = block.active.iter().find(|&&i| i >= labels.len()) {
                return Err(ScenarioError::SliceOutOfRange {
                    block: block.name.clone(),
                    index,
                    slices: labels.len(),
                });
            }
            for m in &block.members {
                if *m == self.target {
                    return Err(ScenarioError::ContainsTarget(block.name.clone()));
                }
                if let Some(first) = owner.insert(m, &block.name) {
                    return Err(ScenarioError::OverlappingBlocks {
                        first: first.to_string(),
                        second: block.name.clone(),
                        lemma: m.to_string(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn active_blocks(&self, slice: usize) -> Vec<&Block> {
        self.blocks.iter().filter(|b| b.is_active(slice)).collect()
    }

    /// The target's neighbors in `slice`: members of the active blocks
    /// interleaved so that every prefix splits across blocks in proportion
    /// to block size.
    pub fn target_order(&self, slice: usize) -> Vec<Lemma> {
        let blocks = self.active_blocks(slice);
        let total: usize = blocks.iter().map(|b| b.members.len()).sum();
        let mut taken = vec![0usize; blocks.len()];
        let mut out = Vec::with_capacity(total);
        for p in 1..=total {
            // The block furthest behind its proportional share goes next.
            let (next, _) = blocks
                .iter()
                .enumerate()
                .filter(|(i, b)| taken[*i] < b.members.len())
                .map(|(i, b)| (i, b.members.len() as f64 * p as f64 / total as f64 - taken[i] as f64))
                .fold(None, |best: Option<(usize, f64)>, (i, lag)| match best {
                    Some((_, l)) if l >= lag => best,
                    _ => Some((i, lag)),
                })
                .expect("members remain");
            out.push(blocks[next].members[taken[next]].clone());
            taken[next] += 1;
        }
        out
    }

    /// Names of the active blocks with a member among the target's first
    /// layer under `config`. At zero leakage and with a second layer that
    /// requests neighbors, these are exactly the peripheral components.
    pub fn reached_blocks(&self, slice: usize, config: &GraphConfig) -> Vec<&str> {
        let width = config.k_dist[0].max(config.k_sub[0]);
        let first: BTreeSet<Lemma> = self.target_order(slice).into_iter().take(width).collect();
        self.active_blocks(slice)
            .into_iter()
            .filter(|b| b.members.iter().any(|m| first.contains(m)))
            .map(|b| b.name.as_str())
            .collect()
    }

    /// A sense replaced by another: `old` in slices 0 and 1, `new` in 1 to 3.
    pub fn replacement() -> Scenario {
        let block = |name: &str, members: &[&str], active: &[usize]| Block {
            name: name.into(),
            members: members.iter().map(|m| Lemma::new(*m).expect("valid lemma")).collect(),
            active: active.to_vec(),
            density: 1.0,
        };
        Scenario {
            target: Lemma::new("trump").expect("valid lemma"),
            slices: SliceSpec::Labels(vec!["1980".into(), "1990".into(), "2000".into(), "2010".into()]),
            leakage: 0.0,
            seed: 1,
            blocks: vec![
                block("card", &["card", "ace", "bid", "bridge", "diamond", "heart", "suit", "trick"], &[0, 1]),
                block(
                    "politics",
                    &["president", "campaign", "candidate", "election", "republican", "senator", "vote", "white"],
                    &[1, 2, 3],
                ),
            ],
        }
    }
}

fn cosine_at(i: usize, len: usize) -> f64 {
    round4(0.9 - 0.8 * i as f64 / len as f64)
}

fn frequency_at(i: usize, len: usize) -> u64 {
    3 * (len - i) as u64
}

fn scored_record(slice: &SliceId, word: &Lemma, dist: &[Lemma], sub: &[Lemma]) -> NeighborRecord {
    let dist = dist.iter().enumerate().map(|(i, l)| (l.clone(), cosine_at(i, dist.len()))).collect();
    let sub = sub.iter().enumerate().map(|(i, l)| (l.clone(), frequency_at(i, sub.len()))).collect();
    NeighborRecord::new(slice.clone(), word.clone(), dist, sub).expect("generated lists are canonical")
}

fn round4(x: f64) -> f64 {
    (x * 1e4).round() / 1e4
}

/// Generated files for one scenario, held in memory.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub target: Lemma,
    pub slices: Vec<SliceId>,
    /// Records per slice, sorted by word.
    pub records: Vec<Vec<NeighborRecord>>,
    pub similarities: Vec<PairSimilarity>,
    pub counts: Vec<SliceCounts>,
}

pub fn generate(scenario: &Scenario) -> Result<SyntheticCorpus, ScenarioError> {
    scenario.validate()?;
    let mut rng = rng(scenario.seed);
    let slices = scenario.slice_ids();
    let mut records = Vec::with_capacity(slices.len());
    let mut similarities = Vec::with_capacity(slices.len());
    let mut counts = Vec::with_capacity(slices.len());

    for (t, slice) in slices.iter().enumerate() {
        let active = scenario.active_blocks(t);
        let mut slice_records = Vec::new();
        let order = scenario.target_order(t);
        slice_records.push(scored_record(slice, &scenario.target, &order, &order));

        for (bi, block) in active.iter().enumerate() {
            let n = block.members.len();
            let len = block.list_len();
            for (j, m) in block.members.iter().enumerate() {
                let (dist, mut sub): (Vec<Lemma>, Vec<Lemma>) = if j == 0 {
                    (
                        block.members[1..=len].to_vec(),
                        block.members[1..].iter().rev().take(len).cloned().collect(),
                    )
                } else {
                    let after = (1..n).map(|s| (j + s) % n).filter(|&i| i != 0 && i != j);
                    let before = (1..n).map(|s| (j + n - s) % n).filter(|&i| i != 0 && i != j);
                    let with_hub = |rest: Vec<usize>| -> Vec<Lemma> {
                        std::iter::once(block.hub().clone())
                            .chain(rest.into_iter().map(|i| block.members[i].clone()))
                            .take(len)
                            .collect()
                    };
                    (with_hub(after.collect()), with_hub(before.collect()))
                };
                let others: Vec<&&Block> = active.iter().enumerate().filter(|(k, _)| *k != bi).map(|(_, b)| b).collect();
                if !others.is_empty() && scenario.leakage > 0.0 && rng.random_bool(scenario.leakage) {
                    let other = others.choose(&mut rng).expect("non-empty");
                    let foreign = other.members.choose(&mut rng).expect("non-empty block").clone();
                    sub.insert(1.min(sub.len()), foreign);
                }
                slice_records.push(scored_record(slice, m, &dist, &sub));
            }
        }
        slice_records.sort_by(|a, b| a.word.cmp(&b.word));

        let block_of: BTreeMap<&Lemma, usize> = active
            .iter()
            .enumerate()
            .flat_map(|(i, b)| b.members.iter().map(move |m| (m, i)))
            .collect();
        let mut words: Vec<&Lemma> = block_of.keys().copied().collect();
        words.push(&scenario.target);
        words.sort();
        let mut sims = PairSimilarity::new(slice.clone());
        for (i, a) in words.iter().enumerate() {
            for b in &words[i + 1..] {
                let related = match (block_of.get(a), block_of.get(b)) {
                    (Some(x), Some(y)) => x == y,
                    _ => true,
                };
                let cos = if related {
                    rng.random_range(0.3..0.95)
                } else {
                    rng.random_range(-0.2..0.4)
                };
                sims.insert((*a).clone(), (*b).clone(), round4(cos)).expect("distinct pair");
            }
        }

        let total = 1_000_000u64;
        let mut slice_counts = BTreeMap::new();
        slice_counts.insert(scenario.target.clone(), 50 + 20 * block_of.len() as u64);
        for m in block_of.keys() {
            slice_counts.insert((*m).clone(), rng.random_range(10..100));
        }
        counts.push(SliceCounts::new(slice.clone(), total, slice_counts).expect("counts below total"));
        records.push(slice_records);
        similarities.push(sims);
    }
    Ok(SyntheticCorpus {
        target: scenario.target.clone(),
        slices,
        records,
        similarities,
        counts,
    })
}

impl SyntheticCorpus {
    pub fn store(&self) -> NeighborStore {
        NeighborStore::from_records(self.records.iter().flatten().cloned()).expect("one record per word and slice")
    }

    pub fn neighbor_file(slice: &SliceId) -> String {
        format!("neighbors_{}.jsonl", slice.label)
    }

    pub fn similarity_file(slice: &SliceId) -> String {
        format!("similarity_{}.jsonl", slice.label)
    }

    pub const COUNTS_FILE: &'static str = "counts.jsonl";
    pub const CONFIG_FILE: &'static str = "pipeline.toml";

    /// A pipeline config reading the files written by [`Self::write`].
    pub fn pipeline_toml(&self) -> String {
        let slices: Vec<String> = self.slices.iter().map(|s| format!("{:?}", s.label)).collect();
        format!(
            "[corpus]\nslices = [{}]\ntargets = [{:?}]\n\n\
             [inputs]\nneighbors = \"neighbors_{{slice}}.jsonl\"\n\
             similarities = \"similarity_{{slice}}.jsonl\"\ncounts = \"{}\"\n\n\
             [graph]\nk_dist = [3, 1]\nk_sub = [6, 2]\n\n\
             [alignment]\nstrategy = \"both\"\npersistence_threshold = 2\n\n\
             [output]\ndir = \"out\"\nformat = \"json\"\nweight_shading = true\n",
            slices.join(", "),
            self.target.as_str(),
            Self::COUNTS_FILE,
        )
    }

    /// Writes one neighbor and one similarity file per slice, the counts
    /// file and a pipeline config into `dir`. Returns the paths written.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>, ScenarioError> {
        let write = |name: String, text: String| -> Result<PathBuf, ScenarioError> {
            let path = dir.join(name);
            fs::write(&path, text).map_err(|source| ScenarioError::Write {
                path: path.clone(),
                source,
            })?;
            Ok(path)
        };
        fs::create_dir_all(dir).map_err(|source| ScenarioError::Write {
            path: dir.to_path_buf(),
            source,
        })?;
        let mut written = Vec::new();
        for (i, slice) in self.slices.iter().enumerate() {
            let mut text = String::new();
            for r in &self.records[i] {
                text.push_str(&r.to_json_line());
                text.push('\n');
            }
            written.push(write(Self::neighbor_file(slice), text)?);
            written.push(write(Self::similarity_file(slice), self.similarities[i].to_json_lines())?);
        }
        let counts: String = self.counts.iter().map(|c| c.to_json_line() + "\n").collect();
        written.push(write(Self::COUNTS_FILE.into(), counts)?);
        written.push(write(Self::CONFIG_FILE.into(), self.pipeline_toml())?);
        Ok(written)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("{what} is {got}, oracle limit is {limit}")]
    TooLarge { what: &'static str, got: usize, limit: usize },
}

pub const ORACLE_MAX_NODES: usize = 50;
pub const ORACLE_MAX_SLICES: usize = 5;
pub const ORACLE_MAX_COMMUNITIES: usize = 6;

/// Connected components by transitive closure of the adjacency matrix,
/// sorted by size descending, then smallest member.
pub fn oracle_components(graph: &PeripheralGraph) -> Result<Vec<BTreeSet<Lemma>>, OracleError> {
    let nodes: Vec<&Lemma> = graph.nodes.iter().collect();
    let n = nodes.len();
    if n > ORACLE_MAX_NODES {
        return Err(OracleError::TooLarge {
            what: "node count",
            got: n,
            limit: ORACLE_MAX_NODES,
        });
    }
    let pos = |l: &Lemma| nodes.iter().position(|x| *x == l);
    let mut reach = vec![vec![false; n]; n];
    for (i, row) in reach.iter_mut().enumerate() {
        row[i] = true;
    }
    for e in &graph.edges {
        if let (Some(i), Some(j)) = (pos(&e.a), pos(&e.b)) {
            reach[i][j] = true;
            reach[j][i] = true;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if reach[i][k] && reach[k][j] {
                    reach[i][j] = true;
                }
            }
        }
    }
    let mut seen = vec![false; n];
    let mut parts = Vec::new();
    for i in 0..n {
        if seen[i] {
            continue;
        }
        let part: BTreeSet<Lemma> = (0..n).filter(|&j| reach[i][j]).map(|j| nodes[j].clone()).collect();
        for j in 0..n {
            if reach[i][j] {
                seen[j] = true;
            }
        }
        parts.push(part);
    }
    parts.sort_by(|x, y| {
        y.len()
            .cmp(&x.len())
            .then_with(|| x.iter().min().cmp(&y.iter().min()))
    });
    Ok(parts)
}

/// Community-to-lineage assignment by exhaustive enumeration of every
/// (community, earlier community) intersection. Tie rules and id allocation
/// follow [`crate::align::align`].
pub fn oracle_align(
    communities: &BTreeMap<SliceId, Vec<SenseCommunity>>,
    strategy: AlignmentStrategy,
) -> Result<BTreeMap<(SliceId, usize), LineageId>, OracleError> {
    if communities.len() > ORACLE_MAX_SLICES {
        return Err(OracleError::TooLarge {
            what: "slice count",
            got: communities.len(),
            limit: ORACLE_MAX_SLICES,
        });
    }
    if let Some(n) = communities.values().map(Vec::len).find(|&n| n > ORACLE_MAX_COMMUNITIES) {
        return Err(OracleError::TooLarge {
            what: "communities per slice",
            got: n,
            limit: ORACLE_MAX_COMMUNITIES,
        });
    }
    // (slice position, community, lineage) for everything placed so far.
    let mut placed: Vec<(usize, &SenseCommunity, LineageId)> = Vec::new();
    let mut assignment = BTreeMap::new();
    let mut next = 1u32;
    for (pos, (slice, comms)) in communities.iter().enumerate() {
        let mut comms: Vec<&SenseCommunity> = comms.iter().collect();
        comms.sort_by_key(|c| c.id);
        let smallest = |c: &SenseCommunity| c.members.iter().min().cloned();

        let mut choice: Vec<Option<(LineageId, usize)>> = Vec::new();
        for c in &comms {
            let mut candidates: Vec<(usize, usize, usize, Option<Lemma>, LineageId)> = placed
                .iter()
                .filter(|(p, _, _)| match strategy {
                    AlignmentStrategy::PreviousSlice => p + 1 == pos,
                    AlignmentStrategy::AllHistory => *p < pos,
                })
                .map(|(p, prev, lin)| (c.members.intersection(&prev.members).count(), *p, prev.members.len(), smallest(prev), *lin))
                .filter(|cand| cand.0 > 0)
                .collect();
            candidates.sort_by(|x, y| {
                y.0.cmp(&x.0)
                    .then(y.1.cmp(&x.1))
                    .then(y.2.cmp(&x.2))
                    .then(x.3.cmp(&y.3))
            });
            choice.push(candidates.first().map(|c| (c.4, c.0)));
        }

        let claimed: BTreeSet<LineageId> = choice.iter().flatten().map(|(l, _)| *l).collect();
        let mut winner: BTreeMap<LineageId, usize> = BTreeMap::new();
        for lineage in claimed {
            let mut claimants: Vec<usize> = (0..comms.len())
                .filter(|&i| matches!(choice[i], Some((l, _)) if l == lineage))
                .collect();
            claimants.sort_by(|&i, &j| {
                let ov = |k: usize| choice[k].map_or(0, |(_, o)| o);
                ov(j)
                    .cmp(&ov(i))
                    .then(comms[j].members.len().cmp(&comms[i].members.len()))
                    .then(smallest(comms[i]).cmp(&smallest(comms[j])))
            });
            winner.insert(lineage, claimants[0]);
        }

        for (i, c) in comms.iter().enumerate() {
            let id = match choice[i] {
                Some((l, _)) if winner[&l] == i => l,
                _ => {
                    next += 1;
                    LineageId(next - 1)
                }
            };
            assignment.insert((slice.clone(), c.id), id);
            placed.push((pos, *c, id));
        }
    }
    Ok(assignment)
}

fn word(i: usize) -> Lemma {
    Lemma::new(format!("w{i:03}")).expect("valid lemma")
}

fn distinct_others<R: Rng + ?Sized>(rng: &mut R, vocab: usize, exclude: usize, n: usize) -> Vec<usize> {
    let mut pool: Vec<usize> = (0..vocab).filter(|&i| i != exclude).collect();
    pool.shuffle(rng);
    pool.truncate(n);
    pool
}

/// A random store over `w000`, `w001`, ... with random list lengths and
/// scores; about one word in ten has no record. Returns the store and a
/// few targets, one of which may be absent.
pub fn random_store<R: Rng + ?Sized>(rng: &mut R, slice: &SliceId) -> (NeighborStore, Vec<Lemma>) {
    let vocab = rng.random_range(5..=120);
    let mut records = Vec::new();
    for w in 0..vocab {
        if rng.random_bool(0.1) {
            continue;
        }
        let nd = rng.random_range(0..=10);
        let ns = rng.random_range(0..=10);
        let mut dist: Vec<(Lemma, f64)> = distinct_others(rng, vocab, w, nd)
            .into_iter()
            .map(|i| (word(i), round4(rng.random_range(-1.0..=1.0))))
            .collect();
        let mut sub: Vec<(Lemma, u64)> = distinct_others(rng, vocab, w, ns)
            .into_iter()
            .map(|i| (word(i), rng.random_range(1..=20)))
            .collect();
        dist.sort_by(crate::store::cmp_by_cosine);
        sub.sort_by(crate::store::cmp_by_frequency);
        records.push(NeighborRecord::new(slice.clone(), word(w), dist, sub).expect("canonical lists"));
    }
    let targets = (0..5).map(|_| word(rng.random_range(0..vocab))).collect();
    (NeighborStore::from_records(records).expect("unique words"), targets)
}

/// A random peripheral graph with up to `max_nodes` nodes and a random
/// edge density.
pub fn random_peripheral<R: Rng + ?Sized>(rng: &mut R, max_nodes: usize) -> PeripheralGraph {
    let n = rng.random_range(0..=max_nodes);
    let nodes: Vec<Lemma> = (0..n).map(word).collect();
    let p = rng.random_range(0.0..0.15);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(p) {
                let relation = if rng.random_bool(0.5) {
                    Relation::Distributional
                } else {
                    Relation::Substitution
                };
                edges.push(GraphEdge::new(nodes[i].clone(), nodes[j].clone(), relation));
            }
        }
    }
    PeripheralGraph {
        target: Lemma::new("center").expect("valid lemma"),
        slice: SliceId::new(0, "t0"),
        nodes: nodes.into_iter().collect(),
        edges,
    }
}

fn communities_from_sets(slice: &SliceId, mut sets: Vec<BTreeSet<Lemma>>) -> Vec<SenseCommunity> {
    sets.retain(|s| !s.is_empty());
    crate::cluster::canonical_order(&mut sets);
    sets.into_iter()
        .enumerate()
        .map(|(id, members)| SenseCommunity {
            id,
            slice: slice.clone(),
            members,
        })
        .collect()
}

/// Random disjoint communities over a small shared vocabulary, so that
/// overlaps across slices are frequent.
pub fn random_partitions<R: Rng + ?Sized>(
    rng: &mut R,
    max_slices: usize,
    max_communities: usize,
) -> BTreeMap<SliceId, Vec<SenseCommunity>> {
    let n_slices = rng.random_range(1..=max_slices);
    let vocab = rng.random_range(3..=14);
    let labels: Vec<String> = (0..n_slices).map(|i| format!("t{i}")).collect();
    SliceId::chronology(&labels)
        .into_iter()
        .map(|slice| {
            let k = rng.random_range(0..=max_communities);
            let mut sets = vec![BTreeSet::new(); k];
            if k > 0 {
                for w in 0..vocab {
                    if rng.random_bool(0.7) {
                        sets[rng.random_range(0..k)].insert(word(w));
                    }
                }
            }
            let comms = communities_from_sets(&slice, sets);
            (slice, comms)
        })
        .collect()
}

/// Disjoint blocks, each active in a random set of slices with at least
/// one block leaving and returning. Every active block contributes one
/// community, a random non-empty subset of its members.
pub fn reemergence_partitions<R: Rng + ?Sized>(rng: &mut R) -> BTreeMap<SliceId, Vec<SenseCommunity>> {
    let n_slices = rng.random_range(3..=8);
    let n_blocks = rng.random_range(1..=4);
    let mut activity: Vec<Vec<bool>> = (0..n_blocks)
        .map(|_| (0..n_slices).map(|_| rng.random_bool(0.6)).collect())
        .collect();
    // Plant a return: active, absent for a while, active again.
    let gap_start = rng.random_range(1..n_slices - 1);
    let gap_end = rng.random_range(gap_start + 1..n_slices);
    let returning = &mut activity[rng.random_range(0..n_blocks)];
    returning[gap_start - 1] = true;
    for slot in &mut returning[gap_start..gap_end] {
        *slot = false;
    }
    returning[gap_end] = true;

    let block_size: Vec<usize> = (0..n_blocks).map(|_| rng.random_range(1..=5)).collect();
    let labels: Vec<String> = (0..n_slices).map(|i| format!("t{i}")).collect();
    SliceId::chronology(&labels)
        .into_iter()
        .enumerate()
        .map(|(t, slice)| {
            let sets = (0..n_blocks)
                .filter(|&b| activity[b][t])
                .map(|b| {
                    let members: Vec<Lemma> = (0..block_size[b])
                        .map(|m| Lemma::new(format!("b{b}m{m}")).expect("valid lemma"))
                        .collect();
                    let mut subset: BTreeSet<Lemma> =
                        members.iter().filter(|_| rng.random_bool(0.6)).cloned().collect();
                    if subset.is_empty() {
                        subset.insert(members.choose(rng).expect("non-empty block").clone());
                    }
                    subset
                })
                .collect();
            let comms = communities_from_sets(&slice, sets);
            (slice, comms)
        })
        .collect()
}

/// The three-slice case where a sense disappears for one slice and returns.
pub fn reemergence_fixture() -> BTreeMap<SliceId, Vec<SenseCommunity>> {
    let set = |ms: &[&str]| -> BTreeSet<Lemma> { ms.iter().map(|m| Lemma::new(*m).expect("valid lemma")).collect() };
    SliceId::chronology(&["1980", "1985", "1990"])
        .into_iter()
        .zip([
            vec![set(&["ace", "card", "trick"])],
            vec![set(&["casino", "tower"])],
            vec![set(&["ace", "card", "trick"])],
        ])
        .map(|(slice, sets)| {
            let comms = communities_from_sets(&slice, sets);
            (slice, comms)
        })
        .collect()
}

/// A random built graph, with random depth and fan-outs, and contextual
/// weights on a random share of its edges.
pub fn random_graph<R: Rng + ?Sized>(rng: &mut R) -> WordGraph {
    let slice = SliceId::new(rng.random_range(0..10), format!("s{}", rng.random_range(1950..2030)));
    let (store, targets) = random_store(rng, &slice);
    let depth = rng.random_range(1..=3);
    let mut k_dist: Vec<usize> = (0..depth).map(|_| rng.random_range(0..=3)).collect();
    let k_sub: Vec<usize> = (0..depth).map(|_| rng.random_range(0..=3)).collect();
    if k_dist[0] + k_sub[0] == 0 {
        k_dist[0] = 1;
    }
    let config = GraphConfig::new(k_dist, k_sub).expect("valid config");
    let target = targets.choose(rng).expect("targets").clone();
    let graph = build_graph(&store, &target, &slice, &config).expect("valid config");
    let mut sims = PairSimilarity::new(slice);
    for e in graph.edges() {
        if rng.random_bool(0.6) {
            sims.insert(e.a.clone(), e.b.clone(), round4(rng.random_range(-1.0..=1.0)))
                .expect("distinct pair");
        }
    }
    annotate_weights(&graph, &sims).expect("same slice").0
}
