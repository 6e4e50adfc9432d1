//! Threading sense communities through time by member overlap.
//!
//! Each community of slice `t` is matched to the earlier community sharing
//! the most members: only slice `t - 1` under [`AlignmentStrategy::PreviousSlice`],
//! any earlier slice under [`AlignmentStrategy::AllHistory`]. Zero overlap
//! starts a new lineage. [`refine`] then sweeps lineages seen in too few
//! slices into a single residual lineage.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cluster::SenseCommunity;
use crate::lemma::{Lemma, SliceId};

/// Default minimum number of slices a lineage must span to survive refinement.
pub const DEFAULT_PERSISTENCE: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlignmentStrategy {
    PreviousSlice,
    AllHistory,
}

impl AlignmentStrategy {
    pub const ALL: [AlignmentStrategy; 2] = [AlignmentStrategy::PreviousSlice, AlignmentStrategy::AllHistory];

    /// Short name used in CLI flags and artifact paths.
    pub fn short_name(self) -> &'static str {
        match self {
            AlignmentStrategy::PreviousSlice => "previous",
            AlignmentStrategy::AllHistory => "history",
        }
    }
}

impl fmt::Display for AlignmentStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AlignmentStrategy::PreviousSlice => "previous_slice",
            AlignmentStrategy::AllHistory => "all_history",
        })
    }
}

impl FromStr for AlignmentStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "previous" | "previous_slice" => Ok(AlignmentStrategy::PreviousSlice),
            "history" | "all_history" => Ok(AlignmentStrategy::AllHistory),
            other => Err(format!("unknown alignment strategy {other:?}")),
        }
    }
}

/// Lineage identifier, unique per target. `0` is reserved for the residual.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LineageId(pub u32);

impl LineageId {
    pub const RESIDUAL: LineageId = LineageId(0);

    pub fn is_residual(self) -> bool {
        self == Self::RESIDUAL
    }
}

impl fmt::Display for LineageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_residual() {
            f.write_str("residual")
        } else {
            write!(f, "L{}", self.0)
        }
    }
}

impl FromStr for LineageId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "residual" {
            return Ok(LineageId::RESIDUAL);
        }
        s.strip_prefix('L')
            .and_then(|n| n.parse::<u32>().ok())
            .filter(|&n| n > 0)
            .map(LineageId)
            .ok_or_else(|| format!("invalid lineage id {s:?}"))
    }
}

impl Serialize for LineageId {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for LineageId {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    /// No earlier community overlapped; a new sense starts here.
    Born,
    /// Inherited from the best-overlapping earlier community.
    Matched,
    /// Lost an inheritance conflict to a sibling with larger overlap; the
    /// detail names the lineage that took over.
    MergedInto,
    /// Took in members of a lineage that does not continue; the detail names it.
    AbsorbedSecondary,
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EventKind::Born => "born",
            EventKind::Matched => "matched",
            EventKind::MergedInto => "merged_into",
            EventKind::AbsorbedSecondary => "absorbed_secondary",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineageEvent {
    pub slice: SliceId,
    pub kind: EventKind,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SenseLineage {
    pub id: LineageId,
    pub occurrences: BTreeMap<SliceId, BTreeSet<Lemma>>,
    pub events: Vec<LineageEvent>,
    pub residual: bool,
}

impl SenseLineage {
    pub fn size_at(&self, slice: &SliceId) -> usize {
        self.occurrences.get(slice).map_or(0, BTreeSet::len)
    }

    pub fn first_slice(&self) -> Option<&SliceId> {
        self.occurrences.keys().next()
    }

    pub fn last_slice(&self) -> Option<&SliceId> {
        self.occurrences.keys().next_back()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignmentResult {
    pub target: Lemma,
    pub strategy: AlignmentStrategy,
    /// Every slice that was aligned, in order, including those without communities.
    pub slices: Vec<SliceId>,
    /// Ordered by lineage id; after refinement the residual comes first.
    pub lineages: Vec<SenseLineage>,
    /// (slice, community id) to lineage.
    pub assignment: BTreeMap<(SliceId, usize), LineageId>,
    /// Threshold used by [`refine`], `None` before refinement.
    pub persistence_threshold: Option<usize>,
}

impl AlignmentResult {
    pub fn lineage(&self, id: LineageId) -> Option<&SenseLineage> {
        self.lineages.iter().find(|l| l.id == id)
    }

    pub fn residual(&self) -> Option<&SenseLineage> {
        self.lineages.iter().find(|l| l.residual)
    }

    /// Number of lineages, optionally counting the residual.
    pub fn lineage_count(&self, include_residual: bool) -> usize {
        self.lineages
            .iter()
            .filter(|l| include_residual || !l.residual)
            .count()
    }

    /// Sum of lineage sizes at `slice`; equals the peripheral node count.
    pub fn total_members(&self, slice: &SliceId) -> usize {
        self.lineages.iter().map(|l| l.size_at(slice)).sum()
    }

    /// Communities per slice, as aligned.
    pub fn communities_per_slice(&self) -> Vec<(SliceId, usize)> {
        self.slices
            .iter()
            .map(|s| {
                let n = self.assignment.keys().filter(|(slice, _)| slice == s).count();
                (s.clone(), n)
            })
            .collect()
    }

    pub fn is_refined(&self) -> bool {
        self.persistence_threshold.is_some()
    }
}

struct Match {
    lineage: LineageId,
    overlap: usize,
    from: SliceId,
}

/// Overlap, slice position, earlier community size, smallest member reversed.
type MatchKey<'a> = (usize, usize, usize, Reverse<&'a Lemma>);

fn overlap(x: &BTreeSet<Lemma>, y: &BTreeSet<Lemma>) -> usize {
    let (small, large) = if x.len() <= y.len() { (x, y) } else { (y, x) };
    small.iter().filter(|l| large.contains(*l)).count()
}

/// Aligns the communities of every slice, in chronological order.
///
/// Ties in the best match prefer the most recent slice, then the larger
/// earlier community, then the one with the smallest member. When several
/// communities of one slice pick the same lineage, the largest overlap keeps
/// it (then the larger community, then smallest member); the others start
/// new lineages carrying a `merged_into` event.
pub fn align(
    target: &Lemma,
    communities: &BTreeMap<SliceId, Vec<SenseCommunity>>,
    strategy: AlignmentStrategy,
) -> AlignmentResult {
    let mut result = AlignmentResult {
        target: target.clone(),
        strategy,
        slices: communities.keys().cloned().collect(),
        lineages: Vec::new(),
        assignment: BTreeMap::new(),
        persistence_threshold: None,
    };
    // Per aligned slice: (community, lineage) in community id order.
    let mut history: Vec<Vec<(&SenseCommunity, LineageId)>> = Vec::new();
    let mut lineages: BTreeMap<LineageId, SenseLineage> = BTreeMap::new();
    let mut next_id = 1u32;

    for (pos, (slice, comms)) in communities.iter().enumerate() {
        let mut comms: Vec<&SenseCommunity> = comms.iter().collect();
        comms.sort_by_key(|c| c.id);

        let earliest = match strategy {
            AlignmentStrategy::PreviousSlice => pos.saturating_sub(1),
            AlignmentStrategy::AllHistory => 0,
        };
        let matches: Vec<Option<Match>> = comms
            .iter()
            .map(|c| {
                let mut best: Option<(MatchKey, Match)> = None;
                for (k, placed) in history.iter().enumerate().skip(earliest) {
                    for (prev, lineage) in placed {
                        let ov = overlap(&c.members, &prev.members);
                        if ov == 0 {
                            continue;
                        }
                        let key = (ov, k, prev.len(), Reverse(prev.first_member()));
                        if best.as_ref().is_none_or(|(b, _)| key > *b) {
                            best = Some((
                                key,
                                Match {
                                    lineage: *lineage,
                                    overlap: ov,
                                    from: prev.slice.clone(),
                                },
                            ));
                        }
                    }
                }
                best.map(|(_, m)| m)
            })
            .collect();

        let mut inheritor: BTreeMap<LineageId, usize> = BTreeMap::new();
        for (i, m) in matches.iter().enumerate() {
            let Some(m) = m else { continue };
            let rank = |j: usize| {
                let ov = matches[j].as_ref().map_or(0, |m| m.overlap);
                (ov, comms[j].len(), Reverse(comms[j].first_member()))
            };
            inheritor
                .entry(m.lineage)
                .and_modify(|cur| {
                    if rank(i) > rank(*cur) {
                        *cur = i;
                    }
                })
                .or_insert(i);
        }

        let mut placed = Vec::with_capacity(comms.len());
        for (i, c) in comms.iter().enumerate() {
            let mut events = Vec::new();
            let id = match &matches[i] {
                Some(m) if inheritor[&m.lineage] == i => {
                    events.push(LineageEvent {
                        slice: slice.clone(),
                        kind: EventKind::Matched,
                        detail: format!("from {} overlap {}", m.from, m.overlap),
                    });
                    m.lineage
                }
                other => {
                    let id = LineageId(next_id);
                    next_id += 1;
                    events.push(LineageEvent {
                        slice: slice.clone(),
                        kind: EventKind::Born,
                        detail: String::new(),
                    });
                    if let Some(m) = other {
                        events.push(LineageEvent {
                            slice: slice.clone(),
                            kind: EventKind::MergedInto,
                            detail: m.lineage.to_string(),
                        });
                    }
                    id
                }
            };
            let lineage = lineages.entry(id).or_insert_with(|| SenseLineage {
                id,
                occurrences: BTreeMap::new(),
                events: Vec::new(),
                residual: false,
            });
            lineage.occurrences.insert(slice.clone(), c.members.clone());
            lineage.events.extend(events);
            result.assignment.insert((slice.clone(), c.id), id);
            placed.push((*c, id));
        }

        // Lineages of the previous slice that stop here but overlap a
        // continuing community are recorded as absorbed by it.
        if pos > 0 {
            let continuing: BTreeSet<LineageId> = placed.iter().map(|(_, id)| *id).collect();
            for (c, id) in &placed {
                if !matches!(lineages[id].events.last(), Some(e) if e.kind == EventKind::Matched) {
                    continue;
                }
                let absorbed: BTreeSet<LineageId> = history[pos - 1]
                    .iter()
                    .filter(|(prev, lin)| {
                        !continuing.contains(lin) && overlap(&c.members, &prev.members) > 0
                    })
                    .map(|(_, lin)| *lin)
                    .collect();
                let lineage = lineages.get_mut(id).expect("placed lineage");
                lineage.events.extend(absorbed.into_iter().map(|lin| LineageEvent {
                    slice: slice.clone(),
                    kind: EventKind::AbsorbedSecondary,
                    detail: lin.to_string(),
                }));
            }
        }
        history.push(placed);
    }
    result.lineages = lineages.into_values().collect();
    result
}

/// [`refine_with`] at the default persistence of two slices.
pub fn refine(result: &AlignmentResult) -> AlignmentResult {
    refine_with(result, DEFAULT_PERSISTENCE)
}

/// Moves every lineage present in fewer than `threshold` slices into the
/// residual lineage, slice by slice. Per-slice member totals are preserved.
/// The residual always exists afterwards, possibly empty.
pub fn refine_with(result: &AlignmentResult, threshold: usize) -> AlignmentResult {
    let mut residual = SenseLineage {
        id: LineageId::RESIDUAL,
        occurrences: BTreeMap::new(),
        events: Vec::new(),
        residual: true,
    };
    let mut survivors = Vec::new();
    let mut swept = BTreeSet::new();
    for lineage in &result.lineages {
        if lineage.residual {
            for (slice, members) in &lineage.occurrences {
                residual.occurrences.entry(slice.clone()).or_default().extend(members.iter().cloned());
            }
            residual.events.extend(lineage.events.iter().cloned());
        } else if lineage.occurrences.len() >= threshold {
            survivors.push(lineage.clone());
        } else {
            swept.insert(lineage.id);
            for (slice, members) in &lineage.occurrences {
                residual.occurrences.entry(slice.clone()).or_default().extend(members.iter().cloned());
                residual.events.push(LineageEvent {
                    slice: slice.clone(),
                    kind: EventKind::AbsorbedSecondary,
                    detail: lineage.id.to_string(),
                });
            }
        }
    }
    residual.events.sort_by(|x, y| x.slice.cmp(&y.slice));
    let assignment = result
        .assignment
        .iter()
        .map(|(k, id)| {
            let id = if swept.contains(id) { LineageId::RESIDUAL } else { *id };
            (k.clone(), id)
        })
        .collect();
    let mut lineages = vec![residual];
    lineages.extend(survivors);
    AlignmentResult {
        target: result.target.clone(),
        strategy: result.strategy,
        slices: result.slices.clone(),
        lineages,
        assignment,
        persistence_threshold: Some(threshold),
    }
}

/// One row of the lineage table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineageRow {
    pub lineage_id: LineageId,
    pub residual: bool,
    pub first_slice: Option<SliceId>,
    pub last_slice: Option<SliceId>,
    /// Member count in each aligned slice, 0 where absent.
    pub sizes: Vec<usize>,
    pub events: Vec<LineageEvent>,
}

pub fn lineage_report(result: &AlignmentResult) -> Vec<LineageRow> {
    result
        .lineages
        .iter()
        .map(|l| LineageRow {
            lineage_id: l.id,
            residual: l.residual,
            first_slice: l.first_slice().cloned(),
            last_slice: l.last_slice().cloned(),
            sizes: result.slices.iter().map(|s| l.size_at(s)).collect(),
            events: l.events.clone(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lemma::lemma;

    fn slices(n: usize) -> Vec<SliceId> {
        (0..n).map(|i| SliceId::new(i as u32, format!("{}", 1980 + 5 * i))).collect()
    }

    /// Builds a community map from member lists, assigning ids in canonical order.
    fn plan(per_slice: &[&[&[&str]]]) -> BTreeMap<SliceId, Vec<SenseCommunity>> {
        slices(per_slice.len())
            .into_iter()
            .zip(per_slice)
            .map(|(slice, comms)| {
                let mut sets: Vec<BTreeSet<Lemma>> = comms
                    .iter()
                    .map(|c| c.iter().map(|l| lemma(l)).collect())
                    .collect();
                crate::cluster::canonical_order(&mut sets);
                let comms = sets
                    .into_iter()
                    .enumerate()
                    .map(|(id, members)| SenseCommunity {
                        id,
                        slice: slice.clone(),
                        members,
                    })
                    .collect();
                (slice, comms)
            })
            .collect()
    }

    fn lineage_of(r: &AlignmentResult, slice: usize, member: &str) -> LineageId {
        let slice = &r.slices[slice];
        r.lineages
            .iter()
            .find(|l| l.occurrences.get(slice).is_some_and(|m| m.contains(&lemma(member))))
            .map(|l| l.id)
            .unwrap()
    }

    #[test]
    fn identical_partitions_inherit() {
        let p = plan(&[&[&["a", "b"], &["c"]], &[&["a", "b"], &["c"]]]);
        for strategy in AlignmentStrategy::ALL {
            let r = align(&lemma("w"), &p, strategy);
            assert_eq!(r.lineages.len(), 2);
            assert_eq!(lineage_of(&r, 0, "a"), lineage_of(&r, 1, "a"));
            assert_eq!(lineage_of(&r, 0, "c"), lineage_of(&r, 1, "c"));
        }
    }

    #[test]
    fn picks_largest_overlap() {
        let p = plan(&[&[&["a", "b"], &["c", "d"]], &[&["a", "b", "c"]]]);
        let r = align(&lemma("w"), &p, AlignmentStrategy::PreviousSlice);
        assert_eq!(lineage_of(&r, 1, "a"), lineage_of(&r, 0, "a"));
        assert_ne!(lineage_of(&r, 1, "a"), lineage_of(&r, 0, "c"));
        // {c,d} stops and overlaps the continuing community.
        let l = r.lineage(lineage_of(&r, 1, "a")).unwrap();
        let absorbed = l.events.iter().find(|e| e.kind == EventKind::AbsorbedSecondary).unwrap();
        assert_eq!(absorbed.detail, lineage_of(&r, 0, "c").to_string());
    }

    #[test]
    fn disjoint_community_is_born() {
        let p = plan(&[&[&["a", "b"]], &[&["a", "b"], &["e", "f"]]]);
        let r = align(&lemma("w"), &p, AlignmentStrategy::AllHistory);
        let id = lineage_of(&r, 1, "e");
        let l = r.lineage(id).unwrap();
        assert_eq!(l.events[0].kind, EventKind::Born);
        assert_eq!(l.occurrences.len(), 1);
    }

    #[test]
    fn re_emergence_depends_on_strategy() {
        let p = plan(&[&[&["x", "y"], &["a", "b"]], &[&["a", "b"]], &[&["x", "y"], &["a", "b"]]]);
        let hist = align(&lemma("w"), &p, AlignmentStrategy::AllHistory);
        assert_eq!(lineage_of(&hist, 0, "x"), lineage_of(&hist, 2, "x"));
        assert_eq!(hist.lineages.len(), 2);
        let prev = align(&lemma("w"), &p, AlignmentStrategy::PreviousSlice);
        assert_ne!(lineage_of(&prev, 0, "x"), lineage_of(&prev, 2, "x"));
        assert_eq!(prev.lineages.len(), 3);
    }

    #[test]
    fn split_keeps_one_inheritor() {
        let p = plan(&[&[&["a", "b", "c", "d", "e"]], &[&["a", "b", "c"], &["d", "e"]]]);
        let r = align(&lemma("w"), &p, AlignmentStrategy::PreviousSlice);
        let original = lineage_of(&r, 0, "a");
        assert_eq!(lineage_of(&r, 1, "a"), original);
        let loser = r.lineage(lineage_of(&r, 1, "d")).unwrap();
        assert_ne!(loser.id, original);
        assert_eq!(loser.events[1].kind, EventKind::MergedInto);
        assert_eq!(loser.events[1].detail, original.to_string());
    }

    #[test]
    fn split_tie_goes_to_larger_community() {
        // Both halves overlap the predecessor by 2; the 3-member one wins.
        let p = plan(&[&[&["a", "b", "c", "d"]], &[&["a", "b", "x"], &["c", "d"]]]);
        let r = align(&lemma("w"), &p, AlignmentStrategy::PreviousSlice);
        assert_eq!(lineage_of(&r, 1, "x"), lineage_of(&r, 0, "a"));
        assert_ne!(lineage_of(&r, 1, "c"), lineage_of(&r, 0, "a"));
    }

    #[test]
    fn history_prefers_most_recent_on_tie() {
        // {a,c} overlaps {a,b}@0 and {c,d}@1 by one member each.
        let p = plan(&[&[&["a", "b"]], &[&["c", "d"]], &[&["a", "c"]]]);
        let r = align(&lemma("w"), &p, AlignmentStrategy::AllHistory);
        assert_eq!(lineage_of(&r, 2, "a"), lineage_of(&r, 1, "c"));
        assert_ne!(lineage_of(&r, 2, "a"), lineage_of(&r, 0, "a"));
    }

    #[test]
    fn ties_prefer_larger_then_smallest_member() {
        // {a,c,x} overlaps {a,b,q}, {c,d} and {x,y} by one member each.
        let p = plan(&[&[&["a", "b", "q"], &["c", "d"], &["x", "y"]], &[&["a", "c", "x"]]]);
        let r = align(&lemma("w"), &p, AlignmentStrategy::PreviousSlice);
        assert_eq!(lineage_of(&r, 1, "a"), lineage_of(&r, 0, "a"));
        let p = plan(&[&[&["c", "d"], &["x", "y"]], &[&["c", "x"]]]);
        let r = align(&lemma("w"), &p, AlignmentStrategy::PreviousSlice);
        assert_eq!(lineage_of(&r, 1, "c"), lineage_of(&r, 0, "c"));
    }

    #[test]
    fn empty_input() {
        let r = align(&lemma("w"), &BTreeMap::new(), AlignmentStrategy::PreviousSlice);
        assert!(r.lineages.is_empty() && r.assignment.is_empty());
        assert!(lineage_report(&r).is_empty());
    }

    #[test]
    fn refine_sweeps_ephemeral() {
        let p = plan(&[
            &[&["a", "b"], &["p"], &["q"]],
            &[&["a", "b"], &["r"]],
            &[&["c", "d"], &["s"], &["t"]],
            &[&["c", "d", "e"]],
        ]);
        let raw = align(&lemma("w"), &p, AlignmentStrategy::PreviousSlice);
        assert_eq!(raw.lineage_count(true), 7);
        let refined = refine(&raw);
        assert_eq!(refined.lineage_count(false), 2);
        assert_eq!(refined.lineage_count(true), 3);
        let residual = refined.residual().unwrap();
        assert_eq!(residual.id, LineageId::RESIDUAL);
        let sizes: Vec<usize> = refined.slices.iter().map(|s| residual.size_at(s)).collect();
        assert_eq!(sizes, vec![2, 1, 2, 0]);
        for s in &refined.slices {
            assert_eq!(raw.total_members(s), refined.total_members(s));
        }
        assert!(refined
            .assignment
            .iter()
            .filter(|((s, _), _)| s.ordinal == 0)
            .filter(|(_, id)| id.is_residual())
            .count()
            == 2);
        // Refinement is idempotent.
        assert_eq!(refine(&refined), refined);
    }

    #[test]
    fn residual_exists_when_nothing_is_swept() {
        let p = plan(&[&[&["a"]], &[&["a"]]]);
        let refined = refine(&align(&lemma("w"), &p, AlignmentStrategy::PreviousSlice));
        assert_eq!(refined.lineage_count(true), 2);
        assert!(refined.residual().unwrap().occurrences.is_empty());
    }

    #[test]
    fn report_rows() {
        let p = plan(&[&[&["a", "b"]], &[&["a", "b", "c"]], &[&["a", "b", "c", "d"]]]);
        let r = align(&lemma("w"), &p, AlignmentStrategy::PreviousSlice);
        let rows = lineage_report(&r);
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].sizes, vec![2, 3, 4]);
        assert_eq!(rows[0].first_slice.as_ref().unwrap().label, "1980");
        assert_eq!(rows[0].last_slice.as_ref().unwrap().label, "1990");
        let kinds: Vec<_> = rows[0].events.iter().map(|e| e.kind).collect();
        assert_eq!(kinds, vec![EventKind::Born, EventKind::Matched, EventKind::Matched]);
    }

    #[test]
    fn lineage_id_text_round_trip() {
        for id in [LineageId::RESIDUAL, LineageId(1), LineageId(42)] {
            assert_eq!(id.to_string().parse::<LineageId>().unwrap(), id);
        }
        assert!("L0".parse::<LineageId>().is_err());
        assert!("x".parse::<LineageId>().is_err());
    }
}
