//! Per-slice neighbor tables, pairwise similarities and token counts.
//!
//! All evidence enters the toolkit through the line-delimited JSON files
//! parsed here. Records are validated on load and never mutated afterwards.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lemma::{Lemma, LemmaError, SliceId};

/// Which neighbor list of a record an error refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ListKind {
    Dist,
    Sub,
}

impl std::fmt::Display for ListKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ListKind::Dist => "dist",
            ListKind::Sub => "sub",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RecordError {
    #[error(transparent)]
    Lemma(#[from] LemmaError),
    #[error("{list} list contains the record's own word {word:?} (self-neighbor)")]
    SelfNeighbor { list: ListKind, word: String },
    #[error("{list} list is not in canonical order at position {position} (score desc, lemma asc)")]
    Unsorted { list: ListKind, position: usize },
    #[error("{list} list contains {lemma:?} more than once")]
    DuplicateNeighbor { list: ListKind, lemma: String },
    #[error("cosine {value} for {lemma:?} is outside [-1, 1]")]
    CosineOutOfRange { lemma: String, value: f64 },
    #[error("substitution frequency for {lemma:?} must be at least 1")]
    ZeroFrequency { lemma: String },
    #[error("self-pair ({0:?}, {0:?}) is not allowed")]
    SelfPair(String),
    #[error("pair ({0:?}, {1:?}) given more than once")]
    DuplicatePair(String, String),
    #[error("count {count} for {lemma:?} exceeds token total {total}")]
    CountExceedsTotal { lemma: String, count: u64, total: u64 },
    #[error("token total is 0 but counts are non-empty")]
    CountsWithoutTokens,
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: malformed record: {message}")]
    Malformed {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}:{line}: {source}")]
    Invalid {
        path: PathBuf,
        line: usize,
        #[source]
        source: RecordError,
    },
    #[error("{path}:{line}: record is for slice {found:?}, expected {expected:?}")]
    SliceMismatch {
        path: PathBuf,
        line: usize,
        expected: String,
        found: String,
    },
    #[error("{path}:{line}: slice {label:?} is not part of the configured chronology")]
    UnknownSlice {
        path: PathBuf,
        line: usize,
        label: String,
    },
    #[error("{path}:{line}: duplicate record for ({slice}, {key})")]
    Duplicate {
        path: PathBuf,
        line: usize,
        slice: String,
        key: String,
    },
}

impl StoreError {
    /// 1-based line number for line-level errors.
    pub fn line(&self) -> Option<usize> {
        match self {
            StoreError::Io { .. } => None,
            StoreError::Malformed { line, .. }
            | StoreError::Invalid { line, .. }
            | StoreError::SliceMismatch { line, .. }
            | StoreError::UnknownSlice { line, .. }
            | StoreError::Duplicate { line, .. } => Some(*line),
        }
    }
}

/// Canonical neighbor order: higher score first, ties by lemma ascending.
pub fn cmp_by_cosine(a: &(Lemma, f64), b: &(Lemma, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0))
}

pub fn cmp_by_frequency(a: &(Lemma, u64), b: &(Lemma, u64)) -> Ordering {
    b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0))
}

/// Ranked neighbors of one word in one slice.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborRecord {
    pub slice: SliceId,
    pub word: Lemma,
    /// Distributional neighbors with cosine scores.
    pub dist: Vec<(Lemma, f64)>,
    /// Substitution neighbors with prediction frequencies.
    pub sub: Vec<(Lemma, u64)>,
}

impl NeighborRecord {
    /// Builds a record, checking every list invariant.
    pub fn new(
        slice: SliceId,
        word: Lemma,
        dist: Vec<(Lemma, f64)>,
        sub: Vec<(Lemma, u64)>,
    ) -> Result<Self, RecordError> {
        for (lemma, cos) in &dist {
            if !(-1.0..=1.0).contains(cos) {
                return Err(RecordError::CosineOutOfRange {
                    lemma: lemma.to_string(),
                    value: *cos,
                });
            }
        }
        for (lemma, freq) in &sub {
            if *freq == 0 {
                return Err(RecordError::ZeroFrequency {
                    lemma: lemma.to_string(),
                });
            }
        }
        check_list(&word, ListKind::Dist, &dist, cmp_by_cosine)?;
        check_list(&word, ListKind::Sub, &sub, cmp_by_frequency)?;
        Ok(NeighborRecord {
            slice,
            word,
            dist,
            sub,
        })
    }
}

fn check_list<T>(
    word: &Lemma,
    list: ListKind,
    entries: &[(Lemma, T)],
    cmp: fn(&(Lemma, T), &(Lemma, T)) -> Ordering,
) -> Result<(), RecordError> {
    if entries.iter().any(|(l, _)| l == word) {
        return Err(RecordError::SelfNeighbor {
            list,
            word: word.to_string(),
        });
    }
    let mut seen = std::collections::HashSet::with_capacity(entries.len());
    for (l, _) in entries {
        if !seen.insert(l) {
            return Err(RecordError::DuplicateNeighbor {
                list,
                lemma: l.to_string(),
            });
        }
    }
    if let Some(position) = entries
        .windows(2)
        .position(|w| cmp(&w[0], &w[1]) == Ordering::Greater)
    {
        return Err(RecordError::Unsorted {
            list,
            position: position + 1,
        });
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNeighborLine {
    slice: String,
    word: String,
    #[serde(default)]
    dist: Vec<(String, f64)>,
    #[serde(default)]
    sub: Vec<(String, u64)>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPairLine {
    slice: String,
    a: String,
    b: String,
    cos: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCountsLine {
    slice: String,
    total: u64,
    #[serde(default)]
    counts: BTreeMap<String, u64>,
}

fn open(path: &Path) -> Result<BufReader<File>, StoreError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|source| StoreError::Io {
            path: path.to_path_buf(),
            source,
        })
}

/// Calls `handle` for each non-blank line with its 1-based number.
/// Stops at the first I/O error; `handle` decides whether to keep going.
fn for_each_line(
    path: &Path,
    mut handle: impl FnMut(usize, &str) -> Result<(), StoreError>,
) -> Result<(), StoreError> {
    let reader = open(path)?;
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| StoreError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        handle(i + 1, &line)?;
    }
    Ok(())
}

fn parse_json<T: for<'de> Deserialize<'de>>(
    path: &Path,
    line_no: usize,
    line: &str,
) -> Result<T, StoreError> {
    serde_json::from_str(line).map_err(|e| StoreError::Malformed {
        path: path.to_path_buf(),
        line: line_no,
        message: e.to_string(),
    })
}

fn parse_neighbor_line(
    path: &Path,
    line_no: usize,
    line: &str,
    slice: &SliceId,
) -> Result<NeighborRecord, StoreError> {
    let raw: RawNeighborLine = parse_json(path, line_no, line)?;
    if raw.slice != slice.label {
        return Err(StoreError::SliceMismatch {
            path: path.to_path_buf(),
            line: line_no,
            expected: slice.label.clone(),
            found: raw.slice,
        });
    }
    let invalid = |source: RecordError| StoreError::Invalid {
        path: path.to_path_buf(),
        line: line_no,
        source,
    };
    let word = Lemma::new(raw.word).map_err(|e| invalid(e.into()))?;
    let dist = raw
        .dist
        .into_iter()
        .map(|(l, c)| Lemma::new(l).map(|l| (l, c)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| invalid(e.into()))?;
    let sub = raw
        .sub
        .into_iter()
        .map(|(l, f)| Lemma::new(l).map(|l| (l, f)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| invalid(e.into()))?;
    NeighborRecord::new(slice.clone(), word, dist, sub).map_err(invalid)
}

/// Loads and validates one slice's neighbor file.
///
/// Fails on the first bad line; duplicate words within the file are rejected.
pub fn load_neighbors(path: &Path, slice: &SliceId) -> Result<Vec<NeighborRecord>, StoreError> {
    let mut records = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for_each_line(path, |line_no, line| {
        let record = parse_neighbor_line(path, line_no, line, slice)?;
        if !seen.insert(record.word.clone()) {
            return Err(StoreError::Duplicate {
                path: path.to_path_buf(),
                line: line_no,
                slice: slice.label.clone(),
                key: record.word.to_string(),
            });
        }
        records.push(record);
        Ok(())
    })?;
    Ok(records)
}

/// Like [`load_neighbors`] but keeps scanning after bad lines and returns
/// every problem found.
pub fn validate_neighbors(path: &Path, slice: &SliceId) -> Vec<StoreError> {
    let mut errors = Vec::new();
    let mut seen = std::collections::HashSet::new();
    let scan = for_each_line(path, |line_no, line| {
        match parse_neighbor_line(path, line_no, line, slice) {
            Ok(record) => {
                if !seen.insert(record.word.clone()) {
                    errors.push(StoreError::Duplicate {
                        path: path.to_path_buf(),
                        line: line_no,
                        slice: slice.label.clone(),
                        key: record.word.to_string(),
                    });
                }
            }
            Err(e) => errors.push(e),
        }
        Ok(())
    });
    if let Err(e) = scan {
        errors.push(e);
    }
    errors
}

/// Immutable index of neighbor records keyed by (slice, word).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NeighborStore {
    records: BTreeMap<SliceId, BTreeMap<Lemma, NeighborRecord>>,
}

impl NeighborStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a store from already-validated records. Returns the first
    /// duplicate (slice, word) key as an error.
    pub fn from_records(
        records: impl IntoIterator<Item = NeighborRecord>,
    ) -> Result<Self, (SliceId, Lemma)> {
        let mut store = NeighborStore::new();
        for record in records {
            store.insert(record)?;
        }
        Ok(store)
    }

    pub fn insert(&mut self, record: NeighborRecord) -> Result<(), (SliceId, Lemma)> {
        let slice = self.records.entry(record.slice.clone()).or_default();
        if slice.contains_key(&record.word) {
            return Err((record.slice, record.word));
        }
        slice.insert(record.word.clone(), record);
        Ok(())
    }

    /// Loads one slice file into the store.
    pub fn load_file(&mut self, path: &Path, slice: &SliceId) -> Result<usize, StoreError> {
        let records = load_neighbors(path, slice)?;
        let n = records.len();
        for record in records {
            self.insert(record).map_err(|(s, w)| StoreError::Duplicate {
                path: path.to_path_buf(),
                line: 0,
                slice: s.label,
                key: w.to_string(),
            })?;
        }
        Ok(n)
    }

    pub fn record(&self, slice: &SliceId, word: &Lemma) -> Option<&NeighborRecord> {
        self.records.get(slice).and_then(|m| m.get(word))
    }

    pub fn contains(&self, slice: &SliceId, word: &Lemma) -> bool {
        self.record(slice, word).is_some()
    }

    /// Top-`k_dist` distributional and top-`k_sub` substitution neighbors.
    /// Absent words yield two empty lists.
    pub fn lookup(
        &self,
        slice: &SliceId,
        word: &Lemma,
        k_dist: usize,
        k_sub: usize,
    ) -> (Vec<Lemma>, Vec<Lemma>) {
        match self.record(slice, word) {
            None => (Vec::new(), Vec::new()),
            Some(r) => (
                r.dist.iter().take(k_dist).map(|(l, _)| l.clone()).collect(),
                r.sub.iter().take(k_sub).map(|(l, _)| l.clone()).collect(),
            ),
        }
    }

    pub fn slices(&self) -> impl Iterator<Item = &SliceId> {
        self.records.keys()
    }

    pub fn records(&self, slice: &SliceId) -> impl Iterator<Item = &NeighborRecord> {
        self.records.get(slice).into_iter().flat_map(|m| m.values())
    }

    pub fn len(&self) -> usize {
        self.records.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl NeighborRecord {
    /// The record as one line of a neighbor file, without the newline.
    pub fn to_json_line(&self) -> String {
        let raw = RawNeighborLine {
            slice: self.slice.label.clone(),
            word: self.word.to_string(),
            dist: self.dist.iter().map(|(l, c)| (l.to_string(), *c)).collect(),
            sub: self.sub.iter().map(|(l, f)| (l.to_string(), *f)).collect(),
        };
        serde_json::to_string(&raw).expect("plain data serializes")
    }
}

/// Contextual cosine similarities for unordered lemma pairs in one slice.
#[derive(Debug, Clone, PartialEq)]
pub struct PairSimilarity {
    pub slice: SliceId,
    pairs: BTreeMap<(Lemma, Lemma), f64>,
}

fn pair_key(a: &Lemma, b: &Lemma) -> (Lemma, Lemma) {
    if a <= b {
        (a.clone(), b.clone())
    } else {
        (b.clone(), a.clone())
    }
}

impl PairSimilarity {
    pub fn new(slice: SliceId) -> Self {
        PairSimilarity {
            slice,
            pairs: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, a: Lemma, b: Lemma, cos: f64) -> Result<(), RecordError> {
        if a == b {
            return Err(RecordError::SelfPair(a.to_string()));
        }
        if !(-1.0..=1.0).contains(&cos) {
            return Err(RecordError::CosineOutOfRange {
                lemma: format!("{a}|{b}"),
                value: cos,
            });
        }
        let key = pair_key(&a, &b);
        if self.pairs.contains_key(&key) {
            return Err(RecordError::DuplicatePair(key.0.to_string(), key.1.to_string()));
        }
        self.pairs.insert(key, cos);
        Ok(())
    }

    /// Order-insensitive lookup.
    pub fn get(&self, a: &Lemma, b: &Lemma) -> Option<f64> {
        self.pairs.get(&pair_key(a, b)).copied()
    }

    /// Pairs in (a, b) order with a < b.
    pub fn iter(&self) -> impl Iterator<Item = (&Lemma, &Lemma, f64)> {
        self.pairs.iter().map(|((a, b), c)| (a, b, *c))
    }

    /// The pairs as the lines of a similarity file, each ending in a newline.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for (a, b, cos) in self.iter() {
            let raw = RawPairLine {
                slice: self.slice.label.clone(),
                a: a.to_string(),
                b: b.to_string(),
                cos,
            };
            out.push_str(&serde_json::to_string(&raw).expect("plain data serializes"));
            out.push('\n');
        }
        out
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

pub fn load_similarities(path: &Path, slice: &SliceId) -> Result<PairSimilarity, StoreError> {
    let mut sims = PairSimilarity::new(slice.clone());
    for_each_line(path, |line_no, line| {
        let raw: RawPairLine = parse_json(path, line_no, line)?;
        if raw.slice != slice.label {
            return Err(StoreError::SliceMismatch {
                path: path.to_path_buf(),
                line: line_no,
                expected: slice.label.clone(),
                found: raw.slice,
            });
        }
        let invalid = |source: RecordError| StoreError::Invalid {
            path: path.to_path_buf(),
            line: line_no,
            source,
        };
        let a = Lemma::new(raw.a).map_err(|e| invalid(e.into()))?;
        let b = Lemma::new(raw.b).map_err(|e| invalid(e.into()))?;
        sims.insert(a, b, raw.cos).map_err(invalid)
    })?;
    Ok(sims)
}

/// Token counts for one slice.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceCounts {
    pub slice: SliceId,
    pub token_total: u64,
    pub counts: BTreeMap<Lemma, u64>,
}

impl SliceCounts {
    pub fn new(
        slice: SliceId,
        token_total: u64,
        counts: BTreeMap<Lemma, u64>,
    ) -> Result<Self, RecordError> {
        if token_total == 0 && !counts.is_empty() {
            return Err(RecordError::CountsWithoutTokens);
        }
        if let Some((lemma, &count)) = counts.iter().find(|(_, &c)| c > token_total) {
            return Err(RecordError::CountExceedsTotal {
                lemma: lemma.to_string(),
                count,
                total: token_total,
            });
        }
        Ok(SliceCounts {
            slice,
            token_total,
            counts,
        })
    }
}

impl SliceCounts {
    /// The counts as one line of a counts file, without the newline.
    pub fn to_json_line(&self) -> String {
        let raw = RawCountsLine {
            slice: self.slice.label.clone(),
            total: self.token_total,
            counts: self.counts.iter().map(|(l, c)| (l.to_string(), *c)).collect(),
        };
        serde_json::to_string(&raw).expect("plain data serializes")
    }
}

/// Loads a counts file holding one line per slice. Labels are resolved
/// against `chronology`; the result is ordered by ordinal.
pub fn load_counts(path: &Path, chronology: &[SliceId]) -> Result<Vec<SliceCounts>, StoreError> {
    let mut out: BTreeMap<SliceId, SliceCounts> = BTreeMap::new();
    for_each_line(path, |line_no, line| {
        let raw: RawCountsLine = parse_json(path, line_no, line)?;
        let slice = chronology
            .iter()
            .find(|s| s.label == raw.slice)
            .cloned()
            .ok_or_else(|| StoreError::UnknownSlice {
                path: path.to_path_buf(),
                line: line_no,
                label: raw.slice.clone(),
            })?;
        let invalid = |source: RecordError| StoreError::Invalid {
            path: path.to_path_buf(),
            line: line_no,
            source,
        };
        let counts = raw
            .counts
            .into_iter()
            .map(|(l, c)| Lemma::new(l).map(|l| (l, c)))
            .collect::<Result<BTreeMap<_, _>, _>>()
            .map_err(|e| invalid(e.into()))?;
        let counts = SliceCounts::new(slice.clone(), raw.total, counts).map_err(invalid)?;
        if out.contains_key(&slice) {
            return Err(StoreError::Duplicate {
                path: path.to_path_buf(),
                line: line_no,
                slice: slice.label,
                key: "counts".into(),
            });
        }
        out.insert(slice, counts);
        Ok(())
    })?;
    Ok(out.into_values().collect())
}

/// Per-slice share of `word` among all tokens; 0 for empty slices or
/// absent words.
pub fn relative_frequency(counts: &[SliceCounts], word: &Lemma) -> Vec<(SliceId, f64)> {
    counts
        .iter()
        .map(|c| {
            let freq = match (c.token_total, c.counts.get(word)) {
                (0, _) | (_, None) => 0.0,
                (total, Some(&n)) => n as f64 / total as f64,
            };
            (c.slice.clone(), freq)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lemma::lemma;
    use std::io::Write;

    fn s1980() -> SliceId {
        SliceId::new(0, "1980")
    }

    fn write_lines(lines: &[&str]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        for l in lines {
            writeln!(f, "{l}").unwrap();
        }
        f
    }

    #[test]
    fn single_valid_line() {
        let f = write_lines(&[
            r#"{"slice":"1980","word":"trump","dist":[["diamond",0.71],["heart",0.64]],"sub":[["heart",42],["trick",17]]}"#,
        ]);
        let mut store = NeighborStore::new();
        assert_eq!(store.load_file(f.path(), &s1980()).unwrap(), 1);
        assert_eq!(store.len(), 1);
        let (d, s) = store.lookup(&s1980(), &lemma("trump"), 5, 1);
        assert_eq!(d, vec![lemma("diamond"), lemma("heart")]);
        assert_eq!(s, vec![lemma("heart")]);
    }

    #[test]
    fn written_lines_load_back() {
        let rec = NeighborRecord::new(
            s1980(),
            lemma("trump"),
            vec![(lemma("diamond"), 0.71), (lemma("heart"), 0.64)],
            vec![(lemma("heart"), 42)],
        )
        .unwrap();
        let mut sims = PairSimilarity::new(s1980());
        sims.insert(lemma("heart"), lemma("diamond"), 0.88).unwrap();
        let counts = SliceCounts::new(s1980(), 100, BTreeMap::from([(lemma("trump"), 3)])).unwrap();

        let f = write_lines(&[&rec.to_json_line()]);
        assert_eq!(load_neighbors(f.path(), &s1980()).unwrap(), vec![rec]);
        let f = write_lines(&[sims.to_json_lines().trim_end()]);
        assert_eq!(load_similarities(f.path(), &s1980()).unwrap(), sims);
        let f = write_lines(&[&counts.to_json_line()]);
        assert_eq!(load_counts(f.path(), &[s1980()]).unwrap(), vec![counts]);
    }

    #[test]
    fn self_neighbor_is_rejected_with_line() {
        let f = write_lines(&[
            r#"{"slice":"1980","word":"card","dist":[["deck",0.5]]}"#,
            r#"{"slice":"1980","word":"trump","dist":[["trump",0.9]]}"#,
        ]);
        let err = load_neighbors(f.path(), &s1980()).unwrap_err();
        assert_eq!(err.line(), Some(2));
        assert!(err.to_string().contains("self-neighbor"), "{err}");
    }

    #[test]
    fn rejects_unsorted_out_of_range_and_duplicates() {
        let unsorted = write_lines(&[r#"{"slice":"1980","word":"w","dist":[["a",0.1],["b",0.2]]}"#]);
        assert!(matches!(
            load_neighbors(unsorted.path(), &s1980()),
            Err(StoreError::Invalid { source: RecordError::Unsorted { list: ListKind::Dist, .. }, .. })
        ));
        let tie_wrong = write_lines(&[r#"{"slice":"1980","word":"w","sub":[["y",3],["x",3]]}"#]);
        assert!(matches!(
            load_neighbors(tie_wrong.path(), &s1980()),
            Err(StoreError::Invalid { source: RecordError::Unsorted { list: ListKind::Sub, .. }, .. })
        ));
        let range = write_lines(&[r#"{"slice":"1980","word":"w","dist":[["a",1.5]]}"#]);
        assert!(matches!(
            load_neighbors(range.path(), &s1980()),
            Err(StoreError::Invalid { source: RecordError::CosineOutOfRange { .. }, .. })
        ));
        let dup = write_lines(&[
            r#"{"slice":"1980","word":"w"}"#,
            r#"{"slice":"1980","word":"w"}"#,
        ]);
        assert!(matches!(
            load_neighbors(dup.path(), &s1980()),
            Err(StoreError::Duplicate { line: 2, .. })
        ));
        let malformed = write_lines(&[r#"{"slice":"1980","word":"w""#]);
        assert!(matches!(
            load_neighbors(malformed.path(), &s1980()),
            Err(StoreError::Malformed { line: 1, .. })
        ));
        let other_slice = write_lines(&[r#"{"slice":"1985","word":"w"}"#]);
        assert!(matches!(
            load_neighbors(other_slice.path(), &s1980()),
            Err(StoreError::SliceMismatch { .. })
        ));
    }

    #[test]
    fn negative_cosines_are_legal() {
        let f = write_lines(&[r#"{"slice":"1980","word":"w","dist":[["a",-0.2],["b",-0.9]]}"#]);
        assert!(load_neighbors(f.path(), &s1980()).is_ok());
    }

    #[test]
    fn validate_collects_every_error() {
        let f = write_lines(&[
            r#"{"slice":"1980","word":"w","dist":[["w",0.5]]}"#,
            r#"{"slice":"1980","word":"ok"}"#,
            r#"not json"#,
        ]);
        let errors = validate_neighbors(f.path(), &s1980());
        let lines: Vec<_> = errors.iter().filter_map(StoreError::line).collect();
        assert_eq!(lines, vec![1, 3]);
    }

    #[test]
    fn absent_word_yields_empty_lists() {
        let store = NeighborStore::new();
        assert_eq!(store.lookup(&s1980(), &lemma("x"), 3, 6), (vec![], vec![]));
    }

    #[test]
    fn lookup_prefixes() {
        let record = NeighborRecord::new(
            s1980(),
            lemma("w"),
            vec![(lemma("a"), 0.9), (lemma("b"), 0.8), (lemma("c"), 0.7)],
            vec![(lemma("x"), 10), (lemma("y"), 10), (lemma("z"), 3)],
        )
        .unwrap();
        let store = NeighborStore::from_records([record]).unwrap();
        let (d, s) = store.lookup(&s1980(), &lemma("w"), 2, 2);
        assert_eq!(d, vec![lemma("a"), lemma("b")]);
        assert_eq!(s, vec![lemma("x"), lemma("y")]);
    }

    #[test]
    fn pair_similarity_is_order_insensitive() {
        let mut sims = PairSimilarity::new(s1980());
        sims.insert(lemma("heart"), lemma("diamond"), 0.88).unwrap();
        assert_eq!(sims.get(&lemma("diamond"), &lemma("heart")), Some(0.88));
        assert!(matches!(
            sims.insert(lemma("diamond"), lemma("heart"), 0.1),
            Err(RecordError::DuplicatePair(..))
        ));
        assert!(matches!(
            sims.insert(lemma("a"), lemma("a"), 0.1),
            Err(RecordError::SelfPair(_))
        ));
    }

    #[test]
    fn similarity_file_loads() {
        let f = write_lines(&[r#"{"slice":"1980","a":"diamond","b":"heart","cos":0.88}"#]);
        let sims = load_similarities(f.path(), &s1980()).unwrap();
        assert_eq!(sims.len(), 1);
    }

    #[test]
    fn counts_invariants() {
        let slice = s1980();
        let mut c = BTreeMap::new();
        c.insert(lemma("w"), 60);
        assert!(matches!(
            SliceCounts::new(slice.clone(), 50, c.clone()),
            Err(RecordError::CountExceedsTotal { .. })
        ));
        assert!(matches!(
            SliceCounts::new(slice, 0, c),
            Err(RecordError::CountsWithoutTokens)
        ));
    }

    #[test]
    fn relative_frequency_basic() {
        let mut c = BTreeMap::new();
        c.insert(lemma("w"), 5);
        let counts = vec![
            SliceCounts::new(s1980(), 50, c).unwrap(),
            SliceCounts::new(SliceId::new(1, "1985"), 0, BTreeMap::new()).unwrap(),
        ];
        let rf = relative_frequency(&counts, &lemma("w"));
        assert_eq!(rf[0].1, 0.1);
        assert_eq!(rf[1].1, 0.0);
        assert_eq!(relative_frequency(&counts, &lemma("absent"))[0].1, 0.0);
    }

    #[test]
    fn counts_file_orders_by_chronology() {
        let f = write_lines(&[
            r#"{"slice":"1985","total":10,"counts":{"w":1}}"#,
            r#"{"slice":"1980","total":20,"counts":{"w":4}}"#,
        ]);
        let chronology = SliceId::chronology(&["1980", "1985"]);
        let counts = load_counts(f.path(), &chronology).unwrap();
        assert_eq!(counts[0].slice.label, "1980");
        assert_eq!(counts[1].token_total, 10);
        let bad = write_lines(&[r#"{"slice":"2050","total":1}"#]);
        assert!(matches!(
            load_counts(bad.path(), &chronology),
            Err(StoreError::UnknownSlice { .. })
        ));
    }
}
