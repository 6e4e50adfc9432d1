//! CSV tables and their JSON mirrors: lineages, distributions, size series
//! and relative frequencies.

use std::collections::BTreeMap;

use serde::Serialize;

use super::json::to_pretty;
use super::{ExportError, SCHEMA_VERSION};
use crate::align::{lineage_report, AlignmentResult, AlignmentStrategy, LineageId, LineageRow};
use crate::metrics::{distribution_series, undefined_slices, GraphTimeSeries, SizePoint};
use crate::lemma::{Lemma, SliceId};

fn finish(writer: csv::Writer<Vec<u8>>) -> Result<Vec<u8>, ExportError> {
    writer
        .into_inner()
        .map_err(|e| ExportError::Csv(csv::Error::from(e.into_error())))
}

fn events_text(row: &LineageRow) -> String {
    row.events
        .iter()
        .map(|e| {
            if e.detail.is_empty() {
                format!("{}@{}", e.kind, e.slice.label)
            } else {
                format!("{}@{}({})", e.kind, e.slice.label, e.detail)
            }
        })
        .collect::<Vec<_>>()
        .join(";")
}

/// One row per lineage with its size in every aligned slice.
pub fn lineage_csv(result: &AlignmentResult) -> Result<Vec<u8>, ExportError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["lineage_id".to_string(), "residual".into(), "first_slice".into(), "last_slice".into()];
    header.extend(result.slices.iter().map(|s| format!("size_{}", s.label)));
    header.push("events".into());
    w.write_record(&header)?;
    for row in lineage_report(result) {
        let mut rec = vec![
            row.lineage_id.to_string(),
            row.residual.to_string(),
            row.first_slice.as_ref().map_or(String::new(), |s| s.label.clone()),
            row.last_slice.as_ref().map_or(String::new(), |s| s.label.clone()),
        ];
        rec.extend(row.sizes.iter().map(usize::to_string));
        rec.push(events_text(&row));
        w.write_record(&rec)?;
    }
    finish(w)
}

#[derive(Serialize)]
struct LineageCounts {
    with_residual: usize,
    without_residual: usize,
}

#[derive(Serialize)]
struct SliceCommunities<'a> {
    slice: &'a SliceId,
    communities: usize,
}

#[derive(Serialize)]
struct LineageReportDoc<'a> {
    schema_version: u32,
    kind: &'static str,
    target: &'a Lemma,
    strategy: AlignmentStrategy,
    persistence_threshold: Option<usize>,
    slices: &'a [SliceId],
    lineage_count: LineageCounts,
    communities_per_slice: Vec<SliceCommunities<'a>>,
    lineages: Vec<LineageRow>,
}

pub fn lineage_json(result: &AlignmentResult) -> Result<Vec<u8>, ExportError> {
    let per_slice = result.communities_per_slice();
    to_pretty(&LineageReportDoc {
        schema_version: SCHEMA_VERSION,
        kind: "lineage_report",
        target: &result.target,
        strategy: result.strategy,
        persistence_threshold: result.persistence_threshold,
        slices: &result.slices,
        lineage_count: LineageCounts {
            with_residual: result.lineage_count(true),
            without_residual: result.lineage_count(false),
        },
        communities_per_slice: per_slice
            .iter()
            .map(|(slice, communities)| SliceCommunities {
                slice,
                communities: *communities,
            })
            .collect(),
        lineages: lineage_report(result),
    })
}

/// `slice,lineage_id,size,mass` for every defined slice and every lineage,
/// with zero rows for lineages absent from a slice.
pub fn distribution_csv(result: &AlignmentResult) -> Result<Vec<u8>, ExportError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["slice", "lineage_id", "size", "mass"])?;
    for d in distribution_series(result) {
        for lineage in &result.lineages {
            let size = d.sizes.get(&lineage.id).copied().unwrap_or(0);
            let mass = d.mass.get(&lineage.id).copied().unwrap_or(0.0);
            w.write_record([
                d.slice.label.clone(),
                lineage.id.to_string(),
                size.to_string(),
                mass.to_string(),
            ])?;
        }
    }
    finish(w)
}

#[derive(Serialize)]
struct DistributionPoint<'a> {
    slice: &'a SliceId,
    total: usize,
    sizes: BTreeMap<LineageId, usize>,
    mass: BTreeMap<LineageId, f64>,
}

#[derive(Serialize)]
struct DistributionDoc<'a> {
    schema_version: u32,
    kind: &'static str,
    target: &'a Lemma,
    strategy: AlignmentStrategy,
    lineages: Vec<LineageId>,
    series: Vec<DistributionPoint<'a>>,
    undefined_slices: Vec<SliceId>,
}

pub fn distribution_json(result: &AlignmentResult) -> Result<Vec<u8>, ExportError> {
    let lineages: Vec<LineageId> = result.lineages.iter().map(|l| l.id).collect();
    let series = distribution_series(result);
    to_pretty(&DistributionDoc {
        schema_version: SCHEMA_VERSION,
        kind: "distribution_series",
        target: &result.target,
        strategy: result.strategy,
        series: series
            .iter()
            .map(|d| DistributionPoint {
                slice: &d.slice,
                total: d.total,
                sizes: lineages.iter().map(|&id| (id, d.sizes.get(&id).copied().unwrap_or(0))).collect(),
                mass: lineages.iter().map(|&id| (id, d.mass.get(&id).copied().unwrap_or(0.0))).collect(),
            })
            .collect(),
        lineages,
        undefined_slices: undefined_slices(result),
    })
}

pub fn series_csv(series: &GraphTimeSeries) -> Result<Vec<u8>, ExportError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["slice", "nodes", "edges"])?;
    for (slice, p) in &series.points {
        w.write_record([slice.label.clone(), p.nodes.to_string(), p.edges.to_string()])?;
    }
    finish(w)
}

#[derive(Serialize)]
struct SeriesPoint<'a> {
    slice: &'a SliceId,
    #[serde(flatten)]
    size: SizePoint,
}

#[derive(Serialize)]
struct SeriesDoc<'a> {
    schema_version: u32,
    kind: &'static str,
    target: &'a Lemma,
    points: Vec<SeriesPoint<'a>>,
    peak: Option<&'a SliceId>,
}

pub fn series_json(series: &GraphTimeSeries) -> Result<Vec<u8>, ExportError> {
    to_pretty(&SeriesDoc {
        schema_version: SCHEMA_VERSION,
        kind: "size_series",
        target: &series.target,
        points: series
            .points
            .iter()
            .map(|(slice, size)| SeriesPoint { slice, size: *size })
            .collect(),
        peak: series.peak(),
    })
}

/// `slice,target,relative_frequency` for one or more targets.
pub fn frequency_csv(rows: &[(Lemma, Vec<(SliceId, f64)>)]) -> Result<Vec<u8>, ExportError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["slice", "target", "relative_frequency"])?;
    for (target, points) in rows {
        for (slice, f) in points {
            w.write_record([slice.label.clone(), target.to_string(), f.to_string()])?;
        }
    }
    finish(w)
}
