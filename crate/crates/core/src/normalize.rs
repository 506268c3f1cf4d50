//! Field- and year-normalized citation scores.
//!
//! A reference cell holds every article of one subject category published in
//! one year. A record's score in a cell is its citation count divided by the
//! cell's mean count; records in several categories get the arithmetic mean of
//! their per-cell ratios over the categories the field scheme maps.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::sync::Arc;

use compact_str::CompactString;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{CorpusSnapshot, FieldScheme, PublicationRecord};
use crate::linking::{CitationIndex, WindowSpec};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NormalizeError {
    #[error("record {0:?} is not in the citation index")]
    UnknownRecord(String),
    #[error("no reference cell for category {category:?} in {pub_year}")]
    MissingCell { category: String, pub_year: i32 },
    #[error("cells were computed for window {cells}, not {requested}")]
    WindowMismatch { cells: WindowSpec, requested: WindowSpec },
    #[error("cannot write cell table: {0}")]
    Export(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellKey {
    pub category: CompactString,
    pub pub_year: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceCell {
    pub key: CellKey,
    pub n_papers: u64,
    pub citation_sum: u64,
    pub mean_citations: f64,
    pub all_zero: bool,
}

/// Reference cells of one snapshot under one citation window.
#[derive(Debug, Clone)]
pub struct CellTable {
    window: WindowSpec,
    scheme: Arc<FieldScheme>,
    cells: BTreeMap<CellKey, ReferenceCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalizedScore {
    pub record_id: CompactString,
    pub mncs: f64,
    pub cells: Vec<CellKey>,
    /// At least one contributing cell had a zero mean.
    pub zero_cell: bool,
}

/// Distinct categories of a record, in first-seen order.
fn distinct_categories(record: &PublicationRecord) -> Vec<&str> {
    let mut out: Vec<&str> = Vec::with_capacity(record.subject_categories.len());
    for c in &record.subject_categories {
        if !out.contains(&c.as_str()) {
            out.push(c);
        }
    }
    out
}

/// Categories a record is normalized over: the mapped ones, or all of them
/// when none is mapped.
fn scoring_categories<'r>(record: &'r PublicationRecord, scheme: &FieldScheme) -> Vec<&'r str> {
    let all = distinct_categories(record);
    let mapped: Vec<&str> = all.iter().copied().filter(|c| scheme.discipline_of(c).is_some()).collect();
    if mapped.is_empty() {
        all
    } else {
        mapped
    }
}

/// Builds one cell per (category, year) present in `snapshot`. A record in
/// several categories contributes its full count to each.
pub fn compute_cell_means(snapshot: &CorpusSnapshot, index: &CitationIndex, window: WindowSpec) -> Result<CellTable, NormalizeError> {
    let records = snapshot.records();
    let counts = citation_counts(records, index, window)?;
    let sums = records
        .par_iter()
        .zip(counts.par_iter())
        .fold(HashMap::<(&str, i32), (u64, u64)>::new, |mut acc, (r, &c)| {
            for cat in distinct_categories(r) {
                let e = acc.entry((cat, r.pub_year)).or_default();
                e.0 += 1;
                e.1 += c;
            }
            acc
        })
        .reduce(HashMap::new, |mut a, b| {
            for (k, v) in b {
                let e = a.entry(k).or_default();
                e.0 += v.0;
                e.1 += v.1;
            }
            a
        });
    let cells = sums
        .into_iter()
        .map(|((cat, year), (n, sum))| {
            let key = CellKey { category: cat.into(), pub_year: year };
            let cell = ReferenceCell {
                key: key.clone(),
                n_papers: n,
                citation_sum: sum,
                mean_citations: sum as f64 / n as f64,
                all_zero: sum == 0,
            };
            (key, cell)
        })
        .collect();
    Ok(CellTable { window, scheme: snapshot.shared_scheme(), cells })
}

/// Windowed citation count of every record, in snapshot order.
pub fn citation_counts(records: &[PublicationRecord], index: &CitationIndex, window: WindowSpec) -> Result<Vec<u64>, NormalizeError> {
    records
        .par_iter()
        .map(|r| {
            index
                .position(&r.record_id)
                .map(|p| index.citation_count_at(p, window).count)
                .ok_or_else(|| NormalizeError::UnknownRecord(r.record_id.to_string()))
        })
        .collect()
}

impl CellTable {
    pub fn window(&self) -> WindowSpec {
        self.window
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn get(&self, category: &str, pub_year: i32) -> Option<&ReferenceCell> {
        self.cells.get(&CellKey { category: category.into(), pub_year })
    }

    pub fn iter(&self) -> impl Iterator<Item = &ReferenceCell> {
        self.cells.values()
    }

    /// Score of a record whose windowed citation count is already known.
    /// Returns the score and whether a zero-mean cell contributed.
    pub fn score(&self, record: &PublicationRecord, citations: u64) -> Result<(f64, bool), NormalizeError> {
        let cats = scoring_categories(record, &self.scheme);
        let mut sum = 0.0;
        let mut zero_cell = false;
        for cat in &cats {
            let cell = self.get(cat, record.pub_year).ok_or_else(|| NormalizeError::MissingCell {
                category: cat.to_string(),
                pub_year: record.pub_year,
            })?;
            if cell.all_zero {
                zero_cell = true;
            } else {
                sum += citations as f64 / cell.mean_citations;
            }
        }
        Ok((sum / cats.len() as f64, zero_cell))
    }

    /// Writes `category,pub_year,n_papers,mean_citations`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), NormalizeError> {
        let err = |e: csv::Error| NormalizeError::Export(e.to_string());
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["category", "pub_year", "n_papers", "mean_citations"]).map_err(err)?;
        for c in self.cells.values() {
            w.write_record([
                c.key.category.to_string(),
                c.key.pub_year.to_string(),
                c.n_papers.to_string(),
                c.mean_citations.to_string(),
            ])
            .map_err(err)?;
        }
        w.flush().map_err(|e| NormalizeError::Export(e.to_string()))
    }
}

/// Normalized score of one record.
pub fn mncs(
    record: &PublicationRecord,
    cells: &CellTable,
    index: &CitationIndex,
    window: WindowSpec,
) -> Result<NormalizedScore, NormalizeError> {
    if cells.window != window {
        return Err(NormalizeError::WindowMismatch { cells: cells.window, requested: window });
    }
    let pos = index
        .position(&record.record_id)
        .ok_or_else(|| NormalizeError::UnknownRecord(record.record_id.to_string()))?;
    let citations = index.citation_count_at(pos, window).count;
    let (value, zero_cell) = cells.score(record, citations)?;
    Ok(NormalizedScore {
        record_id: record.record_id.clone(),
        mncs: value,
        cells: scoring_categories(record, &cells.scheme)
            .into_iter()
            .map(|c| CellKey { category: c.into(), pub_year: record.pub_year })
            .collect(),
        zero_cell,
    })
}

/// Scores of every record in `records`, in order.
pub fn mncs_values(records: &[PublicationRecord], cells: &CellTable, index: &CitationIndex) -> Result<Vec<f64>, NormalizeError> {
    let counts = citation_counts(records, index, cells.window)?;
    records.par_iter().zip(counts.par_iter()).map(|(r, &c)| cells.score(r, c).map(|s| s.0)).collect()
}
