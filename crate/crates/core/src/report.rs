//! Plot-ready report tables.
//!
//! One CSV line per (row, group). Floats use the shortest representation that
//! parses back to the same value, so output is exact and byte-stable.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use thiserror::Error;

use crate::analysis::AnalysisMatrix;

pub const REPORT_HEADER: [&str; 12] = [
    "discipline",
    "pub_year",
    "ranking",
    "outcome",
    "window",
    "group",
    "width_pct",
    "share_pct",
    "density",
    "gini",
    "n_papers",
    "total_outcome",
];

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("the analysis matrix has no rows")]
    EmptyMatrix,
    #[error("cannot write report: {0}")]
    Io(#[from] io::Error),
    #[error("cannot write report: {0}")]
    Csv(#[from] csv::Error),
    #[error("invalid matrix file: {0}")]
    Json(#[from] serde_json::Error),
}

/// Writes the report CSV for `matrix` in key order.
pub fn write_report<W: Write>(matrix: &AnalysisMatrix, writer: W) -> Result<(), ReportError> {
    if matrix.is_empty() {
        return Err(ReportError::EmptyMatrix);
    }
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(REPORT_HEADER)?;
    let mut rows: Vec<_> = matrix.rows.iter().collect();
    rows.sort_by_key(|r| r.key);
    for row in rows {
        let k = &row.key;
        let b = &row.breakdown;
        let window = k.outcome.window().map_or_else(|| "none".to_string(), |w| w.to_string());
        for g in 0..b.shares.len() {
            w.write_record([
                k.scope.to_string(),
                k.year.to_string(),
                k.ranking.to_string(),
                k.outcome.as_str().to_string(),
                window.clone(),
                b.labels[g].clone(),
                b.widths[g].to_string(),
                b.shares[g].to_string(),
                b.densities[g].to_string(),
                b.gini.to_string(),
                row.n_papers.to_string(),
                b.total_outcome.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_report_file(matrix: &AnalysisMatrix, path: &Path) -> Result<(), ReportError> {
    let mut out = BufWriter::new(File::create(path)?);
    write_report(matrix, &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn write_matrix_json<W: Write>(matrix: &AnalysisMatrix, writer: W) -> Result<(), ReportError> {
    serde_json::to_writer_pretty(writer, matrix)?;
    Ok(())
}

pub fn read_matrix_json<R: io::Read>(reader: R) -> Result<AnalysisMatrix, ReportError> {
    Ok(serde_json::from_reader(reader)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{AnalysisRow, OutcomeKind, Ranking, RowKey, Scope, YearKey};
    use crate::inequality::{percentile_shares, CutSpec};
    use crate::linking::WindowSpec;

    fn matrix() -> AnalysisMatrix {
        let b = percentile_shares(&[1.0, 1.0, 1.0, 7.0], &CutSpec::default()).unwrap();
        AnalysisMatrix {
            rows: vec![AnalysisRow {
                key: RowKey {
                    scope: Scope::Total,
                    year: YearKey::Year(2000),
                    ranking: Ranking::SelfRank,
                    outcome: OutcomeKind::TimesCited(WindowSpec::three_year()),
                },
                n_papers: 4,
                n_missing: 0,
                breakdown: b,
            }],
            notices: vec![],
        }
    }

    #[test]
    fn one_row_gives_three_lines() {
        let mut out = Vec::new();
        write_report(&matrix(), &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0], REPORT_HEADER.join(","));
        assert!(lines[3].starts_with("Total,2000,self,times_cited,fixed:3,top10,10,"));
    }

    #[test]
    fn empty_matrix_is_an_error() {
        assert!(matches!(write_report(&AnalysisMatrix::default(), Vec::new()), Err(ReportError::EmptyMatrix)));
    }

    #[test]
    fn json_round_trip_reproduces_report() {
        let m = matrix();
        let mut json = Vec::new();
        write_matrix_json(&m, &mut json).unwrap();
        let back = read_matrix_json(json.as_slice()).unwrap();
        assert_eq!(back, m);
        let (mut a, mut b) = (Vec::new(), Vec::new());
        write_report(&m, &mut a).unwrap();
        write_report(&back, &mut b).unwrap();
        assert_eq!(a, b);
    }
}
