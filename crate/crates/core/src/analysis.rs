//! Share breakdowns per discipline and publication year.
//!
//! Every analysis produces rows keyed by scope (a discipline, or the whole
//! corpus), publication year, ranking variable and outcome. Multi-discipline
//! records count fully in each of their disciplines and once in the total.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{assign_disciplines, CorpusSnapshot, Discipline, DisciplineSet};
use crate::inequality::{percentile_shares, percentile_shares_by, CutSpec, InequalityError, ShareBreakdown};
use crate::linking::{CitationIndex, WindowSpec};
use crate::normalize::{CellTable, NormalizeError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("record {0:?} is not in the citation index")]
    UnknownRecord(String),
    #[error("normalized outcomes need reference cells computed for window {0}")]
    CellsRequired(WindowSpec),
    #[error("{0}")]
    InvalidWindow(String),
    #[error("unknown {kind} {value:?}")]
    UnknownToken { kind: &'static str, value: String },
    #[error(transparent)]
    Normalize(#[from] NormalizeError),
}

/// Record attributes used as alternative ranking variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FicKind {
    AllRefs,
    LinkedRefs,
    Authors,
    Pages,
    Jif,
}

impl FicKind {
    pub const ALL: [FicKind; 5] = [FicKind::AllRefs, FicKind::LinkedRefs, FicKind::Authors, FicKind::Pages, FicKind::Jif];

    pub fn as_str(self) -> &'static str {
        match self {
            FicKind::AllRefs => "all_refs",
            FicKind::LinkedRefs => "linked_refs",
            FicKind::Authors => "authors",
            FicKind::Pages => "pages",
            FicKind::Jif => "jif",
        }
    }
}

impl fmt::Display for FicKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FicKind {
    type Err = AnalysisError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FicKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s.trim())
            .ok_or_else(|| AnalysisError::UnknownToken { kind: "fic", value: s.to_string() })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ranking {
    /// Units ranked by the outcome itself.
    SelfRank,
    Fic(FicKind),
}

impl fmt::Display for Ranking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ranking::SelfRank => f.write_str("self"),
            Ranking::Fic(k) => f.write_str(k.as_str()),
        }
    }
}

/// The quantity whose shares are measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeKind {
    TimesCited(WindowSpec),
    NormalizedCitations(WindowSpec),
    /// Linked cited-reference counts (no window).
    LinkedRefs,
}

impl OutcomeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            OutcomeKind::TimesCited(_) => "times_cited",
            OutcomeKind::NormalizedCitations(_) => "mncs",
            OutcomeKind::LinkedRefs => "linked_refs",
        }
    }

    pub fn window(self) -> Option<WindowSpec> {
        match self {
            OutcomeKind::TimesCited(w) | OutcomeKind::NormalizedCitations(w) => Some(w),
            OutcomeKind::LinkedRefs => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    Discipline(Discipline),
    Total,
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scope::Discipline(d) => f.write_str(d.as_str()),
            Scope::Total => f.write_str("Total"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum YearKey {
    Year(i32),
    /// All publication years of the snapshot together.
    Pooled,
}

impl fmt::Display for YearKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            YearKey::Year(y) => write!(f, "{y}"),
            YearKey::Pooled => f.write_str("all"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RowKey {
    pub scope: Scope,
    pub year: YearKey,
    pub ranking: Ranking,
    pub outcome: OutcomeKind,
}

impl fmt::Display for RowKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} ranked by {} on {}", self.scope, self.year, self.ranking, self.outcome.as_str())?;
        match self.outcome.window() {
            Some(w) => write!(f, " ({w})"),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisRow {
    pub key: RowKey,
    /// Records included in the breakdown.
    pub n_papers: u64,
    /// Records of the cell left out because the ranking attribute is missing.
    pub n_missing: u64,
    pub breakdown: ShareBreakdown,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AnalysisMatrix {
    pub rows: Vec<AnalysisRow>,
    /// Omitted rows and why.
    pub notices: Vec<String>,
}

impl AnalysisMatrix {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn get(&self, key: &RowKey) -> Option<&AnalysisRow> {
        self.rows.binary_search_by(|r| r.key.cmp(key)).ok().map(|i| &self.rows[i])
    }

    /// Appends `other` and restores key order.
    pub fn merge(&mut self, other: AnalysisMatrix) {
        self.rows.extend(other.rows);
        self.rows.sort_by_key(|r| r.key);
        self.notices.extend(other.notices);
    }
}

impl FromIterator<AnalysisMatrix> for AnalysisMatrix {
    fn from_iter<I: IntoIterator<Item = AnalysisMatrix>>(iter: I) -> Self {
        let mut out = AnalysisMatrix::default();
        for m in iter {
            out.merge(m);
        }
        out
    }
}

type Groups = Vec<((Scope, YearKey), Vec<u32>)>;

/// A filtered snapshot joined with its citation index.
pub struct AnalysisContext<'a> {
    snapshot: &'a CorpusSnapshot,
    index: &'a CitationIndex,
    cuts: CutSpec,
    positions: Vec<u32>,
    disciplines: Vec<DisciplineSet>,
}

impl<'a> AnalysisContext<'a> {
    pub fn new(snapshot: &'a CorpusSnapshot, index: &'a CitationIndex, cuts: CutSpec) -> Result<Self, AnalysisError> {
        let positions = snapshot
            .records()
            .par_iter()
            .map(|r| {
                index.position(&r.record_id).map(|p| p as u32).ok_or_else(|| AnalysisError::UnknownRecord(r.record_id.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let scheme = snapshot.scheme();
        let disciplines = snapshot.records().par_iter().map(|r| assign_disciplines(r, scheme).disciplines).collect();
        Ok(Self { snapshot, index, cuts, positions, disciplines })
    }

    pub fn cuts(&self) -> &CutSpec {
        &self.cuts
    }

    fn groups(&self, pooled: bool) -> Groups {
        let mut map: BTreeMap<(Scope, YearKey), Vec<u32>> = BTreeMap::new();
        for (i, r) in self.snapshot.records().iter().enumerate() {
            let year = if pooled { YearKey::Pooled } else { YearKey::Year(r.pub_year) };
            for d in self.disciplines[i].iter() {
                map.entry((Scope::Discipline(d), year)).or_default().push(i as u32);
            }
            map.entry((Scope::Total, year)).or_default().push(i as u32);
        }
        map.into_iter().collect()
    }

    /// Outcome value of every record, in snapshot order.
    pub fn outcome_values(&self, outcome: OutcomeKind, cells: Option<&CellTable>) -> Result<Vec<f64>, AnalysisError> {
        let records = self.snapshot.records();
        let pos = &self.positions;
        Ok(match outcome {
            OutcomeKind::TimesCited(w) => {
                pos.par_iter().map(|&p| self.index.citation_count_at(p as usize, w).count as f64).collect()
            }
            OutcomeKind::LinkedRefs => pos.par_iter().map(|&p| f64::from(self.index.linked_ref_count_at(p as usize))).collect(),
            OutcomeKind::NormalizedCitations(w) => {
                let cells = cells.filter(|c| c.window() == w).ok_or(AnalysisError::CellsRequired(w))?;
                records
                    .par_iter()
                    .zip(pos.par_iter())
                    .map(|(r, &p)| cells.score(r, self.index.citation_count_at(p as usize, w).count).map(|s| s.0))
                    .collect::<Result<_, _>>()?
            }
        })
    }

    /// Ranking attribute of every record; `None` where it is missing.
    pub fn fic_values(&self, fic: FicKind) -> Vec<Option<f64>> {
        let records = self.snapshot.records();
        records
            .par_iter()
            .zip(self.positions.par_iter())
            .map(|(r, &p)| match fic {
                FicKind::AllRefs => Some(f64::from(self.index.all_ref_count_at(p as usize))),
                FicKind::LinkedRefs => Some(f64::from(self.index.linked_ref_count_at(p as usize))),
                FicKind::Authors => Some(f64::from(r.author_count)),
                FicKind::Pages => r.page_count.map(f64::from),
                FicKind::Jif => r.jif,
            })
            .collect()
    }

    fn rows(&self, groups: Groups, ranking: Ranking, outcome: OutcomeKind, values: &[f64], ranks: Option<&[Option<f64>]>) -> AnalysisMatrix {
        let results: Vec<Result<AnalysisRow, String>> = groups
            .into_par_iter()
            .map(|((scope, year), members)| {
                let key = RowKey { scope, year, ranking, outcome };
                let result = match ranks {
                    None => {
                        let y: Vec<f64> = members.iter().map(|&i| values[i as usize]).collect();
                        percentile_shares(&y, &self.cuts).map(|b| (b, 0))
                    }
                    Some(ranks) => {
                        let (y, r): (Vec<f64>, Vec<f64>) = members
                            .iter()
                            .filter_map(|&i| ranks[i as usize].map(|r| (values[i as usize], r)))
                            .unzip();
                        let missing = (members.len() - y.len()) as u64;
                        if y.is_empty() {
                            return Err(format!("{key}: every record lacks the ranking attribute, row omitted"));
                        }
                        percentile_shares_by(&y, &r, &self.cuts).map(|b| (b, missing))
                    }
                };
                match result {
                    Ok((breakdown, n_missing)) => {
                        Ok(AnalysisRow { key, n_papers: breakdown.n_units as u64, n_missing, breakdown })
                    }
                    Err(InequalityError::ZeroTotal) => Err(format!("{key}: total outcome is zero, row omitted")),
                    Err(e) => Err(format!("{key}: {e}, row omitted")),
                }
            })
            .collect();
        let mut matrix = AnalysisMatrix::default();
        for r in results {
            match r {
                Ok(row) => matrix.rows.push(row),
                Err(notice) => {
                    log::warn!("{notice}");
                    matrix.notices.push(notice);
                }
            }
        }
        matrix.rows.sort_by_key(|r| r.key);
        matrix
    }

    /// Self-ranked breakdowns of `outcome` per discipline and year, plus the total.
    pub fn self_ranked(&self, outcome: OutcomeKind, cells: Option<&CellTable>) -> Result<AnalysisMatrix, AnalysisError> {
        let values = self.outcome_values(outcome, cells)?;
        Ok(self.rows(self.groups(false), Ranking::SelfRank, outcome, &values, None))
    }

    /// Citation counts and linked cited-reference counts, each ranked by
    /// itself, per discipline and year.
    pub fn impact_distribution(&self, window: WindowSpec) -> Result<AnalysisMatrix, AnalysisError> {
        let mut m = self.self_ranked(OutcomeKind::TimesCited(window), None)?;
        m.merge(self.self_ranked(OutcomeKind::LinkedRefs, None)?);
        Ok(m)
    }

    /// Self-ranked citation breakdowns per discipline, pooling all years, with
    /// each record counted in its own fixed window.
    pub fn density_profile(&self, fixed_window: WindowSpec) -> Result<AnalysisMatrix, AnalysisError> {
        if !matches!(fixed_window, WindowSpec::Fixed { .. }) {
            return Err(AnalysisError::InvalidWindow(format!("density profile needs a fixed window, got {fixed_window}")));
        }
        let outcome = OutcomeKind::TimesCited(fixed_window);
        let values = self.outcome_values(outcome, None)?;
        Ok(self.rows(self.groups(true), Ranking::SelfRank, outcome, &values, None))
    }

    /// Shares of `outcome` with records ranked by `fic`. Records lacking the
    /// attribute are left out of the row and counted in `n_missing`.
    pub fn fic_covariate(&self, cells: Option<&CellTable>, fic: FicKind, outcome: OutcomeKind) -> Result<AnalysisMatrix, AnalysisError> {
        let values = self.outcome_values(outcome, cells)?;
        let ranks = self.fic_values(fic);
        Ok(self.rows(self.groups(false), Ranking::Fic(fic), outcome, &values, Some(&ranks)))
    }
}
