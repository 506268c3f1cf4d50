//! Record schema, JSON-lines ingestion and discipline mapping.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::io::{self, BufRead, Write};
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use compact_str::CompactString;
use rayon::prelude::*;
use serde::de::{self, Deserializer, MapAccess, Visitor};
use serde::ser::{SerializeMap, Serializer};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Earliest publication year accepted by validation.
pub const MIN_YEAR: i32 = 1900;

/// The six OECD aggregates of subject categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Discipline {
    NaturalSciences,
    EngineeringTechnology,
    MedicalHealth,
    Agricultural,
    SocialSciences,
    Humanities,
}

impl Discipline {
    pub const ALL: [Discipline; 6] = [
        Discipline::NaturalSciences,
        Discipline::EngineeringTechnology,
        Discipline::MedicalHealth,
        Discipline::Agricultural,
        Discipline::SocialSciences,
        Discipline::Humanities,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Discipline::NaturalSciences => "NaturalSciences",
            Discipline::EngineeringTechnology => "EngineeringTechnology",
            Discipline::MedicalHealth => "MedicalHealth",
            Discipline::Agricultural => "Agricultural",
            Discipline::SocialSciences => "SocialSciences",
            Discipline::Humanities => "Humanities",
        }
    }

    fn bit(self) -> u8 {
        1 << (self as u8)
    }
}

impl fmt::Display for Discipline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown discipline token {0:?}")]
pub struct UnknownDiscipline(pub String);

impl FromStr for Discipline {
    type Err = UnknownDiscipline;

    /// Accepts the canonical tokens case-insensitively, ignoring `_`, `-`,
    /// `&` and spaces (`natural_sciences` parses as `NaturalSciences`).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let squashed: String = s
            .chars()
            .filter(|c| !matches!(c, '_' | '-' | ' ' | '&'))
            .flat_map(char::to_lowercase)
            .collect();
        Discipline::ALL
            .into_iter()
            .find(|d| d.as_str().to_lowercase() == squashed)
            .ok_or_else(|| UnknownDiscipline(s.to_string()))
    }
}

/// Small set of disciplines, iterated in canonical order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct DisciplineSet(u8);

impl DisciplineSet {
    pub fn insert(&mut self, d: Discipline) {
        self.0 |= d.bit();
    }

    pub fn contains(self, d: Discipline) -> bool {
        self.0 & d.bit() != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn iter(self) -> impl Iterator<Item = Discipline> {
        Discipline::ALL.into_iter().filter(move |d| self.contains(*d))
    }
}

impl FromIterator<Discipline> for DisciplineSet {
    fn from_iter<I: IntoIterator<Item = Discipline>>(iter: I) -> Self {
        let mut s = DisciplineSet::default();
        for d in iter {
            s.insert(d);
        }
        s
    }
}

#[derive(Debug, Error)]
pub enum SchemeError {
    #[error("cannot read field scheme: {0}")]
    Io(#[from] io::Error),
    #[error("field scheme CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("field scheme line {line}: {message}")]
    Invalid { line: u64, message: String },
}

/// Mapping from subject-category code to discipline.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FieldScheme {
    map: BTreeMap<String, Discipline>,
}

impl FieldScheme {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, category: impl Into<String>, discipline: Discipline) {
        self.map.insert(category.into(), discipline);
    }

    pub fn discipline_of(&self, category: &str) -> Option<Discipline> {
        self.map.get(category).copied()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Discipline)> {
        self.map.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// Reads the two-column `category_code,discipline` CSV. A header row is
    /// optional. A code listed twice with different disciplines is an error.
    pub fn from_csv_reader<R: io::Read>(reader: R) -> Result<Self, SchemeError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(reader);
        let mut scheme = FieldScheme::new();
        for (i, row) in rdr.records().enumerate() {
            let row = row?;
            let line = row.position().map_or(i as u64 + 1, |p| p.line());
            if row.len() != 2 {
                return Err(SchemeError::Invalid {
                    line,
                    message: format!("expected 2 columns, found {}", row.len()),
                });
            }
            if i == 0 && row[1].eq_ignore_ascii_case("discipline") {
                continue;
            }
            let code = &row[0];
            if code.is_empty() {
                return Err(SchemeError::Invalid { line, message: "empty category code".into() });
            }
            let discipline: Discipline = row[1]
                .parse()
                .map_err(|e: UnknownDiscipline| SchemeError::Invalid { line, message: e.to_string() })?;
            match scheme.map.get(code) {
                Some(prev) if *prev != discipline => {
                    return Err(SchemeError::Invalid {
                        line,
                        message: format!("category {code} mapped to both {prev} and {discipline}"),
                    })
                }
                _ => scheme.insert(code, discipline),
            }
        }
        Ok(scheme)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, SchemeError> {
        Self::from_csv_reader(std::fs::File::open(path)?)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), SchemeError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["category_code", "discipline"])?;
        for (code, d) in self.iter() {
            w.write_record([code, d.as_str()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Per-year counts stored as a sorted list; serialized as a JSON object
/// keyed by year.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct YearCounts(Vec<(i32, u32)>);

impl YearCounts {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, year: i32, count: u32) {
        match self.0.binary_search_by_key(&year, |e| e.0) {
            Ok(i) => self.0[i].1 += count,
            Err(i) => self.0.insert(i, (year, count)),
        }
    }

    pub fn entries(&self) -> &[(i32, u32)] {
        &self.0
    }

    pub fn total(&self) -> u64 {
        self.0.iter().map(|e| u64::from(e.1)).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl FromIterator<(i32, u32)> for YearCounts {
    fn from_iter<I: IntoIterator<Item = (i32, u32)>>(iter: I) -> Self {
        let mut c = YearCounts::new();
        for (y, n) in iter {
            c.add(y, n);
        }
        c
    }
}

impl Serialize for YearCounts {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.0.len()))?;
        for (year, count) in &self.0 {
            map.serialize_entry(year, count)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for YearCounts {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct CountsVisitor;

        impl<'de> Visitor<'de> for CountsVisitor {
            type Value = YearCounts;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a map from year to non-negative count")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> Result<YearCounts, A::Error> {
                let mut counts = YearCounts::new();
                while let Some((year, count)) = access.next_entry::<i32, u32>()? {
                    counts.add(year, count);
                }
                Ok(counts)
            }
        }

        deserializer.deserialize_map(CountsVisitor)
    }
}

fn de_year<'de, D: Deserializer<'de>>(deserializer: D) -> Result<i32, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum YearRepr {
        Int(i64),
        Text(String),
    }
    match YearRepr::deserialize(deserializer)? {
        YearRepr::Int(y) => i32::try_from(y).map_err(|_| de::Error::custom(format!("invalid year {y}"))),
        YearRepr::Text(s) => s
            .trim()
            .parse::<i32>()
            .map_err(|_| de::Error::custom(format!("invalid year {s:?}"))),
    }
}

/// One cited reference as extracted from a citing record.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CitedReference {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub doi: Option<CompactString>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_author_key: Option<CompactString>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ref_year: Option<i32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_token: Option<CompactString>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub volume: Option<CompactString>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_page: Option<CompactString>,
    /// Original reference string, kept verbatim.
    pub raw: CompactString,
}

impl CitedReference {
    /// A reference must carry a DOI or the full (author, year, source) triple.
    pub fn is_identifiable(&self) -> bool {
        let nonempty = |s: &Option<CompactString>| s.as_deref().is_some_and(|v| !v.trim().is_empty());
        nonempty(&self.doi)
            || (nonempty(&self.first_author_key) && self.ref_year.is_some() && nonempty(&self.source_token))
    }
}

/// One publication.
///
/// `doi`, `first_author_key`, `source_token`, `volume` and `first_page` are
/// the record's own bibliographic identity, against which other records'
/// cited references are matched. `source_token` falls back to `journal_id`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PublicationRecord {
    pub record_id: CompactString,
    #[serde(deserialize_with = "de_year")]
    pub pub_year: i32,
    pub doc_type: CompactString,
    pub journal_id: CompactString,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jif: Option<f64>,
    pub subject_categories: Vec<CompactString>,
    pub author_count: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub page_count: Option<u32>,
    #[serde(default)]
    pub cited_refs: Vec<CitedReference>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub citations_by_year: Option<YearCounts>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub doi: Option<CompactString>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_author_key: Option<CompactString>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_token: Option<CompactString>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub volume: Option<CompactString>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_page: Option<CompactString>,
}

impl PublicationRecord {
    /// Minimal article record; the remaining fields can be set directly.
    pub fn new(
        record_id: impl Into<CompactString>,
        pub_year: i32,
        journal_id: impl Into<CompactString>,
        subject_categories: &[&str],
    ) -> Self {
        Self {
            record_id: record_id.into(),
            pub_year,
            doc_type: "article".into(),
            journal_id: journal_id.into(),
            jif: None,
            subject_categories: subject_categories.iter().map(|c| CompactString::from(*c)).collect(),
            author_count: 1,
            page_count: None,
            cited_refs: Vec::new(),
            citations_by_year: None,
            doi: None,
            first_author_key: None,
            source_token: None,
            volume: None,
            first_page: None,
        }
    }

    pub fn is_article(&self) -> bool {
        self.doc_type == "article"
    }

    /// Source token used for reference matching.
    pub fn source_key(&self) -> &str {
        self.source_token.as_deref().unwrap_or(&self.journal_id)
    }

    /// Checks record-level invariants.
    pub fn validate(&self, horizon_year: i32) -> Result<(), RejectReason> {
        if self.record_id.trim().is_empty() {
            return Err(RejectReason::EmptyRecordId);
        }
        if !(MIN_YEAR..=horizon_year).contains(&self.pub_year) {
            return Err(RejectReason::YearOutOfRange { year: self.pub_year, horizon: horizon_year });
        }
        if self.subject_categories.is_empty() || self.subject_categories.iter().any(|c| c.trim().is_empty()) {
            return Err(RejectReason::EmptyCategories);
        }
        if self.author_count == 0 {
            return Err(RejectReason::NoAuthors);
        }
        if self.page_count == Some(0) {
            return Err(RejectReason::ZeroPages);
        }
        if let Some(j) = self.jif {
            if !j.is_finite() || j < 0.0 {
                return Err(RejectReason::InvalidJif(j));
            }
        }
        if let Some(index) = self.cited_refs.iter().position(|r| !r.is_identifiable()) {
            return Err(RejectReason::UnidentifiableReference { index });
        }
        Ok(())
    }
}

/// Why a line was rejected during ingestion.
#[derive(Debug, Clone, PartialEq, Error, Serialize)]
pub enum RejectReason {
    #[error("malformed record: {0}")]
    Parse(String),
    #[error("line is not valid UTF-8")]
    InvalidUtf8,
    #[error("empty record_id")]
    EmptyRecordId,
    #[error("invalid year {year}: outside [1900, {horizon}]")]
    YearOutOfRange { year: i32, horizon: i32 },
    #[error("subject_categories empty or containing an empty code")]
    EmptyCategories,
    #[error("author_count must be at least 1")]
    NoAuthors,
    #[error("page_count must be at least 1 when present")]
    ZeroPages,
    #[error("jif {0} is negative or not finite")]
    InvalidJif(f64),
    #[error("cited reference {index} has neither a DOI nor an (author, year, source) key")]
    UnidentifiableReference { index: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Reject {
    /// 1-based line number in the input stream.
    pub line: u64,
    pub reason: RejectReason,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MalformedPolicy {
    /// Skip the line and record a reject.
    #[default]
    Skip,
    /// Abort ingestion on the first bad line.
    Fatal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestConfig {
    /// Latest admissible publication year; also the data horizon of the
    /// citation histograms.
    pub horizon_year: i32,
    pub on_malformed: MalformedPolicy,
    /// Lines parsed per parallel batch.
    pub chunk_lines: usize,
}

impl Default for IngestConfig {
    fn default() -> Self {
        Self { horizon_year: 2014, on_malformed: MalformedPolicy::Skip, chunk_lines: 32_768 }
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("I/O error while reading records: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {reason}")]
    Malformed { line: u64, reason: RejectReason },
    #[error("duplicate record_id {id:?} (line {line})")]
    DuplicateId { id: String, line: u64 },
    #[error("record {id:?}: {reason}")]
    InvalidRecord { id: String, reason: RejectReason },
}

/// Summary statistics of a snapshot, re-derivable from its records.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CorpusStats {
    pub n_records: u64,
    pub per_year: BTreeMap<i32, u64>,
    pub per_doc_type: BTreeMap<String, u64>,
    /// Whole counting: a record mapping to k disciplines counts in each.
    pub per_discipline: BTreeMap<Discipline, u64>,
    /// Records none of whose categories are covered by the scheme.
    pub unmapped_records: u64,
    /// Records with at least one category not covered by the scheme.
    pub records_with_unmapped_category: u64,
    pub unknown_categories: BTreeSet<String>,
    pub jif_missing: u64,
    pub pages_missing: u64,
}

impl CorpusStats {
    pub fn compute(records: &[PublicationRecord], scheme: &FieldScheme) -> Self {
        let mut s = CorpusStats { n_records: records.len() as u64, ..Default::default() };
        for r in records {
            *s.per_year.entry(r.pub_year).or_default() += 1;
            *s.per_doc_type.entry(r.doc_type.to_string()).or_default() += 1;
            let a = assign_disciplines(r, scheme);
            for d in a.disciplines.iter() {
                *s.per_discipline.entry(d).or_default() += 1;
            }
            if a.all_unmapped {
                s.unmapped_records += 1;
            }
            if a.unmapped_categories > 0 {
                s.records_with_unmapped_category += 1;
                for c in &r.subject_categories {
                    if scheme.discipline_of(c).is_none() {
                        s.unknown_categories.insert(c.to_string());
                    }
                }
            }
            s.jif_missing += u64::from(r.jif.is_none());
            s.pages_missing += u64::from(r.page_count.is_none());
        }
        s
    }
}

/// Result of mapping a record's categories onto disciplines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DisciplineAssignment {
    pub disciplines: DisciplineSet,
    pub unmapped_categories: usize,
    /// No category resolved; the record only enters corpus-wide totals.
    pub all_unmapped: bool,
}

/// Disciplines of all mapped subject categories (whole counting).
pub fn assign_disciplines(record: &PublicationRecord, scheme: &FieldScheme) -> DisciplineAssignment {
    let mut disciplines = DisciplineSet::default();
    let mut unmapped = 0;
    for c in &record.subject_categories {
        match scheme.discipline_of(c) {
            Some(d) => disciplines.insert(d),
            None => unmapped += 1,
        }
    }
    DisciplineAssignment { disciplines, unmapped_categories: unmapped, all_unmapped: disciplines.is_empty() }
}

/// Immutable, validated collection of records.
#[derive(Debug, Clone)]
pub struct CorpusSnapshot {
    records: Vec<PublicationRecord>,
    scheme: Arc<FieldScheme>,
    horizon_year: i32,
    stats: CorpusStats,
    rejects: Vec<Reject>,
}

impl CorpusSnapshot {
    /// Builds a snapshot from in-memory records, validating each one.
    pub fn from_records(
        records: Vec<PublicationRecord>,
        scheme: Arc<FieldScheme>,
        horizon_year: i32,
    ) -> Result<Self, IngestError> {
        let mut seen = HashSet::with_capacity(records.len());
        for (i, r) in records.iter().enumerate() {
            r.validate(horizon_year)
                .map_err(|reason| IngestError::InvalidRecord { id: r.record_id.to_string(), reason })?;
            if !seen.insert(r.record_id.as_str()) {
                return Err(IngestError::DuplicateId { id: r.record_id.to_string(), line: i as u64 + 1 });
            }
        }
        Ok(Self::assemble(records, scheme, horizon_year, Vec::new()))
    }

    fn assemble(
        records: Vec<PublicationRecord>,
        scheme: Arc<FieldScheme>,
        horizon_year: i32,
        rejects: Vec<Reject>,
    ) -> Self {
        let stats = CorpusStats::compute(&records, &scheme);
        Self { records, scheme, horizon_year, stats, rejects }
    }

    pub fn records(&self) -> &[PublicationRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn scheme(&self) -> &FieldScheme {
        &self.scheme
    }

    pub fn shared_scheme(&self) -> Arc<FieldScheme> {
        Arc::clone(&self.scheme)
    }

    pub fn horizon_year(&self) -> i32 {
        self.horizon_year
    }

    pub fn stats(&self) -> &CorpusStats {
        &self.stats
    }

    pub fn rejects(&self) -> &[Reject] {
        &self.rejects
    }

    pub fn max_pub_year(&self) -> Option<i32> {
        self.records.iter().map(|r| r.pub_year).max()
    }

    fn keep(r: &PublicationRecord, years: &BTreeSet<i32>) -> bool {
        r.is_article() && years.contains(&r.pub_year)
    }

    /// Sub-snapshot of the articles published in `years`.
    pub fn filter_articles(&self, years: &BTreeSet<i32>) -> CorpusSnapshot {
        let records = self.records.iter().filter(|r| Self::keep(r, years)).cloned().collect();
        Self::assemble(records, Arc::clone(&self.scheme), self.horizon_year, self.rejects.clone())
    }

    /// Consuming variant of [`filter_articles`](Self::filter_articles).
    pub fn into_articles(self, years: &BTreeSet<i32>) -> CorpusSnapshot {
        let records = self.records.into_iter().filter(|r| Self::keep(r, years)).collect();
        Self::assemble(records, self.scheme, self.horizon_year, self.rejects)
    }
}

fn parse_line(bytes: &[u8], horizon_year: i32) -> Result<PublicationRecord, RejectReason> {
    if std::str::from_utf8(bytes).is_err() {
        return Err(RejectReason::InvalidUtf8);
    }
    let record: PublicationRecord =
        serde_json::from_slice(bytes).map_err(|e| RejectReason::Parse(e.to_string()))?;
    record.validate(horizon_year)?;
    Ok(record)
}

fn is_blank(line: &[u8]) -> bool {
    line.iter().all(u8::is_ascii_whitespace)
}

/// How many rejects are echoed to the log before going quiet.
const LOGGED_REJECTS: usize = 20;

/// Reads JSON-lines records, validating them in parallel batches.
///
/// Malformed or invalid lines are skipped and recorded (or abort, per
/// [`MalformedPolicy`]); a duplicate `record_id` always aborts. Records with
/// subject categories the scheme does not know are kept and counted in the
/// statistics.
pub fn ingest_records<R: BufRead>(
    mut reader: R,
    scheme: Arc<FieldScheme>,
    config: &IngestConfig,
) -> Result<CorpusSnapshot, IngestError> {
    let mut records = Vec::new();
    let mut rejects = Vec::new();
    let mut seen: HashSet<CompactString> = HashSet::new();
    let mut line_no: u64 = 0;
    let chunk_lines = config.chunk_lines.max(1);
    let mut eof = false;
    while !eof {
        let mut chunk: Vec<(u64, Vec<u8>)> = Vec::with_capacity(chunk_lines.min(1 << 16));
        while chunk.len() < chunk_lines {
            let mut buf = Vec::new();
            if reader.read_until(b'\n', &mut buf)? == 0 {
                eof = true;
                break;
            }
            line_no += 1;
            if !is_blank(&buf) {
                chunk.push((line_no, buf));
            }
        }
        let parsed: Vec<_> = chunk.par_iter().map(|(_, b)| parse_line(b, config.horizon_year)).collect();
        for ((line, _), result) in chunk.iter().zip(parsed) {
            match result {
                Ok(record) => {
                    if !seen.insert(record.record_id.clone()) {
                        return Err(IngestError::DuplicateId { id: record.record_id.to_string(), line: *line });
                    }
                    records.push(record);
                }
                Err(reason) => {
                    if config.on_malformed == MalformedPolicy::Fatal {
                        return Err(IngestError::Malformed { line: *line, reason });
                    }
                    if rejects.len() < LOGGED_REJECTS {
                        log::warn!("line {line}: {reason}");
                    }
                    rejects.push(Reject { line: *line, reason });
                }
            }
        }
    }
    if rejects.len() > LOGGED_REJECTS {
        log::warn!("{} further lines rejected", rejects.len() - LOGGED_REJECTS);
    }
    drop(seen);
    let snapshot = CorpusSnapshot::assemble(records, scheme, config.horizon_year, rejects);
    log::info!(
        "ingested {} records ({} rejected, {} with unmapped categories)",
        snapshot.len(),
        snapshot.rejects().len(),
        snapshot.stats().records_with_unmapped_category
    );
    Ok(snapshot)
}

/// Writes records as JSON lines.
pub fn write_jsonl<'a, W: Write>(
    records: impl IntoIterator<Item = &'a PublicationRecord>,
    mut writer: W,
) -> io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut writer, r)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}
