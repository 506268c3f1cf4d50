//! Cited-reference matching and citation windows.
//!
//! Each cited reference is matched first by exact (normalized) DOI, then by
//! the composite key (first author, year, source), with volume and first page
//! narrowing the candidates when present on both sides. A composite key that
//! still matches more than one record is counted as ambiguous and left
//! unlinked.

use std::collections::hash_map::DefaultHasher;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::io::Write;
use std::str::FromStr;

use compact_str::CompactString;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{CitedReference, CorpusSnapshot, PublicationRecord, YearCounts};

/// Identifies the matching rules in index metadata.
pub const MATCH_RULE_VERSION: &str = "doi>author-year-source(volume,page)/v1";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinkError {
    #[error("unknown record_id {0:?}")]
    UnknownRecord(String),
    #[error("invalid window: {0}")]
    InvalidWindow(String),
    #[error("cannot write link table: {0}")]
    Export(String),
}

/// Which citing years count toward a record's citations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum WindowSpec {
    /// Citing years `[pub_year + start_offset, pub_year + end_offset]`.
    Fixed { start_offset: u32, end_offset: u32 },
    /// Citing years `[pub_year, horizon_year]`, publication year included.
    Open { horizon_year: i32 },
}

impl WindowSpec {
    pub fn fixed(start_offset: u32, end_offset: u32) -> Result<Self, LinkError> {
        if start_offset < 1 || start_offset > end_offset {
            return Err(LinkError::InvalidWindow(format!(
                "fixed window needs 1 <= start <= end, got {start_offset}..{end_offset}"
            )));
        }
        Ok(WindowSpec::Fixed { start_offset, end_offset })
    }

    /// The three citing years following the publication year.
    pub fn three_year() -> Self {
        WindowSpec::Fixed { start_offset: 1, end_offset: 3 }
    }

    pub fn open(horizon_year: i32) -> Self {
        WindowSpec::Open { horizon_year }
    }

    /// Inclusive citing-year range for a record published in `pub_year`.
    pub fn year_range(self, pub_year: i32) -> (i32, i32) {
        match self {
            WindowSpec::Fixed { start_offset, end_offset } => {
                (pub_year + start_offset as i32, pub_year + end_offset as i32)
            }
            WindowSpec::Open { horizon_year } => (pub_year, horizon_year),
        }
    }

    /// Open windows must reach at least the latest publication year.
    pub fn check_covers(self, latest_pub_year: i32) -> Result<(), LinkError> {
        match self {
            WindowSpec::Open { horizon_year } if horizon_year < latest_pub_year => Err(LinkError::InvalidWindow(
                format!("open window ends in {horizon_year}, before publication year {latest_pub_year}"),
            )),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for WindowSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            WindowSpec::Fixed { start_offset: 1, end_offset } => write!(f, "fixed:{end_offset}"),
            WindowSpec::Fixed { start_offset, end_offset } => write!(f, "fixed:{start_offset}-{end_offset}"),
            WindowSpec::Open { horizon_year } => write!(f, "open:{horizon_year}"),
        }
    }
}

impl FromStr for WindowSpec {
    type Err = LinkError;

    /// `fixed:3` (offsets 1..=3), `fixed:2-5`, or `open:2014`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || LinkError::InvalidWindow(format!("expected fixed:K, fixed:A-B or open:YYYY, got {s:?}"));
        let (kind, arg) = s.trim().split_once(':').ok_or_else(bad)?;
        match kind {
            "fixed" => match arg.split_once('-') {
                Some((a, b)) => WindowSpec::fixed(a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?),
                None => WindowSpec::fixed(1, arg.parse().map_err(|_| bad())?),
            },
            "open" => Ok(WindowSpec::open(arg.parse().map_err(|_| bad())?)),
            _ => Err(bad()),
        }
    }
}

impl TryFrom<String> for WindowSpec {
    type Error = LinkError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<WindowSpec> for String {
    fn from(w: WindowSpec) -> Self {
        w.to_string()
    }
}

/// A windowed citation count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowCount {
    pub count: u64,
    /// The window reaches past the data horizon, so the count may be incomplete.
    pub truncated: bool,
}

/// Sum of `counts` over the window belonging to `pub_year`.
pub fn count_in_window(counts: &[(i32, u32)], pub_year: i32, window: WindowSpec) -> u64 {
    let (lo, hi) = window.year_range(pub_year);
    counts.iter().filter(|(y, _)| (lo..=hi).contains(y)).map(|(_, c)| u64::from(*c)).sum()
}

/// A matched reference: `citing` cites `cited`, positions in the snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Link {
    pub citing: u32,
    pub cited: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct IndexMetadata {
    pub match_rule: String,
    pub horizon_year: i32,
    pub n_records: u64,
    pub all_refs: u64,
    pub links: u64,
    pub doi_links: u64,
    pub key_links: u64,
    /// References whose key matched several records; counted as unlinked.
    pub ambiguous_refs: u64,
    /// Links whose citing year precedes the cited record's publication year.
    pub links_before_publication: u64,
}

/// Compressed per-record year histograms.
#[derive(Debug, Clone, Default)]
struct Histograms {
    offsets: Vec<u32>,
    entries: Vec<(i32, u32)>,
}

impl Histograms {
    fn get(&self, i: usize) -> &[(i32, u32)] {
        &self.entries[self.offsets[i] as usize..self.offsets[i + 1] as usize]
    }
}

/// Inbound citation histograms and reference counts per record.
#[derive(Debug, Clone)]
pub struct CitationIndex {
    ids: Vec<CompactString>,
    position: std::collections::HashMap<CompactString, u32>,
    pub_years: Vec<i32>,
    linked_inbound: Histograms,
    provided: Histograms,
    has_provided: Vec<bool>,
    linked_refs: Vec<u32>,
    all_refs: Vec<u32>,
    links: Vec<Link>,
    meta: IndexMetadata,
}

fn stable_hasher() -> DefaultHasher {
    // DefaultHasher::new() uses fixed keys, so hashes are reproducible.
    DefaultHasher::new()
}

fn token_chars(s: &str) -> impl Iterator<Item = char> + '_ {
    s.chars().filter(|c| c.is_alphanumeric()).flat_map(char::to_uppercase)
}

fn doi_body(s: &str) -> &str {
    let t = s.trim();
    for prefix in ["https://doi.org/", "http://doi.org/", "https://dx.doi.org/", "http://dx.doi.org/", "doi:"] {
        if t.len() >= prefix.len() && t[..prefix.len()].eq_ignore_ascii_case(prefix) {
            return t[prefix.len()..].trim();
        }
    }
    t
}

fn doi_chars(s: &str) -> impl Iterator<Item = char> + '_ {
    doi_body(s).chars().filter(|c| !c.is_whitespace()).flat_map(char::to_lowercase)
}

/// Normalized author/source token: alphanumerics only, upper case.
pub fn normalize_token(s: &str) -> String {
    token_chars(s).collect()
}

/// Normalized DOI: resolver prefixes stripped, lower case, no whitespace.
pub fn normalize_doi(s: &str) -> String {
    doi_chars(s).collect()
}

fn same_token(a: &str, b: &str) -> bool {
    token_chars(a).eq(token_chars(b))
}

fn same_doi(a: &str, b: &str) -> bool {
    doi_chars(a).eq(doi_chars(b))
}

fn doi_hash(s: &str) -> Option<u64> {
    let mut h = stable_hasher();
    let mut any = false;
    for c in doi_chars(s) {
        c.hash(&mut h);
        any = true;
    }
    any.then(|| h.finish())
}

fn key_hash(author: &str, year: i32, source: &str) -> Option<u64> {
    let mut h = stable_hasher();
    let mut a = 0;
    for c in token_chars(author) {
        c.hash(&mut h);
        a += 1;
    }
    '|'.hash(&mut h);
    year.hash(&mut h);
    let mut s = 0;
    for c in token_chars(source) {
        c.hash(&mut h);
        s += 1;
    }
    (a > 0 && s > 0).then(|| h.finish())
}

/// Sorted (hash, position) table with candidate verification on lookup.
struct KeyTable(Vec<(u64, u32)>);

impl KeyTable {
    fn candidates(&self, hash: u64) -> impl Iterator<Item = usize> + '_ {
        let lo = self.0.partition_point(|e| e.0 < hash);
        self.0[lo..].iter().take_while(move |e| e.0 == hash).map(|e| e.1 as usize)
    }
}

enum MatchOutcome {
    Doi(usize),
    Key(usize),
    Ambiguous,
    None,
}

struct Matcher<'a> {
    records: &'a [PublicationRecord],
    by_doi: KeyTable,
    by_key: KeyTable,
}

impl<'a> Matcher<'a> {
    fn new(records: &'a [PublicationRecord]) -> Self {
        let mut by_doi: Vec<(u64, u32)> = records
            .par_iter()
            .enumerate()
            .filter_map(|(i, r)| r.doi.as_deref().and_then(doi_hash).map(|h| (h, i as u32)))
            .collect();
        by_doi.par_sort_unstable();
        let mut by_key: Vec<(u64, u32)> = records
            .par_iter()
            .enumerate()
            .filter_map(|(i, r)| {
                let author = r.first_author_key.as_deref()?;
                key_hash(author, r.pub_year, r.source_key()).map(|h| (h, i as u32))
            })
            .collect();
        by_key.par_sort_unstable();
        Self { records, by_doi: KeyTable(by_doi), by_key: KeyTable(by_key) }
    }

    fn resolve(&self, r: &CitedReference) -> MatchOutcome {
        if let Some(doi) = r.doi.as_deref() {
            if let Some(h) = doi_hash(doi) {
                let mut hits = self
                    .by_doi
                    .candidates(h)
                    .filter(|&i| self.records[i].doi.as_deref().is_some_and(|d| same_doi(d, doi)));
                match (hits.next(), hits.next()) {
                    (Some(i), None) => return MatchOutcome::Doi(i),
                    (Some(_), Some(_)) => return MatchOutcome::Ambiguous,
                    _ => {}
                }
            }
        }
        let (Some(author), Some(year), Some(source)) =
            (r.first_author_key.as_deref(), r.ref_year, r.source_token.as_deref())
        else {
            return MatchOutcome::None;
        };
        let Some(h) = key_hash(author, year, source) else {
            return MatchOutcome::None;
        };
        let narrow = |mine: &Option<CompactString>, theirs: &Option<CompactString>| match (mine, theirs) {
            (Some(a), Some(b)) => same_token(a, b),
            _ => true,
        };
        let mut hits = self.by_key.candidates(h).filter(|&i| {
            let c = &self.records[i];
            c.pub_year == year
                && c.first_author_key.as_deref().is_some_and(|a| same_token(a, author))
                && same_token(c.source_key(), source)
                && narrow(&r.volume, &c.volume)
                && narrow(&r.first_page, &c.first_page)
        });
        match (hits.next(), hits.next()) {
            (Some(i), None) => MatchOutcome::Key(i),
            (Some(_), Some(_)) => MatchOutcome::Ambiguous,
            _ => MatchOutcome::None,
        }
    }
}

fn histograms_from_sorted(n: usize, mut pairs: Vec<(u32, i32)>) -> Histograms {
    pairs.par_sort_unstable();
    let mut offsets = Vec::with_capacity(n + 1);
    let mut entries: Vec<(i32, u32)> = Vec::new();
    offsets.push(0);
    let mut p = 0;
    for rec in 0..n as u32 {
        while p < pairs.len() && pairs[p].0 == rec {
            let year = pairs[p].1;
            let mut c = 0;
            while p < pairs.len() && pairs[p] == (rec, year) {
                c += 1;
                p += 1;
            }
            entries.push((year, c));
        }
        offsets.push(entries.len() as u32);
    }
    Histograms { offsets, entries }
}

/// Matches every cited reference in the snapshot against its records.
pub fn link_references(snapshot: &CorpusSnapshot) -> CitationIndex {
    let records = snapshot.records();
    let matcher = Matcher::new(records);

    // Per citing record: matched positions plus (doi, key, ambiguous) tallies.
    let matched: Vec<(Vec<u32>, [u32; 3])> = records
        .par_iter()
        .map(|r| {
            let mut hits = Vec::new();
            let mut tally = [0u32; 3];
            for cr in &r.cited_refs {
                match matcher.resolve(cr) {
                    MatchOutcome::Doi(i) => {
                        hits.push(i as u32);
                        tally[0] += 1;
                    }
                    MatchOutcome::Key(i) => {
                        hits.push(i as u32);
                        tally[1] += 1;
                    }
                    MatchOutcome::Ambiguous => tally[2] += 1,
                    MatchOutcome::None => {}
                }
            }
            (hits, tally)
        })
        .collect();
    drop(matcher);

    let mut meta = IndexMetadata {
        match_rule: MATCH_RULE_VERSION.to_string(),
        horizon_year: snapshot.horizon_year(),
        n_records: records.len() as u64,
        ..Default::default()
    };
    let mut links = Vec::new();
    let mut linked_refs = Vec::with_capacity(records.len());
    let mut inbound_pairs = Vec::new();
    for (citing, (hits, tally)) in matched.into_iter().enumerate() {
        meta.doi_links += u64::from(tally[0]);
        meta.key_links += u64::from(tally[1]);
        meta.ambiguous_refs += u64::from(tally[2]);
        linked_refs.push(hits.len() as u32);
        let citing_year = records[citing].pub_year;
        for cited in hits {
            if citing_year < records[cited as usize].pub_year {
                meta.links_before_publication += 1;
            }
            inbound_pairs.push((cited, citing_year));
            links.push(Link { citing: citing as u32, cited });
        }
    }
    meta.links = links.len() as u64;
    let all_refs: Vec<u32> = records.iter().map(|r| r.cited_refs.len() as u32).collect();
    meta.all_refs = all_refs.iter().map(|&c| u64::from(c)).sum();

    let linked_inbound = histograms_from_sorted(records.len(), inbound_pairs);
    let mut provided = Histograms { offsets: vec![0], entries: Vec::new() };
    let mut has_provided = Vec::with_capacity(records.len());
    for r in records {
        if let Some(c) = &r.citations_by_year {
            provided.entries.extend_from_slice(c.entries());
        }
        has_provided.push(r.citations_by_year.is_some());
        provided.offsets.push(provided.entries.len() as u32);
    }

    let ids: Vec<CompactString> = records.iter().map(|r| r.record_id.clone()).collect();
    let position = ids.iter().enumerate().map(|(i, id)| (id.clone(), i as u32)).collect();
    log::info!(
        "linked {} of {} references ({} by DOI, {} by key, {} ambiguous)",
        meta.links,
        meta.all_refs,
        meta.doi_links,
        meta.key_links,
        meta.ambiguous_refs
    );
    CitationIndex {
        ids,
        position,
        pub_years: records.iter().map(|r| r.pub_year).collect(),
        linked_inbound,
        provided,
        has_provided,
        linked_refs,
        all_refs,
        links,
        meta,
    }
}

impl CitationIndex {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn metadata(&self) -> &IndexMetadata {
        &self.meta
    }

    pub fn position(&self, record_id: &str) -> Option<usize> {
        self.position.get(record_id).map(|&p| p as usize)
    }

    fn require(&self, record_id: &str) -> Result<usize, LinkError> {
        self.position(record_id).ok_or_else(|| LinkError::UnknownRecord(record_id.to_string()))
    }

    pub fn record_id(&self, pos: usize) -> &str {
        &self.ids[pos]
    }

    pub fn pub_year(&self, pos: usize) -> i32 {
        self.pub_years[pos]
    }

    /// Link-derived inbound citations by citing year.
    pub fn linked_inbound(&self, record_id: &str) -> Result<&[(i32, u32)], LinkError> {
        Ok(self.linked_inbound.get(self.require(record_id)?))
    }

    /// Histogram used for citation counting: the record's pre-aggregated
    /// `citations_by_year` when it had one, the link-derived one otherwise.
    pub fn citation_histogram_at(&self, pos: usize) -> &[(i32, u32)] {
        if self.has_provided[pos] {
            self.provided.get(pos)
        } else {
            self.linked_inbound.get(pos)
        }
    }

    pub fn citation_histogram(&self, record_id: &str) -> Result<YearCounts, LinkError> {
        Ok(self.citation_histogram_at(self.require(record_id)?).iter().copied().collect())
    }

    pub fn citation_count_at(&self, pos: usize, window: WindowSpec) -> WindowCount {
        let pub_year = self.pub_years[pos];
        let (_, last) = window.year_range(pub_year);
        WindowCount {
            count: count_in_window(self.citation_histogram_at(pos), pub_year, window),
            truncated: last > self.meta.horizon_year,
        }
    }

    /// Citations of `record_id` falling in `window`.
    pub fn citation_count(&self, record_id: &str, window: WindowSpec) -> Result<WindowCount, LinkError> {
        Ok(self.citation_count_at(self.require(record_id)?, window))
    }

    pub fn linked_ref_count(&self, record_id: &str) -> Result<u32, LinkError> {
        Ok(self.linked_refs[self.require(record_id)?])
    }

    pub fn all_ref_count(&self, record_id: &str) -> Result<u32, LinkError> {
        Ok(self.all_refs[self.require(record_id)?])
    }

    pub fn linked_ref_count_at(&self, pos: usize) -> u32 {
        self.linked_refs[pos]
    }

    pub fn all_ref_count_at(&self, pos: usize) -> u32 {
        self.all_refs[pos]
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    /// Sum of linked references over citing records.
    pub fn total_linked_refs(&self) -> u64 {
        self.linked_refs.iter().map(|&c| u64::from(c)).sum()
    }

    /// Sum of link-derived inbound citations over cited records.
    pub fn total_linked_inbound(&self) -> u64 {
        self.linked_inbound.entries.iter().map(|e| u64::from(e.1)).sum()
    }

    /// Writes the link table as `citing_id,cited_id,citing_year`.
    pub fn write_links_csv<W: Write>(&self, writer: W) -> Result<(), LinkError> {
        let err = |e: csv::Error| LinkError::Export(e.to_string());
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["citing_id", "cited_id", "citing_year"]).map_err(err)?;
        for l in &self.links {
            let year = self.pub_years[l.citing as usize].to_string();
            w.write_record([self.ids[l.citing as usize].as_str(), self.ids[l.cited as usize].as_str(), &year])
                .map_err(err)?;
        }
        w.flush().map_err(|e| LinkError::Export(e.to_string()))
    }
}
