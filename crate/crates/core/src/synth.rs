//! Seeded synthetic corpora with a ground-truth ledger.
//!
//! Citation counts are negative binomial, drawn as a gamma-Poisson mixture:
//! `G ~ Gamma(r, 1/r)`, `K ~ Poisson(mu * G)` where `mu` is the field's base
//! mean scaled multiplicatively by the record's attributes. The Poisson draw
//! inverts a single uniform, so with every other draw held fixed a larger
//! `mu` never yields a smaller count.
//!
//! Records are laid out by year, then field, then index, and record `g` draws
//! everything from its own ChaCha stream. Internal references are resolved in
//! record order against records published no later than the citing year, with
//! linear preferential attachment toward records that were already cited.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use compact_str::{format_compact, CompactString};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{CitedReference, Discipline, FieldScheme, PublicationRecord, YearCounts, MIN_YEAR};
use crate::linking::WindowSpec;

/// Search range for calibrated dispersions.
pub const DISPERSION_BOUNDS: (f64, f64) = (1e-3, 1e4);

/// Records generated per parallel batch.
const CHUNK: usize = 8192;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synth config: {0}")]
    InvalidConfig(String),
    #[error("infeasible synth config: {0}")]
    Infeasible(String),
    #[error(
        "target top share {target}% is unreachable for mean {mean}: dispersion {lo} gives {share_at_lo:.3}%, \
         dispersion {hi} gives {share_at_hi:.3}%"
    )]
    Unreachable { target: f64, mean: f64, lo: f64, hi: f64, share_at_lo: f64, share_at_hi: f64 },
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("cannot serialize record: {0}")]
    Json(#[from] serde_json::Error),
    #[error("cannot write ledger: {0}")]
    Csv(#[from] csv::Error),
    #[error("cannot parse synth config: {0}")]
    Toml(#[from] toml::de::Error),
}

/// Count distribution: negative binomial with the given dispersion, or
/// Poisson when `dispersion` is absent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CountModel {
    pub mean: f64,
    #[serde(default)]
    pub dispersion: Option<f64>,
}

/// `round(median * exp(sigma * Z))`, floored at 1 for integer attributes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogNormal {
    pub median: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldConfig {
    /// Subject category code of the field's records.
    pub category: String,
    pub discipline: Discipline,
    pub records_per_year: u32,
    /// Base citation model over the open window ending at the horizon.
    pub citations: CountModel,
    #[serde(default = "default_journals")]
    pub journals: u32,
    /// Per-journal impact factor.
    pub jif: LogNormal,
    #[serde(default)]
    pub jif_missing_fraction: f64,
    pub authors: LogNormal,
    pub pages: LogNormal,
    #[serde(default)]
    pub pages_missing_fraction: f64,
    pub references: CountModel,
}

/// Exponents of the multiplicative attribute effects on the citation mean:
/// `mu = base * (jif / median_jif)^jif * (authors / median_authors)^authors * ...`
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Coupling {
    pub jif: f64,
    pub authors: f64,
    pub pages: f64,
    /// Applied to `(refs + 1) / (mean_refs + 1)`.
    pub references: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinkConfig {
    /// Probability that a reference points at another generated record.
    pub internal_fraction: f64,
    /// Probability that an internal target is drawn from earlier citations
    /// rather than uniformly.
    pub preferential: f64,
    /// Probability that a reference carries a DOI instead of a composite key.
    pub doi_fraction: f64,
}

impl Default for LinkConfig {
    fn default() -> Self {
        Self { internal_fraction: 0.3, preferential: 0.2, doi_fraction: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub seed: u64,
    #[serde(default = "default_horizon")]
    pub horizon_year: i32,
    pub years: Vec<i32>,
    /// Share of records emitted with a doc_type other than "article".
    #[serde(default)]
    pub non_article_fraction: f64,
    /// Share of records given a second category from another field.
    #[serde(default)]
    pub secondary_category_fraction: f64,
    /// Decay scale, in years, of the citing-year profile.
    #[serde(default = "default_aging")]
    pub citation_aging: f64,
    #[serde(default)]
    pub coupling: Coupling,
    #[serde(default)]
    pub links: LinkConfig,
    pub fields: Vec<FieldConfig>,
}

fn default_journals() -> u32 {
    10
}

fn default_horizon() -> i32 {
    2014
}

fn default_aging() -> f64 {
    3.0
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), SynthError> {
    if ok {
        Ok(())
    } else {
        Err(SynthError::InvalidConfig(msg()))
    }
}

fn check_fraction(name: &str, v: f64) -> Result<(), SynthError> {
    check((0.0..=1.0).contains(&v), || format!("{name} must lie in [0, 1], got {v}"))
}

fn check_count_model(name: &str, m: &CountModel) -> Result<(), SynthError> {
    check(m.mean.is_finite() && m.mean > 0.0, || format!("{name}.mean must be positive, got {}", m.mean))?;
    if let Some(r) = m.dispersion {
        check(r.is_finite() && r > 0.0, || format!("{name}.dispersion must be positive, got {r}"))?;
    }
    Ok(())
}

fn check_lognormal(name: &str, m: &LogNormal) -> Result<(), SynthError> {
    check(m.median.is_finite() && m.median > 0.0, || format!("{name}.median must be positive, got {}", m.median))?;
    check(m.sigma.is_finite() && m.sigma >= 0.0, || format!("{name}.sigma must be non-negative, got {}", m.sigma))
}

impl SynthConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, SynthError> {
        let cfg: SynthConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, SynthError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        check(!self.years.is_empty(), || "years is empty".into())?;
        for &y in &self.years {
            check((MIN_YEAR..=self.horizon_year).contains(&y), || {
                format!("year {y} outside [{MIN_YEAR}, {}]", self.horizon_year)
            })?;
        }
        let mut years = self.years.clone();
        years.sort_unstable();
        years.dedup();
        check(years.len() == self.years.len(), || "years contains duplicates".into())?;
        check(!self.fields.is_empty(), || "no fields configured".into())?;
        check_fraction("non_article_fraction", self.non_article_fraction)?;
        check_fraction("secondary_category_fraction", self.secondary_category_fraction)?;
        check_fraction("links.internal_fraction", self.links.internal_fraction)?;
        check_fraction("links.preferential", self.links.preferential)?;
        check_fraction("links.doi_fraction", self.links.doi_fraction)?;
        check(self.citation_aging.is_finite() && self.citation_aging > 0.0, || {
            format!("citation_aging must be positive, got {}", self.citation_aging)
        })?;
        let c = &self.coupling;
        check([c.jif, c.authors, c.pages, c.references].iter().all(|v| v.is_finite()), || {
            "coupling coefficients must be finite".into()
        })?;
        let mut cats: Vec<&str> = Vec::new();
        for f in &self.fields {
            check(!f.category.trim().is_empty(), || "field category is empty".into())?;
            check(!cats.contains(&f.category.as_str()), || format!("category {} configured twice", f.category))?;
            cats.push(&f.category);
            check(f.journals >= 1, || format!("{}: journals must be at least 1", f.category))?;
            check_count_model(&format!("{}.citations", f.category), &f.citations)?;
            check_count_model(&format!("{}.references", f.category), &f.references)?;
            check_lognormal(&format!("{}.jif", f.category), &f.jif)?;
            check_lognormal(&format!("{}.authors", f.category), &f.authors)?;
            check_lognormal(&format!("{}.pages", f.category), &f.pages)?;
            check_fraction(&format!("{}.jif_missing_fraction", f.category), f.jif_missing_fraction)?;
            check_fraction(&format!("{}.pages_missing_fraction", f.category), f.pages_missing_fraction)?;
        }
        let n = self.n_records();
        if n == 0 {
            return Err(SynthError::Infeasible("the configuration generates no records".into()));
        }
        if self.links.internal_fraction > 0.0 && n < 2 {
            return Err(SynthError::Infeasible(format!(
                "internal_fraction {} needs at least two records, config yields {n}",
                self.links.internal_fraction
            )));
        }
        Ok(())
    }

    pub fn n_records(&self) -> u64 {
        self.years.len() as u64 * self.fields.iter().map(|f| u64::from(f.records_per_year)).sum::<u64>()
    }

    /// Field scheme mapping every configured category to its discipline.
    pub fn scheme(&self) -> FieldScheme {
        let mut s = FieldScheme::new();
        for f in &self.fields {
            s.insert(f.category.clone(), f.discipline);
        }
        s
    }

    /// Expected fraction of a record's citations that falls in `window`.
    pub fn window_fraction(&self, pub_year: i32, window: WindowSpec) -> f64 {
        let w = aging_weights(pub_year, self.horizon_year, self.citation_aging);
        let (lo, hi) = window.year_range(pub_year);
        w.iter()
            .enumerate()
            .filter(|(a, _)| (lo..=hi).contains(&(pub_year + *a as i32)))
            .map(|(_, p)| p)
            .sum()
    }
}

/// Normalized citing-year profile over `pub_year..=horizon`, proportional to
/// `(a + 1/2) * exp(-a / aging)` for age `a`.
pub fn aging_weights(pub_year: i32, horizon_year: i32, aging: f64) -> Vec<f64> {
    let span = (horizon_year - pub_year).max(0) as usize;
    let raw: Vec<f64> = (0..=span).map(|a| (a as f64 + 0.5) * (-(a as f64) / aging).exp()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

fn poisson_by_inversion(lambda: f64, u: f64) -> u64 {
    let mut k = 0u64;
    let mut p = (-lambda).exp();
    let mut cdf = p;
    let cap = (lambda + 40.0 * lambda.sqrt() + 100.0) as u64;
    while u > cdf && k < cap {
        k += 1;
        p *= lambda / k as f64;
        cdf += p;
    }
    k
}

/// One draw from `model` scaled to mean `mean`.
pub fn sample_count<R: Rng + ?Sized>(rng: &mut R, mean: f64, dispersion: Option<f64>) -> u64 {
    let g = match dispersion {
        Some(r) => Gamma::new(r, 1.0 / r).expect("dispersion validated positive").sample(rng),
        None => 1.0,
    };
    let lambda = mean * g;
    let u: f64 = rng.random();
    if lambda.is_nan() || lambda <= 0.0 {
        0
    } else if lambda < 700.0 {
        poisson_by_inversion(lambda, u)
    } else {
        Poisson::new(lambda).expect("finite positive rate").sample(rng) as u64
    }
}

/// Expected share (percent) of total counts held by the top `top_pct`
/// percent of an infinite population drawn from NB(mean, dispersion), with
/// ties at the cut split proportionally.
pub fn nb_top_share(mean: f64, dispersion: Option<f64>, top_pct: f64) -> f64 {
    let q = 1.0 - top_pct / 100.0;
    let (mut log_p, log_ratio) = match dispersion {
        Some(r) => (r * (r / (r + mean)).ln(), (mean / (r + mean)).ln()),
        None => (-mean, mean.ln()),
    };
    let mut cdf = 0.0;
    let mut below = 0.0;
    let mut k = 0u64;
    loop {
        let p = log_p.exp();
        if cdf + p >= q || k > 100_000_000 {
            // k is the quantile; (cdf + p - q) of the mass at k sits above the cut.
            let top = mean - below - k as f64 * p + (cdf + p - q) * k as f64;
            return 100.0 * top / mean;
        }
        cdf += p;
        below += k as f64 * p;
        let kf = k as f64;
        log_p += match dispersion {
            Some(r) => ((kf + r) / (kf + 1.0)).ln() + log_ratio,
            None => log_ratio - (kf + 1.0).ln(),
        };
        k += 1;
    }
}

/// Dispersion `r` whose NB(mean, r) top-10% share is within `tolerance`
/// percentage points of `target`. The share falls as `r` grows, so this
/// bisects on `ln r` over [`DISPERSION_BOUNDS`].
pub fn calibrate_dispersion(target: f64, mean: f64, tolerance: f64) -> Result<f64, SynthError> {
    if !(mean.is_finite() && mean > 0.0) {
        return Err(SynthError::InvalidConfig(format!("mean must be positive, got {mean}")));
    }
    if !(10.0 < target && target < 100.0) || !(tolerance.is_finite() && tolerance > 0.0) {
        return Err(SynthError::InvalidConfig(format!(
            "calibration needs 10 < target < 100 and a positive tolerance, got {target} and {tolerance}"
        )));
    }
    let share = |r: f64| nb_top_share(mean, Some(r), 10.0);
    let (lo, hi) = DISPERSION_BOUNDS;
    let (s_lo, s_hi) = (share(lo), share(hi));
    if target > s_lo + tolerance || target < s_hi - tolerance {
        return Err(SynthError::Unreachable { target, mean, lo, hi, share_at_lo: s_lo, share_at_hi: s_hi });
    }
    let (mut a, mut b) = (lo.ln(), hi.ln());
    let mut best = (f64::INFINITY, lo);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        let r = mid.exp();
        let s = share(r);
        if (s - target).abs() < best.0 {
            best = ((s - target).abs(), r);
        }
        if (s - target).abs() <= tolerance * 1e-3 {
            break;
        }
        if s > target {
            a = mid;
        } else {
            b = mid;
        }
    }
    if best.0 > tolerance {
        return Err(SynthError::Unreachable { target, mean, lo, hi, share_at_lo: s_lo, share_at_hi: s_hi });
    }
    Ok(best.1)
}

/// Record id of generated record `g`.
pub fn synth_record_id(g: u64) -> CompactString {
    format_compact!("S{g:08}")
}

const SURNAMES: [&str; 24] = [
    "ADAMS", "BAKER", "CHEN", "DIAZ", "EVANS", "FISCHER", "GARCIA", "HANSEN", "ITO", "JONES", "KUMAR", "LOPEZ",
    "MULLER", "NGUYEN", "OKAFOR", "PETROV", "QUINN", "ROSSI", "SATO", "TANAKA", "UEDA", "VOGEL", "WANG", "YILMAZ",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct PlantedLink {
    pub citing: u32,
    pub cited: u32,
    pub citing_year: i32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlantedCell {
    pub n_papers: u64,
    /// Mean planted open-window citation mean over the cell's articles.
    pub mean_citations: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct YearTally {
    pub records: u64,
    pub articles: u64,
}

/// True attribute values of one generated record.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecordTruth {
    pub record_id: CompactString,
    pub pub_year: i32,
    pub category: CompactString,
    pub is_article: bool,
    pub jif: f64,
    pub jif_reported: bool,
    pub authors: u32,
    pub pages: u32,
    pub pages_reported: bool,
    pub references: u32,
    pub internal_references: u32,
    pub citation_mean: f64,
    pub citations: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GeneratorLedger {
    pub links: Vec<PlantedLink>,
    pub cells: BTreeMap<(CompactString, i32), PlantedCell>,
    pub years: BTreeMap<i32, YearTally>,
    pub records: Vec<RecordTruth>,
}

impl GeneratorLedger {
    pub fn n_links(&self) -> u64 {
        self.links.len() as u64
    }

    /// Writes `links.csv`, `cells.csv`, `years.csv` and `records.csv` into `dir`.
    pub fn write_sidecars(&self, dir: &Path) -> Result<(), SynthError> {
        std::fs::create_dir_all(dir)?;
        let mut w = csv::Writer::from_path(dir.join("links.csv"))?;
        w.write_record(["citing_id", "cited_id", "citing_year"])?;
        for l in &self.links {
            w.write_record([
                synth_record_id(u64::from(l.citing)).as_str(),
                synth_record_id(u64::from(l.cited)).as_str(),
                &l.citing_year.to_string(),
            ])?;
        }
        w.flush()?;
        let mut w = csv::Writer::from_path(dir.join("cells.csv"))?;
        w.write_record(["category", "pub_year", "n_papers", "planted_mean"])?;
        for ((cat, year), c) in &self.cells {
            w.write_record([cat.to_string(), year.to_string(), c.n_papers.to_string(), c.mean_citations.to_string()])?;
        }
        w.flush()?;
        let mut w = csv::Writer::from_path(dir.join("years.csv"))?;
        w.write_record(["pub_year", "records", "articles"])?;
        for (year, t) in &self.years {
            w.write_record([year.to_string(), t.records.to_string(), t.articles.to_string()])?;
        }
        w.flush()?;
        let mut w = csv::Writer::from_path(dir.join("records.csv"))?;
        for r in &self.records {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Where record `g` sits in the layout.
#[derive(Debug, Clone, Copy)]
struct Slot {
    year_idx: usize,
    field_idx: usize,
    k: u32,
}

enum RefDraft {
    Ready(CitedReference),
    Internal { u_pref: f64, u_target: f64, by_doi: bool },
}

struct Draft {
    record: PublicationRecord,
    refs: Vec<RefDraft>,
    truth: RecordTruth,
}

struct Generator<'c> {
    cfg: &'c SynthConfig,
    /// Sorted years; records are laid out in this order.
    years: Vec<i32>,
    /// First global index of every (year, field) block.
    block_starts: Vec<u64>,
    /// One past the last global index of each year.
    year_ends: Vec<u64>,
    /// Journal impact factors per field.
    journal_jif: Vec<Vec<f64>>,
    /// Citing-year profile per year index.
    aging: Vec<Vec<f64>>,
}

impl<'c> Generator<'c> {
    fn new(cfg: &'c SynthConfig) -> Self {
        let mut years = cfg.years.clone();
        years.sort_unstable();
        let mut block_starts = Vec::new();
        let mut year_ends = Vec::new();
        let mut g = 0u64;
        for _ in &years {
            for f in &cfg.fields {
                block_starts.push(g);
                g += u64::from(f.records_per_year);
            }
            year_ends.push(g);
        }
        let journal_jif = cfg
            .fields
            .iter()
            .enumerate()
            .map(|(fi, f)| {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x4a49_465f_4a4f_5552);
                rng.set_stream(fi as u64);
                (0..f.journals)
                    .map(|_| {
                        let z: f64 = rng.sample(StandardNormal);
                        f.jif.median * (f.jif.sigma * z).exp()
                    })
                    .collect()
            })
            .collect();
        let aging = years.iter().map(|&y| aging_weights(y, cfg.horizon_year, cfg.citation_aging)).collect();
        Self { cfg, years, block_starts, year_ends, journal_jif, aging }
    }

    fn n_records(&self) -> u64 {
        *self.year_ends.last().unwrap_or(&0)
    }

    fn slot(&self, g: u64) -> Slot {
        // Last block starting at or before g; empty blocks share their start
        // with the next block, so this skips them.
        let b = self.block_starts.partition_point(|&s| s <= g) - 1;
        let nf = self.cfg.fields.len();
        Slot { year_idx: b / nf, field_idx: b % nf, k: (g - self.block_starts[b]) as u32 }
    }

    fn journal_of(&self, slot: Slot) -> u32 {
        slot.k % self.cfg.fields[slot.field_idx].journals
    }

    fn source_token(&self, field_idx: usize, journal: u32) -> CompactString {
        format_compact!("{} J{journal}", self.cfg.fields[field_idx].category.to_uppercase())
    }

    fn author_key(g: u64) -> CompactString {
        let name = SURNAMES[(g.wrapping_mul(2_654_435_761) % SURNAMES.len() as u64) as usize];
        let initial = (b'A' + (g.wrapping_mul(40_503) % 26) as u8) as char;
        format_compact!("{name} {initial}")
    }

    fn doi(g: u64) -> CompactString {
        format_compact!("10.5555/syn.{g}")
    }

    /// Reference pointing at generated record `t`.
    fn reference_to(&self, t: u64, by_doi: bool) -> CitedReference {
        let slot = self.slot(t);
        if by_doi {
            let doi = Self::doi(t);
            return CitedReference {
                raw: format_compact!("DOI {doi}"),
                doi: Some(doi),
                first_author_key: None,
                ref_year: None,
                source_token: None,
                volume: None,
                first_page: None,
            };
        }
        let year = self.years[slot.year_idx];
        let author = Self::author_key(t);
        let source = self.source_token(slot.field_idx, self.journal_of(slot));
        let volume = format_compact!("{}", year - 1899);
        let page = format_compact!("{}", 1 + 20 * u64::from(slot.k));
        CitedReference {
            raw: format_compact!("{author}, {year}, {source}, V{volume}, P{page}"),
            doi: None,
            first_author_key: Some(author),
            ref_year: Some(year),
            source_token: Some(source),
            volume: Some(volume),
            first_page: Some(page),
        }
    }

    fn external_reference(g: u64, j: usize, year: i32, by_doi: bool, u: f64) -> CitedReference {
        if by_doi {
            let doi = format_compact!("10.9999/ext.{g}.{j}");
            return CitedReference {
                raw: format_compact!("DOI {doi}"),
                doi: Some(doi),
                first_author_key: None,
                ref_year: None,
                source_token: None,
                volume: None,
                first_page: None,
            };
        }
        let author = Self::author_key(g.wrapping_add(j as u64 * 7919));
        let ref_year = year - 1 - (u * 15.0) as i32;
        let source = format_compact!("EXT J{}", (u * 1000.0) as u32);
        CitedReference {
            raw: format_compact!("{author}, {ref_year}, {source}"),
            doi: None,
            first_author_key: Some(author),
            ref_year: Some(ref_year),
            source_token: Some(source),
            volume: None,
            first_page: None,
        }
    }

    fn draft(&self, g: u64) -> Draft {
        let cfg = self.cfg;
        let slot = self.slot(g);
        let field = &cfg.fields[slot.field_idx];
        let year = self.years[slot.year_idx];
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(g);

        // Identity and classification.
        let is_article = rng.random::<f64>() >= cfg.non_article_fraction;
        let u_secondary: f64 = rng.random();
        let u_other: f64 = rng.random();
        let mut categories = vec![field.category.as_str()];
        let nf = cfg.fields.len();
        if nf > 1 && u_secondary < cfg.secondary_category_fraction {
            let other = (slot.field_idx + 1 + (u_other * (nf - 1) as f64) as usize % (nf - 1)) % nf;
            categories.push(cfg.fields[other].category.as_str());
        }
        let journal = self.journal_of(slot);
        let mut record = PublicationRecord::new(
            synth_record_id(g),
            year,
            format_compact!("{}-J{journal:03}", field.category),
            &categories,
        );
        if !is_article {
            record.doc_type = "review".into();
        }
        record.doi = Some(Self::doi(g));
        record.first_author_key = Some(Self::author_key(g));
        record.source_token = Some(self.source_token(slot.field_idx, journal));
        record.volume = Some(format_compact!("{}", year - 1899));
        record.first_page = Some(format_compact!("{}", 1 + 20 * u64::from(slot.k)));

        // Attributes.
        let jif = self.journal_jif[slot.field_idx][journal as usize];
        let jif_reported = rng.random::<f64>() >= field.jif_missing_fraction;
        let z_auth: f64 = rng.sample(StandardNormal);
        let authors = (field.authors.median * (field.authors.sigma * z_auth).exp()).round().max(1.0) as u32;
        let z_pages: f64 = rng.sample(StandardNormal);
        let pages = (field.pages.median * (field.pages.sigma * z_pages).exp()).round().max(1.0) as u32;
        let pages_reported = rng.random::<f64>() >= field.pages_missing_fraction;
        record.jif = jif_reported.then_some(jif);
        record.author_count = authors;
        record.page_count = pages_reported.then_some(pages);

        // References.
        let n_refs = sample_count(&mut rng, field.references.mean, field.references.dispersion);
        let mut refs = Vec::with_capacity(n_refs as usize);
        for j in 0..n_refs as usize {
            let u_internal: f64 = rng.random();
            let u_doi: f64 = rng.random();
            let u_pref: f64 = rng.random();
            let u_target: f64 = rng.random();
            let by_doi = u_doi < cfg.links.doi_fraction;
            if u_internal < cfg.links.internal_fraction {
                refs.push(RefDraft::Internal { u_pref, u_target, by_doi });
            } else {
                refs.push(RefDraft::Ready(Self::external_reference(g, j, year, by_doi, u_target)));
            }
        }

        // Citations.
        let c = &cfg.coupling;
        let mut mu = field.citations.mean;
        mu *= (jif / field.jif.median).powf(c.jif);
        mu *= (f64::from(authors) / field.authors.median).powf(c.authors);
        mu *= (f64::from(pages) / field.pages.median).powf(c.pages);
        mu *= ((n_refs as f64 + 1.0) / (field.references.mean + 1.0)).powf(c.references);
        let k = sample_count(&mut rng, mu, field.citations.dispersion);
        let profile = &self.aging[slot.year_idx];
        let mut by_age = vec![0u32; profile.len()];
        let mut cum = Vec::with_capacity(profile.len());
        let mut acc = 0.0;
        for w in profile {
            acc += w;
            cum.push(acc);
        }
        for _ in 0..k {
            let u: f64 = rng.random::<f64>() * acc;
            let a = cum.partition_point(|&c| c <= u).min(by_age.len() - 1);
            by_age[a] += 1;
        }
        record.citations_by_year =
            Some(by_age.iter().enumerate().filter(|(_, c)| **c > 0).map(|(a, c)| (year + a as i32, *c)).collect::<YearCounts>());

        let truth = RecordTruth {
            record_id: record.record_id.clone(),
            pub_year: year,
            category: field.category.as_str().into(),
            is_article,
            jif,
            jif_reported,
            authors,
            pages,
            pages_reported,
            references: n_refs as u32,
            internal_references: 0,
            citation_mean: mu,
            citations: k,
        };
        Draft { record, refs, truth }
    }
}

struct LinkState {
    tickets: Vec<u32>,
}

impl LinkState {
    fn resolve(&mut self, gen: &Generator<'_>, g: u64, draft: Draft, ledger: &mut GeneratorLedger) -> PublicationRecord {
        let Draft { mut record, refs, mut truth } = draft;
        let year = record.pub_year;
        let eligible = gen.year_ends[gen.slot(g).year_idx];
        let mut out = Vec::with_capacity(refs.len());
        for (j, r) in refs.into_iter().enumerate() {
            match r {
                RefDraft::Ready(c) => out.push(c),
                RefDraft::Internal { by_doi, u_target, .. } if eligible < 2 => {
                    out.push(Generator::external_reference(g, j, year, by_doi, u_target));
                }
                RefDraft::Internal { u_pref, u_target, by_doi } => {
                    let mut t = if u_pref < gen.cfg.links.preferential && !self.tickets.is_empty() {
                        let i = ((u_target * self.tickets.len() as f64) as usize).min(self.tickets.len() - 1);
                        u64::from(self.tickets[i])
                    } else {
                        ((u_target * eligible as f64) as u64).min(eligible - 1)
                    };
                    if t == g {
                        t = (t + 1) % eligible;
                    }
                    self.tickets.push(t as u32);
                    ledger.links.push(PlantedLink { citing: g as u32, cited: t as u32, citing_year: year });
                    truth.internal_references += 1;
                    out.push(gen.reference_to(t, by_doi));
                }
            }
        }
        record.cited_refs = out;
        ledger.records.push(truth);
        record
    }
}

fn tally(ledger: &mut GeneratorLedger, sums: &mut BTreeMap<(CompactString, i32), (u64, f64)>, r: &PublicationRecord) {
    let t = ledger.years.entry(r.pub_year).or_default();
    t.records += 1;
    if r.is_article() {
        t.articles += 1;
        let mu = ledger.records.last().map_or(0.0, |t| t.citation_mean);
        for c in &r.subject_categories {
            let e = sums.entry((c.clone(), r.pub_year)).or_default();
            e.0 += 1;
            e.1 += mu;
        }
    }
}

/// Streams the corpus as JSON lines into `writer` and returns the ledger.
pub fn generate_corpus_to<W: Write>(config: &SynthConfig, mut writer: W) -> Result<GeneratorLedger, SynthError> {
    let mut line = Vec::with_capacity(4096);
    let ledger = generate_with(config, |record| {
        line.clear();
        serde_json::to_writer(&mut line, &record)?;
        line.push(b'\n');
        writer.write_all(&line)?;
        Ok(())
    })?;
    writer.flush()?;
    Ok(ledger)
}

/// Generates the corpus in memory.
pub fn generate_corpus(config: &SynthConfig) -> Result<(Vec<PublicationRecord>, GeneratorLedger), SynthError> {
    let mut records = Vec::new();
    let ledger = generate_with(config, |r| {
        records.push(r);
        Ok(())
    })?;
    Ok((records, ledger))
}

fn generate_with(
    config: &SynthConfig,
    mut emit: impl FnMut(PublicationRecord) -> Result<(), SynthError>,
) -> Result<GeneratorLedger, SynthError> {
    config.validate()?;
    let gen = Generator::new(config);
    let n = gen.n_records();
    if n > u64::from(u32::MAX) {
        return Err(SynthError::Infeasible(format!("{n} records exceed the supported corpus size")));
    }
    let mut ledger = GeneratorLedger::default();
    let mut state = LinkState { tickets: Vec::new() };
    let mut sums = BTreeMap::new();
    let mut start = 0u64;
    while start < n {
        let end = (start + CHUNK as u64).min(n);
        let drafts: Vec<Draft> = (start..end).into_par_iter().map(|g| gen.draft(g)).collect();
        for (g, draft) in (start..end).zip(drafts) {
            let record = state.resolve(&gen, g, draft, &mut ledger);
            tally(&mut ledger, &mut sums, &record);
            emit(record)?;
        }
        start = end;
    }
    ledger.cells = sums
        .into_iter()
        .map(|(k, (n, s))| (k, PlantedCell { n_papers: n, mean_citations: s / n as f64 }))
        .collect();
    Ok(ledger)
}

/// Writes the corpus to `path`, returning the ledger.
pub fn generate_corpus_file(config: &SynthConfig, path: &Path) -> Result<GeneratorLedger, SynthError> {
    let mut out = BufWriter::with_capacity(1 << 20, File::create(path)?);
    let ledger = generate_corpus_to(config, &mut out)?;
    out.flush()?;
    Ok(ledger)
}
