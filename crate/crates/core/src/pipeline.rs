//! The end-to-end run: ingest, link, normalize, analyze, report.
//!
//! Outputs land in the run's output directory:
//!
//! | file | contents |
//! |---|---|
//! | `report.csv` | one line per row and group |
//! | `matrix.json` | the analysis matrix, re-emittable with [`reemit_report`] |
//! | `notices.log` | omitted rows and rejected input lines |
//! | `manifest.json` | inputs, config hash, counts and timings |
//! | `links.csv`, `cells.csv` | optional audit tables |

use std::collections::BTreeSet;
use std::fmt;
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::analysis::{AnalysisContext, AnalysisError, AnalysisMatrix, FicKind, OutcomeKind};
use crate::corpus::{ingest_records, CorpusSnapshot, FieldScheme, IngestConfig, IngestError, MalformedPolicy, SchemeError};
use crate::inequality::CutSpec;
use crate::linking::{link_references, LinkError, WindowSpec};
use crate::normalize::{compute_cell_means, NormalizeError};
use crate::report::{read_matrix_json, write_matrix_json, write_report_file, ReportError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("missing input: {}", .0.display())]
    MissingInput(PathBuf),
    #[error("invalid run configuration: {0}")]
    Config(String),
    #[error("input schema violation: {0}")]
    Schema(String),
    #[error("the analysis produced no rows; see {}", .0.display())]
    NoRows(PathBuf),
    #[error("{context}: {source}")]
    Io { context: String, source: io::Error },
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Normalize(#[from] NormalizeError),
    #[error(transparent)]
    Link(#[from] LinkError),
    #[error(transparent)]
    Report(#[from] ReportError),
}

impl PipelineError {
    /// Process exit status: 2 missing input, 3 schema violation, 4 no rows,
    /// 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::MissingInput(_) => 2,
            PipelineError::Schema(_) => 3,
            PipelineError::NoRows(_) => 4,
            _ => 1,
        }
    }

    fn io(context: impl Into<String>) -> impl FnOnce(io::Error) -> PipelineError {
        let context = context.into();
        move |source| PipelineError::Io { context, source }
    }
}

/// Citation outcome variants requested for the covariate analyses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeChoice {
    Raw,
    Mncs,
}

impl FromStr for OutcomeChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "raw" => Ok(OutcomeChoice::Raw),
            "mncs" => Ok(OutcomeChoice::Mncs),
            other => Err(format!("unknown outcome {other:?}, expected raw or mncs")),
        }
    }
}

impl fmt::Display for OutcomeChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutcomeChoice::Raw => "raw",
            OutcomeChoice::Mncs => "mncs",
        })
    }
}

/// Everything a run needs; readable from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Corpus in JSON lines.
    pub records: PathBuf,
    /// Category-to-discipline CSV.
    pub scheme: PathBuf,
    pub out_dir: PathBuf,
    #[serde(default = "default_years")]
    pub years: Vec<i32>,
    /// Window for the impact distributions and covariate analyses.
    #[serde(default = "default_window")]
    pub window: WindowSpec,
    /// Window for the pooled density profile.
    #[serde(default = "WindowSpec::three_year")]
    pub fixed_window: WindowSpec,
    #[serde(default)]
    pub cuts: CutSpec,
    #[serde(default = "default_fics")]
    pub fics: Vec<FicKind>,
    #[serde(default = "default_outcomes")]
    pub outcomes: Vec<OutcomeChoice>,
    #[serde(default = "default_horizon")]
    pub horizon_year: i32,
    /// Worker threads; all available cores when absent.
    #[serde(default)]
    pub threads: Option<usize>,
    /// Abort on the first malformed record instead of skipping it.
    #[serde(default)]
    pub strict: bool,
    #[serde(default)]
    pub emit_links: bool,
    #[serde(default)]
    pub emit_cells: bool,
    #[serde(default = "default_log_level")]
    pub log_level: String,
}

pub fn default_years() -> Vec<i32> {
    vec![1990, 2000, 2010]
}

pub fn default_window() -> WindowSpec {
    WindowSpec::open(2014)
}

pub fn default_fics() -> Vec<FicKind> {
    FicKind::ALL.to_vec()
}

pub fn default_outcomes() -> Vec<OutcomeChoice> {
    vec![OutcomeChoice::Raw, OutcomeChoice::Mncs]
}

fn default_horizon() -> i32 {
    2014
}

fn default_log_level() -> String {
    "info".to_string()
}

impl RunConfig {
    pub fn new(records: impl Into<PathBuf>, scheme: impl Into<PathBuf>, out_dir: impl Into<PathBuf>) -> Self {
        Self {
            records: records.into(),
            scheme: scheme.into(),
            out_dir: out_dir.into(),
            years: default_years(),
            window: default_window(),
            fixed_window: WindowSpec::three_year(),
            cuts: CutSpec::default(),
            fics: default_fics(),
            outcomes: default_outcomes(),
            horizon_year: default_horizon(),
            threads: None,
            strict: false,
            emit_links: false,
            emit_cells: false,
            log_level: default_log_level(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self, PipelineError> {
        toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        for p in [&self.records, &self.scheme] {
            if !p.is_file() {
                return Err(PipelineError::MissingInput(p.clone()));
            }
        }
        let bad = |m: String| Err(PipelineError::Config(m));
        if self.years.is_empty() {
            return bad("no publication years selected".into());
        }
        if let Some(&y) = self.years.iter().find(|&&y| y > self.horizon_year) {
            return bad(format!("year {y} lies after the horizon {}", self.horizon_year));
        }
        let latest = *self.years.iter().max().expect("non-empty");
        self.window.check_covers(latest).map_err(|e| PipelineError::Config(e.to_string()))?;
        if !matches!(self.fixed_window, WindowSpec::Fixed { .. }) {
            return bad(format!("fixed_window must be a fixed window, got {}", self.fixed_window));
        }
        if self.outcomes.is_empty() {
            return bad("no outcomes selected".into());
        }
        if self.threads == Some(0) {
            return bad("threads must be at least 1".into());
        }
        Ok(())
    }

    /// SHA-256 of the configuration, excluding settings that cannot change
    /// the report (threads, log level).
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.threads = None;
        canonical.log_level = String::new();
        let bytes = serde_json::to_vec(&canonical).expect("config serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Timings {
    pub ingest_ms: u128,
    pub link_ms: u128,
    pub normalize_ms: u128,
    pub analyze_ms: u128,
    pub report_ms: u128,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
    pub config: RunConfig,
    pub threads: usize,
    pub records_bytes: u64,
    pub records_ingested: u64,
    pub records_rejected: u64,
    pub articles_analyzed: u64,
    pub references: u64,
    pub links: u64,
    pub ambiguous_references: u64,
    pub cells: u64,
    pub rows: u64,
    pub report_lines: u64,
    pub notices: u64,
    pub timings: Timings,
}

pub fn load_scheme(path: &Path) -> Result<FieldScheme, PipelineError> {
    if !path.is_file() {
        return Err(PipelineError::MissingInput(path.to_path_buf()));
    }
    FieldScheme::from_path(path).map_err(|e| match e {
        SchemeError::Io(source) => PipelineError::Io { context: format!("reading {}", path.display()), source },
        other => PipelineError::Schema(other.to_string()),
    })
}

fn ingest_error(e: IngestError, path: &Path) -> PipelineError {
    match e {
        IngestError::Io(source) => PipelineError::Io { context: format!("reading {}", path.display()), source },
        other => PipelineError::Schema(other.to_string()),
    }
}

/// Reads and validates a corpus file.
pub fn load_corpus(records: &Path, scheme: Arc<FieldScheme>, horizon_year: i32, strict: bool) -> Result<CorpusSnapshot, PipelineError> {
    let file = File::open(records).map_err(|e| match e.kind() {
        io::ErrorKind::NotFound => PipelineError::MissingInput(records.to_path_buf()),
        _ => PipelineError::Io { context: format!("opening {}", records.display()), source: e },
    })?;
    let config = IngestConfig {
        horizon_year,
        on_malformed: if strict { MalformedPolicy::Fatal } else { MalformedPolicy::Skip },
        ..IngestConfig::default()
    };
    ingest_records(BufReader::with_capacity(1 << 20, file), scheme, &config).map_err(|e| ingest_error(e, records))
}

fn create(path: &Path) -> Result<BufWriter<File>, PipelineError> {
    File::create(path).map(BufWriter::new).map_err(PipelineError::io(format!("creating {}", path.display())))
}

fn ms(t: Instant) -> u128 {
    t.elapsed().as_millis()
}

/// Runs the whole pipeline, using `config.threads` workers.
pub fn run_pipeline(config: &RunConfig) -> Result<Manifest, PipelineError> {
    config.validate()?;
    let threads = config.threads.unwrap_or_else(rayon::current_num_threads);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| PipelineError::Config(format!("cannot start {threads} worker threads: {e}")))?;
    pool.install(|| run_in_pool(config, threads))
}

fn run_in_pool(config: &RunConfig, threads: usize) -> Result<Manifest, PipelineError> {
    let out = &config.out_dir;
    fs::create_dir_all(out).map_err(PipelineError::io(format!("creating {}", out.display())))?;
    let mut timings = Timings::default();

    let t = Instant::now();
    let scheme = Arc::new(load_scheme(&config.scheme)?);
    let snapshot = load_corpus(&config.records, scheme, config.horizon_year, config.strict)?;
    let records_ingested = snapshot.len() as u64;
    let rejects = snapshot.rejects().to_vec();
    timings.ingest_ms = ms(t);
    log::info!("ingested {records_ingested} records, rejected {}", rejects.len());

    let t = Instant::now();
    let index = link_references(&snapshot);
    if config.emit_links {
        let mut w = create(&out.join("links.csv"))?;
        index.write_links_csv(&mut w)?;
        w.flush().map_err(PipelineError::io("writing links.csv"))?;
    }
    timings.link_ms = ms(t);

    let years: BTreeSet<i32> = config.years.iter().copied().collect();
    let articles = snapshot.into_articles(&years);
    log::info!("{} articles in the selected years", articles.len());

    let t = Instant::now();
    let wants_mncs = config.outcomes.contains(&OutcomeChoice::Mncs);
    let cells = if wants_mncs { Some(compute_cell_means(&articles, &index, config.window)?) } else { None };
    if let (Some(cells), true) = (&cells, config.emit_cells) {
        let mut w = create(&out.join("cells.csv"))?;
        cells.write_csv(&mut w)?;
        w.flush().map_err(PipelineError::io("writing cells.csv"))?;
    }
    timings.normalize_ms = ms(t);

    let t = Instant::now();
    let ctx = AnalysisContext::new(&articles, &index, config.cuts.clone())?;
    let mut matrix = AnalysisMatrix::default();
    if !articles.is_empty() {
        matrix.merge(ctx.impact_distribution(config.window)?);
        matrix.merge(ctx.density_profile(config.fixed_window)?);
        let mut outcomes = config.outcomes.clone();
        outcomes.sort();
        outcomes.dedup();
        for choice in outcomes {
            let outcome = match choice {
                OutcomeChoice::Raw => OutcomeKind::TimesCited(config.window),
                OutcomeChoice::Mncs => {
                    let o = OutcomeKind::NormalizedCitations(config.window);
                    matrix.merge(ctx.self_ranked(o, cells.as_ref())?);
                    o
                }
            };
            for &fic in &config.fics {
                matrix.merge(ctx.fic_covariate(cells.as_ref(), fic, outcome)?);
            }
        }
    }
    timings.analyze_ms = ms(t);

    let t = Instant::now();
    let notices_path = out.join("notices.log");
    let mut notices = create(&notices_path)?;
    let write_err = PipelineError::io("writing notices.log");
    (|| -> io::Result<()> {
        for r in &rejects {
            writeln!(notices, "input line {}: {}", r.line, r.reason)?;
        }
        for n in &matrix.notices {
            writeln!(notices, "{n}")?;
        }
        if articles.is_empty() {
            writeln!(notices, "no articles published in the selected years")?;
        }
        notices.flush()
    })()
    .map_err(write_err)?;
    if matrix.is_empty() {
        return Err(PipelineError::NoRows(notices_path));
    }
    write_report_file(&matrix, &out.join("report.csv"))?;
    let mut w = create(&out.join("matrix.json"))?;
    write_matrix_json(&matrix, &mut w)?;
    w.flush().map_err(PipelineError::io("writing matrix.json"))?;
    timings.report_ms = ms(t);

    let meta = index.metadata();
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: config.hash(),
        config: config.clone(),
        threads,
        records_bytes: fs::metadata(&config.records).map(|m| m.len()).unwrap_or(0),
        records_ingested,
        records_rejected: rejects.len() as u64,
        articles_analyzed: articles.len() as u64,
        references: meta.all_refs,
        links: meta.links,
        ambiguous_references: meta.ambiguous_refs,
        cells: cells.as_ref().map_or(0, |c| c.len() as u64),
        rows: matrix.len() as u64,
        report_lines: matrix.rows.iter().map(|r| r.breakdown.shares.len() as u64).sum(),
        notices: (rejects.len() + matrix.notices.len()) as u64,
        timings,
    };
    let mut w = create(&out.join("manifest.json"))?;
    serde_json::to_writer_pretty(&mut w, &manifest).map_err(|e| PipelineError::Io {
        context: "writing manifest.json".into(),
        source: e.into(),
    })?;
    w.flush().map_err(PipelineError::io("writing manifest.json"))?;
    Ok(manifest)
}

/// Rewrites a report from a saved `matrix.json`.
pub fn reemit_report(matrix_path: &Path, report_path: &Path) -> Result<usize, PipelineError> {
    let file = File::open(matrix_path).map_err(|e| match e.kind() {
        io::ErrorKind::NotFound => PipelineError::MissingInput(matrix_path.to_path_buf()),
        _ => PipelineError::Io { context: format!("opening {}", matrix_path.display()), source: e },
    })?;
    let matrix = read_matrix_json(BufReader::new(file)).map_err(|e| PipelineError::Schema(e.to_string()))?;
    if matrix.is_empty() {
        return Err(PipelineError::NoRows(matrix_path.to_path_buf()));
    }
    write_report_file(&matrix, report_path)?;
    Ok(matrix.len())
}
