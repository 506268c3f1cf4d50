//! `citeskew`: citation concentration analyses from the command line.

use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::parser::ValueSource;
use clap::{ArgMatches, Args, CommandFactory, FromArgMatches, Parser, Subcommand};

use citeskew::analysis::FicKind;
use citeskew::corpus::CorpusStats;
use citeskew::inequality::{percentile_shares, CutSpec, InequalityError};
use citeskew::linking::WindowSpec;
use citeskew::pipeline::{load_corpus, load_scheme, reemit_report, run_pipeline, OutcomeChoice, PipelineError, RunConfig};
use citeskew::synth::{generate_corpus_file, SynthConfig, SynthError};

const EXIT_CODES: &str = "\
Exit status:
  0   success
  1   other failure (I/O, invalid configuration)
  2   missing input file
  3   input schema violation or rejected records
  4   degenerate analysis (no rows, zero total outcome)
  64  command-line usage error";

#[derive(Parser, Debug)]
#[command(name = "citeskew", version, about = "Percentile shares, Gini coefficients and normalized citation scores")]
#[command(after_help = EXIT_CODES)]
struct Cli {
    /// Log filter for standard error (error, warn, info, debug, trace); RUST_LOG overrides it
    #[arg(long, global = true, default_value = "info")]
    log_level: String,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a seeded synthetic corpus
    Synth(SynthArgs),
    /// Validate a corpus without analyzing it
    Ingest(IngestArgs),
    /// Run the full pipeline and write report files
    Analyze(AnalyzeArgs),
    /// Percentile shares and Gini of numbers read from standard input
    Shares(SharesArgs),
    /// Rewrite report.csv from a saved matrix.json
    Report(ReportArgs),
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// Generator configuration (TOML)
    #[arg(long)]
    config: PathBuf,
    /// Override the configured seed
    #[arg(long)]
    seed: Option<u64>,
    /// Output corpus (JSON lines)
    #[arg(long)]
    out: PathBuf,
    /// Directory for the ground-truth ledger CSVs
    #[arg(long)]
    ledger_dir: Option<PathBuf>,
    /// Write the category-to-discipline scheme CSV here
    #[arg(long)]
    scheme_out: Option<PathBuf>,
    /// Worker threads [default: all cores]
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args, Debug)]
struct IngestArgs {
    /// Corpus (JSON lines)
    #[arg(long)]
    records: PathBuf,
    /// Category-to-discipline scheme (CSV)
    #[arg(long)]
    scheme: PathBuf,
    /// Latest admissible publication year
    #[arg(long, default_value_t = 2014)]
    horizon: i32,
    /// Stop at the first malformed record
    #[arg(long)]
    strict: bool,
    /// Write corpus statistics as JSON here
    #[arg(long)]
    stats_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    /// Run configuration (TOML); flags given on the command line override it
    #[arg(long)]
    config: Option<PathBuf>,
    /// Corpus (JSON lines)
    #[arg(long, required_unless_present = "config")]
    records: Option<PathBuf>,
    /// Category-to-discipline scheme (CSV)
    #[arg(long, required_unless_present = "config")]
    scheme: Option<PathBuf>,
    /// Output directory
    #[arg(long, required_unless_present = "config")]
    out: Option<PathBuf>,
    /// Publication years to analyze
    #[arg(long, value_delimiter = ',', default_value = "1990,2000,2010")]
    years: Vec<i32>,
    /// Citation window: open:YYYY, fixed:K or fixed:A-B
    #[arg(long, default_value = "open:2014")]
    window: WindowSpec,
    /// Fixed window for the pooled density profile
    #[arg(long, default_value = "fixed:3")]
    fixed_window: WindowSpec,
    /// Cut percents separating the groups
    #[arg(long, default_value = "50,90")]
    cuts: CutSpec,
    /// Ranking attributes: all_refs, linked_refs, authors, pages, jif
    #[arg(long, value_delimiter = ',', default_value = "all_refs,linked_refs,authors,pages,jif")]
    fic: Vec<FicKind>,
    /// Outcomes: raw, mncs
    #[arg(long, value_delimiter = ',', default_value = "raw,mncs")]
    outcome: Vec<OutcomeChoice>,
    /// Data horizon year
    #[arg(long, default_value_t = 2014)]
    horizon: i32,
    /// Worker threads [default: all cores]
    #[arg(long)]
    threads: Option<usize>,
    /// Stop at the first malformed record
    #[arg(long)]
    strict: bool,
    /// Also write links.csv
    #[arg(long)]
    emit_links: bool,
    /// Also write cells.csv
    #[arg(long)]
    emit_cells: bool,
}

#[derive(Args, Debug)]
struct SharesArgs {
    /// Cut percents separating the groups
    #[arg(long, default_value = "50,90")]
    cuts: CutSpec,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// Saved analysis matrix
    #[arg(long)]
    matrix: PathBuf,
    /// Report CSV to write
    #[arg(long)]
    out: PathBuf,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        Failure { code: e.exit_code() as u8, message: e.to_string() }
    }
}

impl From<SynthError> for Failure {
    fn from(e: SynthError) -> Self {
        let code = match &e {
            SynthError::Io(err) if err.kind() == io::ErrorKind::NotFound => 2,
            _ => 1,
        };
        Failure { code, message: e.to_string() }
    }
}

fn fail(code: u8, message: impl Into<String>) -> Failure {
    Failure { code, message: message.into() }
}

fn io_fail(path: &Path) -> impl FnOnce(io::Error) -> Failure + '_ {
    move |e| fail(1, format!("{}: {e}", path.display()))
}

fn init_logging(level: &str) {
    env_logger::Builder::new().parse_filters(level).parse_default_env().format_timestamp(None).init();
}

fn set_threads(threads: Option<usize>) -> Result<(), Failure> {
    if let Some(n) = threads {
        if n == 0 {
            return Err(fail(1, "--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| fail(1, e.to_string()))?;
    }
    Ok(())
}

fn synth(args: SynthArgs) -> Result<(), Failure> {
    if !args.config.is_file() {
        return Err(fail(2, format!("missing input: {}", args.config.display())));
    }
    set_threads(args.threads)?;
    let mut config = SynthConfig::from_path(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let ledger = generate_corpus_file(&config, &args.out)?;
    if let Some(dir) = &args.ledger_dir {
        ledger.write_sidecars(dir)?;
    }
    if let Some(path) = &args.scheme_out {
        let file = std::fs::File::create(path).map_err(io_fail(path))?;
        config.scheme().write_csv(file).map_err(|e| fail(1, e.to_string()))?;
    }
    log::info!("wrote {} records with {} planted links to {}", ledger.records.len(), ledger.links.len(), args.out.display());
    Ok(())
}

fn ingest(args: IngestArgs) -> Result<(), Failure> {
    let scheme = Arc::new(load_scheme(&args.scheme)?);
    let snapshot = load_corpus(&args.records, scheme, args.horizon, args.strict)?;
    let stats: &CorpusStats = snapshot.stats();
    if let Some(path) = &args.stats_out {
        let file = std::fs::File::create(path).map_err(io_fail(path))?;
        serde_json::to_writer_pretty(BufWriter::new(file), stats).map_err(|e| fail(1, e.to_string()))?;
    }
    let mut out = io::stdout().lock();
    let _ = writeln!(out, "records\t{}", stats.n_records);
    let _ = writeln!(out, "rejected\t{}", snapshot.rejects().len());
    for (year, n) in &stats.per_year {
        let _ = writeln!(out, "year {year}\t{n}");
    }
    for (d, n) in &stats.per_discipline {
        let _ = writeln!(out, "discipline {d}\t{n}");
    }
    let _ = writeln!(out, "unmapped\t{}", stats.unmapped_records);
    for r in snapshot.rejects() {
        log::warn!("line {}: {}", r.line, r.reason);
    }
    if snapshot.rejects().is_empty() {
        Ok(())
    } else {
        Err(fail(3, format!("{} records rejected", snapshot.rejects().len())))
    }
}

fn analyze_config(args: AnalyzeArgs, m: &ArgMatches) -> Result<RunConfig, Failure> {
    let given = |id: &str| m.value_source(id) == Some(ValueSource::CommandLine);
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
                io::ErrorKind::NotFound => fail(2, format!("missing input: {}", path.display())),
                _ => fail(1, format!("{}: {e}", path.display())),
            })?;
            RunConfig::from_toml_str(&text)?
        }
        None => RunConfig::new(PathBuf::new(), PathBuf::new(), PathBuf::new()),
    };
    if let Some(p) = args.records {
        cfg.records = p;
    }
    if let Some(p) = args.scheme {
        cfg.scheme = p;
    }
    if let Some(p) = args.out {
        cfg.out_dir = p;
    }
    let no_config = args.config.is_none();
    if no_config || given("years") {
        cfg.years = args.years;
    }
    if no_config || given("window") {
        cfg.window = args.window;
    }
    if no_config || given("fixed_window") {
        cfg.fixed_window = args.fixed_window;
    }
    if no_config || given("cuts") {
        cfg.cuts = args.cuts;
    }
    if no_config || given("fic") {
        cfg.fics = args.fic;
    }
    if no_config || given("outcome") {
        cfg.outcomes = args.outcome;
    }
    if no_config || given("horizon") {
        cfg.horizon_year = args.horizon;
    }
    if args.threads.is_some() {
        cfg.threads = args.threads;
    }
    cfg.strict |= args.strict;
    cfg.emit_links |= args.emit_links;
    cfg.emit_cells |= args.emit_cells;
    Ok(cfg)
}

fn analyze(config: RunConfig) -> Result<(), Failure> {
    let manifest = run_pipeline(&config)?;
    log::info!(
        "{} rows from {} articles written to {} in {} ms",
        manifest.rows,
        manifest.articles_analyzed,
        config.out_dir.display(),
        manifest.timings.ingest_ms
            + manifest.timings.link_ms
            + manifest.timings.normalize_ms
            + manifest.timings.analyze_ms
            + manifest.timings.report_ms
    );
    Ok(())
}

/// Up to six decimals, trailing zeros dropped.
fn fmt_num(v: f64) -> String {
    let s = format!("{v:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

fn shares(args: SharesArgs) -> Result<(), Failure> {
    let mut input = String::new();
    io::stdin().read_to_string(&mut input).map_err(|e| fail(1, format!("stdin: {e}")))?;
    let values = input
        .split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|_| fail(3, format!("not a number: {t:?}"))))
        .collect::<Result<Vec<_>, _>>()?;
    let b = percentile_shares(&values, &args.cuts).map_err(|e| match e {
        InequalityError::Empty | InequalityError::ZeroTotal => fail(4, e.to_string()),
        other => fail(3, other.to_string()),
    })?;
    let mut out = io::stdout().lock();
    let _ = writeln!(out, "group\twidth_pct\tshare_pct\tdensity");
    for i in 0..b.shares.len() {
        let _ = writeln!(out, "{}\t{}\t{}\t{}", b.labels[i], fmt_num(b.widths[i]), fmt_num(b.shares[i]), fmt_num(b.densities[i]));
    }
    let _ = writeln!(out, "gini\t{}", fmt_num(b.gini));
    Ok(())
}

fn report(args: ReportArgs) -> Result<(), Failure> {
    let rows = reemit_report(&args.matrix, &args.out)?;
    log::info!("wrote {rows} rows to {}", args.out.display());
    Ok(())
}

fn main() -> ExitCode {
    let matches = match Cli::command().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 64 } else { 0 });
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(64);
        }
    };
    let level_given = matches.value_source("log_level") == Some(ValueSource::CommandLine);
    let result = match cli.command {
        Command::Analyze(args) => {
            let sub = matches.subcommand_matches("analyze").expect("analyze matched");
            analyze_config(args, sub).and_then(|cfg| {
                init_logging(if level_given { &cli.log_level } else { &cfg.log_level });
                analyze(cfg)
            })
        }
        command => {
            init_logging(&cli.log_level);
            match command {
                Command::Synth(a) => synth(a),
                Command::Ingest(a) => ingest(a),
                Command::Shares(a) => shares(a),
                Command::Report(a) => report(a),
                Command::Analyze(_) => unreachable!(),
            }
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
