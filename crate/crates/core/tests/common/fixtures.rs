//! Synthetic corpora for integration tests.

use std::io::BufReader;
use std::sync::Arc;

use citeskew::corpus::{ingest_records, CorpusSnapshot, Discipline, IngestConfig, PublicationRecord};
use citeskew::synth::{
    generate_corpus, generate_corpus_to, Coupling, CountModel, FieldConfig, GeneratorLedger, LinkConfig, LogNormal,
    SynthConfig,
};

pub fn field(category: &str, discipline: Discipline, records: u32, mean: f64, dispersion: Option<f64>) -> FieldConfig {
    FieldConfig {
        category: category.to_string(),
        discipline,
        records_per_year: records,
        citations: CountModel { mean, dispersion },
        journals: 10,
        jif: LogNormal { median: 2.0, sigma: 0.5 },
        jif_missing_fraction: 0.0,
        authors: LogNormal { median: 3.0, sigma: 0.5 },
        pages: LogNormal { median: 10.0, sigma: 0.3 },
        pages_missing_fraction: 0.0,
        references: CountModel { mean: 6.0, dispersion: Some(4.0) },
    }
}

pub fn config(seed: u64, years: &[i32], fields: Vec<FieldConfig>) -> SynthConfig {
    SynthConfig {
        seed,
        horizon_year: 2014,
        years: years.to_vec(),
        non_article_fraction: 0.0,
        secondary_category_fraction: 0.0,
        citation_aging: 3.0,
        coupling: Coupling::default(),
        links: LinkConfig::default(),
        fields,
    }
}

/// Generates `cfg`, writes it as JSON lines and ingests it back.
pub fn round_trip(cfg: &SynthConfig) -> (CorpusSnapshot, GeneratorLedger) {
    let mut bytes = Vec::new();
    let ledger = generate_corpus_to(cfg, &mut bytes).expect("generation succeeds");
    let config = IngestConfig { horizon_year: cfg.horizon_year, ..IngestConfig::default() };
    let snapshot = ingest_records(BufReader::new(bytes.as_slice()), Arc::new(cfg.scheme()), &config).expect("ingest succeeds");
    assert!(snapshot.rejects().is_empty(), "{:?}", &snapshot.rejects()[..1]);
    (snapshot, ledger)
}

pub fn in_memory(cfg: &SynthConfig) -> (CorpusSnapshot, GeneratorLedger) {
    let (records, ledger): (Vec<PublicationRecord>, _) = generate_corpus(cfg).expect("generation succeeds");
    let snapshot = CorpusSnapshot::from_records(records, Arc::new(cfg.scheme()), cfg.horizon_year).expect("valid records");
    (snapshot, ledger)
}
