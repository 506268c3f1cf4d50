mod common;

use std::collections::BTreeMap;
use std::fs;

use citeskew::analysis::{AnalysisContext, AnalysisMatrix, FicKind, OutcomeKind, Ranking, RowKey, Scope, YearKey};
use citeskew::corpus::{assign_disciplines, Discipline};
use citeskew::inequality::CutSpec;
use citeskew::linking::{link_references, WindowSpec};
use citeskew::normalize::compute_cell_means;
use citeskew::pipeline::{reemit_report, run_pipeline, OutcomeChoice, RunConfig};
use citeskew::report::write_report;
use citeskew::synth::generate_corpus_file;
use common::fixtures;

const OPEN: WindowSpec = WindowSpec::Open { horizon_year: 2014 };

fn corpus_config(seed: u64) -> citeskew::synth::SynthConfig {
    let mut phys = fixtures::field("PHYS", Discipline::NaturalSciences, 250, 9.0, Some(0.7));
    phys.jif_missing_fraction = 0.5;
    phys.pages_missing_fraction = 0.1;
    let mut hist = fixtures::field("HIST", Discipline::Humanities, 120, 1.5, Some(0.2));
    hist.jif.median = 0.5;
    let mut cfg = fixtures::config(seed, &[1990, 2000, 2010], vec![phys, hist]);
    cfg.non_article_fraction = 0.1;
    cfg.secondary_category_fraction = 0.2;
    cfg.coupling.jif = 0.5;
    cfg.coupling.authors = 0.3;
    cfg
}

fn full_matrix(ctx: &AnalysisContext<'_>, cells: &citeskew::normalize::CellTable) -> AnalysisMatrix {
    let mut m = ctx.impact_distribution(OPEN).unwrap();
    m.merge(ctx.self_ranked(OutcomeKind::NormalizedCitations(OPEN), Some(cells)).unwrap());
    for fic in FicKind::ALL {
        for outcome in [OutcomeKind::TimesCited(OPEN), OutcomeKind::NormalizedCitations(OPEN)] {
            m.merge(ctx.fic_covariate(Some(cells), fic, outcome).unwrap());
        }
    }
    m
}

#[test]
fn matrix_invariants_on_synthetic_corpus() {
    let (snapshot, _) = fixtures::round_trip(&corpus_config(31));
    let index = link_references(&snapshot);
    let articles = snapshot.filter_articles(&[1990, 2000, 2010].into_iter().collect());
    let cells = compute_cell_means(&articles, &index, OPEN).unwrap();
    let ctx = AnalysisContext::new(&articles, &index, CutSpec::default()).unwrap();
    let m = full_matrix(&ctx, &cells);

    let mut cell_sizes: BTreeMap<(Scope, i32), u64> = BTreeMap::new();
    for r in articles.records() {
        for d in assign_disciplines(r, articles.scheme()).disciplines.iter() {
            *cell_sizes.entry((Scope::Discipline(d), r.pub_year)).or_default() += 1;
        }
        *cell_sizes.entry((Scope::Total, r.pub_year)).or_default() += 1;
    }

    for row in &m.rows {
        let b = &row.breakdown;
        assert!((b.shares.iter().sum::<f64>() - 100.0).abs() < 1e-9);
        assert!(b.gini >= 0.0 && b.gini < 1.0);
        let YearKey::Year(year) = row.key.year else { panic!("pooled row in yearly analysis") };
        assert_eq!(row.n_papers + row.n_missing, cell_sizes[&(row.key.scope, year)], "{}", row.key);
        if let Ranking::Fic(_) = row.key.ranking {
            let own = m.get(&RowKey { ranking: Ranking::SelfRank, ..row.key }).unwrap();
            assert!(own.breakdown.top_share() >= b.top_share() - 1e-9, "{}", row.key);
            // Raw and normalized rows use the same records.
            let twin_outcome = match row.key.outcome {
                OutcomeKind::TimesCited(w) => OutcomeKind::NormalizedCitations(w),
                OutcomeKind::NormalizedCitations(w) => OutcomeKind::TimesCited(w),
                OutcomeKind::LinkedRefs => unreachable!(),
            };
            let twin = m.get(&RowKey { outcome: twin_outcome, ..row.key }).unwrap();
            assert_eq!((twin.n_papers, twin.n_missing), (row.n_papers, row.n_missing));
        }
    }
    // Half the physics records lack a JIF, so the physics JIF rows are reduced.
    let jif_row = m
        .get(&RowKey {
            scope: Scope::Discipline(Discipline::NaturalSciences),
            year: YearKey::Year(2000),
            ranking: Ranking::Fic(FicKind::Jif),
            outcome: OutcomeKind::TimesCited(OPEN),
        })
        .unwrap();
    let frac = jif_row.n_missing as f64 / (jif_row.n_papers + jif_row.n_missing) as f64;
    assert!((0.35..0.65).contains(&frac), "missing fraction {frac}");
}

#[test]
fn report_lines_and_formatting() {
    let (snapshot, _) = fixtures::in_memory(&corpus_config(4));
    let index = link_references(&snapshot);
    let articles = snapshot.filter_articles(&[2000].into_iter().collect());
    let cells = compute_cell_means(&articles, &index, OPEN).unwrap();
    let ctx = AnalysisContext::new(&articles, &index, CutSpec::new(vec![50.0, 80.0, 90.0]).unwrap()).unwrap();
    let m = full_matrix(&ctx, &cells);
    let mut out = Vec::new();
    write_report(&m, &mut out).unwrap();
    let text = String::from_utf8(out.clone()).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len() - 1, m.len() * 4);
    let mut by_row: BTreeMap<String, f64> = BTreeMap::new();
    for line in &lines[1..] {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f.len(), 12);
        assert!(["bottom50", "p50_80", "p80_90", "top10"].contains(&f[5]), "{}", f[5]);
        *by_row.entry(f[..5].join(",")).or_default() += f[7].parse::<f64>().unwrap();
    }
    assert!(by_row.values().all(|s| (s - 100.0).abs() < 1e-6));
    let mut again = Vec::new();
    write_report(&m, &mut again).unwrap();
    assert_eq!(out, again);
}

#[test]
fn pipeline_outputs_are_independent_of_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = corpus_config(12);
    let records = dir.path().join("corpus.jsonl");
    let scheme = dir.path().join("scheme.csv");
    generate_corpus_file(&cfg, &records).unwrap();
    cfg.scheme().write_csv(fs::File::create(&scheme).unwrap()).unwrap();

    let mut reports = Vec::new();
    for threads in [1, 3] {
        let mut run = RunConfig::new(&records, &scheme, dir.path().join(format!("out{threads}")));
        run.threads = Some(threads);
        run.emit_cells = true;
        run.emit_links = true;
        let manifest = run_pipeline(&run).unwrap();
        assert_eq!(manifest.threads, threads);
        let out = &run.out_dir;
        let report = fs::read(out.join("report.csv")).unwrap();
        let lines = report.iter().filter(|&&b| b == b'\n').count() as u64;
        assert_eq!(lines - 1, manifest.report_lines);
        for f in ["matrix.json", "notices.log", "cells.csv", "links.csv"] {
            assert!(out.join(f).is_file(), "{f}");
        }
        let reemitted = dir.path().join(format!("again{threads}.csv"));
        reemit_report(&out.join("matrix.json"), &reemitted).unwrap();
        assert_eq!(fs::read(&reemitted).unwrap(), report);
        reports.push((report, fs::read(out.join("matrix.json")).unwrap()));
    }
    assert!(reports[0].0 == reports[1].0, "report differs");
    assert!(reports[0].1 == reports[1].1, "matrix differs");
}

#[test]
fn pipeline_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let records = dir.path().join("corpus.jsonl");
    let scheme = dir.path().join("scheme.csv");
    fs::write(&scheme, "category,discipline\nC,Humanities\n").unwrap();

    fs::write(&records, "{\"record_id\":\"a\",\"pub_year\":2000,\"doc_type\":\"article\"}\n").unwrap();
    let mut run = RunConfig::new(&records, &scheme, dir.path().join("out"));
    run.strict = true;
    assert_eq!(run_pipeline(&run).unwrap_err().exit_code(), 3);

    // Valid records, but none is ever cited or has references: no rows.
    let line = |id: &str| {
        format!(
            "{{\"record_id\":\"{id}\",\"pub_year\":2000,\"doc_type\":\"article\",\"journal_id\":\"J\",\
             \"subject_categories\":[\"C\"],\"author_count\":1,\"cited_refs\":[]}}\n"
        )
    };
    fs::write(&records, line("a") + &line("b")).unwrap();
    let mut run = RunConfig::new(&records, &scheme, dir.path().join("out"));
    run.outcomes = vec![OutcomeChoice::Raw];
    let err = run_pipeline(&run).unwrap_err();
    assert_eq!(err.exit_code(), 4, "{err}");
    assert!(fs::read_to_string(dir.path().join("out/notices.log")).unwrap().contains("total outcome is zero"));

    let run = RunConfig::new(dir.path().join("absent.jsonl"), &scheme, dir.path().join("out"));
    assert_eq!(run_pipeline(&run).unwrap_err().exit_code(), 2);
}
