mod common;

use citeskew::analysis::{AnalysisContext, FicKind, OutcomeKind, Ranking, RowKey, Scope, YearKey};
use citeskew::corpus::Discipline;
use citeskew::inequality::{percentile_shares, CutSpec};
use citeskew::linking::{link_references, WindowSpec};
use citeskew::synth::{calibrate_dispersion, generate_corpus, generate_corpus_to, nb_top_share, sample_count, SynthConfig};
use common::fixtures;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn moments(sample: &[u64]) -> (f64, f64) {
    let n = sample.len() as f64;
    let mean = sample.iter().sum::<u64>() as f64 / n;
    let var = sample.iter().map(|&k| (k as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

fn counts(cfg: &SynthConfig) -> Vec<u64> {
    generate_corpus(cfg).unwrap().1.records.iter().map(|t| t.citations).collect()
}

#[test]
fn poisson_moments() {
    let mut cfg = fixtures::config(1, &[2000], vec![fixtures::field("C", Discipline::Agricultural, 100_000, 5.0, Some(1e6))]);
    cfg.links.internal_fraction = 0.0;
    let (mean, var) = moments(&counts(&cfg));
    assert!((mean - 5.0).abs() < 0.2, "mean {mean}");
    assert!((var - 5.0).abs() < 0.5, "variance {var}");
}

#[test]
fn negative_binomial_variance() {
    let (mu, r) = (5.0, 0.5);
    let mut cfg = fixtures::config(2, &[2000], vec![fixtures::field("C", Discipline::Agricultural, 100_000, mu, Some(r))]);
    cfg.links.internal_fraction = 0.0;
    let (mean, var) = moments(&counts(&cfg));
    let expected = mu + mu * mu / r;
    assert!((mean - mu).abs() < 0.2, "mean {mean}");
    assert!((var - expected).abs() / expected < 0.1, "variance {var} vs {expected}");
}

#[test]
fn same_seed_same_bytes_other_seed_differs() {
    let cfg = fixtures::config(
        77,
        &[1990, 2000],
        vec![
            fixtures::field("A", Discipline::MedicalHealth, 150, 4.0, Some(1.0)),
            fixtures::field("B", Discipline::Humanities, 50, 1.0, None),
        ],
    );
    let run = |cfg: &SynthConfig| {
        let mut out = Vec::new();
        let ledger = generate_corpus_to(cfg, &mut out).unwrap();
        (out, ledger)
    };
    let (a, la) = run(&cfg);
    let (b, lb) = run(&cfg);
    assert_eq!(a, b);
    assert_eq!(la, lb);
    let mut other = cfg.clone();
    other.seed = 78;
    assert_ne!(run(&other).0, a);
}

#[test]
fn calibration_survives_resimulation() {
    let r = calibrate_dispersion(50.0, 10.0, 0.05).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let y: Vec<f64> = (0..100_000).map(|_| sample_count(&mut rng, 10.0, Some(r)) as f64).collect();
    let top = percentile_shares(&y, &CutSpec::default()).unwrap().top_share();
    assert!((top - 50.0).abs() <= 2.0, "re-simulated top share {top}");
}

#[test]
fn analytic_top_share_matches_sampling() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for (mu, r) in [(3.0, 0.3), (10.0, 2.0), (1.0, 50.0)] {
        let y: Vec<f64> = (0..200_000).map(|_| sample_count(&mut rng, mu, Some(r)) as f64).collect();
        let sim = percentile_shares(&y, &CutSpec::default()).unwrap().top_share();
        let exact = nb_top_share(mu, Some(r), 10.0);
        assert!((sim - exact).abs() < 0.5, "mu {mu} r {r}: {sim} vs {exact}");
    }
}

#[test]
fn stronger_coupling_never_lowers_top_share_by_that_attribute() {
    let base = {
        let mut c = fixtures::config(8, &[2000], vec![fixtures::field("C", Discipline::EngineeringTechnology, 3000, 6.0, Some(1.0))]);
        c.links.internal_fraction = 0.0;
        c
    };
    let top_by_authors = |beta: f64| {
        let mut cfg = base.clone();
        cfg.coupling.authors = beta;
        let (snapshot, _) = fixtures::in_memory(&cfg);
        let index = link_references(&snapshot);
        let ctx = AnalysisContext::new(&snapshot, &index, CutSpec::default()).unwrap();
        let w = WindowSpec::open(2014);
        let m = ctx.fic_covariate(None, FicKind::Authors, OutcomeKind::TimesCited(w)).unwrap();
        let key = RowKey {
            scope: Scope::Total,
            year: YearKey::Year(2000),
            ranking: Ranking::Fic(FicKind::Authors),
            outcome: OutcomeKind::TimesCited(w),
        };
        m.get(&key).unwrap().breakdown.top_share()
    };
    let mut prev = top_by_authors(0.0);
    for beta in [0.25, 0.5, 1.0, 2.0] {
        let next = top_by_authors(beta);
        assert!(next >= prev - 1e-9, "beta {beta}: {next} < {prev}");
        prev = next;
    }
}
