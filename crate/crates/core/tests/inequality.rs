mod common;

use citeskew::inequality::{gini, percentile_shares, percentile_shares_by, CutSpec, LorenzCurve};
use common::oracle;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-9;

fn assert_close(a: &[f64], b: &[f64], tol: f64) {
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(b) {
        assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
    }
}

#[test]
fn frozen_fixtures_match_oracle() {
    let cuts = [50.0, 90.0];
    let y = [1.0, 1.0, 1.0, 7.0];
    assert_close(&oracle::shares(&y, &y, &cuts), &[20.0, 52.0, 28.0], 1e-12);
    let c = [10.0, 0.0, 5.0, 1.0];
    assert_close(&oracle::shares(&c, &[1.0, 2.0, 3.0, 4.0], &cuts), &[62.5, 35.0, 2.5], 1e-12);
    let t = [4.0, 0.0, 1.0, 1.0];
    assert_close(
        &oracle::shares(&t, &[1.0, 1.0, 2.0, 2.0], &cuts),
        &[200.0 / 3.0, 80.0 / 3.0, 20.0 / 3.0],
        1e-12,
    );
    assert!((oracle::gini_pairwise(&[1.0, 2.0, 3.0, 4.0]) - 0.25).abs() < 1e-15);
    let mut single = vec![0.0; 9];
    single.push(10.0);
    assert!((oracle::gini_pairwise(&single) - 0.9).abs() < 1e-15);
}

#[test]
fn library_matches_oracle_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for _ in 0..300 {
        let y = common::mixed_outcomes(&mut rng, 120);
        let r = common::mixed_ranking(&mut rng, y.len());
        let cuts = common::random_cuts(&mut rng);
        let spec = CutSpec::new(cuts.clone()).unwrap();
        let own = percentile_shares(&y, &spec).unwrap();
        assert_close(&own.shares, &oracle::shares(&y, &y, &cuts), TOL);
        let by = percentile_shares_by(&y, &r, &spec).unwrap();
        assert_close(&by.shares, &oracle::shares(&y, &r, &cuts), TOL);
        assert!((gini(&y).unwrap().value - oracle::gini_pairwise(&y)).abs() <= TOL);
    }
}

fn outcomes() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(
        prop_oneof![Just(0.0), (1u32..6).prop_map(f64::from), 0.0f64..1e4],
        1..150,
    )
    .prop_filter("positive total", |v| v.iter().any(|x| *x > 0.0))
}

proptest! {
    #[test]
    fn shares_sum_to_one_hundred(y in outcomes()) {
        let b = percentile_shares(&y, &CutSpec::default()).unwrap();
        prop_assert!((b.shares.iter().sum::<f64>() - 100.0).abs() <= TOL);
        prop_assert!(b.gini >= 0.0 && b.gini < 1.0);
    }

    #[test]
    fn permutation_invariant(y in outcomes(), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r: Vec<f64> = y.iter().map(|v| (v / 3.0).floor()).collect();
        let mut idx: Vec<usize> = (0..y.len()).collect();
        idx.shuffle(&mut rng);
        let yp: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
        let rp: Vec<f64> = idx.iter().map(|&i| r[i]).collect();
        let cuts = CutSpec::default();
        let a = percentile_shares_by(&y, &r, &cuts).unwrap();
        let b = percentile_shares_by(&yp, &rp, &cuts).unwrap();
        for (s, t) in a.shares.iter().zip(&b.shares) {
            prop_assert!((s - t).abs() <= TOL);
        }
        prop_assert!((a.gini - b.gini).abs() <= TOL);
    }

    #[test]
    fn scale_invariant(y in outcomes(), c in 1e-3f64..1e3) {
        let cuts = CutSpec::default();
        let a = percentile_shares(&y, &cuts).unwrap();
        let scaled: Vec<f64> = y.iter().map(|v| v * c).collect();
        let b = percentile_shares(&scaled, &cuts).unwrap();
        for (s, t) in a.shares.iter().zip(&b.shares) {
            prop_assert!((s - t).abs() <= TOL);
        }
        for (s, t) in a.densities.iter().zip(&b.densities) {
            prop_assert!((s - t).abs() <= TOL);
        }
        prop_assert!((a.gini - b.gini).abs() <= TOL);
    }

    #[test]
    fn refinement_is_additive(y in outcomes()) {
        let coarse = percentile_shares(&y, &CutSpec::new(vec![50.0, 90.0]).unwrap()).unwrap();
        let fine = percentile_shares(&y, &CutSpec::new(vec![50.0, 80.0, 90.0]).unwrap()).unwrap();
        prop_assert!((fine.shares[1] + fine.shares[2] - coarse.shares[1]).abs() <= TOL);
        prop_assert!((fine.shares[0] - coarse.shares[0]).abs() <= TOL);
        prop_assert!((fine.shares[3] - coarse.shares[2]).abs() <= TOL);
    }

    #[test]
    fn lorenz_integral_matches_pairwise_gini(y in outcomes()) {
        let curve = LorenzCurve::self_ranked(&y).unwrap();
        prop_assert!((curve.gini() - oracle::gini_pairwise(&y)).abs() <= TOL);
    }

    #[test]
    fn regressive_transfer_raises_concentration(y in outcomes(), frac in 0.0f64..1.0) {
        // Move part of a sub-top unit's outcome onto the largest unit.
        let n = y.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| y[a].total_cmp(&y[b]));
        let below_top = ((n as f64) * 0.9).floor() as usize;
        prop_assume!(below_top >= 1);
        let donor = order[below_top - 1];
        let top = order[n - 1];
        prop_assume!(donor != top && y[donor] > 0.0);
        let eps = y[donor] * frac;
        let mut z = y.clone();
        z[donor] -= eps;
        z[top] += eps;
        let cuts = CutSpec::default();
        let before = percentile_shares(&y, &cuts).unwrap();
        let after = percentile_shares(&z, &cuts).unwrap();
        prop_assert!(after.top_share() >= before.top_share() - 1e-12);
        prop_assert!(after.gini >= before.gini - 1e-12);
    }

    #[test]
    fn self_ranking_maximizes_top_share(y in outcomes(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = common::mixed_ranking(&mut rng, y.len());
        let cuts = CutSpec::default();
        let own = percentile_shares(&y, &cuts).unwrap();
        let other = percentile_shares_by(&y, &r, &cuts).unwrap();
        prop_assert!(own.top_share() >= other.top_share() - 1e-9);
    }
}
