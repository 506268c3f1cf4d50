#![allow(dead_code)]

pub mod fixtures;
pub mod oracle;

use rand::Rng;

/// Random outcome vector of length 1..=max_n mixing zeros, small integers
/// (ties) and continuous values. The total is always positive.
pub fn mixed_outcomes<R: Rng>(rng: &mut R, max_n: usize) -> Vec<f64> {
    let n = rng.random_range(1..=max_n);
    let mut y: Vec<f64> = (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            if u < 0.3 {
                0.0
            } else if u < 0.7 {
                rng.random_range(1..=5) as f64
            } else {
                (rng.random::<f64>() * 4.0).exp()
            }
        })
        .collect();
    if y.iter().all(|v| *v == 0.0) {
        let i = rng.random_range(0..n);
        y[i] = 1.0;
    }
    y
}

/// Ranking vector with heavy ties or continuous values.
pub fn mixed_ranking<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    if rng.random::<bool>() {
        (0..n).map(|_| rng.random_range(0..=5) as f64).collect()
    } else {
        (0..n).map(|_| rng.random::<f64>() * 100.0).collect()
    }
}

/// Random valid cut list (1 to 4 cuts) in percent.
pub fn random_cuts<R: Rng>(rng: &mut R) -> Vec<f64> {
    let k = rng.random_range(1..=4);
    let mut c: Vec<f64> = (0..k).map(|_| rng.random_range(1..100) as f64).collect();
    c.sort_by(f64::total_cmp);
    c.dedup();
    c
}
