//! Brute-force reference computations, deliberately independent of the
//! library's sort-and-pool Lorenz construction.

/// Mass below rank fraction `p`, computed unit by unit in O(n^2).
///
/// Each unit gets the mean outcome of all units sharing its ranking value,
/// occupies one slot of width 1/n, and slots are assigned by counting units
/// with a smaller ranking value (ties broken by input position).
pub fn mass_below(outcomes: &[f64], ranking: &[f64], p: f64) -> f64 {
    let n = outcomes.len();
    let x = p * n as f64;
    let mut mass = 0.0;
    for j in 0..n {
        let mut tie_sum = 0.0;
        let mut tie_n = 0usize;
        let mut below = 0usize;
        let mut ahead_in_tie = 0usize;
        for k in 0..n {
            if ranking[k] == ranking[j] {
                tie_sum += outcomes[k];
                tie_n += 1;
                if k < j {
                    ahead_in_tie += 1;
                }
            } else if ranking[k] < ranking[j] {
                below += 1;
            }
        }
        let slot = (below + ahead_in_tie) as f64;
        let overlap = (x - slot).clamp(0.0, 1.0);
        mass += tie_sum / tie_n as f64 * overlap;
    }
    mass
}

/// Group shares in percent for cut points given in percent.
pub fn shares(outcomes: &[f64], ranking: &[f64], cuts: &[f64]) -> Vec<f64> {
    let total: f64 = outcomes.iter().sum();
    let mut edges = vec![0.0];
    edges.extend(cuts.iter().map(|c| mass_below(outcomes, ranking, c / 100.0)));
    edges.push(total);
    edges.windows(2).map(|w| (w[1] - w[0]) / total * 100.0).collect()
}

/// Mean absolute pairwise difference over twice the mean, no correction.
pub fn gini_pairwise(y: &[f64]) -> f64 {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    if mean == 0.0 {
        return 0.0;
    }
    let mut acc = 0.0;
    for a in y {
        for b in y {
            acc += (a - b).abs();
        }
    }
    acc / (2.0 * n * n * mean)
}
