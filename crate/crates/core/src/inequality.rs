//! Percentile shares, share densities and Gini coefficients.
//!
//! Every computation here goes through a [`LorenzCurve`]: units are sorted by
//! a ranking variable, units with tied ranking values are pooled into a single
//! block, and the block's outcome mass is spread uniformly over the rank
//! interval the block occupies. The curve is therefore piecewise linear, and
//! group shares read off it do not depend on how tied units happen to be
//! ordered in the input.
//!
//! ```
//! use citeskew::inequality::{percentile_shares, CutSpec};
//!
//! let b = percentile_shares(&[1.0, 1.0, 1.0, 7.0], &CutSpec::default()).unwrap();
//! assert!((b.shares[0] - 20.0).abs() < 1e-12);
//! assert!((b.shares[1] - 52.0).abs() < 1e-12);
//! assert!((b.shares[2] - 28.0).abs() < 1e-12);
//! ```

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::NeumaierSum;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InequalityError {
    #[error("no units to rank")]
    Empty,
    #[error("degenerate distribution: total outcome is zero")]
    ZeroTotal,
    #[error("outcome and ranking lengths differ ({outcomes} vs {ranking})")]
    LengthMismatch { outcomes: usize, ranking: usize },
    #[error("outcome {value} at position {index} is negative or not finite")]
    InvalidOutcome { index: usize, value: f64 },
    #[error("ranking value {value} at position {index} is not finite")]
    InvalidRanking { index: usize, value: f64 },
    #[error("invalid cut specification: {0}")]
    InvalidCuts(String),
}

/// Strictly increasing percentile cut points in the open interval (0, 100).
///
/// `k` cuts define `k + 1` rank groups. The default `[50, 90]` yields the
/// bottom 50 %, the middle 40 % and the top 10 %.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct CutSpec {
    cuts: Vec<f64>,
}

impl CutSpec {
    pub fn new(cuts: Vec<f64>) -> Result<Self, InequalityError> {
        if cuts.is_empty() {
            return Err(InequalityError::InvalidCuts("at least one cut is required".into()));
        }
        for &c in &cuts {
            if !c.is_finite() || c <= 0.0 || c >= 100.0 {
                return Err(InequalityError::InvalidCuts(format!(
                    "cut {c} is outside the open interval (0, 100)"
                )));
            }
        }
        if cuts.windows(2).any(|w| w[0] >= w[1]) {
            return Err(InequalityError::InvalidCuts("cuts must be strictly increasing".into()));
        }
        Ok(Self { cuts })
    }

    pub fn cuts(&self) -> &[f64] {
        &self.cuts
    }

    pub fn n_groups(&self) -> usize {
        self.cuts.len() + 1
    }

    /// Group boundaries in percent, `(lower, upper]`.
    pub fn bounds(&self) -> Vec<(f64, f64)> {
        let mut edges = Vec::with_capacity(self.cuts.len() + 2);
        edges.push(0.0);
        edges.extend_from_slice(&self.cuts);
        edges.push(100.0);
        edges.windows(2).map(|w| (w[0], w[1])).collect()
    }

    pub fn widths(&self) -> Vec<f64> {
        self.bounds().into_iter().map(|(lo, hi)| hi - lo).collect()
    }

    /// Group labels as used in report files: `bottom50`, `mid40`, `top10`
    /// for the default cuts, `p{lo}_{hi}` for inner groups otherwise.
    pub fn labels(&self) -> Vec<String> {
        let bounds = self.bounds();
        let last = bounds.len() - 1;
        bounds
            .iter()
            .enumerate()
            .map(|(i, &(lo, hi))| {
                if i == 0 {
                    format!("bottom{}", hi - lo)
                } else if i == last {
                    format!("top{}", hi - lo)
                } else if bounds.len() == 3 {
                    format!("mid{}", hi - lo)
                } else {
                    format!("p{lo}_{hi}")
                }
            })
            .collect()
    }
}

impl Default for CutSpec {
    fn default() -> Self {
        Self { cuts: vec![50.0, 90.0] }
    }
}

impl TryFrom<Vec<f64>> for CutSpec {
    type Error = InequalityError;

    fn try_from(cuts: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(cuts)
    }
}

impl From<CutSpec> for Vec<f64> {
    fn from(c: CutSpec) -> Self {
        c.cuts
    }
}

impl FromStr for CutSpec {
    type Err = InequalityError;

    /// Parses a comma-separated list such as `50,90`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let cuts = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| InequalityError::InvalidCuts(format!("not a number: {t:?}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(cuts)
    }
}

impl fmt::Display for CutSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.cuts.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Group shares of a total outcome, with densities and the outcome's Gini.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShareBreakdown {
    pub labels: Vec<String>,
    /// Group widths in percent of units.
    pub widths: Vec<f64>,
    /// Group shares in percent of total outcome.
    pub shares: Vec<f64>,
    pub densities: Vec<f64>,
    pub n_units: usize,
    pub total_outcome: f64,
    pub gini: f64,
}

impl ShareBreakdown {
    pub fn top_share(&self) -> f64 {
        *self.shares.last().expect("a breakdown has at least two groups")
    }

    pub fn top_density(&self) -> f64 {
        *self.densities.last().expect("a breakdown has at least two groups")
    }
}

/// Piecewise-linear Lorenz curve built from pooled rank blocks.
///
/// Block `i` covers ranks `[ends[i] - counts[i], ends[i]]` (in units out of
/// `n`) and carries outcome mass `masses[i]`.
#[derive(Debug, Clone)]
pub struct LorenzCurve {
    n: usize,
    ends: Vec<usize>,
    counts: Vec<usize>,
    masses: Vec<f64>,
    mass_before: Vec<f64>,
    total: f64,
}

fn check_outcomes(outcomes: &[f64]) -> Result<(), InequalityError> {
    if outcomes.is_empty() {
        return Err(InequalityError::Empty);
    }
    match outcomes.iter().position(|y| !y.is_finite() || *y < 0.0) {
        Some(index) => Err(InequalityError::InvalidOutcome { index, value: outcomes[index] }),
        None => Ok(()),
    }
}

impl LorenzCurve {
    /// Ranks units by their own outcome.
    pub fn self_ranked(outcomes: &[f64]) -> Result<Self, InequalityError> {
        check_outcomes(outcomes)?;
        let mut sorted = outcomes.to_vec();
        sorted.sort_unstable_by(f64::total_cmp);
        let mut blocks = Vec::new();
        let mut i = 0;
        while i < sorted.len() {
            let v = sorted[i];
            let mut j = i + 1;
            while j < sorted.len() && sorted[j] == v {
                j += 1;
            }
            blocks.push((j - i, v * (j - i) as f64));
            i = j;
        }
        Ok(Self::from_blocks(outcomes.len(), blocks))
    }

    /// Ranks units by an alternative variable; outcomes of units that tie on
    /// the ranking variable are pooled.
    pub fn ranked_by(outcomes: &[f64], ranking: &[f64]) -> Result<Self, InequalityError> {
        if outcomes.len() != ranking.len() {
            return Err(InequalityError::LengthMismatch {
                outcomes: outcomes.len(),
                ranking: ranking.len(),
            });
        }
        check_outcomes(outcomes)?;
        if let Some(index) = ranking.iter().position(|r| !r.is_finite()) {
            return Err(InequalityError::InvalidRanking { index, value: ranking[index] });
        }
        let mut pairs: Vec<(f64, f64)> =
            ranking.iter().copied().zip(outcomes.iter().copied()).collect();
        // Secondary key on the outcome makes block sums independent of input order.
        pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let mut blocks = Vec::new();
        let mut i = 0;
        while i < pairs.len() {
            let key = pairs[i].0;
            let mut mass = NeumaierSum::new();
            let mut j = i;
            while j < pairs.len() && pairs[j].0 == key {
                mass.add(pairs[j].1);
                j += 1;
            }
            blocks.push((j - i, mass.value()));
            i = j;
        }
        Ok(Self::from_blocks(outcomes.len(), blocks))
    }

    fn from_blocks(n: usize, blocks: Vec<(usize, f64)>) -> Self {
        let mut ends = Vec::with_capacity(blocks.len());
        let mut counts = Vec::with_capacity(blocks.len());
        let mut masses = Vec::with_capacity(blocks.len());
        let mut mass_before = Vec::with_capacity(blocks.len());
        let mut running = NeumaierSum::new();
        let mut end = 0;
        for (count, mass) in blocks {
            end += count;
            ends.push(end);
            counts.push(count);
            masses.push(mass);
            mass_before.push(running.value());
            running.add(mass);
        }
        Self { n, ends, counts, masses, mass_before, total: running.value() }
    }

    pub fn n_units(&self) -> usize {
        self.n
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    /// Number of pooled blocks.
    pub fn n_blocks(&self) -> usize {
        self.counts.len()
    }

    /// Cumulative (unnormalized) outcome mass of the lowest `p` fraction of
    /// units, `p` in `[0, 1]`.
    pub fn cumulative_mass(&self, p: f64) -> f64 {
        self.mass_at_rank(p.clamp(0.0, 1.0) * self.n as f64)
    }

    /// Mass below rank position `x` measured in units (`0 ..= n`).
    fn mass_at_rank(&self, x: f64) -> f64 {
        // First block whose end lies at or beyond x.
        let idx = self.ends.partition_point(|&e| (e as f64) < x);
        if idx >= self.counts.len() {
            return self.total;
        }
        let start = (self.ends[idx] - self.counts[idx]) as f64;
        let frac = ((x - start) / self.counts[idx] as f64).clamp(0.0, 1.0);
        self.mass_before[idx] + self.masses[idx] * frac
    }

    /// Normalized Lorenz ordinate `L(p)`; requires a positive total.
    pub fn value_at(&self, p: f64) -> f64 {
        self.cumulative_mass(p) / self.total
    }

    /// Shares (percent of total) of the groups defined by `cuts`.
    pub fn shares(&self, cuts: &CutSpec) -> Result<Vec<f64>, InequalityError> {
        if self.total <= 0.0 {
            return Err(InequalityError::ZeroTotal);
        }
        let n = self.n as f64;
        let mut edges = Vec::with_capacity(cuts.cuts().len() + 2);
        edges.push(0.0);
        edges.extend(cuts.cuts().iter().map(|c| self.mass_at_rank(c * n / 100.0)));
        edges.push(self.total);
        Ok(edges.windows(2).map(|w| (w[1] - w[0]) / self.total * 100.0).collect())
    }

    /// `1 - 2 * integral of L` by exact trapezoid integration over the blocks.
    ///
    /// For a self-ranked curve this is the Gini coefficient; for a curve ranked
    /// by another variable it is the concentration coefficient of the outcome
    /// with respect to that ranking.
    pub fn gini(&self) -> f64 {
        if self.total <= 0.0 {
            return 0.0;
        }
        let n = self.n as f64;
        let mut area = NeumaierSum::new();
        for i in 0..self.counts.len() {
            let lo = self.mass_before[i] / self.total;
            let hi = (self.mass_before[i] + self.masses[i]) / self.total;
            area.add(0.5 * (lo + hi) * self.counts[i] as f64 / n);
        }
        1.0 - 2.0 * area.value()
    }
}

/// Gini coefficient together with the all-zero flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gini {
    pub value: f64,
    /// Set when every outcome is zero; the value is then reported as 0.
    pub all_zero: bool,
}

/// Gini coefficient `sum_ij |y_i - y_j| / (2 n^2 mean)`, without small-sample
/// correction, evaluated in O(n log n) through the sorted-rank identity.
pub fn gini(outcomes: &[f64]) -> Result<Gini, InequalityError> {
    check_outcomes(outcomes)?;
    let mut sorted = outcomes.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    Ok(gini_of_sorted(&sorted))
}

fn gini_of_sorted(sorted: &[f64]) -> Gini {
    let n = sorted.len() as f64;
    let mut total = NeumaierSum::new();
    let mut weighted = NeumaierSum::new();
    for (i, &y) in sorted.iter().enumerate() {
        total.add(y);
        // (2i - n - 1) with 1-based i
        weighted.add((2.0 * (i + 1) as f64 - n - 1.0) * y);
    }
    let total = total.value();
    if total == 0.0 {
        return Gini { value: 0.0, all_zero: true };
    }
    Gini { value: (weighted.value() / (n * total)).max(0.0), all_zero: false }
}

fn breakdown(
    curve: &LorenzCurve,
    cuts: &CutSpec,
    gini: f64,
) -> Result<ShareBreakdown, InequalityError> {
    let shares = curve.shares(cuts)?;
    let widths = cuts.widths();
    let densities = shares.iter().zip(&widths).map(|(s, w)| s / w).collect();
    Ok(ShareBreakdown {
        labels: cuts.labels(),
        widths,
        shares,
        densities,
        n_units: curve.n_units(),
        total_outcome: curve.total(),
        gini,
    })
}

/// Shares of total outcome held by rank groups, units ranked by the outcome.
pub fn percentile_shares(
    outcomes: &[f64],
    cuts: &CutSpec,
) -> Result<ShareBreakdown, InequalityError> {
    let curve = LorenzCurve::self_ranked(outcomes)?;
    let g = gini(outcomes)?;
    breakdown(&curve, cuts, g.value)
}

/// Shares of total outcome held by rank groups, units ranked by `ranking`.
///
/// The attached Gini is that of the outcome itself.
pub fn percentile_shares_by(
    outcomes: &[f64],
    ranking: &[f64],
    cuts: &CutSpec,
) -> Result<ShareBreakdown, InequalityError> {
    let curve = LorenzCurve::ranked_by(outcomes, ranking)?;
    let g = gini(outcomes)?;
    breakdown(&curve, cuts, g.value)
}

/// Group share divided by group width; 1 means a proportional share.
pub fn share_density(breakdown: &ShareBreakdown) -> Vec<f64> {
    breakdown.shares.iter().zip(&breakdown.widths).map(|(s, w)| s / w).collect()
}
