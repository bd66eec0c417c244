//! Rank distribution of uniform square matrices over GF(2) and the χ²
//! comparison of observed censuses against it.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use statrs::function::gamma::gamma_ur;

use crate::distinguisher::RankCensus;

/// Significance level used for verdicts unless another is given.
pub const DEFAULT_THRESHOLD: f64 = 0.05;

/// Deficiencies beyond this have probability below `2^{-4096}`.
const MAX_DEFICIENCY: usize = 64;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum StatsError {
    #[error("observed has {observed} bins, expected has {expected}")]
    BinMismatch { observed: usize, expected: usize },
    #[error("at least two bins are needed")]
    TooFewBins,
    #[error("expected count in bin {0} is not positive")]
    ZeroExpected(usize),
    #[error("chi-square statistic must be non-negative, got {0}")]
    NegativeStatistic(f64),
    #[error("degrees of freedom must be positive")]
    ZeroDf,
    #[error("matrix dimension {n} is below {min}")]
    Dimension { n: usize, min: usize },
    #[error("no censuses given")]
    Empty,
}

/// `sum_{j=1}^{k} ln(1 - 2^-j)` for `k = 0..=n`.
fn log_products(n: usize) -> Vec<f64> {
    let mut c = Vec::with_capacity(n + 1);
    let mut acc = 0.0f64;
    c.push(acc);
    for j in 1..=n {
        if j < 1075 {
            acc += (-(2f64.powi(-(j as i32)))).ln_1p();
        }
        c.push(acc);
    }
    c
}

/// `P(rank = n - d)` for a uniform `n x n` matrix over GF(2), indexed by the
/// deficiency `d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankDistribution {
    pub n: usize,
    by_deficiency: Vec<f64>,
}

/// Rank distribution of a uniform `n x n` GF(2) matrix:
/// `P(n - d) = 2^{-d^2} prod_{j=d+1}^{n} (1 - 2^-j)^2 / prod_{j=1}^{n-d} (1 - 2^-j)`.
pub fn square_rank_distribution(n: usize) -> Result<RankDistribution, StatsError> {
    if n == 0 {
        return Err(StatsError::Dimension { n, min: 1 });
    }
    let c = log_products(n);
    let by_deficiency = (0..=n.min(MAX_DEFICIENCY))
        .map(|d| {
            let lp = -((d * d) as f64) * std::f64::consts::LN_2 + 2.0 * (c[n] - c[d]) - c[n - d];
            lp.exp()
        })
        .collect();
    Ok(RankDistribution { n, by_deficiency })
}

impl RankDistribution {
    pub fn p_rank(&self, r: usize) -> f64 {
        if r > self.n {
            return 0.0;
        }
        self.by_deficiency.get(self.n - r).copied().unwrap_or(0.0)
    }

    /// `P(rank <= r)`, summed from the small tail terms upward.
    pub fn p_at_most(&self, r: usize) -> f64 {
        if r >= self.n {
            return 1.0;
        }
        let d0 = self.n - r;
        self.by_deficiency.iter().skip(d0).rev().sum()
    }

    pub fn total(&self) -> f64 {
        self.by_deficiency.iter().rev().sum()
    }
}

/// Exact number of `n x n` GF(2) matrices of each rank, from
/// `qbinom(n, r) * prod_{i<r} (2^n - 2^i)`. `n <= 8`.
pub fn rank_counts_closed_form(n: usize) -> Vec<u128> {
    assert!(n <= 8, "counts overflow u128 beyond n = 8");
    let qbinom = |n: usize, r: usize| -> u128 {
        let mut num = 1u128;
        let mut den = 1u128;
        for i in 0..r {
            num *= (1u128 << (n - i)) - 1;
            den *= (1u128 << (i + 1)) - 1;
        }
        num / den
    };
    (0..=n)
        .map(|r| {
            let ordered: u128 = (0..r).map(|i| (1u128 << n) - (1u128 << i)).product();
            qbinom(n, r) * ordered
        })
        .collect()
}

/// Number of `n x n` GF(2) matrices of each rank, by enumerating row
/// sequences over the lattice of subspaces. `n <= 6`.
pub fn rank_counts_enumerated(n: usize) -> Vec<u128> {
    assert!(n <= 6, "subspaces are stored as 64-bit membership masks");
    let q = 1usize << n;
    // A subspace is the set of its members, bit x set iff x is in it.
    let mut states: std::collections::HashMap<u64, u128> = [(1u64, 1u128)].into();
    for _ in 0..n {
        let mut next = std::collections::HashMap::new();
        for (&s, &count) in &states {
            for v in 0..q {
                let t = if s >> v & 1 != 0 {
                    s
                } else {
                    (0..q)
                        .filter(|&x| s >> x & 1 != 0)
                        .fold(s, |acc, x| acc | 1 << (x ^ v))
                };
                *next.entry(t).or_insert(0) += count;
            }
        }
        states = next;
    }
    let mut counts = vec![0u128; n + 1];
    for (s, c) in states {
        counts[s.count_ones().trailing_zeros() as usize] += c;
    }
    counts
}

/// How ranks are grouped for the χ² test. Needs `n >= 2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Binning {
    /// `{>= n-1, <= n-2}`.
    Two,
    /// `{n, n-1, <= n-2}`.
    Three,
}

impl Binning {
    pub fn labels(self, n: usize) -> Vec<String> {
        match self {
            Binning::Two => vec![format!(">{}", n - 2), format!("<={}", n - 2)],
            Binning::Three => vec![n.to_string(), (n - 1).to_string(), format!("<={}", n - 2)],
        }
    }

    pub fn probabilities(self, dist: &RankDistribution) -> Vec<f64> {
        let n = dist.n;
        let tail = dist.p_at_most(n - 2);
        match self {
            Binning::Two => vec![dist.p_rank(n) + dist.p_rank(n - 1), tail],
            Binning::Three => vec![dist.p_rank(n), dist.p_rank(n - 1), tail],
        }
    }

    pub fn observe(self, census: &RankCensus, n: usize) -> Vec<u64> {
        let tail = census.count_at_most(n - 2);
        match self {
            Binning::Two => vec![census.count(n) + census.count(n - 1), tail],
            Binning::Three => vec![census.count(n), census.count(n - 1), tail],
        }
    }
}

/// `n_windows` times the probability of each bin.
pub fn expected_census(n_windows: u64, bin_probabilities: &[f64]) -> Vec<f64> {
    bin_probabilities
        .iter()
        .map(|p| n_windows as f64 * p)
        .collect()
}

/// Upper tail `P(X >= x)` of a χ² variable with `df` degrees of freedom.
pub fn chi2_upper_tail(x: f64, df: usize) -> Result<f64, StatsError> {
    if x.is_nan() || x < 0.0 {
        return Err(StatsError::NegativeStatistic(x));
    }
    Ok(match df {
        0 => return Err(StatsError::ZeroDf),
        1 => erfc((x / 2.0).sqrt()),
        2 => (-x / 2.0).exp(),
        _ if x == 0.0 => 1.0,
        _ => gamma_ur(df as f64 / 2.0, x / 2.0),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    pub threshold: f64,
    /// `p_value < threshold`.
    pub distinguishable: bool,
}

pub fn chi_square(observed: &[f64], expected: &[f64]) -> Result<ChiSquareResult, StatsError> {
    chi_square_at(observed, expected, DEFAULT_THRESHOLD)
}

pub fn chi_square_at(
    observed: &[f64],
    expected: &[f64],
    threshold: f64,
) -> Result<ChiSquareResult, StatsError> {
    if observed.len() != expected.len() {
        return Err(StatsError::BinMismatch {
            observed: observed.len(),
            expected: expected.len(),
        });
    }
    if observed.len() < 2 {
        return Err(StatsError::TooFewBins);
    }
    if let Some(i) = expected.iter().position(|&e| e.is_nan() || e <= 0.0) {
        return Err(StatsError::ZeroExpected(i));
    }
    let statistic: f64 = observed
        .iter()
        .zip(expected)
        .map(|(o, e)| (o - e) * (o - e) / e)
        .sum();
    let df = observed.len() - 1;
    let p_value = chi2_upper_tail(statistic, df)?;
    Ok(ChiSquareResult {
        statistic,
        df,
        p_value,
        threshold,
        distinguishable: p_value < threshold,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArmReport {
    pub windows: u64,
    pub observed: Vec<u64>,
    pub expected: Vec<f64>,
    /// `observed - expected` per bin.
    pub deviation: Vec<f64>,
    pub chi2: f64,
    pub df: usize,
    pub p_value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerdictReport {
    pub n: usize,
    pub binning: Binning,
    pub bins: Vec<String>,
    pub threshold: f64,
    pub aes: ArmReport,
    pub random: ArmReport,
    /// `p_random / p_aes`; absent when `p_aes` is zero.
    pub ratio: Option<f64>,
    /// The AES arm is below the threshold and the random arm is not.
    pub distinguished: bool,
}

fn pool(censuses: &[RankCensus]) -> Result<RankCensus, StatsError> {
    if censuses.is_empty() {
        return Err(StatsError::Empty);
    }
    let mut all = RankCensus::default();
    for c in censuses {
        all.merge(c);
    }
    Ok(all)
}

/// χ² of already binned counts against the theory for `n`.
pub fn arm_report(
    observed: Vec<u64>,
    bin_probabilities: &[f64],
    threshold: f64,
) -> Result<ArmReport, StatsError> {
    let windows = observed.iter().sum();
    let expected = expected_census(windows, bin_probabilities);
    let obs: Vec<f64> = observed.iter().map(|&o| o as f64).collect();
    let res = chi_square_at(&obs, &expected, threshold)?;
    Ok(ArmReport {
        windows,
        deviation: obs.iter().zip(&expected).map(|(o, e)| o - e).collect(),
        observed,
        expected,
        chi2: res.statistic,
        df: res.df,
        p_value: res.p_value,
    })
}

/// Pools each arm and tests it against the rank distribution of `n x n`
/// uniform matrices.
pub fn verdict(
    aes: &[RankCensus],
    random: &[RankCensus],
    n: usize,
    binning: Binning,
    threshold: f64,
) -> Result<VerdictReport, StatsError> {
    if n < 2 {
        return Err(StatsError::Dimension { n, min: 2 });
    }
    let dist = square_rank_distribution(n)?;
    let probs = binning.probabilities(&dist);
    let aes = arm_report(binning.observe(&pool(aes)?, n), &probs, threshold)?;
    let random = arm_report(binning.observe(&pool(random)?, n), &probs, threshold)?;
    Ok(VerdictReport {
        n,
        binning,
        bins: binning.labels(n),
        threshold,
        ratio: (aes.p_value > 0.0).then(|| random.p_value / aes.p_value),
        distinguished: aes.p_value < threshold && random.p_value >= threshold,
        aes,
        random,
    })
}
