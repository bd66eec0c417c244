//! Sliding-window rank censuses of embedded block sequences, and the
//! random-key-sample experiment built on them.
//!
//! Window starts are 1-based: window `k` holds rows `k..k + len - 1` of the
//! sequence.

use std::collections::{BTreeMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aes::{encrypt, AesError, Block, CipherKey, RoundSpec};
use crate::embedding::EmbeddingParams;
use crate::gf2::{rank_in_place, BitMatrix, WindowBasis};
use crate::prng::{CtrStream, TAG_BASELINE_SETS, TAG_CIPHER_KEYS};

pub const SET_SIZE: usize = 1 << 16;
/// Rows per window, the dimension of the span of the AES embedding.
pub const WINDOW_LEN: usize = 31745;
pub const NUM_WINDOWS: usize = SET_SIZE - WINDOW_LEN + 1;

#[derive(Debug, thiserror::Error)]
pub enum DistinguisherError {
    #[error("ordered set must hold {SET_SIZE} distinct blocks ({0})")]
    BadSet(String),
    #[error("window start {start} outside 1..={max}")]
    StartOutOfRange { start: usize, max: usize },
    #[error("window length {window_len} does not fit a sequence of {len}")]
    WindowLength { window_len: usize, len: usize },
    #[error("tau must be at least 1")]
    ZeroTau,
    #[error(transparent)]
    Aes(#[from] AesError),
}

/// `2^16` distinct blocks in a fixed order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrderedSet(Vec<Block>);

impl OrderedSet {
    pub fn new(blocks: Vec<Block>) -> Result<Self, DistinguisherError> {
        if blocks.len() != SET_SIZE {
            return Err(DistinguisherError::BadSet(format!(
                "got {} blocks",
                blocks.len()
            )));
        }
        let mut seen = HashSet::with_capacity(SET_SIZE);
        if let Some(i) = blocks.iter().position(|b| !seen.insert(*b)) {
            return Err(DistinguisherError::BadSet(format!(
                "block {} repeats",
                i + 1
            )));
        }
        Ok(Self(blocks))
    }

    pub fn blocks(&self) -> &[Block] {
        &self.0
    }
}

/// Blocks that are zero except for bytes 14 and 15, which run through all
/// pairs in lexicographic order with byte 14 dominant.
pub fn build_sbar() -> OrderedSet {
    OrderedSet(
        (0..SET_SIZE)
            .map(|i| {
                let mut v = [0u8; 16];
                v[14] = (i >> 8) as u8;
                v[15] = i as u8;
                v
            })
            .collect(),
    )
}

pub fn encrypt_set(
    set: &OrderedSet,
    key: &CipherKey,
    spec: RoundSpec,
) -> Result<OrderedSet, DistinguisherError> {
    let out = set
        .0
        .iter()
        .map(|x| encrypt(key, x, spec))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(OrderedSet(out))
}

/// Baseline set `index` for `seed`: keystream blocks at counters
/// `0..2^16`, distinct because AES is a permutation.
pub fn random_sample_set(seed: u64, index: u32) -> OrderedSet {
    let mut s = CtrStream::new(seed, TAG_BASELINE_SETS, index);
    OrderedSet((0..SET_SIZE).map(|_| s.next_block()).collect())
}

/// Cipher key `index` for `seed`, `len` bytes.
pub fn experiment_key(seed: u64, index: u32, len: usize) -> Result<CipherKey, AesError> {
    let mut bytes = vec![0u8; len];
    CtrStream::new(seed, TAG_CIPHER_KEYS, index).fill_bytes(&mut bytes);
    CipherKey::new(&bytes)
}

/// `count` evenly spaced starts out of `1..=total`: `1 + floor(i * total /
/// count)`.
pub fn strided_starts(count: usize, total: usize) -> Vec<usize> {
    let count = count.min(total);
    (0..count).map(|i| 1 + i * total / count).collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum CensusStrategy {
    /// A fresh decomposition of every requested window.
    PerWindow { threshold: usize },
    /// One pass over the sequence with a timestamped basis; cost does not
    /// depend on how many windows are requested.
    #[default]
    Sliding,
}

/// Counts of windows by rank.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankCensus {
    pub counts: BTreeMap<usize, u64>,
    pub total: u64,
}

impl RankCensus {
    pub fn add(&mut self, rank: usize) {
        *self.counts.entry(rank).or_default() += 1;
        self.total += 1;
    }

    pub fn count(&self, rank: usize) -> u64 {
        self.counts.get(&rank).copied().unwrap_or(0)
    }

    /// Windows with rank at most `rank`.
    pub fn count_at_most(&self, rank: usize) -> u64 {
        self.counts.range(..=rank).map(|(_, c)| c).sum()
    }

    pub fn merge(&mut self, other: &RankCensus) {
        for (&r, &c) in &other.counts {
            *self.counts.entry(r).or_default() += c;
        }
        self.total += other.total;
    }
}

fn check_starts(starts: &[usize], max: usize) -> Result<(), DistinguisherError> {
    match starts.iter().find(|&&s| s == 0 || s > max) {
        Some(&start) => Err(DistinguisherError::StartOutOfRange { start, max }),
        None => Ok(()),
    }
}

/// Ranks of the windows of `window_len` consecutive embedded blocks that
/// begin at each of `starts`, in the order given.
pub fn window_ranks(
    params: &EmbeddingParams,
    blocks: &[Block],
    window_len: usize,
    starts: &[usize],
    strategy: CensusStrategy,
) -> Result<Vec<usize>, DistinguisherError> {
    if window_len == 0 || window_len > blocks.len() {
        return Err(DistinguisherError::WindowLength {
            window_len,
            len: blocks.len(),
        });
    }
    let max = blocks.len() - window_len + 1;
    check_starts(starts, max)?;
    Ok(match strategy {
        CensusStrategy::PerWindow { threshold } => starts
            .iter()
            .map(|&k| {
                let mut m = BitMatrix::zeros(window_len, params.dim());
                let stride = m.stride();
                let rows = &blocks[k - 1..k - 1 + window_len];
                for (row, v) in m.data_mut().chunks_exact_mut(stride.max(1)).zip(rows) {
                    params.alpha_block_into(v, row);
                }
                rank_in_place(&mut m, threshold)
            })
            .collect(),
        CensusStrategy::Sliding => {
            let last = starts.iter().max().map_or(0, |&k| k + window_len - 1);
            let mut at_end: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
            for (i, &k) in starts.iter().enumerate() {
                at_end.entry(k + window_len - 1).or_default().push(i);
            }
            let mut ranks = vec![0; starts.len()];
            let mut basis = WindowBasis::new(params.dim());
            let mut row = vec![0u64; params.dim().div_ceil(64)];
            // Rows before the earliest start never count.
            let first = starts.iter().min().map_or(1, |&k| k) - 1;
            for (t, v) in blocks[..last].iter().enumerate().skip(first) {
                row.fill(0);
                params.alpha_block_into(v, &mut row);
                basis.insert(&row, t as u64 + 1);
                if let Some(idx) = at_end.get(&(t + 1)) {
                    let r = basis.rank_since((t + 2 - window_len) as u64);
                    for &i in idx {
                        ranks[i] = r;
                    }
                }
            }
            ranks
        }
    })
}

/// Census of the windows of `set` starting at `starts` (all 33792 when
/// `None`).
pub fn algorithm_b(
    params: &EmbeddingParams,
    set: &OrderedSet,
    starts: Option<&[usize]>,
    strategy: CensusStrategy,
) -> Result<RankCensus, DistinguisherError> {
    let all;
    let starts = match starts {
        Some(s) => s,
        None => {
            all = (1..=NUM_WINDOWS).collect::<Vec<_>>();
            &all
        }
    };
    let mut census = RankCensus::default();
    for r in window_ranks(params, set.blocks(), WINDOW_LEN, starts, strategy)? {
        census.add(r);
    }
    Ok(census)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arm {
    Aes,
    Random,
    /// The unencrypted chosen-plaintext set.
    Plain,
}

impl std::fmt::Display for Arm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Arm::Aes => "aes",
            Arm::Random => "random",
            Arm::Plain => "plain",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub tau: usize,
    pub rounds: RoundSpec,
    pub key_len: usize,
    pub seed: u64,
    /// Window starts per set; `None` means all of them.
    pub window_starts: Option<Vec<usize>>,
    pub strategy: CensusStrategy,
}

impl ExperimentConfig {
    /// `tau` keys of AES-128 reduced to `rounds`, `windows` strided starts.
    pub fn desk(tau: usize, rounds: usize, windows: usize, seed: u64) -> Self {
        Self {
            tau,
            rounds: RoundSpec::reduced(rounds),
            key_len: 16,
            seed,
            window_starts: Some(strided_starts(windows, NUM_WINDOWS)),
            strategy: CensusStrategy::Sliding,
        }
    }

    pub fn starts(&self) -> Vec<usize> {
        self.window_starts
            .clone()
            .unwrap_or_else(|| (1..=NUM_WINDOWS).collect())
    }
}

/// One census with the metadata needed to reproduce it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CensusRecord {
    pub arm: Arm,
    pub key_index: usize,
    pub seed: u64,
    pub rounds: usize,
    pub window_starts: Vec<usize>,
    pub counts: BTreeMap<usize, u64>,
}

impl CensusRecord {
    pub fn census(&self) -> RankCensus {
        RankCensus {
            total: self.counts.values().sum(),
            counts: self.counts.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub aes: Vec<CensusRecord>,
    pub random: Vec<CensusRecord>,
}

/// The set one unit of the experiment runs on.
pub fn experiment_set(
    cfg: &ExperimentConfig,
    arm: Arm,
    index: usize,
) -> Result<OrderedSet, DistinguisherError> {
    match arm {
        Arm::Aes => {
            let key = experiment_key(cfg.seed, index as u32, cfg.key_len)?;
            encrypt_set(&build_sbar(), &key, cfg.rounds)
        }
        Arm::Random => Ok(random_sample_set(cfg.seed, index as u32)),
        Arm::Plain => Ok(build_sbar()),
    }
}

/// Censuses of one arm, ordered by key index. Units run in parallel on the
/// current rayon pool.
pub fn run_arm(cfg: &ExperimentConfig, arm: Arm) -> Result<Vec<CensusRecord>, DistinguisherError> {
    if cfg.tau == 0 {
        return Err(DistinguisherError::ZeroTau);
    }
    let params = EmbeddingParams::aes();
    let starts = cfg.starts();
    check_starts(&starts, NUM_WINDOWS)?;
    (0..cfg.tau)
        .into_par_iter()
        .map(|key_index| {
            let set = experiment_set(cfg, arm, key_index)?;
            let census = algorithm_b(&params, &set, Some(&starts), cfg.strategy)?;
            Ok(CensusRecord {
                arm,
                key_index,
                seed: cfg.seed,
                rounds: cfg.rounds.rounds,
                window_starts: starts.clone(),
                counts: census.counts,
            })
        })
        .collect()
}

/// Runs both arms.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult, DistinguisherError> {
    Ok(ExperimentResult {
        aes: run_arm(cfg, Arm::Aes)?,
        random: run_arm(cfg, Arm::Random)?,
    })
}

/// CSV with columns `arm,key_index,rank,count`.
pub fn census_csv(records: &[CensusRecord]) -> String {
    let mut out = String::from("arm,key_index,rank,count\n");
    for r in records {
        for (rank, count) in &r.counts {
            out.push_str(&format!("{},{},{},{}\n", r.arm, r.key_index, rank, count));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strides() {
        assert_eq!(strided_starts(4, 8), vec![1, 3, 5, 7]);
        assert_eq!(strided_starts(1, NUM_WINDOWS), vec![1]);
        let s = strided_starts(512, NUM_WINDOWS);
        assert_eq!(s.len(), 512);
        assert!(*s.last().unwrap() <= NUM_WINDOWS);
        assert_eq!(strided_starts(10, 3), vec![1, 2, 3]);
    }

    #[test]
    fn census_bookkeeping() {
        let mut c = RankCensus::default();
        for r in [5, 7, 7, 3] {
            c.add(r);
        }
        assert_eq!(c.total, 4);
        assert_eq!(c.count(7), 2);
        assert_eq!(c.count_at_most(5), 2);
        let mut d = c.clone();
        d.merge(&c);
        assert_eq!(d.total, 8);
        assert_eq!(d.count(7), 4);
    }

    #[test]
    fn num_windows() {
        assert_eq!(NUM_WINDOWS, 33792);
    }
}
