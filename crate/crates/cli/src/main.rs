mod config;
mod manifest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::time::Instant;

use aesrank::aes::{CipherKey, RoundSpec};
use aesrank::distinguisher::{
    algorithm_b, build_sbar, census_csv, encrypt_set, experiment_key, random_sample_set, run_arm,
    strided_starts, Arm, CensusRecord, CensusStrategy, ExperimentConfig, ExperimentResult,
    NUM_WINDOWS, WINDOW_LEN,
};
use aesrank::embedding::EmbeddingParams;
use aesrank::gf2::{rank_in_place, read_matrix, DEFAULT_THRESHOLD};
use aesrank::selftest::{run_selftest, SelftestOptions};
use aesrank::stats::{
    expected_census, rank_counts_closed_form, rank_counts_enumerated, square_rank_distribution,
    verdict, Binning,
};
use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use config::Config;
use manifest::Run;

/// Wrong invocation; exits with status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// Key-sample counts above this need the cost acknowledgment.
const DESK_TAU_LIMIT: usize = 8;
const PAPER_TAU: usize = 70;

#[derive(Parser)]
#[command(
    name = "aesrank",
    version,
    about = "Rank-statistics distinguisher for AES"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Experiment seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Flat `key = value` file; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BinsArg {
    Two,
    Three,
}

impl From<BinsArg> for Binning {
    fn from(b: BinsArg) -> Self {
        match b {
            BinsArg::Two => Binning::Two,
            BinsArg::Three => Binning::Three,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum StrategyArg {
    /// Per-window for at most 16 windows, sliding otherwise.
    Auto,
    Sliding,
    PerWindow,
}

macro_rules! from_str_via_value_enum {
    ($t:ty) => {
        impl FromStr for $t {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, String> {
                <$t as ValueEnum>::from_str(s, true)
            }
        }
    };
}
from_str_via_value_enum!(BinsArg);
from_str_via_value_enum!(StrategyArg);

#[derive(Subcommand)]
enum Cmd {
    /// Rank distribution of uniform square matrices and expected censuses.
    Theory {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        windows: Option<u64>,
        #[arg(long, value_enum)]
        bins: Option<BinsArg>,
    },
    /// Rank census of one set: the plain set, an encryption of it, or a
    /// baseline set.
    Census {
        #[arg(long, conflicts_with_all = ["random", "rounds", "key"])]
        plain: bool,
        #[arg(long, conflicts_with_all = ["rounds", "key"])]
        random: bool,
        /// Rounds after the initial key addition.
        #[arg(long)]
        rounds: Option<usize>,
        /// Cipher key in hex; drawn from the seed when absent.
        #[arg(long)]
        key: Option<String>,
        /// Which seeded key or baseline set to use.
        #[arg(long)]
        key_index: Option<usize>,
        #[arg(long)]
        key_len: Option<usize>,
        /// Number of evenly spaced windows.
        #[arg(long, conflicts_with = "all_windows")]
        windows: Option<usize>,
        #[arg(long)]
        all_windows: bool,
        #[arg(long, value_enum)]
        strategy: Option<StrategyArg>,
        /// Cache threshold for per-window decompositions.
        #[arg(long)]
        threshold: Option<usize>,
        /// Keep MixColumns in the last applied round.
        #[arg(long)]
        typical_last: bool,
    },
    /// Runs both arms, tests them against theory and writes the report and
    /// plot data.
    Distinguish {
        #[arg(long)]
        tau: Option<usize>,
        #[arg(long)]
        rounds: Option<usize>,
        /// Evenly spaced windows per key.
        #[arg(long, conflicts_with = "all_windows")]
        windows: Option<usize>,
        #[arg(long)]
        all_windows: bool,
        #[arg(long, value_enum)]
        bins: Option<BinsArg>,
        /// Significance level.
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        key_len: Option<usize>,
        #[arg(long, value_enum)]
        strategy: Option<StrategyArg>,
        #[arg(long)]
        typical_last: bool,
        /// The full experiment: 70 keys, every window.
        #[arg(long)]
        full: bool,
        /// Acknowledges the cost of runs beyond desk scale.
        #[arg(long = "i-know-this-costs-2pow48")]
        acknowledge_cost: bool,
    },
    /// Rank of a matrix stored in the GF2M format.
    Rank {
        file: PathBuf,
        #[arg(long)]
        threshold: Option<usize>,
    },
    /// Quick checks of every component.
    Selftest {
        #[arg(long)]
        skip_spot_check: bool,
        /// Corrupts the S-box table the checks inspect.
        #[arg(long, hide = true)]
        inject_sbox_fault: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            if let Some(u) = e.downcast_ref::<UsageError>() {
                eprintln!("error: {u}");
                ExitCode::from(2)
            } else {
                eprintln!("error: {e:#}");
                ExitCode::from(1)
            }
        }
    }
}

const COMMON_KEYS: [&str; 3] = ["seed", "threads", "out"];

fn keys(extra: &[&'static str]) -> Vec<&'static str> {
    COMMON_KEYS.iter().chain(extra).copied().collect()
}

fn flag(b: bool) -> Option<bool> {
    b.then_some(true)
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    let cfg = Config::load(cli.common.config.as_deref())?;
    let seed: u64 = cfg.resolve("seed", cli.common.seed, 1)?;
    if let Some(n) = cfg.resolve_opt("threads", cli.common.threads)? {
        if n == 0 {
            return Err(UsageError("--threads must be at least 1".into()).into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let out: Option<PathBuf> = cfg.resolve_opt("out", cli.common.out)?;

    match cli.cmd {
        Cmd::Theory { n, windows, bins } => {
            cfg.check_keys(&keys(&["n", "windows", "bins"]))?;
            let n = cfg.resolve("n", n, WINDOW_LEN)?;
            let windows = cfg.resolve("windows", windows, NUM_WINDOWS as u64)?;
            let bins: Binning = cfg.resolve("bins", bins, BinsArg::Three)?.into();
            cmd_theory(n, windows, bins, out.as_deref())
        }
        Cmd::Census {
            plain,
            random,
            rounds,
            key,
            key_index,
            key_len,
            windows,
            all_windows,
            strategy,
            threshold,
            typical_last,
        } => {
            cfg.check_keys(&keys(&[
                "plain",
                "random",
                "rounds",
                "key",
                "key_index",
                "key_len",
                "windows",
                "all_windows",
                "strategy",
                "threshold",
                "typical_last",
            ]))?;
            let plain = cfg.resolve("plain", flag(plain), false)?;
            let random = cfg.resolve("random", flag(random), false)?;
            let arm = match (plain, random) {
                (true, true) => {
                    return Err(UsageError("--plain and --random are exclusive".into()).into())
                }
                (true, false) => Arm::Plain,
                (false, true) => Arm::Random,
                (false, false) => Arm::Aes,
            };
            let opts = CensusOpts {
                arm,
                seed,
                rounds: cfg.resolve("rounds", rounds, 4)?,
                key: cfg.resolve_opt("key", key)?,
                key_index: cfg.resolve("key_index", key_index, 0)?,
                key_len: cfg.resolve("key_len", key_len, 16)?,
                starts: window_selection(&cfg, windows, all_windows, 8)?,
                strategy: cfg.resolve("strategy", strategy, StrategyArg::Auto)?,
                threshold: cfg.resolve("threshold", threshold, DEFAULT_THRESHOLD)?,
                typical_last: cfg.resolve("typical_last", flag(typical_last), false)?,
            };
            cmd_census(&opts, &out.unwrap_or_else(|| "aesrank-out".into()))
        }
        Cmd::Distinguish {
            tau,
            rounds,
            windows,
            all_windows,
            bins,
            alpha,
            key_len,
            strategy,
            typical_last,
            full,
            acknowledge_cost,
        } => {
            cfg.check_keys(&keys(&[
                "tau",
                "rounds",
                "windows",
                "all_windows",
                "bins",
                "alpha",
                "key_len",
                "strategy",
                "typical_last",
                "full",
            ]))?;
            let full = cfg.resolve("full", flag(full), false)?;
            let tau = cfg.resolve("tau", tau, if full { PAPER_TAU } else { 2 })?;
            let all = full || cfg.resolve("all_windows", flag(all_windows), false)?;
            let starts = window_selection(&cfg, windows, all, 512)?;
            if tau == 0 {
                return Err(UsageError("--tau must be at least 1".into()).into());
            }
            if (full || tau > DESK_TAU_LIMIT) && !acknowledge_cost {
                return Err(UsageError(format!(
                    "tau = {tau} is beyond desk scale: each key sample per arm costs a rank \
                     census over 2^16 embedded blocks; pass --i-know-this-costs-2pow48 to \
                     proceed"
                ))
                .into());
            }
            let rounds = cfg.resolve("rounds", rounds, 10)?;
            let typical_last = cfg.resolve("typical_last", flag(typical_last), false)?;
            let strategy = cfg.resolve("strategy", strategy, StrategyArg::Sliding)?;
            let exp = ExperimentConfig {
                tau,
                rounds: round_spec(rounds, typical_last),
                key_len: cfg.resolve("key_len", key_len, 16)?,
                seed,
                window_starts: starts.clone(),
                strategy: census_strategy(
                    strategy,
                    starts.as_ref().map_or(NUM_WINDOWS, Vec::len),
                    DEFAULT_THRESHOLD,
                ),
            };
            let bins: Binning = cfg.resolve("bins", bins, BinsArg::Two)?.into();
            let alpha = cfg.resolve("alpha", alpha, aesrank::stats::DEFAULT_THRESHOLD)?;
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(UsageError("--alpha must lie in (0, 1)".into()).into());
            }
            cmd_distinguish(
                &exp,
                bins,
                alpha,
                &out.unwrap_or_else(|| "aesrank-out".into()),
            )
        }
        Cmd::Rank { file, threshold } => {
            cfg.check_keys(&keys(&["threshold"]))?;
            let threshold = cfg.resolve("threshold", threshold, DEFAULT_THRESHOLD)?;
            cmd_rank(&file, threshold)
        }
        Cmd::Selftest {
            skip_spot_check,
            inject_sbox_fault,
        } => {
            cfg.check_keys(&keys(&["skip_spot_check"]))?;
            let skip = cfg.resolve("skip_spot_check", flag(skip_spot_check), false)?;
            let mut opts = SelftestOptions {
                spot_check: !skip,
                ..Default::default()
            };
            if inject_sbox_fault {
                opts.sbox[0x53] = opts.sbox[0x52];
            }
            cmd_selftest(&opts)
        }
    }
}

fn round_spec(rounds: usize, typical_last: bool) -> RoundSpec {
    if typical_last {
        RoundSpec::typical(rounds)
    } else {
        RoundSpec::reduced(rounds)
    }
}

fn census_strategy(arg: StrategyArg, windows: usize, threshold: usize) -> CensusStrategy {
    match arg {
        StrategyArg::Sliding => CensusStrategy::Sliding,
        StrategyArg::PerWindow => CensusStrategy::PerWindow { threshold },
        StrategyArg::Auto if windows <= 16 => CensusStrategy::PerWindow { threshold },
        StrategyArg::Auto => CensusStrategy::Sliding,
    }
}

/// `None` selects every window.
fn window_selection(
    cfg: &Config,
    windows: Option<usize>,
    all: bool,
    default: usize,
) -> Result<Option<Vec<usize>>, UsageError> {
    if all || cfg.resolve("all_windows", None, false)? {
        return Ok(None);
    }
    let count = cfg.resolve("windows", windows, default)?;
    if count == 0 || count > NUM_WINDOWS {
        return Err(UsageError(format!(
            "--windows must lie in 1..={NUM_WINDOWS}"
        )));
    }
    Ok(Some(strided_starts(count, NUM_WINDOWS)))
}

fn to_json(v: &impl serde::Serialize) -> anyhow::Result<Vec<u8>> {
    Ok((serde_json::to_string_pretty(v)? + "\n").into_bytes())
}

fn cmd_theory(
    n: usize,
    windows: u64,
    bins: Binning,
    out: Option<&Path>,
) -> anyhow::Result<ExitCode> {
    if n < 2 {
        return Err(UsageError("--n must be at least 2".into()).into());
    }
    let dist = square_rank_distribution(n)?;
    let probs = bins.probabilities(&dist);
    let expected = expected_census(windows, &probs);
    let table: Vec<_> = bins
        .labels(n)
        .into_iter()
        .zip(probs.iter().zip(&expected))
        .map(|(label, (p, e))| json!({"bin": label, "probability": p, "expected": e}))
        .collect();
    let mut doc = json!({
        "n": n,
        "windows": windows,
        "binning": bins,
        "bins": table,
        "p_full_rank": dist.p_rank(n),
        "p_rank_n_minus_1": dist.p_rank(n - 1),
        "p_rank_at_most_n_minus_2": dist.p_at_most(n - 2),
    });
    if n <= 6 {
        let enumerated = rank_counts_enumerated(n);
        let closed = rank_counts_closed_form(n);
        let probs_match = enumerated.iter().enumerate().all(|(r, &c)| {
            let exact = c as f64 / (1u128 << (n * n)) as f64;
            ((dist.p_rank(r) - exact) / exact).abs() < 1e-12
        });
        doc["exact"] = json!({
            "counts": enumerated.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
            "matches_closed_form": enumerated == closed,
            "matches_probabilities": probs_match,
        });
    }
    let bytes = to_json(&doc)?;
    print!("{}", String::from_utf8_lossy(&bytes));
    if let Some(dir) = out {
        let mut run = Run::new("theory", dir, None)?;
        run.set("n", n);
        run.set("windows", windows);
        run.set("bins", format!("{bins:?}").to_lowercase());
        run.write("theory.json", &bytes)?;
        run.finish()?;
    }
    Ok(ExitCode::SUCCESS)
}

struct CensusOpts {
    arm: Arm,
    seed: u64,
    rounds: usize,
    key: Option<String>,
    key_index: usize,
    key_len: usize,
    starts: Option<Vec<usize>>,
    strategy: StrategyArg,
    threshold: usize,
    typical_last: bool,
}

fn cmd_census(o: &CensusOpts, dir: &Path) -> anyhow::Result<ExitCode> {
    let mut run = Run::new("census", dir, Some(o.seed))?;
    let spec = round_spec(o.rounds, o.typical_last);
    let t = Instant::now();
    let set = match o.arm {
        Arm::Plain => build_sbar(),
        Arm::Random => random_sample_set(o.seed, o.key_index as u32),
        Arm::Aes => {
            let key = match &o.key {
                Some(h) => CipherKey::from_hex(h).map_err(|e| UsageError(e.to_string()))?,
                None => experiment_key(o.seed, o.key_index as u32, o.key_len)
                    .map_err(|e| UsageError(e.to_string()))?,
            };
            if spec.rounds > key.rounds() {
                return Err(UsageError(format!(
                    "--rounds {} exceeds the {} rounds of this key size",
                    spec.rounds,
                    key.rounds()
                ))
                .into());
            }
            encrypt_set(&build_sbar(), &key, spec)?
        }
    };
    run.time("build_set", t);
    let starts = o
        .starts
        .clone()
        .unwrap_or_else(|| (1..=NUM_WINDOWS).collect());
    let strategy = census_strategy(o.strategy, starts.len(), o.threshold);
    let t = Instant::now();
    let census = algorithm_b(&EmbeddingParams::aes(), &set, Some(&starts), strategy)?;
    run.time("census", t);
    let record = CensusRecord {
        arm: o.arm,
        key_index: o.key_index,
        seed: o.seed,
        rounds: if o.arm == Arm::Aes { spec.rounds } else { 0 },
        window_starts: starts,
        counts: census.counts,
    };
    run.set("arm", o.arm);
    if o.arm != Arm::Plain {
        run.set("key_index", o.key_index);
    }
    if o.arm == Arm::Aes {
        run.set("rounds", spec.rounds);
        run.set("atypical_last", spec.atypical_last);
        match &o.key {
            Some(k) => run.set("key", k),
            None => run.set("key_len", o.key_len),
        }
    }
    run.set("windows", record.window_starts.len());
    run.set("strategy", format!("{strategy:?}"));
    run.write("census.json", &to_json(&record)?)?;
    run.write(
        "census.csv",
        census_csv(std::slice::from_ref(&record)).as_bytes(),
    )?;
    println!("{}", serde_json::to_string(&record.counts)?);
    run.finish()?;
    Ok(ExitCode::SUCCESS)
}

/// Low-rank counts per sample, ascending, `tau` rows per arm.
fn plot_csv(result: &ExperimentResult, n: usize, p_low: f64) -> String {
    let mut out = String::from("arm,order,key_index,low_rank_count,expected\n");
    for records in [&result.aes, &result.random] {
        let mut rows: Vec<(u64, &CensusRecord)> = records
            .iter()
            .map(|r| (r.census().count_at_most(n - 2), r))
            .collect();
        rows.sort_by_key(|&(low, r)| (low, r.key_index));
        for (i, (low, r)) in rows.iter().enumerate() {
            let expected = r.window_starts.len() as f64 * p_low;
            out.push_str(&format!(
                "{},{},{},{},{:.4}\n",
                r.arm, i, r.key_index, low, expected
            ));
        }
    }
    out
}

fn cmd_distinguish(
    exp: &ExperimentConfig,
    bins: Binning,
    alpha: f64,
    dir: &Path,
) -> anyhow::Result<ExitCode> {
    let mut run = Run::new("distinguish", dir, Some(exp.seed))?;
    run.set("tau", exp.tau);
    run.set("rounds", exp.rounds.rounds);
    run.set("atypical_last", exp.rounds.atypical_last);
    run.set("key_len", exp.key_len);
    run.set(
        "windows",
        exp.window_starts.as_ref().map_or(NUM_WINDOWS, Vec::len),
    );
    run.set("strategy", format!("{:?}", exp.strategy));
    run.set("bins", format!("{bins:?}").to_lowercase());
    run.set("alpha", alpha);

    let t = Instant::now();
    eprintln!("aes arm: {} key samples", exp.tau);
    let aes = run_arm(exp, Arm::Aes)?;
    run.time("aes_arm", t);
    let t = Instant::now();
    eprintln!("random arm: {} baseline sets", exp.tau);
    let random = run_arm(exp, Arm::Random)?;
    run.time("random_arm", t);
    let result = ExperimentResult { aes, random };

    let report = verdict(
        &result
            .aes
            .iter()
            .map(CensusRecord::census)
            .collect::<Vec<_>>(),
        &result
            .random
            .iter()
            .map(CensusRecord::census)
            .collect::<Vec<_>>(),
        WINDOW_LEN,
        bins,
        alpha,
    )?;
    let p_low = square_rank_distribution(WINDOW_LEN)?.p_at_most(WINDOW_LEN - 2);
    run.write("report.json", &to_json(&report)?)?;
    run.write("censuses.json", &to_json(&result)?)?;
    let all: Vec<CensusRecord> = result.aes.iter().chain(&result.random).cloned().collect();
    run.write("censuses.csv", census_csv(&all).as_bytes())?;
    run.write("plot.csv", plot_csv(&result, WINDOW_LEN, p_low).as_bytes())?;
    run.finish()?;

    println!(
        "p(aes) = {:.4e}  p(random) = {:.4e}  distinguished = {}",
        report.aes.p_value, report.random.p_value, report.distinguished
    );
    Ok(if report.distinguished {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn cmd_rank(file: &Path, threshold: usize) -> anyhow::Result<ExitCode> {
    let f = std::fs::File::open(file).with_context(|| format!("opening {}", file.display()))?;
    let mut m = read_matrix(std::io::BufReader::new(f))
        .with_context(|| format!("reading {}", file.display()))?;
    let (nrows, ncols) = (m.nrows(), m.ncols());
    let t = Instant::now();
    let rank = rank_in_place(&mut m, threshold);
    println!(
        "{}",
        json!({"nrows": nrows, "ncols": ncols, "rank": rank, "seconds": t.elapsed().as_secs_f64()})
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_selftest(opts: &SelftestOptions) -> anyhow::Result<ExitCode> {
    let checks = run_selftest(opts);
    for c in &checks {
        println!(
            "{} {:<22} {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    println!("{} passed, {failed} failed", checks.len() - failed);
    Ok(if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}
