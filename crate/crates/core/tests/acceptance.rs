//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails. The full run takes around twenty minutes on one
//! core.

use std::fmt::Display;
use std::time::Instant;

use aesrank::aes::{self, encrypt, lambda_matrix, Block, CipherKey, RoundSpec};
use aesrank::distinguisher::{
    build_sbar, encrypt_set, experiment_key, run_arm, strided_starts, window_ranks, Arm,
    CensusRecord, CensusStrategy, DistinguisherError, ExperimentConfig, OrderedSet, RankCensus,
    NUM_WINDOWS, WINDOW_LEN,
};
use aesrank::embedding::{block_span_dimension, EmbeddingParams};
use aesrank::gf2::{
    m4rm_multiply, naive_multiply, naive_rank, rank, rank_in_place, BitMatrix, DEFAULT_THRESHOLD,
};
use aesrank::stats::{
    arm_report, rank_counts_closed_form, rank_counts_enumerated, square_rank_distribution, Binning,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Report {
    failed: Vec<String>,
}

impl Report {
    fn line(&mut self, id: &str, pass: bool, what: &str, detail: impl Display, t: Instant) {
        let verdict = if pass { "PASS" } else { "FAIL" };
        println!(
            "{verdict} [{id}] {what}: {detail} ({:.1}s)",
            t.elapsed().as_secs_f64()
        );
        if !pass {
            self.failed.push(id.to_string());
        }
    }
}

fn main() {
    let mut r = Report { failed: Vec::new() };
    criterion_3(&mut r);
    criterion_4(&mut r);
    criterion_5(&mut r);
    criterion_6(&mut r);
    criterion_8(&mut r);
    criterion_2(&mut r);
    criterion_1(&mut r);
    criterion_7(&mut r);
    if r.failed.is_empty() {
        println!("acceptance: all criteria pass");
    } else {
        println!("acceptance: failed {}", r.failed.join(", "));
        std::process::exit(1);
    }
}

/// The plain set with the two free bytes in the given order, high byte first.
fn sbar_with(hi: usize, lo: usize) -> OrderedSet {
    OrderedSet::new(
        (0..1usize << 16)
            .map(|i| {
                let mut v = [0u8; 16];
                v[hi] = (i >> 8) as u8;
                v[lo] = i as u8;
                v
            })
            .collect(),
    )
    .unwrap()
}

fn round_sets(plain: &OrderedSet, rounds: &[usize]) -> Vec<(String, OrderedSet)> {
    rounds
        .iter()
        .map(|&n| {
            if n == 0 {
                return ("plain".to_string(), plain.clone());
            }
            let key = experiment_key(1, n as u32, 16).unwrap();
            let set = encrypt_set(plain, &key, RoundSpec::reduced(n)).unwrap();
            (format!("{n}-round"), set)
        })
        .collect()
}

fn criterion_1(r: &mut Report) {
    let t = Instant::now();
    let params = EmbeddingParams::aes();
    let starts = strided_starts(8, NUM_WINDOWS);
    let want = [(0, 4690), (1, 4690), (2, 20548), (3, 31661)];
    let rounds: Vec<usize> = want.iter().map(|w| w.0).collect();
    let per_window = CensusStrategy::PerWindow {
        threshold: DEFAULT_THRESHOLD,
    };
    let mut summary = Vec::new();
    let mut pass = false;
    for (name, hi, lo) in [("primary", 14, 15), ("swapped", 15, 14)] {
        let mut ok = true;
        let mut parts = Vec::new();
        for ((label, set), &(_, expect)) in
            round_sets(&sbar_with(hi, lo), &rounds).iter().zip(&want)
        {
            let ranks =
                window_ranks(&params, set.blocks(), WINDOW_LEN, &starts, per_window).unwrap();
            let hits = ranks.iter().filter(|&&x| x == expect).count();
            ok &= hits == ranks.len();
            parts.push(format!("{label} {hits}/{} = {expect}", ranks.len()));
        }
        summary.push(format!("{name} convention: {}", parts.join(", ")));
        if ok {
            pass = true;
            break;
        }
    }
    r.line("1", pass, "window rank facts", summary.join("; "), t);
}

fn criterion_2(r: &mut Report) {
    let t = Instant::now();
    let params = EmbeddingParams::aes();
    let want = [(0, 4821), (2, 20679), (3, 31681), (4, 31745)];
    let rounds: Vec<usize> = want.iter().map(|w| w.0).collect();
    let mut ok = true;
    let mut parts = Vec::new();
    for ((label, set), &(_, expect)) in round_sets(&build_sbar(), &rounds).iter().zip(&want) {
        let dim = block_span_dimension(&params, set.blocks());
        ok &= dim == expect;
        parts.push(format!("{label} {dim} (want {expect})"));
    }
    r.line("2", ok, "span dimensions", parts.join(", "), t);
}

fn criterion_3(r: &mut Report) {
    let t = Instant::now();
    let d = square_rank_distribution(WINDOW_LEN).unwrap();
    let tail = d.p_at_most(WINDOW_LEN - 2);
    let counts: Vec<u64> = Binning::Three
        .probabilities(&d)
        .iter()
        .map(|p| (p * NUM_WINDOWS as f64).round() as u64)
        .collect();
    let mut small_ok = true;
    for n in 1..=6 {
        let exact = rank_counts_enumerated(n);
        let dn = square_rank_distribution(n).unwrap();
        let total = (1u128 << (n * n)) as f64;
        small_ok &= exact == rank_counts_closed_form(n);
        small_ok &= exact.iter().sum::<u128>() == 1u128 << (n * n);
        small_ok &= exact.iter().enumerate().all(|(k, &c)| {
            let p = c as f64 / total;
            ((dn.p_rank(k) - p) / p).abs() < 1e-12
        });
    }
    let pass = (tail - 0.1336357).abs() <= 1e-6 && counts == [9759, 19517, 4516] && small_ok;
    r.line(
        "3",
        pass,
        "rank distribution",
        format!(
            "P(rank <= n-2) = {tail:.9}, expected counts {counts:?}, n <= 6 enumeration {}",
            if small_ok { "exact" } else { "mismatch" }
        ),
        t,
    );
}

fn criterion_4(r: &mut Report) {
    let t = Instant::now();
    let d = square_rank_distribution(WINDOW_LEN).unwrap();
    let cases = [
        ("2-bin random", Binning::Two, vec![2049671, 315769], 0.51),
        ("2-bin aes", Binning::Two, vec![2047430, 318010], 0.0003),
        (
            "3-bin random",
            Binning::Three,
            vec![684191, 1365480, 315769],
            0.29,
        ),
        (
            "3-bin aes",
            Binning::Three,
            vec![682317, 1365113, 318010],
            0.0013,
        ),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (label, bins, observed, quoted) in cases {
        let rep = arm_report(observed, &bins.probabilities(&d), 0.05).unwrap();
        let rel = (rep.p_value - quoted).abs() / quoted;
        ok &= rel <= 0.15;
        parts.push(format!(
            "{label} p = {:.4e} (quoted {quoted}, rel {rel:.3})",
            rep.p_value
        ));
    }
    r.line(
        "4",
        ok,
        "chi-square on published counts",
        parts.join(", "),
        t,
    );
}

fn random_matrix(rng: &mut ChaCha8Rng, nrows: usize, ncols: usize) -> BitMatrix {
    let density = [0.5, 0.1, 0.02][rng.gen_range(0..3)];
    BitMatrix::from_fn(nrows, ncols, |_, _| rng.gen_bool(density))
}

/// Random matrix whose rank is at most `k`, as a product through `k`.
fn low_rank_matrix(rng: &mut ChaCha8Rng, nrows: usize, ncols: usize, k: usize) -> BitMatrix {
    let a = random_matrix(rng, nrows, k);
    let b = random_matrix(rng, k, ncols);
    naive_multiply(&a, &b)
}

fn criterion_5(r: &mut Report) {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut rank_bad = 0;
    for _ in 0..1000 {
        let (nr, nc) = (rng.gen_range(0..=64), rng.gen_range(0..=64));
        let m = if rng.gen_bool(0.3) {
            let k = rng.gen_range(1..=64);
            low_rank_matrix(&mut rng, nr, nc, k)
        } else {
            random_matrix(&mut rng, nr, nc)
        };
        rank_bad += usize::from(rank(&m) != naive_rank(&m));
    }
    let mut mul_bad = 0;
    for _ in 0..200 {
        let (p, q, s) = (
            rng.gen_range(1..=256),
            rng.gen_range(1..=256),
            rng.gen_range(1..=256),
        );
        let a = random_matrix(&mut rng, p, q);
        let b = random_matrix(&mut rng, q, s);
        mul_bad += usize::from(m4rm_multiply(&a, &b).unwrap() != naive_multiply(&a, &b));
    }
    let mut thr_bad = 0;
    for _ in 0..500 {
        let (nr, nc) = (rng.gen_range(1..=700), rng.gen_range(1..=700));
        let m = if rng.gen_bool(0.5) {
            let k = rng.gen_range(1..=nr.min(nc));
            low_rank_matrix(&mut rng, nr, nc, k)
        } else {
            random_matrix(&mut rng, nr, nc)
        };
        let ranks: Vec<usize> = [8, 64, 512, usize::MAX]
            .iter()
            .map(|&th| rank_in_place(&mut m.clone(), th))
            .collect();
        thr_bad += usize::from(ranks.iter().any(|&x| x != ranks[0]) || ranks[0] != naive_rank(&m));
    }
    r.line(
        "5",
        rank_bad + mul_bad + thr_bad == 0,
        "GF(2) engine",
        format!(
            "rank vs elimination {rank_bad}/1000 wrong, four-Russians vs schoolbook \
             {mul_bad}/200 wrong, threshold variation {thr_bad}/500 wrong"
        ),
        t,
    );
}

fn criterion_6(r: &mut Report) {
    let t = Instant::now();
    let pt = aes::parse_block("00112233445566778899aabbccddeeff").unwrap();
    let vectors = [
        (
            "000102030405060708090a0b0c0d0e0f",
            "69c4e0d86a7b0430d8cdb78070b4c55a",
        ),
        (
            "000102030405060708090a0b0c0d0e0f1011121314151617",
            "dda97ca4864cdfe06eaf70a0ec0d7191",
        ),
        (
            "000102030405060708090a0b0c0d0e0f101112131415161718191a1b1c1d1e1f",
            "8ea2b7ca516745bfeafc49904b496089",
        ),
    ];
    let fips = vectors
        .iter()
        .filter(|(k, c)| {
            let key = CipherKey::from_hex(k).unwrap();
            aes::block_hex(&encrypt(&key, &pt, RoundSpec::full(&key)).unwrap()) == *c
        })
        .count();
    let m = lambda_matrix();
    let mut p = BitMatrix::identity(128);
    for _ in 0..8 {
        p = m4rm_multiply(&p, &m).unwrap();
    }
    let order8 = p == BitMatrix::identity(128);
    let mut seen = [false; 256];
    aes::SBOX.iter().for_each(|&b| seen[b as usize] = true);
    let perm = seen.iter().all(|&s| s);
    r.line(
        "6",
        fips == 3 && order8 && perm,
        "AES core",
        format!("FIPS-197 vectors {fips}/3, M^8 = I {order8}, S-box permutation {perm}"),
        t,
    );
}

fn criterion_7(r: &mut Report) {
    let t = Instant::now();
    let cfg = ExperimentConfig::desk(2, 4, 512, 1);
    let first = run_arm(&cfg, Arm::Random).unwrap();
    let second = run_arm(&cfg, Arm::Random).unwrap();
    let a = serde_json::to_vec(&first).unwrap();
    let b = serde_json::to_vec(&second).unwrap();
    let identical = a == b;

    let mut pooled = RankCensus::default();
    first.iter().for_each(|c| pooled.merge(&c.census()));
    let n = pooled.total as f64;
    let probs = Binning::Three.probabilities(&square_rank_distribution(WINDOW_LEN).unwrap());
    let observed = Binning::Three.observe(&pooled, WINDOW_LEN);
    let mut in_band = true;
    let mut parts = Vec::new();
    for (o, p) in observed.iter().zip(&probs) {
        let (mean, sd) = (n * p, (n * p * (1.0 - p)).sqrt());
        let z = (*o as f64 - mean) / sd;
        in_band &= z.abs() <= 3.0;
        parts.push(format!("{o} (z {z:+.2})"));
    }
    r.line(
        "7",
        identical && in_band && pooled.total == 1024,
        "desk-scale random arm",
        format!(
            "tau 2 x 512 windows, bins [{}], JSON identical across runs {identical}",
            parts.join(", ")
        ),
        t,
    );

    // The sliding census against independent decompositions of a few of
    // the same windows.
    let t = Instant::now();
    let rec: &CensusRecord = &first[0];
    let set = aesrank::distinguisher::random_sample_set(1, 0);
    let sample: Vec<usize> = rec.window_starts.iter().step_by(64).copied().collect();
    let direct = window_ranks(
        &EmbeddingParams::aes(),
        set.blocks(),
        WINDOW_LEN,
        &sample,
        CensusStrategy::PerWindow {
            threshold: DEFAULT_THRESHOLD,
        },
    )
    .unwrap();
    let sliding = window_ranks(
        &EmbeddingParams::aes(),
        set.blocks(),
        WINDOW_LEN,
        &sample,
        CensusStrategy::Sliding,
    )
    .unwrap();
    r.line(
        "7+",
        direct == sliding,
        "sliding census vs per-window",
        format!("{} windows, ranks {direct:?}", sample.len()),
        t,
    );
}

fn criterion_8(r: &mut Report) {
    let t = Instant::now();
    let empty = [(0, 0), (0, 7), (7, 0)]
        .iter()
        .all(|&(a, b)| rank(&BitMatrix::zeros(a, b)) == 0);
    let mut cfg = ExperimentConfig::desk(1, 4, 1, 1);
    cfg.tau = 0;
    let tau_rejected = matches!(run_arm(&cfg, Arm::Aes), Err(DistinguisherError::ZeroTau));
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let whitening = [16, 24, 32].iter().all(|&len| {
        (0..32).all(|_| {
            let key_bytes: Vec<u8> = (0..len).map(|_| rng.gen()).collect();
            let key = CipherKey::new(&key_bytes).unwrap();
            let x: Block = rng.gen();
            let want: Block = std::array::from_fn(|i| x[i] ^ key_bytes[i]);
            [RoundSpec::reduced(0), RoundSpec::typical(0)]
                .iter()
                .all(|&s| encrypt(&key, &x, s).unwrap() == want)
        })
    });
    r.line(
        "8",
        empty && tau_rejected && whitening,
        "degenerate cases",
        format!(
            "empty rank 0 {empty}, tau = 0 rejected {tau_rejected}, \
             0 rounds = whitening {whitening}"
        ),
        t,
    );
}
