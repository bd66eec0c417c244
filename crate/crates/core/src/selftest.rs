//! Quick end-to-end checks of every component.

use serde::Serialize;

use crate::aes::{self, encrypt, gmul, lambda_matrix, CipherKey, RoundSpec};
use crate::distinguisher::{build_sbar, window_ranks, CensusStrategy, WINDOW_LEN};
use crate::embedding::EmbeddingParams;
use crate::gf2::{m4rm_multiply, naive_rank, rank, BitMatrix};
use crate::stats::{rank_counts_closed_form, rank_counts_enumerated, square_rank_distribution};

#[derive(Clone, Debug)]
pub struct SelftestOptions {
    /// Table the S-box checks inspect; replace it to inject a fault.
    pub sbox: [u8; 256],
    /// Include the full-size window rank of the plain set (a few seconds).
    pub spot_check: bool,
}

impl Default for SelftestOptions {
    fn default() -> Self {
        Self {
            sbox: aes::SBOX,
            spot_check: true,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: impl Into<String>) -> Check {
    Check {
        name,
        passed,
        detail: detail.into(),
    }
}

pub fn run_selftest(opts: &SelftestOptions) -> Vec<Check> {
    let mut out = vec![fips_vectors(), lambda_order(), sbox_permutation(&opts.sbox)];
    out.push(sbox_formula(&opts.sbox));
    out.push(rank_oracle());
    out.push(one_hot());
    out.push(theory_enumeration());
    if opts.spot_check {
        out.push(spot_check());
    }
    out
}

fn fips_vectors() -> Check {
    let pt = aes::parse_block("00112233445566778899aabbccddeeff").unwrap();
    let cases = [
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
    let failed: Vec<usize> = cases
        .iter()
        .enumerate()
        .filter(|(_, (k, c))| {
            let key = CipherKey::from_hex(k).unwrap();
            aes::block_hex(&encrypt(&key, &pt, RoundSpec::full(&key)).unwrap()) != *c
        })
        .map(|(i, _)| i)
        .collect();
    check(
        "fips197-vectors",
        failed.is_empty(),
        format!("{} of 3 key sizes correct", 3 - failed.len()),
    )
}

fn lambda_order() -> Check {
    let m = lambda_matrix();
    let id = BitMatrix::identity(128);
    let mut p = id.clone();
    let mut order = None;
    for s in 1..=8 {
        p = m4rm_multiply(&p, &m).unwrap();
        if p == id {
            order = Some(s);
            break;
        }
    }
    check(
        "lambda-order-8",
        order == Some(8),
        format!("order {order:?}"),
    )
}

fn sbox_permutation(sbox: &[u8; 256]) -> Check {
    let mut seen = [false; 256];
    for &b in sbox {
        seen[b as usize] = true;
    }
    let distinct = seen.iter().filter(|&&s| s).count();
    check(
        "sbox-bijective",
        distinct == 256,
        format!("{distinct} distinct outputs"),
    )
}

fn sbox_formula(sbox: &[u8; 256]) -> Check {
    let bad = (0..=255u8)
        .filter(|&a| {
            let inv = (1..=255u8).find(|&b| gmul(a, b) == 1).unwrap_or(0);
            let affine = (0..5).fold(0x63, |acc, s| acc ^ inv.rotate_left(s));
            sbox[a as usize] != affine
        })
        .count();
    check(
        "sbox-inverse-affine",
        bad == 0,
        format!("{bad} entries differ"),
    )
}

fn rank_oracle() -> Check {
    // A fixed LCG keeps this check free of extra dependencies.
    let mut state = 0x853c49e6748fea9bu64;
    let mut next = || {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        state >> 33
    };
    let mut bad = 0;
    for _ in 0..200 {
        let (r, c) = (1 + next() as usize % 64, 1 + next() as usize % 64);
        let dense = next() % 2 == 0;
        let m = BitMatrix::from_fn(r, c, |_, _| {
            if dense {
                next() & 1 == 1
            } else {
                next() % 8 == 0
            }
        });
        if rank(&m) != naive_rank(&m) {
            bad += 1;
        }
    }
    check(
        "rank-vs-elimination",
        bad == 0,
        format!("{bad} of 200 disagree"),
    )
}

fn one_hot() -> Check {
    let p = EmbeddingParams::aes();
    let mut hit = [false; 256];
    for x in 0..256u32 {
        hit[p.position(x)] = true;
    }
    let ok = hit.iter().all(|&h| h) && p.position(0) == 0 && p.position(p.eta()) == 1;
    check("epsilon-one-hot", ok, "positions of all 256 field elements")
}

fn theory_enumeration() -> Check {
    let mut ok = true;
    for n in 1..=6 {
        let exact = rank_counts_enumerated(n);
        let d = square_rank_distribution(n).unwrap();
        let total = (1u128 << (n * n)) as f64;
        ok &= exact == rank_counts_closed_form(n);
        ok &= exact
            .iter()
            .enumerate()
            .all(|(r, &c)| ((d.p_rank(r) - c as f64 / total) / (c as f64 / total)).abs() < 1e-12);
    }
    check("theory-vs-enumeration", ok, "n = 1..6")
}

fn spot_check() -> Check {
    let p = EmbeddingParams::aes();
    let set = build_sbar();
    let r = window_ranks(
        &p,
        set.blocks(),
        WINDOW_LEN,
        &[1],
        CensusStrategy::PerWindow {
            threshold: crate::gf2::DEFAULT_THRESHOLD,
        },
    )
    .map(|v| v[0]);
    check(
        "plain-window-rank",
        matches!(r, Ok(4690)),
        format!("window 1 rank {r:?}"),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corrupted_sbox_detected() {
        let mut sbox = aes::SBOX;
        sbox[7] = sbox[8];
        let opts = SelftestOptions {
            sbox,
            spot_check: false,
        };
        let res = run_selftest(&opts);
        let get = |n: &str| res.iter().find(|c| c.name == n).unwrap().passed;
        assert!(!get("sbox-bijective"));
        assert!(!get("sbox-inverse-affine"));
        assert!(get("fips197-vectors"));
    }

    #[test]
    fn clean_run_passes() {
        let res = run_selftest(&SelftestOptions {
            spot_check: false,
            ..Default::default()
        });
        assert!(res.iter().all(|c| c.passed), "{res:?}");
    }
}
