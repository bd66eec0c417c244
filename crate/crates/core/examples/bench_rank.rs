//! Times one dense rank computation at distinguisher scale.
//!
//! `cargo run --release --example bench_rank -- [nrows] [ncols] [threshold]`

use std::time::Instant;

use aesrank::gf2::{rank_in_place, BitMatrix};

fn main() {
    let args: Vec<usize> = std::env::args()
        .skip(1)
        .map(|a| a.parse().unwrap())
        .collect();
    let nrows = args.first().copied().unwrap_or(31745);
    let ncols = args.get(1).copied().unwrap_or(32768);
    let threshold = args
        .get(2)
        .copied()
        .unwrap_or(aesrank::gf2::DEFAULT_THRESHOLD);
    // splitmix64 fill (a linear generator would cap the rank at 64).
    let mut s = 0x9e37_79b9_7f4a_7c15_u64;
    let words = ncols.div_ceil(64);
    let mut data = Vec::with_capacity(nrows * words);
    for _ in 0..nrows {
        for w in 0..words {
            s = s.wrapping_add(0x9e37_79b9_7f4a_7c15);
            let mut z = s;
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
            let z = z ^ (z >> 31);
            let mask = if w + 1 == words && ncols % 64 != 0 {
                (1u64 << (ncols % 64)) - 1
            } else {
                !0
            };
            data.push(z & mask);
        }
    }
    let mut m = BitMatrix::from_words(nrows, ncols, data).unwrap();
    let t = Instant::now();
    let r = rank_in_place(&mut m, threshold);
    println!(
        "{nrows}x{ncols} threshold {threshold}: rank {r} in {:.2?}",
        t.elapsed()
    );
}
