use aesrank::gf2::{m4rm_multiply, BitMatrix};
use std::time::Instant;
fn main() {
    let n: usize = std::env::args()
        .nth(1)
        .map(|a| a.parse().unwrap())
        .unwrap_or(8192);
    let m: usize = std::env::args()
        .nth(2)
        .map(|a| a.parse().unwrap())
        .unwrap_or(n);
    let mut s = 1u64;
    let mut next = || {
        s = s.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = s;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    };
    let w = n / 64;
    let a = BitMatrix::from_words(m, n, (0..m * w).map(|_| next()).collect()).unwrap();
    let b = BitMatrix::from_words(n, n, (0..n * w).map(|_| next()).collect()).unwrap();
    let t = Instant::now();
    let c = m4rm_multiply(&a, &b).unwrap();
    let el = t.elapsed();
    let ops = (m * n / 8 * w) as f64;
    println!(
        "{n}: {:.2?} ({:.2} words/ns) w={}",
        el,
        ops / el.as_nanos() as f64,
        c.weight()
    );
}
