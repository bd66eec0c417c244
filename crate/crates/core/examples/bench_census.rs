//! Times one sliding-window census over a baseline set.
use aesrank::distinguisher::{
    algorithm_b, random_sample_set, strided_starts, CensusStrategy, NUM_WINDOWS,
};
use aesrank::embedding::EmbeddingParams;

fn main() {
    let windows: usize = std::env::args().nth(1).map_or(512, |s| s.parse().unwrap());
    let params = EmbeddingParams::aes();
    let set = random_sample_set(1, 0);
    let starts = strided_starts(windows, NUM_WINDOWS);
    let t = std::time::Instant::now();
    let census = algorithm_b(&params, &set, Some(&starts), CensusStrategy::Sliding).unwrap();
    println!("{:?} in {:.2?}", census.counts, t.elapsed());
}
