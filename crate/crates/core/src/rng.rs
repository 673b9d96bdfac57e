//! Deterministic RNG construction. Every randomized component derives its
//! stream from a user seed plus a fixed domain tag, so the same seed never
//! feeds two different consumers the same stream.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::matrix::Matrix;

pub const TAG_WEIGHT_INIT: u64 = 0x5753_494e_4954; // "WSINIT"
pub const TAG_SHUFFLE: u64 = 0x5348_5546; // "SHUF"
pub const TAG_NOISE: u64 = 0x4e4f_4953_45; // "NOISE"
pub const TAG_BLOBS: u64 = 0x424c_4f42; // "BLOB"

pub fn seeded(seed: u64, tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ tag.rotate_left(17))
}

pub fn uniform_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> Matrix {
    let data = (0..rows * cols).map(|_| rng.gen_range(lo..hi)).collect();
    Matrix::from_vec(rows, cols, data).expect("consistent dims")
}

/// Seeded Fisher-Yates shuffle of `0..n`.
pub fn shuffled_indices(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        idx.swap(i, j);
    }
    idx
}
