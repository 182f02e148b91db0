//! Deterministic per-path random streams.
//!
//! A path's stream is a ChaCha20 keystream keyed by the master seed and a
//! purpose tag, with the path index as the stream id. Streams are counter
//! based, so path `i` draws the same numbers no matter which worker thread
//! generates it or in which order.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

/// Identifies one path of a reproducible ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SeedTag {
    pub master_seed: u64,
    pub path_index: u64,
}

impl SeedTag {
    pub fn new(master_seed: u64, path_index: u64) -> Self {
        Self { master_seed, path_index }
    }
}

/// Separates independent uses of the same seed tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamPurpose {
    BrownianIncrements,
    GaussianVector,
}

impl StreamPurpose {
    fn tag(self) -> u64 {
        match self {
            StreamPurpose::BrownianIncrements => 0x6272_6f77_6e69_616e,
            StreamPurpose::GaussianVector => 0x6761_7573_7369_616e,
        }
    }
}

pub fn stream(tag: SeedTag, purpose: StreamPurpose) -> ChaCha20Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&tag.master_seed.to_le_bytes());
    key[8..16].copy_from_slice(&purpose.tag().to_le_bytes());
    let mut rng = ChaCha20Rng::from_seed(key);
    rng.set_stream(tag.path_index);
    rng
}

/// `n` independent standard normal draws from the tagged stream.
pub fn standard_normals(tag: SeedTag, purpose: StreamPurpose, n: usize) -> Vec<f64> {
    let mut rng = stream(tag, purpose);
    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
}
