//! Seeded, counter-based random streams.
//!
//! A master seed plus a stream id selects an independent ChaCha20 keystream.
//! Replication `r` of an experiment uses stream id `substream_id(r, lane)`, so
//! parallel and sequential runs draw identical numbers.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Name of the normal transform, recorded in result metadata.
pub const GAUSSIAN_TRANSFORM: &str = "ziggurat (rand_distr::StandardNormal over ChaCha20)";

/// Lanes separate independent uses of randomness within one replication.
pub mod lane {
    pub const MATRIX: u64 = 0;
    pub const MECHANISM: u64 = 1;
    pub const MECHANISM_REAL: u64 = 2;
    pub const SDE: u64 = 3;
    pub const DIRECT: u64 = 4;
}

const LANE_BITS: u32 = 8;

pub fn substream_id(index: u64, lane: u64) -> u64 {
    debug_assert!(lane < (1 << LANE_BITS));
    (index << LANE_BITS) | lane
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub master_seed: u64,
    pub stream: u64,
}

#[derive(Debug, Clone)]
pub struct SeededRng {
    inner: ChaCha20Rng,
    record: SeedRecord,
}

impl SeededRng {
    pub fn new(master_seed: u64) -> Self {
        Self::with_stream(master_seed, 0)
    }

    pub fn with_stream(master_seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha20Rng::seed_from_u64(master_seed);
        inner.set_stream(stream);
        Self {
            inner,
            record: SeedRecord { master_seed, stream },
        }
    }

    /// Stream for replication `index`, lane `lane`.
    pub fn substream(master_seed: u64, index: u64, lane: u64) -> Self {
        Self::with_stream(master_seed, substream_id(index, lane))
    }

    pub fn record(&self) -> SeedRecord {
        self.record
    }

    pub fn normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }
}

impl RngCore for SeededRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}
