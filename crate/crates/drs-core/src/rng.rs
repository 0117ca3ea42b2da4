//! Deterministic, stream-addressable random source.
//!
//! Every stochastic routine in this crate draws from a [`RandomSource`],
//! a ChaCha12 generator addressed by a `(seed, stream)` pair. The same
//! pair always reproduces the same draw sequence; distinct stream ids
//! yield statistically independent sequences, so replicates and chains
//! can run in parallel without sharing state.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// Seedable random stream. Identical `(seed, stream)` pairs produce
/// byte-identical draw sequences; a source is owned by exactly one
/// consumer (chain or replicate) at a time.
#[derive(Debug, Clone)]
pub struct RandomSource {
    seed: u64,
    stream: u64,
    rng: ChaCha12Rng,
}

impl RandomSource {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { seed, stream, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Fresh source with the same seed on a different stream.
    pub fn with_stream(&self, stream: u64) -> Self {
        Self::new(self.seed, stream)
    }
}

impl RngCore for RandomSource {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }
}

/// Stream-id layout.
///
/// Replicate-level streams keep the low 32 bits zero; chain streams set
/// bit 31 and the chain index in the low bits. Drivers hand each engine
/// a replicate-level source, and the engine derives one child stream per
/// chain from it, so no two consumers ever share a stream.
pub mod streams {
    const CHAIN_BIT: u64 = 1 << 31;

    /// Stream for replicate `r` (dataset generation and engine base).
    /// Single-table runs use `r = 0`.
    pub fn replicate(r: u32) -> u64 {
        (r as u64) << 32
    }

    /// Chain `c` derived from a replicate-level base stream.
    pub fn chain(base: u64, c: u32) -> u64 {
        debug_assert_eq!(base & 0xFFFF_FFFF, 0, "base must be replicate-level");
        base | CHAIN_BIT | c as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn same_seed_and_stream_reproduce() {
        let mut a = RandomSource::new(42, 7);
        let mut b = RandomSource::new(42, 7);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn distinct_streams_differ() {
        let mut a = RandomSource::new(42, 0);
        let mut b = RandomSource::new(42, 1);
        let xs: Vec<u64> = (0..8).map(|_| a.next_u64()).collect();
        let ys: Vec<u64> = (0..8).map(|_| b.next_u64()).collect();
        assert_ne!(xs, ys);
    }

    #[test]
    fn stream_layout_is_disjoint() {
        let rep = streams::replicate(3);
        let c0 = streams::chain(rep, 0);
        let c1 = streams::chain(rep, 1);
        assert_ne!(rep, c0);
        assert_ne!(c0, c1);
        assert_ne!(streams::chain(streams::replicate(0), 0), c0);
    }

    #[test]
    fn uniform_draws_in_unit_interval() {
        let mut src = RandomSource::new(1, 0);
        for _ in 0..1000 {
            let u: f64 = src.random();
            assert!((0.0..1.0).contains(&u));
        }
    }
}
