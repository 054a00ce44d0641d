//! Deterministic RNG stream derivation.
//!
//! Every independent unit of work (chain, grid point, quadrature node) gets
//! its own ChaCha stream derived from the run seed. Streams are disjoint by
//! construction: the 64-bit stream id packs (domain, unit, chain) into
//! non-overlapping bit fields, and distinct ChaCha streams never share
//! keystream blocks.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Top-level purpose of a stream; keeps different pipeline stages from
/// colliding even when they share unit/chain indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StreamDomain {
    Uniform = 1,
    Gibbs = 2,
    Thermo = 3,
    GaussianCount = 4,
    BasePoint = 5,
    HalfspaceScan = 6,
}

const UNIT_BITS: u32 = 24;
const CHAIN_BITS: u32 = 24;

/// RNG for chain `chain` of unit `unit` in `domain`, all derived from `seed`.
///
/// `unit` and `chain` must fit in 24 bits each.
pub fn stream_rng(seed: u64, domain: StreamDomain, unit: u32, chain: u32) -> ChaCha8Rng {
    assert!(unit < (1 << UNIT_BITS), "stream unit out of range");
    assert!(chain < (1 << CHAIN_BITS), "stream chain out of range");
    let stream = ((domain as u64) << (UNIT_BITS + CHAIN_BITS))
        | ((unit as u64) << CHAIN_BITS)
        | chain as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
