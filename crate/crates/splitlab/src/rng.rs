//! Deterministic stream seeding.
//!
//! Every random draw in a run comes from a ChaCha stream keyed by the
//! run seed, a purpose tag, and the indices that identify the event
//! (client, round, subround). Replaying a run therefore reproduces every
//! draw bit-for-bit, and streams for distinct events never alias.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose tags; each tag owns an independent family of streams.
pub const TAG_PARTITION: u64 = 1;
pub const TAG_TURN: u64 = 2;
pub const TAG_SWAP: u64 = 3;
pub const TAG_DATA: u64 = 4;
pub const TAG_INIT: u64 = 5;

/// Builds a ChaCha stream from four key words.
pub fn stream(seed: u64, tag: u64, a: u64, b: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&tag.to_le_bytes());
    key[16..24].copy_from_slice(&a.to_le_bytes());
    key[24..32].copy_from_slice(&b.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Stream owned by one client turn: mini-batch shuffling first, then any
/// per-sample attack noise, in sample order.
pub fn turn_stream(seed: u64, client: usize, round: usize, subround: usize) -> ChaCha8Rng {
    stream(
        seed,
        TAG_TURN,
        ((client as u64) << 32) | round as u64,
        subround as u64,
    )
}

/// Stream used by the per-round client partition.
pub fn partition_stream(seed: u64, round: usize) -> ChaCha8Rng {
    stream(seed, TAG_PARTITION, round as u64, 0)
}

/// Stream a parameter-swapping client uses to fabricate its handoff.
pub fn swap_stream(seed: u64, client: usize, round: usize) -> ChaCha8Rng {
    stream(seed, TAG_SWAP, ((client as u64) << 32) | round as u64, 0)
}
