//! Counter-based random substreams.
//!
//! Every random draw in a simulation comes from a ChaCha stream selected by
//! `(master seed, frame index, domain)`, so results never depend on which
//! worker processed which frame.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a substream is used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Channel = 0,
    Noise = 1,
    Data = 2,
    Interleaver = 3,
}

const DOMAINS: u64 = 4;

/// Returns the generator for one `(frame, domain)` substream of `master_seed`.
pub fn substream(master_seed: u64, frame: u64, domain: Domain) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(frame.wrapping_mul(DOMAINS).wrapping_add(domain as u64));
    rng
}
