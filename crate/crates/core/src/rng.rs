//! Seeded random streams.
//!
//! Every realization owns one base seed. Each consumer (instance generation,
//! target sampling, noise, switching, ...) reads from its own ChaCha stream
//! keyed by that seed, so changing how many draws one consumer makes never
//! shifts another consumer's sequence.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Stream {
    Instance = 0,
    Targets = 1,
    InitialGames = 2,
    Noise = 3,
    Switching = 4,
    Probe = 5,
}

pub fn stream(seed: u64, which: Stream) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which as u64);
    rng
}
