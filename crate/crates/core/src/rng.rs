//! Seeded, splittable random streams.
//!
//! Every realization owns four ChaCha8 streams, one per role. A stream is
//! identified by `(seed, realization, role)`, so realization `j` depends only on
//! the seed and `j`, whatever order or thread it is generated on. Within a
//! stream, spectral terms consume draws in term order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Seed used when none is configured.
pub const DEFAULT_SEED: u64 = 20_211_104;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamRole {
    Degree = 0,
    Order = 1,
    XiWhite = 2,
    EtaWhite = 3,
}

const ROLES: u64 = 4;

/// The generator for one `(seed, realization, role)` triple.
pub fn stream(seed: u64, realization: u64, role: StreamRole) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(realization.wrapping_mul(ROLES) + role as u64);
    rng
}
