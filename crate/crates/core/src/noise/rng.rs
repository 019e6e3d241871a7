//! Counter-based random streams keyed by (seed, realization, purpose, stream).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::scalar::Real;

/// Separates the key space of independent consumers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Gpam = 1,
    SineGordon = 2,
    Wiener = 3,
    Paths = 4,
    Sampling = 5,
    Basepoints = 6,
}

/// Independent generator for one (seed, realization, purpose, stream) key.
pub fn stream(seed: u64, realization: u64, purpose: Purpose, stream_id: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&realization.to_le_bytes());
    key[16..24].copy_from_slice(&(purpose as u64).to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(stream_id);
    rng
}

#[inline]
fn zigzag(v: i64) -> u64 {
    ((v << 1) ^ (v >> 63)) as u64
}

/// Lattice-independent stream id of a wavevector, so that coarser lattices
/// see the same coefficients as finer ones on shared modes.
#[inline]
pub fn mode_key(k: [i64; 2]) -> u64 {
    (zigzag(k[0]) << 32) | (zigzag(k[1]) & 0xffff_ffff)
}

#[inline]
pub fn normal<T: Real>(rng: &mut ChaCha8Rng) -> T {
    let g: f64 = StandardNormal.sample(rng);
    T::lit(g)
}

/// True for the representative of each ±k pair (the zero mode included).
#[inline]
pub fn is_canonical(k: [i64; 2]) -> bool {
    k[0] > 0 || (k[0] == 0 && k[1] >= 0)
}
