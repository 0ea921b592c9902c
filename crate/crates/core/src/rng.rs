//! Counter-based random streams.
//!
//! Every random quantity in the crate is drawn from a ChaCha8 stream keyed by
//! `(seed, purpose)` and selected by a 64-bit counter (a permutation index, a
//! repetition index, ...). Work items can therefore run in any order on any
//! number of threads and still see exactly the same numbers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// What a stream is used for. Distinct purposes never share a key.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    KtstPermutation = 1,
    CbtRepetition = 2,
    CbtPermutation = 3,
    Folds = 4,
    StarGraphs = 5,
    Prototypes = 6,
    SimulationRepetition = 7,
}

/// Opens the stream `index` for `(seed, purpose)`.
pub fn stream(seed: u64, purpose: Purpose, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(purpose as u64).to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

/// Derives a child seed, e.g. the seed handed to one simulation repetition.
pub fn child_seed(seed: u64, purpose: Purpose, index: u64) -> u64 {
    stream(seed, purpose, index).gen()
}

/// Uniform on the open interval (0, 1): 53 random mantissa bits, offset by half a step.
pub fn open_unit(rng: &mut impl Rng) -> f64 {
    ((rng.gen::<u64>() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal variates by the Box–Muller transform.
///
/// Each pair of open-unit uniforms `(u1, u2)` yields
/// `sqrt(-2 ln u1) * cos(2π u2)` followed by `sqrt(-2 ln u1) * sin(2π u2)`.
pub struct BoxMuller<R> {
    rng: R,
    spare: Option<f64>,
}

impl<R: Rng> BoxMuller<R> {
    pub fn new(rng: R) -> Self {
        Self { rng, spare: None }
    }

    pub fn next_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = open_unit(&mut self.rng);
        let u2 = open_unit(&mut self.rng);
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
        self.spare = Some(r * s);
        r * c
    }
}
