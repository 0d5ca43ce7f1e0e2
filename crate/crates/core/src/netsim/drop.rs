use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Seeded Bernoulli stream deciding, per message, whether it is delivered.
#[derive(Clone, Debug)]
pub struct DropFilter {
    p: f64,
    rng: ChaCha8Rng,
}

impl DropFilter {
    /// Each message is dropped independently with probability `p ∈ [0, 1)`.
    pub fn new(p: f64, seed: u64) -> Result<Self> {
        if !(0.0..1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!(
                "drop probability must be in [0, 1), got {p}"
            )));
        }
        Ok(Self {
            p,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn probability(&self) -> f64 {
        self.p
    }

    /// `true` when the next message gets through.
    pub fn keep(&mut self) -> bool {
        if self.p == 0.0 {
            return true;
        }
        !self.rng.gen_bool(self.p)
    }
}

impl Iterator for DropFilter {
    type Item = bool;

    fn next(&mut self) -> Option<bool> {
        Some(self.keep())
    }
}
