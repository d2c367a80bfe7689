//! Seeded Gaussian stream.
//!
//! The generator is fixed so that a seed reproduces the same draws on every
//! platform and every run:
//!
//! * uniform source: ChaCha8 (`rand_chacha::ChaCha8Rng::seed_from_u64(seed)`),
//!   one `u64` per uniform, top 53 bits mapped to `(0, 1]`;
//! * normal deviates: Box–Muller, both outputs of a pair are used
//!   (cosine branch first, sine branch second).

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct GaussianStream {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl GaussianStream {
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed), spare: None }
    }

    /// Uniform draw on `(0, 1]`, never zero so `ln` is safe.
    pub fn uniform(&mut self) -> f64 {
        let bits = self.rng.next_u64() >> 11;
        (bits + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal draw.
    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = self.uniform();
        let u2 = self.uniform();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(radius * angle.sin());
        radius * angle.cos()
    }

    pub fn normal(&mut self, sigma: f64) -> f64 {
        sigma * self.standard_normal()
    }
}
