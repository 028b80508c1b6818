//! Reproducible Gaussian streams.
//!
//! The uniform source is counter-based: the i-th 64-bit word of a stream with
//! key `K` is `splitmix64_finalize(K + (i + 1)·0x9E3779B97F4A7C15)` (wrapping),
//! which is exactly the SplitMix64 sequence seeded with `K`. Uniforms use the
//! top 53 bits, shifted by half an ulp into the open interval (0, 1).
//! Normals come from Box–Muller in pairs: uniforms (2j, 2j+1) give normals
//! (2j, 2j+1) as (r·cos θ, r·sin θ) with r = √(−2 ln u₁), θ = 2π u₂.
//! Transcendentals go through `libm` so the stream does not depend on the
//! platform math library.
//!
//! Sub-seeds are derived with [`Seed::child`]:
//! `child(s, i) = splitmix64_finalize(s ^ splitmix64_finalize(i + 0x9E3779B97F4A7C15))`.

use serde::{Deserialize, Serialize};

pub const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output function (Stafford variant 13).
#[inline]
pub fn splitmix64_finalize(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// 64-bit reproducibility token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Seed(pub u64);

impl Seed {
    /// Independent sub-seed for `index` (trial number, stream role, ...).
    pub fn child(self, index: u64) -> Seed {
        Seed(splitmix64_finalize(
            self.0 ^ splitmix64_finalize(index.wrapping_add(GOLDEN_GAMMA)),
        ))
    }

    pub fn normals(self) -> NormalStream {
        NormalStream::new(self)
    }
}

impl From<u64> for Seed {
    fn from(v: u64) -> Self {
        Seed(v)
    }
}

#[derive(Debug, Clone)]
pub struct NormalStream {
    key: u64,
    counter: u64,
    spare: Option<f64>,
}

impl NormalStream {
    pub fn new(seed: Seed) -> Self {
        Self { key: seed.0, counter: 0, spare: None }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        splitmix64_finalize(self.key.wrapping_add(self.counter.wrapping_mul(GOLDEN_GAMMA)))
    }

    /// Uniform in the open interval (0, 1).
    #[inline]
    pub fn next_uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    pub fn next_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = self.next_uniform();
        let u2 = self.next_uniform();
        let r = libm::sqrt(-2.0 * libm::log(u1));
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(r * libm::sin(theta));
        r * libm::cos(theta)
    }

    pub fn fill(&mut self, out: &mut [f64]) {
        for x in out {
            *x = self.next_normal();
        }
    }

    pub fn take_vec(&mut self, len: usize) -> Vec<f64> {
        (0..len).map(|_| self.next_normal()).collect()
    }
}
