//! Deterministic PRNG streams: xoshiro256** seeded per (run seed, tag, draw).
//!
//! Every randomized routine derives an independent stream from the triple
//! (run seed, metric tag, draw index), so results never depend on the order
//! in which draws are evaluated or on how work is split across threads.
//! The derivation is fully pinned for cross-implementation reproducibility:
//!
//! 1. `x = seed ^ fnv1a64(tag)`, then `x += draw * 0x9E3779B97F4A7C15`
//! 2. the four xoshiro256** state words are four successive SplitMix64
//!    outputs from `x`
//!
//! Gaussians come from Box-Muller over the stream (not ziggurat), again so
//! that any implementation of this scheme reproduces the same values.

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 step: advances `state` and returns the next output.
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(GOLDEN_GAMMA);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// FNV-1a over the tag bytes; folds the tag into the stream seed.
fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xCBF2_9CE4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01B3);
    }
    hash
}

/// xoshiro256** generator.
#[derive(Debug, Clone)]
pub struct Rng {
    s: [u64; 4],
    spare_gaussian: Option<f64>,
}

impl Rng {
    /// Stream for a (run seed, tag, draw index) triple. See module docs for
    /// the exact derivation.
    pub fn stream(seed: u64, tag: &str, draw: u64) -> Self {
        let mut x = (seed ^ fnv1a64(tag.as_bytes())).wrapping_add(draw.wrapping_mul(GOLDEN_GAMMA));
        let mut s = [0u64; 4];
        for w in &mut s {
            *w = splitmix64(&mut x);
        }
        if s == [0; 4] {
            s[0] = GOLDEN_GAMMA; // xoshiro state must not be all zero
        }
        Rng {
            s,
            spare_gaussian: None,
        }
    }

    #[cfg(test)]
    fn from_state(s: [u64; 4]) -> Self {
        Rng {
            s,
            spare_gaussian: None,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        let result = self.s[1].wrapping_mul(5).rotate_left(7).wrapping_mul(9);
        let t = self.s[1] << 17;
        self.s[2] ^= self.s[0];
        self.s[3] ^= self.s[1];
        self.s[1] ^= self.s[2];
        self.s[0] ^= self.s[3];
        self.s[2] ^= t;
        self.s[3] = self.s[3].rotate_left(45);
        result
    }

    /// Uniform in [0, n). Plain modulo: the bias is below 2^-53 for every n
    /// used here and the mapping stays trivially portable.
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        (self.next_u64() % n as u64) as usize
    }

    /// Uniform f64 in [0, 1) with 53 random bits.
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal via Box-Muller; generates pairs and caches the spare.
    pub fn gaussian(&mut self) -> f64 {
        if let Some(z) = self.spare_gaussian.take() {
            return z;
        }
        let u1 = 1.0 - self.unit(); // in (0, 1], keeps ln defined
        let u2 = self.unit();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare_gaussian = Some(r * theta.sin());
        r * theta.cos()
    }

    /// Fisher-Yates shuffle of `items`.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}
