//! Counter-based 64-bit generator.
//!
//! Output `i` of a stream with key `k` is `mix64(k + (i + 1)·GOLDEN_GAMMA)`,
//! the SplitMix64 finaliser applied to a Weyl sequence. Because every output
//! is a pure function of `(key, i)`, streams can be reproduced in any language
//! from the three constants below, and independent substreams are derived
//! from `(seed, index)` without shared state.

use rand_core::RngCore;
use serde::Serialize;

/// Weyl increment, ⌊2⁶⁴/φ⌋ rounded to odd.
pub const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
/// First multiplier of the SplitMix64 finaliser.
pub const MIX1: u64 = 0xBF58_476D_1CE4_E5B9;
/// Second multiplier of the SplitMix64 finaliser.
pub const MIX2: u64 = 0x94D0_49BB_1331_11EB;

/// SplitMix64 finaliser.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(MIX1);
    z = (z ^ (z >> 27)).wrapping_mul(MIX2);
    z ^ (z >> 31)
}

/// Generator constants, serialised next to Monte Carlo output.
#[derive(Debug, Clone, Serialize)]
pub struct GeneratorInfo {
    pub name: &'static str,
    pub golden_gamma: String,
    pub mix1: String,
    pub mix2: String,
}

impl GeneratorInfo {
    pub fn current() -> Self {
        Self {
            name: "splitmix64-counter",
            golden_gamma: format!("{GOLDEN_GAMMA:#018x}"),
            mix1: format!("{MIX1:#018x}"),
            mix2: format!("{MIX2:#018x}"),
        }
    }
}

/// A counter-based stream.
#[derive(Debug, Clone)]
pub struct CounterRng {
    key: u64,
    counter: u64,
}

impl CounterRng {
    /// Stream keyed directly by `seed`.
    pub fn new(seed: u64) -> Self {
        Self { key: seed, counter: 0 }
    }

    /// Substream `index` of `seed`; distinct indices give unrelated streams.
    pub fn stream(seed: u64, index: u64) -> Self {
        let key = mix64(seed ^ mix64(index.wrapping_add(1).wrapping_mul(MIX2)));
        Self { key, counter: 0 }
    }

    /// Number of 64-bit outputs drawn so far.
    pub fn position(&self) -> u64 {
        self.counter
    }

    /// Uniform on the open interval (0, 1) with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }
}

impl RngCore for CounterRng {
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix64(self.key.wrapping_add(self.counter.wrapping_mul(GOLDEN_GAMMA)))
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        rand_core::impls::fill_bytes_via_next(self, dst)
    }
}
