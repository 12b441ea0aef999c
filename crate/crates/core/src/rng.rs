//! Counter-based deterministic random numbers and Poisson sampling.
//!
//! Every draw is a pure function of `(key, counter)`: the key mixes a seed
//! and a stream index, the counter advances per draw. Output is identical on
//! every platform; nothing here is suitable for secrets.

use libm::{exp, floor, fabs, lgamma, log, sqrt};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive the key of `stream` under `seed`.
pub fn stream_key(seed: u64, stream: u64) -> u64 {
    mix64(mix64(seed ^ GOLDEN).wrapping_add(stream.wrapping_mul(GOLDEN)))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CounterRng {
    key: u64,
    counter: u64,
}

impl CounterRng {
    pub fn new(key: u64) -> Self {
        Self { key, counter: 0 }
    }

    pub fn for_stream(seed: u64, stream: u64) -> Self {
        Self::new(stream_key(seed, stream))
    }

    pub fn key(&self) -> u64 {
        self.key
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let out = mix64(self.key.wrapping_add(self.counter.wrapping_mul(GOLDEN)));
        self.counter = self.counter.wrapping_add(1);
        out
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Poisson variate with mean `mean`.
    ///
    /// Multiplication method below 10, transformed rejection (PTRS,
    /// Hörmann 1993) above.
    pub fn poisson(&mut self, mean: f64) -> u64 {
        if !(mean > 0.0) || !mean.is_finite() {
            return 0;
        }
        if mean < 10.0 {
            let limit = exp(-mean);
            let mut k = 0u64;
            let mut prod = self.next_f64();
            while prod > limit {
                k += 1;
                prod *= self.next_f64();
            }
            return k;
        }

        let log_mean = log(mean);
        let smu = sqrt(mean);
        let b = 0.931 + 2.53 * smu;
        let a = -0.059 + 0.02483 * b;
        let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
        let vr = 0.9277 - 3.6224 / (b - 2.0);
        loop {
            let u = self.next_f64() - 0.5;
            let v = self.next_f64();
            let us = 0.5 - fabs(u);
            let k = floor((2.0 * a / us + b) * u + mean + 0.43);
            if us >= 0.07 && v <= vr {
                return k as u64;
            }
            if k < 0.0 || (us < 0.013 && v > us) {
                continue;
            }
            let lhs = log(v) + log(inv_alpha) - log(a / (us * us) + b);
            let rhs = -mean + k * log_mean - lgamma(k + 1.0);
            if lhs <= rhs {
                return k as u64;
            }
        }
    }
}
