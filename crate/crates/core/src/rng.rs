//! Counter-based random streams.
//!
//! Every random value is a pure function of a key (seed, epoch, batch,
//! stream) plus a (row, column) counter, so any slice of a generated batch
//! can be recomputed in isolation and in any order.

#[inline]
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream identifiers. Distinct ids give statistically independent values
/// for the same key and counter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum StreamId {
    Params = 1,
    PerturbA = 2,
    PerturbB = 3,
    Noise = 4,
    Fx = 5,
    Encoder = 6,
    Mix = 7,
}

/// Addresses one batch of generated data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct BatchKey {
    pub seed: u64,
    pub epoch: u64,
    pub batch: u64,
}

impl BatchKey {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            epoch: 0,
            batch: 0,
        }
    }

    pub fn at(seed: u64, epoch: u64, batch: u64) -> Self {
        Self { seed, epoch, batch }
    }

    pub fn stream(&self, id: StreamId) -> CounterRng {
        let mut h = splitmix64(self.seed ^ 0xD1B5_4A32_D192_ED03);
        h = splitmix64(h ^ self.epoch);
        h = splitmix64(h ^ self.batch.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        h = splitmix64(h ^ (id as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F));
        CounterRng { key: h }
    }
}

/// Stateless generator: `u64_at(row, col)` is a fixed function of the key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CounterRng {
    key: u64,
}

impl CounterRng {
    pub fn from_key(key: u64) -> Self {
        Self {
            key: splitmix64(key),
        }
    }

    /// Child generator for a sub-domain (e.g. a module slot inside a row).
    pub fn child(&self, salt: u64) -> Self {
        Self {
            key: splitmix64(self.key ^ splitmix64(salt.wrapping_add(0x632B_E59B_D9B4_E019))),
        }
    }

    #[inline]
    pub fn u64_at(&self, row: u64, col: u64) -> u64 {
        let r = splitmix64(self.key ^ row.wrapping_mul(0xA24B_AED4_963E_E407));
        splitmix64(r ^ col.wrapping_mul(0x9FB2_1C65_1E98_DF25))
    }

    /// Uniform in [0, 1) with 53 bits of precision.
    #[inline]
    pub fn uniform_at(&self, row: u64, col: u64) -> f64 {
        (self.u64_at(row, col) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in (0, 1], safe for logarithms.
    #[inline]
    fn open_uniform_at(&self, row: u64, col: u64) -> f64 {
        ((self.u64_at(row, col) >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal via Box-Muller on two counter slots.
    #[inline]
    pub fn normal_at(&self, row: u64, col: u64) -> f64 {
        let u1 = self.open_uniform_at(row, col.wrapping_mul(2));
        let u2 = self.uniform_at(row, col.wrapping_mul(2).wrapping_add(1));
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Uniform in [lo, hi).
    #[inline]
    pub fn range_at(&self, row: u64, col: u64, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform_at(row, col)
    }

    /// Uniform integer in [0, n).
    #[inline]
    pub fn index_at(&self, row: u64, col: u64, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.uniform_at(row, col) * n as f64) as usize).min(n - 1)
    }
}
