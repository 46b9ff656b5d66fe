//! Counter-style randomness.
//!
//! Every random bit used by the crate is a pure function of a seed and a
//! counter (site coordinates or trial index), so results do not depend on
//! traversal order or on how work is split across threads.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output function.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `index` under `master`.
///
/// `mix64(mix64(master + GOLDEN) ^ (index * GOLDEN'))`: two rounds keep
/// neighboring masters and neighboring indices decorrelated.
#[inline]
pub fn trial_seed(master: u64, index: u64) -> u64 {
    let m = mix64(master.wrapping_add(GOLDEN));
    mix64(m ^ index.wrapping_add(1).wrapping_mul(0xD1B5_4A32_D192_ED03))
}

/// Uniform in [0, 1) attached to the site `(x, y)` under `seed`.
#[inline]
pub fn site_uniform(seed: u64, x: i32, y: i32) -> f64 {
    SiteField::new(seed).uniform(x, y)
}

/// [`site_uniform`] with the per-seed hash computed once.
#[derive(Clone, Copy, Debug)]
pub struct SiteField {
    key: u64,
}

impl SiteField {
    #[inline]
    pub fn new(seed: u64) -> Self {
        SiteField { key: mix64(seed ^ GOLDEN) }
    }

    #[inline]
    pub fn uniform(self, x: i32, y: i32) -> f64 {
        let site = ((x as u32 as u64) << 32) | (y as u32 as u64);
        let h = mix64(self.key ^ site.wrapping_mul(GOLDEN));
        (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    #[inline]
    pub fn bernoulli(self, x: i32, y: i32, p: f64) -> bool {
        self.uniform(x, y) < p
    }
}

/// Bernoulli(p) draw attached to a site. `p = 0` never fires, `p = 1` always does.
#[inline]
pub fn site_bernoulli(seed: u64, x: i32, y: i32, p: f64) -> bool {
    site_uniform(seed, x, y) < p
}

/// Derives an independent sub-seed, e.g. one per run label.
#[inline]
pub fn derive(seed: u64, salt: u64) -> u64 {
    mix64(seed ^ mix64(salt.wrapping_add(GOLDEN)))
}
