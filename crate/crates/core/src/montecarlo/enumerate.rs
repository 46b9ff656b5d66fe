//! Brute-force expectations over every configuration of a small window.

use rayon::prelude::*;

use super::Horizon;
use crate::dynamics::{run, Rule};
use crate::error::{Error, Result};
use crate::lattice::{check_probability, BoundaryCondition, Configuration};

pub const MAX_ENUMERATION_SITES: usize = 25;
const CHUNK_BITS: u32 = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Traversal {
    Ascending,
    Descending,
}

/// Observable sums grouped by number of open sites: `sums[k]` is the sum of the observable
/// over all configurations with exactly `k` open sites. Evaluating at any `p` is then a
/// polynomial in `p`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactDistribution {
    pub sites: usize,
    pub sums: Vec<f64>,
}

impl ExactDistribution {
    /// `sum_k sums[k] p^k (1 - p)^(N - k)`, accumulated in increasing `k`.
    pub fn evaluate(&self, p: f64) -> f64 {
        let q = 1.0 - p;
        let mut total = 0.0;
        for (k, &s) in self.sums.iter().enumerate() {
            if s != 0.0 {
                total += s * p.powi(k as i32) * q.powi((self.sites - k) as i32);
            }
        }
        total
    }
}

/// Runs `observable` on the evolved state of every one of the `2^(W*H)` configurations.
pub fn enumerate_distribution<F>(
    width: usize,
    height: usize,
    boundary: BoundaryCondition,
    horizon: Horizon,
    traversal: Traversal,
    observable: F,
) -> Result<ExactDistribution>
where
    F: Fn(&Configuration) -> f64 + Sync,
{
    let sites = width * height;
    if width == 0 || height == 0 {
        return Err(Error::ZeroDimension { width, height });
    }
    if sites > MAX_ENUMERATION_SITES {
        return Err(Error::WindowTooSmall(format!(
            "exact enumeration supports at most {MAX_ENUMERATION_SITES} sites, got {sites}"
        )));
    }
    let total: u64 = 1 << sites;
    let chunk = 1u64 << CHUNK_BITS.min(sites as u32);
    let chunks = total / chunk;
    let chunk_sums = |c: u64| -> Vec<f64> {
        let mut sums = vec![0.0; sites + 1];
        let masks: Box<dyn Iterator<Item = u64>> = match traversal {
            Traversal::Ascending => Box::new(c * chunk..(c + 1) * chunk),
            Traversal::Descending => Box::new((c * chunk..(c + 1) * chunk).rev()),
        };
        for mask in masks {
            let config = Configuration::from_bits(width, height, boundary, mask).expect("validated dims");
            let evolved = run(&config, Rule::BOOTSTRAP, horizon.steps()).final_config;
            sums[mask.count_ones() as usize] += observable(&evolved);
        }
        sums
    };
    let order: Vec<u64> = match traversal {
        Traversal::Ascending => (0..chunks).collect(),
        Traversal::Descending => (0..chunks).rev().collect(),
    };
    let partial: Vec<Vec<f64>> = order.par_iter().map(|&c| chunk_sums(c)).collect();
    let mut sums = vec![0.0; sites + 1];
    for part in partial {
        for (s, v) in sums.iter_mut().zip(part) {
            *s += v;
        }
    }
    Ok(ExactDistribution { sites, sums })
}

/// `E_p[observable(evolve(omega, n))]` over the window, by enumeration.
pub fn exact_enumeration<F>(
    width: usize,
    height: usize,
    boundary: BoundaryCondition,
    p: f64,
    horizon: Horizon,
    observable: F,
) -> Result<f64>
where
    F: Fn(&Configuration) -> f64 + Sync,
{
    check_probability(p)?;
    Ok(enumerate_distribution(width, height, boundary, horizon, Traversal::Ascending, observable)?.evaluate(p))
}
