//! Bisection for the point where the square open *-crossing probability is one half.

use serde::{Deserialize, Serialize};

use super::{run_crossing_scan, Estimate, Horizon, DEFAULT_CROSSING_MARGIN};
use crate::error::{Error, Result};
use crate::lattice::{check_probability, BoundaryCondition, Site};
use crate::observables::RectSpec;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcStarParams {
    /// Side of the square rectangle.
    pub size: usize,
    pub trials: u64,
    /// Stop once the bracket is at most this wide.
    pub tol: f64,
    pub horizon: Horizon,
    pub master_seed: u64,
    pub lo: f64,
    pub hi: f64,
    pub margin: usize,
    pub boundary: BoundaryCondition,
    pub target: f64,
}

impl PcStarParams {
    pub fn new(size: usize, trials: u64, tol: f64, master_seed: u64) -> Self {
        PcStarParams {
            size,
            trials,
            tol,
            horizon: Horizon::INITIAL,
            master_seed,
            lo: 0.0,
            hi: 1.0,
            margin: DEFAULT_CROSSING_MARGIN,
            boundary: BoundaryCondition::Periodic,
            target: 0.5,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub p: f64,
    pub crossing: Estimate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
    /// Midpoint of the final bracket.
    pub estimate: f64,
    pub probes: Vec<Probe>,
}

impl Bracket {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn overlaps(&self, other: &Bracket) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }
}

/// Every probe reuses the same master seed, so the estimated crossing probability is a
/// nondecreasing function of `p` and the bisection is consistent.
pub fn find_pcstar(params: &PcStarParams) -> Result<Bracket> {
    check_probability(params.lo)?;
    check_probability(params.hi)?;
    if !(params.lo < params.hi) {
        return Err(Error::InvalidArgument(format!(
            "bracket must satisfy lo < hi, got [{}, {}]",
            params.lo, params.hi
        )));
    }
    if !(params.tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {}", params.tol)));
    }
    let rect = RectSpec::new(params.size, params.size, Site::new(0, 0))?;
    let probe = |p: f64| -> Result<Probe> {
        let pts = run_crossing_scan(
            p,
            &[rect],
            params.horizon,
            params.trials,
            params.master_seed,
            params.margin,
            params.boundary,
        )?;
        Ok(Probe {
            p,
            crossing: pts[0].crossing.evolved,
        })
    };
    let mut probes = vec![probe(params.lo)?, probe(params.hi)?];
    if probes[0].crossing.mean >= params.target || probes[1].crossing.mean < params.target {
        return Err(Error::InvalidArgument(format!(
            "[{}, {}] does not bracket crossing probability {} (got {} and {})",
            params.lo, params.hi, params.target, probes[0].crossing.mean, probes[1].crossing.mean
        )));
    }
    let (mut lo, mut hi) = (params.lo, params.hi);
    while hi - lo > params.tol {
        let mid = 0.5 * (lo + hi);
        let q = probe(mid)?;
        if q.crossing.mean < params.target {
            lo = mid;
        } else {
            hi = mid;
        }
        probes.push(q);
    }
    Ok(Bracket {
        lo,
        hi,
        estimate: 0.5 * (lo + hi),
        probes,
    })
}
