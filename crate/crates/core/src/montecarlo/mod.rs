//! Seeded trial execution, estimators for every bounded or compared quantity, curve fits
//! and an exact-enumeration oracle for small windows.
//!
//! Trial `i` of a run draws its configuration from `rng::trial_seed(master_seed, i)`, and
//! every accumulator is integer-valued, so outputs are bit-identical for any thread count.

mod enumerate;
mod estimate;
mod exponents;
mod fit;
mod pcstar;
mod runs;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{check_probability, BoundaryCondition};
use crate::rng;

pub use enumerate::{enumerate_distribution, exact_enumeration, ExactDistribution, Traversal, MAX_ENUMERATION_SITES};
pub use estimate::{Estimate, IntMoments, PairCounts};
pub use exponents::{
    beta_protocol, eta_protocol, gamma_protocol, nu_protocol, ExponentKind, ExponentSide, PairedExponent,
    ProtocolParams,
};
pub use fit::{fit_log_linear, fit_log_log, ExponentFit, FitWindow};
pub use pcstar::{find_pcstar, Bracket, PcStarParams, Probe};
pub use runs::*;

/// Critical density of independent *-percolation on Z^2, `1 - p_c(site)`.
///
/// Reproducible in-repo: `bootperc find-pcstar --L 256 --trials 10000` brackets the point
/// where the square open *-crossing probability at time 0 crosses 1/2.
pub const PC_STAR: f64 = 0.4073;

/// Evolution time at which observables are read.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Horizon {
    Steps(u32),
    FixedPoint,
}

impl Horizon {
    pub const INITIAL: Horizon = Horizon::Steps(0);

    /// Step budget for `dynamics::run`, `None` meaning run to the fixed point.
    #[inline]
    pub fn steps(self) -> Option<u32> {
        match self {
            Horizon::Steps(n) => Some(n),
            Horizon::FixedPoint => None,
        }
    }

    pub fn is_initial(self) -> bool {
        self == Horizon::Steps(0)
    }
}

impl fmt::Display for Horizon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Horizon::Steps(n) => write!(f, "{n}"),
            Horizon::FixedPoint => f.write_str("fixed-point"),
        }
    }
}

impl FromStr for Horizon {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed-point" | "inf" | "fp" => Ok(Horizon::FixedPoint),
            n => n
                .parse::<u32>()
                .map(Horizon::Steps)
                .map_err(|_| Error::Parse(format!("horizon must be a step count or `fixed-point`, got `{n}`"))),
        }
    }
}

/// Common parameters of a Monte Carlo run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub p: f64,
    pub width: usize,
    pub height: usize,
    pub boundary: BoundaryCondition,
    pub horizon: Horizon,
    pub trials: u64,
    pub master_seed: u64,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        check_probability(self.p)?;
        if self.width == 0 || self.height == 0 {
            return Err(Error::ZeroDimension {
                width: self.width,
                height: self.height,
            });
        }
        if self.trials == 0 {
            return Err(Error::NoTrials);
        }
        Ok(())
    }

    pub fn with_p(&self, p: f64) -> Self {
        ExperimentSpec { p, ..self.clone() }
    }

    pub fn with_seed(&self, master_seed: u64) -> Self {
        ExperimentSpec {
            master_seed,
            ..self.clone()
        }
    }
}

/// Runs `trials` independent trials in parallel and merges their accumulators.
/// `body(seed, acc)` sees the counter-derived seed of its trial.
pub(crate) fn run_trials<A, F, M>(trials: u64, master_seed: u64, body: F, merge: M) -> A
where
    A: Default + Send,
    F: Fn(u64, &mut A) + Sync,
    M: Fn(A, A) -> A + Sync + Send,
{
    (0..trials)
        .into_par_iter()
        .fold(A::default, |mut acc, i| {
            body(rng::trial_seed(master_seed, i), &mut acc);
            acc
        })
        .reduce(A::default, &merge)
}
