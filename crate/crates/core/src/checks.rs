//! Structural property suite: compares the dynamics against the independent structural
//! predictions of `structure` and reports every disagreement with a witness.

use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{fixed_point_with_rule, FlipTime, Rule};
use crate::error::Result;
use crate::lattice::{check_probability, sample_configuration, BoundaryCondition, Configuration, Site};
use crate::rng;
use crate::structure::{
    closed_loop_sites, closed_two_core, origin_flip_time_oracle, origin_flip_time_oracle_in_window,
    predict_stable, protected_sites,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    /// Fixed-point closed set or flip round differs from closed 2-core pruning.
    TwoCore,
    ProtectedFlipped,
    PredictUnsound,
    /// A site on a closed loop opened.
    LoopUnstable,
    OracleMismatch,
}

impl ViolationKind {
    pub const ALL: [ViolationKind; 5] = [
        ViolationKind::TwoCore,
        ViolationKind::ProtectedFlipped,
        ViolationKind::PredictUnsound,
        ViolationKind::LoopUnstable,
        ViolationKind::OracleMismatch,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ViolationKind::TwoCore => "two-core",
            ViolationKind::ProtectedFlipped => "protected-flipped",
            ViolationKind::PredictUnsound => "predict-unsound",
            ViolationKind::LoopUnstable => "loop-unstable",
            ViolationKind::OracleMismatch => "oracle-mismatch",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub site: Site,
    pub detail: String,
    pub witness: Configuration,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} at {}: {}", self.kind.as_str(), self.site, self.detail)?;
        write!(f, "{}", self.witness.to_text())
    }
}

/// Which sites the flip-time oracle is compared on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OracleMode {
    Off,
    /// Every closed site, with the window and its halo taken as the whole lattice.
    AllSitesInWindow,
    /// The window center only, skipping instances whose branches reach the rim.
    Center,
}

/// Outcome of checking one configuration.
#[derive(Clone, Debug, Default)]
pub struct CheckReport {
    pub violations: Vec<Violation>,
    pub oracle_checked: u64,
    pub oracle_truncated: u64,
}

pub fn check_configuration(config: &Configuration, rule: Rule, oracle: OracleMode) -> CheckReport {
    let g = *config.geometry();
    let r = fixed_point_with_rule(config, rule);
    let fin = &r.final_config;
    let mut report = CheckReport::default();
    let mut flag = |kind, site, detail: String| {
        report.violations.push(Violation {
            kind,
            site,
            detail,
            witness: config.clone(),
        })
    };

    let core = closed_two_core(config);
    for i in 0..g.len() {
        let s = g.site(i);
        match (r.flip_times.at_index(i), core[i]) {
            (FlipTime::InitiallyOpen, _) | (FlipTime::Never, None) => {}
            (FlipTime::At(t), Some(k)) if t == k => {}
            (actual, pruned) => flag(
                ViolationKind::TwoCore,
                s,
                format!(
                    "dynamics gives {actual}, pruning gives {}",
                    pruned.map_or("never".to_string(), |r| r.to_string())
                ),
            ),
        }
    }
    let checks = [
        (ViolationKind::ProtectedFlipped, protected_sites(config)),
        (ViolationKind::PredictUnsound, predict_stable(config)),
        (ViolationKind::LoopUnstable, closed_loop_sites(config)),
    ];
    for (kind, set) in checks {
        for s in set.iter().filter(|&s| fin.is_open(s)) {
            flag(kind, s, format!("opened at {}", r.flip_times.get(s)));
        }
    }

    let mut compare = |s: Site, predicted: FlipTime| {
        let actual = r.flip_times.get(s);
        if predicted != actual {
            flag(
                ViolationKind::OracleMismatch,
                s,
                format!("oracle {predicted}, dynamics {actual}"),
            );
        }
    };
    let (mut checked, mut truncated) = (0, 0);
    match oracle {
        OracleMode::Off => {}
        OracleMode::AllSitesInWindow => {
            for s in g.sites().filter(|&s| !config.is_open(s)) {
                compare(s, origin_flip_time_oracle_in_window(config, s).expect("site in window"));
                checked += 1;
            }
        }
        OracleMode::Center => {
            let o = g.center();
            if !config.is_open(o) {
                match origin_flip_time_oracle(config, o) {
                    Ok(t) => {
                        compare(o, t);
                        checked += 1;
                    }
                    Err(_) => truncated += 1,
                }
            }
        }
    }
    report.oracle_checked = checked;
    report.oracle_truncated = truncated;
    report
}

/// Summary of a corpus run.
#[derive(Clone, Debug, Default)]
pub struct SuiteReport {
    pub configurations: u64,
    pub oracle_checked: u64,
    pub oracle_truncated: u64,
    pub violations: Vec<Violation>,
}

impl SuiteReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn count(&self, kind: ViolationKind) -> usize {
        self.violations.iter().filter(|v| v.kind == kind).count()
    }

    fn absorb(mut self, r: CheckReport) -> Self {
        self.configurations += 1;
        self.oracle_checked += r.oracle_checked;
        self.oracle_truncated += r.oracle_truncated;
        self.violations.extend(r.violations);
        self
    }

    fn merge(mut self, o: SuiteReport) -> Self {
        self.configurations += o.configurations;
        self.oracle_checked += o.oracle_checked;
        self.oracle_truncated += o.oracle_truncated;
        self.violations.extend(o.violations);
        self
    }
}

/// Every configuration of a `width x height` window (at most 25 sites) under `boundary`,
/// with the oracle compared at every closed site.
pub fn check_exhaustive(width: usize, height: usize, boundary: BoundaryCondition, rule: Rule) -> Result<SuiteReport> {
    let sites = width * height;
    if sites > crate::montecarlo::MAX_ENUMERATION_SITES {
        return Err(crate::Error::WindowTooSmall(format!(
            "exhaustive checks support at most {} sites, got {sites}",
            crate::montecarlo::MAX_ENUMERATION_SITES
        )));
    }
    Configuration::from_bits(width, height, boundary, 0)?;
    let mut report = (0..1u64 << sites)
        .into_par_iter()
        .fold(SuiteReport::default, |acc, mask| {
            let c = Configuration::from_bits(width, height, boundary, mask).expect("validated dims");
            acc.absorb(check_configuration(&c, rule, OracleMode::AllSitesInWindow))
        })
        .reduce(SuiteReport::default, SuiteReport::merge);
    sort_violations(&mut report);
    Ok(report)
}

/// `count` random windows per `p`, drawn from `derive(seed, k)`-based trial seeds, with the
/// oracle compared at the center.
pub fn check_random(
    count: u64,
    width: usize,
    height: usize,
    boundary: BoundaryCondition,
    p_values: &[f64],
    seed: u64,
    rule: Rule,
) -> Result<SuiteReport> {
    p_values.iter().try_for_each(|&p| check_probability(p))?;
    crate::lattice::Geometry::new(width, height, boundary)?;
    let mut report = SuiteReport::default();
    for (k, &p) in p_values.iter().enumerate() {
        let master = rng::derive(seed, k as u64);
        let part = (0..count)
            .into_par_iter()
            .fold(SuiteReport::default, |acc, i| {
                let c = sample_configuration(p, width, height, boundary, rng::trial_seed(master, i))
                    .expect("validated");
                acc.absorb(check_configuration(&c, rule, OracleMode::Center))
            })
            .reduce(SuiteReport::default, SuiteReport::merge);
        report = report.merge(part);
    }
    sort_violations(&mut report);
    Ok(report)
}

/// Deterministic witness order regardless of scheduling.
fn sort_violations(r: &mut SuiteReport) {
    r.violations.sort_by(|a, b| {
        (a.witness.to_text(), a.site.y, a.site.x, a.kind as u8).cmp(&(b.witness.to_text(), b.site.y, b.site.x, b.kind as u8))
    });
}
