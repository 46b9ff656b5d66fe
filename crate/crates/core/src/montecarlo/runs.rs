//! Monte Carlo estimators. Each run samples trial `i` from `trial_seed(master_seed, i)`; the
//! time-0 value and the value at the requested horizon are read off the same sample, so the
//! monotone coupling can be checked on every trial.

use std::collections::{HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::{run_trials, Estimate, ExperimentSpec, Horizon, IntMoments, PairCounts};
use crate::dynamics::{determined_by_window, evolve_to, fixed_point, light_cone_radius, run, FlipTime, Rule};
use crate::error::{Error, Result};
use crate::lattice::{check_probability, euclidean_distance, sample_configuration, Adjacency, BoundaryCondition, Configuration, Site};
use crate::observables::{cluster_size_at, connected_to_ring, open_star_crossing_vertical, RectSpec};
use crate::rng;

/// Time-0 and horizon-`n` estimates of one observable measured on the same trials.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coupled {
    pub baseline: Estimate,
    pub evolved: Estimate,
    /// Per-trial difference `evolved - baseline`, negative parts clipped to 0 (they are
    /// counted in `coupling_violations` instead).
    pub difference: Estimate,
    /// Trials where the time-0 value exceeded the evolved one.
    pub coupling_violations: u64,
}

#[derive(Clone, Copy, Debug, Default)]
struct CoupledAcc {
    base: IntMoments,
    top: IntMoments,
    diff: IntMoments,
    violations: u64,
}

impl CoupledAcc {
    #[inline]
    fn push(&mut self, base: u64, top: u64) {
        self.base.push(base);
        self.top.push(top);
        self.diff.push(top.saturating_sub(base));
        self.violations += (base > top) as u64;
    }

    fn merge(self, o: CoupledAcc) -> CoupledAcc {
        CoupledAcc {
            base: self.base.merge(o.base),
            top: self.top.merge(o.top),
            diff: self.diff.merge(o.diff),
            violations: self.violations + o.violations,
        }
    }

    fn finish(&self) -> Coupled {
        Coupled {
            baseline: self.base.estimate(),
            evolved: self.top.estimate(),
            difference: self.diff.estimate(),
            coupling_violations: self.violations,
        }
    }
}

/// Elementwise merge of per-point accumulators; an empty side is the identity.
fn merge_vec<T: Copy>(a: Vec<T>, b: Vec<T>, f: impl Fn(T, T) -> T) -> Vec<T> {
    if a.is_empty() {
        return b;
    }
    if b.is_empty() {
        return a;
    }
    a.into_iter().zip(b).map(|(x, y)| f(x, y)).collect()
}

fn sample(spec: &ExperimentSpec, seed: u64) -> Configuration {
    sample_configuration(spec.p, spec.width, spec.height, spec.boundary, seed).expect("validated spec")
}

/// Largest `r` such that the L-infinity ball of radius `r` around `site` stays in the window.
fn inner_radius(width: usize, height: usize, site: Site) -> usize {
    let r = site.x.min(site.y).min(width as i32 - 1 - site.x).min(height as i32 - 1 - site.y);
    r.max(0) as usize
}

fn probabilities(ps: &[f64]) -> Result<()> {
    ps.iter().try_for_each(|&p| check_probability(p))
}

// ---------------------------------------------------------------- flip-time decay

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PiPoint {
    pub n: u32,
    /// `P(n < T < infinity)` for the flip time `T` of the origin.
    pub pi: Estimate,
    /// `P(T > n)` counting never-flipping sites too.
    pub pi_including_never: Estimate,
}

#[derive(Default)]
struct PiAcc {
    // flips at t > 0, indexed min(t, n_max + 1)
    flips: Vec<u64>,
    never: u64,
}

/// Flip-time tail of the window center. The window must reach `light_cone_radius(n_max) + 1`
/// around the center in every direction.
pub fn run_pi_curve(spec: &ExperimentSpec, n_max: u32) -> Result<Vec<PiPoint>> {
    spec.validate()?;
    let center = crate::lattice::Geometry::new(spec.width, spec.height, spec.boundary)?.center();
    let need = light_cone_radius(n_max) as usize + 1;
    let have = inner_radius(spec.width, spec.height, center);
    if have < need {
        return Err(Error::WindowTooSmall(format!(
            "flip times up to {n_max} need radius {need} around the origin, the {}x{} window has {have}",
            spec.width, spec.height
        )));
    }
    let slots = n_max as usize + 2;
    let acc = run_trials(
        spec.trials,
        spec.master_seed,
        |seed, acc: &mut PiAcc| {
            if acc.flips.is_empty() {
                acc.flips = vec![0; slots];
            }
            let c = sample(spec, seed);
            if c.is_open(center) {
                return;
            }
            match run(&c, Rule::BOOTSTRAP, None).flip_times.get(center) {
                FlipTime::At(t) => acc.flips[(t as usize).min(slots - 1)] += 1,
                FlipTime::Never => acc.never += 1,
                FlipTime::InitiallyOpen => unreachable!(),
            }
        },
        |a, b| PiAcc {
            flips: merge_vec(a.flips, b.flips, |x, y| x + y),
            never: a.never + b.never,
        },
    );
    let flips = if acc.flips.is_empty() { vec![0; slots] } else { acc.flips };
    Ok((0..=n_max)
        .map(|n| {
            let after: u64 = flips[n as usize + 1..].iter().sum();
            PiPoint {
                n,
                pi: Estimate::indicator(after, spec.trials),
                pi_including_never: Estimate::indicator(after + acc.never, spec.trials),
            }
        })
        .collect())
}

// ---------------------------------------------------------------- correlations

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationPoint {
    pub d: u32,
    /// Covariance of the fixed-point states of the center and the site `d` to its right.
    pub covariance: Estimate,
    /// Fraction of trials where either site's fixed-point state depends on the halo.
    pub undetermined: Estimate,
}

#[derive(Clone, Copy, Default)]
struct CorrAcc {
    pairs: PairCounts,
    undetermined: u64,
}

/// Two-point covariance of the fixed point. Values come from the window's own boundary;
/// determinacy compares the open-halo and closed-halo fixed points of the same window.
pub fn run_correlation_curve(spec: &ExperimentSpec, distances: &[u32]) -> Result<Vec<CorrelationPoint>> {
    spec.validate()?;
    let g = crate::lattice::Geometry::new(spec.width, spec.height, spec.boundary)?;
    let o = g.center();
    for &d in distances {
        g.check(o.offset(d as i32, 0))?;
    }
    let k = distances.len();
    let acc = run_trials(
        spec.trials,
        spec.master_seed,
        |seed, acc: &mut Vec<CorrAcc>| {
            if acc.is_empty() {
                *acc = vec![CorrAcc::default(); k];
            }
            let c = sample(spec, seed);
            let open = fixed_point(&c.with_boundary(BoundaryCondition::OpenHalo)).final_config;
            let closed = fixed_point(&c.with_boundary(BoundaryCondition::ClosedHalo)).final_config;
            let value = match spec.boundary {
                BoundaryCondition::OpenHalo => open.clone(),
                BoundaryCondition::ClosedHalo => closed.clone(),
                BoundaryCondition::Periodic => fixed_point(&c).final_config,
            };
            let det = |s: Site| open.is_open(s) == closed.is_open(s);
            for (a, &d) in acc.iter_mut().zip(distances) {
                let x = o.offset(d as i32, 0);
                a.pairs.push(value.is_open(o), value.is_open(x));
                a.undetermined += (!det(o) || !det(x)) as u64;
            }
        },
        |a, b| {
            merge_vec(a, b, |x, y| CorrAcc {
                pairs: x.pairs.merge(y.pairs),
                undetermined: x.undetermined + y.undetermined,
            })
        },
    );
    let acc = if acc.is_empty() { vec![CorrAcc::default(); k] } else { acc };
    Ok(distances
        .iter()
        .zip(acc)
        .map(|(&d, a)| CorrelationPoint {
            d,
            covariance: a.pairs.covariance(),
            undetermined: Estimate::indicator(a.undetermined, spec.trials),
        })
        .collect())
}

// ---------------------------------------------------------------- crossings

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossingPoint {
    /// Rectangle as placed inside its sampling window.
    pub rect: RectSpec,
    pub window_width: usize,
    pub window_height: usize,
    pub crossing: Coupled,
}

/// Default number of sites between a rectangle and the rim of its sampling window.
pub const DEFAULT_CROSSING_MARGIN: usize = 16;

/// Default number of sites between a two-point target and the window rim.
pub const DEFAULT_TAU_MARGIN: usize = 16;

/// Open vertical *-crossing probability of each rectangle, at time 0 and at `horizon`.
///
/// Rectangle `k` sits at offset `(margin, margin)` of a `(W + 2 margin) x (H + 2 margin)`
/// window with the given boundary, sampled from master seed `derive(master_seed, k)`.
pub fn run_crossing_scan(
    p: f64,
    rects: &[RectSpec],
    horizon: Horizon,
    trials: u64,
    master_seed: u64,
    margin: usize,
    boundary: BoundaryCondition,
) -> Result<Vec<CrossingPoint>> {
    check_probability(p)?;
    if trials == 0 {
        return Err(Error::NoTrials);
    }
    rects
        .iter()
        .enumerate()
        .map(|(k, r)| {
            let rect = RectSpec::new(r.width_sites, r.height_sites, Site::new(margin as i32, margin as i32))?;
            let spec = ExperimentSpec {
                p,
                width: r.width_sites + 2 * margin,
                height: r.height_sites + 2 * margin,
                boundary,
                horizon,
                trials,
                master_seed: rng::derive(master_seed, k as u64),
            };
            let acc = run_trials(
                trials,
                spec.master_seed,
                |seed, acc: &mut CoupledAcc| {
                    let c = sample(&spec, seed);
                    let base = open_star_crossing_vertical(&c, &rect).expect("rect fits");
                    let top = if horizon.is_initial() {
                        base
                    } else {
                        open_star_crossing_vertical(&evolve_to(&c, horizon.steps()), &rect).expect("rect fits")
                    };
                    acc.push(base as u64, top as u64);
                },
                CoupledAcc::merge,
            );
            Ok(CrossingPoint {
                rect,
                window_width: spec.width,
                window_height: spec.height,
                crossing: acc.finish(),
            })
        })
        .collect()
}

// ---------------------------------------------------------------- dependence tail

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailPoint {
    pub r: usize,
    pub probability: Estimate,
}

/// Probability that the center's fixed-point state is not determined by the radius-`r`
/// square around it. Radii at or beyond the window's inner radius use the whole window.
pub fn run_dependence_tail(spec: &ExperimentSpec, radii: &[usize]) -> Result<Vec<TailPoint>> {
    spec.validate()?;
    let g = crate::lattice::Geometry::new(spec.width, spec.height, spec.boundary)?;
    let o = g.center();
    let full = inner_radius(spec.width, spec.height, o);
    let k = radii.len();
    let acc = run_trials(
        spec.trials,
        spec.master_seed,
        |seed, acc: &mut Vec<u64>| {
            if acc.is_empty() {
                *acc = vec![0; k];
            }
            let c = sample(spec, seed);
            if c.is_open(o) {
                return;
            }
            for (a, &r) in acc.iter_mut().zip(radii) {
                let determined = if r >= full {
                    determined_by_window(&c, o)
                } else {
                    let w = c.window_around(o, r, BoundaryCondition::OpenHalo);
                    determined_by_window(&w, Site::new(r as i32, r as i32))
                };
                *a += !determined.expect("center in window") as u64;
            }
        },
        |a, b| merge_vec(a, b, |x, y| x + y),
    );
    let acc = if acc.is_empty() { vec![0; k] } else { acc };
    Ok(radii
        .iter()
        .zip(acc)
        .map(|(&r, f)| TailPoint {
            r,
            probability: Estimate::indicator(f, spec.trials),
        })
        .collect())
}

// ---------------------------------------------------------------- theta, chi

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub p: f64,
    pub value: Coupled,
}

fn coupled_scan(
    spec: &ExperimentSpec,
    p_values: &[f64],
    observe: impl Fn(&Configuration) -> u64 + Sync,
) -> Result<Vec<ScanPoint>> {
    spec.validate()?;
    probabilities(p_values)?;
    Ok(p_values
        .iter()
        .map(|&p| {
            let s = spec.with_p(p);
            let acc = run_trials(
                s.trials,
                s.master_seed,
                |seed, acc: &mut CoupledAcc| {
                    let c = sample(&s, seed);
                    let base = observe(&c);
                    let top = if s.horizon.is_initial() {
                        base
                    } else {
                        observe(&evolve_to(&c, s.horizon.steps()))
                    };
                    acc.push(base, top);
                },
                CoupledAcc::merge,
            );
            ScanPoint { p, value: acc.finish() }
        })
        .collect())
}

/// `theta_r(p, n)`: the center joins the L-infinity ring of radius `radius` by an open
/// *-path. All p values share the master seed.
pub fn run_theta_scan(spec: &ExperimentSpec, p_values: &[f64], radius: usize) -> Result<Vec<ScanPoint>> {
    let g = crate::lattice::Geometry::new(spec.width, spec.height, spec.boundary)?;
    let o = g.center();
    if radius > inner_radius(spec.width, spec.height, o) {
        return Err(Error::WindowTooSmall(format!(
            "ring of radius {radius} does not fit the {}x{} window",
            spec.width, spec.height
        )));
    }
    coupled_scan(spec, p_values, |c| {
        connected_to_ring(c, o, radius, Adjacency::Star, true).expect("ring fits") as u64
    })
}

/// `chi(p, n)`: size of the open *-cluster of the center inside the window.
pub fn run_chi_scan(spec: &ExperimentSpec, p_values: &[f64]) -> Result<Vec<ScanPoint>> {
    let o = crate::lattice::Geometry::new(spec.width, spec.height, spec.boundary)?.center();
    coupled_scan(spec, p_values, |c| {
        cluster_size_at(c, o, Adjacency::Star, true).expect("center in window") as u64
    })
}

// ---------------------------------------------------------------- two-point connectivity

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TauPoint {
    /// Offset of `x` from the center.
    pub x: Site,
    pub distance: f64,
    pub value: Coupled,
}

/// Marks the open *-cluster of `start` (empty when `start` is closed).
fn open_star_cluster(c: &Configuration, start: Site) -> Vec<bool> {
    let g = c.geometry();
    let mut seen = vec![false; g.len()];
    if !c.is_open(start) {
        return seen;
    }
    let s0 = g.index(start);
    seen[s0] = true;
    let mut stack = vec![s0];
    while let Some(i) = stack.pop() {
        g.for_each_neighbor(i, Adjacency::Star, |j| {
            if let Some(j) = j {
                if !seen[j] && c.is_open_at(j) {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        });
    }
    seen
}

/// `tau_{p,n}(x)`: the center and `center + x` lie in the same open *-cluster of the window.
/// Every target must keep `margin` sites between itself and the window rim.
pub fn run_tau_curve(spec: &ExperimentSpec, offsets: &[Site], margin: usize) -> Result<Vec<TauPoint>> {
    spec.validate()?;
    let g = crate::lattice::Geometry::new(spec.width, spec.height, spec.boundary)?;
    let o = g.center();
    let targets: Vec<Site> = offsets.iter().map(|x| o.offset(x.x, x.y)).collect();
    for (x, t) in offsets.iter().zip(&targets) {
        if !g.contains(*t) || inner_radius(spec.width, spec.height, *t) < margin {
            return Err(Error::WindowTooSmall(format!(
                "target {x} needs {margin} sites of margin inside the {}x{} window",
                spec.width, spec.height
            )));
        }
    }
    let idx: Vec<usize> = targets.iter().map(|&t| g.index(t)).collect();
    let k = offsets.len();
    let acc = run_trials(
        spec.trials,
        spec.master_seed,
        |seed, acc: &mut Vec<CoupledAcc>| {
            if acc.is_empty() {
                *acc = vec![CoupledAcc::default(); k];
            }
            let c = sample(spec, seed);
            let base = open_star_cluster(&c, o);
            let top = if spec.horizon.is_initial() {
                base.clone()
            } else {
                open_star_cluster(&evolve_to(&c, spec.horizon.steps()), o)
            };
            for (a, &i) in acc.iter_mut().zip(&idx) {
                a.push(base[i] as u64, top[i] as u64);
            }
        },
        |a, b| merge_vec(a, b, CoupledAcc::merge),
    );
    let acc = if acc.is_empty() { vec![CoupledAcc::default(); k] } else { acc };
    Ok(offsets
        .iter()
        .zip(acc)
        .map(|(&x, a)| TauPoint {
            x,
            distance: euclidean_distance(Site::new(0, 0), x),
            value: a.finish(),
        })
        .collect())
}

// ---------------------------------------------------------------- unprotected partial clusters

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnprotectedTail {
    pub points: Vec<TailLengthPoint>,
    /// Trials whose partial cluster reached the search radius before a protected site was
    /// found; they are counted by their explored size, so the curve is an upper estimate.
    pub truncated: u64,
    pub search_radius: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailLengthPoint {
    pub length: u32,
    pub probability: Estimate,
}

enum PartialOutcome {
    Protected,
    Unprotected { size: usize, truncated: bool },
}

/// Explores `C_{(x, x')}` for `x = (0, 0)`, `x' = (1, 0)` on the infinite lattice, sampling
/// states lazily from the trial seed, until a protected site shows up.
fn explore_partial(p: f64, seed: u64, radius: i32) -> PartialOutcome {
    let field = rng::SiteField::new(seed);
    let closed = |s: Site| !field.bernoulli(s.x, s.y, p);
    let protected = |s: Site| {
        [(0, 0), (-1, 0), (0, -1), (-1, -1)].iter().any(|&(a, b)| {
            let c = s.offset(a, b);
            closed(c) && closed(c.offset(1, 0)) && closed(c.offset(0, 1)) && closed(c.offset(1, 1))
        })
    };
    let x = Site::new(0, 0);
    let start = Site::new(1, 0);
    if !closed(start) {
        return PartialOutcome::Unprotected {
            size: 0,
            truncated: false,
        };
    }
    let mut seen = HashSet::from([start]);
    let mut queue = VecDeque::from([start]);
    let mut truncated = false;
    while let Some(s) = queue.pop_front() {
        if protected(s) {
            return PartialOutcome::Protected;
        }
        for &(dx, dy) in Adjacency::Z2.offsets() {
            let t = s.offset(dx, dy);
            if s == start && t == x {
                continue;
            }
            if t.linf(x) > radius {
                truncated |= closed(t);
                continue;
            }
            if closed(t) && seen.insert(t) {
                queue.push_back(t);
            }
        }
    }
    PartialOutcome::Unprotected {
        size: seen.len(),
        truncated,
    }
}

/// `P(|C_{(x,x')}| >= l` and `C_{(x,x')}` holds no protected site`)` for each length.
/// `search_radius` defaults to four times the largest length.
pub fn run_unprotected_tail(
    p: f64,
    lengths: &[u32],
    trials: u64,
    master_seed: u64,
    search_radius: Option<usize>,
) -> Result<UnprotectedTail> {
    check_probability(p)?;
    if trials == 0 {
        return Err(Error::NoTrials);
    }
    let radius = search_radius.unwrap_or(4 * lengths.iter().copied().max().unwrap_or(1) as usize).max(1);
    let k = lengths.len();
    let (counts, truncated) = run_trials(
        trials,
        master_seed,
        |seed, acc: &mut (Vec<u64>, u64)| {
            if acc.0.is_empty() {
                acc.0 = vec![0; k];
            }
            if let PartialOutcome::Unprotected { size, truncated } = explore_partial(p, seed, radius as i32) {
                acc.1 += truncated as u64;
                for (a, &l) in acc.0.iter_mut().zip(lengths) {
                    *a += (size >= l as usize) as u64;
                }
            }
        },
        |a, b| (merge_vec(a.0, b.0, |x, y| x + y), a.1 + b.1),
    );
    let counts = if counts.is_empty() { vec![0; k] } else { counts };
    Ok(UnprotectedTail {
        points: lengths
            .iter()
            .zip(counts)
            .map(|(&length, c)| TailLengthPoint {
                length,
                probability: Estimate::indicator(c, trials),
            })
            .collect(),
        truncated,
        search_radius: radius,
    })
}
