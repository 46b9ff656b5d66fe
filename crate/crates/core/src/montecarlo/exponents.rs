//! Paired exponent measurements: the same protocol run on time-0 and on evolved
//! configurations of the same trials, with a batch-based slope uncertainty.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{
    fit_log_linear, fit_log_log, run_chi_scan, run_tau_curve, run_theta_scan, Coupled, Estimate, ExperimentSpec,
    ExponentFit, Horizon, DEFAULT_TAU_MARGIN,
};
use crate::error::{Error, Result};
use crate::lattice::{check_probability, BoundaryCondition, Site};
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExponentKind {
    Beta,
    Eta,
    Nu,
    Gamma,
}

impl ExponentKind {
    pub const ALL: [ExponentKind; 4] = [ExponentKind::Beta, ExponentKind::Eta, ExponentKind::Nu, ExponentKind::Gamma];

    pub fn as_str(self) -> &'static str {
        match self {
            ExponentKind::Beta => "beta",
            ExponentKind::Eta => "eta",
            ExponentKind::Nu => "nu",
            ExponentKind::Gamma => "gamma",
        }
    }

    /// Exponent value read off a fitted slope.
    pub fn from_slope(self, slope: f64) -> f64 {
        match self {
            ExponentKind::Beta => slope,
            _ => -slope,
        }
    }
}

impl fmt::Display for ExponentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExponentKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ExponentKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown exponent `{s}`; valid names: beta, eta, nu, gamma")))
    }
}

/// Shared settings of an exponent protocol.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolParams {
    /// Side of the square sampling window.
    pub size: usize,
    pub boundary: BoundaryCondition,
    /// Total trials, split evenly (rounded up) across batches.
    pub trials: u64,
    pub batches: u32,
    pub master_seed: u64,
    /// Horizon of the evolved side; the other side is always time 0.
    pub horizon: Horizon,
    pub pc: f64,
    /// Agreement threshold in combined standard errors.
    pub agreement_k: f64,
}

impl ProtocolParams {
    pub fn new(size: usize, trials: u64, master_seed: u64) -> Self {
        ProtocolParams {
            size,
            boundary: BoundaryCondition::OpenHalo,
            trials,
            batches: 10,
            master_seed,
            horizon: Horizon::FixedPoint,
            pc: super::PC_STAR,
            agreement_k: 2.0,
        }
    }

    fn batch_trials(&self) -> u64 {
        self.trials.div_ceil(self.batches as u64)
    }

    fn batch_spec(&self, p: f64, b: u32) -> ExperimentSpec {
        ExperimentSpec {
            p,
            width: self.size,
            height: self.size,
            boundary: self.boundary,
            horizon: self.horizon,
            trials: self.batch_trials(),
            master_seed: rng::derive(self.master_seed, b as u64),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::NoTrials);
        }
        if self.batches < 2 {
            return Err(Error::InvalidArgument("at least 2 batches are needed for a slope error".into()));
        }
        check_probability(self.pc)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolPoint {
    pub p: f64,
    /// Euclidean distance for two-point protocols.
    pub distance: Option<f64>,
    pub estimate: Estimate,
}

/// One side (time 0 or evolved) of a paired measurement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentSide {
    pub horizon: Horizon,
    /// Fit on the batch-pooled means.
    pub fit: ExponentFit,
    pub exponent: f64,
    /// Spread of the per-batch slopes over `sqrt(batches)`.
    pub slope_stderr: f64,
    pub batch_slopes: Vec<f64>,
    pub points: Vec<ProtocolPoint>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairedExponent {
    pub kind: ExponentKind,
    pub baseline: ExponentSide,
    pub evolved: ExponentSide,
    pub slope_difference: f64,
    pub combined_stderr: f64,
    pub agreement_k: f64,
    pub agree: bool,
    /// Trials (over all points and batches) where the time-0 value exceeded the evolved one.
    pub coupling_violations: u64,
}

/// Per point: (p, distance). `measure(b)` returns batch `b`'s coupled estimates in point order.
fn paired(
    kind: ExponentKind,
    params: &ProtocolParams,
    labels: &[(f64, Option<f64>)],
    measure: impl Fn(u32) -> Result<Vec<Coupled>>,
    fit: impl Fn(&[f64]) -> Result<ExponentFit>,
) -> Result<PairedExponent> {
    params.validate()?;
    let batches: Vec<Vec<Coupled>> = (0..params.batches).map(&measure).collect::<Result<_>>()?;
    let violations = batches.iter().flatten().map(|c| c.coupling_violations).sum();
    let bn = params.batches as f64;
    let side = |pick: fn(&Coupled) -> Estimate, horizon: Horizon| -> Result<ExponentSide> {
        let points: Vec<ProtocolPoint> = labels
            .iter()
            .enumerate()
            .map(|(i, &(p, distance))| {
                let ests: Vec<Estimate> = batches.iter().map(|b| pick(&b[i])).collect();
                ProtocolPoint {
                    p,
                    distance,
                    estimate: Estimate {
                        mean: ests.iter().map(|e| e.mean).sum::<f64>() / bn,
                        stderr: ests.iter().map(|e| e.stderr * e.stderr).sum::<f64>().sqrt() / bn,
                        trials: ests.iter().map(|e| e.trials).sum(),
                    },
                }
            })
            .collect();
        let means: Vec<f64> = points.iter().map(|q| q.estimate.mean).collect();
        let pooled = fit(&means)?;
        let batch_slopes: Vec<f64> = batches
            .iter()
            .enumerate()
            .map(|(b, batch)| {
                let m: Vec<f64> = batch.iter().map(|c| pick(c).mean).collect();
                fit(&m).map(|f| f.slope).map_err(|e| {
                    Error::InvalidArgument(format!("batch {b} cannot be fitted ({e}); increase --trials"))
                })
            })
            .collect::<Result<_>>()?;
        let mean_slope = batch_slopes.iter().sum::<f64>() / bn;
        let var = batch_slopes.iter().map(|s| (s - mean_slope).powi(2)).sum::<f64>() / (bn - 1.0);
        Ok(ExponentSide {
            horizon,
            exponent: kind.from_slope(pooled.slope),
            fit: pooled,
            slope_stderr: (var / bn).sqrt(),
            batch_slopes,
            points,
        })
    };
    let baseline = side(|c| c.baseline, Horizon::INITIAL)?;
    let evolved = side(|c| c.evolved, params.horizon)?;
    let combined = baseline.slope_stderr.hypot(evolved.slope_stderr);
    let diff = evolved.fit.slope - baseline.fit.slope;
    Ok(PairedExponent {
        kind,
        agree: diff.abs() <= params.agreement_k * combined,
        baseline,
        evolved,
        slope_difference: diff,
        combined_stderr: combined,
        agreement_k: params.agreement_k,
        coupling_violations: violations,
    })
}

fn axis_points(xs: &[u32]) -> Vec<Site> {
    xs.iter().map(|&x| Site::new(x as i32, 0)).collect()
}

fn check_grid(n: usize) -> Result<()> {
    if n < 3 {
        return Err(Error::TooFewPoints(n));
    }
    Ok(())
}

/// eta: slope of `log tau(x)` against `log |x|` at `p`, for `x` on the positive horizontal axis.
pub fn eta_protocol(params: &ProtocolParams, p: f64, xs: &[u32]) -> Result<PairedExponent> {
    check_probability(p)?;
    check_grid(xs.len())?;
    let offsets = axis_points(xs);
    let labels: Vec<(f64, Option<f64>)> = xs.iter().map(|&x| (p, Some(x as f64))).collect();
    let dist: Vec<f64> = xs.iter().map(|&x| x as f64).collect();
    paired(
        ExponentKind::Eta,
        params,
        &labels,
        |b| {
            let pts = run_tau_curve(&params.batch_spec(p, b), &offsets, DEFAULT_TAU_MARGIN)?;
            Ok(pts.into_iter().map(|q| q.value).collect())
        },
        |m| fit_log_log(&dist.iter().copied().zip(m.iter().copied()).collect::<Vec<_>>(), None),
    )
}

/// gamma: slope of `log chi(p)` against `log(p_c - p)` for `p < p_c`.
pub fn gamma_protocol(params: &ProtocolParams, p_values: &[f64]) -> Result<PairedExponent> {
    check_grid(p_values.len())?;
    let gaps: Vec<f64> = p_values.iter().map(|&p| params.pc - p).collect();
    let labels: Vec<(f64, Option<f64>)> = p_values.iter().map(|&p| (p, None)).collect();
    paired(
        ExponentKind::Gamma,
        params,
        &labels,
        |b| {
            let pts = run_chi_scan(&params.batch_spec(params.pc, b), p_values)?;
            Ok(pts.into_iter().map(|q| q.value).collect())
        },
        |m| fit_log_log(&gaps.iter().copied().zip(m.iter().copied()).collect::<Vec<_>>(), None),
    )
}

/// beta: slope of `log theta_r(p)` against `log(p - p_c)` for `p > p_c`, with the ring at
/// `radius` around the center.
pub fn beta_protocol(params: &ProtocolParams, p_values: &[f64], radius: usize) -> Result<PairedExponent> {
    check_grid(p_values.len())?;
    let gaps: Vec<f64> = p_values.iter().map(|&p| p - params.pc).collect();
    let labels: Vec<(f64, Option<f64>)> = p_values.iter().map(|&p| (p, None)).collect();
    paired(
        ExponentKind::Beta,
        params,
        &labels,
        |b| {
            let pts = run_theta_scan(&params.batch_spec(params.pc, b), p_values, radius)?;
            Ok(pts.into_iter().map(|q| q.value).collect())
        },
        |m| fit_log_log(&gaps.iter().copied().zip(m.iter().copied()).collect::<Vec<_>>(), None),
    )
}

/// nu: for each `p < p_c`, `xi(p) = -1 / slope` of `log tau(x)` against `|x|`; then the slope
/// of `log xi` against `log(p_c - p)`.
pub fn nu_protocol(params: &ProtocolParams, p_values: &[f64], xs: &[u32]) -> Result<PairedExponent> {
    check_grid(p_values.len())?;
    check_grid(xs.len())?;
    let offsets = axis_points(xs);
    let dist: Vec<f64> = xs.iter().map(|&x| x as f64).collect();
    let gaps: Vec<f64> = p_values.iter().map(|&p| params.pc - p).collect();
    let labels: Vec<(f64, Option<f64>)> = p_values
        .iter()
        .flat_map(|&p| dist.iter().map(move |&d| (p, Some(d))))
        .collect();
    paired(
        ExponentKind::Nu,
        params,
        &labels,
        |b| {
            let mut out = Vec::new();
            for &p in p_values {
                check_probability(p)?;
                let pts = run_tau_curve(&params.batch_spec(p, b), &offsets, DEFAULT_TAU_MARGIN)?;
                out.extend(pts.into_iter().map(|q| q.value));
            }
            Ok(out)
        },
        |m| {
            let xi: Vec<(f64, f64)> = m
                .chunks(xs.len())
                .zip(&gaps)
                .map(|(row, &gap)| {
                    let f = fit_log_linear(&dist.iter().copied().zip(row.iter().copied()).collect::<Vec<_>>(), None)?;
                    Ok((gap, -1.0 / f.slope))
                })
                .collect::<Result<_>>()?;
            fit_log_log(&xi, None)
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_parse() {
        for k in ExponentKind::ALL {
            assert_eq!(k.as_str().parse::<ExponentKind>().unwrap(), k);
        }
        let err = "zeta".parse::<ExponentKind>().unwrap_err().to_string();
        assert!(err.contains("beta") && err.contains("gamma"));
    }

    #[test]
    fn grids_need_three_points() {
        let params = ProtocolParams::new(41, 100, 1);
        assert_eq!(eta_protocol(&params, 0.4, &[2, 4]).unwrap_err(), Error::TooFewPoints(2));
        assert_eq!(gamma_protocol(&params, &[0.3]).unwrap_err(), Error::TooFewPoints(1));
    }

    #[test]
    fn gamma_sides_agree_on_small_run() {
        let mut params = ProtocolParams::new(41, 4000, 3);
        params.batches = 4;
        let r = gamma_protocol(&params, &[0.25, 0.3, 0.35]).unwrap();
        assert_eq!(r.coupling_violations, 0);
        assert_eq!(r.baseline.batch_slopes.len(), 4);
        assert!(r.baseline.slope_stderr > 0.0);
        assert!(r.baseline.fit.slope < 0.0 && r.evolved.fit.slope < 0.0);
        assert_eq!(r.baseline.exponent, -r.baseline.fit.slope);
        for (b, e) in r.baseline.points.iter().zip(&r.evolved.points) {
            assert!(e.estimate.mean >= b.estimate.mean);
        }
    }

    #[test]
    fn eta_runs_and_is_deterministic() {
        let mut params = ProtocolParams::new(61, 600, 5);
        params.batches = 3;
        let a = eta_protocol(&params, 0.4073, &[2, 4, 8]).unwrap();
        let b = eta_protocol(&params, 0.4073, &[2, 4, 8]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.baseline.points[0].estimate.trials, 600);
    }
}
