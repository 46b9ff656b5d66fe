//! Least-squares fits on log-transformed data.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitWindow {
    pub lo: f64,
    pub hi: f64,
}

impl FitWindow {
    pub fn new(lo: f64, hi: f64) -> Self {
        FitWindow { lo, hi }
    }

    #[inline]
    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Ordinary least-squares standard error of the slope.
    pub slope_stderr: f64,
    /// Abscissa range actually covered by the fitted points (untransformed).
    pub fit_window: FitWindow,
    pub points: usize,
}

/// Ordinary least squares `y = intercept + slope * x`.
fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r2 = if syy <= f64::EPSILON * f64::EPSILON * n {
        1.0
    } else {
        (1.0 - sse / syy).clamp(0.0, 1.0)
    };
    let se = if xs.len() > 2 { (sse / (n - 2.0) / sxx).sqrt() } else { 0.0 };
    (slope, intercept, r2, se)
}

fn select(points: &[(f64, f64)], window: Option<FitWindow>) -> Vec<(f64, f64)> {
    points
        .iter()
        .copied()
        .filter(|&(x, _)| window.is_none_or(|w| w.contains(x)))
        .collect()
}

fn fit(selected: Vec<(f64, f64)>, tx: impl Fn(f64) -> f64) -> Result<ExponentFit> {
    if selected.len() < 3 {
        return Err(Error::TooFewPoints(selected.len()));
    }
    let xs: Vec<f64> = selected.iter().map(|p| tx(p.0)).collect();
    let distinct = xs.iter().any(|&x| x != xs[0]);
    if !distinct {
        return Err(Error::InvalidArgument("fit abscissae are all equal".into()));
    }
    let ys: Vec<f64> = selected.iter().map(|p| p.1.ln()).collect();
    let (slope, intercept, r_squared, slope_stderr) = least_squares(&xs, &ys);
    let lo = selected.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = selected.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    Ok(ExponentFit {
        slope,
        intercept,
        r_squared,
        slope_stderr,
        fit_window: FitWindow { lo, hi },
        points: selected.len(),
    })
}

/// Fits `log y` against `x` over the points whose abscissa lies in `window`.
pub fn fit_log_linear(points: &[(f64, f64)], window: Option<FitWindow>) -> Result<ExponentFit> {
    let selected = select(points, window);
    if let Some(&(x, y)) = selected.iter().find(|p| !(p.1 > 0.0)) {
        return Err(Error::NonPositive(x, y));
    }
    fit(selected, |x| x)
}

/// Fits `log y` against `log t` over the points whose abscissa lies in `window`.
pub fn fit_log_log(points: &[(f64, f64)], window: Option<FitWindow>) -> Result<ExponentFit> {
    let selected = select(points, window);
    if let Some(&(x, y)) = selected.iter().find(|p| !(p.0 > 0.0 && p.1 > 0.0)) {
        return Err(Error::NonPositive(x, y));
    }
    fit(selected, f64::ln)
}
