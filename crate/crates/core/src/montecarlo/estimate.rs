use serde::{Deserialize, Serialize};

/// Monte Carlo mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub trials: u64,
}

impl Estimate {
    /// Fraction of successes; stderr from the unbiased sample variance.
    pub fn indicator(successes: u64, trials: u64) -> Self {
        IntMoments::from_indicator(successes, trials).estimate()
    }

    /// `|self - other| <= k * sqrt(se_a^2 + se_b^2)`.
    pub fn agrees_with(&self, other: &Estimate, k: f64) -> bool {
        (self.mean - other.mean).abs() <= k * self.combined_stderr(other)
    }

    pub fn combined_stderr(&self, other: &Estimate) -> f64 {
        self.stderr.hypot(other.stderr)
    }
}

/// Exact running moments of a nonnegative integer observable.
///
/// Integer sums merge associatively, so totals are identical however trials are split
/// across threads.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct IntMoments {
    pub n: u64,
    pub sum: u128,
    pub sum_sq: u128,
}

impl IntMoments {
    #[inline]
    pub fn push(&mut self, v: u64) {
        self.n += 1;
        self.sum += v as u128;
        self.sum_sq += (v as u128) * (v as u128);
    }

    pub fn from_indicator(successes: u64, trials: u64) -> Self {
        IntMoments {
            n: trials,
            sum: successes as u128,
            sum_sq: successes as u128,
        }
    }

    #[inline]
    pub fn merge(mut self, other: IntMoments) -> Self {
        self.n += other.n;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
        self
    }

    pub fn estimate(&self) -> Estimate {
        if self.n == 0 {
            return Estimate {
                mean: f64::NAN,
                stderr: f64::NAN,
                trials: 0,
            };
        }
        let n = self.n as f64;
        let mean = self.sum as f64 / n;
        let stderr = if self.n < 2 {
            0.0
        } else {
            // (n * sum_sq - sum^2) / (n^2 (n - 1)), numerator exact
            let num = (self.n as u128) * self.sum_sq - self.sum * self.sum;
            (num as f64 / (n * n * (n - 1.0))).sqrt()
        };
        Estimate {
            mean,
            stderr,
            trials: self.n,
        }
    }
}

/// 2x2 contingency counts of two binary variables, indexed `[a][b]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PairCounts {
    pub counts: [[u64; 2]; 2],
}

impl PairCounts {
    #[inline]
    pub fn push(&mut self, a: bool, b: bool) {
        self.counts[a as usize][b as usize] += 1;
    }

    pub fn merge(mut self, other: PairCounts) -> Self {
        for i in 0..2 {
            for j in 0..2 {
                self.counts[i][j] += other.counts[i][j];
            }
        }
        self
    }

    pub fn n(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// Plug-in covariance `E[ab] - E[a]E[b]` with a delta-method standard error:
    /// the sample variance of `(a - mean_a)(b - mean_b)` over `n`.
    pub fn covariance(&self) -> Estimate {
        let n = self.n();
        if n == 0 {
            return Estimate {
                mean: f64::NAN,
                stderr: f64::NAN,
                trials: 0,
            };
        }
        let nf = n as f64;
        let c = |i: usize, j: usize| self.counts[i][j] as f64 / nf;
        let ma = c(1, 0) + c(1, 1);
        let mb = c(0, 1) + c(1, 1);
        let cov = c(1, 1) - ma * mb;
        let mut second = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let z = (i as f64 - ma) * (j as f64 - mb);
                second += c(i, j) * z * z;
            }
        }
        let var = (second - cov * cov).max(0.0);
        let stderr = if n < 2 { 0.0 } else { (var / (nf - 1.0)).sqrt() };
        Estimate {
            mean: cov,
            stderr,
            trials: n,
        }
    }
}

impl PairCounts {
    /// Paired difference `E[a] - E[b]` with the standard error of the per-trial difference.
    pub fn difference(&self) -> Estimate {
        let n = self.n();
        let up = self.counts[1][0];
        let down = self.counts[0][1];
        if n == 0 {
            return Estimate {
                mean: f64::NAN,
                stderr: f64::NAN,
                trials: 0,
            };
        }
        let nf = n as f64;
        let mean = (up as f64 - down as f64) / nf;
        let stderr = if n < 2 {
            0.0
        } else {
            let second = (up + down) as f64 / nf;
            ((second - mean * mean).max(0.0) * nf / (nf - 1.0) / nf).sqrt()
        };
        Estimate {
            mean,
            stderr,
            trials: n,
        }
    }

    /// Marginal estimate of `a`.
    pub fn first(&self) -> Estimate {
        Estimate::indicator(self.counts[1][0] + self.counts[1][1], self.n())
    }

    /// Marginal estimate of `b`.
    pub fn second(&self) -> Estimate {
        Estimate::indicator(self.counts[0][1] + self.counts[1][1], self.n())
    }
}
