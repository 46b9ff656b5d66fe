//! Acceptance suite: one check per criterion, each printing a single PASS/FAIL line.
//!
//! Runs at full scale, so it takes a while (about an hour and a half on one core).
//! Select criteria by number: `cargo test --test acceptance -- 3 7`.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use bootperc::checks::{check_exhaustive, check_random, SuiteReport};
use bootperc::montecarlo::*;
use bootperc::observables::{
    closed_z2_crossing_horizontal, connected, open_star_crossing_vertical, RectSpec,
};
use bootperc::*;
use num_bigint::BigUint;

/// Outcome of one criterion: the verdict plus a one-line summary of the measured values.
struct Verdict {
    pass: bool,
    summary: String,
}

impl Verdict {
    fn new(pass: bool, summary: impl Into<String>) -> Self {
        Verdict { pass, summary: summary.into() }
    }
}

/// Coupling violations seen across every coupled run of the suite.
#[derive(Default)]
struct Coupling {
    trials: u64,
    violations: u64,
    runs: Vec<&'static str>,
}

impl Coupling {
    fn add(&mut self, run: &'static str, c: &Coupled) {
        self.trials += c.baseline.trials;
        self.violations += c.coupling_violations;
        if !self.runs.contains(&run) {
            self.runs.push(run);
        }
    }
}

const MINUTE: Duration = Duration::from_secs(60);

fn within(limit: Duration, elapsed: Duration) -> bool {
    elapsed <= limit
}

fn strictly_decreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] < w[0])
}

fn probability_grid(lo: u32, hi: u32) -> Vec<f64> {
    (lo..=hi).map(|k| k as f64 / 100.0).collect()
}

// ---------------------------------------------------------------- criteria

fn exponential_convergence(_: &mut Coupling) -> Verdict {
    let start = Instant::now();
    let n_max = 12;
    let size = 2 * (n_max as usize + 2) + 1;
    let mut pass = true;
    let mut parts = Vec::new();
    for (k, &p) in [0.3, PC_STAR].iter().enumerate() {
        let spec = ExperimentSpec {
            p,
            width: size,
            height: size,
            boundary: BoundaryCondition::OpenHalo,
            horizon: Horizon::FixedPoint,
            trials: 100_000,
            master_seed: 0x0c01 + k as u64,
        };
        let pts = run_pi_curve(&spec, n_max).expect("valid spec");
        let nonzero: Vec<(f64, f64)> =
            pts.iter().filter(|q| q.pi.mean > 0.0).map(|q| (q.n as f64, q.pi.mean)).collect();
        let monotone = strictly_decreasing(&nonzero.iter().map(|q| q.1).collect::<Vec<_>>());
        // the nonzero points are a prefix: once the tail is empty it stays empty
        let prefix = pts.iter().take_while(|q| q.pi.mean > 0.0).count() == nonzero.len();
        let fit = fit_log_linear(&nonzero, Some(FitWindow::new(3.0, n_max as f64)));
        let ok = match &fit {
            Ok(f) => monotone && prefix && f.r_squared >= 0.98 && f.slope < 0.0,
            Err(_) => false,
        };
        pass &= ok;
        parts.push(match fit {
            Ok(f) => format!(
                "p={p}: slope {:.3}, r^2 {:.4} on {} points, decreasing {monotone}",
                f.slope, f.r_squared, f.points
            ),
            Err(e) => format!("p={p}: fit failed ({e})"),
        });
    }
    let t = start.elapsed();
    parts.push(format!("{:.0}s", t.as_secs_f64()));
    Verdict::new(pass && within(5 * MINUTE, t), parts.join("; "))
}

fn suite_summary(label: &str, r: &SuiteReport) -> String {
    format!(
        "{label}: {} configs, {} oracle checks ({} truncated), {} violations",
        r.configurations,
        r.oracle_checked,
        r.oracle_truncated,
        r.violations.len()
    )
}

fn structural_exactness(_: &mut Coupling) -> Verdict {
    let start = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    for side in [3, 4] {
        for b in BoundaryCondition::ALL {
            let r = check_exhaustive(side, side, b, Rule::BOOTSTRAP).expect("small window");
            pass &= r.is_clean() && r.configurations == 1 << (side * side);
            if !r.is_clean() {
                eprintln!("{}", r.violations[0]);
            }
            parts.push(suite_summary(&format!("{side}x{side} {b}"), &r));
        }
    }
    let t = start.elapsed();
    parts.push(format!("{:.0}s", t.as_secs_f64()));
    Verdict::new(pass && within(2 * MINUTE, t), parts.join("; "))
}

fn oracle_equivalence(_: &mut Coupling) -> Verdict {
    let start = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    for (k, b) in [BoundaryCondition::Periodic, BoundaryCondition::OpenHalo].into_iter().enumerate() {
        let r = check_random(10_000, 33, 33, b, &[0.2, PC_STAR, 0.6], 0x0c03 + k as u64, Rule::BOOTSTRAP)
            .expect("valid corpus");
        pass &= r.is_clean() && r.oracle_checked > 0;
        if !r.is_clean() {
            eprintln!("{}", r.violations[0]);
        }
        parts.push(suite_summary(&format!("33x33 {b}"), &r));
    }
    let t = start.elapsed();
    parts.push(format!("{:.0}s", t.as_secs_f64()));
    Verdict::new(pass && within(5 * MINUTE, t), parts.join("; "))
}

fn duality_xor(_: &mut Coupling) -> Verdict {
    let exactly_one = |c: &Configuration| {
        let rect = RectSpec::new(c.width(), c.height(), Site::new(0, 0)).expect("window is at least 2x2");
        open_star_crossing_vertical(c, &rect).unwrap() ^ closed_z2_crossing_horizontal(c, &rect).unwrap()
    };
    let mut violations = 0u64;
    for mask in 0..1u64 << 16 {
        let c = Configuration::from_bits(4, 4, BoundaryCondition::ClosedHalo, mask).unwrap();
        violations += !exactly_one(&c) as u64;
    }
    let mut random = 0u64;
    for (k, &p) in [0.2, PC_STAR, 0.8].iter().enumerate() {
        let master = rng::derive(0x0c04, k as u64);
        for i in 0..100_000 {
            let c = sample_configuration(p, 32, 32, BoundaryCondition::ClosedHalo, rng::trial_seed(master, i)).unwrap();
            random += !exactly_one(&c) as u64;
        }
    }
    Verdict::new(
        violations == 0 && random == 0,
        format!("4x4 exhaustive: {violations} violations of 65536; 32x32 random: {random} violations of 300000"),
    )
}

fn coupling_lower_bounds(coupling: &mut Coupling) -> Verdict {
    // dedicated theta, tau and chi runs; other criteria add their coupled runs to the tally
    let spec = ExperimentSpec {
        p: PC_STAR,
        width: 129,
        height: 129,
        boundary: BoundaryCondition::Periodic,
        horizon: Horizon::FixedPoint,
        trials: 10_000,
        master_seed: 0x0c05,
    };
    let grid = [0.3, 0.35, PC_STAR, 0.45, 0.5];
    for q in run_theta_scan(&spec, &grid, 32).expect("ring fits") {
        coupling.add("theta-scan", &q.value);
    }
    for q in run_chi_scan(&spec, &grid).expect("valid spec") {
        coupling.add("chi-scan", &q.value);
    }
    let offsets: Vec<Site> = [1, 2, 4, 8, 16, 32].iter().map(|&x| Site::new(x, 0)).collect();
    for q in run_tau_curve(&spec, &offsets, DEFAULT_TAU_MARGIN).expect("targets fit") {
        coupling.add("tau-curve", &q.value);
    }
    Verdict::new(
        coupling.violations == 0,
        format!(
            "{} violations over {} coupled trials ({})",
            coupling.violations,
            coupling.trials,
            coupling.runs.join(", ")
        ),
    )
}

/// `a^2 T_inf <= d^2 T_0` for the polynomials `T` at `p = a / d`, in exact integer arithmetic.
fn exact_tau_bound(inf: &ExactDistribution, zero: &ExactDistribution, a: u64, d: u64) -> bool {
    // both sides share the factor d^N, so compare sum_k c_k a^k (d - a)^(N - k); the sums
    // are integer counts of indicator values, exact in f64
    let n = inf.sites as u32;
    let poly = |dist: &ExactDistribution| -> BigUint {
        dist.sums
            .iter()
            .enumerate()
            .map(|(k, &c)| BigUint::from(c as u64) * BigUint::from(a).pow(k as u32) * BigUint::from(d - a).pow(n - k as u32))
            .sum()
    };
    BigUint::from(a * a) * poly(inf) <= BigUint::from(d * d) * poly(zero)
}

fn tau_upper_bound(coupling: &mut Coupling) -> Verdict {
    let start = Instant::now();
    // 5x5 window, origin (1, 2), x = origin + (3, 0)
    let (o, x) = (Site::new(1, 2), Site::new(4, 2));
    let tau = |c: &Configuration| connected(c, o, x, Adjacency::Star, true).unwrap() as u8 as f64;
    let dist = |h| enumerate_distribution(5, 5, BoundaryCondition::OpenHalo, h, Traversal::Ascending, tau).unwrap();
    let (zero, inf) = (dist(Horizon::INITIAL), dist(Horizon::FixedPoint));
    let mut pass = true;
    let mut parts = Vec::new();
    for (p, a, d) in [(0.2, 2u64, 10u64), (PC_STAR, 4073, 10_000)] {
        let exact = exact_tau_bound(&inf, &zero, a, d);
        pass &= exact;
        parts.push(format!(
            "5x5 p={p}: tau_inf {:.6} <= p^-2 tau_0 {:.6} exactly: {exact}",
            inf.evaluate(p),
            zero.evaluate(p) / (p * p)
        ));
    }
    for (k, &p) in [0.2, PC_STAR].iter().enumerate() {
        let spec = ExperimentSpec {
            p,
            width: 128,
            height: 128,
            boundary: BoundaryCondition::Periodic,
            horizon: Horizon::FixedPoint,
            trials: 100_000,
            master_seed: 0x0c06 + k as u64,
        };
        let q = run_tau_curve(&spec, &[Site::new(16, 0)], DEFAULT_TAU_MARGIN).expect("target fits")[0];
        coupling.add("tau-curve", &q.value);
        let bound = q.value.baseline.mean / (p * p);
        let ok = q.value.evolved.mean <= bound + 3.0 * q.value.evolved.stderr;
        pass &= ok;
        parts.push(format!(
            "L=128 p={p} |x|=16: {:.5} +- {:.5} vs bound {:.5}",
            q.value.evolved.mean, q.value.evolved.stderr, bound
        ));
    }
    let t = start.elapsed();
    parts.push(format!("{:.0}s", t.as_secs_f64()));
    Verdict::new(pass && within(10 * MINUTE, t), parts.join("; "))
}

fn crossing_limit(coupling: &mut Coupling) -> Verdict {
    let start = Instant::now();
    let rects: Vec<RectSpec> = [32, 64, 128, 256].iter().map(|&l| RectSpec::new(l, l, Site::new(0, 0)).unwrap()).collect();
    let pts = run_crossing_scan(
        PC_STAR,
        &rects,
        Horizon::FixedPoint,
        10_000,
        0x0c07,
        DEFAULT_CROSSING_MARGIN,
        BoundaryCondition::Periodic,
    )
    .expect("valid scan");
    for q in &pts {
        coupling.add("crossing-scan", &q.crossing);
    }
    let diffs: Vec<Estimate> = pts.iter().map(|q| q.crossing.difference).collect();
    let nonincreasing = diffs
        .windows(2)
        .all(|w| w[1].mean <= w[0].mean + 2.0 * w[0].combined_stderr(&w[1]));
    let last = pts.last().unwrap().crossing;
    let small = last.difference.mean <= 0.03;
    let centered = (0.45..=0.55).contains(&last.baseline.mean);
    let t = start.elapsed();
    let listed: Vec<String> = pts
        .iter()
        .map(|q| format!("L={} {:.4}+-{:.4}", q.rect.height_sites, q.crossing.difference.mean, q.crossing.difference.stderr))
        .collect();
    Verdict::new(
        nonincreasing && small && centered && within(30 * MINUTE, t),
        format!(
            "|phi_fp - phi_0|: {}; nonincreasing {nonincreasing}; phi(256; 0) = {:.4}; {:.0}s",
            listed.join(", "),
            last.baseline.mean,
            t.as_secs_f64()
        ),
    )
}

fn exponent_agreement(coupling: &mut Coupling) -> Verdict {
    let start = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    let params = ProtocolParams::new(256, 200_000, 0x0c08);
    // sqrt(2)-spaced distances between 4 and 32
    let xs = [4, 6, 8, 11, 16, 23, 32];
    let runs = [
        ("eta", eta_protocol(&params, PC_STAR, &xs).expect("valid protocol")),
        ("gamma", gamma_protocol(&params, &probability_grid(30, 39)).expect("valid protocol")),
    ];
    for (name, r) in &runs {
        coupling.trials += r.baseline.points.iter().map(|q| q.estimate.trials).sum::<u64>();
        coupling.violations += r.coupling_violations;
        coupling.runs.push(name);
        pass &= r.agree && r.coupling_violations == 0;
        parts.push(format!(
            "{name}: slope n=0 {:.4}+-{:.4}, fixed point {:.4}+-{:.4}, |diff| {:.4} vs {}x{:.4}",
            r.baseline.fit.slope,
            r.baseline.slope_stderr,
            r.evolved.fit.slope,
            r.evolved.slope_stderr,
            r.slope_difference.abs(),
            r.agreement_k,
            r.combined_stderr
        ));
    }
    let t = start.elapsed();
    parts.push(format!("{:.0}s", t.as_secs_f64()));
    Verdict::new(pass && within(60 * MINUTE, t), parts.join("; "))
}

fn correlation_decay(_: &mut Coupling) -> Verdict {
    let spec = ExperimentSpec {
        p: PC_STAR,
        width: 41,
        height: 41,
        boundary: BoundaryCondition::Periodic,
        horizon: Horizon::FixedPoint,
        trials: 1_000_000,
        master_seed: 0x0c09,
    };
    let distances: Vec<u32> = (1..=8).collect();
    let pts = run_correlation_curve(&spec, &distances).expect("valid spec");
    // above-noise prefix: |cov| more than two standard errors from zero
    let above: Vec<(f64, f64)> = pts
        .iter()
        .take_while(|q| q.covariance.mean.abs() > 2.0 * q.covariance.stderr)
        .map(|q| (q.d as f64, q.covariance.mean.abs()))
        .collect();
    let decreasing = strictly_decreasing(&above.iter().map(|q| q.1).collect::<Vec<_>>());
    let cov_fit = fit_log_linear(&above, None);
    let cov_ok = decreasing && matches!(&cov_fit, Ok(f) if f.slope < 0.0);

    let tail = run_dependence_tail(&spec.with_seed(0x0c0a), &(2..=12).collect::<Vec<_>>()).expect("valid spec");
    let xy: Vec<(f64, f64)> = tail
        .iter()
        .filter(|q| q.probability.mean > 0.0)
        .map(|q| (q.r as f64, q.probability.mean))
        .collect();
    let tail_fit = fit_log_linear(&xy, None);
    let tail_ok = matches!(&tail_fit, Ok(f) if f.slope < 0.0);
    let show = |f: &Result<ExponentFit>| match f {
        Ok(f) => format!("slope {:.3}, r^2 {:.4}, {} points", f.slope, f.r_squared, f.points),
        Err(e) => format!("fit failed ({e})"),
    };
    Verdict::new(
        cov_ok && tail_ok,
        format!(
            "cov above noise for d <= {}, decreasing {decreasing}, {}; dependence tail {}",
            above.len(),
            show(&cov_fit),
            show(&tail_fit)
        ),
    )
}

fn critical_point_invariance(_: &mut Coupling) -> Verdict {
    let start = Instant::now();
    let find = |h| {
        let mut params = PcStarParams::new(256, 10_000, 0.005, 0x0c10);
        params.horizon = h;
        find_pcstar(&params).expect("endpoints bracket one half")
    };
    let zero = find(Horizon::INITIAL);
    let fixed = find(Horizon::FixedPoint);
    let t = start.elapsed();
    let ok = zero.overlaps(&fixed) && zero.width() <= 0.005 && fixed.width() <= 0.005;
    Verdict::new(
        ok && within(30 * MINUTE, t),
        format!(
            "n=0 [{:.5}, {:.5}], fixed point [{:.5}, {:.5}], overlap {}; {:.0}s",
            zero.lo,
            zero.hi,
            fixed.lo,
            fixed.hi,
            zero.overlaps(&fixed),
            t.as_secs_f64()
        ),
    )
}

fn unprotected_tail(_: &mut Coupling) -> Verdict {
    let p = PC_STAR;
    let lengths: Vec<u32> = (1..=10).map(|k| 4 * k).collect();
    let t = run_unprotected_tail(p, &lengths, 100_000, 0x0c11, None).expect("valid run");
    let xy: Vec<(f64, f64)> = t
        .points
        .iter()
        .filter(|q| q.probability.mean > 0.0)
        .map(|q| (q.length as f64, q.probability.mean))
        .collect();
    let fit = fit_log_linear(&xy, None);
    let slope_ok = matches!(&fit, Ok(f) if f.slope <= 0.0);
    // reference K [1 - (1 - p)^4]^(l / 4) with K matched at l = 4
    let base = 1.0 - (1.0 - p).powi(4);
    let first = t.points[0];
    let k = first.probability.mean / base.powf(first.length as f64 / 4.0);
    let below = t
        .points
        .iter()
        .all(|q| q.probability.mean <= k * base.powf(q.length as f64 / 4.0));
    Verdict::new(
        slope_ok && below && k > 0.0,
        format!(
            "slope {}, K {k:.5}, below reference {below}, truncated {}",
            fit.map(|f| format!("{:.4}", f.slope)).unwrap_or_else(|e| e.to_string()),
            t.truncated
        ),
    )
}

// ---------------------------------------------------------------- driver

type Criterion = fn(&mut Coupling) -> Verdict;

const CRITERIA: [(u32, &str, Criterion); 11] = [
    (1, "exponential convergence of the flip-time tail", exponential_convergence),
    (2, "structural exactness on exhaustive windows", structural_exactness),
    (3, "flip-time oracle equivalence", oracle_equivalence),
    (4, "crossing duality", duality_xor),
    (6, "two-point upper bound", tau_upper_bound),
    (7, "crossing-limit agreement", crossing_limit),
    (8, "exponent agreement", exponent_agreement),
    (9, "correlation decay and dependence tail", correlation_decay),
    (10, "critical-point invariance", critical_point_invariance),
    (11, "unprotected-tail bound shape", unprotected_tail),
    // last, so the tally covers every coupled run above
    (5, "pathwise coupling lower bounds", coupling_lower_bounds),
];

fn main() -> ExitCode {
    let mut args = std::env::args().skip(1);
    let mut selected = Vec::new();
    let mut list = false;
    while let Some(a) = args.next() {
        match a.as_str() {
            "--list" => list = true,
            // libtest options that take a value
            "--test-threads" | "--skip" | "--format" | "--color" | "--logfile" => {
                args.next();
            }
            a => {
                if let Ok(n) = a.trim_start_matches("criterion_").parse::<u32>() {
                    selected.push(n);
                }
            }
        }
    }
    if list {
        for (n, _, _) in CRITERIA {
            println!("criterion_{n}: test");
        }
        return ExitCode::SUCCESS;
    }

    let mut coupling = Coupling::default();
    let mut results = Vec::new();
    for (n, name, check) in CRITERIA {
        if !selected.is_empty() && !selected.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let v = check(&mut coupling);
        let line = format!(
            "{} criterion {n:>2} ({name}): {} [{:.1}s]",
            if v.pass { "PASS" } else { "FAIL" },
            v.summary,
            start.elapsed().as_secs_f64()
        );
        println!("{line}");
        results.push((n, v.pass, line));
    }
    results.sort_by_key(|r| r.0);
    println!("\nacceptance summary:");
    for (_, _, line) in &results {
        println!("{line}");
    }
    let failed = results.iter().filter(|r| !r.1).count();
    println!("{} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
