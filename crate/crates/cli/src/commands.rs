use bootperc::checks::{check_exhaustive, check_random, SuiteReport, ViolationKind};
use bootperc::lattice::{Configuration, Site};
use bootperc::montecarlo::{
    beta_protocol, enumerate_distribution, eta_protocol, find_pcstar, fit_log_linear, fit_log_log, gamma_protocol,
    nu_protocol, run_chi_scan, run_correlation_curve, run_crossing_scan, run_dependence_tail, run_pi_curve,
    run_tau_curve, run_theta_scan, run_unprotected_tail, Coupled, ExperimentSpec, ExponentFit, ExponentKind,
    FitWindow, Horizon, PcStarParams, ProtocolParams, Traversal,
};
use bootperc::observables::{cluster_size_at, connected, open_star_crossing_vertical, RectSpec};
use bootperc::{Adjacency, BoundaryCondition, Rule};
use serde_json::{json, Value};

use crate::args::*;
use crate::output::{num, Run};
use crate::CliError;

pub fn dispatch(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::PiDecay(a) => pi_decay(a),
        Command::Correlations(a) => correlations(a),
        Command::CrossingScan(a) => crossing_scan(a),
        Command::DependenceTail(a) => dependence_tail(a),
        Command::ThetaScan(a) => theta_scan(a),
        Command::TauCurve(a) => tau_curve(a),
        Command::ChiScan(a) => chi_scan(a),
        Command::UnprotectedTail(a) => unprotected_tail(a),
        Command::Exponents(a) => exponents(a),
        Command::StabilityCheck(a) => stability_check(a),
        Command::FindPcstar(a) => find_pcstar_cmd(a),
        Command::Enumerate(a) => enumerate(a),
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Fit summary for JSON output; a failed fit is reported rather than aborting the run.
fn fit_value(fit: bootperc::Result<ExponentFit>) -> Value {
    match fit {
        Ok(f) => json!({ "fit": f }),
        Err(e) => json!({ "fit": null, "reason": e.to_string() }),
    }
}

fn coupled_cols(c: &Coupled) -> Vec<String> {
    vec![
        num(c.baseline.mean),
        num(c.baseline.stderr),
        num(c.evolved.mean),
        num(c.evolved.stderr),
        num(c.difference.mean),
        num(c.difference.stderr),
        c.coupling_violations.to_string(),
        c.evolved.trials.to_string(),
    ]
}

const COUPLED_HEADER: [&str; 8] = [
    "mean_n0",
    "stderr_n0",
    "mean_n",
    "stderr_n",
    "difference",
    "stderr_difference",
    "coupling_violations",
    "trials",
];

fn with_coupled_header(lead: &[&'static str]) -> Vec<&'static str> {
    lead.iter().copied().chain(COUPLED_HEADER).collect()
}

fn report_violations(points: impl Iterator<Item = Coupled>) -> u8 {
    let v: u64 = points.map(|c| c.coupling_violations).sum();
    if v > 0 {
        eprintln!("coupling violated on {v} trial(s)");
        1
    } else {
        0
    }
}

fn pi_decay(a: PiDecayArgs) -> Result<u8, CliError> {
    let mut run = Run::start("pi-decay", &a.common)?;
    let size = a.size.unwrap_or(2 * (a.n_max as usize + 2) + 1);
    let spec = ExperimentSpec {
        p: a.p,
        width: size,
        height: size,
        boundary: a.boundary,
        horizon: Horizon::FixedPoint,
        trials: a.trials,
        master_seed: run.seed,
    };
    let pts = run_pi_curve(&spec, a.n_max)?;
    let rows: Vec<Vec<String>> = pts
        .iter()
        .map(|q| {
            vec![
                q.n.to_string(),
                num(q.pi.mean),
                num(q.pi.stderr),
                q.pi.trials.to_string(),
                num(q.pi_including_never.mean),
                num(q.pi_including_never.stderr),
            ]
        })
        .collect();
    run.csv(
        "pi_curve.csv",
        &["n", "mean", "stderr", "trials", "mean_including_never", "stderr_including_never"],
        &rows,
    )?;
    let window = FitWindow::new(a.fit_min as f64, a.fit_max.unwrap_or(a.n_max) as f64);
    let xy: Vec<(f64, f64)> = pts
        .iter()
        .map(|q| (q.n as f64, q.pi.mean))
        .filter(|&(_, y)| y > 0.0)
        .collect();
    let fit = fit_log_linear(&xy, Some(window));
    if let Ok(f) = &fit {
        println!("log-linear slope {:.4} (r^2 {:.4}) over n in [{}, {}]", f.slope, f.r_squared, f.fit_window.lo, f.fit_window.hi);
    }
    let mut v = fit_value(fit);
    v["requested_window"] = json!(window);
    v["decay_rate"] = json!(v["fit"]["slope"].as_f64().map(|s| -s));
    run.json("fit.json", &v)?;
    run.finish(&a)?;
    Ok(0)
}

fn correlations(a: CorrelationArgs) -> Result<u8, CliError> {
    let mut run = Run::start("correlations", &a.common)?;
    let spec = ExperimentSpec {
        p: a.p,
        width: a.size,
        height: a.size,
        boundary: a.boundary,
        horizon: Horizon::FixedPoint,
        trials: a.trials,
        master_seed: run.seed,
    };
    let pts = run_correlation_curve(&spec, &a.distances)?;
    let rows: Vec<Vec<String>> = pts
        .iter()
        .map(|q| {
            vec![
                q.d.to_string(),
                num(q.covariance.mean),
                num(q.covariance.stderr),
                q.covariance.trials.to_string(),
                num(q.undetermined.mean),
            ]
        })
        .collect();
    run.csv("correlations.csv", &["d", "mean", "stderr", "trials", "undetermined"], &rows)?;
    let above: Vec<(f64, f64)> = pts
        .iter()
        .take_while(|q| q.covariance.mean.abs() > a.noise_k * q.covariance.stderr)
        .map(|q| (q.d as f64, q.covariance.mean.abs()))
        .collect();
    let mut v = fit_value(fit_log_linear(&above, None));
    v["above_noise_points"] = json!(above.len());
    run.json("fit.json", &v)?;
    run.finish(&a)?;
    Ok(0)
}

fn crossing_scan(a: CrossingArgs) -> Result<u8, CliError> {
    let mut run = Run::start("crossing-scan", &a.common)?;
    if a.sizes.is_empty() {
        return Err(usage("--sizes needs at least one value"));
    }
    let rects: Vec<RectSpec> = a
        .sizes
        .iter()
        .map(|&h| {
            let w = (a.rho * h as f64).round() as usize;
            RectSpec::new(w, h, Site::new(0, 0)).map_err(|e| usage(format!("--sizes/--rho: {e}")))
        })
        .collect::<Result<_, _>>()?;
    let pts = run_crossing_scan(a.p, &rects, a.horizon, a.trials, run.seed, a.margin, a.boundary)?;
    let rows: Vec<Vec<String>> = pts
        .iter()
        .map(|q| {
            let mut r = vec![q.rect.height_sites.to_string(), q.rect.width_sites.to_string()];
            r.extend(coupled_cols(&q.crossing));
            r
        })
        .collect();
    run.csv("crossing.csv", &with_coupled_header(&["L", "W"]), &rows)?;
    run.json("rectangles.json", &pts)?;
    let code = report_violations(pts.iter().map(|q| q.crossing));
    run.finish(&a)?;
    Ok(code)
}

fn dependence_tail(a: DependenceArgs) -> Result<u8, CliError> {
    let mut run = Run::start("dependence-tail", &a.common)?;
    let spec = ExperimentSpec {
        p: a.p,
        width: a.size,
        height: a.size,
        boundary: a.boundary,
        horizon: Horizon::FixedPoint,
        trials: a.trials,
        master_seed: run.seed,
    };
    let pts = run_dependence_tail(&spec, &a.radii)?;
    let rows: Vec<Vec<String>> = pts
        .iter()
        .map(|q| {
            vec![
                q.r.to_string(),
                num(q.probability.mean),
                num(q.probability.stderr),
                q.probability.trials.to_string(),
            ]
        })
        .collect();
    run.csv("dependence_tail.csv", &["r", "mean", "stderr", "trials"], &rows)?;
    let xy: Vec<(f64, f64)> = pts
        .iter()
        .map(|q| (q.r as f64, q.probability.mean))
        .filter(|&(_, y)| y > 0.0)
        .collect();
    run.json("fit.json", &fit_value(fit_log_linear(&xy, None)))?;
    run.finish(&a)?;
    Ok(0)
}

fn theta_scan(a: ThetaArgs) -> Result<u8, CliError> {
    let mut run = Run::start("theta-scan", &a.common)?;
    let size = a.size.unwrap_or(2 * a.radius + 1);
    let spec = ExperimentSpec {
        p: a.p_values[0],
        width: size,
        height: size,
        boundary: a.boundary,
        horizon: a.horizon,
        trials: a.trials,
        master_seed: run.seed,
    };
    let pts = run_theta_scan(&spec, &a.p_values, a.radius)?;
    let rows: Vec<Vec<String>> = pts
        .iter()
        .map(|q| {
            let mut r = vec![num(q.p)];
            r.extend(coupled_cols(&q.value));
            r
        })
        .collect();
    run.csv("theta.csv", &with_coupled_header(&["p"]), &rows)?;
    let code = report_violations(pts.iter().map(|q| q.value));
    run.finish(&a)?;
    Ok(code)
}

fn tau_curve(a: TauArgs) -> Result<u8, CliError> {
    let mut run = Run::start("tau-curve", &a.common)?;
    let spec = ExperimentSpec {
        p: a.p,
        width: a.size,
        height: a.size,
        boundary: a.boundary,
        horizon: a.horizon,
        trials: a.trials,
        master_seed: run.seed,
    };
    let offsets: Vec<Site> = a.xs.iter().map(|&x| Site::new(x as i32, 0)).collect();
    let pts = run_tau_curve(&spec, &offsets, a.margin)?;
    let rows: Vec<Vec<String>> = pts
        .iter()
        .map(|q| {
            let mut r = vec![q.x.x.to_string(), num(q.distance)];
            r.extend(coupled_cols(&q.value));
            r
        })
        .collect();
    run.csv("tau.csv", &with_coupled_header(&["x", "distance"]), &rows)?;
    let side = |pick: fn(&Coupled) -> f64| -> Vec<(f64, f64)> {
        pts.iter().map(|q| (q.distance, pick(&q.value))).filter(|&(_, y)| y > 0.0).collect()
    };
    let (b, e) = (side(|c| c.baseline.mean), side(|c| c.evolved.mean));
    run.json(
        "fit.json",
        &json!({
            "log_linear": { "n0": fit_value(fit_log_linear(&b, None)), "n": fit_value(fit_log_linear(&e, None)) },
            "log_log": { "n0": fit_value(fit_log_log(&b, None)), "n": fit_value(fit_log_log(&e, None)) },
        }),
    )?;
    let code = report_violations(pts.iter().map(|q| q.value));
    run.finish(&a)?;
    Ok(code)
}

fn chi_scan(a: ChiArgs) -> Result<u8, CliError> {
    let mut run = Run::start("chi-scan", &a.common)?;
    let spec = ExperimentSpec {
        p: a.p_values[0],
        width: a.size,
        height: a.size,
        boundary: a.boundary,
        horizon: a.horizon,
        trials: a.trials,
        master_seed: run.seed,
    };
    let pts = run_chi_scan(&spec, &a.p_values)?;
    let rows: Vec<Vec<String>> = pts
        .iter()
        .map(|q| {
            let mut r = vec![num(q.p)];
            r.extend(coupled_cols(&q.value));
            r
        })
        .collect();
    run.csv("chi.csv", &with_coupled_header(&["p"]), &rows)?;
    let code = report_violations(pts.iter().map(|q| q.value));
    run.finish(&a)?;
    Ok(code)
}

fn unprotected_tail(a: UnprotectedArgs) -> Result<u8, CliError> {
    let mut run = Run::start("unprotected-tail", &a.common)?;
    if a.lengths.is_empty() {
        return Err(usage("--lengths needs at least one value"));
    }
    let t = run_unprotected_tail(a.p, &a.lengths, a.trials, run.seed, a.search_radius)?;
    // reference shape K [1 - (1 - p)^4]^(l / 4), K matched at the smallest length
    let base = 1.0 - (1.0 - a.p).powi(4);
    let first = &t.points[0];
    let k = first.probability.mean / base.powf(first.length as f64 / 4.0);
    let rows: Vec<Vec<String>> = t
        .points
        .iter()
        .map(|q| {
            vec![
                q.length.to_string(),
                num(q.probability.mean),
                num(q.probability.stderr),
                q.probability.trials.to_string(),
                num(k * base.powf(q.length as f64 / 4.0)),
            ]
        })
        .collect();
    run.csv("unprotected_tail.csv", &["length", "mean", "stderr", "trials", "reference"], &rows)?;
    let xy: Vec<(f64, f64)> = t
        .points
        .iter()
        .map(|q| (q.length as f64, q.probability.mean))
        .filter(|&(_, y)| y > 0.0)
        .collect();
    let mut v = fit_value(fit_log_linear(&xy, None));
    v["reference_slope"] = json!(base.ln() / 4.0);
    v["reference_k"] = json!(k);
    v["truncated"] = json!(t.truncated);
    v["search_radius"] = json!(t.search_radius);
    run.json("fit.json", &v)?;
    run.finish(&a)?;
    Ok(0)
}

/// `xmin, xmin sqrt 2, xmin 2, ...` rounded and deduplicated, up to `xmax`.
fn distance_grid(xmin: u32, xmax: u32) -> Vec<u32> {
    let mut out: Vec<u32> = Vec::new();
    let mut k = 0;
    loop {
        let x = (xmin.max(1) as f64 * 2f64.powf(k as f64 / 2.0)).round() as u32;
        if x > xmax {
            break;
        }
        if out.last() != Some(&x) {
            out.push(x);
        }
        k += 1;
    }
    out
}

fn exponents(a: ExponentArgs) -> Result<u8, CliError> {
    let xs = if a.xs.is_empty() { distance_grid(a.xmin, a.xmax) } else { a.xs.clone() };
    let mut a = a;
    if a.p_values.is_empty() && matches!(a.which, ExponentKind::Gamma | ExponentKind::Nu) {
        // subcritical approach to the critical point, 0.30, 0.31, ..., 0.39
        a.p_values = (30..40).map(|k| k as f64 / 100.0).collect();
    }
    let needs_grid = matches!(a.which, ExponentKind::Beta | ExponentKind::Gamma | ExponentKind::Nu);
    if needs_grid && a.p_values.len() < 3 {
        return Err(usage(format!(
            "--p-values needs at least 3 points for a fit, got {}",
            a.p_values.len()
        )));
    }
    if matches!(a.which, ExponentKind::Eta | ExponentKind::Nu) && xs.len() < 3 {
        return Err(usage(format!("--xs (or --xmin/--xmax) gives {} distances, a fit needs 3", xs.len())));
    }
    if a.batches < 2 {
        return Err(usage("--batches must be at least 2"));
    }
    let mut run = Run::start("exponents", &a.common)?;
    let params = ProtocolParams {
        size: a.size,
        boundary: a.boundary,
        trials: a.trials,
        batches: a.batches,
        master_seed: run.seed,
        horizon: a.horizon,
        pc: a.pc,
        agreement_k: a.agreement_k,
    };
    let r = match a.which {
        ExponentKind::Eta => eta_protocol(&params, a.p, &xs)?,
        ExponentKind::Gamma => gamma_protocol(&params, &a.p_values)?,
        ExponentKind::Beta => beta_protocol(&params, &a.p_values, a.radius.unwrap_or(a.size / 2 - 1))?,
        ExponentKind::Nu => nu_protocol(&params, &a.p_values, &xs)?,
    };
    println!(
        "{}: slope n=0 {:.4} +- {:.4}, slope n={} {:.4} +- {:.4}, agree within {}: {}",
        r.kind,
        r.baseline.fit.slope,
        r.baseline.slope_stderr,
        a.horizon,
        r.evolved.fit.slope,
        r.evolved.slope_stderr,
        r.agreement_k,
        r.agree
    );
    run.json("exponents.json", &r)?;
    let code = if r.coupling_violations > 0 { 1 } else { 0 };
    run.finish(&a)?;
    Ok(code)
}

fn print_suite(label: &str, r: &SuiteReport, max: usize) {
    let counts: Vec<String> = ViolationKind::ALL
        .iter()
        .map(|&k| format!("{}={}", k.as_str(), r.count(k)))
        .collect();
    println!(
        "{label}: {} configurations, oracle checked {} (truncated {}), violations: {}",
        r.configurations,
        r.oracle_checked,
        r.oracle_truncated,
        counts.join(" ")
    );
    for v in r.violations.iter().take(max) {
        println!("witness {v}");
    }
}

fn stability_check(a: StabilityArgs) -> Result<u8, CliError> {
    let rule = match a.mutant_threshold {
        Some(t) if (1..=4).contains(&t) => Rule { threshold: t },
        Some(t) => return Err(usage(format!("--mutant-threshold must be in 1..=4, got {t}"))),
        None => Rule::BOOTSTRAP,
    };
    let default_side = if a.exhaustive { 3 } else { 15 };
    let (w, h) = (a.width.unwrap_or(default_side), a.height.unwrap_or(a.width.unwrap_or(default_side)));
    let boundaries = if a.boundary.is_empty() { BoundaryCondition::ALL.to_vec() } else { a.boundary.clone() };
    let mut run = Run::start("stability-check", &a.common)?;
    let mut summary = Vec::new();
    let mut clean = true;
    for b in boundaries {
        let r = if a.exhaustive {
            check_exhaustive(w, h, b, rule)?
        } else {
            check_random(a.count, w, h, b, &a.p_values, run.seed, rule)?
        };
        print_suite(&format!("{w}x{h} {b}"), &r, a.max_witnesses);
        clean &= r.is_clean();
        summary.push(json!({
            "boundary": b.as_str(),
            "configurations": r.configurations,
            "oracle_checked": r.oracle_checked,
            "oracle_truncated": r.oracle_truncated,
            "violations": ViolationKind::ALL.iter().map(|&k| (k.as_str(), r.count(k))).collect::<std::collections::BTreeMap<_, _>>(),
            "witnesses": r.violations.iter().take(a.max_witnesses).map(|v| json!({
                "kind": v.kind.as_str(),
                "site": [v.site.x, v.site.y],
                "detail": v.detail,
                "configuration": v.witness.to_text(),
            })).collect::<Vec<_>>(),
        }));
    }
    run.json("stability.json", &summary)?;
    run.finish(&a)?;
    Ok(if clean { 0 } else { 1 })
}

fn find_pcstar_cmd(a: PcStarArgs) -> Result<u8, CliError> {
    let mut run = Run::start("find-pcstar", &a.common)?;
    let params = PcStarParams {
        size: a.size,
        trials: a.trials,
        tol: a.tol,
        horizon: a.horizon,
        master_seed: run.seed,
        lo: a.lo,
        hi: a.hi,
        margin: a.margin,
        boundary: a.boundary,
        target: 0.5,
    };
    let b = find_pcstar(&params)?;
    println!("bracket [{}, {}], recommended constant {:.4}", b.lo, b.hi, b.estimate);
    let rows: Vec<Vec<String>> = b
        .probes
        .iter()
        .map(|q| vec![num(q.p), num(q.crossing.mean), num(q.crossing.stderr), q.crossing.trials.to_string()])
        .collect();
    run.csv("probes.csv", &["p", "mean", "stderr", "trials"], &rows)?;
    run.json("pcstar.json", &b)?;
    run.finish(&a)?;
    Ok(0)
}

fn enumerate(a: EnumerateArgs) -> Result<u8, CliError> {
    let mut run = Run::start("enumerate", &a.common)?;
    Configuration::filled(a.width, a.height, a.boundary, true)?;
    let o = Site::new(((a.width - 1) / 2) as i32, ((a.height - 1) / 2) as i32);
    let target = o.offset(a.x, 0);
    if a.observable == Observable::Tau && !(0..a.width as i32).contains(&target.x) {
        return Err(usage(format!("--x {} puts the target outside the {}-wide window", a.x, a.width)));
    }
    if a.observable == Observable::Crossing && (a.width < 2 || a.height < 2) {
        return Err(usage("--observable crossing needs a window of at least 2x2"));
    }
    let rect = RectSpec::new(a.width.max(2), a.height.max(2), Site::new(0, 0))?;
    let obs = |c: &Configuration| -> f64 {
        match a.observable {
            Observable::OriginOpen => c.is_open(o) as u8 as f64,
            Observable::ClusterSize => cluster_size_at(c, o, Adjacency::Star, true).unwrap_or(0) as f64,
            Observable::Crossing => open_star_crossing_vertical(c, &rect).unwrap_or(false) as u8 as f64,
            Observable::Tau => connected(c, o, target, Adjacency::Star, true).unwrap_or(false) as u8 as f64,
        }
    };
    let dist = enumerate_distribution(a.width, a.height, a.boundary, a.horizon, Traversal::Ascending, obs)?;
    let value = dist.evaluate(a.p);
    println!("{value}");
    run.json(
        "enumerate.json",
        &json!({ "value": value, "sums_by_open_count": dist.sums, "sites": dist.sites }),
    )?;
    run.finish(&a)?;
    Ok(0)
}
