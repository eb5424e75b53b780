//! Acceptance suite: one line per criterion, nonzero exit if any fails.

mod support;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use catabird::analysis::{catastrophe_mean, first_visit_stats, stationary_distribution};
use catabird::closedform::{a1_stationary, a3_transient, a4_q0, A3Params, A5Params, PureBirth};
use catabird::model::{params, zoo_preset, ProcessSpec, TimeVaryingSpec, TruncationWindow};
use catabird::montecarlo::{estimate_catastrophe_time, estimate_first_visit, sample_min_characterization};
use catabird::specfun::AccuracyBudget;
use catabird::transient::{
    conditional_mean_cat, first_visit_density_r, nonhomogeneous_first_visit_cdf_r,
    nonhomogeneous_first_visit_density_r, nonhomogeneous_transient, transient_cat, Route,
};
use catabird::verify::{
    check_decomposition, check_effective_catastrophe, check_first_visit_transform, check_representation,
    check_resolvent, Check, VerifyOptions,
};

type Outcome = Result<(bool, String), Box<dyn std::error::Error>>;

const MC_PATHS: usize = 100_000;
const MC_SEED: u64 = 20_240_917;

fn preset(name: &str, p: &[(&str, f64)]) -> ProcessSpec<f64> {
    zoo_preset(name, &params(p)).unwrap().homogeneous().unwrap()
}

fn mm1() -> ProcessSpec<f64> {
    preset("ie_const", &[("alpha", 1.0), ("beta", 1.0), ("xi", 1.0)])
}

/// ie_const, id and ibd at each catastrophe rate.
fn zoo(xi: f64) -> Vec<(&'static str, ProcessSpec<f64>)> {
    vec![
        ("ie_const", preset("ie_const", &[("alpha", 1.0), ("beta", 1.0), ("xi", xi)])),
        ("id", preset("id", &[("nu", 1.5), ("beta", 0.8), ("xi", xi)])),
        ("ibd", preset("ibd", &[("alpha", 0.6), ("nu", 1.0), ("beta", 1.0), ("xi", xi)])),
    ]
}

fn worst(checks: &[Check]) -> (bool, String) {
    let passed = checks.iter().all(|c| c.passed);
    let w = checks
        .iter()
        .max_by(|a, b| (a.deviation / a.tolerance).total_cmp(&(b.deviation / b.tolerance)));
    let detail = match w {
        Some(c) => format!("{} checks, worst {:.2e} ({}) tol {:.0e}", checks.len(), c.deviation, c.name, c.tolerance),
        None => "no checks".into(),
    };
    (passed, detail)
}

fn decomposition() -> Outcome {
    let start = Instant::now();
    let opts = VerifyOptions {
        start_offsets: vec![0, 3],
        times: vec![0.25, 1.0, 4.0],
        transient_tol: 1e-8,
        ..Default::default()
    };
    let mut checks = Vec::new();
    for xi in [0.5, 1.0] {
        for (_, spec) in zoo(xi) {
            checks.extend(check_decomposition(&spec, &opts)?);
        }
    }
    let elapsed = start.elapsed();
    let (ok, detail) = worst(&checks);
    let fast = elapsed < Duration::from_secs(10);
    Ok((ok && fast, format!("{detail}, {:.2} s (limit 10 s)", elapsed.as_secs_f64())))
}

fn resolvent_and_renewal() -> Outcome {
    let opts = VerifyOptions {
        lambdas: vec![0.1, 1.0, 10.0],
        transform_tol: 1e-10,
        ..Default::default()
    };
    let mut checks = Vec::new();
    for xi in [0.5, 1.0] {
        for (_, spec) in zoo(xi) {
            checks.extend(check_resolvent(&spec, &opts)?);
        }
    }
    Ok(worst(&checks))
}

fn first_visit_transform() -> Outcome {
    let opts = VerifyOptions {
        laplace_tol: 1e-6,
        ..Default::default()
    };
    let checks = check_first_visit_transform(&mm1(), &[(2, 0), (0, 2)], &[0.1, 0.7, 1.0, 10.0], &opts)?;
    Ok(worst(&checks))
}

const GOLDEN_Q: f64 = 0.381_966_011_3;
const GOLDEN_MEAN: f64 = 0.618_033_988_7;
const GOLDEN_CAT: f64 = 1.618_033_988_7;
const GOLDEN_VAR: f64 = 0.512_461_179_7;

fn golden_values() -> Outcome {
    let spec = mm1();
    let w = TruncationWindow::default();
    let a3 = A3Params::new(1.0, 1.0, 1.0)?;
    let st = stationary_distribution(&spec, &w)?;
    let stats = first_visit_stats(&spec, 1, 0, &w)?;
    let cat = catastrophe_mean(&spec, 1, &w)?;
    let pairs = [
        ("q closed", a3.q, GOLDEN_Q),
        ("q engine", 1.0 - st.prob(0), GOLDEN_Q),
        ("E(T) closed", a3.first_visit_mean(1), GOLDEN_MEAN),
        ("E(T) engine", stats.mean, GOLDEN_MEAN),
        ("E(C) closed", a3.catastrophe_mean(1), GOLDEN_CAT),
        ("E(C) engine", cat, GOLDEN_CAT),
    ];
    let ok = pairs.iter().all(|(_, v, g)| (v - g).abs() <= 1e-9);
    let detail = pairs
        .iter()
        .map(|(n, v, g)| format!("{n}={v:.10} (dev {:.1e})", (v - g).abs()))
        .collect::<Vec<_>>()
        .join(", ");
    Ok((ok, detail))
}

fn monte_carlo() -> Outcome {
    let start = Instant::now();
    let spec = mm1();
    let w = TruncationWindow::default();
    let stats = first_visit_stats(&spec, 1, 0, &w)?;
    let cat = catastrophe_mean(&spec, 1, &w)?;
    let t = estimate_first_visit(&spec, 1, 0, MC_PATHS, MC_SEED)?.summary;
    let c = estimate_catastrophe_time(&spec, 1, MC_PATHS, MC_SEED + 1)?.summary;
    let elapsed = start.elapsed();
    let z = |est: f64, exact: f64, se: f64| (est - exact).abs() / se;
    let zs = [
        z(t.mean, stats.mean, t.se_mean),
        z(t.variance, stats.variance, t.se_variance),
        z(c.mean, cat, c.se_mean),
    ];
    let ok = zs.iter().all(|&v| v <= 3.0)
        && t.censored == 0
        && c.censored == 0
        && (stats.variance - GOLDEN_VAR).abs() <= 1e-9
        && elapsed < Duration::from_secs(60);
    Ok((
        ok,
        format!(
            "E(T) {:.5} z={:.2}, Var(T) {:.5} (exact {:.10}) z={:.2}, E(C) {:.5} z={:.2}, {:.2} s (limit 60 s)",
            t.mean,
            zs[0],
            t.variance,
            stats.variance,
            zs[1],
            c.mean,
            zs[2],
            elapsed.as_secs_f64()
        ),
    ))
}

fn min_characterization() -> Outcome {
    let spec = preset("ie_const", &[("alpha", 1.0), ("beta", 2.0), ("xi", 1.0)]);
    let m = sample_min_characterization(&spec, 2, MC_PATHS, MC_SEED + 2)?;
    let censored = m.direct.summary.censored + m.via_min.summary.censored;
    Ok((
        m.ks < m.ks_critical_1pct && censored == 0,
        format!("KS {:.5} vs 1% critical {:.5}, censored {censored}", m.ks, m.ks_critical_1pct),
    ))
}

/// `x^a ∫_0^∞ e^{-s} (x+s)^{-a} ds`, the equal-rate `q_0` written as a plain integral.
fn equal_rate_q0_oracle(nu: f64, alpha: f64, xi: f64) -> f64 {
    let (a, x) = (nu / alpha, xi / alpha);
    let breaks = support::graded_breaks(0.0, 90.0, x * 1e-4, 0.5);
    x.powf(a) * support::gl_integrate(|s| (-s).exp() * (x + s).powf(-a), &breaks)
}

fn stationary() -> Outcome {
    let w = TruncationWindow::default();
    let budget = AccuracyBudget::default();
    let mut lines = Vec::new();
    let mut ok = true;
    let mut record = |label: &str, dev: f64, tol: f64| {
        ok &= dev <= tol;
        lines.push(format!("{label} {dev:.1e}"));
    };

    let mut residual = 0.0f64;
    for xi in [0.5, 1.0] {
        for (_, spec) in zoo(xi) {
            residual = residual.max(stationary_distribution(&spec, &w)?.residual);
        }
    }
    record("residual", residual, 1e-10);

    let geometric = preset("pure_birth_const", &[("alpha", 1.5), ("xi", 0.5), ("r", 2.0)]);
    let st = stationary_distribution(&geometric, &w)?;
    let exact = a1_stationary(PureBirth::Constant { alpha: 1.5 }, 2, 0.5, 60)?;
    let dev = (2..=60).map(|n| (st.prob(n) - exact[n - 2]).abs()).fold(0.0, f64::max);
    record("A1 geometric", dev, 1e-12);

    // power-law tail; below the top state the pure-birth law is exact
    let linear = preset("pure_birth_linear", &[("xi", 0.5), ("k", 2.0)]);
    let st = stationary_distribution(&linear, &TruncationWindow::fixed(400, 1e-10)?)?;
    let exact = a1_stationary(PureBirth::Linear { k: 2 }, 0, 0.5, 200)?;
    let dev = (0..=200).map(|n| (st.prob(n) - exact[n]).abs()).fold(0.0, f64::max);
    record("A1 rational", dev, 1e-12);

    let st = stationary_distribution(&preset("ie_const", &[("alpha", 0.8), ("beta", 1.3), ("xi", 0.6)]), &w)?;
    let a3 = A3Params::new(0.8, 1.3, 0.6)?;
    let dev = (0..=60).map(|n| (st.prob(n) - a3.stationary(n)).abs()).fold(0.0, f64::max);
    record("A3 geometric", dev, 1e-12);

    let q0_target = 1.0 - (-1.0f64).exp();
    let st = stationary_distribution(&preset("id", &[("nu", 1.0), ("beta", 1.0), ("xi", 1.0)]), &w)?;
    let dev = (a4_q0(1.0, 1.0, 1.0, &budget)? - q0_target).abs().max((st.prob(0) - q0_target).abs());
    record("A4 q0", dev, 1e-9);

    for nu in [2.5, 0.5] {
        let p = A5Params::new(1.0, nu, 1.0, 0.5)?;
        let q0 = p.q0_equal_rates(&budget)?;
        let oracle = equal_rate_q0_oracle(nu, 1.0, 0.5);
        record(&format!("A5(ii) q0 nu={nu}"), (q0 - oracle).abs(), 1e-8);
    }
    Ok((ok, lines.join(", ")))
}

fn representation() -> Outcome {
    let spec = mm1();
    let opts = VerifyOptions {
        start_offsets: vec![0, 3],
        times: vec![0.5, 2.0],
        representation_tol: 1e-6,
        ..Default::default()
    };
    let mut checks = check_representation(&spec, &opts)?;
    let a3 = A3Params::new(1.0, 1.0, 1.0)?;
    for j in [0, 3] {
        for t in [0.5, 2.0] {
            let direct = transient_cat(&spec, j, t, &opts.window, 1e-12, Route::Direct)?;
            let closed = a3_transient(&a3, j, t, 80, &AccuracyBudget::default())?;
            let dev = closed
                .iter()
                .enumerate()
                .map(|(n, v)| (v - direct.prob(n)).abs())
                .fold(0.0, f64::max);
            checks.push(Check::new(format!("companion closed form j={j} t={t}"), dev, 1e-6));
        }
    }
    Ok(worst(&checks))
}

fn effective_catastrophe() -> Outcome {
    let opts = VerifyOptions {
        start_offsets: vec![0, 2, 3],
        lambdas: vec![0.1, 1.0, 5.0],
        transform_tol: 1e-10,
        ..Default::default()
    };
    let mut checks = Vec::new();
    for (_, spec) in zoo(1.0) {
        checks.extend(check_effective_catastrophe(&spec, &opts)?);
    }
    Ok(worst(&checks))
}

fn time_varying() -> Outcome {
    let w = TruncationWindow::default();
    let tol = 1e-10;
    let tv = zoo_preset::<f64>(
        "ie_timevarying",
        &params(&[("alpha", 1.0), ("beta", 1.0), ("xi", 1.0), ("w_amp", 0.5), ("w_freq", 1.0)]),
    )?
    .time_varying()
    .unwrap();
    let mut checks = Vec::new();
    for j in [0, 3] {
        for t in [0.5, 1.0, 2.0] {
            let a = nonhomogeneous_transient(&tv, j, t, &w, tol, Route::Direct)?;
            let b = nonhomogeneous_transient(&tv, j, t, &w, tol, Route::Decomposition)?;
            checks.push(Check::new(format!("ode vs decomposition j={j} t={t}"), a.max_abs_diff(&b), 1e-6));
        }
    }
    // first-visit density integrates to the first-visit CDF
    let horizon = 2.0;
    let breaks: Vec<f64> = (0..=8).map(|i| horizon * i as f64 / 8.0).collect();
    let integral = support::gl_integrate(
        |t| nonhomogeneous_first_visit_density_r(&tv, 2, t, &w, tol).unwrap(),
        &breaks,
    );
    let cdf = nonhomogeneous_first_visit_cdf_r(&tv, 2, &[horizon], &w, tol)?[0];
    checks.push(Check::new("first-visit density vs cdf", (integral - cdf).abs(), 1e-6));

    let spec = mm1();
    let flat = TimeVaryingSpec::from_homogeneous(&spec, 0.0);
    for j in [0, 3] {
        let a = nonhomogeneous_transient(&flat, j, 1.5, &w, tol, Route::Direct)?;
        let b = transient_cat(&spec, j, 1.5, &w, 1e-12, Route::Direct)?;
        checks.push(Check::new(format!("constant rates vs homogeneous j={j}"), a.max_abs_diff(&b), 1e-8));
    }
    for t in [0.5, 1.5] {
        let a = nonhomogeneous_first_visit_density_r(&flat, 2, t, &w, tol)?;
        let b = first_visit_density_r(&spec, 2, t, &w, 1e-12)?;
        checks.push(Check::new(format!("constant-rate density t={t}"), (a - b).abs(), 1e-8));
    }
    Ok(worst(&checks))
}

fn linear_mean() -> Outcome {
    let w = TruncationWindow::default();
    let mut checks = Vec::new();
    for (alpha, beta, xi) in [(1.0, 0.5, 0.5), (1.0, 1.0, 0.5)] {
        let spec = preset("ibd", &[("alpha", alpha), ("nu", 1.0), ("beta", beta), ("xi", xi)]);
        let p = A5Params::new(alpha, 1.0, beta, xi)?;
        for t in [0.5, 1.0, 2.0] {
            let m = conditional_mean_cat(&spec, 3, t, &w, 1e-12)?;
            let c = p.mean(3, t);
            checks.push(Check::new(
                format!("alpha={alpha} beta={beta} xi={xi} t={t}"),
                ((m - c) / c).abs(),
                1e-5,
            ));
        }
    }
    Ok(worst(&checks))
}

fn special_functions() -> Outcome {
    let tol = 10.0 * AccuracyBudget::<f64>::default().rel_tol;
    let rows = support::specfun_oracle_rows();
    let ok = rows.iter().all(|r| r.max_err <= tol);
    let w = rows.iter().max_by(|a, b| a.max_err.total_cmp(&b.max_err)).unwrap();
    Ok((
        ok,
        format!("{} functions x {} points, worst {:.2e} ({}) tol {tol:.0e}", rows.len(), support::GRID_POINTS, w.max_err, w.name),
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("decomposition identity", decomposition),
        ("resolvent and renewal identities", resolvent_and_renewal),
        ("first-visit transform", first_visit_transform),
        ("golden closed-form values", golden_values),
        ("monte carlo agreement", monte_carlo),
        ("minimum characterization (KS)", min_characterization),
        ("stationary distribution", stationary),
        ("representation theorems", representation),
        ("effective-catastrophe transforms", effective_catastrophe),
        ("time-varying routes", time_varying),
        ("linear birth-death mean", linear_mean),
        ("special functions vs oracles", special_functions),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let (ok, detail) = match catch_unwind(AssertUnwindSafe(run)) {
            Ok(Ok(r)) => r,
            Ok(Err(e)) => (false, format!("error: {e}")),
            Err(_) => (false, "panicked".into()),
        };
        if !ok {
            failed += 1;
        }
        println!("{} criterion {:>2} {name}: {detail}", if ok { "PASS" } else { "FAIL" }, i + 1);
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
