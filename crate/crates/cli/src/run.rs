//! One function per task. Each returns a table plus summary scalars.

use anyhow::{anyhow, bail, Context, Result};
use catabird::analysis::{catastrophe_mean, first_visit_stats, stationary_distribution};
use catabird::model::{Preset, PresetName, ProcessSpec, TimeVaryingSpec, TruncationWindow};
use catabird::montecarlo::{
    estimate_catastrophe_time, estimate_first_visit, estimate_first_visit_tv, estimate_stationary, simulate_path,
    TimeEstimate,
};
use catabird::resolvent::{delta_transform, gamma_cat, DeltaForm};
use catabird::transient::{
    first_visit_cdf_cat, first_visit_density, nonhomogeneous_first_visit_cdf_r, nonhomogeneous_first_visit_density_r,
    nonhomogeneous_transient, transient_cat, DistributionVector, Route,
};
use catabird::verify::{verify_identities, Check, VerifyOptions};
use serde_json::Value;

use crate::config::{Quantity, RunConfig, TaskConfig};
use crate::output::{num, Cell, Report, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Stationary,
    Transient,
    FirstVisit,
    Catastrophe,
    Simulate,
    Verify,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Stationary => "stationary",
            Task::Transient => "transient",
            Task::FirstVisit => "first-visit",
            Task::Catastrophe => "catastrophe",
            Task::Simulate => "simulate",
            Task::Verify => "verify",
        }
    }
}

struct Ctx<'a> {
    task: &'a TaskConfig,
    window: TruncationWindow<f64>,
}

impl Ctx<'_> {
    fn j(&self, r: usize) -> usize {
        self.task.j.unwrap_or(r)
    }

    fn k(&self, r: usize) -> usize {
        self.task.k.unwrap_or(r)
    }
}

fn homogeneous(preset: Preset<f64>, task: Task) -> Result<ProcessSpec<f64>> {
    preset
        .homogeneous()
        .ok_or_else(|| anyhow!("{}: needs a time-homogeneous model", task.name()))
}

/// Runs `task` on the model and task settings of `cfg`.
pub fn run_task(cfg: &RunConfig, task: Task) -> Result<Report> {
    let preset = cfg.model.build().context("model")?;
    let ctx = Ctx {
        task: &cfg.task,
        window: TruncationWindow::new(64, cfg.task.tail_tol)?,
    };
    let mut report = match task {
        Task::Stationary => stationary(&homogeneous(preset, task)?, &ctx),
        Task::Transient => transient(preset, &ctx),
        Task::FirstVisit => first_visit(preset, &ctx),
        Task::Catastrophe => catastrophe(&homogeneous(preset, task)?, &ctx),
        Task::Simulate => simulate(preset, &ctx),
        Task::Verify => verify(preset, &ctx),
    }?;
    report.set_num("tol", cfg.task.tol);
    report.set_num("tail_tol", cfg.task.tail_tol);
    Ok(report)
}

fn stationary(spec: &ProcessSpec<f64>, ctx: &Ctx) -> Result<Report> {
    let st = stationary_distribution(spec, &ctx.window).context("analysis: stationary distribution")?;
    let top = ctx.task.n_max.map_or(st.q.len() - 1, |n| n.min(st.q.len() - 1));
    let mut table = Table::new(&["n", "q_n"]);
    for (i, &q) in st.q.iter().enumerate().take(top + 1) {
        table.push(vec![(spec.r + i).into(), q.into()]);
    }
    let mut report = Report::new("stationary", table);
    report.set_num("residual", st.residual);
    report.set_num("total", st.total());
    report.set_num("tail_bound", st.tail_bound());
    report.set("window_upper", st.window.upper);
    report.set("r", spec.r);
    Ok(report)
}

fn push_distribution(table: &mut Table, t: f64, dv: &DistributionVector<f64>, n_max: Option<usize>) {
    let top = n_max.map_or(dv.mass.len() - 1, |n| n.min(dv.mass.len() - 1));
    for (i, &p) in dv.mass.iter().enumerate().take(top + 1) {
        table.push(vec![t.into(), (dv.r + i).into(), p.into()]);
    }
}

fn transient(preset: Preset<f64>, ctx: &Ctx) -> Result<Report> {
    let task = ctx.task;
    let route: Route = task.route.into();
    let mut table = Table::new(&["t", "n", "p"]);
    let (mut means, mut totals, mut errors, mut uppers) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for &t in &task.times {
        let dv = match &preset {
            Preset::Homogeneous(spec) => transient_cat(spec, ctx.j(spec.r), t, &ctx.window, task.tol, route),
            Preset::TimeVarying(spec) => nonhomogeneous_transient(spec, ctx.j(spec.r), t, &ctx.window, task.tol, route),
        }
        .with_context(|| format!("transient: t = {t}"))?;
        push_distribution(&mut table, t, &dv, task.n_max);
        means.push(num(dv.mean()));
        totals.push(num(dv.total()));
        errors.push(num(dv.error_estimate));
        uppers.push(Value::from(dv.window.upper));
    }
    let mut report = Report::new("transient", table);
    report.set("times", task.times.iter().map(|&t| num(t)).collect::<Vec<_>>());
    report.set("mean", means);
    report.set("total", totals);
    report.set("error_estimate", errors);
    report.set("window_upper", uppers);
    report.set("route", format!("{:?}", task.route).to_lowercase());
    Ok(report)
}

fn first_visit(preset: Preset<f64>, ctx: &Ctx) -> Result<Report> {
    let task = ctx.task;
    let mut table = Table::new(&["t", "cdf", "density"]);
    let mut report;
    match &preset {
        Preset::Homogeneous(spec) => {
            let (j, k) = (ctx.j(spec.r), ctx.k(spec.r));
            if j == k {
                bail!("task.j and task.k must differ (both are {j})");
            }
            for &t in &task.times {
                let f = first_visit_cdf_cat(spec, j, k, t, &ctx.window, task.tol).context("transient: first-visit cdf")?;
                let g = first_visit_density(spec, j, k, t, &ctx.window, task.tol)
                    .context("transient: first-visit density")?;
                table.push(vec![t.into(), f.into(), g.into()]);
            }
            report = Report::new("first-visit", table);
            report.set("j", j);
            report.set("k", k);
            if spec.xi > 0.0 {
                let s = first_visit_stats(spec, j, k, &ctx.window).context("analysis: first-visit moments")?;
                report.set_num("mean", s.mean);
                report.set_num("variance", s.variance);
                report.set_num("transform_at_xi", s.transform_at_xi);
                let mut gammas = Vec::new();
                for &l in &task.lambdas {
                    let g = gamma_cat(spec, j, k, l, &ctx.window).context("resolvent: first-visit transform")?;
                    gammas.push(serde_json::json!({ "lambda": num(l), "gamma": num(g) }));
                }
                report.set("transform", gammas);
            }
        }
        Preset::TimeVarying(spec) => {
            let j = ctx.j(spec.r);
            if ctx.k(spec.r) != spec.r {
                bail!("task.k: time-varying first visits are to the floor state {}", spec.r);
            }
            let cdf = nonhomogeneous_first_visit_cdf_r(spec, j, &task.times, &ctx.window, task.tol)
                .context("transient: time-varying first-visit cdf")?;
            for (&t, f) in task.times.iter().zip(cdf) {
                let g = if t > spec.t0 {
                    nonhomogeneous_first_visit_density_r(spec, j, t, &ctx.window, task.tol)
                        .context("transient: time-varying first-visit density")?
                } else {
                    f64::NAN
                };
                table.push(vec![t.into(), f.into(), if g.is_nan() { Cell::Empty } else { g.into() }]);
            }
            report = Report::new("first-visit", table);
            report.set("j", j);
            report.set("k", spec.r);
        }
    }
    Ok(report)
}

fn catastrophe(spec: &ProcessSpec<f64>, ctx: &Ctx) -> Result<Report> {
    let j = ctx.j(spec.r);
    let mut table = Table::new(&["lambda", "delta"]);
    for &l in &ctx.task.lambdas {
        let d = delta_transform(spec, j, l, &ctx.window, DeltaForm::Cemetery)
            .context("resolvent: effective-catastrophe transform")?;
        table.push(vec![l.into(), d.into()]);
    }
    let mut report = Report::new("catastrophe", table);
    report.set("j", j);
    report.set_num(
        "mean",
        catastrophe_mean(spec, j, &ctx.window).context("analysis: effective-catastrophe mean")?,
    );
    Ok(report)
}

fn time_table(est: &TimeEstimate, times: &[f64]) -> Table {
    let s = est.summary;
    let mut table = Table::new(&["statistic", "t", "value", "se"]);
    table.push(vec!["mean".into(), Cell::Empty, s.mean.into(), s.se_mean.into()]);
    table.push(vec!["variance".into(), Cell::Empty, s.variance.into(), s.se_variance.into()]);
    for &t in times {
        let (f, se) = est.ecdf(t);
        table.push(vec!["cdf".into(), t.into(), f.into(), se.into()]);
    }
    table
}

fn time_report(est: &TimeEstimate, task: &TaskConfig) -> Report {
    let s = est.summary;
    let mut report = Report::new("simulate", time_table(est, &task.times));
    report.set("samples", s.n);
    report.set("censored", s.censored);
    report.set_num("mean", s.mean);
    report.set_num("se_mean", s.se_mean);
    report.set_num("variance", s.variance);
    report.set_num("se_variance", s.se_variance);
    report
}

fn simulate(preset: Preset<f64>, ctx: &Ctx) -> Result<Report> {
    let task = ctx.task;
    let mc = |e: catabird::Error| anyhow!("montecarlo: {e}");
    let mut report = match (&preset, task.quantity) {
        (Preset::Homogeneous(spec), Quantity::FirstVisit) => {
            let (j, k) = (ctx.j(spec.r), ctx.k(spec.r));
            if j == k {
                bail!("task.j and task.k must differ (both are {j})");
            }
            time_report(&estimate_first_visit(spec, j, k, task.n_paths, task.seed).map_err(mc)?, task)
        }
        (Preset::TimeVarying(spec), Quantity::FirstVisit) => {
            if ctx.k(spec.r) != spec.r {
                bail!("task.k: time-varying first visits are to the floor state {}", spec.r);
            }
            let est = estimate_first_visit_tv(spec, ctx.j(spec.r), task.n_paths, task.seed).map_err(mc)?;
            time_report(&est, task)
        }
        (Preset::Homogeneous(spec), Quantity::Catastrophe) => {
            time_report(&estimate_catastrophe_time(spec, ctx.j(spec.r), task.n_paths, task.seed).map_err(mc)?, task)
        }
        (Preset::Homogeneous(spec), Quantity::Stationary) => {
            let est = estimate_stationary(spec, ctx.j(spec.r), task.burn_in, task.horizon, task.seed).map_err(mc)?;
            let mut table = Table::new(&["n", "occupancy", "se"]);
            let top = task.n_max.map_or(est.occupancy.len(), |n| (n + 1).min(est.occupancy.len()));
            for i in 0..top {
                table.push(vec![(est.r + i).into(), est.occupancy[i].into(), est.se[i].into()]);
            }
            let mut report = Report::new("simulate", table);
            report.set("batches", est.batches);
            report.set("censored", est.censored);
            report.set_num("burn_in", task.burn_in);
            report.set_num("horizon", task.horizon);
            report
        }
        (Preset::Homogeneous(spec), Quantity::Path) => {
            let path = simulate_path(spec, ctx.j(spec.r), task.horizon, task.seed).map_err(mc)?;
            let mut table = Table::new(&["time", "state", "label"]);
            for jump in &path.jumps {
                table.push(vec![jump.time.into(), jump.state.into(), jump.label.as_str().into()]);
            }
            let mut report = Report::new("simulate", table);
            report.set("jumps", path.jumps.len());
            report.set("censored", path.censored);
            report.set_num("horizon", path.horizon);
            report
        }
        (Preset::TimeVarying(_), q) => bail!("task.quantity: {q:?} is not available for time-varying models"),
    };
    report.set("quantity", format!("{:?}", task.quantity));
    report.set("seed", task.seed);
    report.set("n_paths", task.n_paths);
    Ok(report)
}

fn check_rows(checks: &[Check]) -> Table {
    let mut table = Table::new(&["check", "deviation", "tolerance", "passed"]);
    for c in checks {
        table.push(vec![c.name.as_str().into(), c.deviation.into(), c.tolerance.into(), c.passed.into()]);
    }
    table
}

fn verify_time_varying(spec: &TimeVaryingSpec<f64>, ctx: &Ctx) -> Result<Vec<Check>> {
    let task = ctx.task;
    let j = ctx.j(spec.r);
    let engine_tol = task.tol * 1e-2;
    let mut checks = Vec::new();
    for &t in &task.times {
        let a = nonhomogeneous_transient(spec, j, t, &ctx.window, engine_tol, Route::Direct)
            .context("transient: time-varying ode route")?;
        let b = nonhomogeneous_transient(spec, j, t, &ctx.window, engine_tol, Route::Decomposition)
            .context("transient: time-varying decomposition route")?;
        checks.push(Check::new(format!("ode vs decomposition j={j} t={t}"), a.max_abs_diff(&b), task.tol));
    }
    Ok(checks)
}

fn verify(preset: Preset<f64>, ctx: &Ctx) -> Result<Report> {
    let checks = match &preset {
        Preset::Homogeneous(spec) => {
            let opts = VerifyOptions {
                times: ctx.task.times.clone(),
                lambdas: ctx.task.lambdas.clone(),
                window: ctx.window,
                transient_tol: ctx.task.tol,
                ..VerifyOptions::default()
            };
            verify_identities(spec, &opts).context("verify")?.checks
        }
        Preset::TimeVarying(spec) => verify_time_varying(spec, ctx)?,
    };
    let failed = checks.iter().filter(|c| !c.passed).count();
    let mut report = Report::new("verify", check_rows(&checks));
    report.set("checks", checks.len());
    report.set("failed", failed);
    report.set("all_passed", failed == 0);
    report.passed = Some(failed == 0);
    Ok(report)
}

/// `name,required,optional,description` for every preset.
pub fn zoo_table() -> Table {
    let mut table = Table::new(&["name", "required", "optional", "description"]);
    for p in PresetName::ALL {
        let (req, opt) = p.params();
        let opt: Vec<String> = opt.iter().map(|(k, v)| format!("{k}={v}")).collect();
        table.push(vec![p.as_str().into(), req.join(" ").into(), opt.join(" ").into(), p.description().into()]);
    }
    table
}
