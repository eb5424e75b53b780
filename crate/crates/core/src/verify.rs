//! Cross-route identity checks on one homogeneous spec.

use crate::analysis::{general_representation, minimum_representation, stationary_distribution};
use crate::error::Result;
use crate::model::{ProcessSpec, TruncationWindow};
use crate::quadrature::{integrate, QuadOptions};
use crate::resolvent::{
    delta_transform, eta_direct, eta_transform, gamma_cat, resolvent_cat, DeltaForm, MState, ResolventRoute,
};
use crate::transient::{transient_cat, FirstVisitDensity, Route};

/// Outcome of one identity check.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, deviation: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            deviation,
            tolerance,
            // NaN deviations fail
            passed: deviation <= tolerance,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    /// Initial states; each is offset from the floor `r`.
    pub start_offsets: Vec<usize>,
    pub times: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub window: TruncationWindow<f64>,
    /// Tolerance handed to the uniformization engines.
    pub tol: f64,
    pub transient_tol: f64,
    pub transform_tol: f64,
    pub representation_tol: f64,
    pub laplace_tol: f64,
    pub residual_tol: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            start_offsets: vec![0, 3],
            times: vec![0.25, 1.0, 4.0],
            lambdas: vec![0.1, 1.0, 10.0],
            window: TruncationWindow::default(),
            tol: 1e-11,
            transient_tol: 1e-8,
            transform_tol: 1e-10,
            representation_tol: 1e-6,
            laplace_tol: 1e-6,
            residual_tol: 1e-10,
        }
    }
}

/// Entrywise relative deviation, floored at `1e-12` of the larger vector's scale so that
/// negligible tail entries do not dominate.
pub fn max_rel_dev(a: &[f64], b: &[f64]) -> f64 {
    let len = a.len().max(b.len());
    let get = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);
    let scale = a.iter().chain(b).fold(0.0f64, |m, x| m.max(x.abs()));
    let floor = scale * 1e-12;
    (0..len).fold(0.0, |m, i| {
        let (x, y) = (get(a, i), get(b, i));
        m.max((x - y).abs() / x.abs().max(y.abs()).max(floor).max(f64::MIN_POSITIVE))
    })
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Direct and decomposition transient routes.
pub fn check_decomposition(spec: &ProcessSpec<f64>, opts: &VerifyOptions) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for &d in &opts.start_offsets {
        let j = spec.r + d;
        for &t in &opts.times {
            let a = transient_cat(spec, j, t, &opts.window, opts.tol, Route::Direct)?;
            let b = transient_cat(spec, j, t, &opts.window, opts.tol, Route::Decomposition)?;
            out.push(Check::new(
                format!("decomposition j={j} t={t}"),
                a.max_abs_diff(&b),
                opts.transient_tol,
            ));
        }
    }
    Ok(out)
}

/// Resolvent reduction against a direct solve, and the renewal identity
/// `π_{j,k}(λ) = γ_{j,k}(λ) π_{k,k}(λ)`.
pub fn check_resolvent(spec: &ProcessSpec<f64>, opts: &VerifyOptions) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for &d in &opts.start_offsets {
        let j = spec.r + d;
        for &lambda in &opts.lambdas {
            let a = resolvent_cat(spec, j, lambda, &opts.window, ResolventRoute::Reduction)?;
            let b = resolvent_cat(spec, j, lambda, &opts.window, ResolventRoute::Direct)?;
            out.push(Check::new(
                format!("resolvent j={j} lambda={lambda}"),
                max_rel_dev(&a.values, &b.values),
                opts.transform_tol,
            ));
            let k = if d == 0 { spec.r + 2 } else { spec.r };
            let kk = resolvent_cat(spec, k, lambda, &opts.window, ResolventRoute::Reduction)?;
            let g = gamma_cat(spec, j, k, lambda, &opts.window)?;
            out.push(Check::new(
                format!("renewal j={j} k={k} lambda={lambda}"),
                rel(a.value(k), g * kk.value(k)),
                opts.transform_tol,
            ));
        }
    }
    Ok(out)
}

/// Both forms of the effective-catastrophe transform, and `η` against a direct solve.
pub fn check_effective_catastrophe(spec: &ProcessSpec<f64>, opts: &VerifyOptions) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for &d in &opts.start_offsets {
        let j = spec.r + d;
        for &lambda in &opts.lambdas {
            if j > spec.r {
                let a = delta_transform(spec, j, lambda, &opts.window, DeltaForm::Cemetery)?;
                let b = delta_transform(spec, j, lambda, &opts.window, DeltaForm::FirstVisit)?;
                out.push(Check::new(format!("delta forms j={j} lambda={lambda}"), rel(a, b), opts.transform_tol));
            }
            let direct = eta_direct(spec, j, lambda, &opts.window)?;
            let mut dev = rel(
                eta_transform(spec, j, MState::Cemetery, lambda, &opts.window)?,
                direct.cemetery.unwrap_or(f64::NAN),
            );
            let formula: Vec<f64> = (0..direct.values.len())
                .map(|i| eta_transform(spec, j, MState::State(spec.r + i), lambda, &direct.window))
                .collect::<Result<_>>()?;
            dev = dev.max(max_rel_dev(&formula, &direct.values));
            out.push(Check::new(format!("eta j={j} lambda={lambda}"), dev, opts.transform_tol));
        }
    }
    Ok(out)
}

/// Minimum and general representations against the direct transient law.
pub fn check_representation(spec: &ProcessSpec<f64>, opts: &VerifyOptions) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for &d in &opts.start_offsets {
        let j = spec.r + d;
        for &t in &opts.times {
            let direct = transient_cat(spec, j, t, &opts.window, opts.tol, Route::Direct)?;
            let rep = if d == 0 {
                minimum_representation(spec, t, &opts.window, opts.tol)?
            } else {
                general_representation(spec, j, t, &opts.window, opts.tol)?
            };
            out.push(Check::new(
                format!("representation j={j} t={t}"),
                direct.max_abs_diff(&rep),
                opts.representation_tol,
            ));
        }
    }
    Ok(out)
}

pub fn check_stationary(spec: &ProcessSpec<f64>, opts: &VerifyOptions) -> Result<Vec<Check>> {
    let st = stationary_distribution(spec, &opts.window)?;
    Ok(vec![
        Check::new("stationary balance residual", st.residual, opts.residual_tol),
        Check::new("stationary total", (st.total() - 1.0).abs(), opts.window.tail_tol),
    ])
}

/// `∫_0^∞ e^{-λt} g_{j,k}(t) dt` by quadrature of the numerical density, truncated where
/// `e^{-λt}` drops below `tol · 1e-3`.
pub fn laplace_of_density(
    spec: &ProcessSpec<f64>,
    j: usize,
    k: usize,
    lambda: f64,
    window: &TruncationWindow<f64>,
    tol: f64,
) -> Result<f64> {
    let horizon = -(tol * 1e-3).ln() / lambda;
    let mut g = FirstVisitDensity::new(spec, j, k, horizon, window, tol * 1e-3)?;
    let q = integrate(
        |t| (-lambda * t).exp() * g.at(t),
        0.0,
        horizon,
        QuadOptions {
            abs_tol: tol * 1e-2,
            rel_tol: tol * 1e-2,
            max_intervals: 4000,
        },
    )?;
    Ok(q.value)
}

/// `γ_{j,k}(λ)` from the transform identity against the transformed time-domain density.
pub fn check_first_visit_transform(
    spec: &ProcessSpec<f64>,
    pairs: &[(usize, usize)],
    lambdas: &[f64],
    opts: &VerifyOptions,
) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for &(j, k) in pairs {
        out.push(Check::new(
            format!("first-visit transform at 0 j={j} k={k}"),
            (gamma_cat(spec, j, k, 0.0, &opts.window)? - 1.0).abs(),
            0.0,
        ));
        for &lambda in lambdas {
            let a = gamma_cat(spec, j, k, lambda, &opts.window)?;
            let b = laplace_of_density(spec, j, k, lambda, &opts.window, opts.laplace_tol)?;
            out.push(Check::new(
                format!("first-visit transform j={j} k={k} lambda={lambda}"),
                (a - b).abs(),
                opts.laplace_tol,
            ));
        }
    }
    Ok(out)
}

/// Every check above on one spec.
pub fn verify_identities(spec: &ProcessSpec<f64>, opts: &VerifyOptions) -> Result<VerifyReport> {
    let mut checks = Vec::new();
    checks.extend(check_decomposition(spec, opts)?);
    checks.extend(check_resolvent(spec, opts)?);
    checks.extend(check_effective_catastrophe(spec, opts)?);
    checks.extend(check_representation(spec, opts)?);
    checks.extend(check_stationary(spec, opts)?);
    let r = spec.r;
    checks.extend(check_first_visit_transform(
        spec,
        &[(r + 2, r), (r, r + 2)],
        &[1.0],
        opts,
    )?);
    Ok(VerifyReport { checks })
}
