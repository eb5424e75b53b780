//! Forward equations of the time-varying process, integrated with an explicit RK method.

use super::{At, DistributionVector, Method, Route};
use crate::error::{EngineError, Result};
use crate::model::{TimeVaryingSpec, TruncationWindow, MAX_WINDOW};
use crate::ode::{solve_dp45, OdeOptions};
use crate::quadrature::{integrate, integrate_vec, QuadOptions};
use crate::scalar::Real;

#[derive(Clone, Copy)]
struct Chain {
    upper: usize,
    with_catastrophes: bool,
    absorb_floor: bool,
}

fn rhs<'a, T: Real>(spec: &'a TimeVaryingSpec<T>, chain: Chain) -> impl FnMut(T, &[T], &mut [T]) + 'a {
    let r = spec.r;
    let d = chain.upper + 1;
    let mut up = vec![T::zero(); d];
    let mut down = vec![T::zero(); d];
    move |t, y, dy| {
        let xi = if chain.with_catastrophes { spec.xi(t) } else { T::zero() };
        for i in 0..d {
            up[i] = if i < chain.upper { spec.birth(r + i, t) } else { T::zero() };
            down[i] = spec.death(r + i, t);
        }
        if chain.absorb_floor {
            up[0] = T::zero();
        }
        let mut caught = T::zero();
        for i in 0..d {
            let jump = if i > 0 { xi } else { T::zero() };
            let mut v = -(up[i] + down[i] + jump) * y[i];
            if i > 0 {
                v = v + up[i - 1] * y[i - 1];
            }
            if i + 1 < d {
                v = v + down[i + 1] * y[i + 1];
            }
            dy[i] = v;
            caught = caught + jump * y[i];
        }
        dy[0] = dy[0] + caught;
    }
}

fn upper_half_mass<T: Real>(y: &[T]) -> T {
    let upper = y.len() - 1;
    y.iter().enumerate().filter(|(i, _)| i * 2 > upper).map(|(_, &p)| p).sum()
}

fn solve_on<T: Real>(
    spec: &TimeVaryingSpec<T>,
    chain: Chain,
    j: usize,
    from: T,
    times: &[T],
    tol: T,
) -> Result<Vec<Vec<T>>> {
    let mut y0 = vec![T::zero(); chain.upper + 1];
    y0[j - spec.r] = T::one();
    let ode_tol = tol * T::lit(0.1);
    let mut out = solve_dp45(rhs(spec, chain), from, &y0, times, OdeOptions::with_tol(ode_tol))?;
    for y in out.iter_mut() {
        for p in y.iter_mut() {
            *p = p.max(T::zero());
        }
    }
    Ok(out)
}

/// Doubles the window until the upper half holds less than `tail_tol / 10` at every time.
fn certified<T: Real>(
    spec: &TimeVaryingSpec<T>,
    mut chain: Chain,
    j: usize,
    times: &[T],
    window: &TruncationWindow<T>,
    tol: T,
) -> Result<(TruncationWindow<T>, Vec<Vec<T>>)> {
    let mut w = window.covering(spec.r, j);
    w.index(spec.r, j)?;
    loop {
        chain.upper = w.upper;
        let ys = solve_on(spec, chain, j, spec.t0, times, tol)?;
        let tail = ys.iter().fold(T::zero(), |m, y| m.max(upper_half_mass(y)));
        if tail <= w.tail_tol * T::lit(0.1) || !w.adaptive {
            return Ok((w, ys));
        }
        if w.upper * 2 > MAX_WINDOW {
            return Err(EngineError::WindowOverflow {
                upper: w.upper,
                tail_mass: tail.as_f64(),
            });
        }
        w.upper *= 2;
    }
}

/// `∫_a^b ξ(u) du`.
pub fn cumulative_intensity<T: Real>(spec: &TimeVaryingSpec<T>, a: T, b: T, tol: T) -> Result<T> {
    if b <= a {
        return Ok(T::zero());
    }
    let q = integrate(
        |u| spec.xi(u),
        a,
        b,
        QuadOptions {
            abs_tol: tol * T::lit(1e-3),
            rel_tol: tol * T::lit(1e-2),
            max_intervals: 2000,
        },
    )?;
    Ok(q.value)
}

fn check_times<T: Real>(spec: &TimeVaryingSpec<T>, times: &[T]) -> Result<()> {
    let mut prev = spec.t0;
    for &t in times {
        if !(t >= prev && t.is_finite()) {
            return Err(EngineError::InvalidArgument(format!(
                "times must be finite, nondecreasing and not before t0 = {}",
                spec.t0
            )));
        }
        prev = t;
    }
    Ok(())
}

/// Distribution at `t` of the time-varying process started from `j` at `t0`.
pub fn nonhomogeneous_transient<T: Real>(
    spec: &TimeVaryingSpec<T>,
    j: usize,
    t: T,
    window: &TruncationWindow<T>,
    tol: T,
    route: Route,
) -> Result<DistributionVector<T>> {
    check_times(spec, &[t])?;
    let chain = Chain {
        upper: window.upper,
        with_catastrophes: true,
        absorb_floor: false,
    };
    let (w, mass, method, err) = match route {
        Route::Direct => {
            let (w, mut ys) = certified(spec, chain, j, &[t], window, tol)?;
            (w, ys.remove(0), Method::Ode, tol)
        }
        Route::Decomposition => {
            let hat = Chain {
                with_catastrophes: false,
                ..chain
            };
            // certify the catastrophe-free chain from the floor over the full span, then from j
            let (w, _) = certified(spec, hat, spec.r, &[t], window, tol)?;
            let (w, mut ys) = certified(spec, hat, j, &[t], &w, tol)?;
            let hat = Chain { upper: w.upper, ..hat };
            let survive = (-cumulative_intensity(spec, spec.t0, t, tol)?).exp();
            let mut mass: Vec<T> = ys.remove(0).into_iter().map(|p| survive * p).collect();
            let mut err = tol;
            if t > spec.t0 {
                let mut failure = None;
                let q = integrate_vec(
                    |tau: T| {
                        let weight = spec.xi(tau)
                            * (-cumulative_intensity(spec, tau, t, tol).unwrap_or(T::zero())).exp();
                        match solve_on(spec, hat, spec.r, tau, &[t], tol) {
                            Ok(mut y) => y.remove(0).into_iter().map(|p| weight * p).collect(),
                            Err(e) => {
                                failure.get_or_insert(e);
                                vec![T::zero(); hat.upper + 1]
                            }
                        }
                    },
                    spec.t0,
                    t,
                    hat.upper + 1,
                    QuadOptions::absolute(tol * T::lit(0.25)),
                )?;
                if let Some(e) = failure {
                    return Err(e);
                }
                for (m, v) in mass.iter_mut().zip(q.value) {
                    *m = *m + v;
                }
                err = err + q.error;
            }
            (w, mass, Method::Decomposition, err)
        }
    };
    let total: T = mass.iter().copied().sum();
    Ok(DistributionVector {
        r: spec.r,
        window: w,
        at: At::Time(t),
        mass,
        defect: (T::one() - total).max(T::zero()),
        method,
        error_estimate: err,
    })
}

/// Catastrophe-free r-avoiding law from `j`: returns `(ĝ(t), Ĝ(t))` per time.
fn taboo_floor<T: Real>(
    spec: &TimeVaryingSpec<T>,
    j: usize,
    times: &[T],
    window: &TruncationWindow<T>,
    tol: T,
) -> Result<Vec<(T, T)>> {
    if j <= spec.r {
        return Err(EngineError::InvalidArgument(format!(
            "initial state {j} must lie above the floor {}",
            spec.r
        )));
    }
    check_times(spec, times)?;
    let chain = Chain {
        upper: window.upper,
        with_catastrophes: false,
        absorb_floor: true,
    };
    let (_, ys) = certified(spec, chain, j, times, window, tol)?;
    Ok(ys
        .iter()
        .zip(times)
        .map(|(y, &t)| (spec.death(spec.r + 1, t) * y[1], y[0]))
        .collect())
}

/// Density of the first visit to `r` from `j > r`:
/// `e^{-Ξ} ĝ(t|t0) + ξ(t) e^{-Ξ} (1 - Ĝ(t|t0))` with `Ξ = ∫_{t0}^t ξ`.
pub fn nonhomogeneous_first_visit_density_r<T: Real>(
    spec: &TimeVaryingSpec<T>,
    j: usize,
    t: T,
    window: &TruncationWindow<T>,
    tol: T,
) -> Result<T> {
    let (g_hat, cdf_hat) = taboo_floor(spec, j, &[t], window, tol)?[0];
    let survive = (-cumulative_intensity(spec, spec.t0, t, tol)?).exp();
    Ok(survive * g_hat + spec.xi(t) * survive * (T::one() - cdf_hat))
}

/// `P(T_{j,r} ≤ t | t0)` at each of `times` (nondecreasing).
pub fn nonhomogeneous_first_visit_cdf_r<T: Real>(
    spec: &TimeVaryingSpec<T>,
    j: usize,
    times: &[T],
    window: &TruncationWindow<T>,
    tol: T,
) -> Result<Vec<T>> {
    let laws = taboo_floor(spec, j, times, window, tol)?;
    let mut acc = T::zero();
    let mut prev = spec.t0;
    let mut out = Vec::with_capacity(times.len());
    for (&t, &(_, cdf_hat)) in times.iter().zip(&laws) {
        acc = acc + cumulative_intensity(spec, prev, t, tol)?;
        prev = t;
        out.push(T::one() - (-acc).exp() * (T::one() - cdf_hat));
    }
    Ok(out)
}
