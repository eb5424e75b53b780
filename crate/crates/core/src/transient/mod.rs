//! Time-domain transition probabilities, taboo probabilities and first-visit laws.

pub mod nonhomogeneous;
mod uniformize;

pub(crate) use uniformize::Uniformizer;

use crate::error::{EngineError, Result};
use crate::model::{truncated_generator, Generator, GeneratorVariant, ProcessSpec, TruncationWindow, MAX_WINDOW};
use crate::quadrature::{integrate, integrate_vec, QuadOptions};
use crate::scalar::Real;

pub use nonhomogeneous::{
    nonhomogeneous_first_visit_cdf_r, nonhomogeneous_first_visit_density_r, nonhomogeneous_transient,
};

/// Where a distribution was evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum At<T> {
    Time(T),
    Lambda(T),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Uniformization,
    Decomposition,
    Ode,
    ClosedForm,
    Representation,
}

/// Which identity a probability is computed through.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Route {
    /// Directly on the generator with catastrophes.
    #[default]
    Direct,
    /// From the catastrophe-free process, mixing over the last catastrophe time.
    Decomposition,
}

/// Probability mass over a window, plus the absorbed or lost mass.
#[derive(Debug, Clone)]
pub struct DistributionVector<T = f64> {
    pub r: usize,
    pub window: TruncationWindow<T>,
    pub at: At<T>,
    /// `mass[i]` is the probability of state `r + i`.
    pub mass: Vec<T>,
    pub defect: T,
    pub method: Method,
    pub error_estimate: T,
}

impl<T: Real> DistributionVector<T> {
    pub fn prob(&self, n: usize) -> T {
        if n < self.r {
            return T::zero();
        }
        self.mass.get(n - self.r).copied().unwrap_or(T::zero())
    }

    pub fn total(&self) -> T {
        self.mass.iter().copied().sum()
    }

    pub fn states(&self) -> impl Iterator<Item = (usize, T)> + '_ {
        self.mass.iter().enumerate().map(move |(i, &p)| (self.r + i, p))
    }

    pub fn mean(&self) -> T {
        self.states().fold(T::zero(), |s, (n, p)| s + T::from_usize_lossy(n) * p)
    }

    /// Largest absolute entrywise difference, treating missing states as zero.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        let hi = (self.r + self.mass.len()).max(other.r + other.mass.len());
        let lo = self.r.min(other.r);
        (lo..hi).fold(T::zero(), |m, n| m.max((self.prob(n) - other.prob(n)).abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum TailWeight {
    Mass,
    Mean,
}

/// Measure of the upper half of the window relative to the whole, under `weight`.
fn upper_half_share<T: Real>(gen: &Generator<T>, v: &[T], weight: TailWeight) -> T {
    let off = gen.offset();
    let upper = gen.dim() - 1 - off;
    let mut tail = T::zero();
    let mut total = T::zero();
    for (i, &p) in v.iter().enumerate().skip(off) {
        let w = match weight {
            TailWeight::Mass => p,
            TailWeight::Mean => p * T::from_usize_lossy(gen.r + i - off),
        };
        total = total + w;
        if (i - off) * 2 > upper {
            tail = tail + w;
        }
    }
    match weight {
        TailWeight::Mass => tail,
        TailWeight::Mean => tail / total.max(T::one()),
    }
}

/// Result of a certified uniformization run.
pub(crate) struct Certified<T> {
    pub window: TruncationWindow<T>,
    pub gen: Generator<T>,
    pub values: Vec<Vec<T>>,
    pub error: T,
}

pub(crate) fn point_mass<T: Real>(gen: &Generator<T>, n: usize) -> Vec<T> {
    let mut p = vec![T::zero(); gen.dim()];
    p[gen.index_of(n)] = T::one();
    p
}

/// Uniformization from `j` at every time in `times`, doubling the window until the upper
/// half carries less than `tail_tol / 10` (unless the window is fixed).
pub(crate) fn certified_times<T: Real>(
    spec: &ProcessSpec<T>,
    variant: GeneratorVariant,
    j: usize,
    times: &[T],
    window: &TruncationWindow<T>,
    tol: T,
    weight: TailWeight,
) -> Result<Certified<T>> {
    let mut w = window.covering(spec.r, j);
    if let GeneratorVariant::TabooAbsorbing(k) = variant {
        w = w.covering(spec.r, k);
    }
    w.index(spec.r, j)?;
    loop {
        let gen = truncated_generator(spec, &w, variant)?;
        let p0 = point_mass(&gen, j);
        let (values, trunc) = uniformize::uniformize_times(&gen, &p0, times, tol * T::lit(0.5));
        let tail = values
            .iter()
            .fold(T::zero(), |m, v| m.max(upper_half_share(&gen, v, weight)));
        if tail <= w.tail_tol * T::lit(0.1) || !w.adaptive {
            return Ok(Certified {
                window: w,
                gen,
                values,
                error: trunc + tail,
            });
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

fn check_time<T: Real>(t: T) -> Result<()> {
    if !(t >= T::zero() && t.is_finite()) {
        return Err(EngineError::InvalidArgument(format!("time must be finite and nonnegative, got {t}")));
    }
    Ok(())
}

fn distribution<T: Real>(
    cert_window: TruncationWindow<T>,
    gen: &Generator<T>,
    full: Vec<T>,
    t: T,
    method: Method,
    error: T,
) -> DistributionVector<T> {
    let off = gen.offset();
    let mut mass = full;
    let mut defect = T::zero();
    match gen.variant {
        GeneratorVariant::ModifiedM => {
            defect = mass.remove(0);
        }
        GeneratorVariant::TabooAbsorbing(k) => {
            let ki = gen.index_of(k) - off;
            defect = mass[ki];
            mass[ki] = T::zero();
        }
        _ => {}
    }
    if matches!(gen.variant, GeneratorVariant::WithCatastrophes | GeneratorVariant::Hat) {
        let total: T = mass.iter().copied().sum();
        defect = (T::one() - total).max(T::zero());
    }
    DistributionVector {
        r: gen.r,
        window: cert_window,
        at: At::Time(t),
        mass,
        defect,
        method,
        error_estimate: error,
    }
}

/// Distribution of the catastrophe-free process started at `j`, at each time of `times`.
pub fn transient_hat_grid<T: Real>(
    spec: &ProcessSpec<T>,
    j: usize,
    times: &[T],
    window: &TruncationWindow<T>,
    tol: T,
) -> Result<Vec<DistributionVector<T>>> {
    times.iter().try_for_each(|&t| check_time(t))?;
    let c = certified_times(spec, GeneratorVariant::Hat, j, times, window, tol, TailWeight::Mass)?;
    Ok(c.values
        .into_iter()
        .zip(times)
        .map(|(v, &t)| distribution(c.window, &c.gen, v, t, Method::Uniformization, c.error))
        .collect())
}

/// Distribution of the catastrophe-free process started at `j`, at time `t`.
pub fn transient_hat<T: Real>(
    spec: &ProcessSpec<T>,
    j: usize,
    t: T,
    window: &TruncationWindow<T>,
    tol: T,
) -> Result<DistributionVector<T>> {
    Ok(transient_hat_grid(spec, j, &[t], window, tol)?.remove(0))
}

/// Distribution of the process with catastrophes started at `j`, at each time of `times`.
pub fn transient_cat_grid<T: Real>(
    spec: &ProcessSpec<T>,
    j: usize,
    times: &[T],
    window: &TruncationWindow<T>,
    tol: T,
    route: Route,
) -> Result<Vec<DistributionVector<T>>> {
    times.iter().try_for_each(|&t| check_time(t))?;
    match route {
        Route::Direct => {
            let c = certified_times(spec, GeneratorVariant::WithCatastrophes, j, times, window, tol, TailWeight::Mass)?;
            Ok(c.values
                .into_iter()
                .zip(times)
                .map(|(v, &t)| distribution(c.window, &c.gen, v, t, Method::Uniformization, c.error))
                .collect())
        }
        Route::Decomposition => decomposition_grid(spec, j, times, window, tol),
    }
}

/// Distribution of the process with catastrophes started at `j`, at time `t`.
pub fn transient_cat<T: Real>(
    spec: &ProcessSpec<T>,
    j: usize,
    t: T,
    window: &TruncationWindow<T>,
    tol: T,
    route: Route,
) -> Result<DistributionVector<T>> {
    Ok(transient_cat_grid(spec, j, &[t], window, tol, route)?.remove(0))
}

/// `e^{-ξt} p̂_j(t) + ξ ∫_0^t e^{-ξτ} p̂_r(τ) dτ`, the integral by vector Gauss–Kronrod.
fn decomposition_grid<T: Real>(
    spec: &ProcessSpec<T>,
    j: usize,
    times: &[T],
    window: &TruncationWindow<T>,
    tol: T,
) -> Result<Vec<DistributionVector<T>>> {
    let hat = spec.hat();
    let r = spec.r;
    let xi = spec.xi;
    let from_r = certified_times(&hat, GeneratorVariant::Hat, r, times, window, tol, TailWeight::Mass)?;
    let from_j = certified_times(&hat, GeneratorVariant::Hat, j, times, &from_r.window, tol, TailWeight::Mass)?;
    let gen = from_j.gen.clone();
    let dim = gen.dim();
    let mut cache = Uniformizer::new(gen.clone(), point_mass(&gen, r), tol * T::lit(1e-3));
    let mut out = Vec::with_capacity(times.len());
    for (pj, &t) in from_j.values.into_iter().zip(times) {
        let decay = (-xi * t).exp();
        let mut mass: Vec<T> = pj.iter().map(|&p| decay * p).collect();
        let mut err = from_j.error + from_r.error;
        if xi > T::zero() && t > T::zero() {
            let q = integrate_vec(
                |tau: T| {
                    let f = xi * (-xi * tau).exp();
                    cache.at(tau).into_iter().map(|p| f * p).collect()
                },
                T::zero(),
                t,
                dim,
                QuadOptions::absolute(tol * T::lit(0.25)),
            )?;
            for (m, v) in mass.iter_mut().zip(q.value) {
                *m = *m + v;
            }
            err = err + q.error;
        }
        out.push(distribution(from_j.window, &gen, mass, t, Method::Decomposition, err));
    }
    Ok(out)
}

/// Conditional mean `E[N(t) | N(0) = j]` through the catastrophe-free means.
pub fn conditional_mean_cat<T: Real>(
    spec: &ProcessSpec<T>,
    j: usize,
    t: T,
    window: &TruncationWindow<T>,
    tol: T,
) -> Result<T> {
    check_time(t)?;
    let hat = spec.hat();
    let xi = spec.xi;
    let from_r = certified_times(&hat, GeneratorVariant::Hat, spec.r, &[t], window, tol, TailWeight::Mean)?;
    let from_j = certified_times(&hat, GeneratorVariant::Hat, j, &[t], &from_r.window, tol, TailWeight::Mean)?;
    let gen = from_j.gen;
    let states: Vec<T> = (0..gen.dim()).map(|i| T::from_usize_lossy(spec.r + i)).collect();
    let mean_j = from_j.values[0].iter().zip(&states).fold(T::zero(), |s, (p, n)| s + *p * *n);
    let mut value = (-xi * t).exp() * mean_j;
    if xi > T::zero() && t > T::zero() {
        let mut cache = Uniformizer::functional(gen.clone(), point_mass(&gen, spec.r), states, tol * T::lit(1e-3));
        let q = integrate(
            |tau: T| xi * (-xi * tau).exp() * cache.functional_at(tau),
            T::zero(),
            t,
            QuadOptions {
                abs_tol: tol * T::lit(1e-3),
                rel_tol: tol * T::lit(0.1),
                max_intervals: 2000,
            },
        )?;
        value = value + q.value;
    }
    Ok(value)
}

fn check_taboo<T: Real>(spec: &ProcessSpec<T>, j: usize, k: usize) -> Result<()> {
    if j == k {
        return Err(EngineError::InvalidArgument(format!(
            "taboo state {k} equals the initial state"
        )));
    }
    if j < spec.r || k < spec.r {
        return Err(crate::error::ModelError::BelowFloor {
            state: j.min(k),
            floor: spec.r,
        }
        .into());
    }
    Ok(())
}

fn taboo<T: Real>(
    spec: &ProcessSpec<T>,
    j: usize,
    k: usize,
    t: T,
    window: &TruncationWindow<T>,
    tol: T,
) -> Result<DistributionVector<T>> {
    check_taboo(spec, j, k)?;
    check_time(t)?;
    let mut c = certified_times(spec, GeneratorVariant::TabooAbsorbing(k), j, &[t], window, tol, TailWeight::Mass)?;
    Ok(distribution(c.window, &c.gen, c.values.remove(0), t, Method::Uniformization, c.error))
}

/// k-avoiding probabilities of the catastrophe-free process; the defect is `P(T̂_{j,k} ≤ t)`.
pub fn taboo_hat<T: Real>(
    spec: &ProcessSpec<T>,
    j: usize,
    k: usize,
    t: T,
    window: &TruncationWindow<T>,
    tol: T,
) -> Result<DistributionVector<T>> {
    taboo(&spec.hat(), j, k, t, window, tol)
}

/// k-avoiding probabilities of the process with catastrophes, computed on its own generator.
pub fn taboo_cat<T: Real>(
    spec: &ProcessSpec<T>,
    j: usize,
    k: usize,
    t: T,
    window: &TruncationWindow<T>,
    tol: T,
) -> Result<DistributionVector<T>> {
    taboo(spec, j, k, t, window, tol)
}

/// r-avoiding probabilities with catastrophes as `e^{-ξt}` times the catastrophe-free ones.
pub fn taboo_cat_r<T: Real>(
    spec: &ProcessSpec<T>,
    j: usize,
    t: T,
    window: &TruncationWindow<T>,
    tol: T,
) -> Result<DistributionVector<T>> {
    if j <= spec.r {
        return Err(EngineError::InvalidArgument(format!(
            "initial state {j} must lie above the floor {}",
            spec.r
        )));
    }
    let mut dv = taboo_hat(spec, j, spec.r, t, window, tol)?;
    let decay = (-spec.xi * t).exp();
    for m in dv.mass.iter_mut() {
        *m = *m * decay;
    }
    dv.defect = (T::one() - dv.total()).max(T::zero());
    Ok(dv)
}

/// `P(T̂_{j,k} ≤ t)` from the surviving taboo mass on the side of `k` that `j` starts on.
pub fn first_visit_cdf_hat<T: Real>(
    spec: &ProcessSpec<T>,
    j: usize,
    k: usize,
    t: T,
    window: &TruncationWindow<T>,
    tol: T,
) -> Result<T> {
    let dv = taboo_hat(spec, j, k, t, window, tol)?;
    let survive = dv
        .states()
        .filter(|&(n, _)| if j > k { n > k } else { n < k })
        .fold(T::zero(), |s, (_, p)| s + p);
    Ok(T::one() - survive)
}

/// `P(T_{j,k} ≤ t)` with catastrophes. From above, the surviving mass may sit on both sides of `k`.
pub fn first_visit_cdf_cat<T: Real>(
    spec: &ProcessSpec<T>,
    j: usize,
    k: usize,
    t: T,
    window: &TruncationWindow<T>,
    tol: T,
) -> Result<T> {
    let dv = taboo_cat(spec, j, k, t, window, tol)?;
    let survive = dv
        .states()
        .filter(|&(n, _)| if j > k { n != k } else { n < k })
        .fold(T::zero(), |s, (_, p)| s + p);
    Ok(T::one() - survive)
}

/// `P(T_{j,r} ≤ t) = 1 - e^{-ξt} (1 - P(T̂_{j,r} ≤ t))`.
pub fn first_visit_cdf_r<T: Real>(
    spec: &ProcessSpec<T>,
    j: usize,
    t: T,
    window: &TruncationWindow<T>,
    tol: T,
) -> Result<T> {
    let dv = taboo_hat(spec, j, spec.r, t, window, tol)?;
    Ok(T::one() - (-spec.xi * t).exp() * (T::one() - dv.defect))
}

fn flux_into<T: Real>(gen: &Generator<T>, v: &[T], k: usize) -> T {
    let ki = gen.index_of(k);
    let mut f = T::zero();
    if ki > 0 {
        f = f + v[ki - 1] * gen.up[ki - 1];
    }
    if ki + 1 < gen.dim() {
        f = f + v[ki + 1] * gen.down[ki + 1];
    }
    if ki == gen.jump_target {
        for (i, (&p, &x)) in v.iter().zip(&gen.jump).enumerate() {
            if i != ki {
                f = f + p * x;
            }
        }
    }
    f
}

/// First-visit density to `k` as the probability flux into the absorbing taboo state,
/// evaluated at arbitrary times from a cached uniformization.
pub struct FirstVisitDensity<T = f64> {
    cache: Uniformizer<T>,
    k: usize,
    pub window: TruncationWindow<T>,
}

impl<T: Real> FirstVisitDensity<T> {
    /// Certifies the window at `horizon`; evaluations beyond it are uncertified.
    pub fn new(
        spec: &ProcessSpec<T>,
        j: usize,
        k: usize,
        horizon: T,
        window: &TruncationWindow<T>,
        tol: T,
    ) -> Result<Self> {
        check_taboo(spec, j, k)?;
        let c = certified_times(
            spec,
            GeneratorVariant::TabooAbsorbing(k),
            j,
            &[horizon * T::lit(0.25), horizon * T::lit(0.5), horizon],
            window,
            tol,
            TailWeight::Mass,
        )?;
        let p0 = point_mass(&c.gen, j);
        Ok(Self {
            cache: Uniformizer::new(c.gen, p0, tol * T::lit(1e-2)),
            k,
            window: c.window,
        })
    }

    pub fn at(&mut self, t: T) -> T {
        let v = self.cache.at(t);
        flux_into(self.cache.generator(), &v, self.k)
    }
}

/// First-visit density to `k` of the process described by `spec` (with its own ξ).
pub fn first_visit_density<T: Real>(
    spec: &ProcessSpec<T>,
    j: usize,
    k: usize,
    t: T,
    window: &TruncationWindow<T>,
    tol: T,
) -> Result<T> {
    check_taboo(spec, j, k)?;
    check_time(t)?;
    let c = certified_times(spec, GeneratorVariant::TabooAbsorbing(k), j, &[t], window, tol, TailWeight::Mass)?;
    Ok(flux_into(&c.gen, &c.values[0], k))
}

/// Density of `T_{j,r}` composed from the catastrophe-free first-visit law:
/// `e^{-ξt} ĝ(t) + ξ e^{-ξt} (1 - Ĝ(t))` with `ĝ(t) = β_{r+1} Â_{j,r+1}(t)`.
pub fn first_visit_density_r<T: Real>(
    spec: &ProcessSpec<T>,
    j: usize,
    t: T,
    window: &TruncationWindow<T>,
    tol: T,
) -> Result<T> {
    if j <= spec.r {
        return Err(EngineError::InvalidArgument(format!(
            "initial state {j} must lie above the floor {}",
            spec.r
        )));
    }
    let dv = taboo_hat(spec, j, spec.r, t, window, tol)?;
    let g_hat = spec.death(spec.r + 1) * dv.prob(spec.r + 1);
    let decay = (-spec.xi * t).exp();
    Ok(decay * g_hat + spec.xi * decay * (T::one() - dv.defect))
}
