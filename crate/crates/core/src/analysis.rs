//! First-visit moments, the effective-catastrophe mean, the stationary law and the
//! representation of transient probabilities through the stationary law.

use crate::error::{EngineError, Result};
use crate::model::{Extrapolation, ProcessSpec, TruncationWindow, MAX_WINDOW};
use crate::resolvent::HatResolvent;
use crate::scalar::Real;
use crate::transient::{transient_hat_grid, DistributionVector, Method};

fn require_catastrophes<T: Real>(spec: &ProcessSpec<T>) -> Result<()> {
    if !(spec.xi > T::zero()) {
        return Err(EngineError::InvalidArgument(
            "this quantity needs a positive catastrophe rate".into(),
        ));
    }
    Ok(())
}

/// Mean and variance of the first-visit time `T_{j,k}` with catastrophes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirstVisitStats<T = f64> {
    pub j: usize,
    pub k: usize,
    pub mean: T,
    pub variance: T,
    /// `γ̂_{j,k}(ξ)`.
    pub transform_at_xi: T,
}

/// Mean and variance of `T_{j,k}` from `γ̂_{j,k}(ξ)`, `γ̂_{r,k}(ξ)` and their derivatives.
pub fn first_visit_stats<T: Real>(
    spec: &ProcessSpec<T>,
    j: usize,
    k: usize,
    window: &TruncationWindow<T>,
) -> Result<FirstVisitStats<T>> {
    require_catastrophes(spec)?;
    if j == k {
        return Err(EngineError::InvalidArgument("first-visit time needs j != k".into()));
    }
    let xi = spec.xi;
    let s = HatResolvent::new(&spec.hat(), xi, &[j, k, spec.r], window)?;
    let g_jk = s.gamma(j, k)?;
    let g_rk = s.gamma(spec.r, k)?;
    let mean = (T::one() - g_jk.value) / (xi * g_rk.value);
    let two_xi = xi + xi;
    let braces = T::one() - g_jk.value * g_jk.value
        + two_xi * (T::one() - g_jk.value) * g_rk.derivative
        + two_xi * g_rk.value * g_jk.derivative;
    let variance = braces / (xi * xi * g_rk.value * g_rk.value);
    Ok(FirstVisitStats {
        j,
        k,
        mean,
        variance,
        transform_at_xi: g_jk.value,
    })
}

pub fn first_visit_mean<T: Real>(spec: &ProcessSpec<T>, j: usize, k: usize, window: &TruncationWindow<T>) -> Result<T> {
    Ok(first_visit_stats(spec, j, k, window)?.mean)
}

pub fn first_visit_variance<T: Real>(
    spec: &ProcessSpec<T>,
    j: usize,
    k: usize,
    window: &TruncationWindow<T>,
) -> Result<T> {
    Ok(first_visit_stats(spec, j, k, window)?.variance)
}

/// Mean time to the first catastrophe that changes the state, started from `j`:
/// `1/ξ + π̂_{j,r}(ξ) / (1 - ξ π̂_{r,r}(ξ))`.
///
/// For `j = r` this equals `(1/ξ) / (1 - ξ π̂_{r,r}(ξ))`.
pub fn catastrophe_mean<T: Real>(spec: &ProcessSpec<T>, j: usize, window: &TruncationWindow<T>) -> Result<T> {
    require_catastrophes(spec)?;
    let xi = spec.xi;
    let s = HatResolvent::new(&spec.hat(), xi, &[j, spec.r], window)?;
    let p_rr = s.row(spec.r)?[0];
    let p_jr = s.row(j)?[0];
    Ok(xi.recip() + p_jr / (T::one() - xi * p_rr))
}

/// Stationary law `q_n = ξ π̂_{r,n}(ξ)` on a window.
#[derive(Debug, Clone)]
pub struct StationaryDistribution<T = f64> {
    pub r: usize,
    pub window: TruncationWindow<T>,
    pub q: Vec<T>,
    /// Largest absolute balance-equation residual over the window's interior equations.
    pub residual: T,
}

impl<T: Real> StationaryDistribution<T> {
    pub fn prob(&self, n: usize) -> T {
        if n < self.r {
            return T::zero();
        }
        self.q.get(n - self.r).copied().unwrap_or(T::zero())
    }

    pub fn total(&self) -> T {
        self.q.iter().copied().sum()
    }

    /// `S_n = Σ_{k ≥ n} q_k`, accumulated from the top of the window down.
    pub fn tails(&self) -> Vec<T> {
        let mut tails = vec![T::zero(); self.q.len() + 1];
        for i in (0..self.q.len()).rev() {
            tails[i] = tails[i + 1] + self.q[i];
        }
        tails
    }

    /// Geometric bound on the mass beyond the window, from the last two entries.
    pub fn tail_bound(&self) -> T {
        let m = self.q.len();
        let (a, b) = (self.q[m - 2], self.q[m - 1]);
        if a > T::zero() && b < a {
            let rho = b / a;
            b * rho / (T::one() - rho)
        } else {
            T::infinity()
        }
    }
}

/// Largest residual of the balance equations for states `r .. r+upper-1`.
pub fn balance_residual<T: Real>(spec: &ProcessSpec<T>, q: &[T]) -> T {
    let r = spec.r;
    let xi = spec.xi;
    let mut worst = T::zero();
    for i in 0..q.len().saturating_sub(1) {
        let n = r + i;
        let res = if i == 0 {
            -(spec.birth(r) + xi) * q[0] + spec.death(r + 1) * q[1] + xi
        } else {
            -(spec.birth(n) + spec.death(n) + xi) * q[i] + spec.birth(n - 1) * q[i - 1] + spec.death(n + 1) * q[i + 1]
        };
        worst = worst.max(res.abs());
    }
    worst
}

pub const DEFAULT_RESIDUAL_BOUND: f64 = 1e-10;

/// Stationary law from one catastrophe-free solve at `λ = ξ`.
pub fn stationary_distribution<T: Real>(
    spec: &ProcessSpec<T>,
    window: &TruncationWindow<T>,
) -> Result<StationaryDistribution<T>> {
    stationary_distribution_with_bound(spec, window, T::lit(DEFAULT_RESIDUAL_BOUND))
}

/// As [`stationary_distribution`], enlarging the window while the residual exceeds `bound`.
pub fn stationary_distribution_with_bound<T: Real>(
    spec: &ProcessSpec<T>,
    window: &TruncationWindow<T>,
    bound: T,
) -> Result<StationaryDistribution<T>> {
    require_catastrophes(spec)?;
    let hat = spec.hat();
    let mut w = *window;
    loop {
        let s = HatResolvent::new(&hat, spec.xi, &[spec.r], &w)?;
        let q: Vec<T> = s.row(spec.r)?.into_iter().map(|p| spec.xi * p).collect();
        let residual = balance_residual(spec, &q);
        if residual <= bound {
            return Ok(StationaryDistribution {
                r: spec.r,
                window: s.window(),
                q,
                residual,
            });
        }
        if !w.adaptive || s.window().upper * 2 > MAX_WINDOW {
            return Err(EngineError::Residual {
                residual: residual.as_f64(),
                bound: bound.as_f64(),
            });
        }
        w = s.window().with_upper(s.window().upper * 2);
    }
}

/// Rates of the companion process whose minimum with an independent stationary draw
/// reproduces the law of the process started at `r`.
#[derive(Clone)]
pub struct StarRates<T = f64> {
    pub spec: ProcessSpec<T>,
    pub births: Vec<T>,
    pub deaths: Vec<T>,
    pub stationary: StationaryDistribution<T>,
}

impl<T: Real> std::fmt::Debug for StarRates<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StarRates")
            .field("births", &self.births)
            .field("deaths", &self.deaths)
            .field("stationary", &self.stationary)
            .finish()
    }
}

/// `α*_n = α_n S_n / S_{n+1}`, `β*_n = β_n S_{n+1} / S_n`, with `S_n = Σ_{k≥n} q_k`.
pub fn star_rates<T: Real>(spec: &ProcessSpec<T>, window: &TruncationWindow<T>) -> Result<StarRates<T>> {
    let stationary = stationary_distribution(spec, window)?;
    let tails = stationary.tails();
    let r = spec.r;
    let top = stationary.q.len() - 1;
    let mut births = Vec::with_capacity(top);
    for i in 0..top {
        if tails[i + 1] <= T::zero() {
            return Err(EngineError::VanishingTail { state: r + i });
        }
        births.push(spec.birth(r + i) * tails[i] / tails[i + 1]);
    }
    let deaths: Vec<T> = (1..=top).map(|i| spec.death(r + i) * tails[i + 1] / tails[i]).collect();
    let star = ProcessSpec::from_tables(r, births.clone(), deaths.clone(), T::zero(), Extrapolation::Hold)?;
    Ok(StarRates {
        spec: star,
        births,
        deaths,
        stationary,
    })
}

/// `p_{r,n}(t) = q_n Σ_{k≥n} p*_{r,k}(t) + p*_{r,n}(t) Σ_{k>n} q_k`.
pub fn minimum_representation<T: Real>(
    spec: &ProcessSpec<T>,
    t: T,
    window: &TruncationWindow<T>,
    tol: T,
) -> Result<DistributionVector<T>> {
    Ok(minimum_representation_grid(spec, &[t], window, tol)?.remove(0))
}

pub fn minimum_representation_grid<T: Real>(
    spec: &ProcessSpec<T>,
    times: &[T],
    window: &TruncationWindow<T>,
    tol: T,
) -> Result<Vec<DistributionVector<T>>> {
    let star = star_rates(spec, window)?;
    let q = &star.stationary.q;
    let tails = star.stationary.tails();
    let pstar = transient_hat_grid(&star.spec, spec.r, times, &star.stationary.window, tol)?;
    Ok(pstar
        .into_iter()
        .map(|ps| {
            let mut star_tail = T::zero();
            let mut mass = vec![T::zero(); q.len()];
            for i in (0..ps.mass.len()).rev() {
                star_tail = star_tail + ps.mass[i];
                if i < q.len() {
                    mass[i] = q[i] * star_tail + ps.mass[i] * tails[i + 1];
                }
            }
            let total: T = mass.iter().copied().sum();
            DistributionVector {
                r: spec.r,
                window: star.stationary.window,
                at: ps.at,
                mass,
                defect: (T::one() - total).max(T::zero()),
                method: Method::Representation,
                error_estimate: ps.error_estimate + star.stationary.tail_bound(),
            }
        })
        .collect())
}

/// `p_{j,n}(t) = e^{-ξt} (p̂_{j,n}(t) - p̂_{r,n}(t)) + p_{r,n}(t)` with the last term from
/// [`minimum_representation`].
pub fn general_representation<T: Real>(
    spec: &ProcessSpec<T>,
    j: usize,
    t: T,
    window: &TruncationWindow<T>,
    tol: T,
) -> Result<DistributionVector<T>> {
    let mut base = minimum_representation(spec, t, window, tol)?;
    if j == spec.r {
        return Ok(base);
    }
    let hat = spec.hat();
    let from_j = transient_hat_grid(&hat, j, &[t], window, tol)?.remove(0);
    let from_r = transient_hat_grid(&hat, spec.r, &[t], &from_j.window, tol)?.remove(0);
    let decay = (-spec.xi * t).exp();
    let hi = base.mass.len().max(from_j.mass.len());
    base.mass.resize(hi, T::zero());
    for (i, m) in base.mass.iter_mut().enumerate() {
        let n = spec.r + i;
        *m = *m + decay * (from_j.prob(n) - from_r.prob(n));
    }
    let total: T = base.mass.iter().copied().sum();
    base.defect = (T::one() - total).max(T::zero());
    base.error_estimate = base.error_estimate + from_j.error_estimate + from_r.error_estimate;
    Ok(base)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{params, zoo_preset};

    fn ie(alpha: f64, beta: f64, xi: f64) -> ProcessSpec<f64> {
        zoo_preset("ie_const", &params(&[("alpha", alpha), ("beta", beta), ("xi", xi)]))
            .unwrap()
            .homogeneous()
            .unwrap()
    }

    #[test]
    fn unit_rates_golden_values() {
        let spec = ie(1.0, 1.0, 1.0);
        let w = TruncationWindow::default();
        let s = first_visit_stats(&spec, 1, 0, &w).unwrap();
        assert!((s.mean - 0.618_033_988_749_894_8).abs() < 1e-12);
        assert!((s.variance - 0.512_461_179_749_810_7).abs() < 1e-12);
        let c = catastrophe_mean(&spec, 1, &w).unwrap();
        assert!((c - 1.618_033_988_749_895).abs() < 1e-12);
    }

    #[test]
    fn pure_birth_first_step() {
        let spec = ProcessSpec::from_fns(1, |_| 2.0, |_| 0.0, 0.7);
        let s = first_visit_stats(&spec, 1, 2, &TruncationWindow::default()).unwrap();
        assert!((s.mean - 0.5).abs() < 1e-12);
        assert!((s.variance - 0.25).abs() < 1e-12);
    }

    #[test]
    fn stationary_geometric() {
        let spec = ie(1.0, 2.0, 0.5);
        let st = stationary_distribution(&spec, &TruncationWindow::default()).unwrap();
        let (a, b, x) = (1.0f64, 2.0, 0.5);
        let q = (a + b + x - ((a + b + x).powi(2) - 4.0 * a * b).sqrt()) / (2.0 * b);
        for n in 0..10 {
            assert!((st.prob(n) - (1.0 - q) * q.powi(n as i32)).abs() < 1e-13);
        }
        assert!(st.residual < 1e-12);
    }
}
