//! Exact formulas for the pure-birth, immigration-emigration, immigration-death and
//! immigration-birth-death processes with catastrophes.

use crate::error::{EngineError, Result};
use crate::quadrature::{integrate, QuadOptions};
use crate::scalar::Real;
use crate::specfun::{
    bessel_i_scaled_seq, gauss_2f1, kummer_phi, ln_gamma, ln_pochhammer, ln_tricomi_psi, log_beta,
    upper_incomplete_gamma, AccuracyBudget,
};

/// Relative gap below which two rates are treated as equal.
pub const DEGENERACY_TOL: f64 = 1e-12;

fn positive<T: Real>(name: &str, v: T) -> Result<()> {
    if v > T::zero() && v.is_finite() {
        Ok(())
    } else {
        Err(EngineError::InvalidArgument(format!("{name} must be positive and finite, got {v}")))
    }
}

fn nearly_equal<T: Real>(a: T, b: T) -> bool {
    (a - b).abs() <= T::lit(DEGENERACY_TOL) * a.abs().max(b.abs())
}

fn ln_factorial<T: Real>(n: usize) -> T {
    ln_gamma(T::from_usize_lossy(n + 1))
}

/// Pure-birth rate families with a closed-form stationary law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PureBirth<T = f64> {
    /// `α_n = α`.
    Constant { alpha: T },
    /// `α_n = ξ (n + k)` with a positive integer `k`.
    Linear { k: usize },
}

/// Stationary law of a pure-birth process with catastrophes, for `n = r ..= n_max`.
pub fn a1_stationary<T: Real>(rates: PureBirth<T>, r: usize, xi: T, n_max: usize) -> Result<Vec<T>> {
    positive("xi", xi)?;
    match rates {
        PureBirth::Constant { alpha } => {
            positive("alpha", alpha)?;
            let first = xi / (xi + alpha);
            let ratio = alpha / (xi + alpha);
            Ok((r..=n_max).map(|n| first * ratio.powi((n - r) as i32)).collect())
        }
        PureBirth::Linear { k } => {
            if k == 0 {
                return Err(EngineError::InvalidArgument("k must be a positive integer".into()));
            }
            let top = T::from_usize_lossy(r + k);
            Ok((r..=n_max)
                .map(|n| {
                    let a = T::from_usize_lossy(n + k);
                    top / (a * (a + T::one()))
                })
                .collect())
        }
    }
}

/// `e^{-(α+β)W} ρ^{s/2}`-weighted Bessel terms share this argument.
struct IeSeries<T> {
    ln_rho: T,
    /// `ln e^{-(√α-√β)² W}`.
    ln_scale: T,
    x: T,
}

impl<T: Real> IeSeries<T> {
    fn new(alpha: T, beta: T, big_w: T) -> Self {
        let d = alpha.sqrt() - beta.sqrt();
        Self {
            ln_rho: (alpha / beta).ln(),
            ln_scale: -d * d * big_w,
            x: (alpha * beta).sqrt() * big_w * T::lit(2.0),
        }
    }

    fn term(&self, scaled_i: T, half_power: T) -> T {
        if scaled_i <= T::zero() {
            return T::zero();
        }
        (self.ln_scale + scaled_i.ln() + half_power * T::lit(0.5) * self.ln_rho).exp()
    }
}

/// `p̂_{j,n}` of the immigration-emigration process for `n = 0 ..= n_max`, as a function of
/// the integrated time scale `W = ∫ w`.
///
/// The `k`-tail is summed until the remainder bound `term · r / (1 - r)` with
/// `r = x / (2 (k+1) √ρ)` falls below `rel_tol` times the partial sum.
pub fn ie_hat_row<T: Real>(
    alpha: T,
    beta: T,
    big_w: T,
    j: usize,
    n_max: usize,
    budget: &AccuracyBudget<T>,
) -> Result<Vec<T>> {
    positive("alpha", alpha)?;
    positive("beta", beta)?;
    if big_w < T::zero() {
        return Err(EngineError::InvalidArgument("integrated time must be nonnegative".into()));
    }
    if big_w == T::zero() {
        return Ok((0..=n_max).map(|n| if n == j { T::one() } else { T::zero() }).collect());
    }
    let s = IeSeries::new(alpha, beta, big_w);
    let rho = alpha / beta;
    let sqrt_rho = rho.sqrt();
    let mut kmax = n_max + j + 2 + (s.x / sqrt_rho).to_usize().unwrap_or(usize::MAX / 4) * 2 + 64;
    loop {
        let seq = bessel_i_scaled_seq(kmax, s.x)?;
        let mut out = Vec::with_capacity(n_max + 1);
        let mut ok = true;
        for n in 0..=n_max {
            let d = n.abs_diff(j);
            let nf = T::from_usize_lossy(n);
            let jf = T::from_usize_lossy(j);
            let mut p = s.term(seq[d], nf - jf) + s.term(seq[n + j + 1], nf - jf - T::one());
            let mut tail = T::zero();
            let mut converged = false;
            for (k, &sik) in seq.iter().enumerate().skip(n + j + 2) {
                let t = s.term(sik, nf * T::lit(2.0) - T::from_usize_lossy(k));
                tail = tail + t;
                let ratio = s.x / (T::lit(2.0) * T::from_usize_lossy(k + 1) * sqrt_rho);
                if ratio < T::lit(0.5) && t * ratio / (T::one() - ratio) <= budget.rel_tol * tail.abs().max(p) {
                    converged = true;
                    break;
                }
            }
            if !converged {
                ok = false;
                break;
            }
            p = p + (T::one() - rho) * tail;
            out.push(p.max(T::zero()));
        }
        if ok {
            return Ok(out);
        }
        if kmax > budget.max_terms {
            return Err(crate::error::SpecFunError::NotConverged {
                function: "ie_hat_row",
                terms: kmax,
            }
            .into());
        }
        kmax *= 2;
    }
}

fn integrated_rate<T: Real, W: Fn(T) -> T>(w: &W, t0: T, t: T, budget: &AccuracyBudget<T>) -> Result<T> {
    if t < t0 {
        return Err(EngineError::InvalidArgument("t must not precede t0".into()));
    }
    if t == t0 {
        return Ok(T::zero());
    }
    Ok(integrate(
        &w,
        t0,
        t,
        QuadOptions {
            abs_tol: budget.rel_tol * T::lit(1e-2),
            rel_tol: budget.rel_tol,
            max_intervals: 4000,
        },
    )?
    .value)
}

/// Catastrophe-free transition probability `p̂_{j,n}(t | t0)` with rates `α w(t)`, `β w(t)`.
#[allow(clippy::too_many_arguments)]
pub fn a2_transient_hat<T: Real, W: Fn(T) -> T>(
    alpha: T,
    beta: T,
    w: &W,
    t0: T,
    t: T,
    j: usize,
    n: usize,
    budget: &AccuracyBudget<T>,
) -> Result<T> {
    let big_w = integrated_rate(w, t0, t, budget)?;
    Ok(ie_hat_row(alpha, beta, big_w, j, n, budget)?[n])
}

/// Catastrophe-free first-visit density to 0 from `j ≥ 1`, `ĝ_{j,0}(t | t0)`.
pub fn a2_first_visit_hat<T: Real, W: Fn(T) -> T>(
    alpha: T,
    beta: T,
    w: &W,
    t0: T,
    t: T,
    j: usize,
    budget: &AccuracyBudget<T>,
) -> Result<T> {
    positive("alpha", alpha)?;
    positive("beta", beta)?;
    if j == 0 {
        return Err(EngineError::InvalidArgument("first visit to 0 needs j >= 1".into()));
    }
    let big_w = integrated_rate(w, t0, t, budget)?;
    if big_w == T::zero() {
        return Ok(if j == 1 { beta * w(t) } else { T::zero() });
    }
    let s = IeSeries::new(alpha, beta, big_w);
    let si = bessel_i_scaled_seq(j, s.x)?[j];
    Ok(T::from_usize_lossy(j) * w(t) / big_w * s.term(si, -T::from_usize_lossy(j)))
}

/// Constant-rate immigration-emigration process with catastrophes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct A3Params<T = f64> {
    pub alpha: T,
    pub beta: T,
    pub xi: T,
    /// Root in `(0, 1)` of `β q² - (α+β+ξ) q + α = 0`.
    pub q: T,
    pub rho: T,
}

impl<T: Real> A3Params<T> {
    pub fn new(alpha: T, beta: T, xi: T) -> Result<Self> {
        positive("alpha", alpha)?;
        positive("beta", beta)?;
        positive("xi", xi)?;
        let s = alpha + beta + xi;
        let disc = (s * s - T::lit(4.0) * alpha * beta).sqrt();
        // rationalised form avoids cancellation when αβ is small
        let q = T::lit(2.0) * alpha / (s + disc);
        Ok(Self {
            alpha,
            beta,
            xi,
            q,
            rho: alpha / beta,
        })
    }

    /// `z = β q / α`, the one-step first-passage transform at `ξ`.
    pub fn z(&self) -> T {
        self.beta * self.q / self.alpha
    }

    pub fn stationary(&self, n: usize) -> T {
        (T::one() - self.q) * self.q.powi(n as i32)
    }

    /// `γ̂_{j,0}(λ)`.
    pub fn gamma_hat(&self, j: usize, lambda: T) -> T {
        let s = lambda + self.alpha + self.beta;
        let disc = (s * s - T::lit(4.0) * self.alpha * self.beta).sqrt();
        (T::lit(2.0) * self.beta / (s + disc)).powi(j as i32)
    }

    pub fn first_visit_mean(&self, j: usize) -> T {
        (T::one() - self.z().powi(j as i32)) / self.xi
    }

    pub fn first_visit_variance(&self, j: usize) -> T {
        let z = self.z();
        let bq = self.beta * self.q;
        let s = self.xi + self.alpha + self.beta;
        let jf = T::from_usize_lossy(j);
        let deriv_term = T::lit(2.0) * self.xi * bq * jf * z.powi(j as i32 - 1) / (self.alpha * (bq + bq - s));
        (T::one() - z.powi(2 * j as i32) + deriv_term) / (self.xi * self.xi)
    }

    pub fn catastrophe_mean(&self, j: usize) -> T {
        (T::one() + (T::one() - self.q) / self.q * self.z().powi(j as i32)) / self.xi
    }

    /// Rates `(α/q, β q)` of the companion process.
    pub fn star_rates(&self) -> (T, T) {
        (self.alpha / self.q, self.beta * self.q)
    }
}

/// Everything the constant-rate formulas give for one `(j, t, λ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct A3Bundle<T = f64> {
    pub params: A3Params<T>,
    pub stationary: Vec<T>,
    /// `γ̂_{j,0}(ξ)`.
    pub gamma_hat_xi: T,
    /// `γ̂_{j,0}(λ)`.
    pub gamma_hat_lambda: T,
    pub first_visit_mean: T,
    pub first_visit_variance: T,
    pub catastrophe_mean: T,
    /// `p*_{0,n}(t)` for `n = 0 ..= n_max`.
    pub p_star: Vec<T>,
    /// `p_{j,n}(t)` for `n = 0 ..= n_max`.
    pub transient: Vec<T>,
}

pub fn a3_bundle<T: Real>(
    params: A3Params<T>,
    j: usize,
    t: T,
    lambda: T,
    n_max: usize,
    budget: &AccuracyBudget<T>,
) -> Result<A3Bundle<T>> {
    if n_max < j {
        return Err(EngineError::InvalidArgument("n_max must cover the initial state".into()));
    }
    let p_star = a3_star_transient(&params, t, n_max, budget)?;
    let transient = a3_transient_from_star(&params, j, t, &p_star, budget)?;
    Ok(A3Bundle {
        stationary: (0..=n_max).map(|n| params.stationary(n)).collect(),
        gamma_hat_xi: params.gamma_hat(j, params.xi),
        gamma_hat_lambda: params.gamma_hat(j, lambda),
        first_visit_mean: params.first_visit_mean(j),
        first_visit_variance: params.first_visit_variance(j),
        catastrophe_mean: params.catastrophe_mean(j),
        p_star,
        transient,
        params,
    })
}

/// `p*_{0,n}(t)`, `n = 0 ..= n_max`.
pub fn a3_star_transient<T: Real>(params: &A3Params<T>, t: T, n_max: usize, budget: &AccuracyBudget<T>) -> Result<Vec<T>> {
    let (a, b) = params.star_rates();
    ie_hat_row(a, b, t, 0, n_max, budget)
}

/// `p_{j,n}(t)` for `n = 0 ..= n_max` from the companion-process form.
pub fn a3_transient<T: Real>(params: &A3Params<T>, j: usize, t: T, n_max: usize, budget: &AccuracyBudget<T>) -> Result<Vec<T>> {
    let p_star = a3_star_transient(params, t, n_max, budget)?;
    a3_transient_from_star(params, j, t, &p_star, budget)
}

fn a3_transient_from_star<T: Real>(
    params: &A3Params<T>,
    j: usize,
    t: T,
    p_star: &[T],
    budget: &AccuracyBudget<T>,
) -> Result<Vec<T>> {
    let n_max = p_star.len() - 1;
    let (hat_j, hat_0) = if j == 0 {
        (Vec::new(), Vec::new())
    } else {
        (
            ie_hat_row(params.alpha, params.beta, t, j, n_max, budget)?,
            ie_hat_row(params.alpha, params.beta, t, 0, n_max, budget)?,
        )
    };
    let decay = (-params.xi * t).exp();
    let mut below = T::zero();
    let mut out = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let star_tail = (T::one() - below).max(T::zero());
        let mut p = params.stationary(n) * star_tail + p_star[n] * params.q.powi(n as i32 + 1);
        if j != 0 {
            p = p + decay * (hat_j[n] - hat_0[n]);
        }
        out.push(p);
        below = below + p_star[n];
    }
    Ok(out)
}

/// Stationary law of the immigration-death process, `n = 0 ..= n_max`.
///
/// Takes the partial-Poisson-tail form when `β = ξ`.
pub fn a4_stationary<T: Real>(nu: T, beta: T, xi: T, n_max: usize, budget: &AccuracyBudget<T>) -> Result<Vec<T>> {
    positive("nu", nu)?;
    positive("beta", beta)?;
    positive("xi", xi)?;
    if nearly_equal(beta, xi) {
        return a4_stationary_equal_rates(nu / beta, n_max, budget);
    }
    a4_stationary_kummer(nu, beta, xi, n_max, budget)
}

/// `q_n = (ρⁿ/n!) e^{-ρ} (ξ/β) B(n+1, ξ/β) Φ(ξ/β, ξ/β+n+1; ρ)` with `ρ = ν/β`.
pub fn a4_stationary_kummer<T: Real>(nu: T, beta: T, xi: T, n_max: usize, budget: &AccuracyBudget<T>) -> Result<Vec<T>> {
    positive("nu", nu)?;
    positive("beta", beta)?;
    positive("xi", xi)?;
    let rho = nu / beta;
    let a = xi / beta;
    (0..=n_max)
        .map(|n| {
            let nf = T::from_usize_lossy(n);
            let phi = kummer_phi(a, a + nf + T::one(), rho, budget)?;
            let ln = nf * rho.ln() - ln_factorial::<T>(n) - rho + a.ln() + log_beta(nf + T::one(), a)? + phi.ln();
            Ok(ln.exp())
        })
        .collect()
}

/// `q_n = ρ^{-1} e^{-ρ} Σ_{i>n} ρⁱ/i!`.
pub fn a4_stationary_equal_rates<T: Real>(rho: T, n_max: usize, budget: &AccuracyBudget<T>) -> Result<Vec<T>> {
    positive("rho", rho)?;
    let pmf = |i: usize| (T::from_usize_lossy(i) * rho.ln() - ln_factorial::<T>(i) - rho).exp();
    // upper tail beyond n_max, summed forward until negligible
    let mut tail = T::zero();
    let mut i = n_max + 1;
    loop {
        let t = pmf(i);
        tail = tail + t;
        if T::from_usize_lossy(i) > rho && t <= budget.rel_tol * tail {
            break;
        }
        i += 1;
        if i > n_max + budget.max_terms {
            return Err(crate::error::SpecFunError::NotConverged {
                function: "a4_stationary_equal_rates",
                terms: budget.max_terms,
            }
            .into());
        }
    }
    let mut out = vec![T::zero(); n_max + 1];
    for n in (0..=n_max).rev() {
        out[n] = tail / rho;
        tail = tail + pmf(n);
    }
    Ok(out)
}

/// `q_0 = e^{-ρ} (ξ/β) Σ_k ρ^k / (k! (k + ξ/β))`.
pub fn a4_q0<T: Real>(nu: T, beta: T, xi: T, budget: &AccuracyBudget<T>) -> Result<T> {
    positive("nu", nu)?;
    positive("beta", beta)?;
    positive("xi", xi)?;
    let rho = nu / beta;
    let a = xi / beta;
    let mut term = T::one();
    let mut sum = term / a;
    let mut small = 0;
    for k in 1..budget.max_terms {
        let kf = T::from_usize_lossy(k);
        term = term * rho / kf;
        let add = term / (kf + a);
        sum = sum + add;
        small = if add <= budget.rel_tol * sum { small + 1 } else { 0 };
        if small >= 3 && kf > rho {
            return Ok((-rho).exp() * a * sum);
        }
    }
    Err(crate::error::SpecFunError::NotConverged {
        function: "a4_q0",
        terms: budget.max_terms,
    }
    .into())
}

/// `j e^{g t} + ν (e^{g t} - 1) / g`, and `j + ν t` when `g` vanishes relative to `scale`.
pub fn linear_mean<T: Real>(j: usize, nu: T, g: T, scale: T, t: T) -> T {
    let jf = T::from_usize_lossy(j);
    if g.abs() <= T::lit(DEGENERACY_TOL) * scale {
        return jf + nu * t;
    }
    jf * (g * t).exp() + nu * (g * t).exp_m1() / g
}

/// Which stationary formula applies to the immigration-birth-death process.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum A5Case {
    BirthBelowDeath,
    EqualRates,
    BirthAboveDeath,
}

#[derive(Debug, Clone, PartialEq)]
pub struct A5Bundle<T = f64> {
    pub case: A5Case,
    /// `p̂_{0,n}(t)`, `n = 0 ..= n_max`.
    pub hat_from_zero: Vec<T>,
    /// `E[N̂(t) | j]`.
    pub hat_mean: T,
    /// `E[N(t) | j]`.
    pub mean: T,
    /// `lim E[N(t)]`, infinite when `α ≥ β + ξ`.
    pub limit_mean: T,
    pub stationary: Vec<T>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct A5Params<T = f64> {
    pub alpha: T,
    pub nu: T,
    pub beta: T,
    pub xi: T,
}

impl<T: Real> A5Params<T> {
    pub fn new(alpha: T, nu: T, beta: T, xi: T) -> Result<Self> {
        positive("alpha", alpha)?;
        positive("nu", nu)?;
        positive("beta", beta)?;
        positive("xi", xi)?;
        Ok(Self { alpha, nu, beta, xi })
    }

    pub fn case(&self) -> A5Case {
        if nearly_equal(self.alpha, self.beta) {
            A5Case::EqualRates
        } else if self.alpha < self.beta {
            A5Case::BirthBelowDeath
        } else {
            A5Case::BirthAboveDeath
        }
    }

    pub fn hat_mean(&self, j: usize, t: T) -> T {
        linear_mean(j, self.nu, self.alpha - self.beta, self.alpha + self.beta, t)
    }

    pub fn mean(&self, j: usize, t: T) -> T {
        linear_mean(
            j,
            self.nu,
            self.alpha - self.beta - self.xi,
            self.alpha + self.beta + self.xi,
            t,
        )
    }

    pub fn limit_mean(&self) -> T {
        let g = self.beta + self.xi - self.alpha;
        if g > T::lit(DEGENERACY_TOL) * (self.alpha + self.beta + self.xi) {
            self.nu / g
        } else {
            T::infinity()
        }
    }

    /// `p̂_{0,n}(t)`, negative-binomial in `n`.
    pub fn hat_from_zero(&self, t: T, n_max: usize) -> Vec<T> {
        let (a, b) = (self.alpha, self.beta);
        let (ln_base, ln_ratio) = if nearly_equal(a, b) {
            let at = a * t;
            (-at.ln_1p(), at.ln() - at.ln_1p())
        } else {
            let e = ((a - b) * t).exp();
            let den = a * e - b;
            (((a - b) / den).ln(), (a * (e - T::one()) / den).ln())
        };
        let shape = self.nu / a;
        (0..=n_max)
            .map(|n| {
                if t == T::zero() {
                    return if n == 0 { T::one() } else { T::zero() };
                }
                let nf = T::from_usize_lossy(n);
                (shape * ln_base + ln_pochhammer(shape, n) - ln_factorial::<T>(n) + nf * ln_ratio).exp()
            })
            .collect()
    }

    pub fn stationary(&self, n_max: usize, budget: &AccuracyBudget<T>) -> Result<Vec<T>> {
        (0..=n_max).map(|n| self.stationary_at(n, budget)).collect()
    }

    pub fn stationary_at(&self, n: usize, budget: &AccuracyBudget<T>) -> Result<T> {
        let (a, nu, b, xi) = (self.alpha, self.nu, self.beta, self.xi);
        let one = T::one();
        let nf = T::from_usize_lossy(n);
        let shape = nu / a;
        let ln_poch = ln_pochhammer(shape, n);
        let ln = match self.case() {
            A5Case::BirthBelowDeath => {
                let c = xi / (b - a);
                let x = a / b;
                (xi / a).ln() + (nf + one) * x.ln() - ln_factorial::<T>(n)
                    + ln_poch
                    + (shape - one) * (one - x).ln()
                    + log_beta(c, nf + one)?
                    + gauss_2f1(shape + nf, c, nf + one + c, x, budget)?.ln()
            }
            A5Case::EqualRates => shape * (xi / a).ln() + ln_poch + ln_tricomi_psi(shape + nf, shape, xi / a, budget)?,
            A5Case::BirthAboveDeath => {
                let c = xi / (a - b) + shape;
                let x = b / a;
                (xi / a).ln() - ln_factorial::<T>(n)
                    + ln_poch
                    + (shape - one) * (one - x).ln()
                    + log_beta(c, nf + one)?
                    + gauss_2f1(shape + nf, c, c + nf + one, x, budget)?.ln()
            }
        };
        Ok(ln.exp())
    }

    /// `q_0 = (ξ/α)^{ν/α} e^{ξ/α} Γ(1 - ν/α, ξ/α)` for `α = β`.
    pub fn q0_equal_rates(&self, budget: &AccuracyBudget<T>) -> Result<T> {
        let x = self.xi / self.alpha;
        let s = self.nu / self.alpha;
        let g = upper_incomplete_gamma(T::one() - s, x, budget)?;
        Ok((s * x.ln() + x).exp() * g)
    }
}

pub fn a5_bundle<T: Real>(
    params: A5Params<T>,
    j: usize,
    t: T,
    n_max: usize,
    budget: &AccuracyBudget<T>,
) -> Result<A5Bundle<T>> {
    Ok(A5Bundle {
        case: params.case(),
        hat_from_zero: params.hat_from_zero(t, n_max),
        hat_mean: params.hat_mean(j, t),
        mean: params.mean(j, t),
        limit_mean: params.limit_mean(),
        stationary: params.stationary(n_max, budget)?,
    })
}
