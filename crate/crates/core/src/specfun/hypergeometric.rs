use super::{check_finite, is_nonpositive_integer, ln_gamma, AccuracyBudget, Termination};
use crate::error::SpecFunError;
use crate::quadrature::{integrate, QuadOptions};
use crate::scalar::Real;

/// Kummer's confluent hypergeometric function Φ(a, c; x) = ₁F₁(a; c; x).
///
/// Negative x goes through Kummer's transformation Φ(a, c; x) = e^x Φ(c − a, c; −x)
/// so the summed series never alternates.
pub fn kummer_phi<T: Real>(a: T, c: T, x: T, budget: &AccuracyBudget<T>) -> Result<T, SpecFunError> {
    check_finite("a", a)?;
    check_finite("c", c)?;
    check_finite("x", x)?;
    if is_nonpositive_integer(c) {
        return Err(SpecFunError::Domain {
            name: "c",
            value: c.as_f64(),
            expected: "c not in {0, -1, -2, ...}",
        });
    }
    if x < T::zero() {
        return Ok(x.exp() * kummer_series(c - a, c, -x, budget)?);
    }
    kummer_series(a, c, x, budget)
}

fn kummer_series<T: Real>(a: T, c: T, x: T, budget: &AccuracyBudget<T>) -> Result<T, SpecFunError> {
    let mut term = T::one();
    let mut sum = T::one();
    let mut stop = Termination::new();
    for k in 0..budget.max_terms {
        let kf = T::from_usize_lossy(k);
        term = term * (a + kf) / (c + kf) * x / (kf + T::one());
        sum = sum + term;
        if !sum.is_finite() {
            return Err(SpecFunError::Overflow { function: "kummer_phi" });
        }
        if stop.done(term, sum, budget.rel_tol) {
            return Ok(sum);
        }
    }
    Err(SpecFunError::NotConverged {
        function: "kummer_phi",
        terms: budget.max_terms,
    })
}

/// Gauss hypergeometric series F(a, b; c; x) on 0 ≤ x < 1.
pub fn gauss_2f1<T: Real>(a: T, b: T, c: T, x: T, budget: &AccuracyBudget<T>) -> Result<T, SpecFunError> {
    check_finite("a", a)?;
    check_finite("b", b)?;
    check_finite("c", c)?;
    check_finite("x", x)?;
    if is_nonpositive_integer(c) {
        return Err(SpecFunError::Domain {
            name: "c",
            value: c.as_f64(),
            expected: "c not in {0, -1, -2, ...}",
        });
    }
    if !(x >= T::zero() && x < T::one()) {
        return Err(SpecFunError::Domain {
            name: "x",
            value: x.as_f64(),
            expected: "0 <= x < 1",
        });
    }
    let mut term = T::one();
    let mut sum = T::one();
    let mut stop = Termination::new();
    for k in 0..budget.max_terms {
        let kf = T::from_usize_lossy(k);
        let ratio = (a + kf) * (b + kf) / ((c + kf) * (kf + T::one())) * x;
        term = term * ratio;
        sum = sum + term;
        if !sum.is_finite() {
            return Err(SpecFunError::Overflow { function: "gauss_2f1" });
        }
        // later ratios tend to x, so the tail is at most term * r / (1 - r)
        let r = ratio.abs().max(x);
        let tail = if r < T::one() { term * r / (T::one() - r) } else { T::infinity() };
        if stop.done(tail, sum, budget.rel_tol) {
            return Ok(sum);
        }
    }
    Err(SpecFunError::NotConverged {
        function: "gauss_2f1",
        terms: budget.max_terms,
    })
}

/// ln Ψ(a, c; x) for a > 0, x > 0, from the integral representation
/// Ψ(a, c; x) = Γ(a)^{-1} ∫₀^∞ e^{−xt} t^{a−1} (1+t)^{c−a−1} dt.
///
/// The range is split at t = 1. On [0, 1] the substitution t = u^{1/a} removes the
/// t^{a−1} endpoint behaviour; on [1, ∞) t = e^s turns the tail into a doubly
/// exponentially decaying integrand. Both pieces are integrated relative to a
/// common log scale so large and small parameter sets stay representable.
pub fn ln_tricomi_psi<T: Real>(a: T, c: T, x: T, budget: &AccuracyBudget<T>) -> Result<T, SpecFunError> {
    check_finite("a", a)?;
    check_finite("c", c)?;
    check_finite("x", x)?;
    if a <= T::zero() {
        return Err(SpecFunError::Domain {
            name: "a",
            value: a.as_f64(),
            expected: "a > 0",
        });
    }
    if x <= T::zero() {
        return Err(SpecFunError::Domain {
            name: "x",
            value: x.as_f64(),
            expected: "x > 0",
        });
    }
    let one = T::one();
    let expo = c - a - one;
    // log-integrand on [0,1] after t = u^{1/a}, without the 1/a Jacobian factor
    let head = move |u: T| -> T {
        if u <= T::zero() {
            return T::zero();
        }
        let t = u.powf(a.recip());
        -x * t + expo * t.ln_1p()
    };
    // log-integrand on s in [0, inf) with t = e^s
    let tail = move |s: T| -> T {
        let t = s.exp();
        -x * t + a * s + expo * t.ln_1p()
    };

    // common log scale: coarse scan of both pieces
    let mut scale = head(one).max(head(T::zero()));
    for i in 1..32 {
        scale = scale.max(head(T::from_usize_lossy(i) / T::lit(32.0)));
    }
    let step = T::lit(0.25);
    let mut s = T::zero();
    let mut tail_peak = tail(s);
    let cutoff = T::lit(-(T::epsilon().as_f64().ln()) + 40.0);
    let mut s_end = s;
    for _ in 0..4000 {
        s = s + step;
        let v = tail(s);
        tail_peak = tail_peak.max(v);
        s_end = s;
        if v < tail_peak - cutoff && v < tail(s - step) {
            break;
        }
    }
    scale = scale.max(tail_peak);

    let tol = budget.rel_tol * T::lit(0.25);
    let opts = QuadOptions {
        abs_tol: T::zero(),
        rel_tol: tol,
        max_intervals: 4000,
    };
    let quad_err = |e: crate::error::EngineError| match e {
        crate::error::EngineError::Quadrature { .. } => SpecFunError::NotConverged {
            function: "tricomi_psi",
            terms: opts.max_intervals,
        },
        _ => SpecFunError::Overflow { function: "tricomi_psi" },
    };
    let head_int = integrate(|u| (head(u) - scale).exp(), T::zero(), one, opts).map_err(quad_err)?;
    let tail_int = integrate(|s| (tail(s) - scale).exp(), T::zero(), s_end, opts).map_err(quad_err)?;
    let total = head_int.value / a + tail_int.value;
    if !(total > T::zero()) || !total.is_finite() {
        return Err(SpecFunError::Overflow { function: "tricomi_psi" });
    }
    Ok(scale + total.ln() - ln_gamma(a))
}

/// Tricomi's confluent hypergeometric function of the second kind Ψ(a, c; x); see [`ln_tricomi_psi`].
pub fn tricomi_psi<T: Real>(a: T, c: T, x: T, budget: &AccuracyBudget<T>) -> Result<T, SpecFunError> {
    let v = ln_tricomi_psi(a, c, x, budget)?.exp();
    if v.is_finite() {
        Ok(v)
    } else {
        Err(SpecFunError::Overflow { function: "tricomi_psi" })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b() -> AccuracyBudget<f64> {
        AccuracyBudget::default()
    }

    #[test]
    fn kummer_trivial_values() {
        assert_eq!(kummer_phi(0.3, 1.7, 0.0, &b()).unwrap(), 1.0);
        let e = kummer_phi(2.2, 2.2, 1.0, &b()).unwrap();
        assert!((e - std::f64::consts::E).abs() < 1e-14);
        let em = kummer_phi(0.7, 0.7, -3.0, &b()).unwrap();
        assert!((em - (-3.0f64).exp()).abs() < 1e-15);
        assert!(kummer_phi(1.0, -2.0, 0.5, &b()).is_err());
        assert!(kummer_phi(1.0, 0.0, 0.5, &b()).is_err());
    }

    #[test]
    fn kummer_frozen_reference() {
        let v = kummer_phi(0.5, 2.5, 1.3, &b()).unwrap();
        assert!((v - 1.354_240_288_971_267_6).abs() < 1e-14);
    }

    #[test]
    fn kummer_reports_overflow() {
        let r = kummer_phi(1.0, 1.0, 800.0, &b());
        assert!(matches!(r, Err(SpecFunError::Overflow { .. })));
    }

    #[test]
    fn gauss_trivial_values() {
        assert_eq!(gauss_2f1(0.3, 1.1, 2.0, 0.0, &b()).unwrap(), 1.0);
        let g = gauss_2f1(1.0, 3.3, 3.3, 0.6, &b()).unwrap();
        assert!((g - 2.5).abs() < 1e-11);
        let v = gauss_2f1(1.5, 0.7, 3.2, 0.4, &b()).unwrap();
        assert!((v - 1.166_692_295_933_500_2).abs() < 1e-13);
        assert!(gauss_2f1(1.0, 1.0, 2.0, 1.0, &b()).is_err());
        assert!(gauss_2f1(1.0, 1.0, -1.0, 0.5, &b()).is_err());
    }

    #[test]
    fn gauss_budget_exhaustion() {
        let tight = AccuracyBudget::new(1e-12, 40).unwrap();
        let r = gauss_2f1(50.0, 2.0, 3.0, 0.99, &tight);
        assert!(matches!(r, Err(SpecFunError::NotConverged { .. })));
    }

    #[test]
    fn tricomi_frozen_references() {
        let v = tricomi_psi(1.0, 1.0, 2.0, &b()).unwrap();
        assert!((v - 0.361_328_616_888_222_6).abs() < 1e-12 * v);
        let w = tricomi_psi(2.0, 2.0, 1.0, &b()).unwrap();
        assert!((w - 0.403_652_637_676_805_9).abs() < 1e-12 * w);
    }

    #[test]
    fn tricomi_rejects_domain() {
        assert!(tricomi_psi(0.0, 1.0, 1.0, &b()).is_err());
        assert!(tricomi_psi(1.0, 1.0, 0.0, &b()).is_err());
    }
}
