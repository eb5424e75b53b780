use super::{check_finite, AccuracyBudget, Termination};
use crate::error::SpecFunError;
use crate::scalar::Real;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Natural log of |Γ(x)| for x not a non-positive integer.
pub fn ln_gamma<T: Real>(x: T) -> T {
    if x < T::lit(0.5) {
        // reflection
        let pi = T::PI();
        return (pi / (pi * x).sin().abs()).ln() - ln_gamma(T::one() - x);
    }
    if x >= T::lit(10.0) {
        return stirling(x);
    }
    let x = x - T::one();
    let mut acc = T::lit(LANCZOS[0]);
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc = acc + T::lit(c) / (x + T::from_usize_lossy(i));
    }
    let t = x + T::lit(LANCZOS_G + 0.5);
    T::lit(0.5) * (T::lit(2.0) * T::PI()).ln() + (x + T::lit(0.5)) * t.ln() - t + acc.ln()
}

fn stirling<T: Real>(x: T) -> T {
    let inv = x.recip();
    let inv2 = inv * inv;
    // Bernoulli terms B_{2k}/(2k(2k-1) x^{2k-1})
    let series = inv
        * (T::lit(1.0 / 12.0)
            + inv2
                * (T::lit(-1.0 / 360.0)
                    + inv2
                        * (T::lit(1.0 / 1260.0)
                            + inv2
                                * (T::lit(-1.0 / 1680.0)
                                    + inv2 * (T::lit(1.0 / 1188.0) + inv2 * T::lit(-691.0 / 360_360.0))))));
    (x - T::lit(0.5)) * x.ln() - x + T::lit(0.5) * (T::lit(2.0) * T::PI()).ln() + series
}

/// Γ(x) for x > 0.
pub fn gamma_fn<T: Real>(x: T) -> T {
    ln_gamma(x).exp()
}

/// ln((a)_n) = ln Γ(a+n) − ln Γ(a) for a > 0.
pub fn ln_pochhammer<T: Real>(a: T, n: usize) -> T {
    if n <= 64 {
        (0..n).map(|k| (a + T::from_usize_lossy(k)).ln()).sum()
    } else {
        ln_gamma(a + T::from_usize_lossy(n)) - ln_gamma(a)
    }
}

/// ln B(a, b) for a, b > 0, assembled from log-gamma values.
pub fn log_beta<T: Real>(a: T, b: T) -> Result<T, SpecFunError> {
    check_finite("a", a)?;
    check_finite("b", b)?;
    if a <= T::zero() {
        return Err(SpecFunError::Domain {
            name: "a",
            value: a.as_f64(),
            expected: "a > 0",
        });
    }
    if b <= T::zero() {
        return Err(SpecFunError::Domain {
            name: "b",
            value: b.as_f64(),
            expected: "b > 0",
        });
    }
    Ok(ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b))
}

/// Lower incomplete gamma γ(s, x) for s > 0, x ≥ 0, by its power series.
pub fn lower_incomplete_gamma<T: Real>(
    s: T,
    x: T,
    budget: &AccuracyBudget<T>,
) -> Result<T, SpecFunError> {
    if s <= T::zero() {
        return Err(SpecFunError::Domain {
            name: "s",
            value: s.as_f64(),
            expected: "s > 0",
        });
    }
    if x == T::zero() {
        return Ok(T::zero());
    }
    let mut term = s.recip();
    let mut sum = term;
    let mut stop = Termination::new();
    for n in 1..budget.max_terms {
        term = term * x / (s + T::from_usize_lossy(n));
        sum = sum + term;
        if stop.done(term, sum, budget.rel_tol) {
            return Ok(sum * (-x + s * x.ln()).exp());
        }
    }
    Err(SpecFunError::NotConverged {
        function: "lower_incomplete_gamma",
        terms: budget.max_terms,
    })
}

/// Exponential integral E₁(x) = Γ(0, x), x > 0.
pub fn exp_integral_e1<T: Real>(x: T, budget: &AccuracyBudget<T>) -> Result<T, SpecFunError> {
    if x >= T::one() {
        return upper_cf(T::zero(), x, budget);
    }
    // −γ − ln x − Σ (−x)^k / (k k!)
    let mut pow = T::one();
    let mut sum = T::zero();
    let mut stop = Termination::new();
    for k in 1..budget.max_terms {
        let kf = T::from_usize_lossy(k);
        pow = pow * (-x) / kf;
        let term = pow / kf;
        sum = sum + term;
        if stop.done(term, sum, budget.rel_tol * T::lit(0.1)) {
            return Ok(-T::lit(EULER_GAMMA) - x.ln() - sum);
        }
    }
    Err(SpecFunError::NotConverged {
        function: "exp_integral_e1",
        terms: budget.max_terms,
    })
}

/// Continued fraction (modified Lentz) for Γ(s, x); converges for every real s when x > 0.
fn upper_cf<T: Real>(s: T, x: T, budget: &AccuracyBudget<T>) -> Result<T, SpecFunError> {
    let tiny = T::min_positive_value() / T::epsilon();
    let mut b = x + T::one() - s;
    let mut c = tiny.recip();
    let mut d = b.recip();
    let mut h = d;
    for i in 1..budget.max_terms {
        let fi = T::from_usize_lossy(i);
        let an = -fi * (fi - s);
        b = b + T::lit(2.0);
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = d.recip();
        let delta = d * c;
        h = h * delta;
        if (delta - T::one()).abs() < T::epsilon() * T::lit(2.0) {
            return Ok((-x + s * x.ln()).exp() * h);
        }
    }
    Err(SpecFunError::NotConverged {
        function: "upper_incomplete_gamma",
        terms: budget.max_terms,
    })
}

/// Upper incomplete gamma Γ(s, x) for any real s and x > 0.
///
/// Continued fraction when x ≥ max(s + 1, 1); otherwise the series complement
/// Γ(s) − γ(s, x) for s > 0, and downward recurrence
/// Γ(s, x) = (Γ(s+1, x) − x^s e^{−x}) / s from (0, 1] (or from E₁ at integer s) for s ≤ 0.
pub fn upper_incomplete_gamma<T: Real>(
    s: T,
    x: T,
    budget: &AccuracyBudget<T>,
) -> Result<T, SpecFunError> {
    check_finite("s", s)?;
    check_finite("x", x)?;
    if x <= T::zero() {
        return Err(SpecFunError::Domain {
            name: "x",
            value: x.as_f64(),
            expected: "x > 0",
        });
    }
    if x >= (s + T::one()).max(T::one()) {
        return upper_cf(s, x, budget);
    }
    if s > T::zero() {
        let lower = lower_incomplete_gamma(s, x, budget)?;
        return Ok(gamma_fn(s) - lower);
    }
    // s <= 0: start in [0, 1), then recur downward
    let steps = (-s).ceil().to_usize().unwrap_or(0);
    let start = s + T::from_usize_lossy(steps);
    let value = if start == T::zero() {
        exp_integral_e1(x, budget)?
    } else {
        gamma_fn(start) - lower_incomplete_gamma(start, x, budget)?
    };
    Ok(descend(start, value, steps, x))
}

fn descend<T: Real>(mut s: T, mut value: T, steps: usize, x: T) -> T {
    let ex = (-x).exp();
    for _ in 0..steps {
        s = s - T::one();
        value = (value - x.powf(s) * ex) / s;
    }
    value
}
