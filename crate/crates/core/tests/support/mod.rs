//! Independent oracles for the integration tests: double-double series and composite
//! Gauss-Legendre quadrature, written without reference to the library kernels.
#![allow(dead_code)]
// LN2 and TWO_PI are stored as exact hi/lo pairs
#![allow(clippy::approx_constant)]

use std::ops::{Add, Div, Mul, Neg, Sub};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Unevaluated sum `hi + lo` carrying about 32 significant digits.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

const LN2: Dd = Dd {
    hi: 0.693_147_180_559_945_3,
    lo: 2.319_046_813_846_299_6e-17,
};
const TWO_PI: Dd = Dd {
    hi: 6.283_185_307_179_586,
    lo: 2.449_293_598_294_706_4e-16,
};

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    pub fn new(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn abs(self) -> Self {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }

    fn scale(self, f: f64) -> Self {
        Dd {
            hi: self.hi * f,
            lo: self.lo * f,
        }
    }

    pub fn exp(self) -> Self {
        if self.hi > 709.0 {
            return Dd::new(f64::INFINITY);
        }
        if self.hi < -745.0 {
            return Dd::ZERO;
        }
        let k = (self.hi / LN2.hi).round();
        let r = (self - LN2 * Dd::new(k)).scale(1.0 / 1024.0);
        let mut term = Dd::ONE;
        let mut sum = Dd::ONE;
        for i in 1..40 {
            term = term * r / Dd::new(i as f64);
            sum = sum + term;
            if term.hi.abs() < 1e-36 {
                break;
            }
        }
        for _ in 0..10 {
            sum = sum * sum;
        }
        let k = k as i32;
        // split the power of two to stay in range
        let half = k / 2;
        sum.scale(2f64.powi(half)).scale(2f64.powi(k - half))
    }

    pub fn ln(self) -> Self {
        assert!(self.hi > 0.0, "ln of nonpositive {}", self.hi);
        let mut y = Dd::new(self.hi.ln());
        for _ in 0..3 {
            y = y + self * (-y).exp() - Dd::ONE;
        }
        y
    }

    pub fn powf(self, s: Dd) -> Self {
        (s * self.ln()).exp()
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, o: Dd) -> Dd {
        self + (-o)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, o.hi);
        let e = e + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self - o * Dd::new(q1);
        let q2 = r.hi / o.hi;
        let r = r - o * Dd::new(q2);
        let q3 = r.hi / o.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo } + Dd::new(q3)
    }
}

fn dd(x: f64) -> Dd {
    Dd::new(x)
}

/// `ln Γ(z)` for `z > 0`: upward shift to `z ≥ 40`, then the Stirling series.
pub fn ln_gamma_dd(z: f64) -> Dd {
    assert!(z > 0.0);
    let mut z = dd(z);
    let mut prod = Dd::ONE;
    while z.hi < 40.0 {
        prod = prod * z;
        z = z + Dd::ONE;
    }
    const BERNOULLI: [(f64, f64); 10] = [
        (1.0, 6.0),
        (-1.0, 30.0),
        (1.0, 42.0),
        (-1.0, 30.0),
        (5.0, 66.0),
        (-691.0, 2730.0),
        (7.0, 6.0),
        (-3617.0, 510.0),
        (43867.0, 798.0),
        (-174611.0, 330.0),
    ];
    let inv = Dd::ONE / z;
    let inv2 = inv * inv;
    let mut pow = inv;
    let mut series = Dd::ZERO;
    for (k, &(num, den)) in BERNOULLI.iter().enumerate() {
        let m = 2.0 * (k as f64 + 1.0);
        series = series + dd(num) / (dd(den) * dd(m) * dd(m - 1.0)) * pow;
        pow = pow * inv2;
    }
    (z - dd(0.5)) * z.ln() - z + TWO_PI.ln().scale(0.5) + series - prod.ln()
}

pub fn ln_gamma(z: f64) -> f64 {
    ln_gamma_dd(z).to_f64()
}

pub fn gamma(z: f64) -> f64 {
    ln_gamma_dd(z).exp().to_f64()
}

pub fn log_beta(a: f64, b: f64) -> f64 {
    (ln_gamma_dd(a) + ln_gamma_dd(b) - ln_gamma_dd(a + b)).to_f64()
}

pub fn ln_pochhammer(a: f64, n: usize) -> f64 {
    let mut p = Dd::ONE;
    for i in 0..n {
        p = p * (dd(a) + dd(i as f64));
    }
    p.ln().to_f64()
}

/// `e^{-x} I_n(x)` from the power series `Σ (x/2)^{2k+n} / (k! (n+k)!)`.
pub fn bessel_i_scaled(n: usize, x: f64) -> f64 {
    if x == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let half = dd(x) / dd(2.0);
    let mut term = Dd::ONE;
    for i in 1..=n {
        term = term * half / dd(i as f64);
    }
    let mut sum = term;
    let q = half * half;
    let mut k = 0usize;
    loop {
        k += 1;
        term = term * q / (dd(k as f64) * dd((n + k) as f64));
        sum = sum + term;
        if k as f64 > x && term.hi < 1e-34 * sum.hi {
            break;
        }
    }
    (sum * (-dd(x)).exp()).to_f64()
}

/// Kummer `Φ(a, c; x)` by its direct series.
pub fn kummer_phi(a: f64, c: f64, x: f64) -> f64 {
    let mut term = Dd::ONE;
    let mut sum = Dd::ONE;
    let mut small = 0;
    for k in 0..100_000 {
        let kf = k as f64;
        term = term * (dd(a) + dd(kf)) / (dd(c) + dd(kf)) * dd(x) / dd(kf + 1.0);
        sum = sum + term;
        small = if term.hi.abs() < 1e-34 * sum.hi.abs() { small + 1 } else { 0 };
        if small >= 3 {
            break;
        }
    }
    sum.to_f64()
}

/// Gauss `F(a, b; c; x)` by its direct series.
pub fn gauss_2f1(a: f64, b: f64, c: f64, x: f64) -> f64 {
    let mut term = Dd::ONE;
    let mut sum = Dd::ONE;
    let mut small = 0;
    for k in 0..1_000_000 {
        let kf = k as f64;
        term = term * (dd(a) + dd(kf)) * (dd(b) + dd(kf)) / ((dd(c) + dd(kf)) * dd(kf + 1.0)) * dd(x);
        sum = sum + term;
        small = if term.hi.abs() < 1e-34 * sum.hi.abs() { small + 1 } else { 0 };
        if small >= 3 {
            break;
        }
    }
    sum.to_f64()
}

/// `γ(s, x) = x^s e^{-x} Σ x^n / (s (s+1) ... (s+n))` for `s > 0`.
pub fn lower_incomplete_gamma(s: f64, x: f64) -> f64 {
    let mut term = Dd::ONE / dd(s);
    let mut sum = term;
    let mut n = 0.0;
    loop {
        n += 1.0;
        term = term * dd(x) / (dd(s) + dd(n));
        sum = sum + term;
        if n > x && term.hi < 1e-34 * sum.hi {
            break;
        }
    }
    (sum * (dd(s) * dd(x).ln() - dd(x)).exp()).to_f64()
}

const GL_N: usize = 20;

/// Nodes and weights of the 20-point Gauss-Legendre rule on [-1, 1].
fn gauss_legendre() -> ([f64; GL_N], [f64; GL_N]) {
    let mut x = [0.0; GL_N];
    let mut w = [0.0; GL_N];
    for i in 0..GL_N {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (GL_N as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=GL_N {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = GL_N as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-17 {
                break;
            }
        }
        x[i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

/// Composite Gauss-Legendre over consecutive breakpoints.
pub fn gl_integrate(f: impl Fn(f64) -> f64, breaks: &[f64]) -> f64 {
    let (x, w) = gauss_legendre();
    let mut total = 0.0;
    for pair in breaks.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let (m, h) = (0.5 * (a + b), 0.5 * (b - a));
        let mut s = 0.0;
        for i in 0..GL_N {
            s += w[i] * f(m + h * x[i]);
        }
        total += h * s;
    }
    total
}

/// Breakpoints refined geometrically toward `a` and uniform beyond `a + 1`.
pub fn graded_breaks(a: f64, b: f64, finest: f64, step: f64) -> Vec<f64> {
    let mut pts = vec![a];
    let mut h = finest;
    while a + h < (a + 1.0).min(b) {
        pts.push(a + h);
        h *= 2.0;
    }
    let mut t = (a + 1.0).min(b);
    while t < b {
        pts.push(t);
        t += step;
    }
    pts.push(b);
    pts.dedup();
    pts
}

/// `Γ(s, x) = e^{-x} ∫_0^∞ (x + u)^{s-1} e^{-u} du` by quadrature, for any real `s`, `x > 0`.
pub fn upper_incomplete_gamma(s: f64, x: f64) -> f64 {
    let breaks = graded_breaks(0.0, 90.0, x * 1e-4, 0.5);
    (-x).exp() * gl_integrate(|u| (x + u).powf(s - 1.0) * (-u).exp(), &breaks)
}

/// `Ψ(a, c; x) = Γ(a)^{-1} ∫_0^∞ e^{-xt} t^{a-1} (1+t)^{c-a-1} dt` by quadrature:
/// `t = v^{1/a}` on `[0, 1]` when `a < 1`, graded panels when `a ≥ 1`, and `t = e^s` beyond.
pub fn tricomi_psi(a: f64, c: f64, x: f64) -> f64 {
    let e = c - a - 1.0;
    let head = |v: f64| {
        if a < 1.0 {
            let t = v.powf(1.0 / a);
            (-x * t).exp() * (1.0 + t).powf(e) / a
        } else {
            (-x * v).exp() * v.powf(a - 1.0) * (1.0 + v).powf(e)
        }
    };
    let tail = |s: f64| {
        let t = s.exp();
        (-x * t + a * s + e * t.ln_1p()).exp()
    };
    let peak = (0..4000).map(|i| -x * (i as f64 * 0.01).exp() + a * i as f64 * 0.01).fold(f64::MIN, f64::max);
    let mut s_end = 1.0;
    while -x * f64::exp(s_end) + (a + e.max(0.0)) * s_end > peak - 80.0 {
        s_end += 0.5;
    }
    let h = gl_integrate(head, &graded_breaks(0.0, 1.0, 1e-10, 1.0));
    let t = gl_integrate(tail, &graded_breaks(0.0, s_end, 1e-3, 0.05));
    (h + t) / gamma(a)
}

/// Deterministic parameter grid.
pub fn grid(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo..hi)
}

/// `|got - want| / |want|`.
pub fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs()
}

/// Error of a log-valued quantity, absolute below magnitude one.
pub fn log_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(1.0)
}

/// Worst deviation of one library function from its oracle over a seeded grid.
#[derive(Debug, Clone)]
pub struct OracleRow {
    pub name: &'static str,
    pub points: usize,
    pub max_err: f64,
    pub worst: String,
}

impl OracleRow {
    fn new(name: &'static str) -> Self {
        OracleRow {
            name,
            points: 0,
            max_err: 0.0,
            worst: String::new(),
        }
    }

    fn record(&mut self, err: f64, at: impl FnOnce() -> String) {
        self.points += 1;
        // NaN counts as worst
        if !(err <= self.max_err) {
            self.max_err = err;
            self.worst = at();
        }
    }
}

pub const GRID_POINTS: usize = 100;

/// Every special function against its oracle on a 100-point grid at the default budget.
pub fn specfun_oracle_rows() -> Vec<OracleRow> {
    use catabird::specfun as sf;
    let budget = sf::AccuracyBudget::<f64>::default();
    let mut rows = Vec::new();

    let mut rng = grid(11);
    let mut row = OracleRow::new("bessel_i_scaled");
    for _ in 0..GRID_POINTS {
        let n = rng.random_range(0..40usize);
        let x = uniform(&mut rng, 0.0, 50.0);
        let got = sf::bessel_i_scaled(n, x).map_err(|e| e.to_string());
        let err = got.as_ref().map_or(f64::NAN, |g| rel_err(*g, bessel_i_scaled(n, x)));
        row.record(err, || format!("n={n} x={x} got={got:?}"));
    }
    rows.push(row);

    let mut rng = grid(12);
    let mut row = OracleRow::new("bessel_i_scaled_seq");
    for _ in 0..GRID_POINTS {
        let n_max = rng.random_range(0..30usize);
        let x = uniform(&mut rng, 0.0, 50.0);
        let seq = sf::bessel_i_scaled_seq(n_max, x).unwrap_or_default();
        let err = if seq.len() == n_max + 1 {
            (0..=n_max).map(|n| rel_err(seq[n], bessel_i_scaled(n, x))).fold(0.0, f64::max)
        } else {
            f64::NAN
        };
        row.record(err, || format!("n_max={n_max} x={x}"));
    }
    rows.push(row);

    let mut rng = grid(13);
    let mut row = OracleRow::new("ln_gamma");
    for _ in 0..GRID_POINTS {
        let x = uniform(&mut rng, 0.05, 60.0);
        row.record(log_err(sf::ln_gamma(x), ln_gamma(x)), || format!("x={x}"));
    }
    rows.push(row);

    let mut rng = grid(14);
    let mut row = OracleRow::new("gamma_fn");
    for _ in 0..GRID_POINTS {
        let x = uniform(&mut rng, 0.05, 30.0);
        row.record(rel_err(sf::gamma_fn(x), gamma(x)), || format!("x={x}"));
    }
    rows.push(row);

    let mut rng = grid(15);
    let mut row = OracleRow::new("ln_pochhammer");
    for _ in 0..GRID_POINTS {
        let a = uniform(&mut rng, 0.1, 20.0);
        let n = rng.random_range(0..50usize);
        row.record(log_err(sf::ln_pochhammer(a, n), ln_pochhammer(a, n)), || format!("a={a} n={n}"));
    }
    rows.push(row);

    let mut rng = grid(16);
    let mut row = OracleRow::new("log_beta");
    for _ in 0..GRID_POINTS {
        let a = uniform(&mut rng, 0.05, 30.0);
        let b = uniform(&mut rng, 0.05, 30.0);
        let err = sf::log_beta(a, b).map_or(f64::NAN, |g| log_err(g, log_beta(a, b)));
        row.record(err, || format!("a={a} b={b}"));
    }
    rows.push(row);

    let mut rng = grid(17);
    let mut row = OracleRow::new("lower_incomplete_gamma");
    for _ in 0..GRID_POINTS {
        let s = uniform(&mut rng, 0.1, 8.0);
        let x = uniform(&mut rng, 0.01, 30.0);
        let err = sf::lower_incomplete_gamma(s, x, &budget)
            .map_or(f64::NAN, |g| rel_err(g, lower_incomplete_gamma(s, x)));
        row.record(err, || format!("s={s} x={x}"));
    }
    rows.push(row);

    let mut rng = grid(18);
    let mut row = OracleRow::new("upper_incomplete_gamma");
    for _ in 0..GRID_POINTS {
        let s = uniform(&mut rng, -3.5, 6.0);
        let x = uniform(&mut rng, 0.05, 30.0);
        let err = sf::upper_incomplete_gamma(s, x, &budget)
            .map_or(f64::NAN, |g| rel_err(g, upper_incomplete_gamma(s, x)));
        row.record(err, || format!("s={s} x={x}"));
    }
    rows.push(row);

    let mut rng = grid(19);
    let mut row = OracleRow::new("exp_integral_e1");
    for _ in 0..GRID_POINTS {
        let x = uniform(&mut rng, 0.01, 40.0);
        let err = sf::exp_integral_e1(x, &budget).map_or(f64::NAN, |g| rel_err(g, upper_incomplete_gamma(0.0, x)));
        row.record(err, || format!("x={x}"));
    }
    rows.push(row);

    // c > a for x < 0 keeps Φ away from its zeros
    let mut rng = grid(20);
    let mut row = OracleRow::new("kummer_phi");
    for _ in 0..GRID_POINTS {
        let a = uniform(&mut rng, 0.1, 5.0);
        let x = uniform(&mut rng, -10.0, 25.0);
        let c = if x < 0.0 {
            a + uniform(&mut rng, 0.1, 3.0)
        } else {
            uniform(&mut rng, 0.2, 8.0)
        };
        let err = sf::kummer_phi(a, c, x, &budget).map_or(f64::NAN, |g| rel_err(g, kummer_phi(a, c, x)));
        row.record(err, || format!("a={a} c={c} x={x}"));
    }
    rows.push(row);

    // c > b keeps F away from its zeros
    let mut rng = grid(21);
    let mut row = OracleRow::new("gauss_2f1");
    for _ in 0..GRID_POINTS {
        let a = uniform(&mut rng, 0.1, 4.0);
        let b = uniform(&mut rng, 0.1, 4.0);
        let c = b + uniform(&mut rng, 0.1, 4.0);
        let x = uniform(&mut rng, 0.0, 0.9);
        let err = sf::gauss_2f1(a, b, c, x, &budget).map_or(f64::NAN, |g| rel_err(g, gauss_2f1(a, b, c, x)));
        row.record(err, || format!("a={a} b={b} c={c} x={x}"));
    }
    rows.push(row);

    let mut rng = grid(22);
    let mut row = OracleRow::new("tricomi_psi");
    let mut ln_row = OracleRow::new("ln_tricomi_psi");
    for _ in 0..GRID_POINTS {
        let a = uniform(&mut rng, 0.2, 5.0);
        let c = uniform(&mut rng, -1.5, 4.0);
        let x = uniform(&mut rng, 0.2, 10.0);
        let want = tricomi_psi(a, c, x);
        let err = sf::tricomi_psi(a, c, x, &budget).map_or(f64::NAN, |g| rel_err(g, want));
        row.record(err, || format!("a={a} c={c} x={x}"));
        let err = sf::ln_tricomi_psi(a, c, x, &budget).map_or(f64::NAN, |g| log_err(g, want.ln()));
        ln_row.record(err, || format!("a={a} c={c} x={x}"));
    }
    rows.push(row);
    rows.push(ln_row);

    rows
}
