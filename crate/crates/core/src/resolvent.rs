//! Laplace-domain quantities from finite linear solves on truncated generators.

use crate::error::{EngineError, Result};
use crate::linalg::{SparseMatrix, TridiagonalLu};
use crate::model::{truncated_generator, Generator, GeneratorVariant, ProcessSpec, TruncationWindow, MAX_WINDOW};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResolventVariant {
    Hat,
    Cat,
    ModifiedM,
}

/// Which identity `resolvent_cat` is computed through.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ResolventRoute {
    /// Two catastrophe-free solves at `λ + ξ`.
    #[default]
    Reduction,
    /// One sparse solve on the generator with catastrophes.
    Direct,
}

/// A row `π_{j,·}(λ)` of a resolvent over a window.
#[derive(Debug, Clone)]
pub struct ResolventSolution<T = f64> {
    pub lambda: T,
    pub source: usize,
    pub r: usize,
    /// `values[i]` belongs to state `r + i`.
    pub values: Vec<T>,
    /// Transform of the cemetery probability, for the modified process only.
    pub cemetery: Option<T>,
    pub variant: ResolventVariant,
    pub window: TruncationWindow<T>,
}

impl<T: Real> ResolventSolution<T> {
    pub fn value(&self, n: usize) -> T {
        if n < self.r {
            return T::zero();
        }
        self.values.get(n - self.r).copied().unwrap_or(T::zero())
    }

    pub fn total(&self) -> T {
        self.values.iter().copied().sum::<T>() + self.cemetery.unwrap_or(T::zero())
    }
}

fn check_lambda<T: Real>(lambda: T) -> Result<()> {
    if !(lambda > T::zero() && lambda.is_finite()) {
        return Err(EngineError::InvalidArgument(format!(
            "transform argument must be positive and finite, got {lambda}"
        )));
    }
    Ok(())
}

/// Factored `(λI - Q̂)` for the catastrophe-free generator on a certified window.
///
/// Rows `π̂_{j,·}(λ)` solve `π (λI - Q̂) = e_j`; the window is doubled until
/// `λ Σ_{upper half} π̂_{j,n} < tail_tol / 10` for every requested source.
pub struct HatResolvent<T = f64> {
    lambda: T,
    r: usize,
    window: TruncationWindow<T>,
    lu: TridiagonalLu<T>,
}

fn factor_transposed<T: Real>(gen: &Generator<T>, lambda: T) -> Result<TridiagonalLu<T>> {
    let d = gen.dim();
    let diag: Vec<T> = gen.diag.iter().map(|&q| lambda - q).collect();
    let lower: Vec<T> = (0..d).map(|i| if i > 0 { -gen.up[i - 1] } else { T::zero() }).collect();
    let upper: Vec<T> = (0..d).map(|i| if i + 1 < d { -gen.down[i + 1] } else { T::zero() }).collect();
    TridiagonalLu::factor(&lower, &diag, &upper)
}

impl<T: Real> HatResolvent<T> {
    pub fn new(spec: &ProcessSpec<T>, lambda: T, sources: &[usize], window: &TruncationWindow<T>) -> Result<Self> {
        check_lambda(lambda)?;
        let r = spec.r;
        let mut w = *window;
        for &s in sources {
            w = w.covering(r, s);
            w.index(r, s)?;
        }
        loop {
            let gen = truncated_generator(spec, &w, GeneratorVariant::Hat)?;
            let lu = factor_transposed(&gen, lambda)?;
            let mut tail = T::zero();
            for &s in sources {
                let mut e = vec![T::zero(); gen.dim()];
                e[s - r] = T::one();
                let row = lu.solve(&e);
                let upper_half: T = row.iter().enumerate().filter(|(i, _)| i * 2 > w.upper).map(|(_, &p)| p).sum();
                tail = tail.max(lambda * upper_half);
            }
            if tail <= w.tail_tol * T::lit(0.1) || !w.adaptive {
                return Ok(Self {
                    lambda,
                    r,
                    window: w,
                    lu,
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

    pub fn window(&self) -> TruncationWindow<T> {
        self.window
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    /// `x` with `x (λI - Q̂) = rhs`.
    pub fn solve(&self, rhs: &[T]) -> Vec<T> {
        self.lu.solve(rhs)
    }

    /// `π̂_{j,·}(λ)`; `j` must lie in the window.
    pub fn row(&self, j: usize) -> Result<Vec<T>> {
        let i = self.window.index(self.r, j)?;
        let mut e = vec![T::zero(); self.window.dim()];
        e[i] = T::one();
        Ok(self.lu.solve(&e))
    }

    /// `γ̂_{j,k}(λ)` and its λ-derivative, with `γ̂_{k,k} = 1`.
    pub fn gamma(&self, j: usize, k: usize) -> Result<GammaHat<T>> {
        if j == k {
            return Ok(GammaHat {
                value: T::one(),
                derivative: T::zero(),
            });
        }
        let ki = self.window.index(self.r, k)?;
        let pj = self.row(j)?;
        let pk = self.row(k)?;
        // dπ/dλ = -π (λI - Q̂)^{-1}
        let dj = -self.solve(&pj)[ki];
        let dk = -self.solve(&pk)[ki];
        let (a, b) = (pj[ki], pk[ki]);
        if b <= T::zero() {
            return Err(EngineError::Singular(ki));
        }
        Ok(GammaHat {
            value: a / b,
            derivative: (dj * b - a * dk) / (b * b),
        })
    }
}

/// Catastrophe-free first-visit transform with its derivative in λ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaHat<T = f64> {
    pub value: T,
    pub derivative: T,
}

/// `π̂_{j,·}(λ)` of the catastrophe-free process.
pub fn resolvent_hat<T: Real>(
    spec: &ProcessSpec<T>,
    j: usize,
    lambda: T,
    window: &TruncationWindow<T>,
) -> Result<ResolventSolution<T>> {
    let hat = spec.hat();
    let s = HatResolvent::new(&hat, lambda, &[j], window)?;
    Ok(ResolventSolution {
        lambda,
        source: j,
        r: spec.r,
        values: s.row(j)?,
        cemetery: None,
        variant: ResolventVariant::Hat,
        window: s.window(),
    })
}

/// Solves `x (λI - Q) = e_j` for a generator with a jump column, by sparse elimination.
fn sparse_row<T: Real>(gen: &Generator<T>, lambda: T, j: usize) -> Result<Vec<T>> {
    let d = gen.dim();
    let mut m = SparseMatrix::new(d);
    for i in 0..d {
        let (off, diag) = gen.row(i);
        // transposed: column i of (λI - Q) becomes row i
        m.add(i, i, lambda - diag);
        for (c, v) in off {
            m.add(c, i, -v);
        }
    }
    let mut e = vec![T::zero(); d];
    e[gen.index_of(j)] = T::one();
    m.solve(&e)
}

/// `π_{j,·}(λ)` of the process with catastrophes.
pub fn resolvent_cat<T: Real>(
    spec: &ProcessSpec<T>,
    j: usize,
    lambda: T,
    window: &TruncationWindow<T>,
    route: ResolventRoute,
) -> Result<ResolventSolution<T>> {
    check_lambda(lambda)?;
    let hat = spec.hat();
    let xi = spec.xi;
    let s = HatResolvent::new(&hat, lambda + xi, &[j, spec.r], window)?;
    let values = match route {
        ResolventRoute::Reduction => {
            let pj = s.row(j)?;
            let pr = s.row(spec.r)?;
            let c = xi / lambda;
            pj.iter().zip(&pr).map(|(&a, &b)| a + c * b).collect()
        }
        ResolventRoute::Direct => {
            let gen = truncated_generator(spec, &s.window(), GeneratorVariant::WithCatastrophes)?;
            sparse_row(&gen, lambda, j)?
        }
    };
    Ok(ResolventSolution {
        lambda,
        source: j,
        r: spec.r,
        values,
        cemetery: None,
        variant: ResolventVariant::Cat,
        window: s.window(),
    })
}

/// `γ̂_{j,k}(λ)` with derivative.
pub fn gamma_hat<T: Real>(
    spec: &ProcessSpec<T>,
    j: usize,
    k: usize,
    lambda: T,
    window: &TruncationWindow<T>,
) -> Result<GammaHat<T>> {
    let s = HatResolvent::new(&spec.hat(), lambda, &[j, k], window)?;
    s.gamma(j, k)
}

/// First-visit transform with catastrophes, `γ_{j,k}(λ)`; exactly 1 at `λ = 0` when `ξ > 0`.
pub fn gamma_cat<T: Real>(
    spec: &ProcessSpec<T>,
    j: usize,
    k: usize,
    lambda: T,
    window: &TruncationWindow<T>,
) -> Result<T> {
    if j == k {
        return Err(EngineError::InvalidArgument("first-visit transform needs j != k".into()));
    }
    let xi = spec.xi;
    if lambda == T::zero() {
        if xi > T::zero() {
            return Ok(T::one());
        }
        return Err(EngineError::InvalidArgument(
            "without catastrophes the first-visit transform at 0 may be defective".into(),
        ));
    }
    check_lambda(lambda)?;
    let s = HatResolvent::new(&spec.hat(), lambda + xi, &[j, k, spec.r], window)?;
    let g_jk = s.gamma(j, k)?.value;
    let g_rk = s.gamma(spec.r, k)?.value;
    Ok((lambda * g_jk + xi * g_rk) / (lambda + xi * g_rk))
}

/// Transform of the k-avoiding probabilities `𝒜^{⟨k⟩}_{j,n}(λ)` with catastrophes.
///
/// Valid for `k > r` with `j, n < k`, or for `j > k` with `n != k`.
pub fn avoid_transform<T: Real>(
    spec: &ProcessSpec<T>,
    j: usize,
    n: usize,
    k: usize,
    lambda: T,
    window: &TruncationWindow<T>,
) -> Result<T> {
    let r = spec.r;
    let below = k > r && (r..k).contains(&j) && (r..k).contains(&n);
    let above = j > k && n != k && n >= r && k >= r;
    if !below && !above {
        return Err(EngineError::InvalidArgument(format!(
            "avoiding transform undefined for j = {j}, n = {n}, k = {k}"
        )));
    }
    check_lambda(lambda)?;
    let xi = spec.xi;
    let s = HatResolvent::new(&spec.hat(), lambda + xi, &[j, n, k, r], window)?;
    let (ni, pj, pk, pr) = (n - r, s.row(j)?, s.row(k)?, s.row(r)?);
    let g_jk = s.gamma(j, k)?.value;
    let g_rk = s.gamma(r, k)?.value;
    Ok(pj[ni] - g_jk * pk[ni] + xi * (T::one() - g_jk) / (lambda + xi * g_rk) * (pr[ni] - g_rk * pk[ni]))
}

/// `π̂_{j,n}(λ) - γ̂_{j,k}(λ) π̂_{k,n}(λ)`, the catastrophe-free avoiding transform.
pub fn avoid_transform_hat<T: Real>(
    spec: &ProcessSpec<T>,
    j: usize,
    n: usize,
    k: usize,
    lambda: T,
    window: &TruncationWindow<T>,
) -> Result<T> {
    let s = HatResolvent::new(&spec.hat(), lambda, &[j, n, k], window)?;
    let ni = n - spec.r;
    Ok(s.row(j)?[ni] - s.gamma(j, k)?.value * s.row(k)?[ni])
}

/// State of the modified process, whose cemetery sits just below the floor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MState {
    Cemetery,
    State(usize),
}

/// `η_{j,n}(λ)` of the modified process, from catastrophe-free solves at `λ + ξ`.
pub fn eta_transform<T: Real>(
    spec: &ProcessSpec<T>,
    j: usize,
    n: MState,
    lambda: T,
    window: &TruncationWindow<T>,
) -> Result<T> {
    check_lambda(lambda)?;
    let r = spec.r;
    let xi = spec.xi;
    let mut sources = vec![j, r];
    if let MState::State(m) = n {
        sources.push(m);
    }
    let s = HatResolvent::new(&spec.hat(), lambda + xi, &sources, window)?;
    let pj = s.row(j)?;
    let pr = s.row(r)?;
    let ratio = pj[0] / (T::one() - xi * pr[0]);
    Ok(match n {
        MState::Cemetery => xi / (lambda + xi) * (lambda.recip() - ratio),
        MState::State(m) => {
            let mi = s.window().index(r, m)?;
            pj[mi] + xi * pr[mi] * ratio
        }
    })
}

/// `η_{j,·}(λ)` by one sparse solve on the modified generator.
pub fn eta_direct<T: Real>(
    spec: &ProcessSpec<T>,
    j: usize,
    lambda: T,
    window: &TruncationWindow<T>,
) -> Result<ResolventSolution<T>> {
    check_lambda(lambda)?;
    let s = HatResolvent::new(&spec.hat(), lambda + spec.xi, &[j, spec.r], window)?;
    let gen = truncated_generator(spec, &s.window(), GeneratorVariant::ModifiedM)?;
    let mut row = sparse_row(&gen, lambda, j)?;
    let cemetery = row.remove(0);
    Ok(ResolventSolution {
        lambda,
        source: j,
        r: spec.r,
        values: row,
        cemetery: Some(cemetery),
        variant: ResolventVariant::ModifiedM,
        window: s.window(),
    })
}

/// How `delta_transform` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DeltaForm {
    /// `λ η_{j,r-1}(λ)`.
    #[default]
    Cemetery,
    /// Through the first-visit transform `γ_{j,r}`; needs `j > r`.
    FirstVisit,
}

/// Transform `δ_{j,r}(λ)` of the time to the first effective catastrophe; 1 at `λ = 0`.
pub fn delta_transform<T: Real>(
    spec: &ProcessSpec<T>,
    j: usize,
    lambda: T,
    window: &TruncationWindow<T>,
    form: DeltaForm,
) -> Result<T> {
    let xi = spec.xi;
    if xi <= T::zero() {
        return Err(EngineError::InvalidArgument("effective catastrophes need xi > 0".into()));
    }
    if lambda == T::zero() {
        return Ok(T::one());
    }
    check_lambda(lambda)?;
    let r = spec.r;
    let s = HatResolvent::new(&spec.hat(), lambda + xi, &[j, r], window)?;
    let p_rr = s.row(r)?[0];
    let denom = T::one() - xi * p_rr;
    let w = lambda / (lambda + xi);
    match form {
        DeltaForm::Cemetery => {
            let p_jr = s.row(j)?[0];
            Ok(xi / (lambda + xi) - w * xi * p_jr / denom)
        }
        DeltaForm::FirstVisit => {
            if j <= r {
                return Err(EngineError::InvalidArgument(format!(
                    "first-visit form needs j > r, got j = {j}"
                )));
            }
            let g = s.gamma(j, r)?.value;
            let gamma = w * g + xi / (lambda + xi);
            Ok(gamma - w * g / denom)
        }
    }
}
