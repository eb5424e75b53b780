//! Uniformization kernels: Poisson weights, streamed evaluation on a time grid, and a
//! cached power sequence for integrands evaluated at many times.

use crate::model::Generator;
use crate::scalar::Real;

/// Normalised Poisson(`mean`) weights on `[left, left + weights.len())`.
#[derive(Debug, Clone)]
pub(crate) struct PoissonWeights<T> {
    pub left: usize,
    pub weights: Vec<T>,
    /// Bound on the neglected probability on both sides.
    pub truncated: T,
}

impl<T: Real> PoissonWeights<T> {
    pub fn right(&self) -> usize {
        self.left + self.weights.len() - 1
    }

    pub fn get(&self, k: usize) -> T {
        if k < self.left || k > self.right() {
            T::zero()
        } else {
            self.weights[k - self.left]
        }
    }
}

/// Weights are generated outward from the mode by ratio recursion and cut where the
/// geometric bound on the remaining tail drops below `tol / 2`.
pub(crate) fn poisson_weights<T: Real>(mean: T, tol: T) -> PoissonWeights<T> {
    if mean <= T::zero() {
        return PoissonWeights {
            left: 0,
            weights: vec![T::one()],
            truncated: T::zero(),
        };
    }
    let half = tol * T::lit(0.5);
    let mode = mean.floor().to_usize().unwrap_or(0);
    let mut right = vec![T::one()];
    let mut sum = T::one();
    let mut k = mode;
    let mut right_tail;
    loop {
        let q = mean / T::from_usize_lossy(k + 1);
        let w = right[right.len() - 1] * q;
        if q < T::one() {
            let bound = w / (T::one() - q);
            if bound < half * sum {
                right_tail = bound;
                break;
            }
        }
        right.push(w);
        sum = sum + w;
        k += 1;
        if w == T::zero() {
            right_tail = T::zero();
            break;
        }
    }
    let mut left = Vec::new();
    let mut k = mode;
    let mut w = T::one();
    let mut left_tail = T::zero();
    while k > 0 {
        let q = T::from_usize_lossy(k) / mean;
        let next = w * q;
        let ratio = T::from_usize_lossy(k - 1) / mean;
        let bound = next / (T::one() - ratio);
        if bound < half * sum {
            left_tail = bound;
            break;
        }
        left.push(next);
        sum = sum + next;
        w = next;
        k -= 1;
    }
    left.reverse();
    let left_index = mode - left.len();
    left.extend(right);
    for x in left.iter_mut() {
        *x = *x / sum;
    }
    right_tail = right_tail / sum;
    PoissonWeights {
        left: left_index,
        weights: left,
        truncated: right_tail + left_tail / sum,
    }
}

/// Uniformized transition matrix step `v ← v + v·Q/Λ`.
pub(crate) struct Stepper<'a, T> {
    gen: &'a Generator<T>,
    rate: T,
    scratch: Vec<T>,
}

impl<'a, T: Real> Stepper<'a, T> {
    pub fn new(gen: &'a Generator<T>) -> Self {
        Self {
            gen,
            rate: gen.max_exit_rate(),
            scratch: vec![T::zero(); gen.dim()],
        }
    }

    pub fn rate(&self) -> T {
        self.rate
    }

    pub fn step(&mut self, v: &mut [T]) {
        if self.rate == T::zero() {
            return;
        }
        self.gen.left_mul(v, &mut self.scratch);
        let inv = self.rate.recip();
        for (x, d) in v.iter_mut().zip(&self.scratch) {
            // clamp the rounding residue that can push tiny entries below zero
            *x = (*x + *d * inv).max(T::zero());
        }
    }
}

/// Distribution at each time of `times`, starting from `p0`, accumulated in one pass.
/// Returns the vectors and the largest Poisson truncation bound.
pub(crate) fn uniformize_times<T: Real>(gen: &Generator<T>, p0: &[T], times: &[T], tol: T) -> (Vec<Vec<T>>, T) {
    let mut stepper = Stepper::new(gen);
    let rate = stepper.rate();
    let weights: Vec<PoissonWeights<T>> = times.iter().map(|&t| poisson_weights(rate * t, tol)).collect();
    let k_max = weights.iter().map(|w| w.right()).max().unwrap_or(0);
    let mut out = vec![vec![T::zero(); p0.len()]; times.len()];
    let mut v = p0.to_vec();
    for k in 0..=k_max {
        for (acc, w) in out.iter_mut().zip(&weights) {
            let wk = w.get(k);
            if wk > T::zero() {
                for (a, x) in acc.iter_mut().zip(&v) {
                    *a = *a + wk * *x;
                }
            }
        }
        if k < k_max {
            stepper.step(&mut v);
        }
    }
    let trunc = weights.iter().fold(T::zero(), |m, w| m.max(w.truncated));
    (out, trunc)
}

/// Caches `v_k = p0·P^k` (or only their projections `Σ f_n v_{k,n}`) so the distribution
/// can be evaluated cheaply at many times.
pub(crate) struct Uniformizer<T> {
    gen: Generator<T>,
    rate: T,
    tol: T,
    projection: Option<Vec<T>>,
    vectors: Vec<Vec<T>>,
    scalars: Vec<T>,
    current: Vec<T>,
    scratch: Vec<T>,
}

impl<T: Real> Uniformizer<T> {
    pub fn new(gen: Generator<T>, p0: Vec<T>, tol: T) -> Self {
        let rate = gen.max_exit_rate();
        let d = gen.dim();
        Self {
            gen,
            rate,
            tol,
            projection: None,
            vectors: vec![p0.clone()],
            scalars: Vec::new(),
            current: p0,
            scratch: vec![T::zero(); d],
        }
    }

    /// Keeps only `Σ f_n v_{k,n}` per step.
    pub fn functional(gen: Generator<T>, p0: Vec<T>, f: Vec<T>, tol: T) -> Self {
        let mut u = Self::new(gen, p0, tol);
        u.vectors.clear();
        let s = dot(&f, &u.current);
        u.scalars.push(s);
        u.projection = Some(f);
        u
    }

    pub fn generator(&self) -> &Generator<T> {
        &self.gen
    }

    fn len(&self) -> usize {
        if self.projection.is_some() {
            self.scalars.len()
        } else {
            self.vectors.len()
        }
    }

    fn grow_to(&mut self, k: usize) {
        while self.len() <= k {
            if self.rate > T::zero() {
                self.gen.left_mul(&self.current, &mut self.scratch);
                let inv = self.rate.recip();
                for (x, d) in self.current.iter_mut().zip(&self.scratch) {
                    *x = (*x + *d * inv).max(T::zero());
                }
            }
            match &self.projection {
                Some(f) => self.scalars.push(dot(f, &self.current)),
                None => self.vectors.push(self.current.clone()),
            }
        }
    }

    pub fn at(&mut self, t: T) -> Vec<T> {
        let w = poisson_weights(self.rate * t, self.tol);
        self.grow_to(w.right());
        let mut out = vec![T::zero(); self.gen.dim()];
        for (i, &wk) in w.weights.iter().enumerate() {
            for (a, x) in out.iter_mut().zip(&self.vectors[w.left + i]) {
                *a = *a + wk * *x;
            }
        }
        out
    }

    pub fn functional_at(&mut self, t: T) -> T {
        let w = poisson_weights(self.rate * t, self.tol);
        self.grow_to(w.right());
        w.weights
            .iter()
            .enumerate()
            .fold(T::zero(), |acc, (i, &wk)| acc + wk * self.scalars[w.left + i])
    }
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |s, (x, y)| s + *x * *y)
}
