//! Direct solvers: Thomas factorisation for tridiagonal systems and sparse
//! Gaussian elimination with partial pivoting for banded systems carrying a
//! dense row or column.

use std::collections::BTreeMap;

use crate::error::{EngineError, Result};
use crate::scalar::Real;

/// LU factors of a tridiagonal matrix with sub-diagonal `lower[i] = A[i][i-1]`,
/// diagonal `diag[i]` and super-diagonal `upper[i] = A[i][i+1]`.
#[derive(Debug, Clone)]
pub struct TridiagonalLu<T> {
    lower: Vec<T>,
    pivots: Vec<T>,
    upper: Vec<T>,
}

impl<T: Real> TridiagonalLu<T> {
    pub fn factor(lower: &[T], diag: &[T], upper: &[T]) -> Result<Self> {
        let n = diag.len();
        let mut pivots = Vec::with_capacity(n);
        for i in 0..n {
            let p = if i == 0 {
                diag[0]
            } else {
                diag[i] - lower[i] * upper[i - 1] / pivots[i - 1]
            };
            if p == T::zero() || !p.is_finite() {
                return Err(EngineError::Singular(i));
            }
            pivots.push(p);
        }
        Ok(Self {
            lower: lower.to_vec(),
            pivots,
            upper: upper.to_vec(),
        })
    }

    pub fn len(&self) -> usize {
        self.pivots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pivots.is_empty()
    }

    pub fn solve(&self, rhs: &[T]) -> Vec<T> {
        let n = self.len();
        let mut y = Vec::with_capacity(n);
        for i in 0..n {
            let v = if i == 0 {
                rhs[0]
            } else {
                rhs[i] - self.lower[i] * y[i - 1] / self.pivots[i - 1]
            };
            y.push(v);
        }
        let mut x = vec![T::zero(); n];
        for i in (0..n).rev() {
            let carry = if i + 1 < n { self.upper[i] * x[i + 1] } else { T::zero() };
            x[i] = (y[i] - carry) / self.pivots[i];
        }
        x
    }
}

/// Square sparse matrix assembled from triplets; duplicates are summed.
#[derive(Debug, Clone)]
pub struct SparseMatrix<T> {
    rows: Vec<BTreeMap<usize, T>>,
}

impl<T: Real> SparseMatrix<T> {
    pub fn new(n: usize) -> Self {
        Self {
            rows: vec![BTreeMap::new(); n],
        }
    }

    pub fn add(&mut self, row: usize, col: usize, value: T) {
        if value != T::zero() {
            let e = self.rows[row].entry(col).or_insert(T::zero());
            *e = *e + value;
        }
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::new(self.rows.len());
        for (i, row) in self.rows.iter().enumerate() {
            for (&j, &v) in row {
                t.add(j, i, v);
            }
        }
        t
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    /// Solves `A x = b` by elimination with partial pivoting, consuming the matrix.
    pub fn solve(self, rhs: &[T]) -> Result<Vec<T>> {
        let n = self.rows.len();
        let mut rows = self.rows;
        let mut b = rhs.to_vec();
        for k in 0..n {
            let mut best: Option<(usize, T)> = None;
            for (i, row) in rows.iter().enumerate().skip(k) {
                if let Some(&v) = row.get(&k) {
                    if best.is_none_or(|(_, bv)| v.abs() > bv.abs()) {
                        best = Some((i, v));
                    }
                }
            }
            let (p, pv) = match best {
                Some(bp) if bp.1 != T::zero() => bp,
                _ => return Err(EngineError::Singular(k)),
            };
            rows.swap(k, p);
            b.swap(k, p);
            let pivot_row: Vec<(usize, T)> = rows[k].iter().map(|(&c, &v)| (c, v)).collect();
            for i in (k + 1)..n {
                let Some(&f) = rows[i].get(&k) else { continue };
                let factor = f / pv;
                for &(c, v) in &pivot_row {
                    let e = rows[i].entry(c).or_insert(T::zero());
                    *e = *e - factor * v;
                }
                rows[i].remove(&k);
                b[i] = b[i] - factor * b[k];
            }
        }
        let mut x = vec![T::zero(); n];
        for k in (0..n).rev() {
            let mut acc = b[k];
            let mut diag = T::zero();
            for (&c, &v) in &rows[k] {
                if c == k {
                    diag = v;
                } else if c > k {
                    acc = acc - v * x[c];
                }
            }
            x[k] = acc / diag;
        }
        Ok(x)
    }
}
