//! Scalar special functions used by the closed-form reference formulas.
//!
//! Every series here stops once three consecutive terms fall below
//! `rel_tol` relative to the running sum (the Gauss series uses its geometric
//! tail bound in place of the term), and reports non-convergence
//! instead of returning a truncated value when `max_terms` runs out.

mod bessel;
mod gamma;
mod hypergeometric;

pub use bessel::{bessel_i_scaled, bessel_i_scaled_seq};
pub use gamma::{
    exp_integral_e1, gamma_fn, ln_gamma, ln_pochhammer, log_beta, lower_incomplete_gamma,
    upper_incomplete_gamma,
};
pub use hypergeometric::{gauss_2f1, kummer_phi, ln_tricomi_psi, tricomi_psi};

use crate::error::SpecFunError;
use crate::scalar::Real;

/// Accuracy contract handed to every kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccuracyBudget<T> {
    pub rel_tol: T,
    pub max_terms: usize,
}

impl<T: Real> AccuracyBudget<T> {
    pub fn new(rel_tol: T, max_terms: usize) -> Result<Self, SpecFunError> {
        if !(rel_tol > T::zero() && rel_tol <= T::lit(1e-6)) {
            return Err(SpecFunError::Domain {
                name: "rel_tol",
                value: rel_tol.as_f64(),
                expected: "0 < rel_tol <= 1e-6",
            });
        }
        if max_terms < 32 {
            return Err(SpecFunError::Domain {
                name: "max_terms",
                value: max_terms as f64,
                expected: "max_terms >= 32",
            });
        }
        Ok(Self { rel_tol, max_terms })
    }

    /// Same term budget, tolerance divided by `factor`.
    pub fn tightened(self, factor: T) -> Self {
        Self {
            rel_tol: self.rel_tol / factor,
            max_terms: self.max_terms,
        }
    }
}

impl<T: Real> Default for AccuracyBudget<T> {
    fn default() -> Self {
        Self {
            rel_tol: T::lit(1e-12).max(T::epsilon() * T::lit(8.0)),
            max_terms: 20_000,
        }
    }
}

/// Tracks the "three consecutive small terms" stopping rule.
pub(crate) struct Termination {
    streak: u8,
}

impl Termination {
    pub(crate) fn new() -> Self {
        Self { streak: 0 }
    }

    pub(crate) fn done<T: Real>(&mut self, term: T, sum: T, rel_tol: T) -> bool {
        if term.abs() <= rel_tol * sum.abs() {
            self.streak += 1;
        } else {
            self.streak = 0;
        }
        self.streak >= 3
    }
}

pub(crate) fn check_finite<T: Real>(name: &'static str, v: T) -> Result<(), SpecFunError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(SpecFunError::Domain {
            name,
            value: v.as_f64(),
            expected: "finite",
        })
    }
}

pub(crate) fn is_nonpositive_integer<T: Real>(c: T) -> bool {
    c <= T::zero() && c == c.round()
}
