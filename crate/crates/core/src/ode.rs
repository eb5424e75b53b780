//! Adaptive explicit Runge–Kutta (Dormand–Prince 5(4)) for the forward equations.

use crate::error::{EngineError, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions<T> {
    pub rtol: T,
    pub atol: T,
    pub max_steps: usize,
}

impl<T: Real> OdeOptions<T> {
    pub fn with_tol(tol: T) -> Self {
        Self {
            rtol: tol,
            atol: tol,
            max_steps: 2_000_000,
        }
    }
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// fifth-order weights minus embedded fourth-order weights
const E: [f64; 7] = [
    35.0 / 384.0 - 5179.0 / 57600.0,
    0.0,
    500.0 / 1113.0 - 7571.0 / 16695.0,
    125.0 / 192.0 - 393.0 / 640.0,
    -2187.0 / 6784.0 + 92097.0 / 339200.0,
    11.0 / 84.0 - 187.0 / 2100.0,
    -1.0 / 40.0,
];

/// Integrates `y' = f(t, y)` from `t0`, returning the state at each time in `outputs`
/// (nondecreasing, all ≥ `t0`). Steps are clipped to land on output times exactly.
pub fn solve_dp45<T: Real, F>(
    mut f: F,
    t0: T,
    y0: &[T],
    outputs: &[T],
    opts: OdeOptions<T>,
) -> Result<Vec<Vec<T>>>
where
    F: FnMut(T, &[T], &mut [T]),
{
    let n = y0.len();
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k: Vec<Vec<T>> = vec![vec![T::zero(); n]; 7];
    let mut stage = vec![T::zero(); n];
    let mut y_new = vec![T::zero(); n];
    f(t, &y, &mut k[0]);

    let t_end = outputs.last().copied().unwrap_or(t0);
    let span = (t_end - t0).abs().max(T::one());
    let mut h = span * T::lit(1e-3);
    let h_min = span * T::epsilon() * T::lit(16.0);
    let mut results = Vec::with_capacity(outputs.len());
    let mut steps = 0usize;

    for &target in outputs {
        if target < t {
            return Err(EngineError::InvalidArgument(format!(
                "output time {target} precedes current time {t}"
            )));
        }
        while t < target {
            steps += 1;
            if steps > opts.max_steps {
                return Err(EngineError::StepUnderflow { t: t.as_f64() });
            }
            let remaining = target - t;
            let last = h >= remaining;
            let step = if last { remaining } else { h };
            for s in 1..7 {
                for i in 0..n {
                    let mut acc = y[i];
                    for (j, kj) in k.iter().enumerate().take(s) {
                        acc = acc + step * T::lit(A[s][j]) * kj[i];
                    }
                    stage[i] = acc;
                }
                let (done, rest) = k.split_at_mut(s);
                let _ = done;
                f(t + step * T::lit(C[s]), &stage, &mut rest[0]);
            }
            // stage 7 argument equals the 5th-order solution
            y_new.copy_from_slice(&stage);
            let mut err = T::zero();
            for i in 0..n {
                let mut e = T::zero();
                for (j, kj) in k.iter().enumerate() {
                    e = e + T::lit(E[j]) * kj[i];
                }
                e = e * step;
                let sc = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
                let r = e / sc;
                err = err + r * r;
            }
            err = (err / T::from_usize_lossy(n.max(1))).sqrt();
            if err <= T::one() {
                t = if last { target } else { t + step };
                std::mem::swap(&mut y, &mut y_new);
                k.swap(0, 6);
                let grow = if err == T::zero() {
                    T::lit(5.0)
                } else {
                    (T::lit(0.9) * err.powf(T::lit(-0.2))).min(T::lit(5.0))
                };
                if !last {
                    h = step * grow.max(T::one());
                }
            } else {
                h = step * (T::lit(0.9) * err.powf(T::lit(-0.2))).max(T::lit(0.2));
                if h < h_min {
                    return Err(EngineError::StepUnderflow { t: t.as_f64() });
                }
            }
        }
        results.push(y.clone());
    }
    Ok(results)
}
