//! Globally adaptive Gauss–Kronrod (7/15) quadrature for scalar and vector integrands.

use crate::error::{EngineError, Result};
use crate::scalar::Real;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Tolerances and subdivision budget for [`integrate`] and [`integrate_vec`].
#[derive(Debug, Clone, Copy)]
pub struct QuadOptions<T> {
    pub abs_tol: T,
    pub rel_tol: T,
    pub max_intervals: usize,
}

impl<T: Real> QuadOptions<T> {
    pub fn absolute(abs_tol: T) -> Self {
        Self {
            abs_tol,
            rel_tol: T::zero(),
            max_intervals: 2000,
        }
    }

    pub fn relative(rel_tol: T) -> Self {
        Self {
            abs_tol: T::zero(),
            rel_tol,
            max_intervals: 2000,
        }
    }
}

/// Result of a quadrature with its error estimate.
#[derive(Debug, Clone)]
pub struct Quad<V, T> {
    pub value: V,
    pub error: T,
    pub evaluations: usize,
}

struct Segment<T> {
    a: T,
    b: T,
    value: Vec<T>,
    error: T,
}

fn gk15<T: Real, F>(f: &mut F, a: T, b: T, dim: usize) -> (Vec<T>, T)
where
    F: FnMut(T) -> Vec<T>,
{
    let half = (b - a) * T::lit(0.5);
    let center = (a + b) * T::lit(0.5);
    let mut kron = vec![T::zero(); dim];
    let mut gauss = vec![T::zero(); dim];
    let fc = f(center);
    for d in 0..dim {
        kron[d] = fc[d] * T::lit(WGK[7]);
        gauss[d] = fc[d] * T::lit(WG[3]);
    }
    for (i, &x) in XGK.iter().enumerate().take(7) {
        let dx = half * T::lit(x);
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        for d in 0..dim {
            let s = f1[d] + f2[d];
            kron[d] = kron[d] + s * T::lit(WGK[i]);
            if i % 2 == 1 {
                gauss[d] = gauss[d] + s * T::lit(WG[i / 2]);
            }
        }
    }
    let mut err = T::zero();
    for d in 0..dim {
        kron[d] = kron[d] * half;
        gauss[d] = gauss[d] * half;
        err = err.max((kron[d] - gauss[d]).abs());
    }
    (kron, err)
}

/// Integrates a vector-valued function over `[a, b]`; the error norm is the max over components.
pub fn integrate_vec<T: Real, F>(
    mut f: F,
    a: T,
    b: T,
    dim: usize,
    opts: QuadOptions<T>,
) -> Result<Quad<Vec<T>, T>>
where
    F: FnMut(T) -> Vec<T>,
{
    if a == b {
        return Ok(Quad {
            value: vec![T::zero(); dim],
            error: T::zero(),
            evaluations: 0,
        });
    }
    let (value, error) = gk15(&mut f, a, b, dim);
    let mut segments = vec![Segment { a, b, value, error }];
    let mut evaluations = 15;
    loop {
        let mut total = vec![T::zero(); dim];
        let mut total_err = T::zero();
        let mut worst = 0;
        for (i, s) in segments.iter().enumerate() {
            for (t, &v) in total.iter_mut().zip(&s.value) {
                *t = *t + v;
            }
            total_err = total_err + s.error;
            if s.error > segments[worst].error {
                worst = i;
            }
        }
        let scale = total.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        let target = opts.abs_tol.max(opts.rel_tol * scale);
        if total_err <= target {
            return Ok(Quad {
                value: total,
                error: total_err,
                evaluations,
            });
        }
        let s = segments.swap_remove(worst);
        let mid = (s.a + s.b) * T::lit(0.5);
        if segments.len() + 2 > opts.max_intervals || mid <= s.a || mid >= s.b {
            return Err(EngineError::Quadrature {
                tol: target.as_f64(),
                estimate: total_err.as_f64(),
            });
        }
        let (v1, e1) = gk15(&mut f, s.a, mid, dim);
        let (v2, e2) = gk15(&mut f, mid, s.b, dim);
        evaluations += 30;
        segments.push(Segment {
            a: s.a,
            b: mid,
            value: v1,
            error: e1,
        });
        segments.push(Segment {
            a: mid,
            b: s.b,
            value: v2,
            error: e2,
        });
    }
}

/// Scalar version of [`integrate_vec`].
pub fn integrate<T: Real, F>(mut f: F, a: T, b: T, opts: QuadOptions<T>) -> Result<Quad<T, T>>
where
    F: FnMut(T) -> T,
{
    let q = integrate_vec(|x| vec![f(x)], a, b, 1, opts)?;
    Ok(Quad {
        value: q.value[0],
        error: q.error,
        evaluations: q.evaluations,
    })
}
