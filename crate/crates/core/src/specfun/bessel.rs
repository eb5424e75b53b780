use super::check_finite;
use crate::error::SpecFunError;
use crate::scalar::Real;

/// e^{−x} I_k(x) for k = 0..=n_max.
///
/// Miller's backward recurrence I_{k−1} = I_{k+1} + (2k/x) I_k, normalised with
/// e^x = I_0(x) + 2 Σ_{k≥1} I_k(x). Every returned value lies in [0, 1].
pub fn bessel_i_scaled_seq<T: Real>(n_max: usize, x: T) -> Result<Vec<T>, SpecFunError> {
    check_finite("x", x)?;
    if x < T::zero() {
        return Err(SpecFunError::Domain {
            name: "x",
            value: x.as_f64(),
            expected: "x >= 0",
        });
    }
    let mut out = vec![T::zero(); n_max + 1];
    if x == T::zero() {
        out[0] = T::one();
        return Ok(out);
    }
    let xf = x.as_f64();
    let reach = (n_max as f64).max(xf);
    let start = (n_max as f64 + (200.0 * n_max as f64).sqrt())
        .max(reach + 9.0 * reach.sqrt())
        .ceil() as usize
        + 30;

    let big = T::max_value().sqrt();
    let two_over_x = T::lit(2.0) / x;
    let mut upper = T::zero();
    let mut current = T::min_positive_value().sqrt();
    let mut norm = T::zero();
    for k in (1..=start).rev() {
        let lower = upper + T::from_usize_lossy(k) * two_over_x * current;
        upper = current;
        current = lower;
        // `upper` now holds I_k, `current` holds I_{k−1}
        if k <= n_max {
            out[k] = upper;
        }
        norm = norm + T::lit(2.0) * upper;
        if current > big {
            let scale = big.recip();
            current = current * scale;
            upper = upper * scale;
            norm = norm * scale;
            for v in out.iter_mut().skip(k) {
                *v = *v * scale;
            }
        }
    }
    out[0] = current;
    norm = norm + current;
    for v in out.iter_mut() {
        *v = *v / norm;
    }
    Ok(out)
}

/// e^{−x} I_n(x) for integer n ≥ 0 and x ≥ 0.
pub fn bessel_i_scaled<T: Real>(n: usize, x: T) -> Result<T, SpecFunError> {
    Ok(bessel_i_scaled_seq(n, x)?[n])
}
