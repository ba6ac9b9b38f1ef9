//! The flat function `ψ(x) = e^{-1/x}` (`x > 0`), `ψ(x) = 0` (`x ≤ 0`),
//! and its derivatives.
//!
//! For `x > 0`, `ψ⁽ʲ⁾(x) = e^{-t} R_j(t)` with `t = 1/x`, `R₀ = 1` and
//! `R_{j+1}(t) = t²(R_j(t) − R_j′(t))`. The polynomials have exact integer
//! coefficients. For `x ≤ 0` the value is `0` and no reciprocal is formed.

use std::sync::OnceLock;

use super::eval::EvalError;

/// Highest derivative order with tabulated coefficients. `R_16` has degree
/// 32 and coefficients below `2^49`.
pub const FLAT_ORDER_CAP: u32 = 16;

fn table() -> &'static [Vec<i128>] {
    static TABLE: OnceLock<Vec<Vec<i128>>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut polys: Vec<Vec<i128>> = vec![vec![1]];
        for _ in 0..FLAT_ORDER_CAP {
            let r = polys.last().expect("nonempty");
            // q = R - R'
            let mut q = r.clone();
            for (k, c) in r.iter().enumerate().skip(1) {
                q[k - 1] = q[k - 1]
                    .checked_sub(c.checked_mul(k as i128).expect("coefficient overflow"))
                    .expect("coefficient overflow");
            }
            let mut next = vec![0i128; 2];
            next.extend(q);
            polys.push(next);
        }
        polys
    })
}

/// Integer coefficients of `R_j`, lowest degree first.
pub fn recurrence_coefficients(order: u32) -> Option<&'static [i128]> {
    table().get(order as usize).map(Vec::as_slice)
}

/// `ψ⁽ʲ⁾(x)`; `FlatOrderSaturated` if `j` exceeds [`FLAT_ORDER_CAP`].
pub fn flat_eval(x: f64, order: u32) -> Result<f64, EvalError> {
    let coeffs = recurrence_coefficients(order).ok_or(EvalError::FlatOrderSaturated { order })?;
    if x <= 0.0 || x.is_nan() {
        return Ok(0.0);
    }
    let t = 1.0 / x;
    if t <= 64.0 {
        let poly = coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c as f64);
        Ok((-t).exp() * poly)
    } else if t < 2000.0 {
        // log-space terms avoid overflow of t^k before the e^{-t} factor
        let lt = t.ln();
        Ok(coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0)
            .map(|(k, &c)| (c as f64).signum() * ((c.unsigned_abs() as f64).ln() + k as f64 * lt - t).exp())
            .sum())
    } else {
        Ok(0.0)
    }
}

/// Natural log of `|ψ⁽ʲ⁾(x)|` and its sign, for use where the value itself
/// underflows. Returns `None` when the value is exactly zero.
pub fn flat_log_abs(x: f64, order: u32) -> Result<Option<(f64, f64)>, EvalError> {
    let coeffs = recurrence_coefficients(order).ok_or(EvalError::FlatOrderSaturated { order })?;
    if x <= 0.0 || x.is_nan() {
        return Ok(None);
    }
    let t = 1.0 / x;
    let lt = t.ln();
    // log-sum-exp over the signed terms c_k t^k
    let terms: Vec<(f64, f64)> = coeffs
        .iter()
        .enumerate()
        .filter(|(_, c)| **c != 0)
        .map(|(k, &c)| ((c as f64).signum(), (c.unsigned_abs() as f64).ln() + k as f64 * lt))
        .collect();
    let top = terms.iter().map(|t| t.1).fold(f64::NEG_INFINITY, f64::max);
    let s: f64 = terms.iter().map(|(sg, l)| sg * (l - top).exp()).sum();
    if s == 0.0 {
        return Ok(None);
    }
    Ok(Some((s.signum(), top + s.abs().ln() - t)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn first_recurrence_polynomials() {
        assert_eq!(recurrence_coefficients(0).unwrap(), &[1]);
        assert_eq!(recurrence_coefficients(1).unwrap(), &[0, 0, 1]);
        // R_2 = t^4 - 2 t^3
        assert_eq!(recurrence_coefficients(2).unwrap(), &[0, 0, 0, -2, 1]);
        assert_eq!(recurrence_coefficients(16).unwrap().len(), 33);
        assert!(recurrence_coefficients(17).is_none());
    }

    #[test]
    fn reference_values() {
        assert_relative_eq!(flat_eval(1.0, 0).unwrap(), (-1.0f64).exp(), max_relative = 1e-15);
        assert_relative_eq!(flat_eval(1.0, 0).unwrap(), 0.3678794, epsilon = 1e-7);
        assert_eq!(flat_eval(-2.0, 0).unwrap(), 0.0);
        assert_eq!(flat_eval(0.0, 3).unwrap(), 0.0);
        assert_eq!(flat_eval(-1.0, 5).unwrap(), 0.0);
        // e^{-2} (16 − 16)
        assert_eq!(flat_eval(0.5, 2).unwrap(), 0.0);
        assert_relative_eq!(flat_eval(0.5, 1).unwrap(), 4.0 * (-2.0f64).exp(), max_relative = 1e-15);
        assert_relative_eq!(flat_eval(0.25, 1).unwrap(), 16.0 * (-4.0f64).exp(), max_relative = 1e-15);
        assert!(matches!(flat_eval(0.5, 17), Err(EvalError::FlatOrderSaturated { order: 17 })));
    }

    #[test]
    fn tiny_arguments_do_not_overflow() {
        for x in [1e-3, 1e-5, 1e-300, f64::MIN_POSITIVE] {
            for j in 0..=FLAT_ORDER_CAP {
                let v = flat_eval(x, j).unwrap();
                assert!(v.is_finite(), "x={x} j={j}");
            }
        }
        // both branches agree where they meet
        let x = 1.0 / 64.0;
        let lt = (64.0f64).ln();
        for j in 0..6u32 {
            let c = recurrence_coefficients(j).unwrap();
            let direct: f64 = c
                .iter()
                .enumerate()
                .map(|(k, &a)| a as f64 * (k as f64 * lt - 64.0).exp())
                .sum();
            assert_relative_eq!(flat_eval(x, j).unwrap(), direct, max_relative = 1e-9);
        }
    }

    #[test]
    fn log_abs_matches_value() {
        let (s, l) = flat_log_abs(0.1, 0).unwrap().unwrap();
        assert_eq!(s, 1.0);
        assert_relative_eq!(l, -10.0, max_relative = 1e-14);
        let (s, l) = flat_log_abs(0.01, 0).unwrap().unwrap();
        assert_eq!(s, 1.0);
        assert_relative_eq!(l, -100.0, max_relative = 1e-14);
        // derivative 2 at x = 0.25: e^{-4}(256 − 128) > 0
        let (s, l) = flat_log_abs(0.25, 2).unwrap().unwrap();
        assert_eq!(s, 1.0);
        assert_relative_eq!(l.exp(), flat_eval(0.25, 2).unwrap(), max_relative = 1e-12);
        assert!(flat_log_abs(-1.0, 0).unwrap().is_none());
    }
}
