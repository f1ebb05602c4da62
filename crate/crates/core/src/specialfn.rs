//! Bessel functions of integer order, log-factorial and the unnormalized sinc.

use crate::error::{Error, Result};

const SERIES_CUTOFF: f64 = 1.0;
const RESCALE: f64 = 1e250;

/// Bessel function of the first kind, `J_n(x)`.
pub fn bessel_j(order: i32, x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("bessel_j: argument must be finite, got {x}")));
    }
    Ok(jn(order, x))
}

/// Modified Bessel function of the first kind, `I_n(x)`, for `x >= 0`.
///
/// Fails with a range error once `I_n(x)` no longer fits in an `f64`;
/// use [`bessel_i_scaled`] there.
pub fn bessel_i(order: i32, x: f64) -> Result<f64> {
    let scaled = bessel_i_scaled(order, x)?;
    let value = scaled * x.exp();
    if !value.is_finite() {
        return Err(Error::Range(format!(
            "bessel_i({order}, {x}) overflows f64; use bessel_i_scaled"
        )));
    }
    Ok(value)
}

/// Exponentially scaled modified Bessel function, `e^{-x} I_n(x)`.
pub fn bessel_i_scaled(order: i32, x: f64) -> Result<f64> {
    if !x.is_finite() || x < 0.0 {
        return Err(Error::Domain(format!(
            "bessel_i: argument must be finite and non-negative, got {x}"
        )));
    }
    Ok(ive(order.unsigned_abs(), x))
}

/// `sin(x)/x` with `sinc(0) = 1`.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 * (1.0 - x2 / 20.0)
    } else {
        x.sin() / x
    }
}

/// Natural logarithm of `n!`.
pub fn log_factorial(n: u32) -> f64 {
    if n <= 170 {
        let mut p = 1.0_f64;
        for k in 2..=n {
            p *= k as f64;
        }
        p.ln()
    } else {
        let head = log_factorial(170);
        (171..=n).fold(head, |acc, k| acc + (k as f64).ln())
    }
}

/// `J_n(x)` for any finite `x`, mapping negative order and argument onto `n, x >= 0`.
pub(crate) fn jn(order: i32, x: f64) -> f64 {
    let n = order.unsigned_abs();
    let v = jn_nonneg(n, x.abs());
    if n % 2 == 1 && ((x < 0.0) != (order < 0)) {
        -v
    } else {
        v
    }
}

fn jn_nonneg(n: u32, x: f64) -> f64 {
    if x == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    if x < SERIES_CUTOFF {
        return series(n, x, -1.0);
    }
    jn_miller(n, x)
}

/// Power series `sum_k s^k (x/2)^{2k+n} / (k! (k+n)!)` with `s = -1` for J and `+1` for I.
fn series(n: u32, x: f64, sign: f64) -> f64 {
    let half = 0.5 * x;
    let mut term = 1.0;
    for k in 1..=n {
        term *= half / k as f64;
    }
    let q = sign * half * half;
    let mut sum = term;
    let mut k = 1.0;
    loop {
        term *= q / (k * (k + n as f64));
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() || k > 200.0 {
            break;
        }
        k += 1.0;
    }
    sum
}

fn jn_miller(n: u32, x: f64) -> f64 {
    let big = (n as f64).max(x);
    let mut m = (big + 30.0 + (60.0 * big).sqrt()) as u32;
    m += m % 2;
    let mut j_next = 0.0_f64;
    let mut j = 1e-300_f64;
    let mut ans = 0.0;
    let mut norm = 2.0 * j;
    for k in (1..=m).rev() {
        let prev = (2.0 * k as f64 / x) * j - j_next;
        j_next = j;
        j = prev;
        let idx = k - 1;
        if idx == n {
            ans = j;
        }
        if idx == 0 {
            norm += j;
        } else if idx % 2 == 0 {
            norm += 2.0 * j;
        }
        if j.abs() > RESCALE {
            j /= RESCALE;
            j_next /= RESCALE;
            ans /= RESCALE;
            norm /= RESCALE;
        }
    }
    ans / norm
}

/// `e^{-x} I_n(x)` for `x >= 0`.
pub(crate) fn ive(n: u32, x: f64) -> f64 {
    if x == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    if x < SERIES_CUTOFF {
        return series(n, x, 1.0) * (-x).exp();
    }
    // Backward recurrence normalised by I_0 + 2 sum I_k = e^x, which yields e^{-x} I_n directly.
    let mut m = n + 30 + (12.0 * x.sqrt()) as u32;
    m = m.max(n + 30);
    let mut i_next = 0.0_f64;
    let mut i = 1e-300_f64;
    let mut ans = 0.0;
    let mut norm = 2.0 * i;
    for k in (1..=m).rev() {
        let prev = (2.0 * k as f64 / x) * i + i_next;
        i_next = i;
        i = prev;
        let idx = k - 1;
        if idx == n {
            ans = i;
        }
        norm += if idx == 0 { i } else { 2.0 * i };
        if i > RESCALE {
            i /= RESCALE;
            i_next /= RESCALE;
            ans /= RESCALE;
            norm /= RESCALE;
        }
    }
    ans / norm
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    /// Composite Gauss-Legendre on [0, pi] of cos(n t - x sin t), 100 panels x 100 nodes.
    fn j_integral(n: i32, x: f64) -> f64 {
        let rule = crate::quadrature::CompositeGaussLegendre::new(100, 100);
        rule.integrate(0.0, PI, |t| (n as f64 * t - x * t.sin()).cos()) / PI
    }

    #[test]
    fn trivial_values() {
        assert_eq!(bessel_j(0, 0.0).unwrap(), 1.0);
        assert_eq!(bessel_j(1, 0.0).unwrap(), 0.0);
        assert_eq!(bessel_i(0, 0.0).unwrap(), 1.0);
        assert_eq!(bessel_i(1, 0.0).unwrap(), 0.0);
        assert_eq!(sinc(0.0), 1.0);
        assert!(sinc(PI).abs() < 1e-15);
        assert_abs_diff_eq!(sinc(PI / 2.0), 2.0 / PI, epsilon = 1e-15);
        assert_eq!(log_factorial(0), 0.0);
        assert_eq!(log_factorial(1), 0.0);
    }

    #[test]
    fn first_zero_of_j0() {
        assert!(bessel_j(0, 2.4048255577).unwrap().abs() < 1e-9);
    }

    #[test]
    fn frozen_reference_values() {
        // High-precision reference values.
        assert_abs_diff_eq!(bessel_i(0, 1.0).unwrap(), 1.2660658777520084, epsilon = 1e-12);
        assert_abs_diff_eq!(bessel_j(5, 30.0).unwrap(), -0.1432402955120771, epsilon = 1e-12);
        assert_abs_diff_eq!(bessel_j(40, 100.0).unwrap(), 0.07270175482281106, epsilon = 1e-12);
        assert_abs_diff_eq!(bessel_j(64, 200.0).unwrap(), -0.03405976496301458, epsilon = 1e-12);
        assert_abs_diff_eq!(bessel_j(3, 0.5).unwrap(), 0.002563729994587244, epsilon = 1e-15);
        let rel = |a: f64, b: f64| ((a - b) / b).abs();
        assert!(rel(bessel_i_scaled(3, 2.5).unwrap(), 0.03893869435176336) < 1e-12);
        assert!(rel(bessel_i_scaled(10, 800.0).unwrap(), 0.013251740881031091) < 1e-11);
        assert!(rel(bessel_i_scaled(64, 50.0).unwrap(), 3.699100952475872e-18) < 1e-10);
        assert!(rel(bessel_i(2, 0.3).unwrap(), 0.011334612660978455) < 1e-13);
    }

    #[test]
    fn log_factorial_matches_exact_product() {
        let exact: u128 = (1..=25u128).product();
        assert_abs_diff_eq!(log_factorial(25), (exact as f64).ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(log_factorial(25), 58.00360522298052, epsilon = 1e-10);
        let direct: f64 = (1..=200).map(|k| (k as f64).ln()).sum();
        assert!(((log_factorial(200) - direct) / direct).abs() < 1e-12);
    }

    #[test]
    fn negative_order_and_argument_symmetry() {
        for n in 0..8 {
            let s = if n % 2 == 0 { 1.0 } else { -1.0 };
            let v = bessel_j(n, 3.7).unwrap();
            assert_eq!(bessel_j(-n, 3.7).unwrap(), s * v);
            assert_eq!(bessel_j(n, -3.7).unwrap(), s * v);
            assert_eq!(bessel_i_scaled(-n, 3.7).unwrap(), bessel_i_scaled(n, 3.7).unwrap());
        }
    }

    #[test]
    fn j_recurrence() {
        for l in 1..=40 {
            for &x in &[0.1, 0.5, 1.0, 2.5, 7.3, 15.0, 33.3, 64.0, 100.0] {
                let lhs = bessel_j(l - 1, x).unwrap() + bessel_j(l + 1, x).unwrap();
                let rhs = 2.0 * l as f64 / x * bessel_j(l, x).unwrap();
                assert!((lhs - rhs).abs() < 1e-9, "l={l} x={x}: {lhs} vs {rhs}");
            }
        }
    }

    #[test]
    fn i_recurrence_scaled() {
        for l in 1..=40 {
            for &x in &[0.1, 0.5, 1.0, 2.5, 7.3, 15.0, 33.3, 64.0, 100.0] {
                let lhs = bessel_i_scaled(l - 1, x).unwrap() - bessel_i_scaled(l + 1, x).unwrap();
                let rhs = 2.0 * l as f64 / x * bessel_i_scaled(l, x).unwrap();
                let scale = lhs.abs().max(rhs.abs());
                if scale < 1e-290 {
                    continue;
                }
                assert!((lhs - rhs).abs() <= 1e-9 * scale, "l={l} x={x}: {lhs} vs {rhs}");
            }
        }
    }

    #[test]
    fn j_matches_integral_representation() {
        for l in [0, 1, 2, 5, 10, 25, 40, 64] {
            for &x in &[0.3, 1.0, 4.0, 12.0, 50.0, 120.0, 200.0] {
                let a = bessel_j(l, x).unwrap();
                let b = j_integral(l, x);
                assert!((a - b).abs() < 1e-8, "l={l} x={x}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn i_matches_series_where_both_converge() {
        for l in [0u32, 1, 3, 10, 30] {
            for &x in &[1.0, 2.0, 5.0, 10.0] {
                let s = series(l, x, 1.0) * (-x).exp();
                let m = ive(l, x);
                assert!(((s - m) / s).abs() < 1e-12, "l={l} x={x}");
            }
        }
    }

    #[test]
    fn overflow_is_a_range_error() {
        assert!(matches!(bessel_i(0, 800.0), Err(Error::Range(_))));
        let s = bessel_i_scaled(0, 800.0).unwrap();
        assert!((s * (2.0 * PI * 800.0).sqrt() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(bessel_j(0, f64::NAN), Err(Error::Domain(_))));
        assert!(matches!(bessel_j(0, f64::INFINITY), Err(Error::Domain(_))));
        assert!(matches!(bessel_i_scaled(0, -1.0), Err(Error::Domain(_))));
    }

    proptest! {
        #[test]
        fn sinc_is_even_and_bounded(x in -1e4f64..1e4) {
            prop_assert_eq!(sinc(x), sinc(-x));
            prop_assert!(sinc(x).abs() <= 1.0);
            if x != 0.0 {
                prop_assert!(sinc(x) < 1.0);
            }
        }

        #[test]
        fn j_bounded_by_one(n in -64i32..=64, x in -200f64..200.0) {
            prop_assert!(bessel_j(n, x).unwrap().abs() <= 1.0 + 1e-12);
        }

        #[test]
        fn scaled_i_is_positive_and_decreasing_in_order(n in 0i32..63, x in 0.01f64..500.0) {
            let a = bessel_i_scaled(n, x).unwrap();
            let b = bessel_i_scaled(n + 1, x).unwrap();
            prop_assert!(a > 0.0);
            prop_assert!(b <= a);
        }
    }
}
