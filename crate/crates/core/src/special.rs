//! Error-function family.
//!
//! `erf` and `erfc` come from `libm` (a port of the FreeBSD/musl routines,
//! accurate to about one ulp). The inverse of `erfc` is computed here: a
//! rational inverse-normal seed refined by Halley steps on `erfc` itself,
//! which keeps full relative accuracy deep in the tail where `1 - y` would
//! be useless.

use core::f64::consts::{FRAC_1_SQRT_2, PI};

#[inline]
pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

#[inline]
pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// Inverse complementary error function: returns `x` with `erfc(x) = y`.
///
/// Defined on `[0, 2]`; `0` maps to `+inf`, `2` to `-inf`, anything else
/// (including NaN) to NaN.
pub fn erfc_inv(y: f64) -> f64 {
    if !(0.0..=2.0).contains(&y) {
        return f64::NAN;
    }
    if y == 0.0 {
        return f64::INFINITY;
    }
    if y == 2.0 {
        return f64::NEG_INFINITY;
    }
    if y > 1.0 {
        return -erfc_inv(2.0 - y);
    }
    // erfc(x) = 2 Phi(-x sqrt 2)
    let mut x = -inverse_normal_seed(0.5 * y) * FRAC_1_SQRT_2;
    let two_over_sqrt_pi = 2.0 / libm::sqrt(PI);
    for _ in 0..3 {
        let slope = -two_over_sqrt_pi * libm::exp(-x * x);
        if slope == 0.0 {
            break;
        }
        let step = (erfc(x) - y) / slope;
        // Halley: f'' = -2 x f'
        let next = x - step / (1.0 + x * step);
        if next == x {
            break;
        }
        x = next;
    }
    x
}

/// Acklam's rational approximation of the standard normal quantile,
/// relative error about 1.15e-9. Only used as a starting point.
fn inverse_normal_seed(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    let tail = |q: f64| {
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    if p < P_LOW {
        tail(libm::sqrt(-2.0 * libm::log(p)))
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -tail(libm::sqrt(-2.0 * libm::log(1.0 - p)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn erfc_inv_round_trips_across_decades() {
        let mut y = 1e-300;
        while y < 2.0 {
            let x = erfc_inv(y);
            let back = erfc(x);
            assert!(((back - y) / y).abs() < 1e-13, "y={y} x={x} back={back}");
            y *= 1.37;
        }
    }

    #[test]
    fn erfc_inv_known_points() {
        assert_eq!(erfc_inv(1.0), 0.0);
        assert_eq!(erfc_inv(0.0), f64::INFINITY);
        assert_eq!(erfc_inv(2.0), f64::NEG_INFINITY);
        assert!(erfc_inv(-0.1).is_nan());
        assert!(erfc_inv(2.1).is_nan());
        // erfc(0.5) = 0.4795001221869534...
        assert!((erfc_inv(0.479_500_122_186_953_5) - 0.5).abs() < 1e-14);
        assert!((erfc_inv(1.5) + erfc_inv(0.5)).abs() < 1e-15);
    }

    #[test]
    fn erf_reference_values() {
        // Abramowitz & Stegun table values.
        assert!((erf(1.0) - 0.842_700_792_949_714_9).abs() < 1e-15);
        assert!((erfc(2.0) - 0.004_677_734_981_047_266).abs() / 0.004_677_734_981_047_266 < 1e-13);
        assert!(
            (erfc(5.0) - 1.537_459_794_428_034_8e-12).abs() / 1.537_459_794_428_034_8e-12 < 1e-12
        );
    }
}
