//! Digamma, trigamma and inverse digamma.

use crate::error::{Error, Result};
use crate::math::{exp, ln};

pub const EULER_MASCHERONI: f64 = 0.577_215_664_901_532_9;

/// Below this argument the recurrence is used to shift into the asymptotic
/// region.
const ASYMPTOTIC_THRESHOLD: f64 = 10.0;

/// `B_2k / 2k` for k = 1..7.
const DIGAMMA_SERIES: [f64; 7] = [
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
];

/// `B_2k` for k = 1..7.
const TRIGAMMA_SERIES: [f64; 7] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
];

/// `ln Γ(x)`.
pub fn ln_gamma(x: f64) -> f64 {
    crate::math::ln_gamma(x)
}

/// `ψ(x) = d ln Γ(x) / dx` for `x > 0`; NaN otherwise.
pub fn digamma(x: f64) -> f64 {
    if !(x > 0.0) {
        return f64::NAN;
    }
    if x == f64::INFINITY {
        return x;
    }
    let mut acc = 0.0;
    let mut x = x;
    while x < ASYMPTOTIC_THRESHOLD {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let inv2 = 1.0 / (x * x);
    let mut term = inv2;
    let mut series = 0.0;
    for c in DIGAMMA_SERIES {
        series += c * term;
        term *= inv2;
    }
    acc + ln(x) - 0.5 / x - series
}

/// [`digamma`] with the domain check surfaced as an error.
pub fn checked_digamma(x: f64) -> Result<f64> {
    if x > 0.0 {
        Ok(digamma(x))
    } else {
        Err(Error::NonPositiveArgument(x))
    }
}

/// `ψ'(x)` for `x > 0`; NaN otherwise.
pub fn trigamma(x: f64) -> f64 {
    if !(x > 0.0) {
        return f64::NAN;
    }
    if x == f64::INFINITY {
        return 0.0;
    }
    let mut acc = 0.0;
    let mut x = x;
    while x < ASYMPTOTIC_THRESHOLD {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let mut term = inv2 * inv;
    let mut series = 0.0;
    for c in TRIGAMMA_SERIES {
        series += c * term;
        term *= inv2;
    }
    acc + inv + 0.5 * inv2 + series
}

/// The `x > 0` with `ψ(x) = y`.
///
/// Newton iteration from `exp(y) + 1/2` when `y ≥ -2.22` and from
/// `-1/(y + γ)` otherwise.
pub fn inverse_digamma(y: f64) -> f64 {
    if y.is_nan() {
        return y;
    }
    if y == f64::NEG_INFINITY {
        return 0.0;
    }
    if y > 700.0 {
        // ψ(x) = ln x - 1/(2x) + O(x^-2) is exact to double precision here.
        return exp(y) + 0.5;
    }
    let mut x = if y >= -2.22 {
        exp(y) + 0.5
    } else {
        -1.0 / (y + EULER_MASCHERONI)
    };
    for _ in 0..64 {
        let step = (digamma(x) - y) / trigamma(x);
        let mut next = x - step;
        if !(next > 0.0) {
            next = 0.5 * x;
        }
        let done = (next - x).abs() <= 4.0 * f64::EPSILON * next;
        x = next;
        if done {
            break;
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    const PSI1: f64 = -0.577_215_664_901_532_9;

    #[test]
    fn digamma_special_values() {
        assert!((digamma(1.0) - PSI1).abs() < 1e-14);
        assert!((digamma(2.0) - 0.422_784_335_098_467_1).abs() < 1e-14);
        let half = -EULER_MASCHERONI - 2.0 * core::f64::consts::LN_2;
        assert!((digamma(0.5) - half).abs() < 1e-13);
        assert!((digamma(0.5) + 1.963_510_026_021_423_5).abs() < 1e-13);
        // ψ(10) = H_9 - γ
        let h9: f64 = (1..10).map(|k| 1.0 / k as f64).sum();
        assert!((digamma(10.0) - (h9 - EULER_MASCHERONI)).abs() < 1e-14);
    }

    #[test]
    fn digamma_recurrence() {
        for &x in &[1e-3, 0.1, 0.7, 1.3, 4.9, 5.99, 6.0, 17.5, 250.0] {
            let lhs = digamma(x + 1.0);
            let rhs = digamma(x) + 1.0 / x;
            assert!((lhs - rhs).abs() < 1e-12 * rhs.abs().max(1.0), "x={x}");
        }
    }

    #[test]
    fn digamma_domain() {
        assert!(digamma(0.0).is_nan());
        assert!(digamma(-1.5).is_nan());
        assert_eq!(checked_digamma(-2.0), Err(Error::NonPositiveArgument(-2.0)));
        assert!(checked_digamma(3.0).is_ok());
    }

    #[test]
    fn trigamma_values() {
        let pi2_6 = core::f64::consts::PI * core::f64::consts::PI / 6.0;
        assert!((trigamma(1.0) - pi2_6).abs() < 1e-13);
        assert!((trigamma(0.5) - 3.0 * pi2_6).abs() < 1e-12);
        for &x in &[0.3, 2.5, 9.0, 40.0] {
            let h = 1e-5 * x;
            let fd = (digamma(x + h) - digamma(x - h)) / (2.0 * h);
            assert!((fd - trigamma(x)).abs() < 1e-6 * trigamma(x), "x={x}");
        }
    }

    #[test]
    fn inverse_digamma_round_trips() {
        assert!((inverse_digamma(PSI1) - 1.0).abs() < 1e-10);
        assert!((inverse_digamma(0.422_784_335_1) - 2.0).abs() < 1e-10);
        for &x in &[1e-3, 0.01, 0.5, 1.0, 3.0, 77.0, 1e3, 1e6] {
            let y = digamma(x);
            let back = inverse_digamma(y);
            assert!((digamma(back) - y).abs() <= 1e-12 * y.abs().max(1.0), "x={x}");
            assert!((back - x).abs() <= 1e-10 * x, "x={x} back={back}");
        }
    }

    #[test]
    fn inverse_digamma_extremes() {
        assert_eq!(inverse_digamma(f64::NEG_INFINITY), 0.0);
        assert!(inverse_digamma(-1e6) > 0.0);
        assert!(inverse_digamma(f64::NAN).is_nan());
    }
}
