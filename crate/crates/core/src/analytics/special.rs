//! Exponential integrals, log-gamma and the beta function.
//!
//! `ei` uses the convergent series for `0 < x <= 40` and the asymptotic
//! expansion beyond; negative arguments go through `e1` (series for
//! `x <= 1`, modified Lentz continued fraction otherwise).

use crate::error::{FeelError, Result};
use crate::scalar::Scalar;

/// Switch point between the power series and the asymptotic form of `Ei`.
const SERIES_LIMIT: f64 = 40.0;
const MAX_ITER: usize = 1000;

/// `Σ_{k≥1} x^k / (k·k!)`, i.e. `Ei(x) - ln|x| - γ` for `x != 0`.
///
/// Entire in `x`; loses relative accuracy for large negative `x`, where
/// `e1` should be used instead.
pub fn ei_regular_part<T: Scalar>(x: T) -> T {
    let eps = T::epsilon();
    let mut term = T::one();
    let mut sum = T::zero();
    for k in 1..MAX_ITER {
        let kf = T::from_count(k);
        term *= x / kf;
        let add = term / kf;
        sum += add;
        if add.abs() <= eps * sum.abs() {
            break;
        }
    }
    sum
}

/// Asymptotic sum `Σ_k k!/x^k` for large positive `x`, stopped at the
/// smallest term.
fn ei_asymptotic_sum<T: Scalar>(x: T) -> T {
    let eps = T::epsilon();
    let mut term = T::one();
    let mut sum = T::one();
    for k in 1..MAX_ITER {
        let next = term * T::from_count(k) / x;
        if next >= term {
            break;
        }
        term = next;
        sum += term;
        if term < eps * sum {
            break;
        }
    }
    sum
}

/// Exponential integral `E1(x) = ∫_x^∞ e^{-t}/t dt` for `x > 0`.
pub fn e1<T: Scalar>(x: T) -> Result<T> {
    if x.is_nan() || x <= T::zero() {
        return Err(FeelError::domain("e1", format!("requires x > 0, got {x}")));
    }
    if x.is_infinite() {
        return Ok(T::zero());
    }
    if x <= T::one() {
        return Ok(-T::euler_gamma() - x.ln() - ei_regular_part(-x));
    }
    // Modified Lentz evaluation of the continued fraction.
    let eps = T::epsilon();
    let tiny = T::min_positive_value() / eps;
    let two = T::lit(2.0);
    let mut b = x + T::one();
    let mut c = T::one() / tiny;
    let mut d = T::one() / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let fi = T::from_count(i);
        let an = -fi * fi;
        b += two;
        d = T::one() / (an * d + b);
        c = b + an / c;
        let del = c * d;
        h *= del;
        if (del - T::one()).abs() <= eps {
            break;
        }
    }
    Ok(h * (-x).exp())
}

/// Principal-value exponential integral `Ei(x)`, `x != 0`.
pub fn ei<T: Scalar>(x: T) -> Result<T> {
    if x.is_nan() || x == T::zero() {
        return Err(FeelError::domain("ei", format!("undefined at x = {x}")));
    }
    if x < T::zero() {
        return Ok(-e1(-x)?);
    }
    if x.is_infinite() {
        return Ok(x);
    }
    if x <= T::lit(SERIES_LIMIT) {
        Ok(T::euler_gamma() + x.ln() + ei_regular_part(x))
    } else {
        Ok(x.exp() / x * ei_asymptotic_sum(x))
    }
}

/// `e^{-x}·Ei(x)` for `x > 0`, finite for arbitrarily large `x`.
pub fn ei_scaled<T: Scalar>(x: T) -> Result<T> {
    if x.is_nan() || x <= T::zero() {
        return Err(FeelError::domain("ei_scaled", format!("requires x > 0, got {x}")));
    }
    if x <= T::lit(SERIES_LIMIT) {
        Ok((-x).exp() * (T::euler_gamma() + x.ln() + ei_regular_part(x)))
    } else {
        Ok(ei_asymptotic_sum(x) / x)
    }
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Γ(x)` for `x > 0` (Lanczos, reflection below 1/2).
pub fn ln_gamma<T: Scalar>(x: T) -> Result<T> {
    if x.is_nan() || x <= T::zero() {
        return Err(FeelError::domain("ln_gamma", format!("requires x > 0, got {x}")));
    }
    Ok(ln_gamma_positive(x))
}

fn ln_gamma_positive<T: Scalar>(x: T) -> T {
    let half = T::lit(0.5);
    if x < half {
        // Γ(x)Γ(1-x) = π / sin(πx); sin(πx) > 0 on (0, 1/2).
        let pi = T::PI();
        return (pi / (pi * x).sin()).ln() - ln_gamma_positive(T::one() - x);
    }
    let z = x - T::one();
    let mut acc = T::lit(LANCZOS[0]);
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc += T::lit(c) / (z + T::from_count(i));
    }
    let t = z + T::lit(LANCZOS_G) + half;
    half * (T::TAU()).ln() + (z + half) * t.ln() - t + acc.ln()
}

/// Beta function `B(x, y) = Γ(x)Γ(y)/Γ(x+y)` for `x, y > 0`.
pub fn beta<T: Scalar>(x: T, y: T) -> Result<T> {
    if x.is_nan() || y.is_nan() || x <= T::zero() || y <= T::zero() {
        return Err(FeelError::domain(
            "beta",
            format!("requires positive arguments, got ({x}, {y})"),
        ));
    }
    Ok((ln_gamma_positive(x) + ln_gamma_positive(y) - ln_gamma_positive(x + y)).exp())
}
