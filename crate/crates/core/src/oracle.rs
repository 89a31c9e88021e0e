//! Independent reference computations used to cross-check the fast paths.
//!
//! Nothing here shares code with the production evaluators: the exponential
//! integral is summed in 512-bit fixed point, the hypoexponential transform is
//! taken in product form, and the no-interference strong-signal rate is a
//! direct quadrature of its defining integral.

use num_bigint::BigInt;
use num_traits::{Float, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::quadrature::{integrate_semi_infinite, QuadratureSpec};

const FRAC_BITS: usize = 512;

const EULER_GAMMA_DIGITS: &str = "5772156649015328606065120900824024310421593359399235988057672348848677267776646709369470632917467495";

fn one() -> BigInt {
    BigInt::one() << FRAC_BITS
}

fn from_f64(x: f64) -> BigInt {
    let (mantissa, exponent, sign) = Float::integer_decode(x);
    let m = BigInt::from(mantissa) * BigInt::from(sign);
    let shift = exponent as i64 + FRAC_BITS as i64;
    if shift >= 0 {
        m << (shift as usize)
    } else {
        m >> ((-shift) as usize)
    }
}

fn to_f64(x: &BigInt) -> f64 {
    let bits = x.bits() as i64;
    let keep = 80i64;
    let (shifted, exp) = if bits > keep {
        (x >> ((bits - keep) as usize), bits - keep)
    } else {
        (x.clone(), 0)
    };
    let scale = (exp - FRAC_BITS as i64) as i32;
    shifted.to_f64().unwrap_or(f64::NAN) * 2f64.powi(scale)
}

fn mul(a: &BigInt, b: &BigInt) -> BigInt {
    (a * b) >> FRAC_BITS
}

fn div(a: &BigInt, b: &BigInt) -> BigInt {
    (a << FRAC_BITS) / b
}

// 2·atanh(y) = 2 Σ y^{2j+1}/(2j+1), for |y| ≤ 1/3.
fn two_atanh(y: &BigInt) -> BigInt {
    let y2 = mul(y, y);
    let mut power = y.clone();
    let mut sum = BigInt::zero();
    let mut j = 0u64;
    while !power.is_zero() {
        sum += &power / BigInt::from(2 * j + 1);
        power = mul(&power, &y2);
        j += 1;
    }
    sum * 2
}

fn ln2() -> BigInt {
    // ln 2 = 2 atanh(1/3)
    two_atanh(&(one() / 3))
}

/// Natural log of a positive `f64`, exact argument, 512-bit fixed-point result.
fn ln_fixed(x: f64) -> BigInt {
    let (mantissa, exponent, _) = Float::integer_decode(x);
    // x = m·2^e with m in [2^52, 2^53); write x = (m/2^52)·2^(e+52)
    let top = 63 - mantissa.leading_zeros() as i64;
    let m_fixed = BigInt::from(mantissa) << (FRAC_BITS - top as usize);
    let e = exponent as i64 + top;
    let y = div(&(&m_fixed - one()), &(&m_fixed + one()));
    two_atanh(&y) + ln2() * BigInt::from(e)
}

fn euler_gamma() -> BigInt {
    let digits: BigInt = EULER_GAMMA_DIGITS.parse().expect("digit string");
    let ten_pow = num_traits::pow(BigInt::from(10), EULER_GAMMA_DIGITS.len());
    (digits << FRAC_BITS) / ten_pow
}

/// `Ei(x) = γ + ln|x| + Σ_{k≥1} x^k/(k·k!)` summed in 512-bit fixed point.
///
/// Slow but free of cancellation for `|x| ≲ 100`.
pub fn ei_series_reference(x: f64) -> Result<f64> {
    if x == 0.0 || !x.is_finite() {
        return Err(Error::Domain { function: "ei_series_reference", detail: format!("x = {x}") });
    }
    if x.abs() > 100.0 {
        return Err(Error::input("ei_series_reference", format!("|x| must be <= 100, got {x}")));
    }
    let xf = from_f64(x);
    let mut term = one();
    let mut sum = BigInt::zero();
    let mut k = 1u64;
    loop {
        term = mul(&term, &xf) / BigInt::from(k);
        if term.is_zero() {
            break;
        }
        sum += &term / BigInt::from(k);
        if (k as f64) > x.abs() && term.abs() < BigInt::from(16) {
            break;
        }
        k += 1;
    }
    let total = euler_gamma() + ln_fixed(x.abs()) + sum;
    Ok(to_f64(&total))
}

/// `Π λ_i/(λ_i + s)`, the Laplace transform of a sum of independent exponentials.
pub fn hypoexp_laplace_product(rates: &[f64], s: f64) -> f64 {
    rates.iter().map(|&l| l / (l + s)).product()
}

/// Strong-signal ergodic rate without antenna interference, as the direct
/// integral `1/(2 ln 2) ∫_0^∞ e^{-uΨ} / ((1+u)(1+uΛ1)(1+uΛ2)) du`.
pub fn strong_rate_integral(psi: f64, lambda1: f64, lambda2: f64, spec: &QuadratureSpec) -> Result<f64> {
    let scale = (1.0 / psi).clamp(1e-3, 1e6);
    let spec = spec.with_scale(scale);
    let r = integrate_semi_infinite(
        |u: f64| (-u * psi).exp() / ((1.0 + u) * (1.0 + u * lambda1) * (1.0 + u * lambda2)),
        0.0,
        &spec,
    )?;
    Ok(r.value / (2.0 * std::f64::consts::LN_2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn fixed_point_round_trip() {
        for x in [1.0, -2.5, 3.0e-20, 1.234_567_890_123e15] {
            assert_eq!(to_f64(&from_f64(x)), x);
        }
    }

    #[test]
    fn logarithms() {
        assert_relative_eq!(to_f64(&ln2()), std::f64::consts::LN_2, max_relative = 1e-16);
        for x in [1e-6, 0.37, 1.0, 7.5, 50.0] {
            assert_relative_eq!(to_f64(&ln_fixed(x)), f64::ln(x), max_relative = 1e-15, epsilon = 1e-300);
        }
        assert_relative_eq!(to_f64(&euler_gamma()), 0.577_215_664_901_532_9, max_relative = 1e-16);
    }

    #[test]
    fn series_reference_values() {
        let cases = [
            (-1.0, -0.219_383_934_395_520_27),
            (-0.1, -1.822_923_958_419_390_6),
            (-50.0, -3.783_264_029_550_459e-24),
            (1.0, 1.895_117_816_355_936_8),
            (50.0, 1.058_563_689_713_169_1e20),
            (0.3725, -2.887_418_318_874_596_5e-5),
        ];
        for (x, want) in cases {
            assert_relative_eq!(ei_series_reference(x).unwrap(), want, max_relative = 1e-15);
        }
        assert!(ei_series_reference(0.0).is_err());
        assert!(ei_series_reference(200.0).is_err());
    }

    #[test]
    fn laplace_product() {
        assert_relative_eq!(hypoexp_laplace_product(&[1.0, 2.0], 1.0), 1.0 / 3.0);
    }
}
