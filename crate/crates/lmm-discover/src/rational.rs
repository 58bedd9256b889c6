//! Exact rational arithmetic and small helpers for dense rational polynomials.
//!
//! Scheme coefficients are kept as arbitrary-precision rationals end to end;
//! floats only appear after an explicit conversion. `BigRational` already
//! guarantees lowest terms and a positive denominator, which is exactly the
//! representation contract the rest of the crate relies on.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, ToPrimitive, Zero};

use crate::{Error, Result};

/// Arbitrary-precision rational number, always in lowest terms with a
/// positive denominator.
pub type Rational = BigRational;

/// `n` as a rational.
pub fn from_int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// `n/d` in lowest terms. Panics if `d == 0`; use [`parse`] for untrusted input.
pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Nearest double, correct across the whole dynamic range.
///
/// Naive `numer/denom` conversion turns into `inf/inf = NaN` once either
/// integer exceeds the double range, which happens routinely for the huge
/// intermediate values produced by exact polynomial evaluation. Both
/// integers are pre-shifted down to at most 64 significant bits and the
/// binary exponent is reapplied afterwards, so the result saturates to
/// `+-inf` or underflows to zero exactly where a real number that size
/// would.
pub fn to_f64(r: &Rational) -> f64 {
    if r.numer().is_zero() {
        return 0.0;
    }
    let numer_bits = r.numer().bits();
    let denom_bits = r.denom().bits();
    let numer_shift = numer_bits.saturating_sub(64);
    let denom_shift = denom_bits.saturating_sub(64);
    let numer = (r.numer() >> numer_shift as usize)
        .to_f64()
        .unwrap_or(f64::NAN);
    let denom = (r.denom() >> denom_shift as usize)
        .to_f64()
        .unwrap_or(f64::NAN);
    let exponent = numer_shift as i64 - denom_shift as i64;
    let clamped = exponent.clamp(-2098, 2098) as i32;
    // split the scaling to dodge intermediate overflow at the range edges
    (numer / denom) * 2f64.powi(clamped / 2) * 2f64.powi(clamped - clamped / 2)
}

/// Exact rational value of a double (dyadic). Non-finite inputs have none.
pub fn from_f64(x: f64) -> Option<Rational> {
    Rational::from_float(x)
}

/// Serializes as `p/q` in lowest terms, denominator always written
/// (`-1/2`, `3/2`, `1/1`, `0/1`).
pub fn format(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Parses `p/q` or a bare integer `p`.
pub fn parse(s: &str) -> Result<Rational> {
    let bad = || Error::InvalidRational(s.to_string());
    let (num_str, den_str) = match s.split_once('/') {
        Some((n, d)) => (n, d),
        None => (s, "1"),
    };
    let numer: BigInt = num_str.trim().parse().map_err(|_| bad())?;
    let denom: BigInt = den_str.trim().parse().map_err(|_| bad())?;
    if denom.is_zero() {
        return Err(bad());
    }
    Ok(Rational::new(numer, denom))
}

/// `n!` as a rational.
pub fn factorial(n: u32) -> Rational {
    let mut acc = BigInt::one();
    for k in 2..=n {
        acc *= BigInt::from(k);
    }
    Rational::from_integer(acc)
}

/// `base^exp` for an integer base, with the `0^0 = 1` convention.
pub fn int_pow(base: i64, exp: u32) -> Rational {
    Rational::from_integer(BigInt::from(base).pow(exp))
}

// Dense rational polynomials, ascending coefficient order (c[j] multiplies x^j).

pub(crate) fn poly_mul(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    let mut out = vec![Rational::zero(); a.len() + b.len() - 1];
    for (i, ai) in a.iter().enumerate() {
        for (j, bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}

pub(crate) fn poly_derivative(p: &[Rational]) -> Vec<Rational> {
    if p.len() <= 1 {
        return vec![Rational::zero()];
    }
    p.iter()
        .enumerate()
        .skip(1)
        .map(|(j, c)| c * from_int(j as i64))
        .collect()
}

/// Integrates over `[0, 1]` with the monomial rule `u^j -> 1/(j+1)`.
pub(crate) fn poly_integral_unit(p: &[Rational]) -> Rational {
    p.iter()
        .enumerate()
        .map(|(j, c)| c / from_int(j as i64 + 1))
        .sum()
}

pub(crate) fn poly_eval(p: &[Rational], x: &Rational) -> Rational {
    let mut acc = Rational::zero();
    for c in p.iter().rev() {
        acc = acc * x + c;
    }
    acc
}

pub(crate) fn is_zero(r: &Rational) -> bool {
    r.is_zero()
}

#[cfg(test)]
pub(crate) fn signum(r: &Rational) -> i32 {
    use num::Signed;
    if r.is_zero() {
        0
    } else if r.is_positive() {
        1
    } else {
        -1
    }
}
