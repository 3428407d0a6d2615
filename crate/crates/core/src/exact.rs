//! Small helpers over arbitrary-precision rationals.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rational = BigRational;

pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn from_biguint(n: BigUint) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// `2^-n` as an exact rational.
pub fn half_pow(n: u32) -> Rational {
    Rational::new(BigInt::one(), BigInt::one() << n as usize)
}

pub fn pow(base: &Rational, exp: u32) -> Rational {
    num_traits::pow(base.clone(), exp as usize)
}

/// Binomial coefficient `C(n, k)`, zero outside `0..=n`.
pub fn binomial(n: u64, k: i64) -> BigUint {
    if k < 0 || k as u64 > n {
        return BigUint::zero();
    }
    let k = (k as u64).min(n - k as u64);
    let mut acc = BigUint::one();
    for j in 0..k {
        acc *= n - j;
        acc /= j + 1;
    }
    acc
}

pub fn to_f64(x: &Rational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// `num/den` with the denominator always present, e.g. `0/1`, `-3/7`.
pub fn format_ratio(x: &Rational) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

/// Parses `p/q` or a bare integer. Decimal literals are rejected.
pub fn parse_ratio(s: &str) -> Option<Rational> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let num: BigInt = num.parse().ok()?;
    let den: BigInt = den.parse().ok()?;
    if den.is_zero() {
        return None;
    }
    Some(Rational::new(num, den))
}

pub fn abs_diff(a: &Rational, b: &Rational) -> Rational {
    (a - b).abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_small_values() {
        assert_eq!(binomial(4, 2), BigUint::from(6u32));
        assert_eq!(binomial(5, -1), BigUint::zero());
        assert_eq!(binomial(5, 6), BigUint::zero());
        assert_eq!(binomial(40, 20), BigUint::from(137_846_528_820u64));
    }

    #[test]
    fn ratio_text_round_trip() {
        assert_eq!(parse_ratio("3/6"), Some(rat(1, 2)));
        assert_eq!(parse_ratio(" 7 "), Some(int(7)));
        assert_eq!(parse_ratio("1/0"), None);
        assert_eq!(parse_ratio("0.5"), None);
        assert_eq!(format_ratio(&rat(-2, 4)), "-1/2");
        assert_eq!(format_ratio(&Rational::zero()), "0/1");
    }
}
