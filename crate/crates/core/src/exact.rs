//! Exact rational helpers.
//!
//! All thresholds and error parameters are kept as [`Rational`]s; graph
//! distances are integers, so a comparison `d <= q` is decided by
//! `d <= floor(q)` without any floating point.

use num::bigint::{BigInt, BigUint, Sign};
use num::{BigRational, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

pub fn ratio(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

pub fn from_big(v: &BigUint) -> Rational {
    Rational::from_integer(BigInt::from_biguint(Sign::Plus, v.clone()))
}

/// Parses `"0.25"`, `"3"`, `"-1.5"` or `"1/3"` into an exact rational.
pub fn parse(text: &str) -> Result<Rational> {
    let s = text.trim();
    let bad = || Error::InvalidParams(format!("not a number: {text:?}"));
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(p, q));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (whole, frac) = body.split_once('.').unwrap_or((body, ""));
    if whole.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    if !whole.chars().all(|c| c.is_ascii_digit()) || !frac.chars().all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{whole}{frac}");
    let numer: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().map_err(|_| bad())? };
    let denom = num::pow(BigInt::from(10u32), frac.len());
    let r = Rational::new(numer, denom);
    Ok(if neg { -r } else { r })
}

/// `floor(r)` clamped into `u64`; `None` when `r < 0`.
pub fn floor_u64(r: &Rational) -> Option<u64> {
    if r.is_negative() {
        return None;
    }
    Some(r.floor().to_integer().to_u64().unwrap_or(u64::MAX))
}

/// `ceil(r)` clamped into `u64` (negative values map to 0).
pub fn ceil_u64(r: &Rational) -> u64 {
    if r.is_negative() {
        return 0;
    }
    r.ceil().to_integer().to_u64().unwrap_or(u64::MAX)
}

pub fn ceil_big(r: &Rational) -> BigUint {
    if r.is_negative() {
        return BigUint::zero();
    }
    r.ceil().to_integer().to_biguint().unwrap_or_default()
}

/// Largest `m` with `2^m <= r`, for `r > 0`.
pub fn floor_log2(r: &Rational) -> i64 {
    assert!(r.is_positive(), "floor_log2 of a non-positive value");
    let two = int(2);
    let mut m: i64 = (r.numer().bits() as i64) - (r.denom().bits() as i64);
    // bit-length difference is within one of the answer
    loop {
        let p = pow_i(&two, m);
        if &p > r {
            m -= 1;
        } else if &(p * &two) <= r {
            m += 1;
        } else {
            return m;
        }
    }
}

/// `ceil(log2 v)` for an integer `v >= 1`.
pub fn ceil_log2_big(v: &BigUint) -> u64 {
    assert!(!v.is_zero(), "ceil_log2 of zero");
    let bits = v.bits();
    if v.count_ones() == 1 {
        bits - 1
    } else {
        bits
    }
}

/// `floor(log2 v)` for an integer `v >= 1`.
pub fn floor_log2_big(v: &BigUint) -> u64 {
    assert!(!v.is_zero(), "floor_log2 of zero");
    v.bits() - 1
}

pub fn pow_i(base: &Rational, exp: i64) -> Rational {
    if exp >= 0 {
        num::pow(base.clone(), exp as usize)
    } else {
        num::pow(base.recip(), (-exp) as usize)
    }
}

pub fn pow_u(base: &Rational, exp: u64) -> Rational {
    pow_i(base, exp as i64)
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::INFINITY)
}

pub fn big_to_u64_sat(v: &BigUint) -> u64 {
    v.to_u64().unwrap_or(u64::MAX)
}

pub fn one() -> Rational {
    Rational::one()
}

/// Rendering used in JSON artifacts: `"p/q"` or `"p"` for integers.
pub fn render(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub mod serde_rational {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&render(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
        let text = String::deserialize(d)?;
        parse(&text).map_err(serde::de::Error::custom)
    }
}

pub mod serde_big {
    use num::BigUint;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &BigUint, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<BigUint, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_decimals_and_fractions() {
        assert_eq!(parse("0.5").unwrap(), ratio(1, 2));
        assert_eq!(parse("1/3").unwrap(), ratio(1, 3));
        assert_eq!(parse("2").unwrap(), int(2));
        assert_eq!(parse("-0.25").unwrap(), ratio(-1, 4));
        assert_eq!(parse(".1").unwrap(), ratio(1, 10));
        assert!(parse("abc").is_err());
        assert!(parse("1/0").is_err());
        assert!(parse("").is_err());
    }

    #[test]
    fn floor_log2_matches_definition() {
        assert_eq!(floor_log2(&int(1)), 0);
        assert_eq!(floor_log2(&int(4)), 2);
        assert_eq!(floor_log2(&ratio(9, 2)), 2);
        assert_eq!(floor_log2(&ratio(1, 2)), -1);
        assert_eq!(floor_log2(&ratio(3, 8)), -2);
        assert_eq!(floor_log2(&int(1023)), 9);
    }

    #[test]
    fn integer_logs() {
        assert_eq!(ceil_log2_big(&BigUint::from(64u32)), 6);
        assert_eq!(ceil_log2_big(&BigUint::from(65u32)), 7);
        assert_eq!(floor_log2_big(&BigUint::from(1014u32)), 9);
        assert_eq!(ceil_log2_big(&BigUint::from(1u32)), 0);
    }

    #[test]
    fn floors_saturate() {
        assert_eq!(floor_u64(&ratio(7, 2)), Some(3));
        assert_eq!(floor_u64(&ratio(-1, 2)), None);
        assert_eq!(floor_u64(&pow_u(&int(10), 40)), Some(u64::MAX));
        assert_eq!(ceil_u64(&ratio(7, 2)), 4);
    }
}
