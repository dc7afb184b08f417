//! Exact rational helpers.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

/// `p/q` with an explicit denominator, e.g. `2/1`, `-3/4`.
pub fn to_pq(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Parses `p`, `p/q` or a decimal such as `0.25` exactly.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("bad rational `{s}`"));
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(p, q));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let neg = whole.starts_with('-');
        let w: BigInt = if whole.is_empty() || whole == "-" { BigInt::zero() } else { whole.parse().map_err(|_| bad())? };
        let f: BigInt = frac.parse().map_err(|_| bad())?;
        let scale = num_traits::pow(BigInt::from(10), frac.len());
        let f = Rational::new(f, scale);
        let w = Rational::from_integer(w.abs());
        let v = w + f;
        return Ok(if neg { -v } else { v });
    }
    let p: BigInt = s.parse().map_err(|_| bad())?;
    Ok(Rational::from_integer(p))
}

/// `floor(r * 2^bits) / 2^bits`.
pub fn quantize(r: &Rational, bits: u32) -> Rational {
    if r.is_integer() {
        return r.clone();
    }
    let scale = BigInt::one() << bits;
    let scaled = (r * Rational::from_integer(scale.clone())).floor();
    Rational::new(scaled.to_integer(), scale)
}

pub fn to_f64(r: &Rational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pq_format() {
        assert_eq!(to_pq(&int(2)), "2/1");
        assert_eq!(to_pq(&ratio(-6, 8)), "-3/4");
    }

    #[test]
    fn parsing() {
        assert_eq!(parse_rational("3/6").unwrap(), ratio(1, 2));
        assert_eq!(parse_rational("-7").unwrap(), int(-7));
        assert_eq!(parse_rational("0.2").unwrap(), ratio(1, 5));
        assert_eq!(parse_rational("-1.25").unwrap(), ratio(-5, 4));
        assert_eq!(parse_rational("-.5").unwrap(), ratio(-1, 2));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x").is_err());
    }

    #[test]
    fn quantize_floors() {
        assert_eq!(quantize(&ratio(1, 3), 2), ratio(1, 4));
        assert_eq!(quantize(&ratio(-1, 3), 2), ratio(-1, 2));
        assert_eq!(quantize(&int(5), 2), int(5));
    }
}
