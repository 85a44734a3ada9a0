//! Exact rational helpers.
//!
//! All symbolic work in this crate runs on [`Rational`], an arbitrary
//! precision fraction kept in lowest terms with a positive denominator.
//! Decimal text (network weights, CLI parameters) is converted exactly:
//! `"0.1"` becomes `1/10`, never the nearest binary float.

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

pub type Rational = num_rational::BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RationalError {
    #[error("malformed numeric literal `{0}`")]
    Malformed(String),
    #[error("division by zero")]
    DivisionByZero,
}

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

pub fn ratio(num: i64, den: i64) -> Rational {
    assert!(den != 0, "ratio with zero denominator");
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn checked_div(a: &Rational, b: &Rational) -> Result<Rational, RationalError> {
    if b.is_zero() {
        return Err(RationalError::DivisionByZero);
    }
    Ok(a / b)
}

/// Parses a decimal literal such as `-0.02157623`, `1500`, `.5` or `3.2e-4`.
pub fn parse_decimal(text: &str) -> Result<Rational, RationalError> {
    let bad = || RationalError::Malformed(text.to_string());
    let s = text.trim();
    let (negative, body) = match s.as_bytes().first() {
        Some(b'-') => (true, &s[1..]),
        Some(b'+') => (false, &s[1..]),
        _ => (false, s),
    };
    let (mantissa, exponent) = match body.find(['e', 'E']) {
        Some(pos) => {
            let exp_text = &body[pos + 1..];
            let exp: i64 = exp_text.parse().map_err(|_| bad())?;
            (&body[..pos], exp)
        }
        None => (body, 0),
    };
    let (int_part, frac_part) = match mantissa.find('.') {
        Some(pos) => (&mantissa[..pos], &mantissa[pos + 1..]),
        None => (mantissa, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.bytes().all(|b| b.is_ascii_digit()) || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{int_part}{frac_part}");
    let mut numer = if digits.is_empty() {
        BigInt::zero()
    } else {
        digits.parse::<BigInt>().map_err(|_| bad())?
    };
    if negative {
        numer = -numer;
    }
    let scale = exponent - frac_part.len() as i64;
    if scale.unsigned_abs() > 100_000 {
        return Err(bad());
    }
    let ten = BigInt::from(10);
    let pow = num_traits::pow(ten, scale.unsigned_abs() as usize);
    Ok(if scale >= 0 {
        Rational::from_integer(numer * pow)
    } else {
        Rational::new(numer, pow)
    })
}

/// Accepts either a decimal literal or an exact fraction `p/q`.
pub fn parse_rational(text: &str) -> Result<Rational, RationalError> {
    let s = text.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n = parse_decimal(n)?;
            let d = parse_decimal(d)?;
            checked_div(&n, &d)
        }
        None => parse_decimal(s),
    }
}

/// `p/q` (or `p` for integers).
pub fn to_exact_string(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Rounds to `digits` fractional digits, half away from zero, and renders
/// the result with exactly that many digits.
pub fn to_decimal(r: &Rational, digits: usize) -> String {
    let scale = num_traits::pow(BigInt::from(10), digits);
    let scaled = r * Rational::from_integer(scale.clone());
    let abs = scaled.abs();
    let floor = abs.numer().div_floor(abs.denom());
    let rem = Rational::new(abs.numer() - &floor * abs.denom(), abs.denom().clone());
    let half = Rational::new(BigInt::one(), BigInt::from(2));
    let rounded = if rem >= half { floor + 1 } else { floor };
    let text = rounded.to_string();
    let text = if text.len() <= digits {
        format!("{}{}", "0".repeat(digits + 1 - text.len()), text)
    } else {
        text
    };
    let (int_part, frac_part) = text.split_at(text.len() - digits);
    let negative = r.is_negative() && rounded_nonzero(&text);
    let sign = if negative { "-" } else { "" };
    if digits == 0 {
        format!("{sign}{int_part}")
    } else {
        format!("{sign}{int_part}.{frac_part}")
    }
}

fn rounded_nonzero(text: &str) -> bool {
    text.bytes().any(|b| b != b'0')
}

/// Exact decimal rendering when the denominator has only factors 2 and 5.
pub fn to_terminating_decimal(r: &Rational) -> Option<String> {
    let mut den = r.denom().clone();
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    let mut twos = 0usize;
    let mut fives = 0usize;
    while den.is_even() {
        den /= &two;
        twos += 1;
    }
    while (&den % &five).is_zero() {
        den /= &five;
        fives += 1;
    }
    if !den.is_one() {
        return None;
    }
    Some(to_decimal(r, twos.max(fives)))
}

/// Rounds a rational to the nearest multiple of `10^-digits`.
pub fn round_to(r: &Rational, digits: usize) -> Rational {
    parse_decimal(&to_decimal(r, digits)).expect("rendered decimal parses")
}

pub fn to_f64(r: &Rational) -> f64 {
    match (r.numer().to_f64(), r.denom().to_f64()) {
        (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
        _ => {
            // Huge operands: scale down through the decimal rendering.
            to_decimal(r, 20).parse().unwrap_or(f64::NAN)
        }
    }
}

pub fn sign(r: &Rational) -> Sign {
    r.numer().sign()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_plain_decimals() {
        assert_eq!(parse_decimal("0.005").unwrap(), ratio(1, 200));
        assert_eq!(
            parse_decimal("-0.02157623").unwrap(),
            Rational::new(BigInt::from(-2157623), BigInt::from(100_000_000))
        );
        assert_eq!(parse_decimal("1500").unwrap(), int(1500));
        assert_eq!(parse_decimal("+.5").unwrap(), ratio(1, 2));
        assert_eq!(parse_decimal("7.").unwrap(), int(7));
    }

    #[test]
    fn parses_scientific_notation() {
        assert_eq!(parse_decimal("3.2e-4").unwrap(), ratio(32, 100_000));
        assert_eq!(parse_decimal("-1E3").unwrap(), int(-1000));
        assert_eq!(parse_decimal("2.5e+1").unwrap(), int(25));
    }

    #[test]
    fn rejects_malformed_literals() {
        for bad in ["", "-", ".", "1.2.3", "abc", "1e", "1e1.5", "--1", "0x10", "1,5"] {
            assert!(parse_decimal(bad).is_err(), "{bad:?} accepted");
        }
    }

    #[test]
    fn fractions_and_division_by_zero() {
        assert_eq!(parse_rational("3/6").unwrap(), ratio(1, 2));
        assert_eq!(parse_rational("1/0"), Err(RationalError::DivisionByZero));
        assert_eq!(checked_div(&int(1), &int(0)), Err(RationalError::DivisionByZero));
        assert_eq!(checked_div(&int(1), &int(4)).unwrap(), ratio(1, 4));
    }

    #[test]
    fn canonical_form() {
        let r = ratio(6, -4);
        assert_eq!(r.numer(), &BigInt::from(-3));
        assert_eq!(r.denom(), &BigInt::from(2));
    }

    #[test]
    fn decimal_rounding() {
        assert_eq!(to_decimal(&ratio(1, 3), 8), "0.33333333");
        assert_eq!(to_decimal(&ratio(2, 3), 8), "0.66666667");
        assert_eq!(to_decimal(&ratio(-1, 200), 2), "-0.01");
        assert_eq!(to_decimal(&ratio(-1, 1000), 2), "0.00");
        assert_eq!(to_decimal(&int(-522), 0), "-522");
        assert_eq!(to_decimal(&ratio(651, 100_000_000), 8), "0.00000651");
        assert_eq!(to_exact_string(&ratio(-3, 7)), "-3/7");
        assert_eq!(to_exact_string(&int(4)), "4");
    }

    #[test]
    fn terminating_decimal() {
        assert_eq!(to_terminating_decimal(&ratio(1, 200)).unwrap(), "0.005");
        assert!(to_terminating_decimal(&ratio(1, 3)).is_none());
    }

    proptest! {
        #[test]
        fn decimal_round_trip(int_part in -99999i64..99999, frac in 0u64..100_000_000u64, width in 1usize..9) {
            let frac = frac % 10u64.pow(width as u32);
            let text = format!("{}{}.{:0width$}", if int_part < 0 { "-" } else { "" }, int_part.abs(), frac, width = width);
            let value = parse_decimal(&text).unwrap();
            let rendered = to_terminating_decimal(&value).unwrap();
            prop_assert_eq!(parse_decimal(&rendered).unwrap(), value.clone());
            prop_assert_eq!(parse_decimal(&to_decimal(&value, width)).unwrap(), value);
        }
    }
}
