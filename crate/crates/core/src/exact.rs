//! Exact numeric types shared by every module.
//!
//! [`Rational`] is an arbitrary-precision fraction. [`Ext`] adds a single
//! symbol for +∞ with the convention `∞ · 0 = 0`, which is what the
//! dimension-times-limit formulas need.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub type Rational = num_rational::BigRational;

/// Build `num/den` from machine integers. Panics on a zero denominator.
pub fn q(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Integer as a rational.
pub fn qi<T: Into<BigInt>>(n: T) -> Rational {
    Rational::from_integer(n.into())
}

/// Unsigned big integer as a rational.
pub fn qu(n: &BigUint) -> Rational {
    Rational::from_integer(BigInt::from(n.clone()))
}

/// Ratio of two unsigned big integers.
pub fn ratio(num: &BigUint, den: &BigUint) -> Rational {
    Rational::new(BigInt::from(num.clone()), BigInt::from(den.clone()))
}

/// `num/den` text form, always with an explicit denominator.
pub fn fmt_q(x: &Rational) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

/// Parse `a`, `a/b` or a finite decimal such as `0.25` into an exact rational.
pub fn parse_q(text: &str) -> Result<Rational, String> {
    let t = text.trim();
    if let Some((a, b)) = t.split_once('/') {
        let n = BigInt::from_str(a.trim()).map_err(|e| format!("bad numerator in {t:?}: {e}"))?;
        let d = BigInt::from_str(b.trim()).map_err(|e| format!("bad denominator in {t:?}: {e}"))?;
        if d.is_zero() {
            return Err(format!("zero denominator in {t:?}"));
        }
        return Ok(Rational::new(n, d));
    }
    if let Some((int, frac)) = t.split_once('.') {
        let neg = int.starts_with('-');
        let int_part = if int.is_empty() || int == "-" { "0" } else { int };
        let i = BigInt::from_str(int_part).map_err(|e| format!("bad number {t:?}: {e}"))?;
        if frac.is_empty() || !frac.bytes().all(|c| c.is_ascii_digit()) {
            return Err(format!("bad number {t:?}"));
        }
        let f = BigInt::from_str(frac).map_err(|e| format!("bad number {t:?}: {e}"))?;
        let scale = num_traits::pow(BigInt::from(10), frac.len());
        let mag = Rational::new(f, scale);
        let ip = Rational::from_integer(i.abs());
        let v = ip + mag;
        return Ok(if neg { -v } else { v });
    }
    BigInt::from_str(t)
        .map(Rational::from_integer)
        .map_err(|e| format!("bad number {t:?}: {e}"))
}

/// Lossy conversion for display only.
pub fn approx(x: &Rational) -> f64 {
    let n = x.numer().to_f64().unwrap_or(f64::NAN);
    let d = x.denom().to_f64().unwrap_or(f64::NAN);
    if n.is_finite() && d.is_finite() {
        return n / d;
    }
    // Scale both down by the same power of two so huge fractions still print.
    let shift = x.denom().bits().max(x.numer().bits()).saturating_sub(1000);
    let n = (x.numer() >> shift).to_f64().unwrap_or(0.0);
    let d = (x.denom() >> shift).to_f64().unwrap_or(1.0);
    n / d
}

/// Floor of a nonnegative rational as an unsigned big integer.
pub fn floor_u(x: &Rational) -> BigUint {
    x.floor().to_integer().to_biguint().unwrap_or_default()
}

/// Serde adapter writing a rational as the string `"num/den"`.
pub mod serde_q {
    use super::*;

    pub fn serialize<S: Serializer>(x: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&fmt_q(x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let raw = QText::deserialize(d)?;
        raw.into_q().map_err(serde::de::Error::custom)
    }

    /// Accepts `"3/2"`, `"0.5"` or a bare integer.
    #[derive(Deserialize)]
    #[serde(untagged)]
    pub(crate) enum QText {
        Text(String),
        Int(i64),
    }

    impl QText {
        pub(crate) fn into_q(self) -> Result<Rational, String> {
            match self {
                QText::Text(t) => parse_q(&t),
                QText::Int(i) => Ok(qi(i)),
            }
        }
    }
}

/// Big integers as decimal strings.
pub mod serde_n {
    use super::*;

    pub fn serialize<S: Serializer>(n: &BigUint, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&n.to_string())
    }
}

/// Serde adapter for `Vec<Rational>`.
pub mod serde_qvec {
    use super::*;
    use serde::ser::SerializeSeq;

    pub fn serialize<S: Serializer>(xs: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(xs.len()))?;
        for x in xs {
            seq.serialize_element(&fmt_q(x))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
        let raw: Vec<serde_q::QText> = Vec::deserialize(d)?;
        raw.into_iter()
            .map(|t| t.into_q().map_err(serde::de::Error::custom))
            .collect()
    }
}

/// Nonnegative extended rational: a finite value or +∞.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Ext {
    Finite(Rational),
    Infinite,
}

impl Ext {
    pub fn zero() -> Self {
        Ext::Finite(Rational::zero())
    }

    pub fn finite(&self) -> Option<&Rational> {
        match self {
            Ext::Finite(x) => Some(x),
            Ext::Infinite => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Ext::Finite(x) if x.is_zero())
    }

    /// Product with `∞ · 0 = 0`.
    pub fn mul(&self, other: &Ext) -> Ext {
        match (self, other) {
            (Ext::Finite(a), Ext::Finite(b)) => Ext::Finite(a * b),
            (a, b) if a.is_zero() || b.is_zero() => Ext::zero(),
            _ => Ext::Infinite,
        }
    }

    pub fn scale(&self, k: &Rational) -> Ext {
        self.mul(&Ext::Finite(k.clone()))
    }
}

impl PartialOrd for Ext {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ext {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Ext::Finite(a), Ext::Finite(b)) => a.cmp(b),
            (Ext::Finite(_), Ext::Infinite) => Ordering::Less,
            (Ext::Infinite, Ext::Finite(_)) => Ordering::Greater,
            (Ext::Infinite, Ext::Infinite) => Ordering::Equal,
        }
    }
}

impl From<Rational> for Ext {
    fn from(x: Rational) -> Self {
        Ext::Finite(x)
    }
}

impl fmt::Display for Ext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ext::Finite(x) => write!(f, "{}", fmt_q(x)),
            Ext::Infinite => write!(f, "inf"),
        }
    }
}

impl FromStr for Ext {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "inf" | "infinity" | "∞" => Ok(Ext::Infinite),
            t => parse_q(t).map(Ext::Finite),
        }
    }
}

impl Serialize for Ext {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Ext {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match serde_q::QText::deserialize(d)? {
            serde_q::QText::Text(t) => t.parse().map_err(serde::de::Error::custom),
            serde_q::QText::Int(i) => Ok(Ext::Finite(qi(i))),
        }
    }
}

/// Product of `u64` factors as a big integer.
pub fn product<I: IntoIterator<Item = u64>>(it: I) -> BigUint {
    it.into_iter().fold(BigUint::one(), |acc, x| acc * x)
}

/// Exact division, `None` when `den` does not divide `num`.
pub fn div_exact(num: &BigUint, den: &BigUint) -> Option<BigUint> {
    if den.is_zero() {
        return None;
    }
    let (quo, rem) = num.div_rem(den);
    rem.is_zero().then_some(quo)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_forms() {
        assert_eq!(parse_q("3/2").unwrap(), q(3, 2));
        assert_eq!(parse_q("0.25").unwrap(), q(1, 4));
        assert_eq!(parse_q("-1.5").unwrap(), q(-3, 2));
        assert_eq!(parse_q("7").unwrap(), qi(7));
        assert!(parse_q("1/0").is_err());
        assert!(parse_q("x").is_err());
    }

    #[test]
    fn infinity_times_zero_is_zero() {
        assert_eq!(Ext::Infinite.mul(&Ext::zero()), Ext::zero());
        assert_eq!(Ext::Infinite.scale(&q(1, 2)), Ext::Infinite);
        assert!(Ext::Finite(qi(10)) < Ext::Infinite);
    }

    #[test]
    fn ext_text_round_trip() {
        for e in [Ext::Infinite, Ext::Finite(q(-7, 5)), Ext::zero()] {
            let back: Ext = e.to_string().parse().unwrap();
            assert_eq!(back, e);
        }
    }
}
