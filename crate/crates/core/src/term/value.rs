use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::Sort;

/// An exact value of one of the three sorts.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Bool(bool),
    Int(BigInt),
    Real(BigRational),
}

impl Value {
    pub fn int(i: i64) -> Self {
        Value::Int(BigInt::from(i))
    }

    pub fn real(num: i64, den: i64) -> Self {
        Value::Real(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn sort(&self) -> Sort {
        match self {
            Value::Bool(_) => Sort::Bool,
            Value::Int(_) => Sort::Int,
            Value::Real(_) => Sort::Real,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Value::Bool(_) => false,
            Value::Int(i) => i.is_zero(),
            Value::Real(r) => r.is_zero(),
        }
    }

    /// The default value of a sort, used to fill unconstrained model entries.
    pub fn default_of(sort: Sort) -> Self {
        match sort {
            Sort::Bool => Value::Bool(false),
            Sort::Int => Value::Int(BigInt::zero()),
            Sort::Real => Value::Real(BigRational::zero()),
        }
    }

    /// Parses the exact textual form produced by `Display` (`true`, `-3`, `7/2`).
    /// The expected sort disambiguates integral reals.
    pub fn parse_as(text: &str, sort: Sort) -> Option<Value> {
        match sort {
            Sort::Bool => match text {
                "true" => Some(Value::Bool(true)),
                "false" => Some(Value::Bool(false)),
                _ => None,
            },
            Sort::Int => BigInt::from_str(text).ok().map(Value::Int),
            Sort::Real => parse_rational(text).map(Value::Real),
        }
    }
}

/// Parses `p`, `p/q` or a decimal `d.ddd` into an exact rational.
pub fn parse_rational(text: &str) -> Option<BigRational> {
    if let Some((num, den)) = text.split_once('/') {
        let num = BigInt::from_str(num.trim()).ok()?;
        let den = BigInt::from_str(den.trim()).ok()?;
        if den.is_zero() {
            return None;
        }
        return Some(BigRational::new(num, den));
    }
    parse_decimal(text)
}

/// Parses an unsigned or signed decimal literal such as `12`, `0.25` or `-1.5`.
pub fn parse_decimal(text: &str) -> Option<BigRational> {
    let (neg, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text),
    };
    let (int_part, frac_part) = match body.split_once('.') {
        Some((i, f)) => (i, f),
        None => (body, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().all(|c| c.is_ascii_digit()) || !frac_part.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let num = BigInt::from_str(if digits.is_empty() { "0" } else { &digits }).ok()?;
    let den = num_traits::pow(BigInt::from(10), frac_part.len());
    let r = BigRational::new(num, den);
    Some(if neg { -r } else { r })
}

/// Renders a rational as a finite decimal when possible (`0.5`, `3.0`), `None` otherwise.
pub fn rational_to_decimal(r: &BigRational) -> Option<String> {
    let mut den = r.denom().clone();
    let mut twos = 0usize;
    let mut fives = 0usize;
    let two = BigInt::from(2);
    let five = BigInt::from(5);
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
    let places = twos.max(fives).max(1);
    let scale = num_traits::pow(BigInt::from(10), places);
    let scaled = (r * BigRational::from_integer(scale)).to_integer();
    let neg = scaled.is_negative();
    let mut digits = scaled.abs().to_string();
    while digits.len() <= places {
        digits.insert(0, '0');
    }
    let (i, f) = digits.split_at(digits.len() - places);
    Some(format!("{}{}.{}", if neg { "-" } else { "" }, i, f))
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Real(r) => {
                if r.is_integer() {
                    write!(f, "{}", r.numer())
                } else {
                    write!(f, "{}/{}", r.numer(), r.denom())
                }
            }
        }
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Self {
        Value::Bool(b)
    }
}

impl From<i64> for Value {
    fn from(i: i64) -> Self {
        Value::int(i)
    }
}

/// JSON form: booleans stay booleans, numbers become exact strings with a sort tag
/// carried by the surrounding schema.
impl Serialize for Value {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Value::Bool(b) => s.serialize_bool(*b),
            other => s.serialize_str(&other.to_string()),
        }
    }
}

/// Deserializes without sort information: integral strings become `Int`, fractions `Real`.
/// Callers that know the sort re-tag via [`Value::parse_as`].
impl<'de> Deserialize<'de> for Value {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            B(bool),
            S(String),
        }
        match Raw::deserialize(d)? {
            Raw::B(b) => Ok(Value::Bool(b)),
            Raw::S(s) => {
                if let Ok(i) = BigInt::from_str(&s) {
                    Ok(Value::Int(i))
                } else {
                    parse_rational(&s)
                        .map(Value::Real)
                        .ok_or_else(|| serde::de::Error::custom(format!("bad numeric value `{s}`")))
                }
            }
        }
    }
}

/// SMT-LIB2 semantics for integer division: `a = b * q + r` with `0 <= r < |b|`.
pub fn euclid_div(a: &BigInt, b: &BigInt) -> BigInt {
    let r = euclid_mod(a, b);
    (a - r) / b
}

pub fn euclid_mod(a: &BigInt, b: &BigInt) -> BigInt {
    a.mod_floor(&b.abs())
}
