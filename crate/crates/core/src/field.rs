//! Exact ground fields: the rationals and prime fields `F_p`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Which exact field the scalars live in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
#[derive(Default)]
pub enum Field {
    #[default]
    Rational,
    Prime(u64),
}

impl Field {
    pub const DEFAULT_PRIME: u64 = 101;

    pub fn prime(p: u64) -> Result<Field, Error> {
        if p < 2 || p > u32::MAX as u64 || !is_prime(p) {
            return Err(Error::Parse(format!(
                "{p} is not a supported prime modulus"
            )));
        }
        Ok(Field::Prime(p))
    }

    pub fn zero(self) -> Scalar {
        self.from_i64(0)
    }

    pub fn one(self) -> Scalar {
        self.from_i64(1)
    }

    pub fn from_i64(self, v: i64) -> Scalar {
        match self {
            Field::Rational => Scalar::Rational(BigRational::from_integer(BigInt::from(v))),
            Field::Prime(p) => Scalar::Prime {
                value: v.rem_euclid(p as i64) as u64,
                modulus: p,
            },
        }
    }

    /// Maps a rational `num/den` into the field. Fails when `den` vanishes in the field.
    pub fn from_ratio(self, num: i64, den: i64) -> Result<Scalar, Error> {
        let d = self.from_i64(den);
        if d.is_zero() {
            return Err(Error::Parse(format!(
                "denominator {den} vanishes in {self}"
            )));
        }
        Ok(&self.from_i64(num) * &d.inv())
    }

    /// Characteristic of the field (0 for the rationals).
    pub fn characteristic(self) -> u64 {
        match self {
            Field::Rational => 0,
            Field::Prime(p) => p,
        }
    }

    /// Parses a scalar literal `"a"` or `"a/b"`.
    pub fn parse_scalar(self, text: &str) -> Result<Scalar, Error> {
        let text = text.trim();
        match self {
            Field::Rational => {
                let r = match text.split_once('/') {
                    Some((n, d)) => {
                        let n = BigInt::from_str(n.trim())
                            .map_err(|_| Error::Parse(format!("bad scalar {text:?}")))?;
                        let d = BigInt::from_str(d.trim())
                            .map_err(|_| Error::Parse(format!("bad scalar {text:?}")))?;
                        if d.is_zero() {
                            return Err(Error::Parse(format!("zero denominator in {text:?}")));
                        }
                        BigRational::new(n, d)
                    }
                    None => BigRational::from_integer(
                        BigInt::from_str(text)
                            .map_err(|_| Error::Parse(format!("bad scalar {text:?}")))?,
                    ),
                };
                Ok(Scalar::Rational(r))
            }
            Field::Prime(_) => {
                let (n, d) = match text.split_once('/') {
                    Some((n, d)) => (n.trim(), d.trim()),
                    None => (text, "1"),
                };
                let n: i64 = n
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad scalar {text:?}")))?;
                let d: i64 = d
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad scalar {text:?}")))?;
                self.from_ratio(n, d)
            }
        }
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Field::Rational => write!(f, "rational"),
            Field::Prime(p) => write!(f, "prime:{p}"),
        }
    }
}

impl From<Field> for String {
    fn from(f: Field) -> String {
        f.to_string()
    }
}

impl TryFrom<String> for Field {
    type Error = Error;
    fn try_from(s: String) -> Result<Self, Error> {
        s.parse()
    }
}

impl FromStr for Field {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s.trim() {
            "rational" | "Q" => Ok(Field::Rational),
            "prime" => Ok(Field::Prime(Field::DEFAULT_PRIME)),
            other => match other.strip_prefix("prime:") {
                Some(p) => Field::prime(
                    p.parse()
                        .map_err(|_| Error::Parse(format!("bad prime in field spec {s:?}")))?,
                ),
                None => Err(Error::Parse(format!("unknown field {s:?}"))),
            },
        }
    }
}

fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// An element of a [`Field`]. Mixing elements of different fields panics.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Scalar {
    Rational(BigRational),
    Prime { value: u64, modulus: u64 },
}

impl Scalar {
    pub fn field(&self) -> Field {
        match self {
            Scalar::Rational(_) => Field::Rational,
            Scalar::Prime { modulus, .. } => Field::Prime(*modulus),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Rational(r) => r.is_zero(),
            Scalar::Prime { value, .. } => *value == 0,
        }
    }

    pub fn is_one(&self) -> bool {
        match self {
            Scalar::Rational(r) => r.is_one(),
            Scalar::Prime { value, .. } => *value == 1,
        }
    }

    /// Multiplicative inverse. Panics on zero.
    pub fn inv(&self) -> Scalar {
        assert!(!self.is_zero(), "inverse of zero scalar");
        match self {
            Scalar::Rational(r) => Scalar::Rational(r.recip()),
            Scalar::Prime { value, modulus } => Scalar::Prime {
                value: pow_mod(*value, modulus - 2, *modulus),
                modulus: *modulus,
            },
        }
    }

    pub fn pow(&self, mut e: i64) -> Scalar {
        let base = if e < 0 {
            e = -e;
            self.inv()
        } else {
            self.clone()
        };
        let mut acc = self.field().one();
        for _ in 0..e {
            acc = &acc * &base;
        }
        acc
    }

    /// Small-integer view, used by canonical serialization of prime-field values.
    pub fn to_i64(&self) -> Option<i64> {
        match self {
            Scalar::Rational(r) if r.is_integer() => r.to_integer().to_i64(),
            Scalar::Rational(_) => None,
            Scalar::Prime { value, .. } => Some(*value as i64),
        }
    }
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1u64;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % m;
        }
        b = b * b % m;
        e >>= 1;
    }
    acc
}

fn same_modulus(a: u64, b: u64) -> u64 {
    assert_eq!(a, b, "scalars from different prime fields");
    a
}

impl<'a> Add for &'a Scalar {
    type Output = Scalar;
    fn add(self, rhs: &'a Scalar) -> Scalar {
        match (self, rhs) {
            (Scalar::Rational(a), Scalar::Rational(b)) => Scalar::Rational(a + b),
            (
                Scalar::Prime {
                    value: a,
                    modulus: p,
                },
                Scalar::Prime {
                    value: b,
                    modulus: q,
                },
            ) => {
                let p = same_modulus(*p, *q);
                Scalar::Prime {
                    value: (a + b) % p,
                    modulus: p,
                }
            }
            _ => panic!("scalars from different fields"),
        }
    }
}

impl<'a> Sub for &'a Scalar {
    type Output = Scalar;
    fn sub(self, rhs: &'a Scalar) -> Scalar {
        match (self, rhs) {
            (Scalar::Rational(a), Scalar::Rational(b)) => Scalar::Rational(a - b),
            (
                Scalar::Prime {
                    value: a,
                    modulus: p,
                },
                Scalar::Prime {
                    value: b,
                    modulus: q,
                },
            ) => {
                let p = same_modulus(*p, *q);
                Scalar::Prime {
                    value: (a + p - b) % p,
                    modulus: p,
                }
            }
            _ => panic!("scalars from different fields"),
        }
    }
}

impl<'a> Mul for &'a Scalar {
    type Output = Scalar;
    fn mul(self, rhs: &'a Scalar) -> Scalar {
        match (self, rhs) {
            (Scalar::Rational(a), Scalar::Rational(b)) => Scalar::Rational(a * b),
            (
                Scalar::Prime {
                    value: a,
                    modulus: p,
                },
                Scalar::Prime {
                    value: b,
                    modulus: q,
                },
            ) => {
                let p = same_modulus(*p, *q);
                Scalar::Prime {
                    value: a * b % p,
                    modulus: p,
                }
            }
            _ => panic!("scalars from different fields"),
        }
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        match self {
            Scalar::Rational(a) => Scalar::Rational(-a),
            Scalar::Prime { value, modulus } => Scalar::Prime {
                value: (modulus - value) % modulus,
                modulus: *modulus,
            },
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Rational(r) => {
                if r.is_integer() {
                    write!(f, "{}", r.numer())
                } else {
                    write!(f, "{}/{}", r.numer(), r.denom())
                }
            }
            Scalar::Prime { value, modulus } => {
                // balanced representative reads better in reports
                if *value > modulus / 2 {
                    write!(f, "-{}", modulus - value)
                } else {
                    write!(f, "{value}")
                }
            }
        }
    }
}

impl Scalar {
    pub fn is_negative(&self) -> bool {
        match self {
            Scalar::Rational(r) => r.is_negative(),
            Scalar::Prime { .. } => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prime_field_inverse() {
        let f = Field::prime(101).unwrap();
        for v in 1..101 {
            let x = f.from_i64(v);
            assert!((&x * &x.inv()).is_one());
        }
    }

    #[test]
    fn parse_and_display_round_trip() {
        for field in [Field::Rational, Field::Prime(101)] {
            for text in ["0", "3", "-7", "2/3", "-5/4"] {
                let s = field.parse_scalar(text).unwrap();
                let again = field.parse_scalar(&s.to_string()).unwrap();
                assert_eq!(s, again);
            }
        }
        assert!(Field::Rational.parse_scalar("1/0").is_err());
        assert!(Field::Prime(7).parse_scalar("1/7").is_err());
    }

    #[test]
    fn field_spec_parsing() {
        assert_eq!("rational".parse::<Field>().unwrap(), Field::Rational);
        assert_eq!("prime:13".parse::<Field>().unwrap(), Field::Prime(13));
        assert_eq!("prime".parse::<Field>().unwrap(), Field::Prime(101));
        assert!("prime:12".parse::<Field>().is_err());
        assert!("complex".parse::<Field>().is_err());
    }
}
