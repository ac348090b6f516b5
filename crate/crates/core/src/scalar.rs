//! Exact scalars in the quadratic field `Q(sqrt 3)` and exact points built from them.
//!
//! Every rational number is a scalar with a zero surd part, so rational systems
//! and the Sierpinski gasket share one arithmetic. Ordering is the real ordering
//! of `a + b*sqrt(3)`, decided exactly.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::error::Error;

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// `rational + surd * sqrt(3)` with both parts exact rationals.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Scalar {
    rational: BigRational,
    surd: BigRational,
}

fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

impl Scalar {
    pub fn new(rational: BigRational, surd: BigRational) -> Self {
        Scalar { rational, surd }
    }

    pub fn from_rational(r: BigRational) -> Self {
        Scalar { rational: r, surd: BigRational::zero() }
    }

    pub fn from_ratio(n: i64, d: i64) -> Self {
        Self::from_rational(ratio(n, d))
    }

    pub fn from_int(n: i64) -> Self {
        Self::from_ratio(n, 1)
    }

    /// `(rn/rd) + (sn/sd) * sqrt(3)`
    pub fn quadratic(rn: i64, rd: i64, sn: i64, sd: i64) -> Self {
        Scalar { rational: ratio(rn, rd), surd: ratio(sn, sd) }
    }

    pub fn zero() -> Self {
        Self::from_int(0)
    }

    pub fn one() -> Self {
        Self::from_int(1)
    }

    pub fn sqrt3() -> Self {
        Scalar { rational: BigRational::zero(), surd: BigRational::one() }
    }

    pub fn rational_part(&self) -> &BigRational {
        &self.rational
    }

    pub fn surd_part(&self) -> &BigRational {
        &self.surd
    }

    pub fn is_zero(&self) -> bool {
        self.rational.is_zero() && self.surd.is_zero()
    }

    pub fn is_rational(&self) -> bool {
        self.surd.is_zero()
    }

    /// Exact sign: -1, 0 or 1.
    pub fn signum(&self) -> i8 {
        let sa = sign_of(&self.rational);
        let sb = sign_of(&self.surd);
        if sb == 0 {
            return sa;
        }
        if sa == 0 || sa == sb {
            return sb;
        }
        // opposite signs: compare a^2 against 3 b^2
        let a2 = &self.rational * &self.rational;
        let b2 = &self.surd * &self.surd * BigRational::from_integer(BigInt::from(3));
        if a2 > b2 {
            sa
        } else {
            sb
        }
    }

    pub fn abs(&self) -> Scalar {
        if self.signum() < 0 {
            -self
        } else {
            self.clone()
        }
    }

    /// Field inverse; `None` for zero.
    pub fn inverse(&self) -> Option<Scalar> {
        if self.is_zero() {
            return None;
        }
        // 1/(a + b r) = (a - b r) / (a^2 - 3 b^2)
        let three = BigRational::from_integer(BigInt::from(3));
        let norm = &self.rational * &self.rational - three * &self.surd * &self.surd;
        Some(Scalar { rational: &self.rational / &norm, surd: -(&self.surd / &norm) })
    }

    pub fn checked_div(&self, other: &Scalar) -> Option<Scalar> {
        other.inverse().map(|inv| self * &inv)
    }

    pub fn to_f64(&self) -> f64 {
        let a = self.rational.to_f64().unwrap_or(f64::NAN);
        if self.surd.is_zero() {
            return a;
        }
        a + self.surd.to_f64().unwrap_or(f64::NAN) * SQRT3
    }
}

fn sign_of(r: &BigRational) -> i8 {
    if r.is_zero() {
        0
    } else if r.is_positive() {
        1
    } else {
        -1
    }
}

impl Ord for Scalar {
    fn cmp(&self, other: &Self) -> Ordering {
        if self.surd.is_zero() && other.surd.is_zero() {
            return self.rational.cmp(&other.rational);
        }
        (self - other).signum().cmp(&0)
    }
}

impl PartialOrd for Scalar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<'a> Add<&'a Scalar> for &'a Scalar {
    type Output = Scalar;
    fn add(self, rhs: &'a Scalar) -> Scalar {
        Scalar { rational: &self.rational + &rhs.rational, surd: &self.surd + &rhs.surd }
    }
}

impl<'a> Sub<&'a Scalar> for &'a Scalar {
    type Output = Scalar;
    fn sub(self, rhs: &'a Scalar) -> Scalar {
        Scalar { rational: &self.rational - &rhs.rational, surd: &self.surd - &rhs.surd }
    }
}

impl<'a> Mul<&'a Scalar> for &'a Scalar {
    type Output = Scalar;
    fn mul(self, rhs: &'a Scalar) -> Scalar {
        if self.surd.is_zero() && rhs.surd.is_zero() {
            return Scalar::from_rational(&self.rational * &rhs.rational);
        }
        let three = BigRational::from_integer(BigInt::from(3));
        Scalar {
            rational: &self.rational * &rhs.rational + three * &self.surd * &rhs.surd,
            surd: &self.rational * &rhs.surd + &self.surd * &rhs.rational,
        }
    }
}

impl Add for Scalar {
    type Output = Scalar;
    fn add(self, rhs: Scalar) -> Scalar {
        &self + &rhs
    }
}

impl Sub for Scalar {
    type Output = Scalar;
    fn sub(self, rhs: Scalar) -> Scalar {
        &self - &rhs
    }
}

impl Mul for Scalar {
    type Output = Scalar;
    fn mul(self, rhs: Scalar) -> Scalar {
        &self * &rhs
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar { rational: -&self.rational, surd: -&self.surd }
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        -&self
    }
}

fn fmt_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Renders as `p/q`, `r/s*sqrt3` or `p/q+r/s*sqrt3`.
impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.surd.is_zero() {
            return write!(f, "{}", fmt_rational(&self.rational));
        }
        let surd = if self.surd.abs().is_one() {
            "sqrt3".to_string()
        } else {
            format!("{}*sqrt3", fmt_rational(&self.surd.abs()))
        };
        if self.rational.is_zero() {
            if self.surd.is_negative() {
                write!(f, "-{surd}")
            } else {
                write!(f, "{surd}")
            }
        } else {
            let op = if self.surd.is_negative() { '-' } else { '+' };
            write!(f, "{}{}{}", fmt_rational(&self.rational), op, surd)
        }
    }
}

impl Serialize for Scalar {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if s.is_empty() {
        return None;
    }
    if let Some((n, d)) = s.split_once('/') {
        let n = parse_rational(n)?;
        let d = parse_rational(d)?;
        if d.is_zero() {
            return None;
        }
        return Some(n / d);
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (mantissa, exponent) = match body.find(['e', 'E']) {
        Some(i) => (&body[..i], body[i + 1..].parse::<i32>().ok()?),
        None => (body, 0),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits: BigInt = format!("{int_part}{frac_part}0").parse::<BigInt>().ok()? / BigInt::from(10);
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let mut value = BigRational::from_integer(digits);
    if scale >= 0 {
        value *= BigRational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        value /= BigRational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Some(if neg { -value } else { value })
}

fn parse_term(term: &str) -> Option<Scalar> {
    let t = term.trim();
    let (neg, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest.trim()),
        None => (false, t.strip_prefix('+').unwrap_or(t).trim()),
    };
    let surd_body = body
        .strip_suffix("*sqrt3")
        .or_else(|| body.strip_suffix("*√3"))
        .or_else(|| body.strip_suffix("√3"));
    let value = if body == "sqrt3" || body == "√3" {
        Scalar::sqrt3()
    } else if let Some(coef) = surd_body {
        Scalar { rational: BigRational::zero(), surd: parse_rational(coef)? }
    } else {
        Scalar::from_rational(parse_rational(body)?)
    };
    Some(if neg { -value } else { value })
}

impl FromStr for Scalar {
    type Err = Error;

    /// Accepts `p`, `p/q`, decimals, `r/s*sqrt3`, `sqrt3` and sums such as `1/2+1/4*sqrt3`.
    fn from_str(s: &str) -> Result<Self, Error> {
        let bad = || Error::Parse(format!("not an exact scalar: {s:?}"));
        let bytes: Vec<char> = s.trim().chars().collect();
        let mut terms = Vec::new();
        let mut start = 0;
        for i in 1..bytes.len() {
            let c = bytes[i];
            let prev = bytes[i - 1];
            if (c == '+' || c == '-') && !matches!(prev, 'e' | 'E' | '/' | '*') {
                terms.push(bytes[start..i].iter().collect::<String>());
                start = i;
            }
        }
        terms.push(bytes[start..].iter().collect::<String>());
        let mut total = Scalar::zero();
        for t in terms {
            if t.trim().is_empty() {
                return Err(bad());
            }
            total = &total + &parse_term(&t).ok_or_else(bad)?;
        }
        Ok(total)
    }
}

/// A point of `R^d` with exact coordinates. Ordered lexicographically.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Point(pub Vec<Scalar>);

impl Point {
    pub fn new(coords: Vec<Scalar>) -> Self {
        Point(coords)
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[Scalar] {
        &self.0
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(Scalar::to_f64).collect()
    }

    pub fn is_rational(&self) -> bool {
        self.0.iter().all(Scalar::is_rational)
    }

    pub fn distance_f64(&self, other: &Point) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| {
                let d = a.to_f64() - b.to_f64();
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Parses comma-separated coordinates, optionally wrapped in parentheses.
    pub fn parse(s: &str) -> Result<Self, Error> {
        let inner = s.trim().trim_start_matches('(').trim_end_matches(')');
        inner.split(',').map(|c| c.parse::<Scalar>()).collect::<Result<Vec<_>, _>>().map(Point)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.len() == 1 {
            return write!(f, "{}", self.0[0]);
        }
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl Serialize for Point {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.0.serialize(serializer)
    }
}

/// Index of `p` in `points`: binary search for sorted slices, linear scan otherwise.
pub fn locate(points: &[Point], p: &Point) -> Option<usize> {
    match points.binary_search(p) {
        Ok(i) => Some(i),
        Err(_) => points.iter().position(|q| q == p),
    }
}
