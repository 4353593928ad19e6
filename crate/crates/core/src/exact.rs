//! Exact arithmetic helpers.
//!
//! Every verdict in this crate is computed without floating point. Most values
//! are rationals; the few constants that involve a square root (such as the
//! `sqrt(n*w)/20` margin of the segmented counter) live in a quadratic field
//! `Q(sqrt(r))` through [`Surd`].

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub fn rational(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: impl Into<BigInt>) -> BigRational {
    BigRational::from_integer(n.into())
}

/// Parses `"p/q"` or a decimal integer into a reduced rational.
pub fn parse_rational(text: &str) -> Result<BigRational> {
    let text = text.trim();
    let bad = |msg: &str| Error::parse(format!("rational {text:?}"), msg);
    let (num, den) = match text.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (text, "1"),
    };
    let num: BigInt = num.parse().map_err(|_| bad("numerator is not an integer"))?;
    let den: BigInt = den.parse().map_err(|_| bad("denominator is not an integer"))?;
    if den.is_zero() {
        return Err(bad("zero denominator"));
    }
    Ok(BigRational::new(num, den))
}

/// Writes a rational as `p/q` in lowest terms, or as a bare integer.
pub fn format_rational(value: &BigRational) -> String {
    if value.is_integer() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

pub fn rational_to_f64(value: &BigRational) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}

/// `C(n, k)` over arbitrary-precision integers.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

pub fn factorial(k: u64) -> BigUint {
    (1..=k).fold(BigUint::one(), |acc, i| acc * i)
}

/// Largest integer `s` with `s^2 <= x`, for `x >= 0`.
pub fn floor_sqrt(x: &BigRational) -> BigInt {
    assert!(!x.is_negative(), "square root of a negative rational");
    x.floor().to_integer().sqrt()
}

/// Smallest integer `s` with `s^2 >= x`, for `x >= 0`.
pub fn ceil_sqrt(x: &BigRational) -> BigInt {
    let s = floor_sqrt(x);
    if int(&s * &s) < *x {
        s + 1
    } else {
        s
    }
}

/// Smallest integer `s` with `s^k >= x`.
pub fn ceil_nth_root(x: &BigUint, k: u32) -> BigUint {
    let s = x.nth_root(k);
    if s.pow(k) < *x {
        s + 1u32
    } else {
        s
    }
}

/// A real number `a + b*sqrt(r)` with rational `a`, `b` and integer radicand `r`.
///
/// Rationals are the case `b = 0`, stored with `r = 0`. Binary operations
/// require both operands to share a radicand (or one of them to be rational);
/// mixing two different radicands panics.
#[derive(Clone, Debug)]
pub struct Surd {
    a: BigRational,
    b: BigRational,
    r: BigUint,
}

impl Surd {
    pub fn from_rational(a: BigRational) -> Self {
        Surd {
            a,
            b: BigRational::zero(),
            r: BigUint::zero(),
        }
    }

    /// `a + b*sqrt(r)`, with perfect-square factors of `r` pulled out.
    pub fn new(a: BigRational, b: BigRational, r: BigUint) -> Self {
        let (outside, inside) = split_square(&r);
        let b = b * int(BigInt::from(outside));
        if b.is_zero() || inside.is_zero() {
            return Surd::from_rational(a);
        }
        if inside.is_one() {
            return Surd::from_rational(a + b);
        }
        Surd { a, b, r: inside }
    }

    pub fn sqrt_of(r: impl Into<BigUint>) -> Self {
        Surd::new(BigRational::zero(), BigRational::one(), r.into())
    }

    pub fn rational_part(&self) -> &BigRational {
        &self.a
    }

    pub fn surd_part(&self) -> (&BigRational, &BigUint) {
        (&self.b, &self.r)
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        self.b.is_zero().then_some(&self.a)
    }

    pub fn is_rational(&self) -> bool {
        self.b.is_zero()
    }

    pub fn signum(&self) -> Ordering {
        let sa = sign_of(&self.a);
        let sb = sign_of(&self.b);
        if sb == Ordering::Equal || sa == sb {
            return if sa == Ordering::Equal { sb } else { sa };
        }
        if sa == Ordering::Equal {
            return sb;
        }
        // Opposite signs: compare a^2 with b^2 * r.
        let a2 = &self.a * &self.a;
        let b2r = &self.b * &self.b * int(BigInt::from(self.r.clone()));
        match a2.cmp(&b2r) {
            Ordering::Greater => sa,
            Ordering::Less => sb,
            Ordering::Equal => Ordering::Equal,
        }
    }

    pub fn is_negative(&self) -> bool {
        self.signum() == Ordering::Less
    }

    pub fn scale(&self, factor: &BigRational) -> Surd {
        Surd {
            a: &self.a * factor,
            b: &self.b * factor,
            r: self.r.clone(),
        }
        .normalized()
    }

    pub fn to_f64(&self) -> f64 {
        let root = self.r.to_f64().unwrap_or(f64::NAN).sqrt();
        rational_to_f64(&self.a) + rational_to_f64(&self.b) * root
    }

    /// Largest integer not exceeding the value.
    pub fn floor(&self) -> BigInt {
        // Write the value as (A + B*sqrt(r)) / D with integers A, B and D > 0.
        let den = self.a.denom().lcm(self.b.denom());
        let a = self.a.numer() * (&den / self.a.denom());
        let b = self.b.numer() * (&den / self.b.denom());
        let square = BigInt::from(self.r.clone()) * &b * &b;
        let root = square.sqrt();
        let numer_floor = if b.is_negative() {
            if &root * &root < square {
                a - root - 1
            } else {
                a - root
            }
        } else {
            a + root
        };
        numer_floor.div_floor(&den)
    }

    fn normalized(mut self) -> Self {
        if self.b.is_zero() {
            self.r = BigUint::zero();
        }
        self
    }

    fn radicand_with(&self, other: &Surd) -> BigUint {
        match (self.b.is_zero(), other.b.is_zero()) {
            (true, _) => other.r.clone(),
            (_, true) => self.r.clone(),
            _ => {
                assert_eq!(
                    self.r, other.r,
                    "arithmetic between sqrt({}) and sqrt({})",
                    self.r, other.r
                );
                self.r.clone()
            }
        }
    }
}

fn sign_of(x: &BigRational) -> Ordering {
    x.numer().sign().cmp(&Sign::NoSign)
}

/// Splits `r = outside^2 * inside` by trial division with small primes.
fn split_square(r: &BigUint) -> (BigUint, BigUint) {
    let mut outside = BigUint::one();
    let mut inside = r.clone();
    if inside.is_zero() {
        return (outside, inside);
    }
    let root = inside.sqrt();
    if &root * &root == inside {
        return (root, BigUint::one());
    }
    let mut p = 2u32;
    while p <= 1 << 16 {
        let sq = BigUint::from(p) * p;
        if sq > inside {
            break;
        }
        while (&inside % &sq).is_zero() {
            inside /= &sq;
            outside *= p;
        }
        p += if p == 2 { 1 } else { 2 };
    }
    (outside, inside)
}

impl From<BigRational> for Surd {
    fn from(a: BigRational) -> Self {
        Surd::from_rational(a)
    }
}

impl From<&BigRational> for Surd {
    fn from(a: &BigRational) -> Self {
        Surd::from_rational(a.clone())
    }
}

impl From<i64> for Surd {
    fn from(a: i64) -> Self {
        Surd::from_rational(int(a))
    }
}

impl From<&Surd> for Surd {
    fn from(s: &Surd) -> Self {
        s.clone()
    }
}

impl Add for &Surd {
    type Output = Surd;
    fn add(self, rhs: &Surd) -> Surd {
        let r = self.radicand_with(rhs);
        Surd {
            a: &self.a + &rhs.a,
            b: &self.b + &rhs.b,
            r,
        }
        .normalized()
    }
}

impl Sub for &Surd {
    type Output = Surd;
    fn sub(self, rhs: &Surd) -> Surd {
        let r = self.radicand_with(rhs);
        Surd {
            a: &self.a - &rhs.a,
            b: &self.b - &rhs.b,
            r,
        }
        .normalized()
    }
}

impl Mul for &Surd {
    type Output = Surd;
    fn mul(self, rhs: &Surd) -> Surd {
        let r = self.radicand_with(rhs);
        let rr = int(BigInt::from(r.clone()));
        Surd {
            a: &self.a * &rhs.a + &self.b * &rhs.b * rr,
            b: &self.a * &rhs.b + &self.b * &rhs.a,
            r,
        }
        .normalized()
    }
}

impl Neg for &Surd {
    type Output = Surd;
    fn neg(self) -> Surd {
        Surd {
            a: -&self.a,
            b: -&self.b,
            r: self.r.clone(),
        }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for Surd {
            type Output = Surd;
            fn $m(self, rhs: Surd) -> Surd {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl PartialEq for Surd {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Surd {}

impl PartialOrd for Surd {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Surd {
    fn cmp(&self, other: &Self) -> Ordering {
        (self - other).signum()
    }
}

impl PartialEq<BigRational> for Surd {
    fn eq(&self, other: &BigRational) -> bool {
        self.b.is_zero() && self.a == *other
    }
}

impl PartialOrd<BigRational> for Surd {
    fn partial_cmp(&self, other: &BigRational) -> Option<Ordering> {
        Some(self.cmp(&Surd::from(other)))
    }
}

impl fmt::Display for Surd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.b.is_zero() {
            return f.write_str(&format_rational(&self.a));
        }
        let mut out = String::new();
        if !self.a.is_zero() {
            out.push_str(&format_rational(&self.a));
            out.push(if self.b.is_negative() { '-' } else { '+' });
        } else if self.b.is_negative() {
            out.push('-');
        }
        let coef = self.b.abs();
        let sqrt = format!("sqrt({})", self.r);
        if coef.numer().is_one() {
            out.push_str(&sqrt);
            if !coef.denom().is_one() {
                out.push_str(&format!("/{}", coef.denom()));
            }
        } else {
            out.push_str(&format!("{}*{}", format_rational(&coef), sqrt));
        }
        f.write_str(&out)
    }
}

impl FromStr for Surd {
    type Err = Error;

    /// Accepts a sum of terms, each a rational (`p/q`) or a surd term
    /// (`[c*]sqrt(r)[/q]`), joined by `+` or `-`.
    fn from_str(text: &str) -> Result<Surd> {
        let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        if compact.is_empty() {
            return Err(Error::parse("number", "empty string"));
        }
        let mut terms = Vec::new();
        let mut depth = 0usize;
        let mut start = 0usize;
        for (i, ch) in compact.char_indices() {
            match ch {
                '(' => depth += 1,
                ')' => depth = depth.saturating_sub(1),
                '+' | '-' if depth == 0 && i > start => {
                    terms.push(&compact[start..i]);
                    start = i;
                }
                _ => {}
            }
        }
        terms.push(&compact[start..]);

        let mut total = Surd::from(0);
        for term in terms {
            total = &total + &parse_term(term)?;
        }
        Ok(total)
    }
}

fn parse_term(term: &str) -> Result<Surd> {
    let (negative, body) = match term.as_bytes().first() {
        Some(b'-') => (true, &term[1..]),
        Some(b'+') => (false, &term[1..]),
        _ => (false, term),
    };
    let value = match body.find("sqrt(") {
        None => Surd::from(parse_rational(body)?),
        Some(pos) => {
            let coef = match &body[..pos] {
                "" => BigRational::one(),
                c => parse_rational(c.strip_suffix('*').ok_or_else(|| {
                    Error::parse(format!("term {term:?}"), "expected '*' before sqrt")
                })?)?,
            };
            let rest = &body[pos + 5..];
            let close = rest
                .find(')')
                .ok_or_else(|| Error::parse(format!("term {term:?}"), "unclosed sqrt("))?;
            let radicand: BigUint = rest[..close]
                .parse()
                .map_err(|_| Error::parse(format!("term {term:?}"), "bad radicand"))?;
            let tail = &rest[close + 1..];
            let coef = match tail.strip_prefix('/') {
                Some(d) => coef / parse_rational(d)?,
                None if tail.is_empty() => coef,
                None => return Err(Error::parse(format!("term {term:?}"), "trailing text")),
            };
            Surd::new(BigRational::zero(), coef, radicand)
        }
    };
    Ok(if negative { -&value } else { value })
}

/// Rounds `x` down to a multiple of `2^-bits`.
pub fn floor_to_dyadic(x: &Surd, bits: u32) -> BigRational {
    let scale = BigInt::one() << bits;
    let scaled = x.scale(&int(scale.clone()));
    BigRational::new(scaled.floor(), scale)
}

/// Rounds `x` up to a multiple of `2^-bits`.
pub fn ceil_to_dyadic(x: &Surd, bits: u32) -> BigRational {
    -floor_to_dyadic(&-x, bits)
}
