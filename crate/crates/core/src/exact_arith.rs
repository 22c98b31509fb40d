//! Exact rational arithmetic and the combinatorial primitives shared by the
//! identity evaluators.
//!
//! [`Rational`] wraps an arbitrary-precision fraction that is kept in lowest
//! terms with a positive denominator after every operation, so structural
//! equality is value equality.

use std::cmp::Ordering;
use std::fmt;
use std::iter::{Product, Sum};
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::{BigInt, BigUint, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ArithError {
    #[error("rising product has a zero factor: s + {index} = 0")]
    ZeroFactor { index: u64 },
    #[error("division by zero")]
    DivisionByZero,
    #[error("cannot parse {input:?} as an exact rational (expected \"p/q\" or an integer)")]
    Parse { input: String },
}

/// Exact rational number in canonical form.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Rational(BigRational);

impl Rational {
    /// Builds `numer / denom`, reducing to lowest terms.
    pub fn new(numer: impl Into<BigInt>, denom: impl Into<BigInt>) -> Result<Self, ArithError> {
        let denom = denom.into();
        if denom.is_zero() {
            return Err(ArithError::DivisionByZero);
        }
        Ok(Rational(BigRational::new(numer.into(), denom)))
    }

    pub fn from_integer(value: impl Into<BigInt>) -> Self {
        Rational(BigRational::from_integer(value.into()))
    }

    pub fn zero() -> Self {
        Rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Rational(BigRational::one())
    }

    /// Exact value of a finite double. Returns `None` for NaN and infinities.
    pub fn from_f64(value: f64) -> Option<Self> {
        BigRational::from_float(value).map(Rational)
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn abs(&self) -> Self {
        Rational(self.0.abs())
    }

    pub fn checked_recip(&self) -> Result<Self, ArithError> {
        if self.is_zero() {
            Err(ArithError::DivisionByZero)
        } else {
            Ok(Rational(self.0.recip()))
        }
    }

    pub fn checked_div(&self, rhs: &Rational) -> Result<Self, ArithError> {
        if rhs.is_zero() {
            Err(ArithError::DivisionByZero)
        } else {
            Ok(div_canonical(self, rhs))
        }
    }

    pub fn pow(&self, exp: u32) -> Self {
        Rational(num_traits::pow(self.0.clone(), exp as usize))
    }

    /// Nearest double; very large components are handled without overflow.
    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    /// Rebuilds the value from its components through the reducing constructor.
    pub fn normalized(&self) -> Self {
        Rational(BigRational::new(self.numer().clone(), self.denom().clone()))
    }

    pub fn into_inner(self) -> BigRational {
        self.0
    }
}

impl From<BigRational> for Rational {
    fn from(value: BigRational) -> Self {
        Rational(value)
    }
}

impl From<i64> for Rational {
    fn from(value: i64) -> Self {
        Rational::from_integer(value)
    }
}

impl From<u64> for Rational {
    fn from(value: u64) -> Self {
        Rational::from_integer(value)
    }
}

impl From<BigUint> for Rational {
    fn from(value: BigUint) -> Self {
        Rational::from_integer(BigInt::from_biguint(Sign::Plus, value))
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.denom().is_one() {
            write!(f, "{}", self.numer())
        } else {
            write!(f, "{}/{}", self.numer(), self.denom())
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

fn parse_integer(text: &str) -> Option<BigInt> {
    let digits = text.strip_prefix(['-', '+']).unwrap_or(text);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    text.parse().ok()
}

impl FromStr for Rational {
    type Err = ArithError;

    /// Accepts `"p/q"` or a bare integer. Decimal notation is rejected.
    fn from_str(input: &str) -> Result<Self, Self::Err> {
        let err = || ArithError::Parse {
            input: input.to_string(),
        };
        let text = input.trim();
        match text.split_once('/') {
            Some((p, q)) => {
                let numer = parse_integer(p.trim()).ok_or_else(err)?;
                let denom = parse_integer(q.trim()).ok_or_else(err)?;
                if denom.is_zero() {
                    return Err(err());
                }
                Rational::new(numer, denom)
            }
            None => parse_integer(text).map(Rational::from_integer).ok_or_else(err),
        }
    }
}

/// gcd with one Euclidean step up front. The binary algorithm underneath is
/// quadratic in the larger operand, so reducing it modulo the smaller one
/// first is a large win for the lopsided operands common in long sums.
fn gcd(a: &BigInt, b: &BigInt) -> BigInt {
    use num_integer::Integer;
    let (a, b) = (a.abs(), b.abs());
    let (big, small) = if a >= b { (a, b) } else { (b, a) };
    if small.is_zero() {
        return big;
    }
    if small.is_one() {
        return small;
    }
    let rem = big % &small;
    if rem.is_zero() {
        small
    } else {
        small.gcd(&rem)
    }
}

fn raw(numer: BigInt, denom: BigInt) -> Rational {
    Rational(BigRational::new_raw(numer, denom))
}

// Operand-reduced forms (Knuth, TAOCP 4.5.1) keep the gcds on the smaller
// quantities and leave the result in lowest terms.
fn add_canonical(a: &Rational, b: &Rational, negate_b: bool) -> Rational {
    let (n1, d1) = (a.numer(), a.denom());
    let n2 = if negate_b { -b.numer() } else { b.numer().clone() };
    let d2 = b.denom();
    if d1 == d2 {
        let sum = n1 + n2;
        let g = gcd(&sum, d1);
        return if g.is_one() {
            raw(sum, d1.clone())
        } else {
            raw(sum / &g, d1 / g)
        };
    }
    let g = gcd(d1, d2);
    if g.is_one() {
        return raw(n1 * d2 + n2 * d1, d1 * d2);
    }
    let t = n1 * (d2 / &g) + n2 * (d1 / &g);
    let g2 = gcd(&t, &g);
    raw(t / &g2, (d1 / &g) * (d2 / g2))
}

fn mul_canonical(a: &Rational, b: &Rational) -> Rational {
    if a.is_zero() || b.is_zero() {
        return Rational::zero();
    }
    let g1 = gcd(a.numer(), b.denom());
    let g2 = gcd(b.numer(), a.denom());
    raw(
        (a.numer() / &g1) * (b.numer() / &g2),
        (a.denom() / g2) * (b.denom() / g1),
    )
}

fn div_canonical(a: &Rational, b: &Rational) -> Rational {
    assert!(!b.is_zero(), "rational division by zero");
    let recip = if b.is_negative() {
        raw(-b.denom(), -b.numer())
    } else {
        raw(b.denom().clone(), b.numer().clone())
    };
    mul_canonical(a, &recip)
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident, $body:expr) => {
        impl $trait<&Rational> for &Rational {
            type Output = Rational;
            fn $method(self, rhs: &Rational) -> Rational {
                $body(self, rhs)
            }
        }
        impl $trait<Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                $body(&self, &rhs)
            }
        }
        impl $trait<&Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: &Rational) -> Rational {
                $body(&self, rhs)
            }
        }
        impl $trait<Rational> for &Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                $body(self, &rhs)
            }
        }
    };
}

forward_binop!(Add, add, |a, b| add_canonical(a, b, false));
forward_binop!(Sub, sub, |a, b| add_canonical(a, b, true));
forward_binop!(Mul, mul, mul_canonical);
// Panics on a zero divisor like the primitive types; use `checked_div` when the
// divisor is not known to be non-zero.
forward_binop!(Div, div, div_canonical);

impl AddAssign<&Rational> for Rational {
    fn add_assign(&mut self, rhs: &Rational) {
        *self = add_canonical(self, rhs, false);
    }
}

impl SubAssign<&Rational> for Rational {
    fn sub_assign(&mut self, rhs: &Rational) {
        *self = add_canonical(self, rhs, true);
    }
}

impl MulAssign<&Rational> for Rational {
    fn mul_assign(&mut self, rhs: &Rational) {
        *self = mul_canonical(self, rhs);
    }
}

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-&self.0)
    }
}

/// Accumulates a sum over a common denominator and reduces once at the end.
///
/// Adding `a/b` to `N/D` keeps `D = lcm(D, b)`. The gcd starts with one
/// Euclidean step `D mod b`, which is cheap when `b` is much smaller than `D`,
/// the usual shape of a long alternating sum.
#[derive(Debug, Clone)]
pub struct RationalSum {
    numer: BigInt,
    denom: BigInt,
}

impl Default for RationalSum {
    fn default() -> Self {
        RationalSum {
            numer: BigInt::zero(),
            denom: BigInt::one(),
        }
    }
}

impl RationalSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, term: &Rational) {
        self.add_scaled(&BigInt::one(), term);
    }

    /// Adds `coeff * term`.
    pub fn add_scaled(&mut self, coeff: &BigInt, term: &Rational) {
        if coeff.is_zero() || term.is_zero() {
            return;
        }
        let b = term.denom();
        if b.is_one() {
            self.numer += coeff * term.numer() * &self.denom;
            return;
        }
        let rem = &self.denom % b;
        let g = if rem.is_zero() { b.clone() } else { gcd(b, &rem) };
        let b_part = b / &g;
        let d_part = &self.denom / &g;
        self.numer = &self.numer * &b_part + coeff * term.numer() * d_part;
        self.denom *= b_part;
    }

    pub fn finish(self) -> Rational {
        let g = gcd(&self.numer, &self.denom);
        if self.numer.is_zero() {
            Rational::zero()
        } else {
            raw(self.numer / &g, self.denom / g)
        }
    }
}

impl Sum for Rational {
    fn sum<I: Iterator<Item = Rational>>(iter: I) -> Self {
        let mut acc = RationalSum::new();
        for x in iter {
            acc.add(&x);
        }
        acc.finish()
    }
}

impl Product for Rational {
    fn product<I: Iterator<Item = Rational>>(iter: I) -> Self {
        iter.fold(Rational::one(), |acc, x| acc * x)
    }
}

impl PartialEq<i64> for Rational {
    fn eq(&self, other: &i64) -> bool {
        self.denom().is_one() && *self.numer() == BigInt::from(*other)
    }
}

impl PartialOrd<i64> for Rational {
    fn partial_cmp(&self, other: &i64) -> Option<Ordering> {
        Some(self.0.cmp(&BigRational::from_integer(BigInt::from(*other))))
    }
}

/// Binomial coefficient `C(n, k)`, zero when `k > n`.
///
/// Multiplicative formula; each partial product `C(n - k + i, i)` is an
/// integer so the division is exact.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 1..=k {
        acc *= n - k + i;
        acc /= i;
    }
    acc
}

pub fn factorial(n: u64) -> BigUint {
    (2..=n).fold(BigUint::one(), |acc, i| acc * i)
}

/// `(s + 1)(s + 2)...(s + n)`; the empty product for `n = 0` is one.
pub fn rising_product(s: &Rational, n: u64) -> Result<Rational, ArithError> {
    let mut acc = Rational::one();
    for k in 1..=n {
        let factor = s + Rational::from(k);
        if factor.is_zero() {
            return Err(ArithError::ZeroFactor { index: k });
        }
        acc *= &factor;
    }
    Ok(acc)
}

/// Row `n` of Pascal's triangle, `[C(n,0), ..., C(n,n)]`, as signed integers.
pub(crate) fn binomial_row(n: u64) -> Vec<BigInt> {
    let mut row = Vec::with_capacity(n as usize + 1);
    let mut c = BigInt::one();
    row.push(c.clone());
    for k in 1..=n {
        c = c * (n - k + 1) / k;
        row.push(c.clone());
    }
    row
}
