//! Exact rational scalars, extended reals and coordinate vectors.
//!
//! [`Rational`] keeps small values in a pair of machine integers and only
//! falls back to arbitrary precision when an intermediate result no longer
//! fits. Both representations are always reduced, so equality is structural.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::iter::Sum;
use core::ops::{Add, AddAssign, Div, Index, IndexMut, Mul, Neg, Sub, SubAssign};
use core::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::ParseRationalError;

#[derive(Clone)]
enum Repr {
    /// `num / den` with `den > 0` and `gcd(|num|, den) == 1`.
    Small(i64, i64),
    /// Only used when the reduced value does not fit `Small`.
    Big(BigRational),
}

/// An exact rational number in canonical form.
#[derive(Clone)]
pub struct Rational(Repr);

fn gcd_u128(mut a: u128, mut b: u128) -> u128 {
    if a == 0 {
        return b;
    }
    if b == 0 {
        return a;
    }
    if a == 1 || b == 1 {
        return 1;
    }
    if let (Ok(x), Ok(y)) = (u64::try_from(a), u64::try_from(b)) {
        return u128::from(gcd_u64(x, y));
    }
    let shift = (a | b).trailing_zeros();
    a >>= a.trailing_zeros();
    loop {
        b >>= b.trailing_zeros();
        if a > b {
            core::mem::swap(&mut a, &mut b);
        }
        b -= a;
        if b == 0 {
            return a << shift;
        }
    }
}

fn gcd_u64(mut a: u64, mut b: u64) -> u64 {
    let shift = (a | b).trailing_zeros();
    a >>= a.trailing_zeros();
    loop {
        b >>= b.trailing_zeros();
        if a > b {
            core::mem::swap(&mut a, &mut b);
        }
        b -= a;
        if b == 0 {
            return a << shift;
        }
    }
}

impl Rational {
    pub fn zero() -> Self {
        Rational(Repr::Small(0, 1))
    }

    pub fn one() -> Self {
        Rational(Repr::Small(1, 1))
    }

    pub fn from_int(n: i64) -> Self {
        Rational(Repr::Small(n, 1))
    }

    /// `num / den`; panics if `den == 0`.
    pub fn new(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        Self::from_i128(num as i128, den as i128)
    }

    fn from_i128(num: i128, den: i128) -> Self {
        debug_assert!(den != 0);
        let (mut num, mut den) = if den < 0 { (-num, -den) } else { (num, den) };
        let g = gcd_u128(num.unsigned_abs(), den as u128);
        if g > 1 {
            num /= g as i128;
            den /= g as i128;
        }
        match (i64::try_from(num), i64::try_from(den)) {
            (Ok(n), Ok(d)) => Rational(Repr::Small(n, d)),
            _ => Rational(Repr::Big(BigRational::new_raw(BigInt::from(num), BigInt::from(den)))),
        }
    }

    fn from_big(r: BigRational) -> Self {
        // `BigRational` arithmetic keeps values reduced with a positive denominator.
        match (r.numer().to_i64(), r.denom().to_i64()) {
            (Some(n), Some(d)) => Rational(Repr::Small(n, d)),
            _ => Rational(Repr::Big(r)),
        }
    }

    /// Builds `num / den` from arbitrary-precision parts; `None` if `den == 0`.
    pub fn from_bigints(num: BigInt, den: BigInt) -> Option<Self> {
        if den.is_zero() {
            return None;
        }
        Some(Self::from_big(BigRational::new(num, den)))
    }

    fn to_big(&self) -> BigRational {
        match &self.0 {
            Repr::Small(n, d) => BigRational::new_raw(BigInt::from(*n), BigInt::from(*d)),
            Repr::Big(r) => r.clone(),
        }
    }

    pub fn numer(&self) -> BigInt {
        match &self.0 {
            Repr::Small(n, _) => BigInt::from(*n),
            Repr::Big(r) => r.numer().clone(),
        }
    }

    pub fn denom(&self) -> BigInt {
        match &self.0 {
            Repr::Small(_, d) => BigInt::from(*d),
            Repr::Big(r) => r.denom().clone(),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.0, Repr::Small(0, _))
    }

    pub fn is_positive(&self) -> bool {
        match &self.0 {
            Repr::Small(n, _) => *n > 0,
            Repr::Big(r) => r.is_positive(),
        }
    }

    pub fn is_negative(&self) -> bool {
        match &self.0 {
            Repr::Small(n, _) => *n < 0,
            Repr::Big(r) => r.is_negative(),
        }
    }

    pub fn is_integer(&self) -> bool {
        match &self.0 {
            Repr::Small(_, d) => *d == 1,
            Repr::Big(r) => r.is_integer(),
        }
    }

    pub fn signum(&self) -> i32 {
        if self.is_positive() {
            1
        } else if self.is_negative() {
            -1
        } else {
            0
        }
    }

    pub fn abs(&self) -> Self {
        if self.is_negative() {
            -self
        } else {
            self.clone()
        }
    }

    /// Multiplicative inverse; panics on zero.
    pub fn recip(&self) -> Self {
        assert!(!self.is_zero(), "reciprocal of zero");
        match &self.0 {
            Repr::Small(n, d) => Self::from_i128(*d as i128, *n as i128),
            Repr::Big(r) => Self::from_big(r.recip()),
        }
    }

    /// Image in `Z/pZ` for a prime `p < 2^63`; `None` when `p` divides the
    /// denominator.
    pub(crate) fn residue(&self, p: u64) -> Option<u64> {
        let (n, d) = match &self.0 {
            Repr::Small(n, d) => (
                (*n as i128).rem_euclid(p as i128) as u64,
                (*d as i128).rem_euclid(p as i128) as u64,
            ),
            Repr::Big(r) => {
                let m = BigInt::from(p);
                let n = ((r.numer() % &m) + &m) % &m;
                let d = ((r.denom() % &m) + &m) % &m;
                (n.to_u64()?, d.to_u64()?)
            }
        };
        if d == 0 {
            return None;
        }
        Some(mul_mod(n, pow_mod(d, p - 2, p), p))
    }

    pub fn to_f64(&self) -> f64 {
        match &self.0 {
            Repr::Small(n, d) => *n as f64 / *d as f64,
            Repr::Big(r) => r.to_f64().unwrap_or(f64::NAN),
        }
    }

    pub fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    pub fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    fn add_ref(&self, rhs: &Self) -> Self {
        match (&self.0, &rhs.0) {
            (Repr::Small(a, b), Repr::Small(c, d)) => {
                if b == d {
                    return Self::from_i128(*a as i128 + *c as i128, *b as i128);
                }
                let (a, b, c, d) = (*a as i128, *b as i128, *c as i128, *d as i128);
                Self::from_i128(a * d + c * b, b * d)
            }
            _ => Self::from_big(self.to_big() + rhs.to_big()),
        }
    }

    fn sub_ref(&self, rhs: &Self) -> Self {
        match (&self.0, &rhs.0) {
            (Repr::Small(a, b), Repr::Small(c, d)) => {
                if b == d {
                    return Self::from_i128(*a as i128 - *c as i128, *b as i128);
                }
                let (a, b, c, d) = (*a as i128, *b as i128, *c as i128, *d as i128);
                Self::from_i128(a * d - c * b, b * d)
            }
            _ => Self::from_big(self.to_big() - rhs.to_big()),
        }
    }

    fn mul_ref(&self, rhs: &Self) -> Self {
        match (&self.0, &rhs.0) {
            (Repr::Small(a, b), Repr::Small(c, d)) => {
                Self::from_i128(*a as i128 * *c as i128, *b as i128 * *d as i128)
            }
            _ => Self::from_big(self.to_big() * rhs.to_big()),
        }
    }

    fn div_ref(&self, rhs: &Self) -> Self {
        assert!(!rhs.is_zero(), "division by zero");
        match (&self.0, &rhs.0) {
            (Repr::Small(a, b), Repr::Small(c, d)) => {
                Self::from_i128(*a as i128 * *d as i128, *b as i128 * *c as i128)
            }
            _ => Self::from_big(self.to_big() / rhs.to_big()),
        }
    }

    /// `self - a * b`, the tableau update kernel.
    pub fn sub_mul(&self, a: &Self, b: &Self) -> Self {
        if a.is_zero() || b.is_zero() {
            return self.clone();
        }
        self.sub_ref(&a.mul_ref(b))
    }
}

impl Default for Rational {
    fn default() -> Self {
        Self::zero()
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Self {
        Rational::from_int(n)
    }
}

impl From<i32> for Rational {
    fn from(n: i32) -> Self {
        Rational::from_int(n as i64)
    }
}

impl From<BigInt> for Rational {
    fn from(n: BigInt) -> Self {
        Rational::from_big(BigRational::from_integer(n))
    }
}

impl PartialEq for Rational {
    fn eq(&self, other: &Self) -> bool {
        match (&self.0, &other.0) {
            (Repr::Small(a, b), Repr::Small(c, d)) => a == c && b == d,
            (Repr::Big(x), Repr::Big(y)) => x == y,
            _ => false,
        }
    }
}

impl Eq for Rational {}

pub(crate) fn mul_mod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

pub(crate) fn pow_mod(mut b: u64, mut e: u64, p: u64) -> u64 {
    let mut acc = 1u64;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod(acc, b, p);
        }
        b = mul_mod(b, b, p);
        e >>= 1;
    }
    acc
}

impl core::hash::Hash for Rational {
    fn hash<H: core::hash::Hasher>(&self, state: &mut H) {
        match &self.0 {
            Repr::Small(n, d) => {
                0u8.hash(state);
                n.hash(state);
                d.hash(state);
            }
            Repr::Big(r) => {
                1u8.hash(state);
                r.hash(state);
            }
        }
    }
}

impl Ord for Rational {
    fn cmp(&self, other: &Self) -> Ordering {
        match (&self.0, &other.0) {
            (Repr::Small(a, b), Repr::Small(c, d)) => {
                (*a as i128 * *d as i128).cmp(&(*c as i128 * *b as i128))
            }
            _ => self.to_big().cmp(&other.to_big()),
        }
    }
}

impl PartialOrd for Rational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident, $inner:ident) => {
        impl $trait<&Rational> for &Rational {
            type Output = Rational;
            fn $method(self, rhs: &Rational) -> Rational {
                self.$inner(rhs)
            }
        }
        impl $trait<Rational> for &Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                self.$inner(&rhs)
            }
        }
        impl $trait<&Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: &Rational) -> Rational {
                self.$inner(rhs)
            }
        }
        impl $trait<Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                self.$inner(&rhs)
            }
        }
    };
}

forward_binop!(Add, add, add_ref);
forward_binop!(Sub, sub, sub_ref);
forward_binop!(Mul, mul, mul_ref);
forward_binop!(Div, div, div_ref);

impl AddAssign<&Rational> for Rational {
    fn add_assign(&mut self, rhs: &Rational) {
        *self = self.add_ref(rhs);
    }
}

impl AddAssign<Rational> for Rational {
    fn add_assign(&mut self, rhs: Rational) {
        *self = self.add_ref(&rhs);
    }
}

impl SubAssign<&Rational> for Rational {
    fn sub_assign(&mut self, rhs: &Rational) {
        *self = self.sub_ref(rhs);
    }
}

impl SubAssign<Rational> for Rational {
    fn sub_assign(&mut self, rhs: Rational) {
        *self = self.sub_ref(&rhs);
    }
}

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        match &self.0 {
            Repr::Small(n, d) => match n.checked_neg() {
                Some(m) => Rational(Repr::Small(m, *d)),
                None => Rational::from_i128(-(*n as i128), *d as i128),
            },
            Repr::Big(r) => Rational::from_big(-r.clone()),
        }
    }
}

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        -&self
    }
}

impl Sum for Rational {
    fn sum<I: Iterator<Item = Rational>>(iter: I) -> Rational {
        iter.fold(Rational::zero(), |acc, x| acc + x)
    }
}

impl<'a> Sum<&'a Rational> for Rational {
    fn sum<I: Iterator<Item = &'a Rational>>(iter: I) -> Rational {
        iter.fold(Rational::zero(), |acc, x| acc + x)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            Repr::Small(n, 1) => write!(f, "{n}"),
            Repr::Small(n, d) => write!(f, "{n}/{d}"),
            Repr::Big(r) if r.is_integer() => write!(f, "{}", r.numer()),
            Repr::Big(r) => write!(f, "{}/{}", r.numer(), r.denom()),
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Rational {
    type Err = ParseRationalError;

    /// Accepts exactly `-?[0-9]+(/[1-9][0-9]*)?`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ParseRationalError(s.to_string());
        let (num_part, den_part) = match s.split_once('/') {
            Some((n, d)) => (n, Some(d)),
            None => (s, None),
        };
        let digits = num_part.strip_prefix('-').unwrap_or(num_part);
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let num = BigInt::from_str(num_part).map_err(|_| bad())?;
        let den = match den_part {
            None => BigInt::one(),
            Some(d) => {
                let bytes = d.as_bytes();
                if bytes.is_empty()
                    || !bytes.iter().all(|b| b.is_ascii_digit())
                    || bytes[0] == b'0'
                {
                    return Err(bad());
                }
                BigInt::from_str(d).map_err(|_| bad())?
            }
        };
        Rational::from_bigints(num, den).ok_or_else(bad)
    }
}

/// Least common multiple of the denominators of `values`.
pub(crate) fn lcm_denominators<'a, I: IntoIterator<Item = &'a Rational>>(values: I) -> BigInt {
    values
        .into_iter()
        .fold(BigInt::one(), |acc, v| acc.lcm(&v.denom()))
}

/// Rescales a nonzero vector by a positive factor so that its entries are
/// coprime integers. The zero vector is returned unchanged.
pub(crate) fn primitive_integer(v: &[Rational]) -> Vec<Rational> {
    if v.iter().all(Rational::is_zero) {
        return v.to_vec();
    }
    if v.iter().all(|x| matches!(x.0, Repr::Small(_, _))) {
        let mut l: i128 = 1;
        let mut fits = true;
        for x in v {
            if let Repr::Small(_, d) = x.0 {
                let d = d as i128;
                let g = gcd_u128(l as u128, d as u128) as i128;
                match (l / g).checked_mul(d) {
                    Some(m) if m <= i64::MAX as i128 => l = m,
                    _ => {
                        fits = false;
                        break;
                    }
                }
            }
        }
        if fits {
            let ints: Option<Vec<i128>> = v
                .iter()
                .map(|x| match x.0 {
                    Repr::Small(n, d) => (n as i128).checked_mul(l / d as i128),
                    Repr::Big(_) => None,
                })
                .collect();
            if let Some(ints) = ints {
                let g = ints
                    .iter()
                    .fold(0u128, |acc, n| gcd_u128(acc, n.unsigned_abs()));
                return ints
                    .iter()
                    .map(|n| Rational::from_i128(n / g as i128, 1))
                    .collect();
            }
        }
    }
    let l = lcm_denominators(v);
    let ints: Vec<BigInt> = v
        .iter()
        .map(|x| x.numer() * (&l / x.denom()))
        .collect();
    let g = ints.iter().fold(BigInt::zero(), |acc, n| acc.gcd(n));
    ints.into_iter().map(|n| Rational::from(n / &g)).collect()
}

/// A rational extended by `±∞`.
///
/// `NegInf` doubles as the support value of the empty set, so it absorbs in
/// addition: the Minkowski sum with an empty set is empty.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Extended {
    NegInf,
    Finite(Rational),
    PosInf,
}

impl Extended {
    pub fn is_finite(&self) -> bool {
        matches!(self, Extended::Finite(_))
    }

    pub fn finite(&self) -> Option<&Rational> {
        match self {
            Extended::Finite(r) => Some(r),
            _ => None,
        }
    }

    pub fn into_finite(self) -> Option<Rational> {
        match self {
            Extended::Finite(r) => Some(r),
            _ => None,
        }
    }

    /// Multiplication by a nonnegative scalar with `0 · (±∞) = 0`.
    pub fn scale(&self, c: &Rational) -> Extended {
        assert!(!c.is_negative(), "scale factor must be nonnegative");
        match self {
            Extended::Finite(r) => Extended::Finite(r * c),
            _ if c.is_zero() => Extended::Finite(Rational::zero()),
            other => other.clone(),
        }
    }
}

impl From<Rational> for Extended {
    fn from(r: Rational) -> Self {
        Extended::Finite(r)
    }
}

impl Add for Extended {
    type Output = Extended;
    fn add(self, rhs: Extended) -> Extended {
        match (self, rhs) {
            (Extended::NegInf, _) | (_, Extended::NegInf) => Extended::NegInf,
            (Extended::PosInf, _) | (_, Extended::PosInf) => Extended::PosInf,
            (Extended::Finite(a), Extended::Finite(b)) => Extended::Finite(a + b),
        }
    }
}

impl fmt::Display for Extended {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Extended::NegInf => f.write_str("-inf"),
            Extended::Finite(r) => write!(f, "{r}"),
            Extended::PosInf => f.write_str("+inf"),
        }
    }
}

/// A point or a dual functional in `Q^d`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Vector(Vec<Rational>);

impl Vector {
    pub fn new(coords: Vec<Rational>) -> Self {
        Vector(coords)
    }

    pub fn zeros(dim: usize) -> Self {
        Vector(alloc::vec![Rational::zero(); dim])
    }

    pub fn unit(dim: usize, i: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.0[i] = Rational::one();
        v
    }

    pub fn from_ints(coords: &[i64]) -> Self {
        Vector(coords.iter().map(|&c| Rational::from_int(c)).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[Rational] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<Rational> {
        self.0
    }

    pub fn iter(&self) -> core::slice::Iter<'_, Rational> {
        self.0.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(Rational::is_zero)
    }

    pub fn dot(&self, other: &Vector) -> Rational {
        dot(&self.0, &other.0)
    }

    pub fn scale(&self, c: &Rational) -> Vector {
        Vector(self.0.iter().map(|x| x * c).collect())
    }

    /// `self + c * other`.
    pub fn add_scaled(&self, c: &Rational, other: &Vector) -> Vector {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        Vector(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a + &(c * b))
                .collect(),
        )
    }

    pub fn norm_inf(&self) -> Rational {
        self.0
            .iter()
            .map(Rational::abs)
            .fold(Rational::zero(), Rational::max)
    }

    pub fn norm_1(&self) -> Rational {
        self.0.iter().map(Rational::abs).sum()
    }

    /// Appends one coordinate, e.g. the height of an epigraph point.
    pub fn lifted(&self, last: Rational) -> Vector {
        let mut coords = self.0.clone();
        coords.push(last);
        Vector(coords)
    }

    /// Splits off the last coordinate.
    pub fn split_last(&self) -> (Vector, Rational) {
        let (last, head) = self.0.split_last().expect("nonempty vector");
        (Vector(head.to_vec()), last.clone())
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(Rational::to_f64).collect()
    }
}

/// Integer vectors (the double-description working set) skip the per-step
/// reductions of the general path.
fn integer_dot(a: &[Rational], b: &[Rational]) -> Option<Rational> {
    let mut small: i128 = 0;
    let mut overflow = false;
    for (x, y) in a.iter().zip(b) {
        match (&x.0, &y.0) {
            (Repr::Small(n, 1), Repr::Small(m, 1)) => {
                match (*n as i128).checked_mul(*m as i128).and_then(|p| small.checked_add(p)) {
                    Some(v) => small = v,
                    None => {
                        overflow = true;
                        break;
                    }
                }
            }
            _ if x.is_integer() && y.is_integer() => {
                overflow = true;
                break;
            }
            _ => return None,
        }
    }
    if !overflow {
        return Some(Rational::from_i128(small, 1));
    }
    let mut acc = BigInt::zero();
    for (x, y) in a.iter().zip(b) {
        if !x.is_integer() || !y.is_integer() {
            return None;
        }
        if !x.is_zero() && !y.is_zero() {
            acc += x.numer() * y.numer();
        }
    }
    Some(Rational::from(acc))
}

pub(crate) fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    assert_eq!(a.len(), b.len(), "dimension mismatch");
    if let Some(v) = integer_dot(a, b) {
        return v;
    }
    let mut acc = Rational::zero();
    for (x, y) in a.iter().zip(b) {
        if !x.is_zero() && !y.is_zero() {
            acc += x * y;
        }
    }
    acc
}

impl Index<usize> for Vector {
    type Output = Rational;
    fn index(&self, i: usize) -> &Rational {
        &self.0[i]
    }
}

impl IndexMut<usize> for Vector {
    fn index_mut(&mut self, i: usize) -> &mut Rational {
        &mut self.0[i]
    }
}

impl Add<&Vector> for &Vector {
    type Output = Vector;
    fn add(self, rhs: &Vector) -> Vector {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch");
        Vector(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub<&Vector> for &Vector {
    type Output = Vector;
    fn sub(self, rhs: &Vector) -> Vector {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch");
        Vector(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl Neg for &Vector {
    type Output = Vector;
    fn neg(self) -> Vector {
        Vector(self.0.iter().map(|a| -a).collect())
    }
}

impl From<Vec<Rational>> for Vector {
    fn from(v: Vec<Rational>) -> Self {
        Vector(v)
    }
}

impl FromIterator<Rational> for Vector {
    fn from_iter<I: IntoIterator<Item = Rational>>(iter: I) -> Self {
        Vector(iter.into_iter().collect())
    }
}

impl fmt::Display for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{x}")?;
        }
        f.write_str(")")
    }
}

impl fmt::Debug for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Shorthand for `Rational::new`.
pub fn q(num: i64, den: i64) -> Rational {
    Rational::new(num, den)
}

impl Rational {
    /// Formats as the canonical `p/q` string (integers without a slash).
    pub fn to_canonical_string(&self) -> String {
        self.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn canonical_form() {
        assert_eq!(q(2, 4), q(1, 2));
        assert_eq!(q(3, -6), q(-1, 2));
        assert_eq!(q(0, -5), Rational::zero());
        assert_eq!(q(-1, 2).to_string(), "-1/2");
        assert_eq!(q(6, 3).to_string(), "2");
    }

    #[test]
    fn overflow_promotes_to_big() {
        let big = Rational::from_int(i64::MAX);
        let sum = &big + &big;
        assert_eq!(sum.to_string(), "18446744073709551614");
        let back = &sum - &big;
        assert_eq!(back, big);
        assert!(matches!(back.0, Repr::Small(_, _)));
        let tiny = q(1, i64::MAX) * q(1, i64::MAX);
        assert!(tiny.is_positive());
        assert_eq!(tiny.recip().to_string(), "85070591730234615847396907784232501249");
        assert_eq!(-Rational::from_int(i64::MIN), &big + &Rational::one());
    }

    #[test]
    fn parse_grammar() {
        assert_eq!("-3/4".parse::<Rational>().unwrap(), q(-3, 4));
        assert_eq!("12".parse::<Rational>().unwrap(), q(12, 1));
        assert_eq!("4/8".parse::<Rational>().unwrap(), q(1, 2));
        for bad in ["", "-", "1/", "1/0", "1/05", "+1", "1.5", " 1", "1/-2", "a"] {
            assert!(bad.parse::<Rational>().is_err(), "{bad:?} accepted");
        }
        let huge = "123456789012345678901234567891/2";
        assert_eq!(huge.parse::<Rational>().unwrap().to_string(), huge);
    }

    #[test]
    fn primitive_scaling_keeps_direction() {
        let v = primitive_integer(&[q(-1, 2), q(3, 4), Rational::zero()]);
        assert_eq!(v, alloc::vec![q(-2, 1), q(3, 1), Rational::zero()]);
    }

    #[test]
    fn extended_order_and_sum() {
        assert!(Extended::NegInf < Extended::Finite(q(-100, 1)));
        assert!(Extended::Finite(q(100, 1)) < Extended::PosInf);
        assert_eq!(Extended::PosInf + Extended::NegInf, Extended::NegInf);
        assert_eq!(Extended::PosInf.scale(&Rational::zero()), Extended::Finite(Rational::zero()));
    }

    fn arb_rational() -> impl Strategy<Value = Rational> {
        prop_oneof![
            (-50i64..50, 1i64..20).prop_map(|(n, d)| q(n, d)),
            (any::<i64>(), 1i64..i64::MAX).prop_map(|(n, d)| q(n, d)),
        ]
    }

    proptest! {
        #[test]
        fn field_laws_match_bigrational(a in arb_rational(), b in arb_rational()) {
            let (x, y) = (a.to_big(), b.to_big());
            prop_assert_eq!((&a + &b).to_big(), &x + &y);
            prop_assert_eq!((&a - &b).to_big(), &x - &y);
            prop_assert_eq!((&a * &b).to_big(), &x * &y);
            if !b.is_zero() {
                prop_assert_eq!((&a / &b).to_big(), &x / &y);
            }
            prop_assert_eq!(a.cmp(&b), x.cmp(&y));
            prop_assert_eq!(a.to_string().parse::<Rational>().unwrap(), a);
        }
    }
}
