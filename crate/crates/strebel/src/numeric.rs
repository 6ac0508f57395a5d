//! Exact scalars `a + b*sqrt(d)` with rational `a`, `b`, and exact log-ratios.

use std::borrow::Cow;
use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NumericError {
    #[error("mixed field contexts sqrt({0}) and sqrt({1})")]
    MixedContext(u64, u64),
    #[error("{0} is not a squarefree positive integer")]
    NotSquarefree(u64),
    #[error("cannot parse scalar {0:?}")]
    Parse(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("expected a positive value, got {0}")]
    NonPositive(String),
    #[error("empty list")]
    Empty,
}

pub fn is_squarefree(d: u64) -> bool {
    if d == 0 {
        return false;
    }
    let mut p = 2u64;
    while p * p <= d {
        if d % (p * p) == 0 {
            return false;
        }
        p += 1;
    }
    true
}

/// Rational coefficient held in machine words while it fits. The form is
/// canonical (`Big` only holds values outside the `Small` range), so the
/// derived equality and hash are value equality.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum Rat {
    Small(i128, i128),
    Big(BigRational),
}

impl Rat {
    const ZERO: Rat = Rat::Small(0, 1);

    fn from_big(r: BigRational) -> Rat {
        match small(&r) {
            Some((n, d)) => Rat::Small(n, d),
            None => Rat::Big(r),
        }
    }

    fn q(&self) -> Option<Q> {
        match self {
            Rat::Small(n, d) => Some((*n, *d)),
            Rat::Big(_) => None,
        }
    }

    fn big(&self) -> Cow<'_, BigRational> {
        match self {
            Rat::Small(n, d) => Cow::Owned(big((*n, *d))),
            Rat::Big(r) => Cow::Borrowed(r),
        }
    }

    fn is_zero(&self) -> bool {
        matches!(self, Rat::Small(0, _))
    }

    fn is_one(&self) -> bool {
        matches!(self, Rat::Small(1, 1))
    }

    fn signum(&self) -> i8 {
        match self {
            Rat::Small(n, _) => n.signum() as i8,
            Rat::Big(r) => sign_rat(r),
        }
    }

    fn add(&self, o: &Rat) -> Rat {
        if let Some(z) = self.q().zip(o.q()).and_then(|(x, y)| q_add(x, y)) {
            return Rat::Small(z.0, z.1);
        }
        Rat::from_big(self.big().as_ref() + o.big().as_ref())
    }

    fn sub(&self, o: &Rat) -> Rat {
        self.add(&o.neg())
    }

    fn mul(&self, o: &Rat) -> Rat {
        if let Some(z) = self.q().zip(o.q()).and_then(|(x, y)| q_mul(x, y)) {
            return Rat::Small(z.0, z.1);
        }
        Rat::from_big(self.big().as_ref() * o.big().as_ref())
    }

    fn neg(&self) -> Rat {
        match self {
            Rat::Small(n, d) => Rat::Small(-n, *d),
            Rat::Big(r) => Rat::from_big(-r),
        }
    }

    /// Reciprocal of a nonzero value.
    fn recip(&self) -> Rat {
        match self {
            Rat::Small(n, d) => {
                let (n, d) = q_inv((*n, *d));
                Rat::Small(n, d)
            }
            Rat::Big(r) => Rat::from_big(r.recip()),
        }
    }

    fn to_f64(&self) -> f64 {
        const EXACT: i128 = 1 << 53;
        match self {
            Rat::Small(n, d) if n.abs() < EXACT && *d < EXACT => *n as f64 / *d as f64,
            _ => self.big().to_f64().unwrap_or(f64::NAN),
        }
    }
}

impl PartialOrd for Rat {
    fn partial_cmp(&self, o: &Rat) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl Ord for Rat {
    fn cmp(&self, o: &Rat) -> Ordering {
        if let Some(c) = self.q().zip(o.q()).and_then(|(x, y)| q_cmp(x, y)) {
            return c;
        }
        self.big().cmp(&o.big())
    }
}

impl fmt::Display for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rat::Small(n, 1) => write!(f, "{n}"),
            Rat::Small(n, d) => write!(f, "{n}/{d}"),
            Rat::Big(r) => f.write_str(&fmt_rat(r)),
        }
    }
}

/// Element `a + b*sqrt(d)` of Q or of a real quadratic field.
///
/// Pure rationals are stored with `d = 1` so they combine with any field.
/// Arithmetic operators panic when two irrational operands come from
/// different fields; the `checked_*` methods and [`scalar_cmp`] report it.
#[derive(Clone, Debug)]
pub struct Scalar {
    a: Rat,
    b: Rat,
    d: u64,
}

fn rat(n: i64, m: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(m))
}

impl Scalar {
    fn make(a: Rat, b: Rat, d: u64) -> Scalar {
        if b.is_zero() {
            Scalar { a, b, d: 1 }
        } else if d == 1 {
            Scalar { a: a.add(&b), b: Rat::ZERO, d: 1 }
        } else {
            Scalar { a, b, d }
        }
    }

    fn rational(a: Rat) -> Scalar {
        Scalar { a, b: Rat::ZERO, d: 1 }
    }

    pub fn zero() -> Scalar {
        Scalar::rational(Rat::ZERO)
    }

    pub fn one() -> Scalar {
        Scalar::from_int(1)
    }

    pub fn from_int(n: i64) -> Scalar {
        Scalar::rational(Rat::Small(n as i128, 1))
    }

    pub fn from_ratio(n: i64, m: i64) -> Scalar {
        Scalar::from_rational(rat(n, m))
    }

    pub fn from_rational(a: BigRational) -> Scalar {
        Scalar::rational(Rat::from_big(a))
    }

    /// `a + b*sqrt(d)`; `d` must be squarefree.
    pub fn new(a: BigRational, b: BigRational, d: u64) -> Result<Scalar, NumericError> {
        if !is_squarefree(d) {
            return Err(NumericError::NotSquarefree(d));
        }
        Ok(Scalar::make(Rat::from_big(a), Rat::from_big(b), d))
    }

    /// `sqrt(d)` itself.
    pub fn sqrt_of(d: u64) -> Result<Scalar, NumericError> {
        Scalar::new(BigRational::zero(), BigRational::one(), d)
    }

    pub fn rational_part(&self) -> BigRational {
        self.a.big().into_owned()
    }

    pub fn surd_part(&self) -> BigRational {
        self.b.big().into_owned()
    }

    /// Field context: 1 for pure rationals.
    pub fn field(&self) -> u64 {
        self.d
    }

    pub fn is_rational(&self) -> bool {
        self.b.is_zero()
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.b.is_zero() && self.a.is_one()
    }

    fn join(&self, other: &Scalar) -> Result<u64, NumericError> {
        match (self.d, other.d) {
            (1, e) | (e, 1) => Ok(e),
            (x, y) if x == y => Ok(x),
            (x, y) => Err(NumericError::MixedContext(x, y)),
        }
    }

    pub fn checked_add(&self, o: &Scalar) -> Result<Scalar, NumericError> {
        let d = self.join(o)?;
        Ok(Scalar::make(self.a.add(&o.a), self.b.add(&o.b), d))
    }

    pub fn checked_sub(&self, o: &Scalar) -> Result<Scalar, NumericError> {
        let d = self.join(o)?;
        Ok(Scalar::make(self.a.sub(&o.a), self.b.sub(&o.b), d))
    }

    pub fn checked_mul(&self, o: &Scalar) -> Result<Scalar, NumericError> {
        let d = self.join(o)?;
        if self.b.is_zero() && o.b.is_zero() {
            return Ok(Scalar::rational(self.a.mul(&o.a)));
        }
        let dd = Rat::Small(d as i128, 1);
        let a = self.a.mul(&o.a).add(&self.b.mul(&o.b).mul(&dd));
        let b = self.a.mul(&o.b).add(&self.b.mul(&o.a));
        Ok(Scalar::make(a, b, d))
    }

    pub fn checked_div(&self, o: &Scalar) -> Result<Scalar, NumericError> {
        let inv = o.checked_recip()?;
        self.checked_mul(&inv)
    }

    pub fn checked_recip(&self) -> Result<Scalar, NumericError> {
        if self.is_zero() {
            return Err(NumericError::DivisionByZero);
        }
        if self.b.is_zero() {
            return Ok(Scalar::rational(self.a.recip()));
        }
        let inv = self.rat_norm().recip();
        Ok(Scalar::make(self.a.mul(&inv), self.b.mul(&inv).neg(), self.d))
    }

    fn rat_norm(&self) -> Rat {
        let dd = Rat::Small(self.d as i128, 1);
        self.a.mul(&self.a).sub(&self.b.mul(&self.b).mul(&dd))
    }

    /// `a^2 - d*b^2`, the field norm.
    pub fn norm(&self) -> BigRational {
        self.rat_norm().big().into_owned()
    }

    pub fn conj(&self) -> Scalar {
        Scalar::make(self.a.clone(), self.b.neg(), self.d)
    }

    pub fn recip(&self) -> Scalar {
        self.checked_recip().expect("reciprocal of zero")
    }

    pub fn signum(&self) -> i8 {
        sign_of(&self.a, &self.b, self.d)
    }

    pub fn is_positive(&self) -> bool {
        self.signum() > 0
    }

    pub fn is_negative(&self) -> bool {
        self.signum() < 0
    }

    pub fn abs(&self) -> Scalar {
        if self.is_negative() {
            -self
        } else {
            self.clone()
        }
    }

    pub fn pow(&self, mut e: u32) -> Scalar {
        if e == 1 {
            return self.clone();
        }
        let mut base = self.clone();
        let mut acc = Scalar::one();
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    pub fn min(self, o: Scalar) -> Scalar {
        if o < self {
            o
        } else {
            self
        }
    }

    pub fn max(self, o: Scalar) -> Scalar {
        if o > self {
            o
        } else {
            self
        }
    }

    /// Nearest double, computed from a high-precision decimal expansion so that
    /// cancellation between the two parts does not lose digits.
    pub fn to_f64(&self) -> f64 {
        if self.b.is_zero() {
            return self.a.to_f64();
        }
        self.to_sci(17).parse::<f64>().unwrap_or(f64::NAN)
    }

    /// Scientific rendering `d.ddd...e<exp>` with `sig` significant digits.
    fn to_sci(&self, sig: usize) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let neg = self.is_negative();
        let mut prec: u32 = 30;
        loop {
            let scale = BigInt::from(10u32).pow(prec);
            let approx = self.scaled_floor(&scale);
            let digits = approx.abs().to_string();
            if approx.is_zero() || digits.len() < sig + 4 {
                prec += 30;
                continue;
            }
            // value ~ approx * 10^-prec
            let exp = digits.len() as i64 - 1 - prec as i64;
            let head: Vec<u8> = digits.bytes().map(|c| c - b'0').collect();
            let mut kept: Vec<u8> = head[..sig].to_vec();
            if head[sig] >= 5 {
                let mut i = sig;
                loop {
                    if i == 0 {
                        kept.insert(0, 1);
                        kept.pop();
                        return render_sci(neg, &kept, exp + 1);
                    }
                    i -= 1;
                    if kept[i] == 9 {
                        kept[i] = 0;
                    } else {
                        kept[i] += 1;
                        break;
                    }
                }
            }
            return render_sci(neg, &kept, exp);
        }
    }

    /// `floor(|x| * scale)` with the sign of `x`, approximately (error below 2).
    fn scaled_floor(&self, scale: &BigInt) -> BigInt {
        let a = self.a.big().as_ref() * BigRational::from_integer(scale.clone());
        let a_int = a.to_integer();
        if self.b.is_zero() {
            return a_int;
        }
        let root = (BigInt::from(self.d) * scale * scale).sqrt();
        let b = self.b.big().as_ref() * BigRational::from_integer(root);
        a_int + b.to_integer()
    }

    /// Decimal rendering with `sig` significant digits.
    pub fn to_decimal(&self, sig: usize) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        sci_to_plain(&self.to_sci(sig))
    }
}

fn render_sci(neg: bool, digits: &[u8], exp: i64) -> String {
    let mut s = String::new();
    if neg {
        s.push('-');
    }
    s.push((b'0' + digits[0]) as char);
    if digits.len() > 1 {
        s.push('.');
        for d in &digits[1..] {
            s.push((b'0' + d) as char);
        }
    }
    s.push('e');
    s.push_str(&exp.to_string());
    s
}

fn sci_to_plain(sci: &str) -> String {
    let (mant, exp) = sci.split_once('e').unwrap_or((sci, "0"));
    let exp: i64 = exp.parse().unwrap_or(0);
    if !(-7..=15).contains(&exp) {
        return sci.to_string();
    }
    let neg = mant.starts_with('-');
    let digits: String = mant.chars().filter(|c| c.is_ascii_digit()).collect();
    let point = 1 + exp;
    let mut out = String::new();
    if neg {
        out.push('-');
    }
    if point <= 0 {
        out.push_str("0.");
        for _ in 0..(-point) {
            out.push('0');
        }
        out.push_str(&digits);
    } else if point as usize >= digits.len() {
        out.push_str(&digits);
        for _ in digits.len()..point as usize {
            out.push('0');
        }
    } else {
        out.push_str(&digits[..point as usize]);
        out.push('.');
        out.push_str(&digits[point as usize..]);
    }
    out
}

/// Formats a double with `sig` significant digits in the same style as
/// [`Scalar::to_decimal`].
pub fn format_f64(x: f64, sig: usize) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return if x > 0.0 { "inf".into() } else if x < 0.0 { "-inf".into() } else { "nan".into() };
    }
    let sci = format!("{:.*e}", sig - 1, x);
    sci_to_plain(&sci)
}

fn sign_rat(x: &BigRational) -> i8 {
    if x.is_positive() {
        1
    } else if x.is_negative() {
        -1
    } else {
        0
    }
}

/// Sign of `a + b*sqrt(d)` from the signs of `a`, `b` and `a^2` against `b^2 d`.
fn sign_of(a: &Rat, b: &Rat, d: u64) -> i8 {
    if let Some(s) = a.q().zip(b.q()).and_then(|(x, y)| q_sign(x, y, d)) {
        return s;
    }
    let (sa, sb) = (a.signum(), b.signum());
    if sb == 0 {
        return sa;
    }
    if sa == 0 || sa == sb {
        return sb;
    }
    let (a, b) = (a.big(), b.big());
    // a = p/q, b = r/s: compare p^2 s^2 with d r^2 q^2 without normalizing
    let lhs = a.numer() * b.denom();
    let rhs = b.numer() * a.denom();
    match (&lhs * &lhs).cmp(&(&rhs * &rhs * BigInt::from(d))) {
        Ordering::Greater => sa,
        Ordering::Less => sb,
        Ordering::Equal => 0,
    }
}

/// Reduced fraction `(numerator, denominator)` with a positive denominator,
/// the fast path for coefficients that fit in machine words.
type Q = (i128, i128);

fn small(x: &BigRational) -> Option<Q> {
    let n = x.numer().to_i128()?;
    let d = x.denom().to_i128()?;
    (n != i128::MIN && d > 0).then_some((n, d))
}

fn big(q: Q) -> BigRational {
    BigRational::new_raw(BigInt::from(q.0), BigInt::from(q.1))
}

fn gcd_i128(a: i128, b: i128) -> i128 {
    let (x, y) = (a.unsigned_abs(), b.unsigned_abs());
    match (u64::try_from(x), u64::try_from(y)) {
        (Ok(x), Ok(y)) => binary_gcd_u64(x, y) as i128,
        _ => binary_gcd_u128(x, y) as i128,
    }
}

fn binary_gcd_u64(mut x: u64, mut y: u64) -> u64 {
    if x == 0 || y == 0 {
        return x | y;
    }
    let shift = (x | y).trailing_zeros();
    x >>= x.trailing_zeros();
    while y != 0 {
        y >>= y.trailing_zeros();
        if x > y {
            std::mem::swap(&mut x, &mut y);
        }
        y -= x;
    }
    x << shift
}

fn binary_gcd_u128(mut x: u128, mut y: u128) -> u128 {
    if x == 0 || y == 0 {
        return x | y;
    }
    let shift = (x | y).trailing_zeros();
    x >>= x.trailing_zeros();
    while y != 0 {
        y >>= y.trailing_zeros();
        if x > y {
            std::mem::swap(&mut x, &mut y);
        }
        y -= x;
    }
    x << shift
}

/// `x / g` for `g > 0` dividing `x`, in 64 bits when the operands fit.
fn div_by(x: i128, g: i128) -> i128 {
    if g == 1 {
        return x;
    }
    match (i64::try_from(x), i64::try_from(g)) {
        (Ok(x), Ok(g)) => (x / g) as i128,
        _ => x / g,
    }
}

fn q_reduce(n: i128, d: i128) -> Q {
    if n == 0 {
        return (0, 1);
    }
    let g = gcd_i128(n, d);
    (div_by(n, g), div_by(d, g))
}

fn q_add(x: Q, y: Q) -> Option<Q> {
    let g = gcd_i128(x.1, y.1);
    let (xd, yd) = (div_by(x.1, g), div_by(y.1, g));
    let n = x.0.checked_mul(yd)?.checked_add(y.0.checked_mul(xd)?)?;
    let d = xd.checked_mul(y.1)?;
    (n != i128::MIN).then(|| q_reduce(n, d))
}

fn q_mul(x: Q, y: Q) -> Option<Q> {
    if x.0 == 0 || y.0 == 0 {
        return Some((0, 1));
    }
    let (g1, g2) = (gcd_i128(x.0, y.1), gcd_i128(y.0, x.1));
    let n = div_by(x.0, g1).checked_mul(div_by(y.0, g2))?;
    let d = div_by(x.1, g2).checked_mul(div_by(y.1, g1))?;
    (n != i128::MIN).then_some((n, d))
}

/// Inverse of a nonzero fraction.
fn q_inv(x: Q) -> Q {
    if x.0 < 0 {
        (-x.1, -x.0)
    } else {
        (x.1, x.0)
    }
}

fn q_cmp(x: Q, y: Q) -> Option<Ordering> {
    Some(x.0.checked_mul(y.1)?.cmp(&y.0.checked_mul(x.1)?))
}

/// Sign of `a + b*sqrt(d)` on the fast path.
fn q_sign(a: Q, b: Q, d: u64) -> Option<i8> {
    let (sa, sb) = (a.0.signum() as i8, b.0.signum() as i8);
    if sb == 0 {
        return Some(sa);
    }
    if sa == 0 || sa == sb {
        return Some(sb);
    }
    let b2d = q_mul(q_mul(b, b)?, (d as i128, 1))?;
    Some(match q_cmp(q_mul(a, a)?, b2d)? {
        Ordering::Greater => sa,
        Ordering::Less => sb,
        Ordering::Equal => 0,
    })
}

/// Exact comparison; errors on operands from different quadratic fields.
pub fn scalar_cmp(x: &Scalar, y: &Scalar) -> Result<Ordering, NumericError> {
    if x.b.is_zero() && y.b.is_zero() {
        return Ok(x.a.cmp(&y.a));
    }
    let diff = x.checked_sub(y)?;
    Ok(diff.signum().cmp(&0))
}

impl PartialEq for Scalar {
    fn eq(&self, other: &Scalar) -> bool {
        self.a == other.a && self.b == other.b && (self.b.is_zero() || self.d == other.d)
    }
}

impl Eq for Scalar {}

impl Hash for Scalar {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.a.hash(state);
        self.b.hash(state);
        if !self.b.is_zero() {
            self.d.hash(state);
        }
    }
}

impl PartialOrd for Scalar {
    fn partial_cmp(&self, other: &Scalar) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Panics when the operands live in different quadratic fields.
impl Ord for Scalar {
    fn cmp(&self, other: &Scalar) -> Ordering {
        scalar_cmp(self, other).expect("comparison across field contexts")
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $checked:ident) => {
        impl $tr<&Scalar> for &Scalar {
            type Output = Scalar;
            fn $m(self, o: &Scalar) -> Scalar {
                self.$checked(o).expect(concat!(stringify!($m), " across field contexts"))
            }
        }
        impl $tr<Scalar> for Scalar {
            type Output = Scalar;
            fn $m(self, o: Scalar) -> Scalar {
                (&self).$m(&o)
            }
        }
        impl $tr<&Scalar> for Scalar {
            type Output = Scalar;
            fn $m(self, o: &Scalar) -> Scalar {
                (&self).$m(o)
            }
        }
        impl $tr<Scalar> for &Scalar {
            type Output = Scalar;
            fn $m(self, o: Scalar) -> Scalar {
                self.$m(&o)
            }
        }
    };
}

binop!(Add, add, checked_add);
binop!(Sub, sub, checked_sub);
binop!(Mul, mul, checked_mul);
binop!(Div, div, checked_div);

impl AddAssign<&Scalar> for Scalar {
    fn add_assign(&mut self, o: &Scalar) {
        *self = &*self + o;
    }
}

impl SubAssign<&Scalar> for Scalar {
    fn sub_assign(&mut self, o: &Scalar) {
        *self = &*self - o;
    }
}

impl MulAssign<&Scalar> for Scalar {
    fn mul_assign(&mut self, o: &Scalar) {
        *self = &*self * o;
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar::make(self.a.neg(), self.b.neg(), self.d)
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        -&self
    }
}

impl From<i64> for Scalar {
    fn from(n: i64) -> Scalar {
        Scalar::from_int(n)
    }
}

fn fmt_rat(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Canonical form: `p/q` or `p/q+r/s*sqrt(d)`; integers drop the `/1`.
impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.b.is_zero() {
            return write!(f, "{}", self.a);
        }
        let (sign, b) = if self.b.signum() < 0 { ('-', self.b.neg()) } else { ('+', self.b.clone()) };
        write!(f, "{}{}{}*sqrt({})", self.a, sign, b, self.d)
    }
}

fn parse_rat(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if s.is_empty() {
        return None;
    }
    match s.split_once('/') {
        Some((n, m)) => {
            let n = BigInt::from_str(n.trim()).ok()?;
            let m = BigInt::from_str(m.trim()).ok()?;
            if m.is_zero() {
                return None;
            }
            Some(BigRational::new(n, m))
        }
        None => Some(BigRational::from_integer(BigInt::from_str(s).ok()?)),
    }
}

impl FromStr for Scalar {
    type Err = NumericError;

    fn from_str(src: &str) -> Result<Scalar, NumericError> {
        let err = || NumericError::Parse(src.to_string());
        let s: String = src.chars().filter(|c| !c.is_whitespace()).collect();
        let Some(root_at) = s.find("sqrt(") else {
            return parse_rat(&s).map(Scalar::from_rational).ok_or_else(err);
        };
        let close = s[root_at..].find(')').ok_or_else(err)? + root_at;
        if close + 1 != s.len() {
            return Err(err());
        }
        let d: u64 = s[root_at + 5..close].parse().map_err(|_| err())?;
        let head = &s[..root_at];
        let coeff_src = head.strip_suffix('*').unwrap_or(head);
        // the surd coefficient starts at the last sign that is not an exponent or leading sign
        let split = coeff_src
            .char_indices()
            .filter(|&(i, c)| (c == '+' || c == '-') && i > 0)
            .map(|(i, _)| i)
            .next_back();
        let (a_src, b_src) = match split {
            Some(i) => (&coeff_src[..i], &coeff_src[i..]),
            None => ("", coeff_src),
        };
        let a = if a_src.is_empty() { BigRational::zero() } else { parse_rat(a_src).ok_or_else(err)? };
        let b = match b_src {
            "" | "+" => BigRational::one(),
            "-" => -BigRational::one(),
            other => parse_rat(other.strip_prefix('+').unwrap_or(other)).ok_or_else(err)?,
        };
        Scalar::new(a, b, d)
    }
}

impl serde::Serialize for Scalar {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> serde::Deserialize<'de> for Scalar {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Scalar, D::Error> {
        let raw = String::deserialize(d)?;
        raw.parse().map_err(serde::de::Error::custom)
    }
}

/// The real number `log(ratio) / denom` with `ratio > 0` exact.
///
/// [`LogRatio::half_log`] builds the common `1/2 log r`. Comparison and
/// addition stay exact: comparing `log(r)/n` with `log(s)/m` compares `r^m`
/// with `s^n`, and sums multiply powers of the ratios.
#[derive(Clone, Debug)]
pub struct LogRatio {
    ratio: Scalar,
    denom: u32,
}

fn lcm(a: u32, b: u32) -> u32 {
    a / a.gcd(&b) * b
}

impl LogRatio {
    pub fn zero() -> LogRatio {
        LogRatio { ratio: Scalar::one(), denom: 1 }
    }

    /// `log(ratio) / denom`.
    pub fn new(ratio: Scalar, denom: u32) -> Result<LogRatio, NumericError> {
        if !ratio.is_positive() {
            return Err(NumericError::NonPositive(ratio.to_string()));
        }
        assert!(denom > 0, "log-ratio denominator must be positive");
        Ok(LogRatio { ratio, denom }.reduced())
    }

    /// `1/2 log(ratio)`.
    pub fn half_log(ratio: Scalar) -> Result<LogRatio, NumericError> {
        LogRatio::new(ratio, 2)
    }

    pub fn ratio(&self) -> &Scalar {
        &self.ratio
    }

    pub fn denom(&self) -> u32 {
        self.denom
    }

    /// The positive scalar `e^(2 x)` when it is exact, i.e. when `denom` is 1 or 2.
    pub fn exp_twice(&self) -> Option<Scalar> {
        match self.denom {
            1 => Some(self.ratio.pow(2)),
            2 => Some(self.ratio.clone()),
            _ => None,
        }
    }

    fn reduced(self) -> LogRatio {
        if self.ratio.is_one() {
            return LogRatio::zero();
        }
        self
    }

    pub fn is_zero(&self) -> bool {
        self.ratio.is_one()
    }

    pub fn add(&self, o: &LogRatio) -> LogRatio {
        let l = lcm(self.denom, o.denom);
        let r = self.ratio.pow(l / self.denom) * o.ratio.pow(l / o.denom);
        LogRatio { ratio: r, denom: l }.reduced()
    }

    pub fn neg(&self) -> LogRatio {
        LogRatio { ratio: self.ratio.recip(), denom: self.denom }.reduced()
    }

    pub fn sub(&self, o: &LogRatio) -> LogRatio {
        self.add(&o.neg())
    }

    pub fn abs(&self) -> LogRatio {
        if self.ratio < Scalar::one() {
            self.neg()
        } else {
            self.clone()
        }
    }

    pub fn halve(&self) -> LogRatio {
        LogRatio { ratio: self.ratio.clone(), denom: self.denom * 2 }.reduced()
    }

    pub fn scale(&self, k: u32) -> LogRatio {
        if k == 0 {
            return LogRatio::zero();
        }
        LogRatio { ratio: self.ratio.pow(k), denom: self.denom }.reduced()
    }

    pub fn checked_cmp(&self, o: &LogRatio) -> Result<Ordering, NumericError> {
        let g = self.denom.gcd(&o.denom);
        let lhs = self.ratio.pow(o.denom / g);
        let rhs = o.ratio.pow(self.denom / g);
        scalar_cmp(&lhs, &rhs)
    }

    pub fn max(self, o: LogRatio) -> LogRatio {
        if o > self {
            o
        } else {
            self
        }
    }

    pub fn to_f64(&self) -> f64 {
        let r = self.ratio.to_f64();
        let ln = if (0.5..2.0).contains(&r) {
            (&self.ratio - &Scalar::one()).to_f64().ln_1p()
        } else {
            r.ln()
        };
        ln / self.denom as f64
    }

    pub fn to_decimal(&self) -> String {
        format_f64(self.to_f64(), 12)
    }

    /// Symbolic rendering such as `log 2`, `1/2 log 2` or `1/4 log(3/2)`.
    pub fn render(&self) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let (mut base, mut k) = (self.ratio.clone(), 1u32);
        if base.is_rational() {
            let r = base.rational_part();
            let (p, q) = (r.numer().clone(), r.denom().clone());
            let bits = p.bits().max(q.bits()) as u32;
            for e in (2..=bits.max(2)).rev() {
                let (pr, qr) = (p.nth_root(e), q.nth_root(e));
                if pr.pow(e) == p && qr.pow(e) == q {
                    base = Scalar::from_rational(BigRational::new(pr, qr));
                    k = e;
                    break;
                }
            }
        }
        let mut num = k as i64;
        if base < Scalar::one() {
            base = base.recip();
            num = -num;
        }
        let coeff = BigRational::new(BigInt::from(num), BigInt::from(self.denom as i64));
        let base_txt = if base.is_rational() && base.rational_part().denom().is_one() {
            format!(" {}", base)
        } else {
            format!("({})", base)
        };
        let prefix = if coeff.is_one() {
            String::new()
        } else if coeff == -BigRational::one() {
            "-".to_string()
        } else {
            format!("{} ", fmt_rat(&coeff))
        };
        format!("{}log{}", prefix, base_txt)
    }
}

impl PartialEq for LogRatio {
    fn eq(&self, o: &LogRatio) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}

impl Eq for LogRatio {}

impl PartialOrd for LogRatio {
    fn partial_cmp(&self, o: &LogRatio) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl Ord for LogRatio {
    fn cmp(&self, o: &LogRatio) -> Ordering {
        self.checked_cmp(o).expect("comparison across field contexts")
    }
}

impl fmt::Display for LogRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// Serialized with its symbolic form, exact ratio and exponent, and a
/// 12-digit decimal.
impl serde::Serialize for LogRatio {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = ser.serialize_struct("LogRatio", 4)?;
        st.serialize_field("exact", &self.render())?;
        st.serialize_field("ratio", &self.ratio)?;
        st.serialize_field("denom", &self.denom)?;
        st.serialize_field("decimal", &self.to_decimal())?;
        st.end()
    }
}

/// Element with the largest ratio.
pub fn logratio_max(values: &[LogRatio]) -> Result<LogRatio, NumericError> {
    let mut it = values.iter();
    let mut best = it.next().ok_or(NumericError::Empty)?.clone();
    for v in it {
        if v.checked_cmp(&best)? == Ordering::Greater {
            best = v.clone();
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(x: &str) -> Scalar {
        x.parse().unwrap()
    }

    #[test]
    fn cmp_examples() {
        assert_eq!(scalar_cmp(&s("1+1*sqrt(2)"), &s("2")).unwrap(), Ordering::Greater);
        assert_eq!(scalar_cmp(&s("3/2"), &s("3/2")).unwrap(), Ordering::Equal);
        assert_eq!(scalar_cmp(&s("0-1*sqrt(5)"), &s("0")).unwrap(), Ordering::Less);
    }

    #[test]
    fn mixed_context_is_an_error() {
        let e = scalar_cmp(&s("sqrt(2)"), &s("sqrt(3)")).unwrap_err();
        assert_eq!(e, NumericError::MixedContext(2, 3));
        assert!(s("sqrt(2)").checked_add(&s("1/2")).is_ok());
    }

    #[test]
    fn parse_and_render() {
        for txt in ["1/2+3/4*sqrt(5)", "-1/2-1*sqrt(5)", "7", "-3/8", "0+1*sqrt(2)"] {
            assert_eq!(s(txt).to_string(), txt);
        }
        assert_eq!(s("sqrt(5)"), s("0+1*sqrt(5)"));
        assert_eq!(s("-sqrt(5)"), s("0-1*sqrt(5)"));
        assert_eq!(s("2*sqrt(3)").to_string(), "0+2*sqrt(3)");
        assert!("1+sqrt(4)".parse::<Scalar>().is_err());
        assert!("1/0".parse::<Scalar>().is_err());
    }

    #[test]
    fn field_arithmetic() {
        let phi = s("1/2+1/2*sqrt(5)");
        assert_eq!(&phi * &phi, &phi + &Scalar::one());
        assert_eq!(phi.recip(), &phi - &Scalar::one());
        assert_eq!((phi.clone() - Scalar::one()).to_decimal(12), "0.618033988750");
    }

    #[test]
    fn decimals() {
        assert_eq!(s("1/3").to_decimal(12), "0.333333333333");
        assert_eq!(s("2/3").to_decimal(4), "0.6667");
        assert_eq!(s("-1000").to_decimal(3), "-1000");
        assert_eq!(s("99999/100000").to_decimal(3), "1.00");
        let tiny = s("99/70-1*sqrt(2)");
        assert_eq!(tiny.to_decimal(4), "0.00007215");
        let cancel = s("1+0*sqrt(2)") - s("99/70"); // 1 - 99/70
        assert_eq!(cancel.to_decimal(6), "-0.414286");
    }

    #[test]
    fn logratio_max_examples() {
        let h = |x: &str| LogRatio::half_log(s(x)).unwrap();
        assert_eq!(logratio_max(&[h("2"), h("3")]).unwrap(), h("3"));
        assert!(logratio_max(&[h("1")]).unwrap().is_zero());
        assert_eq!(logratio_max(&[h("1+1*sqrt(2)"), h("2")]).unwrap(), h("1+1*sqrt(2)"));
        assert_eq!(logratio_max(&[]).unwrap_err(), NumericError::Empty);
    }

    #[test]
    fn logratio_algebra() {
        let h = |x: &str| LogRatio::half_log(s(x)).unwrap();
        let delta = h("1").add(&h("4"));
        assert_eq!(delta.render(), "log 2");
        assert_eq!(delta.halve().render(), "1/2 log 2");
        assert_eq!(h("1/4").render(), "-log 2");
        assert_eq!(h("9/4").render(), "log(3/2)");
        assert_eq!(LogRatio::new(s("4"), 4).unwrap(), h("2"));
        assert_eq!(delta.to_decimal(), "0.693147180560");
        assert!(h("2").add(&h("1/2")).is_zero());
    }
}
