//! Precision engine: a high-precision real number with an explicit bit
//! precision, plus the arithmetic traits shared by the exact and the
//! floating-point trace paths.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use astro_float::{BigFloat, Consts, Radix, RoundingMode};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

/// Smallest working precision accepted anywhere in the crate.
pub const MIN_PRECISION_BITS: usize = 64;
/// Default working precision.
pub const DEFAULT_PRECISION_BITS: usize = 256;

const RM: RoundingMode = RoundingMode::ToEven;

thread_local! {
    // Cache of ln 2, pi, ... used by astro-float's transcendental routines.
    static CONSTS: RefCell<Consts> =
        RefCell::new(Consts::new().expect("astro-float constants cache"));
}

fn with_consts<R>(f: impl FnOnce(&mut Consts) -> R) -> R {
    CONSTS.with(|cc| f(&mut cc.borrow_mut()))
}

/// Working precision in bits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Precision(usize);

impl Precision {
    pub fn new(bits: usize) -> Result<Self> {
        if bits < MIN_PRECISION_BITS {
            return Err(Error::Validation(format!(
                "precision must be at least {MIN_PRECISION_BITS} bits, got {bits}"
            )));
        }
        Ok(Precision(bits))
    }

    pub fn bits(self) -> usize {
        self.0
    }

    /// Relative tolerance for the Markoff–Fricke relation: 2^-(P-16).
    pub fn triple_tolerance(self) -> Real {
        Real::pow2(-(self.0 as i64 - 16), self)
    }

    /// Relative tolerance for composed transcendental identities: 2^-(P-24).
    pub fn identity_tolerance(self) -> Real {
        Real::pow2(-(self.0 as i64 - 24), self)
    }

    /// Relative tolerance between the trace recursion and the matrix
    /// recursion: 2^-(P-32).
    pub fn oracle_tolerance(self) -> Real {
        Real::pow2(-(self.0 as i64 - 32), self)
    }

    /// Number of significant decimal digits worth printing at this precision.
    pub fn decimal_digits(self) -> usize {
        // floor(P * log10(2))
        (self.0 as f64 * std::f64::consts::LOG10_2).floor() as usize
    }
}

impl Default for Precision {
    fn default() -> Self {
        Precision(DEFAULT_PRECISION_BITS)
    }
}

/// A real number carried at an explicit binary precision.
///
/// Binary operations run at the larger precision of the two operands.
#[derive(Clone)]
pub struct Real {
    value: BigFloat,
    prec: Precision,
}

impl Real {
    fn wrap(value: BigFloat, prec: Precision) -> Self {
        Real { value, prec }
    }

    pub fn from_i64(v: i64, prec: Precision) -> Self {
        Real::wrap(BigFloat::from_i64(v, prec.bits()), prec)
    }

    pub fn zero(prec: Precision) -> Self {
        Real::from_i64(0, prec)
    }

    pub fn one(prec: Precision) -> Self {
        Real::from_i64(1, prec)
    }

    /// Exact conversion for integers up to the working precision; rounds beyond it.
    pub fn from_bigint(v: &BigInt, prec: Precision) -> Self {
        Real::parse(&v.to_string(), prec).expect("integer literal always parses")
    }

    pub fn from_rational(v: &BigRational, prec: Precision) -> Self {
        Real::from_bigint(v.numer(), prec) / Real::from_bigint(v.denom(), prec)
    }

    /// 2^k.
    pub fn pow2(k: i64, prec: Precision) -> Self {
        let two = Real::from_i64(2, prec);
        let r = two.powi(k.unsigned_abs());
        if k < 0 {
            Real::one(prec) / r
        } else {
            r
        }
    }

    /// Parses a decimal literal directly at the target precision.
    pub fn parse(s: &str, prec: Precision) -> Result<Self> {
        let s = s.trim();
        let well_formed = !s.is_empty()
            && s.chars()
                .all(|c| c.is_ascii_digit() || matches!(c, '.' | '-' | '+' | 'e' | 'E'))
            && s.chars().any(|c| c.is_ascii_digit());
        if !well_formed {
            return Err(Error::Parse(format!("not a decimal number: {s:?}")));
        }
        let v = with_consts(|cc| BigFloat::parse(s, Radix::Dec, prec.bits(), RM, cc));
        if v.is_nan() || v.is_inf() {
            return Err(Error::Parse(format!("not a decimal number: {s:?}")));
        }
        Ok(Real::wrap(v, prec))
    }

    pub fn precision(&self) -> Precision {
        self.prec
    }

    /// Same value rounded (or widened) to another precision.
    pub fn with_precision(&self, prec: Precision) -> Self {
        let mut v = self.value.clone();
        v.set_precision(prec.bits(), RM)
            .expect("precision change on a finite value");
        Real::wrap(v, prec)
    }

    /// Integer `v` at this value's precision.
    pub fn lift(&self, v: i64) -> Self {
        Real::from_i64(v, self.prec)
    }

    fn check(value: BigFloat, prec: Precision, what: &str) -> Self {
        debug_assert!(!value.is_nan(), "{what} produced NaN");
        Real::wrap(value, prec)
    }

    pub fn sqrt(&self) -> Self {
        let p = self.prec.bits();
        Real::check(self.value.sqrt(p, RM), self.prec, "sqrt")
    }

    pub fn ln(&self) -> Self {
        let p = self.prec.bits();
        Real::check(with_consts(|cc| self.value.ln(p, RM, cc)), self.prec, "ln")
    }

    /// ln(1 + x), accurate for tiny |x|.
    pub fn ln_1p(&self) -> Self {
        let small = Real::pow2(-16, self.prec);
        if self.abs() >= small {
            return (self.lift(1) + self.clone()).ln();
        }
        // x - x^2/2 + x^3/3 - ...
        let eps = Real::pow2(-(self.prec.bits() as i64 + 8), self.prec) * self.abs();
        let mut sum = self.clone();
        let mut power = self.clone();
        let mut k = 2i64;
        loop {
            power = -(power * self.clone());
            let term = power.clone() / self.lift(k);
            if term.abs() <= eps {
                break;
            }
            sum = sum + term;
            k += 1;
        }
        sum
    }

    pub fn exp(&self) -> Self {
        let p = self.prec.bits();
        Real::check(with_consts(|cc| self.value.exp(p, RM, cc)), self.prec, "exp")
    }

    pub fn sinh(&self) -> Self {
        let p = self.prec.bits();
        Real::check(with_consts(|cc| self.value.sinh(p, RM, cc)), self.prec, "sinh")
    }

    pub fn cosh(&self) -> Self {
        let p = self.prec.bits();
        Real::check(with_consts(|cc| self.value.cosh(p, RM, cc)), self.prec, "cosh")
    }

    pub fn powi(&self, n: u64) -> Self {
        let p = self.prec.bits();
        Real::check(self.value.powi(n as usize, p, RM), self.prec, "powi")
    }

    pub fn abs(&self) -> Self {
        Real::wrap(self.value.abs(), self.prec)
    }

    pub fn is_positive(&self) -> bool {
        self.value.is_positive() && !self.value.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.value.is_negative() && !self.value.is_zero()
    }

    pub fn is_zero(&self) -> bool {
        self.value.is_zero()
    }

    /// Whether the value is an exact integer; returns it if so.
    pub fn to_bigint_exact(&self) -> Option<BigInt> {
        if !self.value.fract().is_zero() {
            return None;
        }
        let s = self.to_plain_integer_string()?;
        s.parse().ok()
    }

    fn to_plain_integer_string(&self) -> Option<String> {
        if self.is_zero() {
            return Some("0".into());
        }
        let (neg, digits, exp) = self.decimal_parts()?;
        let len = digits.len() as i64;
        // value = 0.d1d2... * 10^(exp+1) in our convention d1.d2... * 10^exp
        if exp < 0 || exp + 1 < len && digits[(exp + 1) as usize..].iter().any(|&d| d != b'0') {
            return None;
        }
        let mut out = String::new();
        if neg {
            out.push('-');
        }
        for i in 0..=exp {
            out.push(if i < len { digits[i as usize] as char } else { '0' });
        }
        Some(out)
    }

    /// (negative, mantissa digits, decimal exponent) such that the value is
    /// d1.d2d3... * 10^exponent. None for zero/non-finite values.
    fn decimal_parts(&self) -> Option<(bool, Vec<u8>, i64)> {
        if self.is_zero() || self.value.is_nan() || self.value.is_inf() {
            return None;
        }
        let s = with_consts(|cc| self.value.format(Radix::Dec, RM, cc)).ok()?;
        let (mant, exp) = s.split_once('e').unwrap_or((s.as_str(), "0"));
        let exp: i64 = exp.parse().ok()?;
        let neg = mant.starts_with('-');
        let mant = mant.trim_start_matches(['-', '+']);
        let (int_part, frac_part) = mant.split_once('.').unwrap_or((mant, ""));
        let mut digits: Vec<u8> = int_part.bytes().chain(frac_part.bytes()).collect();
        // normalise to a single nonzero leading digit
        let mut exp = exp + int_part.len() as i64 - 1;
        while digits.len() > 1 && digits[0] == b'0' {
            digits.remove(0);
            exp -= 1;
        }
        Some((neg, digits, exp))
    }

    /// Scientific notation with `sig` significant digits, rounded half-up on
    /// the decimal expansion. Deterministic for a given value.
    pub fn to_sci(&self, sig: usize) -> String {
        let sig = sig.max(1);
        let Some((neg, mut digits, mut exp)) = self.decimal_parts() else {
            return if self.value.is_nan() { "NaN".into() } else { "0".into() };
        };
        if digits.len() > sig {
            let round_up = digits[sig] >= b'5';
            digits.truncate(sig);
            if round_up {
                let mut i = sig;
                loop {
                    if i == 0 {
                        digits.insert(0, b'1');
                        digits.truncate(sig);
                        exp += 1;
                        break;
                    }
                    i -= 1;
                    if digits[i] == b'9' {
                        digits[i] = b'0';
                    } else {
                        digits[i] += 1;
                        break;
                    }
                }
            }
        }
        while digits.len() > 1 && *digits.last().unwrap() == b'0' {
            digits.pop();
        }
        let mut out = String::new();
        if neg {
            out.push('-');
        }
        out.push(digits[0] as char);
        if digits.len() > 1 {
            out.push('.');
            out.extend(digits[1..].iter().map(|&d| d as char));
        }
        out.push_str(&format!("e{exp}"));
        out
    }

    /// Full-precision decimal rendering.
    pub fn to_decimal_string(&self) -> String {
        self.to_sci(self.prec.decimal_digits())
    }

    pub fn to_f64(&self) -> f64 {
        self.to_sci(20).parse().unwrap_or(f64::NAN)
    }

    pub fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    pub fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }
}

impl fmt::Debug for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Real({})", self.to_sci(30))
    }
}

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_decimal_string())
    }
}

impl PartialEq for Real {
    fn eq(&self, other: &Self) -> bool {
        self.value == other.value
    }
}

impl PartialOrd for Real {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.value.partial_cmp(&other.value)
    }
}

macro_rules! real_binop {
    ($tr:ident, $m:ident) => {
        impl $tr<&Real> for &Real {
            type Output = Real;
            fn $m(self, rhs: &Real) -> Real {
                let prec = self.prec.max(rhs.prec);
                Real::wrap(self.value.$m(&rhs.value, prec.bits(), RM), prec)
            }
        }
        impl $tr<Real> for Real {
            type Output = Real;
            fn $m(self, rhs: Real) -> Real {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&Real> for Real {
            type Output = Real;
            fn $m(self, rhs: &Real) -> Real {
                (&self).$m(rhs)
            }
        }
        impl $tr<Real> for &Real {
            type Output = Real;
            fn $m(self, rhs: Real) -> Real {
                self.$m(&rhs)
            }
        }
    };
}

real_binop!(Add, add);
real_binop!(Sub, sub);
real_binop!(Mul, mul);
real_binop!(Div, div);

impl Neg for Real {
    type Output = Real;
    fn neg(self) -> Real {
        Real::wrap(self.value.clone().neg(), self.prec)
    }
}

impl Neg for &Real {
    type Output = Real;
    fn neg(self) -> Real {
        Real::wrap(self.value.clone().neg(), self.prec)
    }
}

/// Values the trace recursion can run over: exact integers, exact
/// rationals, or high-precision reals.
pub trait Ring:
    Clone
    + PartialEq
    + fmt::Debug
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
{
    /// The integer `v` in the same arithmetic context as `self`.
    fn lift(&self, v: i64) -> Self;
    fn to_real(&self, prec: Precision) -> Real;
}

/// A [`Ring`] that also divides; needed by the matrix entry recursion.
pub trait Field: Ring + Div<Output = Self> {}

impl Ring for Real {
    fn lift(&self, v: i64) -> Self {
        Real::lift(self, v)
    }
    fn to_real(&self, prec: Precision) -> Real {
        self.with_precision(prec)
    }
}

impl Field for Real {}

impl Ring for BigInt {
    fn lift(&self, v: i64) -> Self {
        BigInt::from(v)
    }
    fn to_real(&self, prec: Precision) -> Real {
        Real::from_bigint(self, prec)
    }
}

impl Ring for BigRational {
    fn lift(&self, v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }
    fn to_real(&self, prec: Precision) -> Real {
        Real::from_rational(self, prec)
    }
}

impl Field for BigRational {}

/// Relative difference |x - y| / max(|x|, |y|), zero when both vanish.
pub fn relative_difference(x: &Real, y: &Real) -> Real {
    let scale = x.abs().max(y.abs());
    if scale.is_zero() {
        return scale;
    }
    (x - y).abs() / scale
}

/// Neumaier-compensated running sum.
#[derive(Clone, Debug)]
pub struct CompensatedSum {
    sum: Real,
    carry: Real,
}

impl CompensatedSum {
    pub fn new(prec: Precision) -> Self {
        CompensatedSum { sum: Real::zero(prec), carry: Real::zero(prec) }
    }

    pub fn add(&mut self, x: &Real) {
        let t = &self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry = &self.carry + ((&self.sum - &t) + x);
        } else {
            self.carry = &self.carry + ((x - &t) + &self.sum);
        }
        self.sum = t;
    }

    pub fn value(&self) -> Real {
        &self.sum + &self.carry
    }
}

/// Exact rational helper used by the matrix oracle.
pub fn rational(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// True when `r` is an integer.
pub fn is_integral(r: &BigRational) -> bool {
    r.denom().is_one() || r.numer().is_zero()
}
