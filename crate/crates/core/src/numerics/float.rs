//! Binary floating point numbers with arbitrary mantissa and directed rounding.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Rounding direction for a single operation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Round {
    /// Toward negative infinity.
    Down,
    /// Toward positive infinity.
    Up,
    /// To nearest, ties to even.
    Nearest,
}

impl Round {
    pub fn flip(self) -> Round {
        match self {
            Round::Down => Round::Up,
            Round::Up => Round::Down,
            Round::Nearest => Round::Nearest,
        }
    }
}

/// `man * 2^exp`, kept canonical: the mantissa is odd, or zero with `exp == 0`.
///
/// Canonical form makes structural equality coincide with numeric equality.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Float {
    man: BigInt,
    exp: i64,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum MagDir {
    TowardZero,
    AwayFromZero,
    Nearest,
}

fn mag_dir(negative: bool, rnd: Round) -> MagDir {
    match (rnd, negative) {
        (Round::Nearest, _) => MagDir::Nearest,
        (Round::Up, false) | (Round::Down, true) => MagDir::AwayFromZero,
        _ => MagDir::TowardZero,
    }
}

/// Rounds a magnitude to `prec` bits. Returns the new magnitude, the shift
/// applied and whether the result is inexact.
fn round_mag(mag: &BigUint, prec: u32, dir: MagDir) -> (BigUint, u64, bool) {
    let bits = mag.bits();
    let prec = prec.max(2) as u64;
    if bits <= prec {
        return (mag.clone(), 0, false);
    }
    let shift = bits - prec;
    let q: BigUint = mag >> shift;
    let tz = mag.trailing_zeros().unwrap_or(0);
    let exact = tz >= shift;
    if exact {
        return (q, shift, false);
    }
    let q = match dir {
        MagDir::TowardZero => q,
        MagDir::AwayFromZero => q + 1u32,
        MagDir::Nearest => {
            let half = mag.bit(shift - 1);
            let sticky = tz < shift - 1;
            if half && (sticky || q.bit(0)) {
                q + 1u32
            } else {
                q
            }
        }
    };
    (q, shift, true)
}

impl Float {
    pub fn zero() -> Float {
        Float { man: BigInt::zero(), exp: 0 }
    }

    pub fn one() -> Float {
        Float { man: BigInt::one(), exp: 0 }
    }

    /// Builds `man * 2^exp` exactly.
    pub fn from_parts(man: BigInt, exp: i64) -> Float {
        if man.is_zero() {
            return Float::zero();
        }
        let tz = man.trailing_zeros().unwrap_or(0);
        Float { man: man >> tz, exp: exp + tz as i64 }
    }

    pub fn from_i64(v: i64) -> Float {
        Float::from_parts(BigInt::from(v), 0)
    }

    pub fn from_int(v: &BigInt) -> Float {
        Float::from_parts(v.clone(), 0)
    }

    /// Exact conversion; `None` for NaN and infinities.
    pub fn from_f64(v: f64) -> Option<Float> {
        if !v.is_finite() {
            return None;
        }
        if v == 0.0 {
            return Some(Float::zero());
        }
        let bits = v.to_bits();
        let sign = bits >> 63;
        let e = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (m, e) = if e == 0 { (frac, -1074) } else { (frac | (1u64 << 52), e - 1075) };
        let m = BigInt::from(m);
        Some(Float::from_parts(if sign == 1 { -m } else { m }, e))
    }

    pub fn mantissa(&self) -> &BigInt {
        &self.man
    }

    pub fn exponent(&self) -> i64 {
        self.exp
    }

    pub fn is_zero(&self) -> bool {
        self.man.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.man.is_negative()
    }

    pub fn is_positive(&self) -> bool {
        self.man.is_positive()
    }

    pub fn signum(&self) -> i32 {
        match self.man.sign() {
            Sign::Minus => -1,
            Sign::NoSign => 0,
            Sign::Plus => 1,
        }
    }

    /// Number of mantissa bits.
    pub fn bits(&self) -> u64 {
        self.man.bits()
    }

    /// Exponent of the leading bit: `2^top <= |x| < 2^(top+1)`.
    pub fn top_exp(&self) -> i64 {
        if self.is_zero() {
            i64::MIN / 4
        } else {
            self.exp + self.man.bits() as i64 - 1
        }
    }

    pub fn neg(&self) -> Float {
        Float { man: -&self.man, exp: self.exp }
    }

    pub fn abs(&self) -> Float {
        Float { man: self.man.abs(), exp: self.exp }
    }

    pub fn mul_2exp(&self, k: i64) -> Float {
        if self.is_zero() {
            return Float::zero();
        }
        Float { man: self.man.clone(), exp: self.exp + k }
    }

    /// Rounds to `prec` significant bits.
    pub fn round(&self, prec: u32, rnd: Round) -> Float {
        self.round_inexact(prec, rnd).0
    }

    /// Rounds and reports whether the result differs from the input.
    pub fn round_inexact(&self, prec: u32, rnd: Round) -> (Float, bool) {
        if self.is_zero() {
            return (Float::zero(), false);
        }
        let neg = self.is_negative();
        let (q, shift, inexact) = round_mag(self.man.magnitude(), prec, mag_dir(neg, rnd));
        if !inexact && shift == 0 {
            return (self.clone(), false);
        }
        let man = BigInt::from_biguint(if neg { Sign::Minus } else { Sign::Plus }, q);
        (Float::from_parts(man, self.exp + shift as i64), inexact)
    }

    /// Upper bound on `|self - round(self)|` for a value of this size rounded to `prec` bits.
    pub fn ulp(&self, prec: u32) -> Float {
        if self.is_zero() {
            return Float::zero();
        }
        Float::one().mul_2exp(self.top_exp() - prec.max(2) as i64 + 1)
    }

    pub fn add_exact(&self, other: &Float) -> Float {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        let e = self.exp.min(other.exp);
        let a = &self.man << (self.exp - e) as u64;
        let b = &other.man << (other.exp - e) as u64;
        Float::from_parts(a + b, e)
    }

    pub fn sub_exact(&self, other: &Float) -> Float {
        self.add_exact(&other.neg())
    }

    pub fn mul_exact(&self, other: &Float) -> Float {
        if self.is_zero() || other.is_zero() {
            return Float::zero();
        }
        Float { man: &self.man * &other.man, exp: self.exp + other.exp }
    }

    pub fn add(&self, other: &Float, prec: u32, rnd: Round) -> Float {
        self.add_inexact(other, prec, rnd).0
    }

    pub fn add_inexact(&self, other: &Float, prec: u32, rnd: Round) -> (Float, bool) {
        if self.is_zero() {
            return other.round_inexact(prec, rnd);
        }
        if other.is_zero() {
            return self.round_inexact(prec, rnd);
        }
        let (big, small) = if self.top_exp() >= other.top_exp() { (self, other) } else { (other, self) };
        let limit = big.exp.min(big.top_exp() - prec.max(2) as i64 - 2);
        if small.top_exp() < limit - 1 {
            // Below every rounding boundary: a sticky bit of the same sign
            // rounds identically and avoids a huge alignment shift.
            let sticky = Float { man: BigInt::from(small.signum()), exp: limit - 2 };
            let (r, _) = big.add_exact(&sticky).round_inexact(prec, rnd);
            return (r, true);
        }
        self.add_exact(other).round_inexact(prec, rnd)
    }

    pub fn sub(&self, other: &Float, prec: u32, rnd: Round) -> Float {
        self.add(&other.neg(), prec, rnd)
    }

    pub fn sub_inexact(&self, other: &Float, prec: u32, rnd: Round) -> (Float, bool) {
        self.add_inexact(&other.neg(), prec, rnd)
    }

    pub fn mul(&self, other: &Float, prec: u32, rnd: Round) -> Float {
        self.mul_exact(other).round(prec, rnd)
    }

    pub fn mul_inexact(&self, other: &Float, prec: u32, rnd: Round) -> (Float, bool) {
        self.mul_exact(other).round_inexact(prec, rnd)
    }

    /// Division; panics on a zero divisor.
    pub fn div(&self, other: &Float, prec: u32, rnd: Round) -> Float {
        self.div_inexact(other, prec, rnd).0
    }

    pub fn div_inexact(&self, other: &Float, prec: u32, rnd: Round) -> (Float, bool) {
        assert!(!other.is_zero(), "division by zero");
        if self.is_zero() {
            return (Float::zero(), false);
        }
        let neg = self.is_negative() != other.is_negative();
        let a = self.man.magnitude();
        let b = other.man.magnitude();
        let want = prec.max(2) as i64 + 3;
        let s = (want + b.bits() as i64 - a.bits() as i64).max(0) as u64;
        let (q, r) = (a << s).div_rem(b);
        // One sticky bit below the quotient records inexactness.
        let mut m: BigUint = q << 1u32;
        if !r.is_zero() {
            m += 1u32;
        }
        let exp = self.exp - other.exp - s as i64 - 1;
        let man = BigInt::from_biguint(if neg { Sign::Minus } else { Sign::Plus }, m);
        let (res, inexact) = Float::from_parts(man, exp).round_inexact(prec, rnd);
        (res, inexact || !r.is_zero())
    }

    /// Square root of a nonnegative number.
    pub fn sqrt(&self, prec: u32, rnd: Round) -> Float {
        assert!(!self.is_negative(), "square root of a negative number");
        if self.is_zero() {
            return Float::zero();
        }
        let a = self.man.magnitude();
        let want = 2 * (prec.max(2) as i64 + 3);
        let mut s = (want - a.bits() as i64).max(0);
        if (self.exp - s) % 2 != 0 {
            s += 1;
        }
        let m: BigUint = a << s as u64;
        let r = num_integer::Roots::sqrt(&m);
        let exact = &r * &r == m;
        let mut mm: BigUint = r << 1u32;
        if !exact {
            mm += 1u32;
        }
        let exp = (self.exp - s) / 2 - 1;
        Float::from_parts(BigInt::from_biguint(Sign::Plus, mm), exp).round(prec, rnd)
    }

    /// Multiplication by an integer.
    pub fn mul_int(&self, k: &BigInt, prec: u32, rnd: Round) -> Float {
        Float { man: &self.man * k, exp: self.exp }.round(prec, rnd)
    }

    /// Largest integer not exceeding the value.
    pub fn floor(&self) -> BigInt {
        if self.exp >= 0 {
            &self.man << self.exp as u64
        } else {
            // Arithmetic shift on BigInt rounds toward negative infinity.
            &self.man >> (-self.exp) as u64
        }
    }

    pub fn ceil(&self) -> BigInt {
        -(self.neg().floor())
    }

    pub fn to_i64(&self) -> Option<i64> {
        if self.exp < 0 {
            return None;
        }
        if self.top_exp() > 62 {
            return None;
        }
        (&self.man << self.exp as u64).to_i64()
    }

    /// Nearest `f64` (overflow gives an infinity).
    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let r = self.round(53, Round::Nearest);
        let m = r.man.to_f64().unwrap_or(f64::NAN);
        ldexp(m, r.exp)
    }

    /// `f64` that is `>=` the value, or `+inf`.
    pub fn to_f64_up(&self) -> f64 {
        self.to_f64_dir(Round::Up)
    }

    /// `f64` that is `<=` the value, or `-inf`.
    pub fn to_f64_down(&self) -> f64 {
        self.to_f64_dir(Round::Down)
    }

    fn to_f64_dir(&self, rnd: Round) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let r = self.round(52, rnd);
        let m = r.man.to_f64().expect("52-bit mantissa");
        let v = ldexp(m, r.exp);
        let exact = Float::from_f64(v).is_some_and(|f| f == r);
        if exact {
            return v;
        }
        // Underflow or overflow lost information; step outward.
        match rnd {
            Round::Up => {
                if v == f64::NEG_INFINITY { f64::MIN } else if v.is_infinite() { v } else { v.next_up() }
            }
            _ => {
                if v == f64::INFINITY { f64::MAX } else if v.is_infinite() { v } else { v.next_down() }
            }
        }
    }

    pub fn to_rational(&self) -> BigRational {
        if self.exp >= 0 {
            BigRational::from_integer(&self.man << self.exp as u64)
        } else {
            BigRational::new(self.man.clone(), BigInt::one() << (-self.exp) as u64)
        }
    }

    pub fn from_rational(q: &BigRational, prec: u32, rnd: Round) -> Float {
        Float::from_int(q.numer()).div(&Float::from_int(q.denom()), prec, rnd)
    }

    /// Exact decimal expansion, e.g. `-12.375`.
    pub fn to_decimal_string(&self) -> String {
        if self.exp >= 0 {
            return (&self.man << self.exp as u64).to_string();
        }
        let k = (-self.exp) as u32;
        let scaled = &self.man * num_traits::pow(BigInt::from(5u32), k as usize);
        let neg = scaled.is_negative();
        let digits = scaled.abs().to_string();
        let k = k as usize;
        let (int, frac) = if digits.len() > k {
            (digits[..digits.len() - k].to_string(), digits[digits.len() - k..].to_string())
        } else {
            ("0".to_string(), format!("{}{}", "0".repeat(k - digits.len()), digits))
        };
        let frac = frac.trim_end_matches('0');
        let mut s = String::new();
        if neg {
            s.push('-');
        }
        s.push_str(&int);
        if !frac.is_empty() {
            s.push('.');
            s.push_str(frac);
        }
        s
    }

    /// Parses a decimal as an exact rational.
    pub fn parse_decimal_rational(s: &str) -> Result<BigRational> {
        let bad = || Error::Invalid(format!("not a decimal number: {s:?}"));
        let t = s.trim();
        let (mant, exp10) = match t.find(['e', 'E']) {
            Some(i) => (&t[..i], t[i + 1..].parse::<i64>().map_err(|_| bad())?),
            None => (t, 0),
        };
        let (neg, mant) = match mant.strip_prefix('-') {
            Some(r) => (true, r),
            None => (false, mant.strip_prefix('+').unwrap_or(mant)),
        };
        let (ip, fp) = match mant.find('.') {
            Some(i) => (&mant[..i], &mant[i + 1..]),
            None => (mant, ""),
        };
        if ip.is_empty() && fp.is_empty() {
            return Err(bad());
        }
        if !ip.chars().chain(fp.chars()).all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        if exp10.abs() > 100_000 {
            return Err(bad());
        }
        let digits = format!("{ip}{fp}");
        let mut n: BigInt = digits.parse().unwrap_or_else(|_| BigInt::zero());
        if neg {
            n = -n;
        }
        let e = exp10 - fp.len() as i64;
        let ten = BigInt::from(10u32);
        Ok(if e >= 0 {
            BigRational::from_integer(n * num_traits::pow(ten, e as usize))
        } else {
            BigRational::new(n, num_traits::pow(ten, (-e) as usize))
        })
    }

    /// Parses a decimal that must be an exact dyadic rational.
    pub fn parse_decimal_exact(s: &str) -> Result<Float> {
        let q = Float::parse_decimal_rational(s)?;
        let d = q.denom();
        let tz = d.trailing_zeros().unwrap_or(0);
        if (d >> tz) != BigInt::one() {
            return Err(Error::Invalid(format!("{s:?} is not a dyadic rational")));
        }
        Ok(Float::from_parts(q.numer().clone(), -(tz as i64)))
    }
}

/// `m * 2^e` in `f64`, saturating to zero or infinity.
pub(crate) fn ldexp(m: f64, e: i64) -> f64 {
    let mut v = m;
    let mut e = e.clamp(-3000, 3000) as i32;
    while e > 1000 {
        v *= 2f64.powi(1000);
        e -= 1000;
    }
    while e < -1000 {
        v *= 2f64.powi(-1000);
        e += 1000;
    }
    v * 2f64.powi(e)
}

impl Ord for Float {
    fn cmp(&self, other: &Float) -> Ordering {
        let (sa, sb) = (self.signum(), other.signum());
        if sa != sb {
            return sa.cmp(&sb);
        }
        if sa == 0 {
            return Ordering::Equal;
        }
        let (ta, tb) = (self.top_exp(), other.top_exp());
        let mag = if ta != tb {
            ta.cmp(&tb)
        } else {
            let e = self.exp.min(other.exp);
            let a = self.man.magnitude() << (self.exp - e) as u64;
            let b = other.man.magnitude() << (other.exp - e) as u64;
            a.cmp(&b)
        };
        if sa < 0 { mag.reverse() } else { mag }
    }
}

impl PartialOrd for Float {
    fn partial_cmp(&self, other: &Float) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Float {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Float({:e} = {}*2^{})", self.to_f64(), self.man, self.exp)
    }
}

impl fmt::Display for Float {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = self.to_f64();
        if v.is_finite() {
            write!(f, "{v}")
        } else {
            write!(f, "{}*2^{}", self.man, self.exp)
        }
    }
}

impl From<i64> for Float {
    fn from(v: i64) -> Float {
        Float::from_i64(v)
    }
}
