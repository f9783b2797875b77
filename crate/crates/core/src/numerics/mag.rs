//! Nonnegative upper bounds with an unbounded exponent.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigUint;
use num_traits::ToPrimitive;

use super::float::{ldexp, Float, Round};

/// Exponents beyond this are clamped; tiny values round up to the minimum.
pub const MAG_EXP_LIMIT: i64 = 1 << 60;

/// An upper bound `m * 2^e` with `m` in `[0.5, 1)`, zero, or infinity.
///
/// Every operation rounds up, so a `Mag` computed from upper bounds is
/// itself an upper bound. Used for ball radii.
#[derive(Clone, Copy, PartialEq)]
pub struct Mag {
    m: f64,
    e: i64,
}

fn frexp(v: f64) -> (f64, i64) {
    debug_assert!(v > 0.0 && v.is_finite());
    let (v, adj) = if v < f64::MIN_POSITIVE { (v * 2f64.powi(64), -64) } else { (v, 0) };
    let bits = v.to_bits();
    let e = ((bits >> 52) & 0x7ff) as i64 - 1022;
    let m = f64::from_bits((bits & !(0x7ffu64 << 52)) | (1022u64 << 52));
    (m, e + adj)
}

impl Mag {
    pub const ZERO: Mag = Mag { m: 0.0, e: 0 };
    pub const INF: Mag = Mag { m: f64::INFINITY, e: 0 };

    fn norm(m: f64, e: i64) -> Mag {
        if m == 0.0 {
            return Mag::ZERO;
        }
        if !m.is_finite() {
            return Mag::INF;
        }
        let (fm, fe) = frexp(m);
        let e = e.saturating_add(fe);
        if e > MAG_EXP_LIMIT {
            Mag::INF
        } else if e < -MAG_EXP_LIMIT {
            Mag { m: 0.5, e: -MAG_EXP_LIMIT }
        } else {
            Mag { m: fm, e }
        }
    }

    /// Smallest positive value, used for deviations far below any scale.
    pub fn tiny() -> Mag {
        Mag { m: 0.5, e: -MAG_EXP_LIMIT }
    }

    /// `|v|` rounded up.
    pub fn from_f64(v: f64) -> Mag {
        assert!(!v.is_nan(), "NaN magnitude");
        Mag::norm(v.abs(), 0)
    }

    pub fn pow2(k: i64) -> Mag {
        Mag::norm(0.5, k.saturating_add(1))
    }

    /// Upper bound on `|x|`.
    pub fn from_float(x: &Float) -> Mag {
        if x.is_zero() {
            return Mag::ZERO;
        }
        let mag: &BigUint = x.mantissa().magnitude();
        let bits = mag.bits();
        if bits <= 52 {
            return Mag::norm(mag.to_f64().expect("small"), x.exponent());
        }
        let shift = bits - 52;
        let top: BigUint = mag >> shift;
        let m = top.to_f64().expect("small") + 1.0;
        Mag::norm(m, x.exponent().saturating_add(shift as i64))
    }

    /// Exact value as a `Float`; panics on infinity.
    pub fn to_float(&self) -> Float {
        assert!(self.is_finite(), "infinite magnitude");
        if self.m == 0.0 {
            return Float::zero();
        }
        Float::from_f64(self.m).expect("finite").mul_2exp(self.e)
    }

    /// Approximate value; saturates to `inf` or `0`.
    pub fn to_f64(&self) -> f64 {
        if !self.is_finite() {
            return f64::INFINITY;
        }
        ldexp(self.m, self.e)
    }

    /// `f64` not below the value.
    pub fn to_f64_up(&self) -> f64 {
        if !self.is_finite() {
            return f64::INFINITY;
        }
        if self.m == 0.0 {
            return 0.0;
        }
        self.to_float().to_f64_up()
    }

    pub fn is_zero(&self) -> bool {
        self.m == 0.0
    }

    pub fn is_finite(&self) -> bool {
        self.m.is_finite()
    }

    /// `floor(log2(value))`; `None` for zero or infinity.
    pub fn exponent(&self) -> Option<i64> {
        if self.is_zero() || !self.is_finite() {
            None
        } else {
            Some(self.e - 1)
        }
    }

    pub fn add(self, o: Mag) -> Mag {
        if self.is_zero() {
            return o;
        }
        if o.is_zero() {
            return self;
        }
        if !self.is_finite() || !o.is_finite() {
            return Mag::INF;
        }
        let (a, b) = if self.e >= o.e { (self, o) } else { (o, self) };
        let d = a.e - b.e;
        let bm = if d > 1000 { 0.0 } else { ldexp(b.m, -d) };
        // A smaller addend either contributes exactly or is absorbed by next_up.
        Mag::norm((a.m + bm).next_up(), a.e)
    }

    pub fn mul(self, o: Mag) -> Mag {
        if self.is_zero() || o.is_zero() {
            return Mag::ZERO;
        }
        if !self.is_finite() || !o.is_finite() {
            return Mag::INF;
        }
        Mag::norm((self.m * o.m).next_up(), self.e.saturating_add(o.e))
    }

    /// `self / o` rounded up; `o` should be a lower bound of the divisor.
    pub fn div(self, o: Mag) -> Mag {
        if self.is_zero() {
            return Mag::ZERO;
        }
        if o.is_zero() || !self.is_finite() {
            return Mag::INF;
        }
        if !o.is_finite() {
            return Mag::ZERO;
        }
        Mag::norm((self.m / o.m).next_up(), self.e.saturating_sub(o.e))
    }

    pub fn mul_f64(self, c: f64) -> Mag {
        self.mul(Mag::from_f64(c))
    }

    pub fn mul_2exp(self, k: i64) -> Mag {
        if self.is_zero() || !self.is_finite() {
            return self;
        }
        Mag::norm(self.m, self.e.saturating_add(k))
    }

    pub fn sqrt(self) -> Mag {
        if self.is_zero() || !self.is_finite() {
            return self;
        }
        let (m, e) = if self.e % 2 == 0 { (self.m, self.e) } else { (self.m * 2.0, self.e - 1) };
        Mag::norm(m.sqrt().next_up(), e / 2)
    }

    pub fn powi(self, n: u64) -> Mag {
        let mut base = self;
        let mut acc = Mag::from_f64(1.0);
        let mut k = n;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(base);
            }
            base = base.mul(base);
            k >>= 1;
        }
        acc
    }

    /// Upper bound on `sqrt(a^2 + b^2)`.
    pub fn hypot(a: Mag, b: Mag) -> Mag {
        a.mul(a).add(b.mul(b)).sqrt()
    }

    pub fn max(self, o: Mag) -> Mag {
        if self >= o { self } else { o }
    }

    pub fn min(self, o: Mag) -> Mag {
        if self <= o { self } else { o }
    }

    /// Upper bound on `|a - b|`, given as a `Float` difference.
    pub fn from_diff(a: &Float, b: &Float) -> Mag {
        Mag::from_float(&a.sub(b, 64, Round::Up).abs()).max(Mag::from_float(&a.sub(b, 64, Round::Down).abs()))
    }
}

impl PartialOrd for Mag {
    fn partial_cmp(&self, o: &Mag) -> Option<Ordering> {
        Some(match (self.is_finite(), o.is_finite()) {
            (false, false) => Ordering::Equal,
            (false, true) => Ordering::Greater,
            (true, false) => Ordering::Less,
            _ => match (self.is_zero(), o.is_zero()) {
                (true, true) => Ordering::Equal,
                (true, false) => Ordering::Less,
                (false, true) => Ordering::Greater,
                _ => self.e.cmp(&o.e).then(self.m.partial_cmp(&o.m).expect("finite")),
            },
        })
    }
}

impl fmt::Debug for Mag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.is_finite() {
            return write!(f, "Mag(inf)");
        }
        let v = self.to_f64();
        if v != 0.0 || self.is_zero() {
            write!(f, "Mag({v:e})")
        } else {
            write!(f, "Mag({}*2^{})", self.m, self.e)
        }
    }
}

impl fmt::Display for Mag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:e}", self.to_f64())
    }
}
