use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::ball::RBall;
use super::context::PrecisionContext;
use crate::error::{Error, Result};

/// The angle `q * pi` for an exact rational `q`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RationalAngle(BigRational);

impl RationalAngle {
    pub fn new(q: BigRational) -> RationalAngle {
        RationalAngle(q)
    }

    /// `num / den * pi`; panics if `den == 0`.
    pub fn from_ratio(num: i64, den: i64) -> RationalAngle {
        RationalAngle(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn zero() -> RationalAngle {
        RationalAngle(BigRational::zero())
    }

    pub fn pi() -> RationalAngle {
        RationalAngle(BigRational::one())
    }

    /// The coefficient of `pi`.
    pub fn q(&self) -> &BigRational {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn add(&self, o: &RationalAngle) -> RationalAngle {
        RationalAngle(&self.0 + &o.0)
    }

    pub fn sub(&self, o: &RationalAngle) -> RationalAngle {
        RationalAngle(&self.0 - &o.0)
    }

    pub fn neg(&self) -> RationalAngle {
        RationalAngle(-&self.0)
    }

    pub fn abs(&self) -> RationalAngle {
        RationalAngle(self.0.abs())
    }

    pub fn mul_int(&self, k: &BigInt) -> RationalAngle {
        RationalAngle(&self.0 * BigRational::from_integer(k.clone()))
    }

    pub fn mul_ratio(&self, r: &BigRational) -> RationalAngle {
        RationalAngle(&self.0 * r)
    }

    pub fn div_int(&self, k: &BigInt) -> RationalAngle {
        RationalAngle(&self.0 / BigRational::from_integer(k.clone()))
    }

    pub fn half(&self) -> RationalAngle {
        self.div_int(&BigInt::from(2))
    }

    /// Representative with `q` in `(-1, 1]`.
    pub fn reduce_signed(&self) -> RationalAngle {
        let p = self.reduce_positive();
        if p.0 > BigRational::one() {
            RationalAngle(p.0 - BigRational::from_integer(BigInt::from(2)))
        } else {
            p
        }
    }

    /// Representative with `q` in `[0, 2)`.
    pub fn reduce_positive(&self) -> RationalAngle {
        let two_d = self.0.denom() * BigInt::from(2);
        let n = self.0.numer().mod_floor(&two_d);
        RationalAngle(BigRational::new(n, self.0.denom().clone()))
    }

    /// Distance to the nearest multiple of `2 pi`, as a multiple of `pi` in `[0, 1]`.
    pub fn dist_to_zero(&self) -> RationalAngle {
        self.reduce_signed().abs()
    }

    /// Distance to the nearest odd multiple of `pi`, in `[0, 1]`.
    pub fn dist_to_pi(&self) -> RationalAngle {
        self.sub(&RationalAngle::pi()).dist_to_zero()
    }

    /// Ball enclosing `q * pi` in radians.
    pub fn to_ball(&self, ctx: &PrecisionContext, prec: u32) -> RBall {
        let q = RBall::from_rational(&self.0, prec + 8);
        q.mul(&ctx.pi(prec + 8), prec)
    }

    pub fn to_f64(&self) -> f64 {
        let f = super::Float::from_rational(&self.0, 60, super::Round::Nearest).to_f64();
        f * std::f64::consts::PI
    }

    /// Parses `p/q` or an integer; the result is `(p/q) * pi`.
    pub fn parse(s: &str) -> Result<RationalAngle> {
        parse_rational(s).map(RationalAngle)
    }
}

/// Parses `p/q`, an integer or a finite decimal into an exact rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n = BigInt::from_str(n.trim()).map_err(|_| Error::Invalid(format!("bad rational {s:?}")))?;
        let d = BigInt::from_str(d.trim()).map_err(|_| Error::Invalid(format!("bad rational {s:?}")))?;
        if d.is_zero() {
            return Err(Error::Invalid(format!("zero denominator in {s:?}")));
        }
        Ok(BigRational::new(n, d))
    } else {
        super::Float::parse_decimal_rational(s)
    }
}

/// Formats a rational as `p/q`, or `p` when the denominator is one.
pub fn format_rational(q: &BigRational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

impl fmt::Debug for RationalAngle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})pi", format_rational(&self.0))
    }
}

impl fmt::Display for RationalAngle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_rational(&self.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reductions() {
        assert_eq!(RationalAngle::from_ratio(5, 3).reduce_signed(), RationalAngle::from_ratio(-1, 3));
        assert_eq!(RationalAngle::from_ratio(-1, 1).reduce_signed(), RationalAngle::pi());
        assert_eq!(RationalAngle::from_ratio(-1, 4).reduce_positive(), RationalAngle::from_ratio(7, 4));
        assert_eq!(RationalAngle::from_ratio(9, 1).reduce_positive(), RationalAngle::pi());
        assert_eq!(RationalAngle::from_ratio(7, 8).dist_to_pi(), RationalAngle::from_ratio(1, 8));
    }

    #[test]
    fn parse_and_format() {
        let a = RationalAngle::parse("-6/8").unwrap();
        assert_eq!(a.to_string(), "-3/4");
        assert!(RationalAngle::parse("1/0").is_err());
        assert_eq!(RationalAngle::parse("0.25").unwrap(), RationalAngle::from_ratio(1, 4));
    }

    #[test]
    fn ball_encloses_value() {
        let ctx = PrecisionContext::new(64).unwrap();
        let b = RationalAngle::from_ratio(1, 3).to_ball(&ctx, 64);
        assert!((b.to_f64() - std::f64::consts::FRAC_PI_3).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn reduction_is_congruent(n in -10_000i64..10_000, d in 1i64..500) {
            let a = RationalAngle::from_ratio(n, d);
            let s = a.reduce_signed();
            let diff = (a.q() - s.q()) / BigRational::from_integer(BigInt::from(2));
            prop_assert!(diff.is_integer());
            prop_assert!(*s.q() > -BigRational::one() && *s.q() <= BigRational::one());
            let p = a.reduce_positive();
            prop_assert!(!p.q().is_negative() && *p.q() < BigRational::from_integer(BigInt::from(2)));
        }
    }
}
