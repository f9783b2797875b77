//! Real and complex ball arithmetic.
//!
//! A ball is a midpoint plus an upper bound on the distance to the true
//! value. Operations never fail: a division by a ball containing zero, or
//! an overflow, yields an infinite radius, which every certification check
//! treats as "no information".

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;

use super::float::{Float, Round};
use super::mag::Mag;

/// Precision used for bounds extracted from balls.
pub(crate) const BOUND_PREC: u32 = 128;

/// Stand-in for an unbounded endpoint.
fn huge() -> Float {
    Float::one().mul_2exp(1 << 61)
}

pub(crate) fn err(r: &Float, inexact: bool, prec: u32) -> Mag {
    if inexact {
        Mag::from_float(&r.ulp(prec))
    } else {
        Mag::ZERO
    }
}

/// Lower bound as a `Mag` for divisors.
pub(crate) fn mag_lower(x: &Float) -> Mag {
    if x.is_zero() || x.is_negative() {
        return Mag::ZERO;
    }
    let t = x.round(50, Round::Down);
    Mag::from_float(&t)
}

/// A real interval `[mid - rad, mid + rad]`.
#[derive(Clone, PartialEq)]
pub struct RBall {
    pub mid: Float,
    pub rad: Mag,
}

impl RBall {
    pub fn new(mid: Float, rad: Mag) -> RBall {
        RBall { mid, rad }
    }

    pub fn exact(mid: Float) -> RBall {
        RBall { mid, rad: Mag::ZERO }
    }

    pub fn zero() -> RBall {
        RBall::exact(Float::zero())
    }

    pub fn one() -> RBall {
        RBall::exact(Float::one())
    }

    pub fn from_i64(v: i64) -> RBall {
        RBall::exact(Float::from_i64(v))
    }

    pub fn from_int(v: &BigInt) -> RBall {
        RBall::exact(Float::from_int(v))
    }

    /// Exact for finite inputs; panics on NaN or infinity.
    pub fn from_f64(v: f64) -> RBall {
        RBall::exact(Float::from_f64(v).expect("finite"))
    }

    pub fn from_rational(q: &BigRational, prec: u32) -> RBall {
        let (m, inexact) = Float::from_int(q.numer()).div_inexact(&Float::from_int(q.denom()), prec, Round::Nearest);
        let e = err(&m, inexact, prec);
        RBall::new(m, e)
    }

    /// The interval `[lo, hi]`.
    pub fn from_endpoints(lo: &Float, hi: &Float, prec: u32) -> RBall {
        let mid = lo.add(hi, prec, Round::Nearest).mul_2exp(-1);
        let r = Mag::from_diff(hi, &mid).max(Mag::from_diff(&mid, lo));
        RBall::new(mid, r)
    }

    pub fn unbounded() -> RBall {
        RBall::new(Float::zero(), Mag::INF)
    }

    pub fn is_finite(&self) -> bool {
        self.rad.is_finite()
    }

    pub fn lower(&self) -> Float {
        if !self.is_finite() {
            return huge().neg();
        }
        self.mid.sub(&self.rad.to_float(), BOUND_PREC.max(self.mid.bits() as u32), Round::Down)
    }

    pub fn upper(&self) -> Float {
        if !self.is_finite() {
            return huge();
        }
        self.mid.add(&self.rad.to_float(), BOUND_PREC.max(self.mid.bits() as u32), Round::Up)
    }

    /// Upper bound on `|x|` over the ball.
    pub fn mag(&self) -> Mag {
        Mag::from_float(&self.mid).add(self.rad)
    }

    /// Lower bound on `|x|` over the ball (zero if it straddles zero).
    pub fn mag_lower(&self) -> Float {
        if !self.is_finite() {
            return Float::zero();
        }
        let m = self.mid.abs().sub(&self.rad.to_float(), BOUND_PREC, Round::Down);
        if m.is_negative() { Float::zero() } else { m }
    }

    pub fn is_positive(&self) -> bool {
        self.lower().is_positive()
    }

    pub fn is_negative(&self) -> bool {
        self.upper().is_negative()
    }

    pub fn contains(&self, x: &Float) -> bool {
        !self.is_finite() || Mag::from_diff(x, &self.mid) <= self.rad
    }

    /// True when the ball certainly contains `x` (compares exactly).
    pub fn contains_exact(&self, x: &Float) -> bool {
        if !self.is_finite() {
            return true;
        }
        let d = x.sub_exact(&self.mid).abs();
        d <= self.rad.to_float()
    }

    pub fn overlaps(&self, o: &RBall) -> bool {
        if !self.is_finite() || !o.is_finite() {
            return true;
        }
        let d = self.mid.sub_exact(&o.mid).abs();
        d <= self.rad.add(o.rad).to_float()
    }

    pub fn neg(&self) -> RBall {
        RBall::new(self.mid.neg(), self.rad)
    }

    pub fn abs(&self) -> RBall {
        RBall::new(self.mid.abs(), self.rad)
    }

    pub fn mul_2exp(&self, k: i64) -> RBall {
        RBall::new(self.mid.mul_2exp(k), self.rad.mul_2exp(k))
    }

    pub fn add_rad(&self, r: Mag) -> RBall {
        RBall::new(self.mid.clone(), self.rad.add(r))
    }

    pub fn add(&self, o: &RBall, prec: u32) -> RBall {
        let (m, i) = self.mid.add_inexact(&o.mid, prec, Round::Nearest);
        let e = err(&m, i, prec);
        RBall::new(m, self.rad.add(o.rad).add(e))
    }

    pub fn sub(&self, o: &RBall, prec: u32) -> RBall {
        self.add(&o.neg(), prec)
    }

    pub fn mul(&self, o: &RBall, prec: u32) -> RBall {
        let (m, i) = self.mid.mul_inexact(&o.mid, prec, Round::Nearest);
        let e = err(&m, i, prec);
        let r = Mag::from_float(&self.mid)
            .mul(o.rad)
            .add(Mag::from_float(&o.mid).mul(self.rad))
            .add(self.rad.mul(o.rad))
            .add(e);
        RBall::new(m, r)
    }

    pub fn sqr(&self, prec: u32) -> RBall {
        self.mul(self, prec)
    }

    pub fn mul_int(&self, k: &BigInt, prec: u32) -> RBall {
        self.mul(&RBall::from_int(k), prec)
    }

    pub fn div(&self, o: &RBall, prec: u32) -> RBall {
        let ol = o.mag_lower();
        if ol.is_zero() {
            return RBall::unbounded();
        }
        let (m, i) = self.mid.div_inexact(&o.mid, prec, Round::Nearest);
        let e = err(&m, i, prec);
        // |a'/b' - a/b| <= (ra |b| + |a| rb) / (|b| (|b| - rb))
        let bmid = mag_lower(&o.mid.abs());
        let num = self.rad.mul(Mag::from_float(&o.mid)).add(Mag::from_float(&self.mid).mul(o.rad));
        let r = num.div(bmid.mul(mag_lower(&ol)));
        RBall::new(m, r.add(e))
    }

    pub fn div_int(&self, k: i64, prec: u32) -> RBall {
        self.div(&RBall::from_i64(k), prec)
    }

    pub fn recip(&self, prec: u32) -> RBall {
        RBall::one().div(self, prec)
    }

    /// Square root; the part of the ball below zero is ignored.
    pub fn sqrt(&self, prec: u32) -> RBall {
        if !self.is_finite() {
            return RBall::unbounded();
        }
        let lo = self.lower();
        if !lo.is_positive() {
            let hi = self.upper();
            if hi.is_negative() {
                return RBall::unbounded();
            }
            let s = hi.sqrt(BOUND_PREC, Round::Up);
            return RBall::new(s.mul_2exp(-1), Mag::from_float(&s.mul_2exp(-1)));
        }
        let m = self.mid.sqrt(prec, Round::Nearest);
        let i = m.mul_exact(&m) != self.mid;
        let e = err(&m, i, prec);
        let s_lo = mag_lower(&self.mid.sqrt(BOUND_PREC, Round::Down));
        RBall::new(m, self.rad.div(s_lo).add(e))
    }

    pub fn min_upper(&self, o: &RBall) -> Float {
        let (a, b) = (self.upper(), o.upper());
        if a < b { a } else { b }
    }

    pub fn to_f64(&self) -> f64 {
        self.mid.to_f64()
    }

    /// Rounds the midpoint to `prec` bits, absorbing the error.
    pub fn round(&self, prec: u32) -> RBall {
        let (m, i) = self.mid.round_inexact(prec, Round::Nearest);
        let e = err(&m, i, prec);
        RBall::new(m, self.rad.add(e))
    }

    /// Smallest ball containing both.
    pub fn union(&self, o: &RBall, prec: u32) -> RBall {
        if !self.is_finite() || !o.is_finite() {
            return RBall::unbounded();
        }
        let lo = std::cmp::min(self.lower(), o.lower());
        let hi = std::cmp::max(self.upper(), o.upper());
        RBall::from_endpoints(&lo, &hi, prec)
    }
}

impl fmt::Debug for RBall {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:e} +/- {:?}]", self.mid.to_f64(), self.rad)
    }
}

/// A complex disc: midpoint `re + i im` and radius `rad`.
#[derive(Clone, PartialEq)]
pub struct Ball {
    pub re: Float,
    pub im: Float,
    pub rad: Mag,
}

impl Ball {
    pub fn new(re: Float, im: Float, rad: Mag) -> Ball {
        Ball { re, im, rad }
    }

    pub fn exact(re: Float, im: Float) -> Ball {
        Ball::new(re, im, Mag::ZERO)
    }

    pub fn zero() -> Ball {
        Ball::exact(Float::zero(), Float::zero())
    }

    pub fn one() -> Ball {
        Ball::exact(Float::one(), Float::zero())
    }

    pub fn from_f64(re: f64, im: f64) -> Ball {
        Ball::exact(Float::from_f64(re).expect("finite"), Float::from_f64(im).expect("finite"))
    }

    pub fn from_real(x: &RBall) -> Ball {
        Ball::new(x.mid.clone(), Float::zero(), x.rad)
    }

    /// Disc containing the rectangle `re x im`.
    pub fn from_rballs(re: &RBall, im: &RBall) -> Ball {
        Ball::new(re.mid.clone(), im.mid.clone(), Mag::hypot(re.rad, im.rad))
    }

    pub fn unbounded() -> Ball {
        Ball::new(Float::zero(), Float::zero(), Mag::INF)
    }

    pub fn is_finite(&self) -> bool {
        self.rad.is_finite()
    }

    pub fn re_ball(&self) -> RBall {
        RBall::new(self.re.clone(), self.rad)
    }

    pub fn im_ball(&self) -> RBall {
        RBall::new(self.im.clone(), self.rad)
    }

    pub fn mid_abs_upper(&self) -> Mag {
        Mag::hypot(Mag::from_float(&self.re), Mag::from_float(&self.im))
    }

    /// `|mid|` rounded down.
    pub fn mid_abs_lower(&self) -> Float {
        let n = self.re.mul_exact(&self.re).add_exact(&self.im.mul_exact(&self.im));
        n.sqrt(BOUND_PREC, Round::Down)
    }

    /// Upper bound on `|z|` over the disc.
    pub fn abs_upper(&self) -> Mag {
        self.mid_abs_upper().add(self.rad)
    }

    /// Lower bound on `|z|` over the disc.
    pub fn abs_lower(&self) -> Float {
        if !self.is_finite() {
            return Float::zero();
        }
        let m = self.mid_abs_lower().sub(&self.rad.to_float(), BOUND_PREC, Round::Down);
        if m.is_negative() { Float::zero() } else { m }
    }

    /// Interval enclosing `|z|` over the disc.
    pub fn abs(&self, prec: u32) -> RBall {
        if !self.is_finite() {
            return RBall::unbounded();
        }
        let lo = self.abs_lower();
        let hi = self.abs_upper().to_float();
        RBall::from_endpoints(&lo, &hi, prec)
    }

    /// Upper bound on `|Arg z|` over the disc, valid when the disc lies in the
    /// right half plane; returns `None` otherwise.
    pub fn arg_abs_upper(&self, ctx: &super::PrecisionContext) -> Option<Float> {
        if !self.is_finite() || !self.re.is_positive() {
            return None;
        }
        let cl = self.mid_abs_lower();
        let rad = self.rad.to_float();
        if rad >= cl {
            return None;
        }
        let p = BOUND_PREC;
        let ratio = RBall::exact(self.im.abs()).div(&RBall::exact(self.re.clone()), p);
        let center = ratio.atan(ctx, p).upper();
        if rad.is_zero() {
            return Some(center);
        }
        // asin(s) <= s / sqrt(1 - s^2)
        let s = rad.div(&cl, p, Round::Up);
        let one_minus = Float::one().sub(&s.mul(&s, p, Round::Up), p, Round::Down);
        if !one_minus.is_positive() {
            return None;
        }
        let spread = s.div(&one_minus.sqrt(p, Round::Down), p, Round::Up);
        Some(center.add(&spread, p, Round::Up))
    }

    /// Tests whether the point `(x, y)` is within the disc, exactly.
    pub fn contains(&self, x: &Float, y: &Float) -> bool {
        if !self.is_finite() {
            return true;
        }
        let dx = x.sub_exact(&self.re);
        let dy = y.sub_exact(&self.im);
        let d2 = dx.mul_exact(&dx).add_exact(&dy.mul_exact(&dy));
        let r = self.rad.to_float();
        d2 <= r.mul_exact(&r)
    }

    pub fn contains_f64(&self, x: f64, y: f64) -> bool {
        self.contains(&Float::from_f64(x).expect("finite"), &Float::from_f64(y).expect("finite"))
    }

    /// True when the two discs intersect.
    pub fn overlaps(&self, o: &Ball) -> bool {
        if !self.is_finite() || !o.is_finite() {
            return true;
        }
        let dx = self.re.sub_exact(&o.re);
        let dy = self.im.sub_exact(&o.im);
        let d2 = dx.mul_exact(&dx).add_exact(&dy.mul_exact(&dy));
        let r = self.rad.add(o.rad).to_float();
        d2 <= r.mul_exact(&r)
    }

    pub fn neg(&self) -> Ball {
        Ball::new(self.re.neg(), self.im.neg(), self.rad)
    }

    pub fn conj(&self) -> Ball {
        Ball::new(self.re.clone(), self.im.neg(), self.rad)
    }

    pub fn mul_i(&self) -> Ball {
        Ball::new(self.im.neg(), self.re.clone(), self.rad)
    }

    pub fn add_rad(&self, r: Mag) -> Ball {
        Ball::new(self.re.clone(), self.im.clone(), self.rad.add(r))
    }

    pub fn mul_2exp(&self, k: i64) -> Ball {
        Ball::new(self.re.mul_2exp(k), self.im.mul_2exp(k), self.rad.mul_2exp(k))
    }

    pub fn add(&self, o: &Ball, prec: u32) -> Ball {
        let (re, i1) = self.re.add_inexact(&o.re, prec, Round::Nearest);
        let (im, i2) = self.im.add_inexact(&o.im, prec, Round::Nearest);
        let e = err(&re, i1, prec).add(err(&im, i2, prec));
        Ball::new(re, im, self.rad.add(o.rad).add(e))
    }

    pub fn sub(&self, o: &Ball, prec: u32) -> Ball {
        self.add(&o.neg(), prec)
    }

    pub fn add_real(&self, x: &RBall, prec: u32) -> Ball {
        self.add(&Ball::from_real(x), prec)
    }

    pub fn mul(&self, o: &Ball, prec: u32) -> Ball {
        let re = self.re.mul_exact(&o.re).sub_exact(&self.im.mul_exact(&o.im));
        let im = self.re.mul_exact(&o.im).add_exact(&self.im.mul_exact(&o.re));
        let (re, i1) = re.round_inexact(prec, Round::Nearest);
        let (im, i2) = im.round_inexact(prec, Round::Nearest);
        let e = err(&re, i1, prec).add(err(&im, i2, prec));
        let r = self
            .mid_abs_upper()
            .mul(o.rad)
            .add(o.mid_abs_upper().mul(self.rad))
            .add(self.rad.mul(o.rad))
            .add(e);
        Ball::new(re, im, r)
    }

    pub fn sqr(&self, prec: u32) -> Ball {
        self.mul(self, prec)
    }

    pub fn mul_real(&self, x: &RBall, prec: u32) -> Ball {
        let (re, i1) = self.re.mul_inexact(&x.mid, prec, Round::Nearest);
        let (im, i2) = self.im.mul_inexact(&x.mid, prec, Round::Nearest);
        let e = err(&re, i1, prec).add(err(&im, i2, prec));
        let r = self
            .mid_abs_upper()
            .mul(x.rad)
            .add(Mag::from_float(&x.mid).mul(self.rad))
            .add(self.rad.mul(x.rad))
            .add(e);
        Ball::new(re, im, r)
    }

    pub fn div_int(&self, k: i64, prec: u32) -> Ball {
        let d = Float::from_i64(k);
        let (re, i1) = self.re.div_inexact(&d, prec, Round::Nearest);
        let (im, i2) = self.im.div_inexact(&d, prec, Round::Nearest);
        let e = err(&re, i1, prec).add(err(&im, i2, prec));
        let r = self.rad.div(Mag::from_f64(k.unsigned_abs() as f64)).add(e);
        Ball::new(re, im, r)
    }

    pub fn div(&self, o: &Ball, prec: u32) -> Ball {
        let bl = o.abs_lower();
        if bl.is_zero() {
            return Ball::unbounded();
        }
        let n2 = o.re.mul_exact(&o.re).add_exact(&o.im.mul_exact(&o.im));
        let nre = self.re.mul_exact(&o.re).add_exact(&self.im.mul_exact(&o.im));
        let nim = self.im.mul_exact(&o.re).sub_exact(&self.re.mul_exact(&o.im));
        let (re, i1) = nre.div_inexact(&n2, prec, Round::Nearest);
        let (im, i2) = nim.div_inexact(&n2, prec, Round::Nearest);
        let e = err(&re, i1, prec).add(err(&im, i2, prec));
        let num = self.rad.mul(o.mid_abs_upper()).add(self.mid_abs_upper().mul(o.rad));
        let den = mag_lower(&o.mid_abs_lower()).mul(mag_lower(&bl));
        Ball::new(re, im, num.div(den).add(e))
    }

    pub fn pow(&self, n: u64, prec: u32) -> Ball {
        let mut base = self.clone();
        let mut acc = Ball::one();
        let mut k = n;
        let mut first = true;
        while k > 0 {
            if k & 1 == 1 {
                acc = if first { base.clone() } else { acc.mul(&base, prec) };
                first = false;
            }
            k >>= 1;
            if k > 0 {
                base = base.sqr(prec);
            }
        }
        acc
    }

    pub fn round(&self, prec: u32) -> Ball {
        let (re, i1) = self.re.round_inexact(prec, Round::Nearest);
        let (im, i2) = self.im.round_inexact(prec, Round::Nearest);
        let e = err(&re, i1, prec).add(err(&im, i2, prec));
        Ball::new(re, im, self.rad.add(e))
    }

    pub fn to_f64(&self) -> (f64, f64) {
        (self.re.to_f64(), self.im.to_f64())
    }
}

impl fmt::Debug for Ball {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[({:e}, {:e}) +/- {:?}]", self.re.to_f64(), self.im.to_f64(), self.rad)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn rb(v: f64, r: f64) -> RBall {
        RBall::new(Float::from_f64(v).unwrap(), Mag::from_f64(r))
    }

    #[test]
    fn division_by_ball_with_zero_is_unbounded() {
        assert!(!rb(1.0, 0.0).div(&rb(0.1, 0.2), 64).is_finite());
        assert!(!Ball::one().div(&Ball::zero(), 64).is_finite());
    }

    #[test]
    fn third_encloses() {
        let t = RBall::one().div_int(3, 100);
        let x = t.mul(&RBall::from_i64(3), 100);
        assert!(x.contains_exact(&Float::one()));
        assert!(t.rad.to_f64() < 1e-29);
    }

    #[test]
    fn sqrt_of_ball_touching_zero() {
        let s = rb(0.0, 4.0).sqrt(64);
        assert!(s.contains_exact(&Float::zero()));
        assert!(s.contains_exact(&Float::from_i64(2)));
    }

    proptest! {
        #[test]
        fn real_ops_contain_perturbed(a in -10.0f64..10.0, b in -10.0f64..10.0,
                                      ra in 0.0f64..0.1, rb_ in 0.0f64..0.1,
                                      ta in -1.0f64..1.0, tb in -1.0f64..1.0) {
            let (x, y) = (rb(a, ra), rb(b, rb_));
            let (pa, pb) = (a + ta * ra, b + tb * rb_);
            let fa = Float::from_f64(pa).unwrap();
            let fb = Float::from_f64(pb).unwrap();
            prop_assert!(x.add(&y, 30).contains_exact(&fa.add_exact(&fb)));
            prop_assert!(x.mul(&y, 30).contains_exact(&fa.mul_exact(&fb)));
            if b.abs() > 0.2 {
                let q = fa.div(&fb, 300, Round::Nearest);
                let d = x.div(&y, 30);
                prop_assert!(d.add_rad(Mag::pow2(-280)).contains_exact(&q));
            }
        }

        #[test]
        fn complex_ops_contain_perturbed(a in -5.0f64..5.0, b in -5.0f64..5.0,
                                         c in -5.0f64..5.0, d in -5.0f64..5.0,
                                         r in 0.0f64..0.05, n in 0u64..12) {
            let x = Ball::new(Float::from_f64(a).unwrap(), Float::from_f64(b).unwrap(), Mag::from_f64(r));
            let y = Ball::from_f64(c, d);
            let z = Complex64::new(a + r * 0.6, b - r * 0.7);
            let w = Complex64::new(c, d);
            let slack = |v: Complex64| 1e-9 * (1.0 + v.norm());
            let p = x.mul(&y, 40);
            prop_assert!(p.add_rad(Mag::from_f64(slack(z * w))).contains_f64((z * w).re, (z * w).im));
            if w.norm() > 0.5 {
                let q = x.div(&y, 40);
                prop_assert!(q.add_rad(Mag::from_f64(slack(z / w))).contains_f64((z / w).re, (z / w).im));
            }
            let pw = x.pow(n, 60);
            let zn = z.powu(n as u32);
            prop_assert!(pw.add_rad(Mag::from_f64(slack(zn))).contains_f64(zn.re, zn.im));
        }
    }
}
