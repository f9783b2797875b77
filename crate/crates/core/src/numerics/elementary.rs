//! Elementary functions on balls, evaluated by Taylor series with explicit
//! remainder bounds. Each function works at the midpoint and then widens by
//! a bound on the derivative over the input ball.

use num_bigint::BigInt;

use super::ball::{Ball, RBall};
use super::context::PrecisionContext;
use super::float::{Float, Round};
use super::mag::Mag;

/// Number of Taylor terms so that `x^(k+1)/(k+1)! < 2^-prec` for `|x| <= 2^lg`.
fn factorial_terms(lg: f64, prec: u32) -> u32 {
    let target = -(prec as f64) - 4.0;
    let mut log2_term = 0.0;
    let mut k = 0u32;
    loop {
        k += 1;
        log2_term += lg - (k as f64).log2();
        if log2_term < target && k > 2 {
            return k;
        }
        if k > 100_000 {
            return k;
        }
    }
}

/// Upper bound on `|x|^n / n!`.
fn power_over_factorial(x: Mag, n: u32) -> Mag {
    let mut acc = Mag::from_f64(1.0);
    for j in 1..=n {
        acc = acc.mul(x).div(Mag::from_f64(j as f64));
    }
    acc
}

/// `e^r - 1` rounded up, for radius propagation.
pub(crate) fn expm1_upper(r: Mag, ctx: &PrecisionContext) -> Mag {
    if r.is_zero() {
        return Mag::ZERO;
    }
    if r <= Mag::from_f64(1.0) {
        return r.add(r.mul(r));
    }
    if !r.is_finite() {
        return Mag::INF;
    }
    let e = exp_point(&r.to_float(), 64, ctx);
    if !e.is_finite() {
        return Mag::INF;
    }
    Mag::from_float(&e.upper())
}

/// `exp(x)` for an exact point.
fn exp_point(x: &Float, prec: u32, ctx: &PrecisionContext) -> RBall {
    if x.is_zero() {
        return RBall::one();
    }
    let top = x.top_exp();
    if top >= 61 {
        return if x.is_negative() { RBall::new(Float::zero(), Mag::tiny()) } else { RBall::unbounded() };
    }
    if top < -(prec as i64) - 8 {
        return RBall::new(Float::one(), Mag::from_float(x).mul_2exp(1));
    }
    let lift = top.max(0) as u32;
    let squarings = 8u32;
    let wp = prec + 16 + squarings + lift;
    let ln2 = ctx.ln2(wp + lift + 8);
    let k = x.div(&ln2.mid, lift + 16, Round::Nearest).add(&Float::one().mul_2exp(-1), lift + 16, Round::Down).floor();
    let t = RBall::exact(x.clone()).sub(&ln2.mul_int(&k, wp), wp);
    let u = t.mul_2exp(-(squarings as i64));
    let um = u.mag();
    let lg = um.exponent().map(|e| e as f64 + 1.0).unwrap_or(-(wp as f64));
    let terms = factorial_terms(lg, wp);
    let mut acc = RBall::one();
    for j in (1..=terms).rev() {
        acc = RBall::one().add(&acc.mul(&u, wp).div_int(j as i64, wp), wp);
    }
    // Tail of the series is at most twice its first term since |u| < 1/2.
    acc = acc.add_rad(power_over_factorial(um, terms + 1).mul_2exp(1));
    for _ in 0..squarings {
        acc = acc.sqr(wp);
    }
    let shift = match i64::try_from(&k) {
        Ok(s) => s,
        Err(_) => return RBall::unbounded(),
    };
    acc.mul_2exp(shift).round(prec)
}

/// `sin` and `cos` at an exact point.
fn sin_cos_point(x: &Float, prec: u32, ctx: &PrecisionContext) -> (RBall, RBall) {
    if x.is_zero() {
        return (RBall::zero(), RBall::one());
    }
    let top = x.top_exp();
    if top > 1 << 20 {
        let unit = RBall::new(Float::zero(), Mag::from_f64(1.0));
        return (unit.clone(), unit);
    }
    let lift = top.max(0) as u32;
    let wp = prec + 16;
    let (t, quadrant) = if top < -1 {
        (RBall::exact(x.clone()), 0u32)
    } else {
        let pi = ctx.pi(wp + lift + 8);
        let half_pi = pi.mul_2exp(-1);
        let k = x
            .div(&half_pi.mid, lift + 16, Round::Nearest)
            .add(&Float::one().mul_2exp(-1), lift + 16, Round::Down)
            .floor();
        let q = (&k % BigInt::from(4) + BigInt::from(4)) % BigInt::from(4);
        let q: u32 = q.try_into().expect("small");
        (RBall::exact(x.clone()).sub(&half_pi.mul_int(&k, wp + lift + 8), wp), q)
    };
    let tm = t.mag();
    let lg = tm.exponent().map(|e| e as f64 + 1.0).unwrap_or(-(wp as f64));
    let terms = factorial_terms(lg, wp) / 2 + 1;
    let t2 = t.sqr(wp);
    let mut s = RBall::one();
    let mut c = RBall::one();
    for j in (1..=terms as i64).rev() {
        s = RBall::one().sub(&s.mul(&t2, wp).div_int((2 * j) * (2 * j + 1), wp), wp);
        c = RBall::one().sub(&c.mul(&t2, wp).div_int((2 * j - 1) * (2 * j), wp), wp);
    }
    let s = s.mul(&t, wp).add_rad(power_over_factorial(tm, 2 * terms + 3));
    let c = c.add_rad(power_over_factorial(tm, 2 * terms + 2));
    let (s, c) = match quadrant {
        0 => (s, c),
        1 => (c, s.neg()),
        2 => (s.neg(), c.neg()),
        _ => (c.neg(), s),
    };
    (s.round(prec), c.round(prec))
}

/// Arctangent series for `|x| <= 1/8`.
fn atan_series(x: &RBall, wp: u32) -> RBall {
    let xm = x.mag();
    let lg = xm.exponent().map(|e| (e + 1) as f64).unwrap_or(-(wp as f64));
    let terms = if lg >= 0.0 { 10_000 } else { ((wp as f64 + 8.0) / (-2.0 * lg)).ceil() as i64 + 1 };
    let x2 = x.sqr(wp);
    let mut acc = RBall::one().div_int(2 * terms + 1, wp);
    for j in (0..terms).rev() {
        acc = RBall::one().div_int(2 * j + 1, wp).sub(&x2.mul(&acc, wp), wp);
    }
    // Remainder |x|^(2K+3) / ((2K+3)(1 - x^2)) with 1/(1 - x^2) <= 2.
    let rem = xm.powi(2 * terms as u64 + 1).div(Mag::from_f64((2 * terms + 1) as f64)).mul_2exp(1);
    x.mul(&acc, wp).add_rad(rem.mul(xm).mul(xm))
}

fn atan_point(x: &Float, prec: u32, ctx: &PrecisionContext) -> RBall {
    if x.is_zero() {
        return RBall::zero();
    }
    let wp = prec + 16;
    let neg = x.is_negative();
    let ax = x.abs();
    let (mut t, invert) = if ax > Float::one() {
        (RBall::one().div(&RBall::exact(ax), wp), true)
    } else {
        (RBall::exact(ax), false)
    };
    let mut doublings = 0;
    while t.mag() > Mag::from_f64(0.125) {
        // atan x = 2 atan(x / (1 + sqrt(1 + x^2)))
        let d = RBall::one().add(&RBall::one().add(&t.sqr(wp), wp).sqrt(wp), wp);
        t = t.div(&d, wp);
        doublings += 1;
    }
    let mut r = atan_series(&t, wp).mul_2exp(doublings);
    if invert {
        r = ctx.pi(wp).mul_2exp(-1).sub(&r, wp);
    }
    if neg {
        r = r.neg();
    }
    r.round(prec)
}

fn log_point(x: &Float, prec: u32, ctx: &PrecisionContext) -> RBall {
    assert!(x.is_positive());
    let wp = prec + 16;
    let mut e2 = x.top_exp();
    let mut f = x.mul_2exp(-e2);
    if f > Float::from_f64(std::f64::consts::SQRT_2).expect("finite") {
        f = f.mul_2exp(-1);
        e2 += 1;
    }
    let fb = RBall::exact(f);
    let y = fb.sub(&RBall::one(), wp).div(&fb.add(&RBall::one(), wp), wp);
    let ym = y.mag();
    let lg = ym.exponent().map(|e| (e + 1) as f64).unwrap_or(-(wp as f64));
    let terms = if lg >= 0.0 { 10_000 } else { ((wp as f64 + 8.0) / (-2.0 * lg)).ceil() as i64 + 1 };
    let y2 = y.sqr(wp);
    let mut acc = RBall::one().div_int(2 * terms + 1, wp);
    for j in (0..terms).rev() {
        acc = RBall::one().div_int(2 * j + 1, wp).add(&y2.mul(&acc, wp), wp);
    }
    // Remainder 2 |y|^(2K+3) / ((2K+3)(1 - y^2)), 1/(1 - y^2) <= 2 here.
    let rem = ym.powi(2 * terms as u64 + 3).div(Mag::from_f64((2 * terms + 3) as f64)).mul_2exp(2);
    let lf = y.mul(&acc, wp).mul_2exp(1).add_rad(rem);
    let lift = (64 - e2.unsigned_abs().leading_zeros()) + 8;
    let ln2 = ctx.ln2(wp + lift);
    ln2.mul_int(&BigInt::from(e2), wp + lift).add(&lf, wp).round(prec)
}

impl RBall {
    pub fn exp(&self, ctx: &PrecisionContext, prec: u32) -> RBall {
        if !self.is_finite() {
            return RBall::unbounded();
        }
        let e = exp_point(&self.mid, prec, ctx);
        if self.rad.is_zero() || !e.is_finite() {
            return e;
        }
        let grow = expm1_upper(self.rad, ctx);
        e.add_rad(e.mag().mul(grow))
    }

    /// Natural logarithm; unbounded if the ball reaches zero.
    pub fn log(&self, ctx: &PrecisionContext, prec: u32) -> RBall {
        if !self.is_finite() {
            return RBall::unbounded();
        }
        let lo = self.lower();
        if !lo.is_positive() {
            return RBall::unbounded();
        }
        let l = log_point(&self.mid, prec, ctx);
        if self.rad.is_zero() {
            return l;
        }
        l.add_rad(self.rad.div(super::ball::mag_lower(&lo)))
    }

    pub fn sin_cos(&self, ctx: &PrecisionContext, prec: u32) -> (RBall, RBall) {
        if !self.is_finite() {
            let unit = RBall::new(Float::zero(), Mag::from_f64(1.0));
            return (unit.clone(), unit);
        }
        let (s, c) = sin_cos_point(&self.mid, prec, ctx);
        (s.add_rad(self.rad), c.add_rad(self.rad))
    }

    pub fn sin(&self, ctx: &PrecisionContext, prec: u32) -> RBall {
        self.sin_cos(ctx, prec).0
    }

    pub fn cos(&self, ctx: &PrecisionContext, prec: u32) -> RBall {
        self.sin_cos(ctx, prec).1
    }

    pub fn atan(&self, ctx: &PrecisionContext, prec: u32) -> RBall {
        if !self.is_finite() {
            return RBall::new(Float::zero(), Mag::from_f64(1.5707963267948968));
        }
        atan_point(&self.mid, prec, ctx).add_rad(self.rad)
    }

    /// `log(1 + e^x)`, computed without overflow.
    pub fn log1p_exp(&self, ctx: &PrecisionContext, prec: u32) -> RBall {
        if self.is_negative() {
            RBall::one().add(&self.exp(ctx, prec + 8), prec + 8).log(ctx, prec)
        } else {
            let t = self.neg().exp(ctx, prec + 8);
            self.add(&RBall::one().add(&t, prec + 8).log(ctx, prec), prec)
        }
    }
}

impl Ball {
    /// Complex exponential.
    pub fn exp(&self, ctx: &PrecisionContext, prec: u32) -> Ball {
        if !self.is_finite() {
            return Ball::unbounded();
        }
        let wp = prec + 8;
        let ex = exp_point(&self.re, wp, ctx);
        if !ex.is_finite() {
            return Ball::unbounded();
        }
        let (s, c) = sin_cos_point(&self.im, wp, ctx);
        let z = Ball::from_rballs(&ex.mul(&c, wp), &ex.mul(&s, wp)).round(prec);
        if self.rad.is_zero() {
            return z;
        }
        let grow = expm1_upper(self.rad, ctx);
        z.add_rad(ex.mag().mul(grow))
    }

    /// Builds `m e^{i t}`.
    pub fn from_polar(m: &RBall, t: &RBall, ctx: &PrecisionContext, prec: u32) -> Ball {
        let (s, c) = t.sin_cos(ctx, prec + 8);
        Ball::from_rballs(&m.mul(&c, prec), &m.mul(&s, prec))
    }
}

/// `pi` by Machin's formula.
pub(crate) fn compute_pi(prec: u32) -> RBall {
    let wp = prec + 16;
    let a = atan_series(&RBall::one().div_int(5, wp), wp);
    let b = atan_series(&RBall::one().div_int(239, wp), wp);
    a.mul_2exp(4).sub(&b.mul_2exp(2), wp).round(prec)
}

/// `ln 2 = 2 atanh(1/3)`.
pub(crate) fn compute_ln2(prec: u32) -> RBall {
    let wp = prec + 16;
    let y = RBall::one().div_int(3, wp);
    let y2 = RBall::one().div_int(9, wp);
    let terms = (wp as i64) / 3 + 2;
    let mut acc = RBall::one().div_int(2 * terms + 1, wp);
    for j in (0..terms).rev() {
        acc = RBall::one().div_int(2 * j + 1, wp).add(&y2.mul(&acc, wp), wp);
    }
    let rem = Mag::from_f64(1.0 / 3.0).powi(2 * terms as u64 + 3).mul_2exp(2);
    y.mul(&acc, wp).mul_2exp(1).add_rad(rem).round(prec)
}
