//! The base function `phi0(z) = (erf z - e^{-z^2} + 1) / 2`.
//!
//! Three regimes are selected by the modulus of the input midpoint: a Taylor
//! series about the origin, the power series of `int_0^z e^{-w^2} dw` with
//! enough guard bits to absorb cancellation, and a far-field bound inside
//! the two cones about the real axis where `phi0` tends to 1 or 0.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{mag_lower, AngleRepr, Ball, Float, LogPolar, Mag, PrecisionContext, RBall, Round};

/// Inputs with `|z|` up to this use the Taylor series about 0.
pub const TAYLOR_RADIUS: f64 = 0.125;
/// Inputs beyond this radius use the far-field bound.
pub const FAR_RADIUS: f64 = 12.0;
/// The far-field cones are `beta <= pi/4 - CONE_MARGIN` about each axis.
pub const CONE_MARGIN: f64 = 1.0 / 64.0;

/// `log r` above which the far-field bound is evaluated at this smaller `r`.
const FAR_LOG_CAP: f64 = 1048576.0;
const BOUND_BITS: u32 = 128;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Regime {
    Taylor,
    Midrange,
    FarField,
}

/// Limit of `phi0` along a far-field cone.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Limit {
    Zero,
    One,
}

impl Limit {
    pub fn to_ball(self) -> Ball {
        match self {
            Limit::Zero => Ball::zero(),
            Limit::One => Ball::one(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Phi0Value {
    pub value: Ball,
    pub regime: Regime,
    /// `log |mid z|`; negative infinity at the origin.
    pub input_logmod: f64,
}

/// `phi0(w) = limit + delta` with `|delta| <= exp(log_deviation)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FarFieldForm {
    pub near_limit: Limit,
    pub log_deviation: Float,
}

impl FarFieldForm {
    /// Upper bound on `|phi0(w) - limit|`.
    pub fn deviation_mag(&self, ctx: &PrecisionContext) -> Mag {
        exp_mag(&self.log_deviation, ctx)
    }

    pub fn to_ball(&self, ctx: &PrecisionContext) -> Ball {
        self.near_limit.to_ball().add_rad(self.deviation_mag(ctx))
    }
}

/// `exp(l)` as an upper bound, saturating to the smallest `Mag`.
pub(crate) fn exp_mag(l: &Float, ctx: &PrecisionContext) -> Mag {
    // Below this, e^l < 2^(-2^60 - 1) = Mag::tiny().
    let floor = -((1u64 << 60) as f64 + 2.0) * std::f64::consts::LN_2;
    if l.to_f64() < floor {
        return Mag::tiny();
    }
    let e = RBall::exact(l.clone()).exp(ctx, 64);
    if !e.is_finite() {
        return Mag::INF;
    }
    Mag::from_float(&e.upper())
}

/// Taylor coefficient `c_j` of `phi0` about the origin.
pub fn taylor_coefficient(j: u32, ctx: &PrecisionContext, prec: u32) -> RBall {
    if j == 0 {
        return RBall::zero();
    }
    let k = (j / 2) as i64;
    let mut inv_fact = RBall::one();
    for i in 2..=k {
        inv_fact = inv_fact.div_int(i, prec + 8);
    }
    let sign = if k % 2 == 0 { 1 } else { -1 };
    let c = if j % 2 == 1 {
        ctx.inv_sqrt_pi(prec + 8).mul(&inv_fact, prec + 8).div_int(2 * k + 1, prec + 8)
    } else {
        inv_fact.mul_2exp(-1).neg()
    };
    let c = if sign < 0 { c.neg() } else { c };
    c.round(prec)
}

fn abs2_exact(z: &Ball) -> Float {
    z.re.mul_exact(&z.re).add_exact(&z.im.mul_exact(&z.im))
}

/// Taylor evaluation at an exact point with `|c| <= 1/8`.
fn taylor_point(c: &Ball, ctx: &PrecisionContext, wp: u32) -> Ball {
    if c.re.is_zero() && c.im.is_zero() {
        return Ball::zero();
    }
    let a = c.mid_abs_upper();
    let lg = a.to_f64_up().log2();
    // 2 |z|^(K+1) / (1 - |z|) < 2^-wp
    let k_max = (((wp as f64) + 2.0) / -lg).ceil().max(2.0) as u32;
    let coeffs: Vec<RBall> = (0..=k_max).map(|j| taylor_coefficient(j, ctx, wp)).collect();
    let mut acc = Ball::from_real(&coeffs[k_max as usize]);
    for j in (1..k_max).rev() {
        acc = acc.mul(c, wp).add_real(&coeffs[j as usize], wp);
    }
    let v = acc.mul(c, wp);
    let rem = a.powi(k_max as u64 + 1).mul_f64(2.0 * 8.0 / 7.0);
    v.add_rad(rem)
}

/// `int_0^c e^{-w^2} dw` by its power series, at an exact point.
fn integral_series_point(c: &Ball, n2: &Float, wp: u32) -> Ball {
    let mz2 = c.sqr(wp).neg();
    let mut p = c.clone();
    let mut sum = c.clone();
    let two_n2 = n2.mul_2exp(1);
    let eps = Mag::pow2(-(wp as i64));
    let mut k: i64 = 0;
    loop {
        k += 1;
        p = p.mul(&mz2, wp).div_int(k, wp);
        let t = p.div_int(2 * k + 1, wp);
        sum = sum.add(&t, wp);
        let tm = t.abs_upper();
        if Float::from_i64(k + 1) >= two_n2 && tm <= eps {
            // Successive ratios are at most 1/2 from here on.
            return sum.add_rad(tm);
        }
    }
}

/// Guard bits for the series regime: terms grow to about `e^{|z|^2}`.
fn series_guard(n2: &Float) -> u32 {
    (n2.to_f64() * std::f64::consts::LOG2_E).ceil() as u32 + 42
}

fn midrange_point(c: &Ball, n2: &Float, ctx: &PrecisionContext, wp: u32) -> Ball {
    let i = integral_series_point(c, n2, wp);
    let e = c.sqr(wp).neg().exp(ctx, wp);
    let half = Ball::one().sub(&e, wp).mul_2exp(-1);
    i.mul_real(&ctx.inv_sqrt_pi(wp), wp).add(&half, wp)
}

/// Upper bound on `sup |phi0'|` over the disc `|z - c| <= rho`.
pub fn deriv_bound_on_disc(c: &Ball, rho: Mag, ctx: &PrecisionContext) -> Mag {
    let p = BOUND_BITS;
    let a = c.mid_abs_upper();
    let re2 = c.re.mul_exact(&c.re).sub_exact(&c.im.mul_exact(&c.im));
    // -Re z^2 <= -Re c^2 + 2|c| rho + rho^2
    let ex = re2
        .neg()
        .add(&a.mul(rho).mul_2exp(1).add(rho.mul(rho)).to_float(), p, Round::Up);
    let growth = exp_mag(&ex, ctx);
    let lin = a.add(rho).add(Mag::from_float(&ctx.inv_sqrt_pi(64).upper()));
    growth.mul(lin)
}

fn regime_of(n2: &Float) -> Regime {
    if *n2 <= Float::from_f64(TAYLOR_RADIUS * TAYLOR_RADIUS).expect("finite") {
        Regime::Taylor
    } else if *n2 <= Float::from_f64(FAR_RADIUS * FAR_RADIUS).expect("finite") {
        Regime::Midrange
    } else {
        Regime::FarField
    }
}

/// Upper bound on `pi/4 - CONE_MARGIN`, lowered so that comparisons are safe.
fn cone_limit(ctx: &PrecisionContext) -> Float {
    ctx.pi(BOUND_BITS).mul_2exp(-2).sub(&RBall::from_f64(CONE_MARGIN), BOUND_BITS).lower()
}

/// Certified upper bound on `log |phi0(z) - limit|` for every `z` in the
/// cone with `|z| >= exp(log_r_lower)` and angular distance at most
/// `beta_upper` from the limit's axis.
///
/// Uses `|erfc zeta| <= e^{-Re zeta^2} / (sqrt(pi) Re zeta)` for
/// `Re zeta > 0`, giving `1/2 e^{-r^2 cos 2b} (1/(sqrt(pi) r cos b) + 1)`.
pub fn far_log_deviation(log_r_lower: &Float, beta_upper: &Float, ctx: &PrecisionContext) -> Result<Float> {
    let p = BOUND_BITS;
    if beta_upper.is_negative() || *beta_upper > cone_limit(ctx) {
        return Err(Error::Sector);
    }
    let cap = Float::from_f64(FAR_LOG_CAP).expect("finite");
    // The bound decreases in r, so a smaller r is still valid.
    let lr = if *log_r_lower > cap { cap } else { log_r_lower.clone() };
    let r = RBall::exact(lr.clone()).exp(ctx, p);
    let r_lo = r.lower();
    if !r_lo.is_positive() {
        return Err(Error::Precondition("far-field radius must be positive".into()));
    }
    let r2 = RBall::exact(lr.mul_2exp(1)).exp(ctx, p).lower();
    let b = RBall::exact(beta_upper.clone());
    let cb = b.cos(ctx, p).lower();
    let c2b = b.mul_2exp(1).cos(ctx, p).lower();
    if !cb.is_positive() || !c2b.is_positive() {
        return Err(Error::Sector);
    }
    let den = RBall::exact(ctx.sqrt_pi(p).lower().mul(&r_lo, p, Round::Down).mul(&cb, p, Round::Down));
    let inner = RBall::one().div(&den, p).add(&RBall::one(), p).mul_2exp(-1);
    let log_inner = inner.log(ctx, p).upper();
    let decay = r2.mul(&c2b, p, Round::Down);
    Ok(log_inner.sub(&decay, p, Round::Up))
}

/// Limit axis and an upper bound on the angular distance to it, for an
/// argument given in `[-pi, pi]` up to multiples of `2 pi`.
fn axis_of(arg: &AngleRepr, ctx: &PrecisionContext) -> (Limit, Float) {
    let p = BOUND_BITS;
    match arg {
        AngleRepr::Exact(a) => {
            let a = a.reduce_signed().abs();
            let half = num_rational::BigRational::new(1.into(), 2.into());
            if *a.q() <= half {
                (Limit::One, a.to_ball(ctx, p).upper())
            } else {
                (Limit::Zero, a.dist_to_pi().to_ball(ctx, p).upper())
            }
        }
        AngleRepr::Real(b) => {
            let two_pi = ctx.pi(p + 64).mul_2exp(1);
            let k = b.mid.div(&two_pi.mid, 64, Round::Nearest);
            let k = Float::from_f64(k.to_f64().round()).expect("finite");
            let b = b.sub(&two_pi.mul(&RBall::exact(k), p + 64), p + 64);
            let pi_half = ctx.pi(p).mul_2exp(-1);
            if b.mid.abs() <= pi_half.mid {
                (Limit::One, b.mag().to_float())
            } else {
                let a = b.abs();
                let pi = ctx.pi(p);
                let d1 = pi.upper().sub(&a.lower(), p, Round::Up);
                let d2 = a.upper().sub(&pi.lower(), p, Round::Up);
                (Limit::Zero, d1.max(d2))
            }
        }
    }
}

/// Far-field form of `phi0(w)` for `|w| > FAR_RADIUS` inside a cone.
pub fn phi0_far(w: &LogPolar, ctx: &PrecisionContext) -> Result<FarFieldForm> {
    let ln_r_star = RBall::from_f64(FAR_RADIUS).log(ctx, BOUND_BITS).upper();
    let lo = w.log_mod.lower();
    if lo <= ln_r_star {
        return Err(Error::Precondition("far field needs |w| > 12".into()));
    }
    let (near_limit, beta) = axis_of(&w.arg, ctx);
    let log_deviation = far_log_deviation(&lo, &beta, ctx)?;
    Ok(FarFieldForm { near_limit, log_deviation })
}

fn far_ball(z: &Ball, ctx: &PrecisionContext) -> Result<Ball> {
    let (limit, zz) = if z.re.is_positive() {
        (Limit::One, z.clone())
    } else if z.re.is_negative() {
        (Limit::Zero, z.neg())
    } else {
        return Err(Error::Sector);
    };
    let beta = zz.arg_abs_upper(ctx).ok_or(Error::Sector)?;
    let r_lo = zz.abs_lower();
    if !r_lo.is_positive() {
        return Err(Error::Sector);
    }
    let lr = RBall::exact(r_lo).log(ctx, BOUND_BITS).lower();
    let l = far_log_deviation(&lr, &beta, ctx)?;
    Ok(FarFieldForm { near_limit: limit, log_deviation: l }.to_ball(ctx))
}

/// Certified enclosure of `phi0` over the input ball.
///
/// The evaluation error (excluding propagation of the input radius and the
/// far-field deviation) is kept below `2^-(bits-8) max(1, |phi0|)`; guard
/// bits are raised twice before giving up.
pub fn phi0_eval(z: &Ball, ctx: &PrecisionContext) -> Result<Phi0Value> {
    if !z.is_finite() {
        return Err(Error::Domain("input ball is unbounded".into()));
    }
    let c = Ball::exact(z.re.clone(), z.im.clone());
    let n2 = abs2_exact(&c);
    let regime = regime_of(&n2);
    let input_logmod = if n2.is_zero() { f64::NEG_INFINITY } else { 0.5 * n2.to_f64().ln() };
    if regime == Regime::FarField {
        return Ok(Phi0Value { value: far_ball(z, ctx)?, regime, input_logmod });
    }
    let bits = ctx.bits();
    let mut guard = 16;
    for _ in 0..3 {
        let wp = match regime {
            Regime::Taylor => bits + guard,
            _ => bits + guard + series_guard(&n2),
        };
        let v = match regime {
            Regime::Taylor => taylor_point(&c, ctx, wp),
            _ => midrange_point(&c, &n2, ctx, wp),
        }
        .round(bits + 16);
        let scale = mag_lower(&v.mid_abs_lower()).max(Mag::from_f64(1.0));
        if v.rad <= Mag::pow2(-(bits as i64 - 8)).mul(scale) {
            let prop = if z.rad.is_zero() { Mag::ZERO } else { z.rad.mul(deriv_bound_on_disc(&c, z.rad, ctx)) };
            return Ok(Phi0Value { value: v.add_rad(prop), regime, input_logmod });
        }
        guard *= 4;
    }
    Err(Error::PrecisionExhausted(format!("phi0 at {:?} with {bits} bits", c.to_f64())))
}

/// Enclosure of `phi0'(z) = e^{-z^2} (z + 1/sqrt(pi))`.
pub fn phi0_deriv(z: &Ball, ctx: &PrecisionContext) -> Ball {
    let wp = ctx.bits() + 16;
    let e = z.sqr(wp).neg().exp(ctx, wp);
    e.mul(&z.add_real(&ctx.inv_sqrt_pi(wp), wp), wp).round(ctx.bits() + 8)
}

/// Enclosure of `phi0''(z) = e^{-z^2} (1 - 2z (z + 1/sqrt(pi)))`.
pub fn phi0_second_deriv(z: &Ball, ctx: &PrecisionContext) -> Ball {
    let wp = ctx.bits() + 16;
    let e = z.sqr(wp).neg().exp(ctx, wp);
    let inner = z.mul(&z.add_real(&ctx.inv_sqrt_pi(wp), wp), wp).mul_2exp(1);
    e.mul(&Ball::one().sub(&inner, wp), wp).round(ctx.bits() + 8)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RationalAngle;

    fn ctx() -> PrecisionContext {
        PrecisionContext::new(128).unwrap()
    }

    fn eval(x: f64, y: f64) -> Ball {
        phi0_eval(&Ball::from_f64(x, y), &ctx()).unwrap().value
    }

    #[test]
    fn origin_is_exact_zero() {
        let v = phi0_eval(&Ball::zero(), &ctx()).unwrap();
        assert_eq!(v.regime, Regime::Taylor);
        assert!(v.value.re.is_zero() && v.value.im.is_zero() && v.value.rad.is_zero());
    }

    #[test]
    fn minus_one() {
        // 30-digit reference value.
        let v = eval(-1.0, 0.0);
        let r = Float::parse_decimal_rational("-0.105290117060578595468372202622").unwrap();
        let r = Float::from_rational(&r, 128, Round::Nearest);
        let d = v.re.sub(&r, 128, Round::Nearest).abs();
        assert!(d.to_f64() < 1e-29, "{v:?}");
        assert!(v.rad < Mag::pow2(-110));
    }

    #[test]
    fn plus_and_minus_ten() {
        let one = eval(10.0, 0.0);
        assert!(one.sub(&Ball::one(), 128).abs_upper() < Mag::from_f64(1e-40));
        let zero = eval(-10.0, 0.0);
        assert!(zero.abs_upper() < Mag::from_f64(1e-40));
    }

    #[test]
    fn regimes_agree_at_boundaries() {
        let c = ctx();
        for (x, y) in [(0.125, 0.0), (0.0, -0.125), (12.0, 0.0), (-12.0, 0.0)] {
            let z = Ball::from_f64(x, y);
            let here = phi0_eval(&z, &c).unwrap();
            // Evaluate a perturbed point on the other side and compare via the derivative bound.
            let s = 1.0 + 1e-12;
            let other = phi0_eval(&Ball::from_f64(x * s, y * s), &c).unwrap();
            assert_ne!(here.regime, other.regime);
            let step = Mag::from_f64(12.0 * 1e-12 * 1.01);
            let lip = deriv_bound_on_disc(&z, step, &c).mul(step);
            assert!(here.value.add_rad(lip).overlaps(&other.value), "{x} {y}");
        }
    }

    #[test]
    fn far_field_regime_on_ball() {
        let v = phi0_eval(&Ball::from_f64(20.0, 3.0), &ctx()).unwrap();
        assert_eq!(v.regime, Regime::FarField);
        assert!(v.value.contains(&Float::one(), &Float::zero()));
        assert!(v.value.rad < Mag::from_f64(1e-150));
        assert!(matches!(phi0_eval(&Ball::from_f64(0.0, 20.0), &ctx()), Err(Error::Sector)));
    }

    #[test]
    fn derivative_examples() {
        let c = ctx();
        let d = phi0_deriv(&Ball::zero(), &c);
        assert!(d.contains(&c.inv_sqrt_pi(200).mid, &Float::zero()) || d.overlaps(&Ball::from_real(&c.inv_sqrt_pi(200))));
        assert!((d.to_f64().0 - 0.5641895835477563).abs() < 1e-15);
        let z = Ball::from_real(&c.inv_sqrt_pi(200).neg());
        let d = phi0_deriv(&z, &c);
        assert!(d.abs_upper() < Mag::pow2(-120));
    }

    #[test]
    fn far_form_examples() {
        let c = ctx();
        let w = LogPolar::exact(Float::from_i64(100), RationalAngle::zero());
        let f = phi0_far(&w, &c).unwrap();
        assert_eq!(f.near_limit, Limit::One);
        // exp(-e^200 + small)
        let e200 = RBall::from_i64(200).exp(&c, 64).lower();
        assert!(f.log_deviation < e200.neg().add(&Float::one(), 64, Round::Up));
        assert!(f.deviation_mag(&c) <= Mag::tiny());

        let w = LogPolar::exact(Float::from_i64(3), RationalAngle::from_ratio(1, 1));
        let f = phi0_far(&w, &c).unwrap();
        assert_eq!(f.near_limit, Limit::Zero);
        let r = 3f64.exp();
        let expect = 0.5 * (-r * r).exp() * (1.0 / (std::f64::consts::PI.sqrt() * r) + 1.0);
        let got = f.log_deviation.to_f64();
        assert!((got - expect.ln()).abs() < 1e-9 * expect.ln().abs());

        let w = LogPolar::exact(Float::from_i64(3), RationalAngle::from_ratio(1, 2));
        assert!(matches!(phi0_far(&w, &c), Err(Error::Sector)));
        let w = LogPolar::exact(Float::from_i64(2), RationalAngle::zero());
        assert!(matches!(phi0_far(&w, &c), Err(Error::Precondition(_))));
        let w = LogPolar::new(RBall::from_i64(5), AngleRepr::Real(RBall::from_f64(2.0 * std::f64::consts::PI + 0.1)));
        assert_eq!(phi0_far(&w, &c).unwrap().near_limit, Limit::One);
    }

    #[test]
    fn taylor_coefficients_are_bounded() {
        let c = ctx();
        let expect = [0.0, 0.5641895835477563, 0.5, -0.18806319451591877, -0.25];
        for (j, e) in expect.iter().enumerate() {
            let v = taylor_coefficient(j as u32, &c, 128);
            assert!((v.to_f64() - e).abs() < 1e-15, "{j}");
        }
        for j in 0..60 {
            assert!(taylor_coefficient(j, &c, 128).mag() <= Mag::from_f64(1.0));
        }
    }

    #[test]
    fn ball_input_propagates() {
        let c = ctx();
        let z = Ball::new(Float::from_f64(1.5).unwrap(), Float::from_f64(-0.5).unwrap(), Mag::from_f64(1e-3));
        let v = phi0_eval(&z, &c).unwrap().value;
        for (dx, dy) in [(1e-3, 0.0), (0.0, -1e-3), (-7e-4, 7e-4)] {
            let p = eval(1.5 + dx, -0.5 + dy);
            assert!(v.overlaps(&p));
            assert!(v.contains(&p.re, &p.im));
        }
    }
}
