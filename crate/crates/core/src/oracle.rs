//! Independent reference for `int_0^z e^{-w^2} dw`.
//!
//! Tanh-sinh quadrature of `z int_0^1 e^{-z^2 t^2} dt` in multiprecision
//! ball arithmetic. The error estimate is the difference between successive
//! step halvings, so the result is a reference value, not a certificate.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::numerics::{Ball, Float, Mag, PrecisionContext, RBall};

/// Finest level tried: step `2^-MAX_LEVEL`.
pub const MAX_LEVEL: u32 = 12;
const MIN_LEVEL: u32 = 4;

/// A node at `v = k h` with `v >= 0`, covering `t` and `1 - t`.
struct Node {
    t: RBall,
    s: RBall,
    w: RBall,
    center: bool,
}

/// Node tables for one working precision, extended lazily level by level.
pub struct TanhSinh {
    prec: u32,
    v_max: f64,
    ctx: PrecisionContext,
    levels: Mutex<Vec<Arc<Vec<Node>>>>,
}

impl TanhSinh {
    pub fn new(prec: u32) -> TanhSinh {
        let ctx = PrecisionContext::new(prec.max(64)).expect("valid precision");
        // The weight behaves like e^{v - (pi/2) e^v}; stop once it is below 2^-(prec+20).
        let target = (prec as f64 + 20.0) * std::f64::consts::LN_2;
        let mut v: f64 = 0.0;
        while std::f64::consts::FRAC_PI_2 * v.sinh() * 2.0 - v < target {
            v += 1.0 / 64.0;
        }
        TanhSinh { prec, v_max: v, ctx, levels: Mutex::new(Vec::new()) }
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    fn node(&self, k: u64, level: u32) -> Node {
        let wp = self.prec + 32;
        let c = &self.ctx;
        if k == 0 {
            let w = c.pi(wp).mul_2exp(-2);
            let half = RBall::exact(Float::one().mul_2exp(-1));
            return Node { t: half.clone(), s: half, w, center: true };
        }
        let v = RBall::exact(Float::from_i64(k as i64).mul_2exp(-(level as i64)));
        let ev = v.exp(c, wp);
        let inv = RBall::one().div(&ev, wp);
        let sinh = ev.sub(&inv, wp).mul_2exp(-1);
        let cosh = ev.add(&inv, wp).mul_2exp(-1);
        let u = c.pi(wp).mul_2exp(-1).mul(&sinh, wp);
        let e = u.mul_2exp(1).neg().exp(c, wp);
        let d = RBall::one().add(&e, wp);
        let t = RBall::one().div(&d, wp);
        let s = e.div(&d, wp);
        // dt/dv = pi cosh v * e / (1 + e)^2 with e = exp(-2u)
        let w = c.pi(wp).mul(&cosh, wp).mul(&e, wp).div(&d.sqr(wp), wp);
        Node { t, s, w, center: false }
    }

    fn level(&self, l: u32) -> Arc<Vec<Node>> {
        let mut levels = self.levels.lock().expect("node table lock");
        while levels.len() as u32 <= l {
            let lv = levels.len() as u32;
            let k_max = (self.v_max * (1u64 << lv) as f64).ceil() as u64;
            let nodes: Vec<Node> = if lv == 0 {
                (0..=k_max).map(|k| self.node(k, 0)).collect()
            } else {
                (1..=k_max).step_by(2).map(|k| self.node(k, lv)).collect()
            };
            levels.push(Arc::new(nodes));
        }
        levels[l as usize].clone()
    }

    /// `int_0^1 f(t) dt` with the step-halving error estimate.
    pub fn integrate<F: Fn(&RBall) -> Ball>(&self, f: F, tol: f64) -> Result<(Ball, f64)> {
        let wp = self.prec + 16;
        let mut total = Ball::zero();
        let mut prev: Option<Ball> = None;
        for l in 0..=MAX_LEVEL {
            for n in self.level(l).iter() {
                let mut y = f(&n.t);
                if !n.center {
                    y = y.add(&f(&n.s), wp);
                }
                total = total.add(&y.mul_real(&n.w, wp), wp);
            }
            let s = total.mul_2exp(-(l as i64));
            if let Some(p) = prev {
                let est = s.sub(&p, wp).abs_upper().to_f64_up();
                if l >= MIN_LEVEL && est <= tol {
                    return Ok((s, est));
                }
            }
            prev = Some(s);
        }
        Err(Error::ToleranceUnreachable(format!("no convergence by level {MAX_LEVEL}")))
    }
}

fn table(prec: u32) -> Arc<TanhSinh> {
    static TABLES: OnceLock<Mutex<HashMap<u32, Arc<TanhSinh>>>> = OnceLock::new();
    let m = TABLES.get_or_init(|| Mutex::new(HashMap::new()));
    let mut m = m.lock().expect("table cache lock");
    m.entry(prec).or_insert_with(|| Arc::new(TanhSinh::new(prec))).clone()
}

/// `int_0^z e^{-w^2} dw` along the segment, with estimated error `<= tol`.
///
/// The returned ball's radius is the error estimate plus rounding.
pub fn erf_integral_oracle(z: &Ball, tol: f64) -> Result<Ball> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::Precondition("tolerance must be positive".into()));
    }
    let (x, y) = z.to_f64();
    if x.hypot(y) > 50.0 {
        return Err(Error::Precondition("oracle needs |z| <= 50".into()));
    }
    if z.re.is_zero() && z.im.is_zero() {
        return Ok(Ball::zero());
    }
    let blowup = (y * y - x * x).max(0.0);
    let guard = (blowup * std::f64::consts::LOG2_E).ceil() as u32 + 20;
    let need = (-tol.log2()).ceil().max(0.0) as u32 + guard + (x.hypot(y).log2().max(0.0) as u32);
    let prec = need.div_ceil(64) * 64;
    let ts = table(prec);
    let wp = prec + 16;
    let c = Ball::exact(z.re.clone(), z.im.clone());
    let mz2 = c.sqr(wp).neg();
    let ctx = ts.ctx.clone();
    let f = |t: &RBall| mz2.mul_real(&t.sqr(wp), wp).exp(&ctx, wp);
    let inner_tol = tol / x.hypot(y).max(1.0);
    let (s, est) = ts.integrate(f, inner_tol)?;
    let v = c.mul(&s, wp);
    let err = Mag::from_f64(est).mul(c.abs_upper());
    Ok(v.add_rad(err))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx(b: &Ball, re: f64, im: f64, tol: f64) -> bool {
        let (x, y) = b.to_f64();
        (x - re).abs() < tol && (y - im).abs() < tol
    }

    #[test]
    fn reference_values() {
        assert!(erf_integral_oracle(&Ball::zero(), 1e-30).unwrap().rad.is_zero());
        let one = erf_integral_oracle(&Ball::from_f64(1.0, 0.0), 1e-35).unwrap();
        let r = Float::parse_decimal_rational("0.746824132812427025399467436132").unwrap();
        let r = Float::from_rational(&r, 160, crate::Round::Nearest);
        assert!(one.sub(&Ball::exact(r, Float::zero()), 160).abs_upper() < Mag::from_f64(1e-29));
        let i = erf_integral_oracle(&Ball::from_f64(0.0, 1.0), 1e-30).unwrap();
        assert!(approx(&i, 0.0, 1.462651745907181608, 1e-15), "{i:?}");
        assert!(i.re.abs().to_f64() < 1e-30);
    }

    #[test]
    fn tolerances_agree() {
        for (x, y) in [(3.0, 2.0), (-7.0, 7.0), (0.5, -9.0)] {
            let z = Ball::from_f64(x, y);
            let a = erf_integral_oracle(&z, 1e-20).unwrap();
            let b = erf_integral_oracle(&z, 1e-40).unwrap();
            assert!(a.overlaps(&b), "{x} {y}");
            assert!(b.rad < Mag::from_f64(1e-39 * 4f64.max(x.hypot(y))));
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(erf_integral_oracle(&Ball::from_f64(60.0, 0.0), 1e-10).is_err());
        assert!(erf_integral_oracle(&Ball::from_f64(1.0, 0.0), 0.0).is_err());
    }
}
