use num_bigint::BigInt;

use super::angle::RationalAngle;
use super::ball::{Ball, RBall};
use super::context::PrecisionContext;
use super::float::Float;
use crate::error::{Error, Result};

/// Largest `|log_mod|` converted to an ordinary ball.
pub const LOGPOLAR_CUTOFF: f64 = 1e6;

/// An argument: either an exact multiple of `pi` or a real ball.
#[derive(Clone, Debug, PartialEq)]
pub enum AngleRepr {
    Exact(RationalAngle),
    Real(RBall),
}

impl AngleRepr {
    pub fn to_ball(&self, ctx: &PrecisionContext, prec: u32) -> RBall {
        match self {
            AngleRepr::Exact(a) => a.to_ball(ctx, prec),
            AngleRepr::Real(b) => b.clone(),
        }
    }
}

/// `exp(log_mod) * e^{i arg}` for a nonzero complex number.
#[derive(Clone, Debug, PartialEq)]
pub struct LogPolar {
    pub log_mod: RBall,
    pub arg: AngleRepr,
}

impl LogPolar {
    pub fn new(log_mod: RBall, arg: AngleRepr) -> LogPolar {
        LogPolar { log_mod, arg }
    }

    pub fn exact(log_mod: Float, arg: RationalAngle) -> LogPolar {
        LogPolar { log_mod: RBall::exact(log_mod), arg: AngleRepr::Exact(arg) }
    }

    /// Encloses the value in a ball; fails beyond the cutoff.
    pub fn to_ball(&self, ctx: &PrecisionContext) -> Result<Ball> {
        let prec = ctx.bits();
        let cutoff = Float::from_f64(LOGPOLAR_CUTOFF).expect("finite");
        if !self.log_mod.is_finite() || self.log_mod.mid.abs() > cutoff {
            return Err(Error::Range(format!("|log modulus| exceeds {LOGPOLAR_CUTOFF:e}")));
        }
        let m = self.log_mod.exp(ctx, prec + 8);
        let t = self.arg.to_ball(ctx, prec + 8);
        Ok(Ball::from_polar(&m, &t, ctx, prec).round(prec))
    }
}

/// Product of two log-polar numbers.
pub fn logpolar_mul(a: &LogPolar, b: &LogPolar, ctx: &PrecisionContext) -> LogPolar {
    let prec = ctx.bits() + 16;
    let log_mod = a.log_mod.add(&b.log_mod, prec);
    let arg = match (&a.arg, &b.arg) {
        (AngleRepr::Exact(x), AngleRepr::Exact(y)) => AngleRepr::Exact(x.add(y).reduce_signed()),
        _ => AngleRepr::Real(a.arg.to_ball(ctx, prec).add(&b.arg.to_ball(ctx, prec), prec)),
    };
    LogPolar { log_mod, arg }
}

/// `w^k` for a positive integer `k`. Exact arguments are reduced into `(-1, 1] pi`.
pub fn logpolar_pow_int(w: &LogPolar, k: &BigInt, ctx: &PrecisionContext) -> Result<LogPolar> {
    if k.sign() != num_bigint::Sign::Plus {
        return Err(Error::Precondition("exponent must be at least 1".into()));
    }
    let extra = k.bits() as u32;
    let prec = (w.log_mod.mid.bits() as u32).max(ctx.bits()) + extra + 16;
    let log_mod = w.log_mod.mul_int(k, prec);
    let arg = match &w.arg {
        AngleRepr::Exact(a) => AngleRepr::Exact(a.mul_int(k).reduce_signed()),
        AngleRepr::Real(b) => AngleRepr::Real(b.mul_int(k, prec)),
    };
    Ok(LogPolar { log_mod, arg })
}
