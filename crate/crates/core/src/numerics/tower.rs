//! Magnitudes of the form `exp(exp(...exp(m)))`.

use std::cmp::Ordering;
use std::fmt;
use std::sync::OnceLock;

use super::ball::RBall;
use super::context::PrecisionContext;
use super::float::Float;
use crate::error::{Error, Result};

/// Mantissas at or above this value are replaced by their logarithm.
pub const TOWER_CUT: f64 = 1e8;

fn ctx64() -> &'static PrecisionContext {
    static CTX: OnceLock<PrecisionContext> = OnceLock::new();
    CTX.get_or_init(|| PrecisionContext::new(64).expect("valid precision"))
}

fn ball(x: f64) -> RBall {
    RBall::from_f64(x)
}

fn ln_up(x: f64) -> f64 {
    ball(x).log(ctx64(), 64).upper().to_f64_up()
}


fn exp_up(x: f64) -> f64 {
    ball(x).exp(ctx64(), 64).upper().to_f64_up()
}

/// The value `exp^level(m)`.
///
/// Normal form: `m < TOWER_CUT`, and `m >= ln(TOWER_CUT)` whenever
/// `level > 0`. Normalizing never decreases the represented value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TowerMag {
    level: u32,
    m: f64,
}

impl TowerMag {
    pub const ZERO: TowerMag = TowerMag { level: 0, m: 0.0 };

    /// Builds and normalizes; `m` must be finite and nonnegative.
    pub fn new(level: u32, m: f64) -> TowerMag {
        assert!(m.is_finite() && m >= 0.0, "tower mantissa must be finite and nonnegative");
        TowerMag { level, m }.normalized()
    }

    /// Unnormalized constructor, for inputs that are meant to be read literally.
    pub fn raw(level: u32, m: f64) -> TowerMag {
        assert!(m.is_finite() && m >= 0.0, "tower mantissa must be finite and nonnegative");
        TowerMag { level, m }
    }

    pub fn from_f64(v: f64) -> TowerMag {
        TowerMag::new(0, v)
    }

    /// Upper bound from an upper bound on `log value`.
    pub fn from_log(l: &Float) -> TowerMag {
        if l.is_negative() {
            let e = RBall::exact(l.clone()).exp(ctx64(), 64).upper().to_f64_up();
            return TowerMag::new(0, e);
        }
        Self::lift(1, l)
    }

    /// Upper bound from an upper bound on `log log value`.
    pub fn from_loglog(l: &Float) -> TowerMag {
        if l.is_negative() {
            // value <= exp(exp(l)) <= e
            let e = RBall::exact(l.clone()).exp(ctx64(), 64).upper().to_f64_up();
            return TowerMag::new(1, e);
        }
        Self::lift(2, l)
    }

    fn lift(level: u32, l: &Float) -> TowerMag {
        let mut level = level;
        let mut x = l.clone();
        while x > Float::from_f64(TOWER_CUT).expect("finite") {
            x = RBall::exact(x).log(ctx64(), 64).upper();
            level += 1;
        }
        TowerMag::new(level, x.to_f64_up())
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn mantissa(&self) -> f64 {
        self.m
    }

    pub fn is_zero(&self) -> bool {
        self.level == 0 && self.m == 0.0
    }

    /// Value as an `f64`, saturating to infinity.
    pub fn to_f64(&self) -> f64 {
        let mut v = self.m;
        for _ in 0..self.level {
            v = v.exp();
        }
        v
    }

    pub fn normalized(&self) -> TowerMag {
        let mut level = self.level;
        let mut m = self.m;
        let low = TOWER_CUT.ln();
        while level > 0 && m < low {
            m = exp_up(m);
            level -= 1;
        }
        while m >= TOWER_CUT {
            m = ln_up(m);
            level += 1;
        }
        TowerMag { level, m }
    }

    pub fn max(self, o: TowerMag) -> TowerMag {
        if self >= o { self } else { o }
    }
}

impl PartialOrd for TowerMag {
    fn partial_cmp(&self, o: &TowerMag) -> Option<Ordering> {
        let (a, b) = (self.normalized(), o.normalized());
        Some(a.level.cmp(&b.level).then(a.m.partial_cmp(&b.m).expect("finite mantissas")))
    }
}

impl fmt::Display for TowerMag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.level {
            0 => write!(f, "{}", self.m),
            1 => write!(f, "exp({})", self.m),
            k => write!(f, "exp^{k}({})", self.m),
        }
    }
}

/// `log log x`, enclosed in a ball.
///
/// Accepts unnormalized input. Fails when `x <= e`.
pub fn tower_loglog(x: &TowerMag) -> Result<RBall> {
    let c = ctx64();
    let p = 96;
    let m = RBall::from_f64(x.m);
    let out = match x.level {
        0 => {
            if x.m <= std::f64::consts::E {
                return Err(Error::Domain("log log needs a value above e".into()));
            }
            let l = m.log(c, p);
            if !l.is_positive() || l.lower() <= Float::one() {
                return Err(Error::Domain("log log needs a value above e".into()));
            }
            l.log(c, p)
        }
        1 => {
            if x.m <= 1.0 {
                return Err(Error::Domain("log log needs a value above e".into()));
            }
            m.log(c, p)
        }
        2 => m,
        k => {
            let mut v = m;
            for _ in 2..k {
                v = v.exp(c, p);
                if !v.is_finite() {
                    return Err(Error::Range("log log exceeds representable range".into()));
                }
            }
            v
        }
    };
    Ok(out)
}

/// Bump the mantissa so that `exp^level(m') >= exp^level(m) + c`.
fn bump(level: u32, m: f64, c: f64) -> f64 {
    if c <= 0.0 {
        return m;
    }
    if level == 0 {
        return (m + c).next_up();
    }
    // exp^level(m) + c <= exp(exp^{level-1}(m) + c e^{-exp^{level-1}(m)})
    let below = lower_value(level - 1, m);
    if below > 700.0 {
        // The remaining increment is far below one ulp of m.
        return m.next_up();
    }
    let c2 = c * (-below).exp() * (1.0 + 1e-12);
    bump(level - 1, m, c2)
}

/// A lower bound on `exp^level(m)`, saturating at `f64::MAX`.
fn lower_value(level: u32, m: f64) -> f64 {
    let mut v = m;
    for _ in 0..level {
        if v > 709.0 {
            return f64::MAX;
        }
        v = (v.exp() * (1.0 - 1e-12)).max(0.0);
    }
    v
}

/// Certified upper bound on the sum.
///
/// Level-0 terms are summed directly. If any term is larger, the result is
/// the largest term times the number of nonzero terms.
pub fn tower_sum_upper(xs: &[TowerMag]) -> TowerMag {
    let xs: Vec<TowerMag> = xs.iter().map(|x| x.normalized()).filter(|x| !x.is_zero()).collect();
    if xs.is_empty() {
        return TowerMag::ZERO;
    }
    if xs.iter().all(|x| x.level == 0) {
        let mut s = 0.0f64;
        for x in &xs {
            s = (s + x.m).next_up();
        }
        return TowerMag::new(0, s);
    }
    let top = xs.iter().copied().fold(TowerMag::ZERO, TowerMag::max);
    let n = xs.len() as f64;
    if n == 1.0 {
        return top;
    }
    // n * exp^k(m) = exp(exp^{k-1}(m) + ln n)
    let ln_n = ln_up(n);
    TowerMag::new(top.level, bump(top.level - 1, top.m, ln_n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn loglog_examples() {
        let v = tower_loglog(&TowerMag::raw(2, 5.0)).unwrap();
        assert_eq!(v.mid, Float::from_i64(5));
        let x = TowerMag::raw(0, 3f64.exp().exp());
        let v = tower_loglog(&x).unwrap();
        assert!((v.to_f64() - 3.0).abs() < 1e-12);
        let v = tower_loglog(&TowerMag::raw(1, 7.0)).unwrap();
        // ln 7 from a 30-digit reference evaluation.
        assert!((v.to_f64() - 1.945_910_149_055_313_3).abs() < 1e-15);
        assert!(tower_loglog(&TowerMag::raw(0, 2.0)).is_err());
        assert!(tower_loglog(&TowerMag::raw(1, 0.5)).is_err());
    }

    #[test]
    fn sums() {
        assert!(tower_sum_upper(&[TowerMag::ZERO; 3]).is_zero());
        let s = tower_sum_upper(&[TowerMag::from_f64(1.0), TowerMag::from_f64(1.0)]);
        assert!(s.to_f64() >= 2.0);
        let big = TowerMag::raw(2, 10.0);
        let s = tower_sum_upper(&[big, TowerMag::from_f64(1.0)]);
        let ll = tower_loglog(&s).unwrap();
        assert!(ll.lower() >= Float::from_i64(10) && ll.to_f64() < 10.0 + 1e-3);
        // The bound must dominate e^{e^10} + 1 at representable scale.
        let s = tower_sum_upper(&[TowerMag::raw(1, 20.0), TowerMag::raw(1, 20.0)]);
        assert!(s.to_f64() >= 2.0 * 20f64.exp());
    }

    #[test]
    fn normal_form() {
        let t = TowerMag::new(0, 1e10);
        assert_eq!(t.level(), 1);
        assert!(t.mantissa() >= 1e10f64.ln());
        let t = TowerMag::new(1, 3.0);
        assert_eq!(t.level(), 0);
        assert!(t.mantissa() >= 3f64.exp());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn order_matches_values(a in 0.0f64..300.0, b in 0.0f64..300.0) {
            let (x, y) = (a.exp(), b.exp());
            let (tx, ty) = (TowerMag::from_f64(x), TowerMag::from_f64(y));
            if (x / y - 1.0).abs() > 1e-12 {
                prop_assert_eq!(tx.partial_cmp(&ty), x.partial_cmp(&y));
            }
            prop_assert!(tx.to_f64() >= x * (1.0 - 1e-15));
        }

        #[test]
        fn sum_dominates(vals in proptest::collection::vec(0.0f64..700.0, 1..6)) {
            let xs: Vec<TowerMag> = vals.iter().map(|v| TowerMag::new(1, *v)).collect();
            let s = tower_sum_upper(&xs);
            let exact: f64 = vals.iter().map(|v| v.exp()).sum();
            prop_assert!(s.to_f64() >= exact * (1.0 - 1e-14));
        }
    }
}
