//! Growth budgets `G(r)`: continuous, strictly increasing and unbounded.

use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::numerics::{format_rational, parse_rational, Float, Mag, PrecisionContext, RBall, Round};

/// Relative width of the window `inverse_growth` lands in.
pub const INVERSE_REL_TOL_LOG2: i64 = -20;
const MAX_BISECTIONS: usize = 20_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GrowthSpec {
    /// `c (1 + r)^k`
    Power { k: BigRational, c: BigRational },
    /// `c1 log(1 + r) + c0`
    AffineLog { c1: BigRational, c0: BigRational },
    /// Piecewise linear through `(r, G)` knots; the first segment is
    /// extended down to `r = 0`, and nothing is assumed past the last knot.
    Table { points: Vec<(BigRational, BigRational)> },
}

impl GrowthSpec {
    pub fn power(k: BigRational, c: BigRational) -> Result<GrowthSpec> {
        let g = GrowthSpec::Power { k, c };
        g.validate()?;
        Ok(g)
    }

    pub fn affine_log(c1: BigRational, c0: BigRational) -> Result<GrowthSpec> {
        let g = GrowthSpec::AffineLog { c1, c0 };
        g.validate()?;
        Ok(g)
    }

    pub fn table(points: Vec<(BigRational, BigRational)>) -> Result<GrowthSpec> {
        let g = GrowthSpec::Table { points };
        g.validate()?;
        Ok(g)
    }

    /// Parses `pow:k[,c]` or `afflog:c1,c0`. Tables come from
    /// [`GrowthSpec::parse_table`] since they live in files.
    pub fn parse(s: &str) -> Result<GrowthSpec> {
        let (kind, rest) = s
            .split_once(':')
            .ok_or_else(|| Error::Invalid(format!("growth spec {s:?} lacks a kind prefix")))?;
        let args: Vec<BigRational> = rest.split(',').map(parse_rational).collect::<Result<_>>()?;
        match (kind.trim(), args.as_slice()) {
            ("pow", [k]) => GrowthSpec::power(k.clone(), BigRational::one()),
            ("pow", [k, c]) => GrowthSpec::power(k.clone(), c.clone()),
            ("afflog", [c1, c0]) => GrowthSpec::affine_log(c1.clone(), c0.clone()),
            _ => Err(Error::Invalid(format!("unrecognized growth spec {s:?}"))),
        }
    }

    /// Parses any form produced by `Display`, including inline `table:r,g;r,g`.
    pub fn parse_canonical(s: &str) -> Result<GrowthSpec> {
        match s.strip_prefix("table:") {
            Some(rest) => GrowthSpec::parse_table(&rest.replace(';', "\n")),
            None => GrowthSpec::parse(s),
        }
    }

    /// Table text: one `r,G` (or whitespace separated) pair per line; `#` starts a comment.
    pub fn parse_table(text: &str) -> Result<GrowthSpec> {
        let mut points = Vec::new();
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|f| !f.is_empty()).collect();
            if fields.len() != 2 {
                return Err(Error::Invalid(format!("table line {line:?} needs two fields")));
            }
            points.push((parse_rational(fields[0])?, parse_rational(fields[1])?));
        }
        GrowthSpec::table(points)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            GrowthSpec::Power { k, c } => {
                if !k.is_positive() || !c.is_positive() {
                    return Err(Error::Invalid("pow needs k > 0 and c > 0".into()));
                }
            }
            GrowthSpec::AffineLog { c1, c0 } => {
                if !c1.is_positive() || !c0.is_positive() {
                    return Err(Error::Invalid("afflog needs c1 > 0 and c0 > 0".into()));
                }
            }
            GrowthSpec::Table { points } => {
                if points.len() < 2 {
                    return Err(Error::Invalid("table needs at least two points".into()));
                }
                if points[0].0.is_negative() {
                    return Err(Error::Invalid("table radii must be nonnegative".into()));
                }
                for w in points.windows(2) {
                    if w[1].0 <= w[0].0 || w[1].1 <= w[0].1 {
                        return Err(Error::Invalid("table must be strictly increasing in both columns".into()));
                    }
                }
            }
        }
        if !self.at_zero().is_positive() {
            return Err(Error::Invalid("growth must be positive at r = 0".into()));
        }
        Ok(())
    }

    /// `G(0)`, exactly.
    pub fn at_zero(&self) -> BigRational {
        match self {
            GrowthSpec::Power { c, .. } => c.clone(),
            GrowthSpec::AffineLog { c0, .. } => c0.clone(),
            GrowthSpec::Table { points } => table_at(points, &BigRational::zero()),
        }
    }

    /// Enclosure of `log G(e^t)`.
    pub fn log_eval(&self, t: &RBall, ctx: &PrecisionContext, prec: u32) -> Result<RBall> {
        let wp = prec + 16;
        let out = match self {
            GrowthSpec::Power { k, c } => {
                let lc = RBall::from_rational(c, wp).log(ctx, wp);
                softplus(t, ctx, wp).mul(&RBall::from_rational(k, wp), wp).add(&lc, wp)
            }
            GrowthSpec::AffineLog { c1, c0 } => softplus(t, ctx, wp)
                .mul(&RBall::from_rational(c1, wp), wp)
                .add(&RBall::from_rational(c0, wp), wp)
                .log(ctx, wp),
            GrowthSpec::Table { points } => table_range(points, &t.exp(ctx, wp), wp)?.log(ctx, wp),
        };
        Ok(out.round(prec))
    }

    /// Enclosure of `G(r)` for `r >= 0`.
    pub fn eval(&self, r: &RBall, ctx: &PrecisionContext, prec: u32) -> Result<RBall> {
        let wp = prec + 16;
        if r.lower().is_negative() {
            return Err(Error::Domain("growth is defined for r >= 0".into()));
        }
        let out = match self {
            GrowthSpec::Power { k, c } => RBall::one()
                .add(r, wp)
                .log(ctx, wp)
                .mul(&RBall::from_rational(k, wp), wp)
                .exp(ctx, wp)
                .mul(&RBall::from_rational(c, wp), wp),
            GrowthSpec::AffineLog { c1, c0 } => RBall::one()
                .add(r, wp)
                .log(ctx, wp)
                .mul(&RBall::from_rational(c1, wp), wp)
                .add(&RBall::from_rational(c0, wp), wp),
            GrowthSpec::Table { points } => table_range(points, r, wp)?,
        };
        Ok(out.round(prec))
    }
}

impl fmt::Display for GrowthSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GrowthSpec::Power { k, c } => write!(f, "pow:{},{}", format_rational(k), format_rational(c)),
            GrowthSpec::AffineLog { c1, c0 } => write!(f, "afflog:{},{}", format_rational(c1), format_rational(c0)),
            GrowthSpec::Table { points } => {
                write!(f, "table:")?;
                for (i, (r, g)) in points.iter().enumerate() {
                    if i > 0 {
                        write!(f, ";")?;
                    }
                    write!(f, "{},{}", format_rational(r), format_rational(g))?;
                }
                Ok(())
            }
        }
    }
}

/// `G` over a radius ball, by monotonicity.
fn table_range(points: &[(BigRational, BigRational)], r: &RBall, prec: u32) -> Result<RBall> {
    let last = &points[points.len() - 1].0;
    if !r.is_finite() || r.upper().to_rational() > *last {
        return Err(Error::GrowthTooSlow(format!("radius beyond the last table knot {}", format_rational(last))));
    }
    let lo = r.lower().max(Float::zero()).to_rational();
    let hi = r.upper().to_rational();
    let g_lo = Float::from_rational(&table_at(points, &lo), prec, Round::Down);
    let g_hi = Float::from_rational(&table_at(points, &hi), prec, Round::Up);
    Ok(RBall::from_endpoints(&g_lo, &g_hi, prec))
}

fn table_at(points: &[(BigRational, BigRational)], r: &BigRational) -> BigRational {
    let seg = points.windows(2).position(|w| *r <= w[1].0).unwrap_or(points.len() - 2);
    let (r0, g0) = &points[seg];
    let (r1, g1) = &points[seg + 1];
    g0 + (g1 - g0) * (r - r0) / (r1 - r0)
}

/// `log(1 + e^t)`, switching to `t + [0, 2^-60]` where `e^-t` is negligible.
fn softplus(t: &RBall, ctx: &PrecisionContext, prec: u32) -> RBall {
    let big = Float::from_i64(1 << 40);
    if t.lower() > big {
        return t.add_rad(Mag::pow2(-60));
    }
    t.log1p_exp(ctx, prec)
}

/// An upper bound `t` on `log r` with `G(e^t)` certified in
/// `[y, y (1 + 2^-20)]`, by bisection on `t`.
pub fn inverse_growth_log(growth: &GrowthSpec, y: &BigRational, ctx: &PrecisionContext) -> Result<Float> {
    if *y <= growth.at_zero() {
        return Err(Error::Precondition("inverse growth needs y > G(0)".into()));
    }
    let p = ctx.bits() + 32;
    let ly = RBall::from_rational(y, p + 64).log(ctx, p);
    let slack = RBall::one().add(&RBall::exact(Float::one().mul_2exp(INVERSE_REL_TOL_LOG2)), p).log(ctx, p).lower();
    let hi_cap = ly.lower().add(&slack, p, Round::Down);
    let certified_above = |t: &Float| -> Result<(bool, RBall)> {
        let v = growth.log_eval(&RBall::exact(t.clone()), ctx, p)?;
        Ok((v.lower() >= ly.upper(), v))
    };

    let mut lo = Float::from_i64(-1);
    loop {
        let v = growth.log_eval(&RBall::exact(lo.clone()), ctx, p)?;
        if v.upper() < ly.lower() {
            break;
        }
        if lo < Float::from_i64(-(1 << 20)) {
            return Err(Error::Precondition("y is too close to G(0) to bracket".into()));
        }
        lo = lo.mul_2exp(1);
    }
    let mut hi = Float::one();
    let mut steps = 0;
    loop {
        if certified_above(&hi)?.0 {
            break;
        }
        lo = hi.clone();
        hi = hi.mul_2exp(1);
        steps += 1;
        if steps > 4096 {
            return Err(Error::GrowthTooSlow("no upper bracket for the inverse".into()));
        }
    }
    for _ in 0..MAX_BISECTIONS {
        let (_, v) = certified_above(&hi)?;
        if v.upper() <= hi_cap {
            return Ok(hi);
        }
        let mid = lo.add_exact(&hi).mul_2exp(-1);
        if certified_above(&mid)?.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Err(Error::PrecisionExhausted("inverse growth bisection did not settle".into()))
}

/// An `r` with `G(r)` certified in `[y, y (1 + 2^-20)]`, rounded up.
pub fn inverse_growth(growth: &GrowthSpec, y: &BigRational, ctx: &PrecisionContext) -> Result<Float> {
    let t = inverse_growth_log(growth, y, ctx)?;
    let r = RBall::exact(t).exp(ctx, ctx.bits() + 16);
    if !r.is_finite() {
        return Err(Error::Range("inverse growth exceeds the float range; use the log form".into()));
    }
    Ok(r.upper().round(ctx.bits(), Round::Up))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn rat(v: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(v))
    }

    fn ctx() -> PrecisionContext {
        PrecisionContext::new(128).unwrap()
    }

    #[test]
    fn parsing_and_validation() {
        assert_eq!(GrowthSpec::parse("pow:1").unwrap(), GrowthSpec::Power { k: rat(1), c: rat(1) });
        assert_eq!(GrowthSpec::parse("pow:2,1/3").unwrap().to_string(), "pow:2,1/3");
        assert_eq!(GrowthSpec::parse("afflog:4,1").unwrap().to_string(), "afflog:4,1");
        for bad in ["pow:0", "pow:1,0", "afflog:1,0", "afflog:-1,1", "exp:1", "pow", "pow:1,2,3"] {
            assert!(GrowthSpec::parse(bad).is_err(), "{bad}");
        }
        let t = GrowthSpec::parse_table("# knots\n1,1\n10 5\n100, 20\n").unwrap();
        assert_eq!(t.to_string(), "table:1,1;10,5;100,20");
        assert!(GrowthSpec::parse_table("1,1\n1,2\n").is_err());
        assert!(GrowthSpec::parse_table("1,1\n").is_err());
        // Extending the first segment to r = 0 would go negative.
        assert!(GrowthSpec::parse_table("1,1\n2,10\n").is_err());
    }

    #[test]
    fn table_interpolates_exactly() {
        let t = GrowthSpec::parse_table("1,1\n10,5\n100,20\n").unwrap();
        assert_eq!(t.at_zero(), BigRational::new(5.into(), 9.into()));
        let c = ctx();
        let v = t.eval(&RBall::from_i64(16), &c, 128).unwrap();
        assert!(v.contains(&Float::from_i64(6)));
        assert!(matches!(t.eval(&RBall::from_i64(101), &c, 128), Err(Error::GrowthTooSlow(_))));
    }

    #[test]
    fn closed_form_inverses() {
        let c = ctx();
        let p = GrowthSpec::parse("pow:1,1").unwrap();
        let r = inverse_growth(&p, &rat(100), &c).unwrap().to_f64();
        assert!((99.0..=99.001).contains(&r), "{r}");
        let a = GrowthSpec::parse("afflog:1,1").unwrap();
        let r = inverse_growth(&a, &rat(10), &c).unwrap().to_f64();
        let want = 9f64.exp() - 1.0;
        assert!(r >= want * (1.0 - 1e-12) && r <= want * 1.001, "{r}");
        assert!(inverse_growth(&p, &rat(1), &c).is_err());
    }

    #[test]
    fn inverse_lands_in_window() {
        let c = ctx();
        let p = GrowthSpec::parse("pow:3/2,2").unwrap();
        for y in [3, 50, 7919, 1_000_000_007] {
            let y = rat(y);
            let t = inverse_growth_log(&p, &y, &c).unwrap();
            let g = p.log_eval(&RBall::exact(t), &c, 128).unwrap().exp(&c, 128);
            let yf = Float::from_rational(&y, 128, Round::Nearest);
            assert!(g.lower() >= yf);
            let cap = RBall::exact(yf).mul(&RBall::from_f64(1.0 + 2f64.powi(-20)), 128);
            assert!(g.upper() <= cap.upper());
        }
    }

    #[test]
    fn huge_targets_stay_in_log_space() {
        let c = ctx();
        let a = GrowthSpec::parse("afflog:4,1").unwrap();
        let y = BigRational::from_integer(BigInt::from(10).pow(40));
        let t = inverse_growth_log(&a, &y, &c).unwrap();
        // 4 t + 1 ~ 10^40
        assert!((t.to_f64() / 0.25e40 - 1.0).abs() < 2e-6);
        assert!(inverse_growth(&a, &y, &c).is_err());
    }
}
