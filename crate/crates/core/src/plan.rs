//! The numerical skeleton of the function: integers `N_n`, radii `r_n` and
//! scale factors `lambda_n = 1 / (8 r_n^{N_n})`, with the sector certificates
//! they rely on.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;

use crate::certify::{find_alphas, AlphaSearch, CertKind, SectorCertificate};
use crate::error::{Error, Result};
use crate::growth::{inverse_growth_log, GrowthSpec};
use crate::numerics::{Float, PrecisionContext, PrecisionDescriptor, RBall, RationalAngle, Round};

pub use crate::growth::inverse_growth;

#[derive(Clone, Debug, PartialEq)]
pub struct FunctionPlan {
    pub levels: usize,
    /// Full opening of the sector `K` about the negative axis.
    pub alpha: RationalAngle,
    /// Full openings `alpha_1 > alpha_2 > ...`.
    pub alphas: Vec<RationalAngle>,
    pub n: Vec<BigInt>,
    /// `log r_n`, rounded up.
    pub log_r: Vec<Float>,
    /// `log lambda_n`, rounded down from `-log 8 - N_n log r_n`.
    pub log_lambda: Vec<Float>,
    pub growth: GrowthSpec,
    /// The `K` certificate followed by `H_1, ..., H_levels`.
    pub certificates: Vec<SectorCertificate>,
    pub precision: PrecisionDescriptor,
}

/// Smallest integer above `3 pi N / alpha` for `alpha = q pi`.
pub fn next_n(n: &BigInt, alpha: &RationalAngle) -> BigInt {
    let bound = BigRational::from_integer(n * 3) / alpha.q();
    bound.floor().to_integer() + BigInt::one()
}

/// Level-`n` accessors take `n >= 1`.
impl FunctionPlan {
    pub fn n_at(&self, n: usize) -> &BigInt {
        &self.n[n - 1]
    }

    pub fn alpha_at(&self, n: usize) -> &RationalAngle {
        &self.alphas[n - 1]
    }

    pub fn log_r_at(&self, n: usize) -> &Float {
        &self.log_r[n - 1]
    }

    pub fn log_lambda_at(&self, n: usize) -> &Float {
        &self.log_lambda[n - 1]
    }

    pub fn k_certificate(&self) -> &SectorCertificate {
        &self.certificates[0]
    }

    pub fn h_certificate(&self, n: usize) -> &SectorCertificate {
        &self.certificates[n]
    }

    /// Re-checks every construction invariant; `Construction` names the first breach.
    pub fn verify(&self, ctx: &PrecisionContext) -> Result<()> {
        let bad = |m: String| Err(Error::Construction(m));
        let l = self.levels;
        if l == 0 || self.alphas.len() != l || self.n.len() != l || self.log_r.len() != l || self.log_lambda.len() != l {
            return bad(format!("sequence lengths disagree with {l} levels"));
        }
        if self.certificates.len() != l + 1 {
            return Err(Error::CertMissing(self.certificates.len()));
        }
        self.growth.validate()?;
        if !self.n[0].is_one() {
            return bad("N_1 must be 1".into());
        }
        if self.alphas[0].q() >= self.alpha.q() {
            return bad("alpha_1 must be below alpha".into());
        }
        for i in 1..l {
            if self.alphas[i].q() >= self.alphas[i - 1].q() {
                return bad(format!("alpha_{} does not decrease", i + 1));
            }
            // N_{n+1} alpha_n > 3 pi N_n, exactly.
            let lhs = BigRational::from_integer(self.n[i].clone()) * self.alphas[i - 1].q();
            if lhs <= BigRational::from_integer(&self.n[i - 1] * 3) {
                return bad(format!("N_{} is too small", i + 1));
            }
        }
        if self.log_r[0] < Float::from_i64(2) {
            return bad("log r_1 must be at least 2".into());
        }
        for i in 1..l {
            if self.log_r[i] <= self.log_r[i - 1].add_exact(&Float::one()) {
                return bad(format!("r_{} is not above e r_{}", i + 1, i));
            }
        }
        let p = ctx.bits() + 32;
        for i in 0..l {
            let g = self.growth.log_eval(&RBall::exact(self.log_r[i].clone()), ctx, p)?;
            let three_n = RBall::from_int(&(&self.n[i] * 3)).log(ctx, p);
            if g.lower() <= three_n.upper() {
                return bad(format!("G(r_{}) is not certified above 3 N_{}", i + 1, i + 1));
            }
            let ideal = ideal_log_lambda(&self.n[i], &self.log_r[i], ctx);
            if self.log_lambda[i] > ideal.lower() {
                return bad(format!("lambda_{} exceeds 1 / (8 r^N)", i + 1));
            }
        }
        let k = &self.certificates[0];
        if k.kind != CertKind::K || !k.is_certified() || k.half_angle != self.alpha.half() || !k.check_bounds(ctx) {
            return bad("K certificate does not match alpha".into());
        }
        for i in 0..l {
            let c = &self.certificates[i + 1];
            if c.kind != CertKind::H(i as u32 + 1) {
                return Err(Error::CertMissing(i + 1));
            }
            if !c.is_certified() || c.half_angle != self.alphas[i].half() || !c.check_bounds(ctx) {
                return bad(format!("H certificate {} does not match alpha_{}", i + 1, i + 1));
            }
        }
        Ok(())
    }
}

/// Enclosure of `-log 8 - N log r`.
fn ideal_log_lambda(n: &BigInt, log_r: &Float, ctx: &PrecisionContext) -> RBall {
    let p = ctx.bits() + n.bits() as u32 + 32;
    let ln8 = ctx.ln2(p).mul_int(&BigInt::from(3), p);
    RBall::exact(log_r.mul_exact(&Float::from_int(n))).add(&ln8, p).neg()
}

/// Runs the alpha search and builds the plan on top of it.
pub fn build_plan(growth: &GrowthSpec, n_max: usize, ctx: &PrecisionContext) -> Result<FunctionPlan> {
    if n_max < 2 {
        return Err(Error::Precondition("a plan needs at least two levels".into()));
    }
    let search = find_alphas(n_max as u32, ctx)?;
    build_plan_from(growth, n_max, &search, ctx)
}

/// Builds the plan from an existing alpha search.
pub fn build_plan_from(growth: &GrowthSpec, n_max: usize, search: &AlphaSearch, ctx: &PrecisionContext) -> Result<FunctionPlan> {
    growth.validate()?;
    if n_max == 0 {
        return Err(Error::Precondition("a plan needs at least one level".into()));
    }
    if search.alphas.len() < n_max || search.h_certificates.len() < n_max {
        return Err(Error::CertMissing(search.alphas.len().min(search.h_certificates.len()) + 1));
    }
    let alphas: Vec<RationalAngle> = search.alphas[..n_max].to_vec();
    let (n, log_r) = skeleton(growth, &alphas, ctx)?;
    let log_lambda = log_lambdas(&n, &log_r, ctx);
    let mut certificates = vec![search.k_certificate.clone()];
    certificates.extend(search.h_certificates[..n_max].iter().cloned());
    let plan = FunctionPlan {
        levels: n_max,
        alpha: search.alpha.clone(),
        alphas,
        n,
        log_r,
        log_lambda,
        growth: growth.clone(),
        certificates,
        precision: ctx.descriptor(),
    };
    plan.verify(ctx)?;
    Ok(plan)
}

/// `N_n` by the minimal-integer rule and `log r_n` by
/// `r_n = max(2 G^{-1}(3 N_n), 2 e r_{n-1}, e^2)`.
pub fn skeleton(growth: &GrowthSpec, alphas: &[RationalAngle], ctx: &PrecisionContext) -> Result<(Vec<BigInt>, Vec<Float>)> {
    let p = ctx.bits();
    let ln2 = ctx.ln2(p + 16).upper();
    let mut n = vec![BigInt::one()];
    for a in &alphas[..alphas.len().saturating_sub(1)] {
        let next = next_n(n.last().expect("nonempty"), a);
        n.push(next);
    }
    let mut log_r: Vec<Float> = Vec::with_capacity(n.len());
    for nn in &n {
        let y = BigRational::from_integer(nn * 3);
        let t = if y > growth.at_zero() { Some(inverse_growth_log(growth, &y, ctx)?) } else { None };
        let mut best = Float::from_i64(2);
        if let Some(t) = t {
            best = best.max(t.add(&ln2, p, Round::Up));
        }
        if let Some(prev) = log_r.last() {
            best = best.max(prev.add(&ln2, p + 64, Round::Up).add(&Float::one(), p, Round::Up));
        }
        log_r.push(best.round(p, Round::Up));
    }
    Ok((n, log_r))
}

fn log_lambdas(n: &[BigInt], log_r: &[Float], ctx: &PrecisionContext) -> Vec<Float> {
    n.iter()
        .zip(log_r)
        .map(|(nn, lr)| {
            let p = ctx.bits() + nn.bits() as u32;
            ideal_log_lambda(nn, lr, ctx).lower().round(p, Round::Down)
        })
        .collect()
}

/// The first level whose radius exceeds `e^{log_r}`.
pub fn first_level_above(plan: &FunctionPlan, log_r: &Float) -> Option<usize> {
    plan.log_r.iter().position(|l| l > log_r).map(|i| i + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> PrecisionContext {
        PrecisionContext::new(128).unwrap()
    }

    fn int(v: i64) -> BigInt {
        BigInt::from(v)
    }

    #[test]
    fn minimal_integer_rule() {
        assert_eq!(next_n(&int(1), &RationalAngle::from_ratio(1, 8)), int(25));
        // 3 / (255/1024) = 12.04...
        assert_eq!(next_n(&int(1), &RationalAngle::from_ratio(255, 1024)), int(13));
        assert_eq!(next_n(&int(13), &RationalAngle::from_ratio(1023, 8192)), int(313));
        // An exact multiple still moves strictly past the bound.
        assert_eq!(next_n(&int(2), &RationalAngle::from_ratio(1, 4)), int(25));
    }

    #[test]
    fn power_plan_builds_and_verifies() {
        let c = ctx();
        let g = GrowthSpec::parse("pow:1,1").unwrap();
        let p = build_plan(&g, 4, &c).unwrap();
        assert_eq!(p.n, vec![int(1), int(13), int(313), int(11271)]);
        assert_eq!(p.certificates.len(), 5);
        for i in 0..4 {
            assert!(p.log_r[i].to_f64() > (i + 1) as f64);
        }
        assert!(build_plan(&g, 1, &c).is_err());
    }

    #[test]
    fn hypothetical_pi_over_eight() {
        // Identity-like growth through (0, 1/1000) and (10^6, 10^6).
        let c = ctx();
        let g = GrowthSpec::parse_table("0,1/1000\n1000000,1000000\n").unwrap();
        let alphas = [RationalAngle::from_ratio(1, 8), RationalAngle::from_ratio(1, 16)];
        let (n, log_r) = skeleton(&g, &alphas, &c).unwrap();
        assert_eq!(n[1], int(25));
        // r_2 = 2 G^{-1}(75) with G(r) = r + 1/1000 up to 1e-9 relative.
        let r2 = log_r[1].to_f64().exp();
        assert!((r2 - 2.0 * (75.0 - 0.001)).abs() < 1e-3, "{r2}");
        let lam = log_lambdas(&n, &log_r, &c);
        let want = -(8f64.ln()) - 25.0 * log_r[1].to_f64();
        assert!((lam[1].to_f64() - want).abs() < 1e-9);
    }

    #[test]
    fn verification_rejects_corruption() {
        let c = ctx();
        let g = GrowthSpec::parse("pow:1,1").unwrap();
        let p = build_plan(&g, 3, &c).unwrap();
        let mut bad = p.clone();
        bad.log_r[2] = bad.log_r[1].add_exact(&Float::one());
        assert!(matches!(bad.verify(&c), Err(Error::Construction(_))));
        let mut bad = p.clone();
        bad.n[2] = &bad.n[2] - 1;
        assert!(bad.verify(&c).is_err());
        let mut bad = p.clone();
        bad.log_lambda[1] = bad.log_lambda[1].add_exact(&Float::one());
        assert!(bad.verify(&c).is_err());
        let mut bad = p.clone();
        bad.certificates.pop();
        assert!(matches!(bad.verify(&c), Err(Error::CertMissing(_))));
        let mut bad = p;
        bad.log_r[0] = Float::one();
        assert!(bad.verify(&c).is_err());
    }

    #[test]
    fn missing_alphas() {
        let c = ctx();
        let s = find_alphas(2, &c).unwrap();
        let g = GrowthSpec::parse("pow:1").unwrap();
        assert!(matches!(build_plan_from(&g, 3, &s, &c), Err(Error::CertMissing(3))));
    }
}
