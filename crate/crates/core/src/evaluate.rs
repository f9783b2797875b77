//! Certified evaluation of `phi = sum beta_n phi_n` with `phi_n(z) = phi0(lambda_n z^{N_n})^n`.
//!
//! Each term is computed from `w = lambda_n z^{N_n}` held in log-polar form,
//! so radii far beyond `f64` are handled without overflow.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::numerics::{
    tower_loglog, tower_sum_upper, AngleRepr, Ball, Float, LogPolar, Mag, PrecisionContext, RBall, RationalAngle,
    Round, TowerMag,
};
use crate::phi0::{exp_mag, phi0_eval, phi0_far, Limit};
use crate::plan::{first_level_above, FunctionPlan};
use crate::sectors::{address_to_sector, AddressBits, SectorInterval};
use crate::targets::{beta, infinity_target, GaussianRational, Omega, TargetSelection};

/// Below `log|w|` of this, `|phi0(w)| <= 4 |w|` is used instead of evaluation.
const SMALL_LOG_W: f64 = -64.0;
/// Above `|w|` of this the far-field form replaces direct evaluation.
const DIRECT_LIMIT: f64 = 16.0;
/// Grid density of the Lemma-1 radius search, in points per decade of `log r`.
pub const LEMMA1_POINTS_PER_DECADE: u32 = 40;
/// Reported distances are rounded up to this many bits.
const REPORT_BITS: u32 = 40;

#[derive(Clone, Debug, PartialEq)]
pub enum Radius {
    Zero,
    /// `r = e^{log_r}`.
    Log(Float),
}

impl Radius {
    pub fn log(l: f64) -> Result<Radius> {
        Float::from_f64(l).map(Radius::Log).ok_or_else(|| Error::Invalid(format!("log r must be finite, got {l}")))
    }

    pub fn log_r(&self) -> Option<&Float> {
        match self {
            Radius::Zero => None,
            Radius::Log(l) => Some(l),
        }
    }
}

/// The angles `mid +- half_width` (units of `pi`).
#[derive(Clone, Debug, PartialEq)]
pub struct AngleArc {
    pub mid: RationalAngle,
    pub half_width: RationalAngle,
}

impl AngleArc {
    pub fn point(theta: RationalAngle) -> AngleArc {
        AngleArc { mid: theta, half_width: RationalAngle::zero() }
    }

    pub fn of_sector(s: &SectorInterval) -> AngleArc {
        AngleArc { mid: s.midpoint(), half_width: s.width().half() }
    }

    /// The argument of `z^n` over the arc.
    fn scaled(&self, n: &BigInt, ctx: &PrecisionContext, prec: u32) -> AngleRepr {
        let c = self.mid.mul_int(n).reduce_signed();
        if self.half_width.is_zero() {
            return AngleRepr::Exact(c);
        }
        let hw = self.half_width.mul_int(n).to_ball(ctx, prec).upper();
        AngleRepr::Real(c.to_ball(ctx, prec).add_rad(Mag::from_float(&hw)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TermRegime {
    Origin,
    SmallBound,
    Direct,
    FarField(Limit),
}

#[derive(Clone, Debug)]
pub struct TermValue {
    pub value: Ball,
    pub regime: TermRegime,
}

fn check_level(n: usize, plan: &FunctionPlan) -> Result<()> {
    if n == 0 || n > plan.levels {
        return Err(Error::Precondition(format!("term {n} outside 1..={}", plan.levels)));
    }
    Ok(())
}

/// `log|w_n| = log lambda_n + N_n log r`.
pub fn log_w(n: usize, log_r: &Float, plan: &FunctionPlan, ctx: &PrecisionContext) -> RBall {
    let nn = plan.n_at(n);
    let p = ctx.bits() + nn.bits() as u32 + 32;
    let scaled = Float::from_int(nn).mul_exact(log_r);
    RBall::exact(scaled).add(&RBall::exact(plan.log_lambda_at(n).clone()), p)
}

fn ln4(ctx: &PrecisionContext, p: u32) -> RBall {
    ctx.ln2(p).mul_2exp(1)
}

fn to_ball_rational(g: &GaussianRational, prec: u32) -> Ball {
    Ball::from_rballs(&RBall::from_rational(&g.re, prec), &RBall::from_rational(&g.im, prec))
}

fn rational_up(q: &BigRational) -> Float {
    Float::from_rational(q, 64, Round::Up)
}

/// `phi_n` over every `z = r e^{i theta}` with `theta` in the arc.
pub fn phi_n_arc(n: usize, radius: &Radius, arc: &AngleArc, plan: &FunctionPlan, ctx: &PrecisionContext) -> Result<TermValue> {
    check_level(n, plan)?;
    let log_r = match radius {
        Radius::Zero => return Ok(TermValue { value: Ball::zero(), regime: TermRegime::Origin }),
        Radius::Log(l) => l,
    };
    let p = ctx.bits() + 16;
    let lw = log_w(n, log_r, plan, ctx);
    let up = lw.upper();
    if up.to_f64() < SMALL_LOG_W {
        let l = RBall::exact(up).add(&ln4(ctx, p), p).mul_int(&BigInt::from(n), p).upper();
        return Ok(TermValue { value: Ball::zero().add_rad(exp_mag(&l, ctx)), regime: TermRegime::SmallBound });
    }
    let w = LogPolar::new(lw, arc.scaled(plan.n_at(n), ctx, p));
    let uncertified = |e: Error| match e {
        Error::Sector => Error::UncertifiedAngle(format!("term {n} at log r = {}", log_r.to_f64())),
        e => e,
    };
    if up.to_f64() <= DIRECT_LIMIT.ln() {
        let wb = w.to_ball(ctx)?;
        let v = phi0_eval(&wb, ctx).map_err(uncertified)?.value;
        return Ok(TermValue { value: v.pow(n as u64, p).round(ctx.bits()), regime: TermRegime::Direct });
    }
    let far = phi0_far(&w, ctx).map_err(uncertified)?;
    let nf = Float::from_i64(n as i64);
    let value = match far.near_limit {
        Limit::Zero => Ball::zero().add_rad(exp_mag(&far.log_deviation.mul(&nf, 64, Round::Up), ctx)),
        Limit::One => {
            // |(1 + d)^n - 1| <= e^{n D} - 1, which is <= 2 n D once n D <= 1.
            let d = far.deviation_mag(ctx);
            let nd = d.mul_f64(n as f64);
            let r = if nd <= Mag::from_f64(1.0) {
                nd.mul_2exp(1)
            } else {
                exp_mag(&nd.to_float(), ctx).add(Mag::from_f64(1.0))
            };
            Ball::one().add_rad(r)
        }
    };
    Ok(TermValue { value, regime: TermRegime::FarField(far.near_limit) })
}

/// `phi_n(r e^{i theta})`.
pub fn phi_n_eval(n: usize, radius: &Radius, theta: &RationalAngle, plan: &FunctionPlan, ctx: &PrecisionContext) -> Result<Ball> {
    Ok(phi_n_arc(n, radius, &AngleArc::point(theta.clone()), plan, ctx)?.value)
}

/// First level whose radius exceeds `r`; past the last level, the last one
/// while `r < e r_L` (every continuation has `r_{L+1} > e r_L`).
pub fn n_eval_for(radius: &Radius, plan: &FunctionPlan) -> Result<usize> {
    let l = match radius {
        Radius::Zero => return Ok(1),
        Radius::Log(l) => l,
    };
    if let Some(n) = first_level_above(plan, l) {
        return Ok(n);
    }
    let limit = plan.log_r_at(plan.levels).add_exact(&Float::one());
    if *l < limit {
        Ok(plan.levels)
    } else {
        Err(Error::TailUnavailable)
    }
}

fn tail_valid(radius: &Radius, plan: &FunctionPlan, n_eval: usize) -> bool {
    match radius {
        Radius::Zero => true,
        Radius::Log(l) => {
            if n_eval == plan.levels {
                *l < plan.log_r_at(n_eval).add_exact(&Float::one())
            } else {
                l < plan.log_r_at(n_eval)
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct PartialSum {
    pub value: Ball,
    /// Bound on `sum_{p > n_eval} |beta_p phi_p|`.
    pub tail: Float,
    pub n_eval: usize,
}

/// `sum_{n <= n_eval} beta_n phi_n` over the arc, with the geometric tail bound.
pub fn phi_partial(radius: &Radius, arc: &AngleArc, plan: &FunctionPlan, n_eval: usize, ctx: &PrecisionContext) -> Result<PartialSum> {
    check_level(n_eval, plan)?;
    if !tail_valid(radius, plan, n_eval) {
        return Err(Error::TailUnavailable);
    }
    let p = ctx.bits() + 16;
    let mut value = Ball::zero();
    for n in 1..=n_eval {
        let b = beta(n as u64)?;
        if b.is_zero() {
            continue;
        }
        let t = phi_n_arc(n, radius, arc, plan, ctx)?;
        value = value.add(&t.value.mul(&to_ball_rational(&b, p), p), p);
    }
    let tail = match radius {
        Radius::Zero => Float::zero(),
        Radius::Log(_) => Float::one().mul_2exp(-(n_eval as i64)),
    };
    Ok(PartialSum { value: value.round(ctx.bits()), tail, n_eval })
}

#[derive(Clone, Debug, PartialEq)]
pub enum RayTarget {
    Value(TargetSelection),
    /// `beta_n` real and at least 1/2 for every listed index.
    Infinity { indices: Vec<u64> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct RayPlan {
    pub target: RayTarget,
    pub bits: AddressBits,
    /// The deepest sector of the address.
    pub sector: SectorInterval,
    pub theta: RationalAngle,
    pub theta_width: RationalAngle,
}

impl RayPlan {
    pub fn from_bits(target: RayTarget, bits: AddressBits, plan: &FunctionPlan) -> Result<RayPlan> {
        let chain = address_to_sector(&bits, plan)?;
        let sector = chain.last().cloned().ok_or_else(|| Error::Precondition("empty address".into()))?;
        Ok(RayPlan { target, bits, theta: sector.midpoint(), theta_width: sector.width(), sector })
    }

    pub fn depth(&self) -> usize {
        self.bits.len()
    }

    pub fn arc(&self) -> AngleArc {
        AngleArc::of_sector(&self.sector)
    }

    pub fn in_a(&self, n: usize) -> bool {
        n >= 1 && n <= self.bits.len() && self.bits.0[n - 1]
    }

    pub fn omega_ball(&self, prec: u32) -> Option<Ball> {
        match &self.target {
            RayTarget::Value(s) => Some(match &s.omega {
                Omega::Exact(w) => to_ball_rational(w, prec),
                Omega::Approx { re, im, .. } => Ball::from_f64(*re, *im),
            }),
            RayTarget::Infinity { .. } => None,
        }
    }
}

/// The ray for a selection, addressed over every planned level.
pub fn ray_plan(selection: TargetSelection, plan: &FunctionPlan) -> Result<RayPlan> {
    if let Some(m) = selection.max_index() {
        if m > plan.levels as u64 {
            return Err(Error::DepthInsufficient(format!(
                "the selection uses index {m} but the plan has {} levels",
                plan.levels
            )));
        }
    }
    let bits = selection.bits_prefix(plan.levels);
    RayPlan::from_bits(RayTarget::Value(selection), bits, plan)
}

/// The ray along which `phi -> infinity`.
pub fn infinity_ray_plan(plan: &FunctionPlan) -> Result<RayPlan> {
    let l = plan.levels as u64;
    let indices: Vec<u64> = infinity_target(plan.levels / 4 + 1).into_iter().filter(|&n| n <= l).collect();
    let bits = AddressBits((1..=l).map(|j| indices.binary_search(&j).is_ok()).collect());
    RayPlan::from_bits(RayTarget::Infinity { indices }, bits, plan)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorBudget {
    pub evaluated_terms_radius: Float,
    pub truncation_tail: Float,
    /// Extra spread from covering the whole deepest sector instead of its midpoint.
    pub theta_width_slack: Float,
}

#[derive(Clone, Debug)]
pub struct RayPoint {
    pub n_eval: usize,
    /// Enclosure of the partial sum at the midpoint angle.
    pub phi: Ball,
    pub budget: ErrorBudget,
    /// Upper bound on `|phi - omega|` over the deepest sector; `None` for infinity rays.
    pub distance_to_target: Option<Float>,
    /// Lower bound on `Re phi` over the deepest sector.
    pub re_lower: Float,
}

#[derive(Clone, Debug)]
pub struct RayRow {
    pub radius: Radius,
    pub outcome: Result<RayPoint>,
}

/// `|mid|` rounded up, exact when the centre lies on an axis.
fn mid_abs_up(b: &Ball) -> Mag {
    if b.im.is_zero() {
        Mag::from_float(&b.re)
    } else if b.re.is_zero() {
        Mag::from_float(&b.im)
    } else {
        b.mid_abs_upper()
    }
}

fn mag_sub_up(a: Mag, b: Mag) -> Float {
    let d = a.to_float().sub(&b.to_float(), 64, Round::Up);
    if d.is_negative() { Float::zero() } else { d }
}

/// Certified rows of `phi` along the ray.
pub fn ray_table(ray: &RayPlan, plan: &FunctionPlan, grid: &[Radius], ctx: &PrecisionContext) -> Vec<RayRow> {
    grid.iter()
        .map(|r| RayRow { radius: r.clone(), outcome: ray_point(ray, plan, r, ctx) })
        .collect()
}

pub fn ray_point(ray: &RayPlan, plan: &FunctionPlan, radius: &Radius, ctx: &PrecisionContext) -> Result<RayPoint> {
    let n_eval = n_eval_for(radius, plan)?;
    let point = phi_partial(radius, &AngleArc::point(ray.theta.clone()), plan, n_eval, ctx)?;
    let arc = phi_partial(radius, &ray.arc(), plan, n_eval, ctx)?;
    let spread = arc.value.sub(&point.value, ctx.bits()).mid_abs_upper().add(arc.value.rad);
    let slack = mag_sub_up(spread, point.value.rad);
    let radius_total = point.value.rad.add(Mag::from_float(&slack)).add(Mag::from_float(&point.tail));
    let distance_to_target = ray.omega_ball(ctx.bits()).map(|w| {
        let d = mid_abs_up(&point.value.sub(&w, ctx.bits() + 16)).add(radius_total);
        d.to_float().round(REPORT_BITS, Round::Up)
    });
    let re_lower = point
        .value
        .re
        .sub(&radius_total.to_float(), 64.max(point.value.re.bits() as u32), Round::Down);
    Ok(RayPoint {
        n_eval,
        budget: ErrorBudget {
            evaluated_terms_radius: point.value.rad.to_float(),
            truncation_tail: point.tail.clone(),
            theta_width_slack: slack,
        },
        phi: point.value,
        distance_to_target,
        re_lower,
    })
}

/// `log r = a + (b - a) k / (steps - 1)`, `k = 0..steps`.
pub fn logr_grid(a: f64, b: f64, steps: usize) -> Result<Vec<Radius>> {
    if !(a.is_finite() && b.is_finite()) || steps == 0 || (steps == 1 && a != b) || a > b {
        return Err(Error::Invalid(format!("bad log r grid {a}:{b}:{steps}")));
    }
    (0..steps)
        .map(|k| {
            let t = if steps == 1 { a } else { a + (b - a) * k as f64 / (steps - 1) as f64 };
            Radius::log(t)
        })
        .collect()
}

/// `log r = 10^{j / per_decade}`, rounded to 53 bits.
pub fn decade_grid_point(j: u32, per_decade: u32, ctx: &PrecisionContext) -> Float {
    let p = 96;
    let ln10 = RBall::from_i64(10).log(ctx, p);
    let x = ln10.mul(&RBall::from_rational(&BigRational::new(j.into(), per_decade.into()), p), p);
    x.exp(ctx, p).mid.round(53, Round::Nearest)
}

/// The radius found by [`lemma1_radius`] and its five bounds:
/// `A` terms' distance from 1, the selection's distance from `omega`,
/// unplanned `A` terms, evaluated off-`A` terms, and the unplanned tail.
#[derive(Clone, Debug, PartialEq)]
pub struct Lemma1Bound {
    pub log_r: Float,
    pub n0: usize,
    pub pieces: [Float; 5],
}

impl Lemma1Bound {
    pub fn all_below(&self, eps: f64) -> bool {
        let e = Float::from_f64(eps).expect("finite");
        self.pieces.iter().all(|x| x.mul_int(&BigInt::from(5), 128, Round::Up) < e)
    }
}

/// The five pieces at one radius, evaluated over the whole deepest sector.
pub fn lemma1_pieces(ray: &RayPlan, plan: &FunctionPlan, log_r: &Float, ctx: &PrecisionContext) -> Result<[Float; 5]> {
    let sel = match &ray.target {
        RayTarget::Value(s) => s,
        RayTarget::Infinity { .. } => return Err(Error::Precondition("the infinity ray has no finite target".into())),
    };
    let l = plan.levels;
    let radius = Radius::Log(log_r.clone());
    if !tail_valid(&radius, plan, l) {
        return Err(Error::TailUnavailable);
    }
    let arc = ray.arc();
    let mut p1 = Mag::ZERO;
    let mut p4 = Mag::ZERO;
    for n in 1..=l {
        let b = beta(n as u64)?;
        if b.is_zero() {
            continue;
        }
        let bm = Mag::from_float(&rational_up(&b.l1()));
        let v = phi_n_arc(n, &radius, &arc, plan, ctx)?.value;
        if ray.in_a(n) {
            p1 = p1.add(bm.mul(v.sub(&Ball::one(), ctx.bits()).abs_upper()));
        } else {
            p4 = p4.add(bm.mul(v.abs_upper()));
        }
    }
    let p = ctx.bits() + 16;
    let omega = ray.omega_ball(p).expect("finite target");
    let p2 = to_ball_rational(&sel.achieved, p).sub(&omega, p).abs_upper();
    let unplanned: BigRational = sel
        .indices
        .iter()
        .filter(|&&n| n > l as u64)
        .map(|&n| beta(n).map(|b| b.l1()))
        .sum::<Result<BigRational>>()?;
    let p3 = rational_up(&(unplanned * BigRational::from_integer(2.into())));
    let p5 = Float::one().mul_2exp(-(l as i64));
    Ok([p1.to_float(), p2.to_float(), p3, p4.to_float(), p5])
}

/// Smallest point of the `log r` grid with every piece below `eps / 5`.
pub fn lemma1_radius(ray: &RayPlan, plan: &FunctionPlan, eps: f64, ctx: &PrecisionContext) -> Result<Lemma1Bound> {
    lemma1_radius_on_grid(ray, plan, eps, LEMMA1_POINTS_PER_DECADE, ctx)
}

pub fn lemma1_radius_on_grid(
    ray: &RayPlan,
    plan: &FunctionPlan,
    eps: f64,
    per_decade: u32,
    ctx: &PrecisionContext,
) -> Result<Lemma1Bound> {
    if !(eps.is_finite() && eps > 0.0) || per_decade == 0 {
        return Err(Error::Invalid(format!("epsilon must be positive and finite, got {eps}")));
    }
    let l = plan.levels;
    if 5.0 * 0.5f64.powi(l as i32) >= eps {
        let need = (5.0 / eps).log2().floor() as usize + 1;
        return Err(Error::DepthInsufficient(format!(
            "epsilon {eps} needs at least {need} levels, the plan has {l}"
        )));
    }
    let limit = plan.log_r_at(l).add_exact(&Float::one());
    for j in 0.. {
        let lr = decade_grid_point(j, per_decade, ctx);
        if lr >= limit {
            break;
        }
        let pieces = lemma1_pieces(ray, plan, &lr, ctx)?;
        let b = Lemma1Bound { log_r: lr, n0: l, pieces };
        if b.all_below(eps) {
            return Ok(b);
        }
    }
    Err(Error::ToleranceUnreachable(format!(
        "no radius below e r_{l} brings every piece under {eps}/5; a deeper plan is required"
    )))
}

/// `log |phi_q|` bound over `|z| = r`, from `rho = lambda_q r^{N_q}`:
/// `(4 rho)^q` when `rho <= 1`, else `((rho/sqrt(pi) + 1) e^{rho^2})^q`.
fn term_growth_bound(q: usize, log_r: &Float, plan: &FunctionPlan, ctx: &PrecisionContext) -> TowerMag {
    let p = 96;
    let u = log_w(q, log_r, plan, ctx).upper();
    let qb = BigInt::from(q);
    if !u.is_positive() {
        let l = RBall::exact(u).add(&ln4(ctx, p), p).mul_int(&qb, p).upper();
        return TowerMag::from_log(&l);
    }
    if u.to_f64() <= 20.0 {
        // log((rho/sqrt(pi) + 1) e^{rho^2}) <= rho^2 + rho
        let rho = RBall::exact(u).exp(ctx, p);
        let l = rho.sqr(p).add(&rho, p).mul_int(&qb, p).upper();
        return TowerMag::from_log(&l);
    }
    // log log <= log q + 2u + log(1 + e^{-u}) <= log q + 2u + 2^-20
    let ll = RBall::from_i64(q as i64)
        .log(ctx, p)
        .add(&RBall::exact(u.mul_2exp(1)), p.max(u.bits() as u32 + 8))
        .add(&RBall::exact(Float::one().mul_2exp(-20)), p.max(u.bits() as u32 + 8))
        .upper();
    TowerMag::from_loglog(&ll)
}

/// Upper bound on `M(r, phi)` as a tower magnitude.
pub fn maxmod_upper(log_r: &Float, plan: &FunctionPlan, ctx: &PrecisionContext) -> Result<TowerMag> {
    let l = plan.levels;
    if *log_r >= plan.log_r_at(l).add_exact(&Float::one()) {
        return Err(Error::TailUnavailable);
    }
    let mut parts: Vec<TowerMag> = (1..=l).map(|q| term_growth_bound(q, log_r, plan, ctx)).collect();
    parts.push(TowerMag::from_f64(0.5f64.powi(l as i32)));
    Ok(tower_sum_upper(&parts))
}

#[derive(Clone, Debug, PartialEq)]
pub struct GrowthPoint {
    /// Upper bound on `log log M(r, phi)`; `None` when `M <= e`.
    pub loglog_bound: Option<Float>,
    /// `G(r) log r`, rounded down.
    pub budget: Float,
    pub pass: bool,
}

#[derive(Clone, Debug)]
pub struct GrowthRow {
    pub log_r: Float,
    pub outcome: Result<GrowthPoint>,
}

pub fn growth_point(plan: &FunctionPlan, log_r: &Float, ctx: &PrecisionContext) -> Result<GrowthPoint> {
    let p = 96;
    if !log_r.is_positive() {
        return Err(Error::Precondition("growth rows need log r > 0".into()));
    }
    let bound = maxmod_upper(log_r, plan, ctx)?;
    let g = plan.growth.log_eval(&RBall::exact(log_r.clone()), ctx, p)?.exp(ctx, p).lower();
    let budget = g.mul(log_r, p, Round::Down);
    let loglog_bound = match tower_loglog(&bound) {
        Ok(b) => Some(b.upper()),
        Err(Error::Domain(_)) => None,
        Err(e) => return Err(e),
    };
    let pass = loglog_bound.as_ref().is_none_or(|b| *b < budget);
    Ok(GrowthPoint { loglog_bound, budget, pass })
}

/// Compares `log log M(r, phi)` with `G(r) log r` along the grid.
pub fn growth_check(plan: &FunctionPlan, grid: &[Float], ctx: &PrecisionContext) -> Vec<GrowthRow> {
    grid.iter()
        .map(|l| GrowthRow { log_r: l.clone(), outcome: growth_point(plan, l, ctx) })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct InfinityCheck {
    pub log_r: Float,
    /// Last index of the `A` prefix whose coefficients sum past `4M`.
    pub n0: usize,
    pub prefix_sum: BigRational,
    /// Lower bound on `Re sum_{n in A, n <= n0} beta_n phi_n`.
    pub evaluated_re_lower: Float,
    /// Bound on the off-`A` terms and the unplanned tail.
    pub deduction: Float,
    pub re_lower: Float,
}

/// Certifies `Re phi > M` at one radius on the infinity ray.
///
/// `A` terms past `n0` have `Re beta_n phi_n >= 0` by the `H` certificates;
/// off-`A` terms are at most `(3/4)^n` by the `K` certificate.
pub fn infinity_ray_check(m: f64, plan: &FunctionPlan, ctx: &PrecisionContext) -> Result<InfinityCheck> {
    if !(m.is_finite() && m > 3.0) {
        return Err(Error::Precondition(format!("M must exceed 3, got {m}")));
    }
    let ray = infinity_ray_plan(plan)?;
    let indices = match &ray.target {
        RayTarget::Infinity { indices } => indices.clone(),
        RayTarget::Value(_) => unreachable!("infinity ray"),
    };
    let four_m = BigRational::from_float(4.0 * m).ok_or_else(|| Error::Invalid("M".into()))?;
    let mut sum = BigRational::zero();
    let mut n0 = None;
    for &n in &indices {
        let b = beta(n)?;
        if !b.im.is_zero() || b.re < BigRational::new(1.into(), 2.into()) {
            return Err(Error::Construction(format!("beta_{n} is not real and at least 1/2")));
        }
        sum += b.re;
        if sum > four_m {
            n0 = Some(n as usize);
            break;
        }
    }
    let n0 = n0.ok_or_else(|| {
        Error::DepthInsufficient(format!("the A terms within {} levels sum to {} <= 4M", plan.levels, sum))
    })?;
    let log_r = plan.log_r_at(n0).add_exact(&Float::one().mul_2exp(-1));
    let radius = Radius::Log(log_r.clone());
    let arc = ray.arc();
    let p = ctx.bits() + 16;
    let mut s = Ball::zero();
    for &n in indices.iter().take_while(|&&n| n as usize <= n0) {
        let b = beta(n)?;
        let v = phi_n_arc(n as usize, &radius, &arc, plan, ctx)?.value;
        s = s.add(&v.mul(&to_ball_rational(&b, p), p), p);
    }
    let evaluated_re_lower = s.re_ball().lower();
    let mut deduction = BigRational::zero();
    let three_quarters = BigRational::new(3.into(), 4.into());
    let mut pw = BigRational::from_integer(1.into());
    for n in 1..=plan.levels {
        pw *= &three_quarters;
        if !ray.in_a(n) && !beta(n as u64)?.is_zero() {
            deduction += &pw;
        }
    }
    deduction += BigRational::new(1.into(), BigInt::from(1) << plan.levels);
    let deduction = rational_up(&deduction);
    let re_lower = evaluated_re_lower.sub(&deduction, 64.max(evaluated_re_lower.bits() as u32), Round::Down);
    Ok(InfinityCheck { log_r, n0, prefix_sum: sum, evaluated_re_lower, deduction, re_lower })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::growth::GrowthSpec;
    use crate::plan::build_plan;
    use crate::targets::select_target;

    fn ctx() -> PrecisionContext {
        PrecisionContext::new(128).unwrap()
    }

    fn desk(ctx: &PrecisionContext) -> FunctionPlan {
        let g = GrowthSpec::power(BigRational::from_integer(1.into()), BigRational::from_integer(1.into())).unwrap();
        build_plan(&g, 4, ctx).unwrap()
    }

    fn half_ray(plan: &FunctionPlan) -> RayPlan {
        let omega = GaussianRational::parse("1/2").unwrap();
        ray_plan(select_target(&omega).unwrap(), plan).unwrap()
    }

    #[test]
    fn origin_is_zero() {
        let c = ctx();
        let plan = desk(&c);
        let ray = half_ray(&plan);
        let s = phi_partial(&Radius::Zero, &ray.arc(), &plan, 4, &c).unwrap();
        assert!(s.value.abs_upper().is_zero());
        assert!(s.tail.is_zero());
        let row = ray_point(&ray, &plan, &Radius::Zero, &c).unwrap();
        assert_eq!(row.distance_to_target.unwrap(), Float::one().mul_2exp(-1));
    }

    #[test]
    fn terms_below_their_radius_are_small() {
        let c = ctx();
        let plan = desk(&c);
        let ray = half_ray(&plan);
        for m in 1..=4 {
            let lo = if m == 1 { 0.0 } else { plan.log_r_at(m - 1).to_f64() };
            let hi = plan.log_r_at(m).to_f64();
            for k in 0..5 {
                let lr = Radius::log(lo + (hi - lo) * k as f64 / 5.0).unwrap();
                for n in m..=4 {
                    let v = phi_n_arc(n, &lr, &ray.arc(), &plan, &c).unwrap().value;
                    assert!(v.abs_upper() < Mag::from_f64(0.5f64.powi(n as i32)), "n={n} m={m} k={k}");
                }
            }
        }
    }

    #[test]
    fn tail_requires_radius_below_level() {
        let c = ctx();
        let plan = desk(&c);
        let past = Radius::Log(plan.log_r_at(2).clone());
        let arc = AngleArc::point(RationalAngle::zero());
        assert_eq!(phi_partial(&past, &arc, &plan, 2, &c).unwrap_err(), Error::TailUnavailable);
        assert_eq!(n_eval_for(&past, &plan).unwrap(), 3);
        let far = Radius::Log(plan.log_r_at(4).add_exact(&Float::from_i64(2)));
        assert_eq!(n_eval_for(&far, &plan).unwrap_err(), Error::TailUnavailable);
    }

    #[test]
    fn ray_table_tends_to_target() {
        let c = ctx();
        let plan = desk(&c);
        let ray = half_ray(&plan);
        let top = plan.log_r_at(4).to_f64() - 0.05;
        let rows = ray_table(&ray, &plan, &logr_grid(8.0, top, 5).unwrap(), &c);
        for row in &rows {
            let pt = row.outcome.as_ref().unwrap();
            assert_eq!(pt.n_eval, 4);
            assert!(pt.distance_to_target.as_ref().unwrap().to_f64() < 0.07);
        }
    }

    #[test]
    fn maxmod_below_first_radius() {
        let c = ctx();
        let plan = desk(&c);
        let b = maxmod_upper(&Float::from_f64(1.5).unwrap(), &plan, &c).unwrap();
        assert!(b.to_f64() <= 1.25);
    }

    #[test]
    fn growth_detects_inflated_lambda() {
        let c = ctx();
        let plan = desk(&c);
        let grid: Vec<Float> = (0..12).map(|k| Float::from_f64(2.0 + k as f64 * 0.8).unwrap()).collect();
        assert!(growth_check(&plan, &grid, &c).iter().all(|r| r.outcome.as_ref().unwrap().pass));
        let mut bad = plan.clone();
        let shift = RBall::from_i64(10).log(&c, 128).mul_int(&BigInt::from(100), 128).upper();
        bad.log_lambda[1] = bad.log_lambda[1].add(&shift, 256, Round::Up);
        assert!(growth_check(&bad, &grid, &c).iter().any(|r| !r.outcome.as_ref().unwrap().pass));
    }

    #[test]
    fn lemma1_on_desk_plan() {
        let c = ctx();
        let plan = desk(&c);
        let ray = half_ray(&plan);
        let b = lemma1_radius(&ray, &plan, 0.5, &c).unwrap();
        assert!(b.all_below(0.5));
        assert!(matches!(lemma1_radius(&ray, &plan, 0.2, &c), Err(Error::DepthInsufficient(_))));
        let wide = lemma1_radius(&ray, &plan, 10.0, &c).unwrap();
        assert_eq!(wide.log_r, decade_grid_point(0, LEMMA1_POINTS_PER_DECADE, &c));
    }
}
