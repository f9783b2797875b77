//! Certified sector constants.
//!
//! `certify_k` shows `|phi0| < 3/4` on a sector about the negative axis.
//! `certify_h` shows `|phi0| <= 2^(1/n)` and `|Arg phi0| < pi/(4n)` on a
//! sector about the positive axis, through a bound `kappa` on
//! `|z phi0'(z) / phi0(z)|`: integrating along arcs gives
//! `|log phi0(r e^{it}) - log phi0(r)| <= kappa |t|`, and `0 < phi0(r) < 1`.
//!
//! Both near fields are covered by polar cells. Each cell is checked at its
//! center with a Lipschitz fill-in and split until the bound fits.

use std::collections::VecDeque;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::numerics::{Ball, Float, PrecisionContext, RBall, RationalAngle, Round};
use crate::phi0::{far_log_deviation, phi0_deriv, phi0_eval, taylor_coefficient, FAR_RADIUS, TAYLOR_RADIUS};

/// Sup bound required on the sector about the negative axis.
pub const K_TARGET: f64 = 0.75;
/// Refinement target for `kappa` in sweeps shared across levels.
pub const KAPPA_TARGET: f64 = 1.5;
/// Initial radial width of near-field cells.
pub const RADIAL_STEP: f64 = 0.25;
const MIN_RADIAL: f64 = 1.0 / 65536.0;
const MAX_CELLS: usize = 200_000;
/// Starting half-angle of the K search, as a multiple of pi.
pub const K_START: (i64, i64) = (511, 4096);
/// Base exponent of the dyadic denominators used for `alpha_n / 2`.
pub const DYADIC_BASE: u32 = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CertKind {
    K,
    H(u32),
}

impl fmt::Display for CertKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CertKind::K => write!(f, "K_BOUND"),
            CertKind::H(n) => write!(f, "H_BOUND({n})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CertStatus {
    Certified,
    Failed(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SectorCertificate {
    pub kind: CertKind,
    pub half_angle: RationalAngle,
    pub split_radius: Float,
    /// Smallest radial cell width used in the near field.
    pub grid_step: Float,
    pub sup_mod_bound: Float,
    pub sup_arg_bound: Option<Float>,
    pub status: CertStatus,
}

impl SectorCertificate {
    pub fn is_certified(&self) -> bool {
        self.status == CertStatus::Certified
    }

    /// Re-checks that a certified record's bounds meet the targets.
    pub fn check_bounds(&self, ctx: &PrecisionContext) -> bool {
        if !self.half_angle.q().is_positive_rational() {
            return false;
        }
        if !self.is_certified() {
            return true;
        }
        let p = 128;
        match self.kind {
            CertKind::K => self.sup_mod_bound < Float::from_f64(K_TARGET).expect("finite"),
            CertKind::H(n) => {
                let Some(arg) = &self.sup_arg_bound else { return false };
                if !self.sup_mod_bound.is_positive() {
                    return false;
                }
                let nn = RBall::from_i64(n as i64);
                let lhs = RBall::exact(self.sup_mod_bound.clone()).log(ctx, p).mul(&nn, p);
                let mod_ok = lhs.upper() <= ctx.ln2(p).lower();
                let arg_ok = RBall::exact(arg.clone()).mul(&nn, p).mul_2exp(2).upper() < ctx.pi(p).lower();
                mod_ok && arg_ok
            }
        }
    }
}

trait PositiveRational {
    fn is_positive_rational(&self) -> bool;
}

impl PositiveRational for BigRational {
    fn is_positive_rational(&self) -> bool {
        *self > BigRational::zero()
    }
}

fn ctx64() -> PrecisionContext {
    PrecisionContext::new(64).expect("valid precision")
}

fn exp_up(x: f64, c: &PrecisionContext) -> f64 {
    RBall::from_f64(x).exp(c, 64).upper().to_f64_up()
}

fn cos_down(x: f64, c: &PrecisionContext) -> f64 {
    RBall::from_f64(x).cos(c, 64).lower().to_f64_down()
}

fn inv_sqrt_pi_up(c: &PrecisionContext) -> f64 {
    c.inv_sqrt_pi(64).upper().to_f64_up()
}

/// Checks `0 < q < 1/8` (the half-angle in units of pi).
fn check_half_angle(a: &RationalAngle) -> Result<()> {
    let eighth = BigRational::new(BigInt::one(), BigInt::from(8));
    if !a.q().is_positive_rational() {
        return Err(Error::Precondition("half-angle must be positive".into()));
    }
    if *a.q() >= eighth {
        return Err(Error::Precondition("half-angle must be below pi/8".into()));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug)]
struct Cell {
    r0: f64,
    r1: f64,
    t0: f64,
    t1: f64,
}

impl Cell {
    fn split(self) -> [Cell; 2] {
        let radial = (self.r1 - self.r0) >= self.r1 * (self.t1 - self.t0);
        if radial {
            let m = 0.5 * (self.r0 + self.r1);
            [Cell { r1: m, ..self }, Cell { r0: m, ..self }]
        } else {
            let m = 0.5 * (self.t0 + self.t1);
            [Cell { t1: m, ..self }, Cell { t0: m, ..self }]
        }
    }

    /// Distance bound from the (rounded) center to any point of the cell.
    fn rho(&self) -> f64 {
        ((self.r1 - self.r0) * 0.5 + self.r1 * (self.t1 - self.t0) * 0.5 + 1e-14 * self.r1).next_up()
    }

    fn center(&self, mirror: bool) -> Ball {
        let rm = 0.5 * (self.r0 + self.r1);
        let tm = 0.5 * (self.t0 + self.t1);
        let (x, y) = (rm * tm.cos(), rm * tm.sin());
        if mirror { Ball::from_f64(-x, y) } else { Ball::from_f64(x, y) }
    }
}

/// Initial radial partition of `[r_lo, FAR_RADIUS]` over angles `[0, t]`.
fn initial_cells(r_lo: f64, t: f64) -> VecDeque<Cell> {
    let mut out = VecDeque::new();
    let mut r = r_lo;
    while r < FAR_RADIUS {
        let next = ((r / RADIAL_STEP).floor() + 1.0) * RADIAL_STEP;
        let next = next.min(FAR_RADIUS);
        out.push_back(Cell { r0: r, r1: next, t0: 0.0, t1: t });
        r = next;
    }
    out
}

struct Sweep {
    sup: f64,
    min_step: f64,
    cells: usize,
}

/// Runs the cell refinement. `eval` returns `(center_value, slack)` for an
/// accepted cell or `None` when the cell must be split; a center value at or
/// above `target` fails at once.
fn refine<F>(mut queue: VecDeque<Cell>, target: f64, mut eval: F) -> std::result::Result<Sweep, String>
where
    F: FnMut(&Cell) -> (f64, Option<f64>),
{
    let mut sweep = Sweep { sup: 0.0, min_step: f64::INFINITY, cells: 0 };
    while let Some(cell) = queue.pop_front() {
        sweep.cells += 1;
        if sweep.cells > MAX_CELLS {
            return Err(format!("cell budget exhausted near r={:.6}", cell.r0));
        }
        let (center, slack) = eval(&cell);
        if center >= target {
            return Err(format!("bound {center:.6} at r in [{:.6}, {:.6}], t in [{:.6}, {:.6}]", cell.r0, cell.r1, cell.t0, cell.t1));
        }
        match slack {
            Some(s) if s <= (target - center) * 0.5 => {
                sweep.sup = sweep.sup.max((center + s).next_up());
                sweep.min_step = sweep.min_step.min(cell.r1 - cell.r0);
            }
            _ => {
                if cell.r1 - cell.r0 < MIN_RADIAL {
                    return Err(format!("refinement limit at r={:.6}, t={:.6}", cell.r0, cell.t0));
                }
                queue.extend(cell.split());
            }
        }
    }
    Ok(sweep)
}

fn float_up(x: f64) -> Float {
    Float::from_f64(x).expect("finite bound")
}

/// Certifies `|phi0| < 3/4` on `{r >= 0, |theta - pi| <= a}`.
pub fn certify_k(a: &RationalAngle, ctx: &PrecisionContext) -> Result<SectorCertificate> {
    check_half_angle(a)?;
    let c64 = ctx64();
    let a_up = a.to_ball(ctx, 128).upper();
    let t = a_up.to_f64_up();
    let isp = inv_sqrt_pi_up(&c64);
    let c2a = cos_down(2.0 * t, &c64);

    let mut cert = SectorCertificate {
        kind: CertKind::K,
        half_angle: a.clone(),
        split_radius: float_up(FAR_RADIUS),
        grid_step: float_up(RADIAL_STEP),
        sup_mod_bound: Float::zero(),
        sup_arg_bound: None,
        status: CertStatus::Certified,
    };

    // Far field: the deviation from 0 is largest at r = R*, beta = a.
    let ln_rs = RBall::from_f64(FAR_RADIUS).log(ctx, 128).lower();
    let far = far_log_deviation(&ln_rs, &a_up, ctx)?;
    let far = RBall::exact(far).exp(ctx, 64).upper().to_f64_up();
    if far >= K_TARGET {
        cert.status = CertStatus::Failed(format!("far field: bound {far:.6} at r = {FAR_RADIUS}"));
        return Ok(cert);
    }

    // Near field, upper half by conjugate symmetry; |phi0'| <= e^{-Re z^2}(|z| + 1/sqrt(pi)).
    let eval = |cell: &Cell| {
        let z = cell.center(true);
        let v = match phi0_eval(&z, ctx) {
            Ok(v) => v.value,
            Err(_) => return (f64::INFINITY, None),
        };
        let center = v.abs_upper().to_f64_up();
        let decay = exp_up(-(cell.r0 * cell.r0 * c2a), &c64);
        let d1 = (decay * (cell.r1 + isp).next_up()).next_up();
        (center, Some((d1 * cell.rho()).next_up()))
    };
    match refine(initial_cells(0.0, t), K_TARGET, eval) {
        Ok(s) => {
            cert.sup_mod_bound = float_up(s.sup.max(far));
            cert.grid_step = float_up(s.min_step);
        }
        Err(reason) => cert.status = CertStatus::Failed(format!("near field: {reason}")),
    }
    Ok(cert)
}

/// A bound on `kappa = sup |z phi0'(z) / phi0(z)|` over `|theta| <= half_angle`.
#[derive(Clone, Debug, PartialEq)]
pub struct HSweep {
    pub half_angle: RationalAngle,
    pub kappa: Float,
    pub tiny_kappa: Float,
    pub mid_kappa: Float,
    pub far_kappa: Float,
    pub grid_step: Float,
    pub cells: usize,
    /// Failure location if the mid zone could not be covered.
    pub failure: Option<String>,
}

/// Bound on `|z phi0'/phi0|` over `|z| <= 1/8`.
///
/// With `phi0(z) = (z/sqrt(pi))(1 + u(z))`, the quotient is
/// `1 + z u'(z) / (1 + u(z))`.
fn tiny_kappa(ctx: &PrecisionContext) -> f64 {
    let rho = TAYLOR_RADIUS;
    let sp = ctx.sqrt_pi(64).upper().to_f64_up();
    let terms = 40u32;
    let (mut u, mut du) = (0.0f64, 0.0f64);
    for j in 2..=terms {
        let cj = taylor_coefficient(j, ctx, 64).mag().to_f64_up();
        let p = rho.powi(j as i32 - 1).next_up();
        u = (u + (cj * p).next_up()).next_up();
        du = (du + ((j - 1) as f64 * cj * p).next_up()).next_up();
    }
    // Tail with |c_j| <= 1: sum_{m >= terms} rho^m and sum m rho^m.
    let pt = rho.powi(terms as i32);
    let tail = (pt / (1.0 - rho)).next_up();
    let dtail = (pt * (terms as f64 + 1.0) / ((1.0 - rho) * (1.0 - rho))).next_up();
    u = ((u + tail) * sp).next_up();
    du = ((du + dtail) * sp).next_up();
    (1.0 + (du / (1.0 - u).next_down()).next_up()).next_up()
}

/// Bound on the quotient for `|z| >= R*` inside the cone `|theta| <= t`.
fn far_kappa(t_up: &Float, ctx: &PrecisionContext) -> Result<f64> {
    let c64 = ctx64();
    let rs = FAR_RADIUS;
    let ln_rs = RBall::from_f64(rs).log(ctx, 128).lower();
    let d = RBall::exact(far_log_deviation(&ln_rs, t_up, ctx)?).exp(ctx, 64).upper().to_f64_up();
    if d >= 1.0 {
        return Err(Error::CertificationFailed("far-field deviation too large".into()));
    }
    let c2t = cos_down(2.0 * t_up.to_f64_up(), &c64);
    // r (r + 1/sqrt(pi)) e^{-r^2 cos 2t} decreases for r >= R*.
    let top = (rs * (rs + inv_sqrt_pi_up(&c64)).next_up()).next_up();
    let v = (top * exp_up(-(rs * rs * c2t), &c64)).next_up();
    Ok((v / (1.0 - d).next_down()).next_up())
}

/// Bounds `kappa` over `|theta| <= h`, refining mid-zone cells until each
/// is below `target`.
pub fn sweep_kappa(h: &RationalAngle, target: f64, ctx: &PrecisionContext) -> Result<HSweep> {
    check_half_angle(h)?;
    let c64 = ctx64();
    let h_up = h.to_ball(ctx, 128).upper();
    let t = h_up.to_f64_up();
    let isp = inv_sqrt_pi_up(&c64);
    let tiny = tiny_kappa(ctx);
    let far = far_kappa(&h_up, ctx)?;

    let eval = |cell: &Cell| {
        let z = cell.center(false);
        let (v, d) = match phi0_eval(&z, ctx) {
            Ok(v) => (v.value, phi0_deriv(&z, ctx)),
            Err(_) => return (f64::INFINITY, None),
        };
        let q = z.mul(&d, 128).div(&v, 128);
        let center = q.abs_upper().to_f64_up();
        let rho = cell.rho();
        let c2 = cos_down(2.0 * cell.t1, &c64);
        let decay = exp_up(-(cell.r0 * cell.r0 * c2), &c64);
        let r1 = cell.r1;
        let d1 = (decay * (r1 + isp).next_up()).next_up();
        let d2 = (decay * (1.0 + 2.0 * r1 * (r1 + isp)).next_up()).next_up();
        let m = (v.abs_lower().to_f64_down() - (d1 * rho).next_up()).next_down();
        if m <= 0.0 {
            return (center, None);
        }
        // |Q'| <= |phi0'|/|phi0| + |z||phi0''|/|phi0| + |z||phi0'|^2/|phi0|^2
        let qp = ((d1 + r1 * d2).next_up() / m).next_up() + (r1 * d1 * d1 / (m * m)).next_up();
        (center, Some((qp.next_up() * rho).next_up()))
    };
    let (mid, grid_step, cells, failure) = match refine(initial_cells(TAYLOR_RADIUS, t), target, eval) {
        Ok(s) => (s.sup, s.min_step, s.cells, None),
        Err(reason) => (f64::INFINITY, RADIAL_STEP, 0, Some(reason)),
    };
    let kappa = tiny.max(mid).max(far);
    let to_float = |x: f64| if x.is_finite() { float_up(x) } else { float_up(f64::MAX) };
    Ok(HSweep {
        half_angle: h.clone(),
        kappa: to_float(kappa),
        tiny_kappa: float_up(tiny),
        mid_kappa: to_float(mid),
        far_kappa: float_up(far),
        grid_step: float_up(grid_step),
        cells,
        failure,
    })
}

/// The H certificate for level `n` and half-angle `h`, using a sweep over
/// a sector containing `|theta| <= h`.
pub fn certificate_from_sweep(
    n: u32,
    h: &RationalAngle,
    sweep: &HSweep,
    ctx: &PrecisionContext,
) -> Result<SectorCertificate> {
    check_h_preconditions(n, h)?;
    if h.q() > sweep.half_angle.q() {
        return Err(Error::Precondition("sweep does not cover the requested sector".into()));
    }
    let p = 128;
    let mut cert = SectorCertificate {
        kind: CertKind::H(n),
        half_angle: h.clone(),
        split_radius: float_up(FAR_RADIUS),
        grid_step: sweep.grid_step.clone(),
        sup_mod_bound: Float::zero(),
        sup_arg_bound: None,
        status: CertStatus::Certified,
    };
    if let Some(f) = &sweep.failure {
        cert.status = CertStatus::Failed(format!("mid zone: {f}"));
        return Ok(cert);
    }
    let arg = RBall::exact(sweep.kappa.clone()).mul(&h.to_ball(ctx, p), p).upper().round(64, Round::Up);
    let modulus = RBall::exact(arg.clone()).exp(ctx, p).upper().round(64, Round::Up);
    cert.sup_arg_bound = Some(arg);
    cert.sup_mod_bound = modulus;
    if !cert.check_bounds(ctx) {
        let z = format!(
            "kappa {:.6} (tiny {:.6}, mid {:.6}, far {:.3e}) times half-angle exceeds the level-{n} budget",
            sweep.kappa.to_f64(),
            sweep.tiny_kappa.to_f64(),
            sweep.mid_kappa.to_f64(),
            sweep.far_kappa.to_f64()
        );
        cert.status = CertStatus::Failed(z);
    }
    Ok(cert)
}

fn check_h_preconditions(n: u32, h: &RationalAngle) -> Result<()> {
    if n == 0 {
        return Err(Error::Precondition("level must be positive".into()));
    }
    check_half_angle(h)?;
    let cap = BigRational::new(BigInt::one(), BigInt::from(8u64 * n as u64));
    if *h.q() >= cap {
        return Err(Error::Precondition(format!("half-angle must be below pi/{}", 8 * n)));
    }
    Ok(())
}

/// Certifies both level-`n` bounds on `{|theta| <= h}`.
pub fn certify_h(n: u32, h: &RationalAngle, ctx: &PrecisionContext) -> Result<SectorCertificate> {
    check_h_preconditions(n, h)?;
    let budget = std::f64::consts::LN_2.min(std::f64::consts::FRAC_PI_4) / (n as f64 * h.to_f64());
    let target = KAPPA_TARGET.min(0.999 * budget);
    let sweep = sweep_kappa(h, target, ctx)?;
    certificate_from_sweep(n, h, &sweep, ctx)
}

/// Output of the alpha search.
#[derive(Clone, Debug)]
pub struct AlphaSearch {
    /// Full opening of the K sector.
    pub alpha: RationalAngle,
    pub k_certificate: SectorCertificate,
    /// `alpha_1 > alpha_2 > ...`, full openings.
    pub alphas: Vec<RationalAngle>,
    /// One H certificate per level, for `alpha_n / 2`.
    pub h_certificates: Vec<SectorCertificate>,
}

impl AlphaSearch {
    /// The K certificate followed by the H certificates.
    pub fn certificates(&self) -> Vec<SectorCertificate> {
        let mut out = vec![self.k_certificate.clone()];
        out.extend(self.h_certificates.iter().cloned());
        out
    }
}

/// Exponent `j_n` of the dyadic denominator at level `n`.
pub fn dyadic_exponent(n: u32) -> u32 {
    let ceil_log2 = if n <= 1 { 0 } else { 32 - (n - 1).leading_zeros() };
    DYADIC_BASE + 2 * ceil_log2
}

/// Largest `d / 2^j` strictly below `bound`.
fn dyadic_below(bound: &BigRational, j: u32) -> BigInt {
    let scale = BigInt::one() << j;
    let x = bound * BigRational::from_integer(scale);
    let c = x.ceil().to_integer();
    c - 1
}

/// Finds the K opening and certified `alpha_1 > ... > alpha_{n_max}`.
pub fn find_alphas(n_max: u32, ctx: &PrecisionContext) -> Result<AlphaSearch> {
    if n_max == 0 {
        return Err(Error::Precondition("need at least one level".into()));
    }
    let floor = BigRational::new(BigInt::one(), BigInt::one() << 20);
    let mut a = RationalAngle::from_ratio(K_START.0, K_START.1);
    let k_certificate = loop {
        let cert = certify_k(&a, ctx)?;
        if cert.is_certified() {
            break cert;
        }
        a = a.half();
        if *a.q() < floor {
            return Err(Error::SearchExhausted("no K half-angle certified".into()));
        }
    };
    let alpha = a.mul_int(&BigInt::from(2));

    let mut alphas: Vec<RationalAngle> = Vec::new();
    let mut certs = Vec::new();
    let mut sweep: Option<HSweep> = None;
    for n in 1..=n_max {
        let mut bound = BigRational::new(BigInt::one(), BigInt::from(8u64 * n as u64));
        bound = bound.min(a.q().clone());
        if let Some(prev) = alphas.last() {
            bound = bound.min(prev.half().q().clone());
        }
        let j = dyadic_exponent(n);
        let mut d = dyadic_below(&bound, j);
        let cert = loop {
            if d < BigInt::one() {
                return Err(Error::SearchExhausted(format!("no certified half-angle at level {n}")));
            }
            let h = RationalAngle::new(BigRational::new(d.clone(), BigInt::one() << j));
            let covering = match &sweep {
                Some(s) if h.q() <= s.half_angle.q() && s.failure.is_none() => s.clone(),
                _ => {
                    let s = sweep_kappa(&h, KAPPA_TARGET, ctx)?;
                    sweep = Some(s.clone());
                    s
                }
            };
            let cert = certificate_from_sweep(n, &h, &covering, ctx)?;
            if cert.is_certified() {
                break cert;
            }
            d /= 2;
        };
        alphas.push(cert.half_angle.mul_int(&BigInt::from(2)));
        certs.push(cert);
    }
    Ok(AlphaSearch { alpha, k_certificate, alphas, h_certificates: certs })
}
