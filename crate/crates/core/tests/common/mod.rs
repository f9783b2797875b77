//! Double-precision reference routines shared by the integration tests.

#![allow(dead_code)]

use asymval_core::numerics::{Ball, Float, PrecisionContext};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn g7k15<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> (Complex64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        k += s * WGK[j];
        if j % 2 == 1 {
            g += s * WG[j / 2];
        }
    }
    (k * h, ((k - g) * h).norm())
}

/// Adaptive Gauss-Kronrod 7-15 on `[a, b]` with bisection.
pub fn gk_adaptive<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64, tol: f64) -> Complex64 {
    let mut stack = vec![(a, b, tol)];
    let mut total = Complex64::new(0.0, 0.0);
    while let Some((lo, hi, t)) = stack.pop() {
        let (v, e) = g7k15(f, lo, hi);
        if e <= t || hi - lo < 1e-12 {
            total += v;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((lo, mid, t / 2.0));
            stack.push((mid, hi, t / 2.0));
        }
    }
    total
}

/// `int_0^z e^{-w^2} dw` in double precision.
pub fn erf_integral_f64(z: Complex64) -> Complex64 {
    let f = |t: f64| (-(z * z) * t * t).exp();
    let sup = (-(z * z).re).exp().max(1.0);
    z * gk_adaptive(&f, 0.0, 1.0, 1e-14 * sup)
}

/// `phi0(z)` in double precision.
pub fn phi0_f64(z: Complex64) -> Complex64 {
    let inv_sqrt_pi = 1.0 / std::f64::consts::PI.sqrt();
    erf_integral_f64(z) * inv_sqrt_pi + (Complex64::new(1.0, 0.0) - (-(z * z)).exp()) * 0.5
}

pub fn ctx(bits: u32) -> PrecisionContext {
    PrecisionContext::new(bits).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn ball(z: Complex64) -> Ball {
    Ball::from_f64(z.re, z.im)
}

pub fn to_c64(b: &Ball) -> Complex64 {
    let (x, y) = b.to_f64();
    Complex64::new(x, y)
}

pub fn float(x: f64) -> Float {
    Float::from_f64(x).unwrap()
}

/// `phi0(z)` assembled from the tanh-sinh integral reference.
pub fn phi0_from_oracle(z: &Ball, tol: f64, ctx: &PrecisionContext) -> Ball {
    let p = ctx.bits() + 64;
    let i = asymval_core::oracle::erf_integral_oracle(z, tol).unwrap();
    let e = z.sqr(p).neg().exp(ctx, p);
    let half = Ball::one().sub(&e, p).mul_2exp(-1);
    i.mul_real(&ctx.inv_sqrt_pi(p), p).add(&half, p)
}
