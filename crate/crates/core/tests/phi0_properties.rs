mod common;

use asymval_core::numerics::{Ball, Float, Mag, RBall};
use asymval_core::phi0::{far_log_deviation, phi0_deriv, phi0_eval, phi0_second_deriv, Regime};
use common::*;
use num_complex::Complex64;
use rand::Rng;

fn random_disc(rng: &mut impl Rng, r_max: f64) -> Complex64 {
    let r = r_max * rng.random::<f64>().sqrt();
    let t = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
    Complex64::from_polar(r, t)
}

#[test]
fn agrees_with_quadrature_reference() {
    let c = ctx(128);
    let mut rng = rng(11);
    for _ in 0..60 {
        let z = ball(random_disc(&mut rng, 10.0));
        let main = phi0_eval(&z, &c).unwrap().value;
        let reference = phi0_from_oracle(&z, 1e-30, &c);
        assert!(main.overlaps(&reference), "{z:?}: {main:?} vs {reference:?}");
    }
}

#[test]
fn agrees_with_double_precision_kronrod() {
    let c = ctx(128);
    let mut rng = rng(12);
    for _ in 0..300 {
        let z = random_disc(&mut rng, 3.0);
        let main = to_c64(&phi0_eval(&ball(z), &c).unwrap().value);
        let reference = phi0_f64(z);
        let scale = (z * z).re.abs().max(0.0).exp().max(1.0);
        assert!((main - reference).norm() < 1e-13 * scale, "{z} {main} {reference}");
    }
}

#[test]
fn central_differences_converge_quadratically() {
    let c = ctx(256);
    let mut rng = rng(13);
    for _ in 0..20 {
        let z = random_disc(&mut rng, 4.0);
        let zb = ball(z);
        let exact = phi0_deriv(&zb, &c);
        let mut errs = Vec::new();
        for k in 6..10 {
            let h = Float::one().mul_2exp(-k);
            let hp = Ball::exact(zb.re.add_exact(&h), zb.im.clone());
            let hm = Ball::exact(zb.re.sub_exact(&h), zb.im.clone());
            let d = phi0_eval(&hp, &c).unwrap().value.sub(&phi0_eval(&hm, &c).unwrap().value, 256).mul_2exp(k - 1);
            errs.push(to_c64(&d.sub(&exact, 256)).norm());
        }
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!(order >= 1.9, "order {order} at {z}");
        }
    }
}

#[test]
fn second_derivative_matches_differences_of_first() {
    let c = ctx(128);
    let z = ball(Complex64::new(0.7, -0.4));
    let h = Float::one().mul_2exp(-20);
    let hp = Ball::exact(z.re.add_exact(&h), z.im.clone());
    let hm = Ball::exact(z.re.sub_exact(&h), z.im.clone());
    let d = phi0_deriv(&hp, &c).sub(&phi0_deriv(&hm, &c), 128).mul_2exp(19);
    let s = phi0_second_deriv(&z, &c);
    assert!((to_c64(&d) - to_c64(&s)).norm() < 1e-10);
}

#[test]
fn real_axis_monotonicity() {
    let c = ctx(128);
    let turn = -1.0 / std::f64::consts::PI.sqrt();
    let values = |lo: f64, hi: f64| -> Vec<RBall> {
        (0..=200)
            .map(|i| lo + (hi - lo) * i as f64 / 200.0)
            .map(|x| phi0_eval(&Ball::from_f64(x, 0.0), &c).unwrap().value.re_ball())
            .collect()
    };
    for w in values(-4.0, turn - 1e-3).windows(2) {
        assert!(w[0].sub(&w[1], 128).is_positive());
    }
    for w in values(turn + 1e-3, 4.0).windows(2) {
        assert!(w[1].sub(&w[0], 128).is_positive());
    }
}

#[test]
fn linear_bound_near_origin() {
    let c = ctx(128);
    let mut rng = rng(14);
    for _ in 0..1000 {
        let z = random_disc(&mut rng, 1.0);
        let v = phi0_eval(&ball(z), &c).unwrap().value;
        assert!(v.abs_upper().to_f64_up() <= 4.0 * z.norm() * (1.0 - 1e-12));
    }
}

#[test]
fn real_values_stay_in_range() {
    let c = ctx(512);
    for i in 1..=240 {
        let x = i as f64 / 20.0;
        let v = phi0_eval(&Ball::from_f64(x, 0.0), &c).unwrap().value.re_ball();
        assert!(v.is_positive() && RBall::one().sub(&v, 512).is_positive(), "{x}");
        let v = phi0_eval(&Ball::from_f64(-x, 0.0), &c).unwrap().value.re_ball();
        assert!(v.is_negative() && v.add(&RBall::exact(Float::one().mul_2exp(-1)), 512).is_positive(), "{x}");
    }
    let wide = ctx(800);
    // Beyond the series range the far-field ball straddles the limit, so use the reference.
    for i in 1..=8 {
        let x = 12.0 + i as f64;
        let v = phi0_from_oracle(&Ball::from_f64(x, 0.0), 1e-200, &wide).re_ball();
        assert!(v.is_positive() && RBall::one().sub(&v, 800).is_positive(), "{x}");
        let v = phi0_from_oracle(&Ball::from_f64(-x, 0.0), 1e-200, &wide).re_ball();
        assert!(v.is_negative(), "{x}");
    }
}

fn far_bound_f64(r: f64, beta: f64) -> f64 {
    let l = far_log_deviation(&float(r.ln()), &float(beta), &ctx(128)).unwrap();
    l.to_f64_up().exp()
}

#[test]
fn far_field_inequality_holds_on_series_range() {
    let c = ctx(128);
    let mut rng = rng(15);
    let cone = std::f64::consts::FRAC_PI_4 - 1.0 / 64.0;
    for _ in 0..300 {
        let r = rng.random_range(0.5..12.0);
        let beta = rng.random_range(0.0..cone);
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        let positive_axis = rng.random::<bool>();
        let z = if positive_axis {
            Complex64::from_polar(r, sign * beta)
        } else {
            Complex64::from_polar(r, std::f64::consts::PI - sign * beta)
        };
        let v = phi0_eval(&ball(z), &c).unwrap().value;
        let limit = if positive_axis { Ball::one() } else { Ball::zero() };
        let dev = v.sub(&limit, 128).abs_lower().to_f64();
        assert!(dev <= far_bound_f64(r, beta), "{z}");
    }
}

#[test]
fn far_field_inequality_holds_against_reference() {
    let c = ctx(1024);
    for (r, beta) in [(13.0, 0.0), (15.0, 0.5), (20.0, 0.7), (14.0, 0.76), (25.0, 0.3)] {
        for axis in [0.0, std::f64::consts::PI] {
            let z = Complex64::from_polar(r, axis + beta);
            let v = phi0_from_oracle(&ball(z), 1e-290, &c);
            let limit = if axis == 0.0 { Ball::one() } else { Ball::zero() };
            let dev = v.sub(&limit, 1024).abs_lower();
            assert!(dev.is_positive());
            let bound = far_log_deviation(&float(r.ln()), &float(beta), &c).unwrap();
            let log_dev = RBall::exact(dev).log(&c, 128).upper();
            assert!(log_dev <= bound, "r={r} beta={beta} axis={axis}");
        }
    }
}

#[test]
fn regimes_follow_modulus() {
    let c = ctx(128);
    assert_eq!(phi0_eval(&Ball::from_f64(0.1, 0.0), &c).unwrap().regime, Regime::Taylor);
    assert_eq!(phi0_eval(&Ball::from_f64(0.1, 0.1), &c).unwrap().regime, Regime::Midrange);
    assert_eq!(phi0_eval(&Ball::from_f64(-12.5, 0.0), &c).unwrap().regime, Regime::FarField);
    let tiny = phi0_eval(&Ball::from_f64(-40.0, 1.0), &c).unwrap().value;
    assert!(tiny.rad < Mag::from_f64(1e-600f64.max(0.0) + 1e-300));
}
