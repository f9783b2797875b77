mod common;

use asymval_core::certify::{certify_h, certify_k, find_alphas, CertKind, SectorCertificate, RADIAL_STEP};
use asymval_core::numerics::{Ball, Float, PrecisionContext, RationalAngle};
use asymval_core::phi0::{phi0_eval, FAR_RADIUS};
use common::*;

/// Largest sampled `|phi0|` lower bound and `|Arg phi0|` over the sector, on a
/// grid ten times denser than the initial certification grid, up to `2 R*`.
fn dense_sample(cert: &SectorCertificate, c: &PrecisionContext) -> (f64, f64) {
    let half = cert.half_angle.to_f64();
    let (axis, angles) = match cert.kind {
        CertKind::K => (std::f64::consts::PI, 21),
        CertKind::H(_) => (0.0, 21),
    };
    let step = RADIAL_STEP / 10.0;
    let steps = (2.0 * FAR_RADIUS / step) as usize;
    let (mut max_mod, mut max_arg) = (0.0f64, 0.0f64);
    for i in 1..=steps {
        let r = i as f64 * step;
        for j in 0..angles {
            let t = axis - half + 2.0 * half * j as f64 / (angles - 1) as f64;
            let z = Ball::from_f64(r * t.cos(), r * t.sin());
            let v = phi0_eval(&z, c).unwrap().value;
            max_mod = max_mod.max(v.abs_lower().to_f64());
            let (x, y) = v.to_f64();
            max_arg = max_arg.max(y.atan2(x).abs());
        }
    }
    (max_mod, max_arg)
}

fn assert_dominates(cert: &SectorCertificate, c: &PrecisionContext) {
    let (m, a) = dense_sample(cert, c);
    assert!(m <= cert.sup_mod_bound.to_f64(), "{} modulus {m} above {}", cert.kind, cert.sup_mod_bound.to_f64());
    if let Some(b) = &cert.sup_arg_bound {
        assert!(a <= b.to_f64(), "{} argument {a} above {}", cert.kind, b.to_f64());
    }
}

#[test]
fn level_one_search() {
    let c = ctx(128);
    let s = find_alphas(1, &c).unwrap();
    assert!(s.alphas[0].q() < s.alpha.q());
    let cert = certify_h(1, &s.alphas[0].half(), &c).unwrap();
    assert!(cert.is_certified());
}

#[test]
fn depth_four_search_is_sound() {
    let c = ctx(128);
    let s = find_alphas(4, &c).unwrap();
    assert_eq!(s.alphas.len(), 4);
    assert!(s.k_certificate.is_certified());
    assert!(s.alphas[0].q() < s.alpha.q());
    for w in s.alphas.windows(2) {
        assert!(w[1].q() < w[0].q());
    }
    for (n, a) in s.alphas.iter().enumerate() {
        let n = n as i64 + 1;
        // alpha_n / 2 < pi / (8n)
        assert!(a.half().q() < RationalAngle::from_ratio(1, 8 * n).q());
    }
    for cert in s.certificates() {
        assert!(cert.is_certified() && cert.check_bounds(&c));
        assert_dominates(&cert, &c);
    }
}

#[test]
fn standalone_certificates_are_sound() {
    let c = ctx(128);
    let k = certify_k(&RationalAngle::from_ratio(1, 64), &c).unwrap();
    assert!(k.is_certified());
    assert_dominates(&k, &c);
    let h = certify_h(1, &RationalAngle::from_ratio(1, 32), &c).unwrap();
    assert!(h.is_certified());
    assert_dominates(&h, &c);
}

#[test]
fn failure_is_monotone() {
    let c = ctx(128);
    let pairs_k = [((1, 8), (3, 16)), ((1, 8), (1, 4)), ((1, 64), (1, 32))];
    for ((a, b), (x, y)) in pairs_k {
        let lo = certify_k(&RationalAngle::from_ratio(a, b), &c);
        let hi = certify_k(&RationalAngle::from_ratio(x, y), &c);
        let lo_fails = !matches!(&lo, Ok(cert) if cert.is_certified());
        let hi_fails = !matches!(&hi, Ok(cert) if cert.is_certified());
        assert!(!lo_fails || hi_fails);
    }
    let pairs_h = [(3, (1, 24), (1, 20)), (2, (1, 16), (1, 12))];
    for (n, (a, b), (x, y)) in pairs_h {
        let lo = certify_h(n, &RationalAngle::from_ratio(a, b), &c);
        let hi = certify_h(n, &RationalAngle::from_ratio(x, y), &c);
        let lo_fails = !matches!(&lo, Ok(cert) if cert.is_certified());
        let hi_fails = !matches!(&hi, Ok(cert) if cert.is_certified());
        assert!(lo_fails && hi_fails);
    }
}

#[test]
fn certificates_are_reproducible() {
    let c = ctx(128);
    let a = find_alphas(3, &c).unwrap();
    let b = find_alphas(3, &c).unwrap();
    assert_eq!(a.certificates(), b.certificates());
    assert_eq!(a.alphas, b.alphas);
    let _ = Float::zero();
}
