use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wcsck_core::background::BackgroundMetric;
use wcsck_core::error::Error;
use wcsck_core::forms::TwistPreset;
use wcsck_core::functionals::{coercivity_probe, legendre_ray, pullback, toric_geodesic, FunctionalContext, SymplecticRay};
use wcsck_core::invariants::AffineFunction;
use wcsck_core::profiles::PotentialProfile;
use wcsck_core::weights::WeightPair;

fn ctx(n: usize, weights: WeightPair) -> FunctionalContext {
    let bg = Arc::new(BackgroundMetric::standard(n, 12.0).unwrap());
    FunctionalContext::new(bg, weights, TwistPreset::Gauge).unwrap()
}

fn random_phis(c: &FunctionalContext, seed: u64, count: usize, strength: f64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| PotentialProfile::random(&mut rng, 4, strength, 1.0).sample(&c.background)).collect()
}

fn zero(c: &FunctionalContext) -> Vec<f64> {
    vec![0.0; c.background.len()]
}

#[test]
fn energy_satisfies_cocycle() {
    let c = ctx(257, WeightPair::exponential(0.3));
    let p = random_phis(&c, 11, 3, 0.5);
    let lhs = c.energy_ev(&p[2], &p[0]).unwrap();
    let rhs = c.energy_ev(&p[2], &p[1]).unwrap() + c.energy_ev(&p[1], &p[0]).unwrap();
    assert!((lhs - rhs).abs() < 1e-9, "{lhs} vs {rhs}");
}

#[test]
fn energy_shifts_by_constants() {
    let c = ctx(257, WeightPair::exponential(-0.7));
    let p = &random_phis(&c, 12, 1, 0.5)[0];
    let shifted: Vec<f64> = p.iter().map(|x| x + 0.37).collect();
    let d = c.energy_ev(&shifted, &zero(&c)).unwrap() - c.energy_ev(p, &zero(&c)).unwrap();
    assert!((d - 0.37).abs() < 1e-8, "{d}");
    let m0 = c.mabuchi(p).unwrap();
    let m1 = c.mabuchi(&shifted).unwrap();
    assert!((m0 - m1).abs() < 1e-8, "{m0} vs {m1}");
}

#[test]
fn i_and_j_are_ordered_and_match_mixed_forms() {
    let c = ctx(513, WeightPair::exponential(0.3));
    for p in random_phis(&c, 13, 5, 0.6) {
        let ij = c.functionals_ij(&p, &zero(&c)).unwrap();
        assert!(ij.i >= ij.j && ij.j >= 0.0, "{ij:?}");
        assert!((ij.i - ij.i_mixed).abs() <= 1e-4 * ij.i.abs() + 1e-12, "{ij:?}");
        assert!((ij.j - ij.j_mixed).abs() <= 1e-4 * ij.j.abs() + 1e-12, "{ij:?}");
    }
}

#[test]
fn weighted_volumes_and_ell_are_state_independent() {
    let c = ctx(513, WeightPair::exponential(0.3));
    for p in random_phis(&c, 14, 5, 0.6) {
        let st = c.state(p).unwrap();
        let vol = st.weighted_volume(&c.weights.v);
        assert!((vol - c.volume_v).abs() <= 1e-6 * c.volume_v);
        let ell = wcsck_core::invariants::ell_ext(&st, &c.weights).unwrap();
        assert!((ell.a0 - c.ell.a0).abs() < 1e-6 && (ell.a1 - c.ell.a1).abs() < 1e-6, "{ell:?} vs {:?}", c.ell);
    }
}

#[test]
fn mabuchi_gradient_matches_euler_lagrange_pairing() {
    let c = ctx(513, WeightPair::exponential(-0.7));
    let p = random_phis(&c, 15, 6, 0.5);
    for w in p.windows(2) {
        let chk = c.variational_gradient_check(&w[0], &w[1]).unwrap();
        assert!(chk.residual <= 1e-5, "{chk:?}");
    }
}

#[test]
fn fubini_study_minimizes_mabuchi_for_unit_weights() {
    let c = ctx(257, WeightPair::unit());
    for p in random_phis(&c, 16, 8, 0.4) {
        assert!(c.mabuchi(&p).unwrap() >= -1e-9);
    }
}

#[test]
fn futaki_is_constant_along_the_flow_and_detects_wrong_slope() {
    let c = ctx(513, WeightPair::exponential(0.3));
    let shifts = [-1.0, -0.3, 0.0, 0.4, 1.2];
    for p in random_phis(&c, 17, 3, 0.5) {
        let f = c.futaki(&p, &shifts).unwrap();
        assert!(f.mean.abs() <= 1e-5 && f.max_deviation <= 1e-5, "{f:?}");
        let fd = c.futaki_finite_difference(&p, 0.3, 1e-2).unwrap();
        assert!(fd.abs() <= 1e-5, "{fd}");
    }
    let wrong = c.with_ell(AffineFunction::new(c.ell.a0, c.ell.a1 + 0.05));
    let f = wrong.futaki(&zero(&c), &shifts).unwrap();
    assert!(f.mean.abs() > 1e-3, "{f:?}");
    assert!(f.max_deviation <= 1e-5);
}

#[test]
fn reduced_j_recovers_translations() {
    let c = ctx(257, WeightPair::exponential(0.3));
    let base = c.state(zero(&c)).unwrap();
    let moved = pullback(&base, 0.9);
    let r = c.reduced_j(&moved).unwrap();
    assert!((r.shift - 0.9).abs() < 1e-4 && r.value < 1e-8, "{r:?}");
    assert!(c.functionals_ij(&moved, &zero(&c)).unwrap().j > 1e-3);
}

#[test]
fn reduced_j_reports_boundary_minimizer() {
    let c = ctx(257, WeightPair::unit());
    let base = c.state(zero(&c)).unwrap();
    let far = pullback(&base, 5.0);
    assert!(matches!(c.reduced_j(&far), Err(Error::MinimizerAtBoundary { .. })));
}

#[test]
fn geodesics_make_energy_affine_and_mabuchi_convex() {
    let c = ctx(513, WeightPair::exponential(0.3));
    let p = random_phis(&c, 18, 4, 0.6);
    for w in p.windows(2) {
        let (s0, s1) = (c.state(w[0].clone()).unwrap(), c.state(w[1].clone()).unwrap());
        let mid = toric_geodesic(&s0, &s1, 0.5).unwrap();
        let e = |phi: &[f64]| c.energy_ev(phi, &zero(&c)).unwrap();
        let affinity = e(&mid) - 0.5 * (e(&w[0]) + e(&w[1]));
        assert!(affinity.abs() <= 1e-5, "{affinity}");
        let m = |phi: &[f64]| c.mabuchi(phi).unwrap();
        let convexity = 0.5 * (m(&w[0]) + m(&w[1])) - m(&mid);
        assert!(convexity >= -1e-6, "{convexity}");
    }
}

#[test]
fn geodesic_endpoints_and_translation_orbits() {
    let c = ctx(257, WeightPair::unit());
    let base = c.state(zero(&c)).unwrap();
    let a = c.state(pullback(&base, -0.4)).unwrap();
    let b = c.state(pullback(&base, 0.8)).unwrap();
    let mid = toric_geodesic(&a, &b, 0.5).unwrap();
    let expected = pullback(&base, 0.2);
    let err = mid.iter().zip(&expected).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(err < 1e-6, "{err}");
    assert_eq!(toric_geodesic(&a, &b, 0.0).unwrap(), a.phi());
    assert!(toric_geodesic(&a, &b, 1.5).is_err());
}

#[test]
fn coercivity_fit_on_a_convex_ray() {
    let c = ctx(257, WeightPair::unit());
    let ray = SymplecticRay { center: 0.5, stiffness: 1.0 };
    let family: Vec<Vec<f64>> = (0..6).map(|k| legendre_ray(&c.background, ray, 0.2 * k as f64).unwrap()).collect();
    let fit = coercivity_probe(&c, &family).unwrap();
    let delta = fit.delta.unwrap();
    assert!(delta > 0.0, "{fit:?}");
    for (j, m) in fit.j.iter().zip(&fit.mabuchi) {
        assert!(*m >= delta * j - fit.constant.unwrap() - 1e-12);
    }
    let base = c.state(zero(&c)).unwrap();
    let orbit: Vec<Vec<f64>> = [-0.5, 0.0, 0.5].iter().map(|&s| pullback(&base, s)).collect();
    let flat = coercivity_probe(&c, &orbit).unwrap();
    let spread = flat.mabuchi.iter().map(|m| (m - flat.mabuchi[0]).abs()).fold(0.0, f64::max);
    assert!(spread < 1e-6, "{flat:?}");
}

