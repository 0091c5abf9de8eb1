use std::sync::Arc;

use wcsck_core::profiles::PotentialProfile;
use wcsck_core::reduction::{background_moment_probe, validate_reduction, ReductionProbe};

#[test]
fn background_moment_converges_at_second_order() {
    let report = validate_reduction(&background_moment_probe()).unwrap();
    for op in &report.operators {
        println!("{} {:?} {:?}", op.operator, op.residuals, op.order);
    }
    assert!(report.min_order().unwrap() >= 1.9);
}

#[test]
fn constant_test_function_is_exact() {
    let probe = ReductionProbe::new(PotentialProfile::Zero, Arc::new(|_| 2.5));
    let report = validate_reduction(&probe).unwrap();
    for op in &report.operators[..2] {
        assert!(op.residuals.iter().all(|r| *r < 1e-11), "{:?}", op);
    }
}

#[test]
fn trigonometric_function_on_perturbed_state() {
    let phi = PotentialProfile::MomentCosine { coeffs: vec![0.03, -0.01, 0.004] };
    let probe = ReductionProbe::new(phi, Arc::new(|x: f64| (0.7 * x).sin() + 0.3 * (1.3 * x).cos()));
    let report = validate_reduction(&probe).unwrap();
    for op in &report.operators {
        println!("{} {:?} {:?}", op.operator, op.residuals, op.order);
    }
    assert!(report.min_order().unwrap() >= 1.9);
}
