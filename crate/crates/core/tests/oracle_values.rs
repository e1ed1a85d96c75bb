//! Frozen closed-form values of the oracle solutions.

use std::f64::consts::PI;

use approx::assert_relative_eq;
use obstacle_core::blowup::{self, ReferenceBall};
use obstacle_core::coefficients::{dini_integrals, CoefficientField, Modulus};
use obstacle_core::energies::{ball_energy, psi_energy, sphere_energy, weiss_phi};
use obstacle_core::linalg;
use obstacle_core::oracles::{reference_energy, theta, BlowupType, OracleSolution, Quantity};
use obstacle_core::quadrature::{Rules, SphereRule};
use obstacle_core::Sampler;

const ORIGIN: [f64; 2] = [0.0, 0.0];

#[test]
fn halfspace_energy_is_pi_over_16() {
    let rules = Rules::<2>::standard();
    let w = OracleSolution::<2>::halfspace([1.0, 0.0]).unwrap();
    assert_relative_eq!(theta(&rules), PI / 16.0, max_relative = 1e-10);
    assert_relative_eq!(reference_energy(&w, Quantity::Psi, &rules), PI / 16.0, max_relative = 1e-10);
    assert_relative_eq!(psi_energy(&w, &rules), PI / 16.0, max_relative = 1e-10);
}

#[test]
fn quadratic_energy_is_pi_over_8() {
    let rules = Rules::<2>::standard();
    let v = OracleSolution::<2>::quadratic(linalg::diagonal(&[0.25, 0.25])).unwrap();
    assert_relative_eq!(psi_energy(&v, &rules), PI / 8.0, max_relative = 1e-10);
    let integral = rules.ball.integrate(|x| 0.25 * linalg::dot(x, x));
    assert_relative_eq!(integral, PI / 8.0, max_relative = 1e-10);
    assert_eq!(v.blowup_type(), BlowupType::B);
}

#[test]
fn quadratic_ball_and_sphere_energies() {
    let rules = Rules::<2>::standard();
    let field = CoefficientField::identity();
    let v = OracleSolution::<2>::quadratic(linalg::diagonal(&[0.25, 0.25])).unwrap();
    for r in [0.1, 0.25, 0.5, 1.0] {
        let e = ball_energy(&v, &field, &ORIGIN, r, &rules).unwrap();
        let h = sphere_energy(&v, &field, &ORIGIN, r, &rules).unwrap();
        assert_relative_eq!(e, 3.0 * PI * r.powi(4) / 8.0, max_relative = 1e-10);
        assert_relative_eq!(h, PI * r.powi(5) / 8.0, max_relative = 1e-10);
        let phi = weiss_phi(&v, &field, &ORIGIN, r, &rules).unwrap();
        assert_relative_eq!(phi, PI / 8.0, max_relative = 1e-10);
    }
}

#[test]
fn halfspace_weiss_is_constant() {
    let rules = Rules::<2>::standard();
    let field = CoefficientField::identity();
    let w = OracleSolution::<2>::halfspace_at_angle(PI / 6.0);
    for r in [0.05, 0.25, 0.7] {
        let phi = weiss_phi(&w, &field, &ORIGIN, r, &rules).unwrap();
        assert_relative_eq!(phi, PI / 16.0, max_relative = 1e-10);
    }
}

#[test]
fn halfspace_nondegeneracy_is_one_half() {
    let w = OracleSolution::<2>::halfspace([0.0, 1.0]).unwrap();
    let n = blowup::nondegeneracy(&w, &ORIGIN, &[0.1, 0.2, 0.4], &SphereRule::standard()).unwrap();
    assert_relative_eq!(n.min, 0.5, max_relative = 1e-12);
}

#[test]
fn rotated_halfspace_is_recovered() {
    let angle = 30f64.to_radians();
    let w = OracleSolution::<2>::halfspace_at_angle(angle);
    let fit = blowup::rescale(&w, &ORIGIN, 1.0, &ReferenceBall::standard())
        .and_then(|r| blowup::classify(&r))
        .unwrap();
    assert_eq!(fit.blowup_type, BlowupType::A);
    let error = linalg::dot(&fit.normal, &[angle.cos(), angle.sin()]).clamp(-1.0, 1.0).acos();
    assert!(error.to_degrees() < 0.5);
}

#[test]
fn basel_sum() {
    assert_relative_eq!(blowup::rho(0.5, 4.0).unwrap(), PI * PI / 6.0, max_relative = 1e-9);
}

#[test]
fn log_power_dini_integral_is_one_half() {
    let m = Modulus::log_power(3.0).unwrap();
    let d = dini_integrals(&m, 1.0).unwrap();
    assert_relative_eq!(d.dini.value().unwrap(), 0.5, max_relative = 1e-8);
    assert!(d.double_dini.is_finite());
}

#[test]
fn annulus_profile() {
    let u = OracleSolution::<2>::annulus(0.5).unwrap();
    assert_eq!(u.value(&[0.3, 0.0]), 0.0);
    let r: f64 = 0.8;
    let expected = (r * r - 0.25) / 4.0 - 0.125 * (r / 0.5).ln();
    assert_relative_eq!(u.value(&[0.0, r]), expected, max_relative = 1e-14);
    assert_relative_eq!(u.laplacian(&[0.0, r]), 1.0, max_relative = 1e-12);
}
