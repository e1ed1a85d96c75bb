use approx::assert_relative_eq;
use obstacle_core::blowup::{self, ReferenceBall};
use obstacle_core::coefficients::{CoefficientField, Modulus};
use obstacle_core::energies::{min_forward_difference, weiss_phi, RadiusSchedule};
use obstacle_core::linalg;
use obstacle_core::oracles::{BlowupType, OracleSolution};
use obstacle_core::quadrature::Rules;
use proptest::prelude::*;

fn rotated(angle: f64, split: f64) -> [[f64; 2]; 2] {
    let (c, s) = (angle.cos(), angle.sin());
    let q = [[c, -s], [s, c]];
    let d = linalg::diagonal(&[0.5 * split, 0.5 * (1.0 - split)]);
    linalg::symmetrize(&linalg::mat_mul(&linalg::mat_mul(&q, &d), &linalg::transpose(&q)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn quadratic_weiss_is_twice_theta(angle in 0.0..std::f64::consts::PI, split in 0.0..=1.0f64, r in 0.05..1.0f64) {
        let rules = Rules::<2>::standard();
        let v = OracleSolution::<2>::quadratic(rotated(angle, split)).unwrap();
        let phi = weiss_phi(&v, &CoefficientField::identity(), &[0.0, 0.0], r, &rules).unwrap();
        assert_relative_eq!(phi, std::f64::consts::PI / 8.0, max_relative = 1e-9);
    }

    #[test]
    fn halfspace_direction_is_recovered(angle in 0.0..std::f64::consts::TAU) {
        let w = OracleSolution::<2>::halfspace_at_angle(angle);
        let fit = blowup::rescale(&w, &[0.0, 0.0], 1.0, &ReferenceBall::standard())
            .and_then(|r| blowup::classify(&r))
            .unwrap();
        prop_assert_eq!(fit.blowup_type, BlowupType::A);
        let cosine = linalg::dot(&fit.normal, &[angle.cos(), angle.sin()]);
        prop_assert!(cosine.clamp(-1.0, 1.0).acos().to_degrees() < 0.5);
    }

    #[test]
    fn quadratic_matrix_is_recovered(angle in 0.0..std::f64::consts::PI, split in 0.0..=1.0f64) {
        let b = rotated(angle, split);
        let v = OracleSolution::<2>::quadratic(b).unwrap();
        let fit = blowup::rescale(&v, &[0.0, 0.0], 1.0, &ReferenceBall::standard())
            .and_then(|r| blowup::classify(&r))
            .unwrap();
        prop_assert_eq!(fit.blowup_type, BlowupType::B);
        prop_assert!(linalg::frobenius(&linalg::mat_sub(&fit.matrix, &b)) < 1e-3);
    }

    #[test]
    fn radius_schedule_increases(r_min in 0.01..0.2f64, factor in 1.0..20.0f64, per_octave in 1u32..6) {
        let radii = RadiusSchedule::new(r_min * factor, r_min, per_octave).unwrap().radii();
        prop_assert!(radii.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(min_forward_difference(&radii) > 0.0 || radii.len() < 2);
        prop_assert!(radii[0] >= r_min * (1.0 - 1e-12));
    }

    #[test]
    fn moduli_are_nondecreasing_and_vanish_at_zero(alpha in 0.05..1.0f64, b in 1.1..5.0f64, t in 1e-8..0.5f64) {
        for m in [Modulus::holder(alpha).unwrap(), Modulus::log_power(b).unwrap()] {
            prop_assert!(m.eval(t) <= m.eval(2.0 * t) + 1e-15);
            prop_assert!(m.eval(t) >= 0.0);
            prop_assert!(m.eval(1e-300) < m.eval(t) + 1e-15);
        }
    }
}
