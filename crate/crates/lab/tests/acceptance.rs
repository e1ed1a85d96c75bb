//! Acceptance criteria 1–10. The suite runs once and each test reports one
//! criterion as a PASS/FAIL line.

use std::io::Write;
use std::sync::OnceLock;

use obstacle_lab::suite::{run_suite, tolerance, CriterionResult, SuiteOptions, SuiteReport};

struct Shared {
    _dir: tempfile::TempDir,
    report: SuiteReport,
}

fn suite() -> &'static SuiteReport {
    static SHARED: OnceLock<Shared> = OnceLock::new();
    &SHARED
        .get_or_init(|| {
            let dir = tempfile::tempdir().expect("temporary directory");
            let report = run_suite(&SuiteOptions::new(dir.path())).expect("suite runs");
            Shared { _dir: dir, report }
        })
        .report
}

fn criterion(id: u8) -> &'static CriterionResult {
    let c = suite().criterion(id).unwrap_or_else(|| panic!("criterion {id} missing"));
    let _ = writeln!(std::io::stdout().lock(), "{}", c.line());
    c
}

fn assert_criterion(id: u8) {
    let c = criterion(id);
    assert!(c.passed, "criterion {id} failed: {}", c.detail);
}

#[test]
fn criterion_01_oracle_weiss_constancy() {
    assert_eq!(tolerance::ORACLE_PHI, 0.01);
    assert_eq!(tolerance::ORACLE_SECONDS, 30.0);
    assert_criterion(1);
}

#[test]
fn criterion_02_classical_weiss_monotonicity() {
    assert_eq!(tolerance::SLACK, 1e-3);
    assert_eq!(tolerance::PHI_LIMIT, 0.03);
    assert_eq!(tolerance::ANNULUS_CENTERS, 8);
    assert_eq!(tolerance::ANNULUS_SECONDS, 180.0);
    assert_criterion(2);
}

#[test]
fn criterion_03_quasi_monotonicity() {
    assert_eq!(tolerance::CONSTANTS_CEILING, 1e3);
    assert_eq!(tolerance::SLACK, 1e-3);
    assert_criterion(3);
}

#[test]
fn criterion_04_monneau() {
    assert_eq!(tolerance::SLACK, 1e-3);
    assert_eq!(tolerance::MONNEAU_EXACT, 1e-10);
    assert_criterion(4);
}

#[test]
fn criterion_05_classification_recovery() {
    assert_eq!(tolerance::HALFSPACE_DIRECTIONS, 360);
    assert_eq!(tolerance::ANGLE_DEGREES, 0.5);
    assert_eq!(tolerance::QUADRATIC_MATRICES, 100);
    assert_eq!(tolerance::FROBENIUS, 1e-3);
    assert_eq!(tolerance::CROSS_CONSISTENCY, 0.03);
    assert_criterion(5);
}

#[test]
fn criterion_06_nondegeneracy() {
    assert_eq!(tolerance::NONDEGENERACY_FLOOR, 0.1);
    assert_eq!(tolerance::CONTROL_CEILING, 1e-3);
    assert_criterion(6);
}

#[test]
fn criterion_07_epiperimetric() {
    assert_eq!(tolerance::EPI_COUNT, 20);
    assert_eq!(tolerance::EPI_DELTA, 0.05);
    assert_eq!(tolerance::EPI_RATIO, 1.0);
    assert_eq!(tolerance::KAPPA_FLOOR, 0.01);
    assert_eq!(tolerance::EPI_SECONDS, 120.0);
    assert_criterion(7);
}

#[test]
fn criterion_08_solver_convergence() {
    assert_eq!(tolerance::CONVERGENCE_NODES, [129, 257, 513]);
    assert_eq!(tolerance::CONVERGENCE_ORDER, 1.0);
    assert_eq!(tolerance::RADIUS_IN_SPACINGS, 2.0);
    assert_eq!(tolerance::RESIDUAL, 1e-10);
    assert_criterion(8);
}

#[test]
fn criterion_09_decay_and_uniqueness() {
    assert_eq!(tolerance::SLACK, 1e-3);
    assert_eq!(tolerance::DECAY_EXPONENT, 4.0);
    assert_eq!(tolerance::RHO_ZETA, 1e-6);
    assert_criterion(9);
}

#[test]
fn criterion_10_determinism() {
    assert_criterion(10);
}
