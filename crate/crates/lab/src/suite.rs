//! The acceptance suite: ten criteria, each reduced to a pass/fail verdict
//! with the measured value next to its pinned tolerance.
//!
//! Experiments that fit the pipeline run through [`harness::run`] from the
//! shipped configurations in `configs/`; classification recovery and grid
//! convergence are driven directly. Everything is produced twice, in `out`
//! and in `out/rerun`, and the last criterion compares the CSV bytes of
//! the two passes.

use std::path::{Path, PathBuf};
use std::time::Instant;

use obstacle_core::blowup::{self, ReferenceBall};
use obstacle_core::coefficients::CoefficientField;
use obstacle_core::energies::{self, Centered, RadiusSchedule};
use obstacle_core::grid::Grid;
use obstacle_core::lcp::{self, ObstacleProblem, SolverOptions};
use obstacle_core::linalg;
use obstacle_core::oracles::{BlowupType, OracleSolution};
use obstacle_core::quadrature::Rules;
use obstacle_core::Sampler;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::harness::{self, RunReport, Stages};
use crate::io::{self, num, opt, Csv};
use crate::{LabError, Result};

pub const HALFSPACE_2D: &str = include_str!("../configs/halfspace-2d.toml");
pub const QUADRATIC_2D: &str = include_str!("../configs/quadratic-2d.toml");
pub const ANNULUS_WEISS: &str = include_str!("../configs/annulus-weiss.toml");
pub const HOLDER_ANNULUS: &str = include_str!("../configs/holder-annulus.toml");
pub const MONNEAU_LOGPOWER: &str = include_str!("../configs/monneau-logpower.toml");
pub const EPI_HALFSPACE: &str = include_str!("../configs/epi-halfspace.toml");

/// Every shipped configuration by file name.
pub const CONFIGS: [(&str, &str); 6] = [
    ("halfspace-2d.toml", HALFSPACE_2D),
    ("quadratic-2d.toml", QUADRATIC_2D),
    ("annulus-weiss.toml", ANNULUS_WEISS),
    ("holder-annulus.toml", HOLDER_ANNULUS),
    ("monneau-logpower.toml", MONNEAU_LOGPOWER),
    ("epi-halfspace.toml", EPI_HALFSPACE),
];

pub mod tolerance {
    /// Monotonicity slack shared by every trace check.
    pub const SLACK: f64 = 1e-3;
    pub const ORACLE_PHI: f64 = 0.01;
    pub const ORACLE_SECONDS: f64 = 30.0;
    pub const PHI_LIMIT: f64 = 0.03;
    pub const ANNULUS_CENTERS: usize = 8;
    pub const ANNULUS_SECONDS: f64 = 180.0;
    pub const CONSTANTS_CEILING: f64 = 1e3;
    pub const MONNEAU_EXACT: f64 = 1e-10;
    pub const HALFSPACE_DIRECTIONS: usize = 360;
    pub const ANGLE_DEGREES: f64 = 0.5;
    pub const QUADRATIC_MATRICES: usize = 100;
    pub const FROBENIUS: f64 = 1e-3;
    pub const CROSS_CONSISTENCY: f64 = 0.03;
    pub const NONDEGENERACY_FLOOR: f64 = 0.1;
    pub const CONTROL_CEILING: f64 = 1e-3;
    pub const EPI_COUNT: usize = 20;
    pub const EPI_DELTA: f64 = 0.05;
    pub const EPI_RATIO: f64 = 1.0;
    pub const KAPPA_FLOOR: f64 = 0.01;
    pub const EPI_SECONDS: f64 = 120.0;
    pub const CONVERGENCE_NODES: [usize; 3] = [129, 257, 513];
    pub const CONVERGENCE_ORDER: f64 = 1.0;
    pub const RADIUS_IN_SPACINGS: f64 = 2.0;
    pub const RESIDUAL: f64 = 1e-10;
    pub const DECAY_EXPONENT: f64 = 4.0;
    pub const RHO_ZETA: f64 = 1e-6;
}

#[derive(Debug, Clone)]
pub struct SuiteOptions {
    pub out: PathBuf,
    pub seed: u64,
    /// Produce a second pass and compare CSV bytes (criterion 10).
    pub rerun: bool,
    /// Print one line per criterion as it completes.
    pub verbose: bool,
}

impl SuiteOptions {
    pub fn new(out: impl Into<PathBuf>) -> Self {
        SuiteOptions {
            out: out.into(),
            seed: 1,
            rerun: true,
            verbose: false,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub title: String,
    pub passed: bool,
    pub detail: String,
    #[serde(skip)]
    pub seconds: f64,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "criterion {:>2} {} {}: {} [{:.1} s]",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.title,
            self.detail,
            self.seconds
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub passed: bool,
    pub criteria: Vec<CriterionResult>,
}

impl SuiteReport {
    pub fn criterion(&self, id: u8) -> Option<&CriterionResult> {
        self.criteria.iter().find(|c| c.id == id)
    }
}

fn config(text: &str, seed: u64) -> Result<ExperimentConfig> {
    let mut c = ExperimentConfig::from_toml(text)?;
    c.seed = seed;
    let k = &mut c.checks;
    k.slack = tolerance::SLACK;
    k.reference_tolerance = tolerance::ORACLE_PHI;
    k.phi_tolerance = tolerance::PHI_LIMIT;
    k.constants_ceiling = tolerance::CONSTANTS_CEILING;
    k.nondegeneracy_floor = tolerance::NONDEGENERACY_FLOOR;
    k.control_ceiling = tolerance::CONTROL_CEILING;
    k.decay_exponent = tolerance::DECAY_EXPONENT;
    k.kappa_floor = tolerance::KAPPA_FLOOR;
    c.epiperimetric.count = tolerance::EPI_COUNT;
    c.epiperimetric.delta = tolerance::EPI_DELTA;
    Ok(c)
}

fn suite_hash(seed: u64) -> String {
    let digest = Sha256::digest(format!("{{\"suite\":1,\"seed\":{seed}}}").as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

fn check_line(report: &RunReport, name: &str) -> (bool, String) {
    match report.check(name) {
        Some(c) => (
            c.passed,
            format!(
                "{} {} {:.3e} (limit {:.0e})",
                report.name,
                name,
                c.measured.unwrap_or(f64::NAN),
                c.threshold
            ),
        ),
        None => (false, format!("{} {name} missing", report.name)),
    }
}

fn stages_line(report: &RunReport) -> (bool, String) {
    let failed: Vec<String> = report
        .failed_stages()
        .map(|s| format!("{}: {}", s.stage, s.error.as_deref().unwrap_or("")))
        .collect();
    if failed.is_empty() {
        (true, String::new())
    } else {
        (false, format!("{} failed stages [{}]", report.name, failed.join("; ")))
    }
}

fn combine(parts: &[(bool, String)]) -> (bool, String) {
    let passed = parts.iter().all(|p| p.0);
    let detail = parts.iter().map(|p| p.1.as_str()).filter(|s| !s.is_empty()).collect::<Vec<_>>().join("; ");
    (passed, detail)
}

struct Recorder {
    criteria: Vec<CriterionResult>,
    verbose: bool,
}

impl Recorder {
    fn push(&mut self, id: u8, title: &str, passed: bool, detail: String, started: Instant) {
        let c = CriterionResult {
            id,
            title: title.into(),
            passed,
            detail,
            seconds: started.elapsed().as_secs_f64(),
        };
        if self.verbose {
            println!("{}", c.line());
        }
        self.criteria.push(c);
    }
}

/// Runs criteria 1–9 into `root` (and 10 when requested), writes
/// `suite.json` and returns the verdicts.
pub fn run_suite(options: &SuiteOptions) -> Result<SuiteReport> {
    let mut recorder = Recorder {
        criteria: Vec::new(),
        verbose: options.verbose,
    };
    produce(&options.out, options.seed, &mut recorder)?;
    if options.rerun {
        let started = Instant::now();
        let rerun_dir = options.out.join("rerun");
        let mut silent = Recorder {
            criteria: Vec::new(),
            verbose: false,
        };
        produce(&rerun_dir, options.seed, &mut silent)?;
        let (passed, detail) = compare_csv(&options.out, &rerun_dir)?;
        recorder.push(10, "determinism", passed, detail, started);
    }
    let report = SuiteReport {
        seed: options.seed,
        passed: recorder.criteria.iter().all(|c| c.passed),
        criteria: recorder.criteria,
    };
    io::write_json(&options.out.join("suite.json"), &report)?;
    Ok(report)
}

fn produce(root: &Path, seed: u64, rec: &mut Recorder) -> Result<()> {
    io::ensure_dir(root)?;
    let hash = suite_hash(seed);

    // 1
    let started = Instant::now();
    let halfspace = harness::run(&config(HALFSPACE_2D, seed)?, root, Stages::TRACE)?;
    let quadratic = harness::run(&config(QUADRATIC_2D, seed)?, root, Stages::TRACE)?;
    let elapsed = started.elapsed().as_secs_f64();
    let (passed, detail) = combine(&[
        check_line(&halfspace, "reference_phi"),
        check_line(&quadratic, "reference_phi"),
        stages_line(&halfspace),
        stages_line(&quadratic),
        (elapsed < tolerance::ORACLE_SECONDS, String::new()),
    ]);
    rec.push(1, "oracle Weiss constancy", passed, detail, started);

    // 2
    let started = Instant::now();
    let annulus = harness::run(&config(ANNULUS_WEISS, seed)?, root, Stages::TRACE)?;
    let elapsed = started.elapsed().as_secs_f64();
    let centers = annulus.centers.iter().filter(|c| c.role == "free_boundary").count();
    let (passed, detail) = combine(&[
        check_line(&annulus, "solver_residual"),
        check_line(&annulus, "weiss_monotone"),
        check_line(&annulus, "phi_limit"),
        (
            centers == tolerance::ANNULUS_CENTERS,
            format!("{centers} centers"),
        ),
        stages_line(&annulus),
        (elapsed < tolerance::ANNULUS_SECONDS, String::new()),
    ]);
    rec.push(2, "classical Weiss monotonicity", passed, detail, started);

    // 3
    let started = Instant::now();
    let holder = harness::run(&config(HOLDER_ANNULUS, seed)?, root, Stages::TRACE)?;
    let largest = holder
        .centers
        .iter()
        .flat_map(|c| [c.c3, c.c4])
        .map(|v| v.unwrap_or(f64::INFINITY))
        .fold(0.0, f64::max);
    let (passed, detail) = combine(&[
        check_line(&holder, "calibration"),
        check_line(&holder, "derivative_bound"),
        (
            largest <= tolerance::CONSTANTS_CEILING && !holder.centers.is_empty(),
            format!("{} centers", holder.centers.len()),
        ),
        stages_line(&holder),
    ]);
    rec.push(3, "quasi-monotonicity under perturbation", passed, detail, started);

    // 4
    let started = Instant::now();
    let monneau = harness::run(&config(MONNEAU_LOGPOWER, seed)?, root, Stages::TRACE)?;
    let exact = exact_monneau(&config(MONNEAU_LOGPOWER, seed)?)?;
    let (passed, detail) = combine(&[
        check_line(&monneau, "monneau"),
        stages_line(&monneau),
        (
            exact <= tolerance::MONNEAU_EXACT,
            format!("exact input max distance {exact:.3e} (limit {:.0e})", tolerance::MONNEAU_EXACT),
        ),
    ]);
    rec.push(4, "Monneau monotonicity", passed, detail, started);

    // 5
    let started = Instant::now();
    let recovery = classification_recovery(root, seed, &hash)?;
    let oracle_driven = [
        (&halfspace, BlowupType::A),
        (&quadratic, BlowupType::B),
        (&annulus, BlowupType::A),
        (&monneau, BlowupType::B),
    ];
    let mut consistent = true;
    let mut worst = 0.0f64;
    let mut counted = 0;
    for (report, truth) in oracle_driven {
        for c in &report.centers {
            counted += 1;
            let (Some(fit), Some(ratio)) = (c.fit.as_ref(), c.phi_ratio) else {
                consistent = false;
                continue;
            };
            let expected = if fit.is_type(BlowupType::A) { 1.0 } else { 2.0 };
            let deviation = (ratio / expected - 1.0).abs();
            worst = worst.max(deviation);
            consistent &= fit.is_type(truth) && !fit.unclassified && deviation <= tolerance::CROSS_CONSISTENCY;
        }
    }
    let passed = recovery.max_angle_degrees < tolerance::ANGLE_DEGREES
        && recovery.max_frobenius < tolerance::FROBENIUS
        && recovery.all_types_right
        && consistent
        && counted > 0;
    let detail = format!(
        "max angle {:.3e} deg (limit {}), max Frobenius {:.3e} (limit {:.0e}), types {}, Φ(0+)/type deviation {:.3e} over {counted} centers (limit {})",
        recovery.max_angle_degrees,
        tolerance::ANGLE_DEGREES,
        recovery.max_frobenius,
        tolerance::FROBENIUS,
        if recovery.all_types_right { "right" } else { "wrong" },
        worst,
        tolerance::CROSS_CONSISTENCY
    );
    rec.push(5, "classification recovery", passed, detail, started);

    // 6
    let started = Instant::now();
    let mut least = f64::INFINITY;
    let mut complete = true;
    for (report, _) in oracle_driven {
        for c in &report.centers {
            match c.nondegeneracy {
                Some(v) => least = least.min(v),
                None => complete = false,
            }
        }
    }
    let controls: Vec<Option<f64>> = annulus.controls.iter().map(|c| c.nondegeneracy).collect();
    let largest_control = controls.iter().map(|v| v.unwrap_or(f64::INFINITY)).fold(0.0, f64::max);
    let passed = complete
        && least >= tolerance::NONDEGENERACY_FLOOR
        && !controls.is_empty()
        && largest_control <= tolerance::CONTROL_CEILING;
    let detail = format!(
        "min at free-boundary centers {least:.3e} (floor {}), max at {} controls {largest_control:.3e} (ceiling {:.0e})",
        tolerance::NONDEGENERACY_FLOOR,
        controls.len(),
        tolerance::CONTROL_CEILING
    );
    rec.push(6, "nondegeneracy", passed, detail, started);

    // 7
    let started = Instant::now();
    let epi = harness::run(&config(EPI_HALFSPACE, seed)?, root, Stages::EPI)?;
    let elapsed = started.elapsed().as_secs_f64();
    let count = epi.epiperimetric.as_ref().map_or(0, |s| s.count);
    let (passed, detail) = combine(&[
        check_line(&epi, "epi_ratio"),
        check_line(&epi, "epi_kappa"),
        check_line(&epi, "epi_neutral"),
        (
            count == tolerance::EPI_COUNT
                && epi
                    .epiperimetric
                    .as_ref()
                    .is_some_and(|s| s.delta == tolerance::EPI_DELTA && s.max_ratio.is_some_and(|r| r < tolerance::EPI_RATIO)),
            format!("{count} perturbations"),
        ),
        stages_line(&epi),
        (elapsed < tolerance::EPI_SECONDS, String::new()),
    ]);
    rec.push(7, "epiperimetric batch", passed, detail, started);

    // 8
    let started = Instant::now();
    let (passed, detail) = convergence(root, &hash)?;
    rec.push(8, "solver convergence", passed, detail, started);

    // 9
    let started = Instant::now();
    let zeta = blowup::rho(0.5, tolerance::DECAY_EXPONENT).map_or(f64::INFINITY, |v| (v - std::f64::consts::PI.powi(2) / 6.0).abs());
    let (passed, detail) = combine(&[
        check_line(&annulus, "decay_monotone"),
        check_line(&annulus, "decay_envelope"),
        (
            zeta <= tolerance::RHO_ZETA,
            format!("|rho(0.5, 4) - π²/6| = {zeta:.3e}"),
        ),
    ]);
    rec.push(9, "decay and uniqueness", passed, detail, started);
    Ok(())
}

/// Largest Monneau distance when `u` is the comparison polynomial itself.
fn exact_monneau(config: &ExperimentConfig) -> Result<f64> {
    let rules = Rules::<2>::standard();
    let v = config.oracle::<2>()?.ok_or_else(|| LabError::Config("monneau config needs an oracle".into()))?;
    let view = Centered::new(&v, &CoefficientField::identity(), &[0.0, 0.0]).map_err(stage("exact_monneau"))?;
    let radii = config.trace_radii()?;
    let records = energies::monneau(
        &view,
        &v,
        BlowupType::B,
        &radii,
        config.theta_exponent()?,
        &config.modulus()?,
        &rules,
    )
    .map_err(stage("exact_monneau"))?;
    Ok(records.iter().map(|m| m.distance).fold(0.0, f64::max))
}

fn stage(name: &'static str) -> impl Fn(obstacle_core::Error) -> LabError {
    move |source| LabError::Stage {
        stage: name.into(),
        source,
    }
}

struct Recovery {
    max_angle_degrees: f64,
    max_frobenius: f64,
    all_types_right: bool,
}

fn classification_recovery(root: &Path, seed: u64, hash: &str) -> Result<Recovery> {
    let reference = ReferenceBall::<2>::standard();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut csv = Csv::new(
        root.join("classification.csv"),
        &["kind", "index", "angle", "split", "error", "fitted_type"],
        hash,
    );
    let mut out = Recovery {
        max_angle_degrees: 0.0,
        max_frobenius: 0.0,
        all_types_right: true,
    };
    for i in 0..tolerance::HALFSPACE_DIRECTIONS {
        let angle = rng.random_range(0.0..std::f64::consts::TAU);
        let w = OracleSolution::<2>::halfspace_at_angle(angle);
        let fit = blowup::rescale(&w, &[0.0, 0.0], 1.0, &reference)
            .and_then(|r| blowup::classify(&r))
            .map_err(stage("classify_halfspace"))?;
        let truth = [angle.cos(), angle.sin()];
        let error = linalg::dot(&truth, &fit.normal).clamp(-1.0, 1.0).acos().to_degrees();
        out.max_angle_degrees = out.max_angle_degrees.max(error);
        out.all_types_right &= fit.blowup_type == BlowupType::A && !fit.unclassified;
        csv.row(&[
            "halfspace".into(),
            i.to_string(),
            num(angle),
            String::new(),
            num(error),
            harness::type_name(fit.blowup_type).into(),
        ]);
    }
    for i in 0..tolerance::QUADRATIC_MATRICES {
        let angle = rng.random_range(0.0..std::f64::consts::PI);
        let split: f64 = rng.random_range(0.0..=1.0);
        let (c, s) = (angle.cos(), angle.sin());
        let rotation = [[c, -s], [s, c]];
        let diagonal = linalg::diagonal(&[0.5 * split, 0.5 * (1.0 - split)]);
        let b = linalg::symmetrize(&linalg::mat_mul(&linalg::mat_mul(&rotation, &diagonal), &linalg::transpose(&rotation)));
        let v = OracleSolution::<2>::quadratic(b).map_err(stage("classify_quadratic"))?;
        let fit = blowup::rescale(&v, &[0.0, 0.0], 1.0, &reference)
            .and_then(|r| blowup::classify(&r))
            .map_err(stage("classify_quadratic"))?;
        let error = linalg::frobenius(&linalg::mat_sub(&fit.matrix, &b));
        out.max_frobenius = out.max_frobenius.max(error);
        out.all_types_right &= fit.blowup_type == BlowupType::B && !fit.unclassified;
        csv.row(&[
            "quadratic".into(),
            i.to_string(),
            num(angle),
            num(split),
            num(error),
            harness::type_name(fit.blowup_type).into(),
        ]);
    }
    csv.finish()?;
    Ok(out)
}

fn convergence(root: &Path, hash: &str) -> Result<(bool, String)> {
    let annulus = OracleSolution::<2>::annulus(0.5).map_err(stage("convergence"))?;
    let mut csv = Csv::new(
        root.join("convergence.csv"),
        &["nodes", "h", "linf_error", "order", "fb_radius_error", "residual", "iterations"],
        hash,
    );
    let mut passed = true;
    let mut previous: Option<(f64, f64)> = None;
    let mut parts = Vec::new();
    for nodes in tolerance::CONVERGENCE_NODES {
        let grid = Grid::<2>::unit_box(nodes).map_err(stage("convergence"))?;
        let h = grid.spacing();
        let problem = ObstacleProblem::new(grid, CoefficientField::identity(), |x| annulus.value(x))
            .map_err(stage("convergence"))?;
        let options = SolverOptions {
            omega: SolverOptions::optimal_omega(&grid),
            tolerance: tolerance::RESIDUAL,
            ..SolverOptions::default()
        };
        let s = lcp::solve(&problem, &options).map_err(stage("convergence"))?;
        let error = (0..grid.len())
            .map(|i| (s.u.values[i] - annulus.value(&grid.point(i))).abs())
            .fold(0.0, f64::max);
        let points = blowup::extract_free_boundary(&s.u);
        let radius_error = points
            .iter()
            .map(|p| (linalg::norm(p) - 0.5).abs())
            .fold(if points.is_empty() { f64::INFINITY } else { 0.0 }, f64::max);
        let order = previous.map(|(e, hp)| (e / error).ln() / (hp / h).ln());
        passed &= s.converged && s.complementarity_residual <= tolerance::RESIDUAL;
        passed &= radius_error <= tolerance::RADIUS_IN_SPACINGS * h;
        if let Some(p) = order {
            passed &= p >= tolerance::CONVERGENCE_ORDER;
        }
        if let Some((e, _)) = previous {
            passed &= error < e;
        }
        csv.row(&[
            nodes.to_string(),
            num(h),
            num(error),
            opt(order),
            num(radius_error),
            num(s.complementarity_residual),
            s.iterations.to_string(),
        ]);
        parts.push(format!(
            "N={nodes}: error {error:.2e}{}, radius error {:.2} h, residual {:.1e}",
            order.map(|p| format!(" order {p:.2}")).unwrap_or_default(),
            radius_error / h,
            s.complementarity_residual
        ));
        previous = Some((error, h));
    }
    csv.finish()?;
    Ok((passed, parts.join("; ")))
}

fn csv_files(root: &Path, skip: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        let entries = std::fs::read_dir(&dir).map_err(|e| LabError::io(&dir, e))?;
        for entry in entries {
            let path = entry.map_err(|e| LabError::io(&dir, e))?.path();
            if path == skip {
                continue;
            }
            if path.is_dir() {
                stack.push(path);
            } else if path.extension().is_some_and(|e| e == "csv") {
                out.push(path.strip_prefix(root).expect("walked from root").to_path_buf());
            }
        }
    }
    out.sort();
    Ok(out)
}

/// Byte comparison of every CSV under `a` (outside `b`) with its twin
/// under `b`.
pub fn compare_csv(a: &Path, b: &Path) -> Result<(bool, String)> {
    let left = csv_files(a, b)?;
    let right = csv_files(b, &b.join("rerun"))?;
    if left != right {
        return Ok((false, format!("file sets differ: {} vs {} CSV files", left.len(), right.len())));
    }
    let mut bytes = 0usize;
    for rel in &left {
        let x = std::fs::read(a.join(rel)).map_err(|e| LabError::io(a.join(rel), e))?;
        let y = std::fs::read(b.join(rel)).map_err(|e| LabError::io(b.join(rel), e))?;
        if x != y {
            return Ok((false, format!("{} differs between the two passes", rel.display())));
        }
        bytes += x.len();
    }
    Ok((true, format!("{} CSV files ({bytes} bytes) identical", left.len())))
}

/// The acceptance radius schedule of the oracle criterion.
pub fn oracle_radii() -> Vec<f64> {
    RadiusSchedule::new(0.4, 0.05, 2).map(|s| s.radii()).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_configs_validate() {
        for (name, text) in CONFIGS {
            let c = ExperimentConfig::from_toml(text).unwrap_or_else(|e| panic!("{name}: {e}"));
            c.validate().unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(format!("{}.toml", c.name), name);
        }
    }

    #[test]
    fn oracle_radii_match_the_criterion() {
        let r = oracle_radii();
        assert_eq!(r.len(), 7);
        for (k, v) in r.iter().enumerate() {
            assert!((v - 0.05 * 2f64.powf(k as f64 / 2.0)).abs() < 1e-15);
        }
        let c = ExperimentConfig::from_toml(HALFSPACE_2D).unwrap();
        assert_eq!(c.trace_radii().unwrap(), r);
    }

    #[test]
    fn comparison_spots_changed_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path();
        let b = a.join("rerun");
        std::fs::create_dir_all(b.join("x")).unwrap();
        std::fs::create_dir_all(a.join("x")).unwrap();
        std::fs::write(a.join("x/t.csv"), "1\n").unwrap();
        std::fs::write(b.join("x/t.csv"), "1\n").unwrap();
        assert!(compare_csv(a, &b).unwrap().0);
        std::fs::write(b.join("x/t.csv"), "2\n").unwrap();
        assert!(!compare_csv(a, &b).unwrap().0);
    }
}
