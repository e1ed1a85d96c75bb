//! End-to-end experiment pipeline.
//!
//! [`run`] validates a configuration, builds the coefficient field, solves
//! the obstacle problem (or takes a closed-form oracle), picks centers on
//! the free boundary and analyses each of them: energy traces, constant
//! calibration, classification, nondegeneracy, Monneau and decay. An
//! optional epiperimetric batch runs independently of the solve. Every
//! stage failure is recorded under its stage name instead of aborting the
//! run, and the pass/fail checks with their measured margins go to
//! `summary.json`.
//!
//! Files written to `<out>/<name>/`:
//!
//! | file | content |
//! |------|---------|
//! | `solution.csv`, `solution.json` | nodal solution and solver metadata |
//! | `free_boundary.csv` | extracted free-boundary points |
//! | `trace_KK.csv`, `trace_KK.json` | energy trace of center `KK` |
//! | `derivative_KK.csv` | derivative check of center `KK` |
//! | `decay_KK.csv` | decay `d(r)` and its envelope |
//! | `blowup.json` | classification and nondegeneracy per center |
//! | `epi.csv`, `epi.json` | epiperimetric batch |
//! | `summary.json` | stages, checks and per-center results |

use std::path::{Path, PathBuf};

use obstacle_core::blowup::{self, ReferenceBall};
use obstacle_core::coefficients::{CoefficientField, Modulus, ModulusKind};
use obstacle_core::energies::{self, Centered};
use obstacle_core::epiperimetric::{self, BoundaryDatum, EpiCheck, EpiOptions, EpiReference};
use obstacle_core::grid::{Grid, GridSampler};
use obstacle_core::lcp::{self, GridSolution, ObstacleProblem, SolverOptions};
use obstacle_core::oracles::{self, BlowupType, OracleSolution, Quantity};
use obstacle_core::quadrature::{Adaptive, Rules};
use obstacle_core::{linalg, Point, Sampler};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::config::{CenterMode, ExperimentConfig, SolutionKind};
use crate::io::{self, num, opt, Csv};
use crate::Result;

/// Which parts of the pipeline to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Stages {
    pub traces: bool,
    pub classification: bool,
    pub epiperimetric: bool,
}

impl Stages {
    pub const ALL: Stages = Stages {
        traces: true,
        classification: true,
        epiperimetric: true,
    };
    pub const SOLVE: Stages = Stages {
        traces: false,
        classification: false,
        epiperimetric: false,
    };
    pub const TRACE: Stages = Stages {
        traces: true,
        classification: true,
        epiperimetric: false,
    };
    pub const CLASSIFY: Stages = Stages {
        traces: false,
        classification: true,
        epiperimetric: false,
    };
    pub const EPI: Stages = Stages {
        traces: false,
        classification: false,
        epiperimetric: true,
    };

    fn needs_solution(&self) -> bool {
        self.traces || self.classification || !self.epiperimetric
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StageRecord {
    pub stage: String,
    pub ok: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub passed: bool,
    pub measured: Option<f64>,
    pub threshold: f64,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolverSummary {
    pub nodes: usize,
    pub spacing: f64,
    pub omega: f64,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    pub free_boundary_points: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub blowup_type: String,
    pub unclassified: bool,
    pub normal: Option<Vec<f64>>,
    pub matrix: Option<Vec<Vec<f64>>>,
    pub residual_a: f64,
    pub residual_b: f64,
    pub norm: f64,
    pub stratum_dim: Option<usize>,
    pub fit_radius: f64,
    pub homogeneity_residual: f64,
}

impl FitReport {
    pub fn is_type(&self, t: BlowupType) -> bool {
        self.blowup_type == type_name(t)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayReport {
    pub c7: f64,
    pub envelope_ratio: f64,
    pub min_increment: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CenterReport {
    pub index: usize,
    pub center: Vec<f64>,
    pub role: String,
    pub phi_limit: Option<f64>,
    /// `Φ(0+)/θ`
    pub phi_ratio: Option<f64>,
    pub phi_min_forward_difference: Option<f64>,
    pub reference_deviation: Option<f64>,
    pub calibration_feasible: Option<bool>,
    pub c3: Option<f64>,
    pub c4: Option<f64>,
    pub adjusted_min_forward_difference: Option<f64>,
    pub derivative_min_margin: Option<f64>,
    pub monneau_c5: Option<f64>,
    pub monneau_min_forward_difference: Option<f64>,
    pub fit: Option<FitReport>,
    pub nondegeneracy: Option<f64>,
    pub nondegeneracy_per_radius: Vec<[f64; 2]>,
    pub hessian_bound: Vec<[f64; 2]>,
    pub decay: Option<DecayReport>,
}

impl CenterReport {
    fn new(index: usize, center: &[f64], role: &str) -> Self {
        CenterReport {
            index,
            center: center.to_vec(),
            role: role.to_string(),
            phi_limit: None,
            phi_ratio: None,
            phi_min_forward_difference: None,
            reference_deviation: None,
            calibration_feasible: None,
            c3: None,
            c4: None,
            adjusted_min_forward_difference: None,
            derivative_min_margin: None,
            monneau_c5: None,
            monneau_min_forward_difference: None,
            fit: None,
            nondegeneracy: None,
            nondegeneracy_per_radius: Vec::new(),
            hessian_bound: Vec::new(),
            decay: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ControlReport {
    pub center: Vec<f64>,
    pub nondegeneracy: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EpiSummary {
    pub count: usize,
    pub delta: f64,
    pub theta: f64,
    pub kappa: Option<f64>,
    pub max_ratio: Option<f64>,
    pub neutral_flagged: bool,
    pub max_boundary_error: f64,
}

/// Everything a run produced, also written as `summary.json`.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub name: String,
    pub config_hash: String,
    pub dimension: usize,
    pub passed: bool,
    /// `θ`, the half-space energy.
    pub theta: f64,
    pub theta_exponent: f64,
    pub stages: Vec<StageRecord>,
    pub checks: Vec<CheckRecord>,
    pub solver: Option<SolverSummary>,
    pub centers: Vec<CenterReport>,
    pub controls: Vec<ControlReport>,
    pub epiperimetric: Option<EpiSummary>,
    #[serde(skip)]
    pub dir: PathBuf,
}

impl RunReport {
    fn stage<T, E: std::fmt::Display>(&mut self, stage: &str, result: std::result::Result<T, E>) -> Option<T> {
        match result {
            Ok(v) => {
                self.stages.push(StageRecord {
                    stage: stage.to_string(),
                    ok: true,
                    error: None,
                });
                Some(v)
            }
            Err(e) => {
                self.stages.push(StageRecord {
                    stage: stage.to_string(),
                    ok: false,
                    error: Some(e.to_string()),
                });
                None
            }
        }
    }

    pub fn check(&self, name: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failed_stages(&self) -> impl Iterator<Item = &StageRecord> {
        self.stages.iter().filter(|s| !s.ok)
    }
}

pub fn type_name(t: BlowupType) -> &'static str {
    match t {
        BlowupType::A => "A",
        BlowupType::B => "B",
    }
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

fn modulus_json(m: &Modulus) -> serde_json::Value {
    let (kind, parameter) = match m.kind {
        ModulusKind::Holder { alpha } => ("holder", Some(alpha)),
        ModulusKind::LogPower { b } => ("log_power", Some(b)),
        ModulusKind::ConstantZero => ("zero", None),
    };
    json!({ "kind": kind, "parameter": parameter, "a_exponent": m.a_exponent })
}

fn matrix_rows<const D: usize>(m: &linalg::Matrix<D>) -> Vec<Vec<f64>> {
    m.iter().map(|r| r.to_vec()).collect()
}

/// Runs `stages` of the experiment into `<out_root>/<name>/`. Returns an
/// error only for invalid configurations and unwritable outputs; numerical
/// failures are recorded in the report.
pub fn run(config: &ExperimentConfig, out_root: &Path, stages: Stages) -> Result<RunReport> {
    config.validate()?;
    let dir = out_root.join(&config.name);
    io::ensure_dir(&dir)?;
    let mut report = match config.grid.dimension {
        2 => run_dim::<2>(config, &dir, stages)?,
        _ => run_dim::<3>(config, &dir, stages)?,
    };
    report.passed = report.stages.iter().all(|s| s.ok) && report.checks.iter().all(|c| c.passed);
    io::write_json(&dir.join("summary.json"), &report)?;
    Ok(report)
}

struct Context<const D: usize> {
    hash: String,
    dir: PathBuf,
    field: CoefficientField<D>,
    rules: Rules<D>,
    reference: ReferenceBall<D>,
    theta: f64,
    theta_exponent: f64,
    modulus: Modulus,
    radii: Vec<f64>,
    stages: Stages,
    /// `Φ` of the oracle for oracle runs.
    reference_phi: Option<f64>,
    oracle_type: Option<BlowupType>,
}

fn run_dim<const D: usize>(config: &ExperimentConfig, dir: &Path, stages: Stages) -> Result<RunReport> {
    let rules = Rules::<D>::standard();
    let theta = oracles::theta(&rules);
    let field = config.coefficient_field::<D>()?;
    let oracle = config.oracle::<D>()?;
    let mut ctx = Context {
        hash: config.hash(),
        dir: dir.to_path_buf(),
        field,
        reference_phi: None,
        oracle_type: None,
        rules,
        reference: ReferenceBall::standard(),
        theta,
        theta_exponent: config.theta_exponent()?,
        modulus: field.source_modulus,
        radii: config.trace_radii()?,
        stages,
    };
    let mut report = RunReport {
        name: config.name.clone(),
        config_hash: ctx.hash.clone(),
        dimension: D,
        passed: false,
        theta,
        theta_exponent: ctx.theta_exponent,
        stages: Vec::new(),
        checks: Vec::new(),
        solver: None,
        centers: Vec::new(),
        controls: Vec::new(),
        epiperimetric: None,
        dir: dir.to_path_buf(),
    };

    if stages.needs_solution() {
        match config.solution.kind {
            SolutionKind::Oracle => {
                let oracle = oracle.expect("validated oracle run");
                ctx.reference_phi = Some(oracles::reference_energy(&oracle, Quantity::Phi, &ctx.rules));
                ctx.oracle_type = Some(oracle.blowup_type());
                let centers = config.explicit_centers::<D>()?;
                analyse(&ctx, config, &oracle, &centers, None, &mut report)?;
            }
            SolutionKind::Solve => {
                if let Some(solution) = solve_stage(config, &ctx, oracle.as_ref(), &mut report)? {
                    if stages.traces || stages.classification {
                        let sampler = GridSampler::new(solution.u.clone());
                        let points = blowup::extract_free_boundary(&solution.u);
                        write_points(&ctx, &points)?;
                        if let Some(s) = report.solver.as_mut() {
                            s.free_boundary_points = points.len();
                        }
                        let centers = match config.centers.mode {
                            CenterMode::Explicit => config.explicit_centers::<D>()?,
                            CenterMode::Auto => {
                                let r_max = config.radii.r_max;
                                let picked = blowup::select_centers(&points, config.centers.count, |x| {
                                    Centered::new(&sampler, &ctx.field, x).is_ok_and(|v| v.max_radius() >= r_max)
                                });
                                let found = picked.len();
                                let wanted = config.centers.count;
                                let outcome = if found < wanted {
                                    Err(format!(
                                        "only {found} of {wanted} admissible centers among {} free-boundary points",
                                        points.len()
                                    ))
                                } else {
                                    Ok(())
                                };
                                report.stage("centers", outcome);
                                picked
                            }
                        };
                        analyse(&ctx, config, &sampler, &centers, Some(solution.u.grid.spacing()), &mut report)?;
                    }
                }
            }
        }
    }

    if stages.epiperimetric && config.checks.epiperimetric {
        epi_stage::<D>(config, &ctx, &mut report)?;
    }
    evaluate_checks(config, &ctx, &mut report);
    Ok(report)
}

/// `ψ(r)` with `Δψ = a ω(r)` radially and `ψ(0) = ψ'(0) = 0`.
fn source_compensation<const D: usize>(amplitude: f64, modulus: &Modulus, r: f64) -> f64 {
    if r == 0.0 || amplitude == 0.0 {
        return 0.0;
    }
    let quad = Adaptive::new(1e-13);
    let integral = if D == 2 {
        quad.integrate(|t| if t > 0.0 { t * modulus.eval(t) * (r / t).ln() } else { 0.0 }, 0.0, r)
    } else {
        quad.integrate(|t| t * t * modulus.eval(t) * (1.0 / t.max(1e-300) - 1.0 / r), 0.0, r)
    };
    amplitude * integral
}

fn solve_stage<const D: usize>(
    config: &ExperimentConfig,
    ctx: &Context<D>,
    oracle: Option<&OracleSolution<D>>,
    report: &mut RunReport,
) -> Result<Option<GridSolution<D>>> {
    let g = &config.grid;
    let Some(grid) = report.stage("grid", Grid::<D>::new(g.nodes, g.lower, g.upper)) else {
        return Ok(None);
    };
    let problem = match (oracle, &config.solution.values) {
        (_, Some(path)) => {
            let values = io::read_boundary_values(path, &grid)?;
            ObstacleProblem::new(grid, ctx.field, |x| values[grid.nearest_node(x)])
        }
        (Some(oracle), None) => {
            let center = config.source_center::<D>()?;
            let amplitude = if config.solution.compensate_source { config.source.amplitude } else { 0.0 };
            let modulus = ctx.modulus;
            ObstacleProblem::new(grid, ctx.field, |x| {
                let r = linalg::norm(&linalg::sub(x, &center));
                oracle.value(x) + source_compensation::<D>(amplitude, &modulus, r)
            })
        }
        (None, None) => unreachable!("validated solve run"),
    };
    let Some(problem) = report.stage("dirichlet", problem) else {
        return Ok(None);
    };
    let options = SolverOptions {
        omega: config.solver.omega.unwrap_or_else(|| SolverOptions::optimal_omega(&grid)),
        tolerance: config.solver.tolerance,
        max_sweeps: config.solver.max_sweeps,
        ..SolverOptions::default()
    };
    let solved = lcp::solve(&problem, &options).and_then(|s| {
        if s.converged {
            Ok(s)
        } else {
            Err(obstacle_core::Error::NotConverged {
                iterations: s.iterations,
                residual: s.complementarity_residual,
            })
        }
    });
    let solution = report.stage("solve", solved);
    let Some(solution) = solution else {
        return Ok(None);
    };
    report.solver = Some(SolverSummary {
        nodes: grid.nodes_per_axis,
        spacing: grid.spacing(),
        omega: options.omega,
        iterations: solution.iterations,
        residual: solution.complementarity_residual,
        converged: solution.converged,
        free_boundary_points: 0,
    });
    write_solution(ctx, &solution, &options)?;
    Ok(Some(solution))
}

fn write_solution<const D: usize>(ctx: &Context<D>, s: &GridSolution<D>, options: &SolverOptions) -> Result<()> {
    let grid = s.u.grid;
    let header = io::solution_header(D);
    let mut csv = Csv::new(ctx.dir.join("solution.csv"), &header, &ctx.hash);
    for i in 0..grid.len() {
        let c = grid.coords(i);
        let x = grid.point(i);
        let mut cells: Vec<String> = c.iter().map(|v| v.to_string()).collect();
        cells.extend(x.iter().map(|&v| num(v)));
        cells.push(num(s.u.values[i]));
        cells.push(u8::from(s.active_mask[i]).to_string());
        csv.row(&cells);
    }
    csv.finish()?;
    io::write_json(
        &ctx.dir.join("solution.json"),
        &json!({
            "config_hash": ctx.hash,
            "grid": {
                "dimension": D,
                "nodes_per_axis": grid.nodes_per_axis,
                "lower": grid.lower,
                "upper": grid.upper,
                "spacing": grid.spacing(),
            },
            "omega": options.omega,
            "tolerance": options.tolerance,
            "residual": s.complementarity_residual,
            "iterations": s.iterations,
            "converged": s.converged,
        }),
    )
}

fn write_points<const D: usize>(ctx: &Context<D>, points: &[Point<D>]) -> Result<()> {
    let mut csv = Csv::new(ctx.dir.join("free_boundary.csv"), &["x", "y", "z"][..D], &ctx.hash);
    for p in points {
        csv.row(&p.iter().map(|&v| num(v)).collect::<Vec<_>>());
    }
    csv.finish().map(|_| ())
}

/// Largest trace radius `<= max(8h, 0.1)` (or the configured one).
fn fit_radius<const D: usize>(config: &ExperimentConfig, ctx: &Context<D>, spacing: Option<f64>) -> f64 {
    if let Some(r) = config.radii.fit_radius {
        return r;
    }
    let cap = spacing.map_or(0.1, |h| (8.0 * h).max(0.1));
    ctx.radii.iter().copied().filter(|&r| r <= cap * (1.0 + 1e-12)).last().unwrap_or(ctx.radii[0])
}

fn analyse<S: Sampler<D>, const D: usize>(
    ctx: &Context<D>,
    config: &ExperimentConfig,
    sampler: &S,
    centers: &[Point<D>],
    spacing: Option<f64>,
    report: &mut RunReport,
) -> Result<()> {
    let role = match config.centers.mode {
        CenterMode::Auto => "free_boundary",
        CenterMode::Explicit => "explicit",
    };
    let r_fit = fit_radius(config, ctx, spacing);
    let step = spacing.unwrap_or(1e-3);
    for (k, x0) in centers.iter().enumerate() {
        let c = analyse_center(ctx, config, sampler, x0, k, role, r_fit, step, report)?;
        report.centers.push(c);
    }
    if ctx.stages.classification && config.checks.nondegeneracy {
        for (k, x0) in config.control_centers::<D>()?.iter().enumerate() {
            let radii: Vec<f64> = ctx.radii.iter().copied().filter(|&r| r <= sampler.reach(x0)).collect();
            let nd = report.stage(
                &format!("control[{k}]:nondegeneracy"),
                blowup::nondegeneracy(sampler, x0, &radii, &ctx.rules.sphere),
            );
            report.controls.push(ControlReport {
                center: x0.to_vec(),
                nondegeneracy: nd.map(|n| n.min),
            });
        }
    }
    if ctx.stages.classification {
        io::write_json(
            &ctx.dir.join("blowup.json"),
            &json!({
                "config_hash": ctx.hash,
                "theta": ctx.theta,
                "fit_radius": r_fit,
                "centers": report.centers.iter().map(|c| json!({
                    "index": c.index,
                    "center": c.center,
                    "role": c.role,
                    "fit": c.fit,
                    "phi_limit": c.phi_limit,
                    "nondegeneracy": c.nondegeneracy,
                    "nondegeneracy_per_radius": c.nondegeneracy_per_radius,
                    "hessian_bound": c.hessian_bound,
                })).collect::<Vec<_>>(),
                "controls": report.controls,
            }),
        )?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn analyse_center<S: Sampler<D>, const D: usize>(
    ctx: &Context<D>,
    config: &ExperimentConfig,
    sampler: &S,
    x0: &Point<D>,
    k: usize,
    role: &str,
    r_fit: f64,
    step: f64,
    report: &mut RunReport,
) -> Result<CenterReport> {
    let mut c = CenterReport::new(k, x0, role);
    let tag = format!("center[{k}]");
    let Some(view) = report.stage(&format!("{tag}:frame"), Centered::new(sampler, &ctx.field, x0)) else {
        return Ok(c);
    };
    let checks = &config.checks;
    let slack = checks.slack;

    let mut fit = None;
    if ctx.stages.classification {
        let fitted = blowup::rescale(&view, &[0.0; D], r_fit, &ctx.reference)
            .and_then(|r| blowup::classify(&r).map(|f| (f, blowup::homogeneity_residual(&r))));
        if let Some((f, homogeneity)) = report.stage(&format!("{tag}:classify"), fitted) {
            c.fit = Some(FitReport {
                blowup_type: type_name(f.blowup_type).into(),
                unclassified: f.unclassified,
                normal: (f.blowup_type == BlowupType::A).then(|| f.normal.to_vec()),
                matrix: (f.blowup_type == BlowupType::B).then(|| matrix_rows(&f.matrix)),
                residual_a: f.residual_a,
                residual_b: f.residual_b,
                norm: f.norm,
                stratum_dim: f.stratum_dim,
                fit_radius: r_fit,
                homogeneity_residual: homogeneity,
            });
            fit = Some(f);
        }
        let radii: Vec<f64> = ctx.radii.iter().copied().filter(|&r| r <= sampler.reach(x0)).collect();
        if checks.nondegeneracy {
            if let Some(nd) = report.stage(
                &format!("{tag}:nondegeneracy"),
                blowup::nondegeneracy(sampler, x0, &radii, &ctx.rules.sphere),
            ) {
                c.nondegeneracy = Some(nd.min);
                c.nondegeneracy_per_radius = nd.per_radius.iter().map(|&(r, v)| [r, v]).collect();
            }
        }
        if let Some(h) = report.stage(
            &format!("{tag}:hessian"),
            blowup::uniform_hessian_bound(sampler, x0, &radii, step),
        ) {
            c.hessian_bound = h.iter().map(|&(r, v)| [r, v]).collect();
        }
    }

    if !ctx.stages.traces {
        return Ok(c);
    }
    let radii = &ctx.radii;
    let Some(mut trace) = report.stage(&format!("{tag}:trace"), energies::energy_trace(&view, radii, &ctx.rules)) else {
        return Ok(c);
    };
    c.phi_min_forward_difference = Some(energies::min_forward_difference(&trace.phi));
    if let Ok(limit) = energies::extrapolate_to_zero(&trace.radii, &trace.phi, 3) {
        c.phi_limit = Some(limit);
        c.phi_ratio = Some(limit / ctx.theta);
    }
    if let Some(reference) = ctx.reference_phi {
        c.reference_deviation = Some(trace.phi.iter().map(|p| (p / reference - 1.0).abs()).fold(0.0, f64::max));
    }

    if checks.calibration {
        let samples = report.stage(
            &format!("{tag}:derivative"),
            energies::derivative_samples(&view, radii, &ctx.rules),
        );
        if let Some(samples) = samples {
            let calibration = energies::calibrate_constants_with(&trace, &samples, ctx.theta_exponent, &ctx.modulus, slack);
            if let Some(cal) = report.stage(&format!("{tag}:calibrate"), calibration) {
                c.calibration_feasible = Some(cal.feasible);
                if cal.feasible {
                    c.c3 = Some(cal.c3);
                    c.c4 = Some(cal.c4);
                    trace.constants.c3 = cal.c3;
                    trace.constants.c4 = cal.c4;
                    trace.adjusted_phi = energies::adjusted_weiss(&trace, ctx.theta_exponent, &ctx.modulus, cal.c3, cal.c4);
                    c.adjusted_min_forward_difference = Some(energies::min_forward_difference(&trace.adjusted_phi));
                }
                let (c3, c4) = if cal.feasible { (cal.c3, cal.c4) } else { (0.0, 0.0) };
                let records = energies::derivative_records(&samples, D, c3, c4, ctx.theta_exponent, &ctx.modulus);
                c.derivative_min_margin = Some(records.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min));
                let mut csv = Csv::new(
                    ctx.dir.join(format!("derivative_{k:02}.csv")),
                    &["r", "derivative", "rhs", "margin"],
                    &ctx.hash,
                );
                for r in &records {
                    csv.row(&[num(r.r), num(r.derivative), num(r.rhs), num(r.margin)]);
                }
                csv.finish()?;
            }
        }
    }

    let singular = fit.filter(|f| !f.unclassified && f.blowup_type == BlowupType::B);
    if checks.monneau {
        if let Some(f) = singular {
            let records = energies::monneau(
                &view,
                &f.model(),
                f.blowup_type,
                radii,
                ctx.theta_exponent,
                &ctx.modulus,
                &ctx.rules,
            );
            if let Some(records) = report.stage(&format!("{tag}:monneau"), records) {
                let c5 = energies::calibrate_c5(&records, slack);
                c.monneau_c5 = c5;
                let values: Vec<f64> = records.iter().map(|m| m.value(c5.unwrap_or(0.0))).collect();
                c.monneau_min_forward_difference = Some(energies::min_forward_difference(&values));
                trace.constants.c5 = c5.unwrap_or(f64::NAN);
                trace.monneau = values;
            }
        }
    }

    let regular = fit.filter(|f| !f.unclassified && f.blowup_type == BlowupType::A);
    if checks.decay {
        if let Some(f) = regular {
            let decay = blowup::uniqueness_decay(&view, &f.model(), radii, checks.decay_exponent, &ctx.rules.sphere);
            if let Some(d) = report.stage(&format!("{tag}:decay"), decay) {
                let mut csv = Csv::new(ctx.dir.join(format!("decay_{k:02}.csv")), &["r", "d", "envelope"], &ctx.hash);
                for &(r, dist) in &d.distances {
                    let envelope = blowup::rho(r, checks.decay_exponent).map(|rho| d.c7 * rho).unwrap_or(f64::NAN);
                    csv.row(&[num(r), num(dist), num(envelope)]);
                }
                csv.finish()?;
                c.decay = Some(DecayReport {
                    c7: d.c7,
                    envelope_ratio: d.envelope_ratio,
                    min_increment: d.min_increment,
                });
            }
        }
    }

    let mut csv = Csv::new(
        ctx.dir.join(format!("trace_{k:02}.csv")),
        &["r", "E", "H", "phi", "phi_adjusted", "monneau"],
        &ctx.hash,
    );
    for i in 0..trace.radii.len() {
        csv.row(&[
            num(trace.radii[i]),
            num(trace.energy[i]),
            num(trace.boundary[i]),
            num(trace.phi[i]),
            num(trace.adjusted_phi[i]),
            opt(trace.monneau.get(i).copied()),
        ]);
    }
    csv.finish()?;
    io::write_json(
        &ctx.dir.join(format!("trace_{k:02}.json")),
        &json!({
            "config_hash": ctx.hash,
            "index": k,
            "center": x0.to_vec(),
            "normalization": matrix_rows(&view.normalization.map),
            "theta": ctx.theta,
            "theta_exponent": ctx.theta_exponent,
            "modulus": modulus_json(&ctx.modulus),
            "slack": slack,
            "constants": {
                "c3": trace.constants.c3,
                "c4": trace.constants.c4,
                "c5": finite(trace.constants.c5),
            },
            "phi_limit": c.phi_limit,
        }),
    )?;
    Ok(c)
}

fn epi_stage<const D: usize>(config: &ExperimentConfig, ctx: &Context<D>, report: &mut RunReport) -> Result<()> {
    let e = &config.epiperimetric;
    let normal: Point<D> = match &e.normal {
        Some(n) => crate::config::point::<D>(n, "epiperimetric.normal")?,
        None => std::array::from_fn(|k| if k == 0 { 1.0 } else { 0.0 }),
    };
    let latitudes = if D == 3 { e.latitudes } else { 0 };
    let setup = EpiOptions::<D>::new(e.nodes).and_then(|mut options| {
        options.delta = e.delta;
        let model = OracleSolution::halfspace(normal)?;
        let reference = EpiReference::new(model, e.angles, latitudes, &options)?;
        Ok((options, model, reference))
    });
    let Some((options, model, reference)) = report.stage("epi:reference", setup) else {
        return Ok(());
    };

    let neutral = BoundaryDatum::sample(e.angles, latitudes, |p| model.value(p))
        .and_then(|w| epiperimetric::epiperimetric_check(&w, &reference, &options));
    let neutral = report.stage("epi:neutral", neutral);

    let mut csv = Csv::new(ctx.dir.join("epi.csv"), &["seed", "delta", "psi_phi", "psi_xi", "ratio"], &ctx.hash);
    let mut checks: Vec<EpiCheck> = Vec::new();
    let mut members = Vec::new();
    for i in 0..e.count {
        let seed = config.seed.wrapping_add(i as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coefficients: Vec<f64> = (0..epiperimetric::mode_count::<D>()).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let target = e.delta * rng.random_range(0.5..1.0);
        let outcome = epiperimetric::scale_to_distance(&model, &coefficients, target, e.angles, latitudes, &options.rules)
            .and_then(|s| epiperimetric::perturbed_datum(&model, &coefficients, s, e.angles, latitudes))
            .and_then(|datum| epiperimetric::epiperimetric_check(&datum, &reference, &options));
        if let Some(check) = report.stage(&format!("epi[{i}]"), outcome) {
            csv.row(&[seed.to_string(), num(e.delta), num(check.psi_phi), num(check.psi_xi), opt(check.ratio)]);
            members.push(json!({
                "seed": seed,
                "distance": check.distance,
                "ratio": check.ratio,
                "neutral": check.neutral,
                "boundary_error": check.boundary_error,
            }));
            checks.push(check);
        }
    }
    csv.finish()?;
    let kappa = epiperimetric::empirical_kappa(&checks);
    let max_ratio = checks.iter().filter_map(|c| c.ratio).reduce(f64::max);
    let summary = EpiSummary {
        count: checks.len(),
        delta: e.delta,
        theta: reference.theta,
        kappa,
        max_ratio,
        neutral_flagged: neutral.is_some_and(|c| c.neutral),
        max_boundary_error: checks.iter().map(|c| c.boundary_error).fold(0.0, f64::max),
    };
    io::write_json(
        &ctx.dir.join("epi.json"),
        &json!({
            "config_hash": ctx.hash,
            "seed": config.seed,
            "delta": e.delta,
            "nodes": e.nodes,
            "angles": e.angles,
            "theta": reference.theta,
            "model_drop": reference.model_drop,
            "kappa": kappa,
            "max_ratio": max_ratio,
            "neutral": neutral.map(|c| json!({ "psi_phi": c.psi_phi, "theta": c.theta, "neutral": c.neutral })),
            "members": members,
        }),
    )?;
    report.epiperimetric = Some(summary);
    Ok(())
}

fn push(report: &mut RunReport, name: &str, passed: bool, measured: f64, threshold: f64, detail: String) {
    report.checks.push(CheckRecord {
        name: name.into(),
        passed,
        measured: finite(measured),
        threshold,
        detail,
    });
}

fn evaluate_checks<const D: usize>(config: &ExperimentConfig, ctx: &Context<D>, report: &mut RunReport) {
    let checks = &config.checks;
    let slack = checks.slack;
    if let Some(s) = report.solver.clone() {
        push(
            report,
            "solver_residual",
            s.converged && s.residual <= config.solver.tolerance,
            s.residual,
            config.solver.tolerance,
            format!("{} sweeps", s.iterations),
        );
    }
    let centers = report.centers.clone();
    let with = |f: &dyn Fn(&CenterReport) -> Option<f64>| -> Vec<f64> { centers.iter().filter_map(f).collect() };
    let n_centers = centers.len();

    if ctx.stages.traces {
        if checks.reference_phi && ctx.reference_phi.is_some() {
            let dev = with(&|c| c.reference_deviation);
            let worst = dev.iter().copied().fold(0.0, f64::max);
            push(
                report,
                "reference_phi",
                dev.len() == n_centers && n_centers > 0 && worst <= checks.reference_tolerance,
                worst,
                checks.reference_tolerance,
                format!("max |Φ(r)/Φ_ref - 1| over {} centers, Φ_ref = {}", dev.len(), ctx.reference_phi.unwrap_or(f64::NAN)),
            );
        }
        if checks.weiss_monotone {
            let fd = with(&|c| c.phi_min_forward_difference);
            let worst = fd.iter().copied().fold(f64::INFINITY, f64::min);
            push(
                report,
                "weiss_monotone",
                fd.len() == n_centers && n_centers > 0 && worst >= -slack,
                worst,
                -slack,
                format!("min forward difference of Φ over {} centers", fd.len()),
            );
        }
        if checks.phi_limit && ctx.stages.classification {
            let mut worst = 0.0f64;
            let mut ok = n_centers > 0;
            for c in &centers {
                let expected = match c.fit.as_ref() {
                    Some(f) if !f.unclassified => {
                        if f.is_type(BlowupType::A) {
                            1.0
                        } else {
                            2.0
                        }
                    }
                    _ => {
                        ok = false;
                        continue;
                    }
                };
                match c.phi_ratio {
                    Some(ratio) => worst = worst.max((ratio / expected - 1.0).abs()),
                    None => ok = false,
                }
            }
            push(
                report,
                "phi_limit",
                ok && worst <= checks.phi_tolerance,
                worst,
                checks.phi_tolerance,
                "max |Φ(0+)/(θ or 2θ) - 1| by fitted type".into(),
            );
        }
        if checks.calibration {
            let feasible = centers.iter().all(|c| c.calibration_feasible == Some(true));
            let largest = centers
                .iter()
                .flat_map(|c| [c.c3, c.c4])
                .map(|v| v.unwrap_or(f64::INFINITY))
                .fold(0.0, f64::max);
            let adjusted = with(&|c| c.adjusted_min_forward_difference).into_iter().fold(f64::INFINITY, f64::min);
            push(
                report,
                "calibration",
                n_centers > 0 && feasible && largest <= checks.constants_ceiling && adjusted >= -slack,
                largest,
                checks.constants_ceiling,
                format!("largest of C3, C4; adjusted Φ min forward difference {adjusted:.3e}"),
            );
            let margins = with(&|c| c.derivative_min_margin);
            let worst = margins.iter().copied().fold(f64::INFINITY, f64::min);
            push(
                report,
                "derivative_bound",
                margins.len() == n_centers && n_centers > 0 && worst >= -slack,
                worst,
                -slack,
                "min of derivative - rhs over radii and centers".into(),
            );
        }
        if checks.monneau {
            let singular: Vec<&CenterReport> = centers
                .iter()
                .filter(|c| c.fit.as_ref().is_some_and(|f| !f.unclassified && f.is_type(BlowupType::B)))
                .collect();
            let c5 = singular.iter().map(|c| c.monneau_c5.unwrap_or(f64::INFINITY)).fold(0.0, f64::max);
            let worst = singular
                .iter()
                .map(|c| c.monneau_min_forward_difference.unwrap_or(f64::NEG_INFINITY))
                .fold(f64::INFINITY, f64::min);
            push(
                report,
                "monneau",
                !singular.is_empty() && c5 <= checks.constants_ceiling && worst >= -slack,
                worst,
                -slack,
                format!(
                    "min forward difference of M + C5·correction over {} singular centers, max C5 = {c5:e}",
                    singular.len()
                ),
            );
        }
        if checks.decay {
            let decays: Vec<&DecayReport> = centers.iter().filter_map(|c| c.decay.as_ref()).collect();
            let increment = decays.iter().map(|d| d.min_increment).fold(f64::INFINITY, f64::min);
            push(
                report,
                "decay_monotone",
                !decays.is_empty() && increment >= -slack,
                increment,
                -slack,
                format!("min increment of d(r) in r over {} regular centers", decays.len()),
            );
            let envelope = decays.iter().map(|d| d.envelope_ratio).fold(0.0, f64::max);
            push(
                report,
                "decay_envelope",
                !decays.is_empty() && envelope <= 1.0,
                envelope,
                1.0,
                format!("max d/(C7 ρ) on the small radii, a = {}", checks.decay_exponent),
            );
        }
    }

    if ctx.stages.classification {
        if checks.classify {
            let fits: Vec<&FitReport> = centers.iter().filter_map(|c| c.fit.as_ref()).collect();
            let classified = fits.iter().all(|f| !f.unclassified);
            let matches = ctx.oracle_type.is_none_or(|t| fits.iter().all(|f| f.is_type(t)));
            let worst = fits
                .iter()
                .map(|f| f.residual_a.min(f.residual_b) / f.norm)
                .fold(0.0, f64::max);
            push(
                report,
                "classified",
                fits.len() == n_centers && n_centers > 0 && classified && matches,
                worst,
                blowup::UNCLASSIFIED_FRACTION,
                match ctx.oracle_type {
                    Some(t) => format!("relative fit residual; oracle type {}", type_name(t)),
                    None => "relative fit residual".into(),
                },
            );
        }
        if checks.nondegeneracy {
            let values = with(&|c| c.nondegeneracy);
            let least = values.iter().copied().fold(f64::INFINITY, f64::min);
            push(
                report,
                "nondegeneracy",
                values.len() == n_centers && n_centers > 0 && least >= checks.nondegeneracy_floor,
                least,
                checks.nondegeneracy_floor,
                "min over centers of min_r sup u/r^2".into(),
            );
            if !report.controls.is_empty() {
                let controls: Vec<Option<f64>> = report.controls.iter().map(|c| c.nondegeneracy).collect();
                let largest = controls.iter().map(|v| v.unwrap_or(f64::INFINITY)).fold(0.0, f64::max);
                push(
                    report,
                    "nondegeneracy_controls",
                    largest <= checks.control_ceiling,
                    largest,
                    checks.control_ceiling,
                    "max over control centers of min_r sup u/r^2".into(),
                );
            }
        }
    }

    if ctx.stages.epiperimetric && checks.epiperimetric {
        let summary = report.epiperimetric.clone();
        let count = summary.as_ref().map_or(0, |s| s.count);
        let complete = count == config.epiperimetric.count;
        let max_ratio = summary.as_ref().and_then(|s| s.max_ratio).unwrap_or(f64::NAN);
        push(
            report,
            "epi_ratio",
            complete && max_ratio <= 1.0,
            max_ratio,
            1.0,
            format!("max (Ψ_ξ - θ)/(Ψ_φ - θ) over {count} perturbations"),
        );
        let kappa = summary.as_ref().and_then(|s| s.kappa).unwrap_or(f64::NAN);
        push(report, "epi_kappa", complete && kappa >= checks.kappa_floor, kappa, checks.kappa_floor, "empirical κ".into());
        let neutral = summary.as_ref().is_some_and(|s| s.neutral_flagged);
        push(
            report,
            "epi_neutral",
            neutral,
            f64::from(u8::from(neutral)),
            1.0,
            "the model's own trace is flagged neutral".into(),
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensation_solves_the_radial_equation() {
        let m = Modulus::log_power(3.0).unwrap();
        let a = 0.5;
        // check ψ'' + ψ'/r = a ω(r) by differences
        let r = 0.3;
        let d = 1e-3;
        let f = |t| source_compensation::<2>(a, &m, t);
        let lap = (f(r + d) - 2.0 * f(r) + f(r - d)) / (d * d) + (f(r + d) - f(r - d)) / (2.0 * d * r);
        assert!((lap - a * m.eval(r)).abs() < 1e-5, "{lap} vs {}", a * m.eval(r));
        let f3 = |t| source_compensation::<3>(a, &m, t);
        let lap3 = (f3(r + d) - 2.0 * f3(r) + f3(r - d)) / (d * d) + 2.0 * (f3(r + d) - f3(r - d)) / (2.0 * d * r);
        assert!((lap3 - a * m.eval(r)).abs() < 1e-5);
        assert_eq!(source_compensation::<2>(a, &m, 0.0), 0.0);
    }

    #[test]
    fn halfspace_oracle_run_reports_constant_phi() {
        let dir = tempfile::tempdir().unwrap();
        let config = ExperimentConfig::from_toml(
            r#"
name = "halfspace"
[solution]
kind = "oracle"
oracle = "halfspace"
[centers]
mode = "explicit"
points = [[0.0, 0.0]]
[radii]
r_max = 0.4
r_min = 0.05
[checks]
reference_phi = true
"#,
        )
        .unwrap();
        let report = run(&config, dir.path(), Stages::ALL).unwrap();
        assert!(report.passed, "{:#?}", report.checks);
        let c = &report.centers[0];
        assert!(c.reference_deviation.unwrap() < 1e-6);
        assert!(c.fit.as_ref().unwrap().is_type(BlowupType::A));
        let trace = std::fs::read_to_string(dir.path().join("halfspace/trace_00.csv")).unwrap();
        assert!(trace.starts_with("r,E,H,phi,phi_adjusted,monneau,config_hash\n"));
        assert_eq!(trace.lines().count(), 8);
        assert!(dir.path().join("halfspace/summary.json").exists());
        assert!(dir.path().join("halfspace/blowup.json").exists());
    }

    #[test]
    fn stage_failures_are_recorded() {
        let dir = tempfile::tempdir().unwrap();
        // the center is too close to the box for r_max
        let config = ExperimentConfig::from_toml(
            r#"
name = "edge"
[grid]
nodes = 65
[centers]
mode = "explicit"
points = [[0.9, 0.0]]
[radii]
r_max = 0.45
"#,
        )
        .unwrap();
        let report = run(&config, dir.path(), Stages::TRACE).unwrap();
        assert!(!report.passed);
        let failed: Vec<&str> = report.failed_stages().map(|s| s.stage.as_str()).collect();
        assert!(failed.contains(&"center[0]:trace"), "{failed:?}");
        assert!(dir.path().join("edge/solution.csv").exists());
    }
}
