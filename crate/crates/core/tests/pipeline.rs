//! Grid solves against closed-form solutions.

use obstacle_core::blowup;
use obstacle_core::coefficients::CoefficientField;
use obstacle_core::energies::{energy_trace, min_forward_difference, Centered, RadiusSchedule};
use obstacle_core::grid::{Grid, GridSampler};
use obstacle_core::lcp::{self, GridSolution, ObstacleProblem, SolverOptions};
use obstacle_core::oracles::OracleSolution;
use obstacle_core::quadrature::Rules;
use obstacle_core::Sampler;

fn solve(nodes: usize, oracle: &OracleSolution<2>) -> GridSolution<2> {
    let grid = Grid::<2>::unit_box(nodes).unwrap();
    let problem = ObstacleProblem::new(grid, CoefficientField::identity(), |x| oracle.value(x)).unwrap();
    let options = SolverOptions {
        omega: SolverOptions::optimal_omega(&grid),
        tolerance: 1e-10,
        ..SolverOptions::default()
    };
    let s = lcp::solve(&problem, &options).unwrap();
    assert!(s.converged);
    s
}

fn linf(s: &GridSolution<2>, oracle: &OracleSolution<2>) -> f64 {
    let grid = s.grid();
    (0..grid.len())
        .map(|i| (s.u.values[i] - oracle.value(&grid.point(i))).abs())
        .fold(0.0, f64::max)
}

#[test]
fn annulus_error_falls_at_first_order_or_better() {
    let annulus = OracleSolution::<2>::annulus(0.5).unwrap();
    let coarse = solve(65, &annulus);
    let fine = solve(129, &annulus);
    let (e1, e2) = (linf(&coarse, &annulus), linf(&fine, &annulus));
    assert!((e1 / e2).log2() >= 1.0, "{e1} -> {e2}");
    assert!(fine.complementarity_residual <= 1e-10);
}

#[test]
fn halfspace_free_boundary_sits_on_the_line() {
    let w = OracleSolution::<2>::halfspace([1.0, 0.0]).unwrap();
    let s = solve(65, &w);
    let h = s.grid().spacing();
    let points = blowup::extract_free_boundary(&s.u);
    assert!(!points.is_empty());
    for p in points {
        assert!(p[0].abs() <= 2.0 * h, "{p:?}");
    }
}

#[test]
fn annulus_weiss_trace_is_nondecreasing() {
    let annulus = OracleSolution::<2>::annulus(0.5).unwrap();
    let s = solve(129, &annulus);
    let h = s.grid().spacing();
    let sampler = GridSampler::new(s.u.clone());
    let field = CoefficientField::identity();
    let view = Centered::new(&sampler, &field, &[0.5, 0.0]).unwrap();
    let radii = RadiusSchedule::new(0.45, 4.0 * h, 2).unwrap().radii();
    let trace = energy_trace(&view, &radii, &Rules::standard()).unwrap();
    assert!(min_forward_difference(&trace.phi) >= -1e-3);
    let nd = blowup::nondegeneracy(&sampler, &[0.5, 0.0], &radii, &Rules::<2>::standard().sphere).unwrap();
    assert!(nd.min >= 0.1);
}
