//! Discrete obstacle problem: minimize `∫ <A∇v,∇v> + 2 f v` over `v >= 0`
//! with Dirichlet data, as a linear complementarity problem solved by
//! projected SOR.
//!
//! The operator `L_h ≈ div(A∇·)` is the negative half-gradient of a
//! cell-assembled discrete energy. Each cell contributes
//!
//! * for every axis `i` and each of its `2^{D-1}` edges along `i`,
//!   `a_e (Δ_i u)^2 h^{D-2} / 2^{D-1}` with `a_e` the mean of `A_ii` at the
//!   two endpoints, and
//! * for every pair `i < j`, `2 a_ij g_i g_j h^D` with `g_i` the cell-averaged
//!   difference quotient and `a_ij` the mean of `A_ij` over the corners.
//!
//! For `A ≡ I` this is the 5-point (7-point in 3D) Laplacian; with
//! off-diagonal coefficients the stencil fills the `3^D` neighbourhood. The
//! operator is symmetric by construction and the PSOR sweeps decrease the
//! same discrete energy.

use alloc::vec;
use alloc::vec::Vec;

use crate::coefficients::CoefficientField;
use crate::grid::{Grid, GridFunction};
use crate::{Error, Point, Result};

/// Assembled `3^D`-point stencil of `L_h` at every node.
#[derive(Debug, Clone)]
pub struct DiscreteOperator<const D: usize> {
    pub grid: Grid<D>,
    width: usize,
    offsets: Vec<isize>,
    weights: Vec<f64>,
}

fn pow3(d: usize) -> usize {
    3usize.pow(d as u32)
}

impl<const D: usize> DiscreteOperator<D> {
    pub fn assemble(grid: Grid<D>, field: &CoefficientField<D>) -> Self {
        let width = pow3(D);
        let strides = grid.strides();
        let offsets: Vec<isize> = (0..width)
            .map(|m| {
                let mut rest = m;
                (0..D)
                    .map(|k| {
                        let o = (rest % 3) as isize - 1;
                        rest /= 3;
                        o * strides[k] as isize
                    })
                    .sum()
            })
            .collect();
        let n = grid.len();
        let nodal: Vec<_> = (0..n).map(|i| field.matrix_at(&grid.point(i))).collect();
        let mut weights = vec![0.0; n * width];
        let h2 = grid.spacing() * grid.spacing();
        let corners = 1usize << D;
        let edge_share = 1.0 / (1usize << (D - 1)) as f64;
        let cross_scale = 1.0 / (libm::pow(4.0, (D - 1) as f64) * h2);
        let cells_per_axis = grid.nodes_per_axis - 1;

        // local slot in the 3^D stencil of `p` for neighbour `q`
        let slot = |p: &[usize; D], q: &[usize; D]| -> usize {
            let mut m = 0;
            let mut mul = 1;
            for k in 0..D {
                m += (q[k] + 1 - p[k]) * mul;
                mul *= 3;
            }
            m
        };

        for cell in 0..cells_per_axis.pow(D as u32) {
            let mut rest = cell;
            let base: [usize; D] = core::array::from_fn(|_| {
                let c = rest % cells_per_axis;
                rest /= cells_per_axis;
                c
            });
            let corner_coords: Vec<[usize; D]> = (0..corners)
                .map(|k| core::array::from_fn(|a| base[a] + ((k >> a) & 1)))
                .collect();
            let corner_idx: Vec<usize> = corner_coords.iter().map(|c| grid.index(c)).collect();

            // axis-aligned edges
            for axis in 0..D {
                for k in 0..corners {
                    if (k >> axis) & 1 == 1 {
                        continue;
                    }
                    let k1 = k | (1 << axis);
                    let (p, q) = (corner_idx[k], corner_idx[k1]);
                    let a = 0.5 * (nodal[p][axis][axis] + nodal[q][axis][axis]) * edge_share / h2;
                    for (from, fc, tc) in [
                        (p, &corner_coords[k], &corner_coords[k1]),
                        (q, &corner_coords[k1], &corner_coords[k]),
                    ] {
                        let row = from * width;
                        weights[row + slot(fc, tc)] += a;
                        weights[row + slot(fc, fc)] -= a;
                    }
                }
            }

            // mixed terms
            if D > 1 {
                for i in 0..D {
                    for j in 0..i {
                        let aij = corner_idx.iter().map(|&c| nodal[c][i][j]).sum::<f64>() / corners as f64;
                        if aij == 0.0 {
                            continue;
                        }
                        let sign = |k: usize, axis: usize| if (k >> axis) & 1 == 1 { 1.0 } else { -1.0 };
                        for kp in 0..corners {
                            let row = corner_idx[kp] * width;
                            for kq in 0..corners {
                                let w = -aij
                                    * cross_scale
                                    * (sign(kp, i) * sign(kq, j) + sign(kp, j) * sign(kq, i));
                                weights[row + slot(&corner_coords[kp], &corner_coords[kq])] += w;
                            }
                        }
                    }
                }
            }
        }
        DiscreteOperator {
            grid,
            width,
            offsets,
            weights,
        }
    }

    /// Stencil weights at node `p` over the `3^D` neighbourhood (axis 0
    /// fastest, offsets `-1, 0, 1`). Rows of boundary nodes only couple to
    /// neighbours inside the box; they enter the energy, not the solve.
    pub fn stencil(&self, p: usize) -> &[f64] {
        &self.weights[p * self.width..(p + 1) * self.width]
    }

    pub fn center_weight(&self, p: usize) -> f64 {
        self.weights[p * self.width + self.width / 2]
    }

    /// `(L_h u)(p)`.
    #[inline]
    pub fn apply_at(&self, u: &[f64], p: usize) -> f64 {
        let row = &self.weights[p * self.width..(p + 1) * self.width];
        let mut acc = 0.0;
        for (w, off) in row.iter().zip(&self.offsets) {
            if *w != 0.0 {
                acc += w * u[(p as isize + off) as usize];
            }
        }
        acc
    }

    /// `L_h u` at every node.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        (0..self.grid.len()).map(|p| self.apply_at(u, p)).collect()
    }

    /// Quadratic part `Σ_cells <A∇u,∇u>_h h^D = -h^D u·L_h u`.
    pub fn quadratic_energy(&self, u: &[f64]) -> f64 {
        let hd = libm::pow(self.grid.spacing(), D as f64);
        -(0..u.len()).map(|p| u[p] * self.apply_at(u, p)).sum::<f64>() * hd
    }
}

/// Obstacle problem on a box: field, grid and nonnegative Dirichlet data.
#[derive(Debug, Clone)]
pub struct ObstacleProblem<const D: usize> {
    pub grid: Grid<D>,
    pub field: CoefficientField<D>,
    /// Dirichlet values (only boundary entries are used).
    pub dirichlet: Vec<f64>,
}

impl<const D: usize> ObstacleProblem<D> {
    /// Samples `g` on the boundary nodes; rejects negative data.
    pub fn new(grid: Grid<D>, field: CoefficientField<D>, g: impl Fn(&Point<D>) -> f64) -> Result<Self> {
        let mut dirichlet = vec![0.0; grid.len()];
        for i in 0..grid.len() {
            if grid.is_boundary(i) {
                let x = grid.point(i);
                let v = g(&x);
                if !(v >= 0.0) {
                    return Err(Error::param(
                        "dirichlet",
                        alloc::format!("boundary datum must be nonnegative, got {v} at {x:?}"),
                    ));
                }
                dirichlet[i] = v;
            }
        }
        Ok(ObstacleProblem { grid, field, dirichlet })
    }

    /// Problem on an arbitrary set of fixed nodes: `fixed[i]` marks nodes
    /// whose value is prescribed by `g` (the box boundary is always fixed).
    pub fn with_fixed_nodes(
        grid: Grid<D>,
        field: CoefficientField<D>,
        g: impl Fn(&Point<D>) -> f64,
        fixed: impl Fn(&Point<D>) -> bool,
    ) -> Result<(Self, Vec<bool>)> {
        let mut dirichlet = vec![0.0; grid.len()];
        let mut mask = vec![false; grid.len()];
        for i in 0..grid.len() {
            let x = grid.point(i);
            if grid.is_boundary(i) || fixed(&x) {
                let v = g(&x);
                if !(v >= 0.0) {
                    return Err(Error::param(
                        "dirichlet",
                        alloc::format!("prescribed value must be nonnegative, got {v} at {x:?}"),
                    ));
                }
                dirichlet[i] = v;
                mask[i] = true;
            }
        }
        Ok((ObstacleProblem { grid, field, dirichlet }, mask))
    }

    pub fn source_values(&self) -> Vec<f64> {
        (0..self.grid.len()).map(|i| self.field.source_at(&self.grid.point(i))).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepOrder {
    Lexicographic,
    /// Nodes with even coordinate sum first, then odd.
    RedBlack,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub omega: f64,
    pub tolerance: f64,
    pub max_sweeps: usize,
    pub order: SweepOrder,
    /// Sweeps between residual evaluations.
    pub check_every: usize,
    pub track_energy: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            omega: 1.8,
            tolerance: 1e-10,
            max_sweeps: 200_000,
            order: SweepOrder::Lexicographic,
            check_every: 8,
            track_energy: false,
        }
    }
}

impl SolverOptions {
    /// Optimal SOR factor of the Dirichlet Laplacian on the grid,
    /// `2 / (1 + sin(π/(N-1)))`.
    pub fn optimal_omega<const D: usize>(grid: &Grid<D>) -> f64 {
        2.0 / (1.0 + libm::sin(core::f64::consts::PI / (grid.nodes_per_axis - 1) as f64))
    }
}

/// Result of a PSOR solve.
#[derive(Debug, Clone)]
pub struct GridSolution<const D: usize> {
    pub u: GridFunction<D>,
    /// Positivity set `{u > 10·tol}`: nodes where the equation is active.
    pub active_mask: Vec<bool>,
    /// `max |min(u, f - L_h u)|` over the free nodes.
    pub complementarity_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Discrete energy after each residual check (when tracked).
    pub energy_history: Vec<f64>,
}

impl<const D: usize> GridSolution<D> {
    pub fn grid(&self) -> &Grid<D> {
        &self.u.grid
    }
}

/// PSOR solver bound to an assembled operator.
#[derive(Debug, Clone)]
pub struct Solver<const D: usize> {
    pub operator: DiscreteOperator<D>,
    source: Vec<f64>,
    free: Vec<bool>,
    node_weights: Vec<f64>,
}

impl<const D: usize> Solver<D> {
    pub fn new(problem: &ObstacleProblem<D>) -> Self {
        let free = (0..problem.grid.len()).map(|i| !problem.grid.is_boundary(i)).collect();
        Self::with_free_nodes(problem, free)
    }

    /// Solver whose unknowns are the nodes flagged in `free` (must be
    /// interior).
    pub fn with_free_nodes(problem: &ObstacleProblem<D>, free: Vec<bool>) -> Self {
        let grid = problem.grid;
        let operator = DiscreteOperator::assemble(grid, &problem.field);
        let free: Vec<bool> = free
            .into_iter()
            .enumerate()
            .map(|(i, f)| f && !grid.is_boundary(i))
            .collect();
        Solver {
            operator,
            source: problem.source_values(),
            node_weights: trapezoid_weights(&grid),
            free,
        }
    }

    pub fn free_nodes(&self) -> &[bool] {
        &self.free
    }

    /// `max |min(u, f - L_h u)|` over the free nodes.
    pub fn complementarity_residual(&self, u: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for p in 0..u.len() {
            if self.free[p] {
                let r = self.source[p] - self.operator.apply_at(u, p);
                worst = worst.max(u[p].min(r).abs());
            }
        }
        worst
    }

    /// Discrete energy `Σ_cells <A∇u,∇u>_h h^D + 2 Σ f u h^D w_trap` with
    /// trapezoidal node weights.
    pub fn energy(&self, u: &[f64]) -> f64 {
        let hd = libm::pow(self.operator.grid.spacing(), D as f64);
        let lin: f64 = (0..u.len()).map(|p| self.source[p] * u[p] * self.node_weights[p]).sum::<f64>() * hd;
        self.operator.quadratic_energy(u) + 2.0 * lin
    }

    /// Projected SOR from the initial iterate `u` (boundary entries hold the
    /// Dirichlet data).
    pub fn run(&self, mut u: Vec<f64>, options: &SolverOptions) -> GridSolution<D> {
        let order: Vec<usize> = match options.order {
            SweepOrder::Lexicographic => (0..u.len()).filter(|&p| self.free[p]).collect(),
            SweepOrder::RedBlack => {
                let g = &self.operator.grid;
                let parity = |p: usize| g.coords(p).iter().sum::<usize>() % 2;
                let mut v: Vec<usize> = (0..u.len()).filter(|&p| self.free[p] && parity(p) == 0).collect();
                v.extend((0..u.len()).filter(|&p| self.free[p] && parity(p) == 1));
                v
            }
        };
        for &p in &order {
            u[p] = u[p].max(0.0);
        }
        let omega = options.omega;
        let check_every = options.check_every.max(1);
        let mut energy_history = Vec::new();
        if options.track_energy {
            energy_history.push(self.energy(&u));
        }
        let mut residual = self.complementarity_residual(&u);
        let mut sweeps = 0;
        while residual > options.tolerance && sweeps < options.max_sweeps {
            for _ in 0..check_every {
                for &p in &order {
                    let r = self.source[p] - self.operator.apply_at(&u, p);
                    let d = -self.operator.center_weight(p);
                    u[p] = (u[p] - omega * r / d).max(0.0);
                }
                sweeps += 1;
                if options.track_energy {
                    energy_history.push(self.energy(&u));
                }
            }
            residual = self.complementarity_residual(&u);
        }
        let threshold = 10.0 * options.tolerance;
        let active_mask = u.iter().map(|&v| v > threshold).collect();
        GridSolution {
            u: GridFunction {
                grid: self.operator.grid,
                values: u,
            },
            active_mask,
            complementarity_residual: residual,
            iterations: sweeps,
            converged: residual <= options.tolerance,
            energy_history,
        }
    }
}

fn trapezoid_weights<const D: usize>(grid: &Grid<D>) -> Vec<f64> {
    let last = grid.nodes_per_axis - 1;
    (0..grid.len())
        .map(|i| {
            grid.coords(i)
                .iter()
                .map(|&c| if c == 0 || c == last { 0.5 } else { 1.0 })
                .product()
        })
        .collect()
}

/// Assembles and solves, starting from zero in the interior.
pub fn solve<const D: usize>(problem: &ObstacleProblem<D>, options: &SolverOptions) -> Result<GridSolution<D>> {
    if !(options.tolerance > 0.0) {
        return Err(Error::param("tolerance", "must be positive"));
    }
    if !(options.omega > 0.0 && options.omega < 2.0) {
        return Err(Error::param("omega", "relaxation factor must lie in (0, 2)"));
    }
    let solver = Solver::new(problem);
    Ok(solver.run(problem.dirichlet.clone(), options))
}

/// Discrete energy of a solution.
pub fn energy_of<const D: usize>(solution: &GridSolution<D>, problem: &ObstacleProblem<D>) -> f64 {
    Solver::new(problem).energy(&solution.u.values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{make_field, Domain, FieldPreset, SobolevParams, SourceSpec};
    use crate::linalg;
    use crate::quadrature::gauss_legendre_on;
    use approx::assert_relative_eq;

    fn slot2(dx: isize, dy: isize) -> usize {
        ((dx + 1) + 3 * (dy + 1)) as usize
    }

    #[test]
    fn identity_gives_five_point_laplacian() {
        let g = Grid::<2>::unit_box(17).unwrap();
        let op = DiscreteOperator::assemble(g, &CoefficientField::identity());
        let h2 = g.spacing() * g.spacing();
        let w = op.stencil(g.index(&[5, 7]));
        assert_relative_eq!(w[slot2(0, 0)] * h2, -4.0, epsilon = 1e-12);
        for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
            assert_relative_eq!(w[slot2(dx, dy)] * h2, 1.0, epsilon = 1e-12);
        }
        for (dx, dy) in [(1, 1), (-1, 1), (1, -1), (-1, -1)] {
            assert_eq!(w[slot2(dx, dy)], 0.0);
        }
    }

    #[test]
    fn identity_gives_seven_point_laplacian_in_3d() {
        let g = Grid::<3>::unit_box(17).unwrap();
        let op = DiscreteOperator::assemble(g, &CoefficientField::identity());
        let h2 = g.spacing() * g.spacing();
        let w = op.stencil(g.index(&[4, 8, 9]));
        assert_relative_eq!(w[13] * h2, -6.0, epsilon = 1e-12);
        let nonzero = w.iter().filter(|v| **v != 0.0).count();
        assert_eq!(nonzero, 7);
    }

    #[test]
    fn anisotropic_diagonal_weights() {
        let field = make_field(
            FieldPreset::Anisotropic {
                matrix: linalg::diagonal(&[2.0, 1.0]),
            },
            SourceSpec::constant(1.0),
            SobolevParams::default(),
            Domain::default(),
        )
        .unwrap();
        let g = Grid::<2>::unit_box(17).unwrap();
        let op = DiscreteOperator::assemble(g, &field);
        let h2 = g.spacing() * g.spacing();
        let w = op.stencil(g.index(&[8, 8]));
        assert_relative_eq!(w[slot2(1, 0)] * h2, 2.0, epsilon = 1e-12);
        assert_relative_eq!(w[slot2(-1, 0)] * h2, 2.0, epsilon = 1e-12);
        assert_relative_eq!(w[slot2(0, 1)] * h2, 1.0, epsilon = 1e-12);
        assert_relative_eq!(w[slot2(0, -1)] * h2, 1.0, epsilon = 1e-12);
        assert_relative_eq!(w[slot2(0, 0)] * h2, -6.0, epsilon = 1e-12);
    }

    #[test]
    fn operator_is_symmetric_with_cross_terms() {
        let field = make_field(
            FieldPreset::Anisotropic {
                matrix: [[1.5, 0.4], [0.4, 1.0]],
            },
            SourceSpec::constant(1.0),
            SobolevParams::default(),
            Domain::default(),
        )
        .unwrap();
        let g = Grid::<2>::unit_box(17).unwrap();
        let op = DiscreteOperator::assemble(g, &field);
        let p = g.index(&[6, 6]);
        let q = g.index(&[7, 7]);
        assert_relative_eq!(op.stencil(p)[slot2(1, 1)], op.stencil(q)[slot2(-1, -1)], epsilon = 1e-12);
        // mixed derivative 2 a12 ∂xy with the standard 4-cell average
        let h2 = g.spacing() * g.spacing();
        assert_relative_eq!(op.stencil(p)[slot2(1, 1)] * h2, 0.2, epsilon = 1e-12);
        // x y has ∂xy = 1: L_h (x y) = 2 a12
        let u: Vec<f64> = (0..g.len()).map(|i| g.point(i)[0] * g.point(i)[1]).collect();
        assert_relative_eq!(op.apply_at(&u, p), 0.8, epsilon = 1e-10);
    }

    #[test]
    fn flux_divergence_of_holder_field() {
        let field = make_field(
            FieldPreset::HolderPerturbation {
                gamma: 0.5,
                perturbation: linalg::diagonal(&[0.1, -0.1]),
                ellipticity: 1.25,
            },
            SourceSpec::constant(1.0),
            SobolevParams::default(),
            Domain::default(),
        )
        .unwrap();
        let mut errors = Vec::new();
        for n in [33, 65, 129] {
            let g = Grid::<2>::unit_box(n).unwrap();
            let h = g.spacing();
            let op = DiscreteOperator::assemble(g, &field);
            let u: Vec<f64> = (0..g.len()).map(|i| g.point(i)[0]).collect();
            let mut worst = 0.0f64;
            for i in 0..g.len() {
                let x = g.point(i);
                if g.is_boundary(i) || linalg::norm(&x) < 0.25 {
                    continue;
                }
                // divergence theorem on the control volume x ± h/2:
                // (1/h²)[∫_right A11 - ∫_left A11 + ∫_top A21 - ∫_bottom A21]
                let face = |fixed: usize, at: f64, entry: (usize, usize)| {
                    gauss_legendre_on(-0.5 * h, 0.5 * h, 12)
                        .into_iter()
                        .map(|(s, w)| {
                            let mut y = x;
                            y[fixed] = at;
                            y[1 - fixed] += s;
                            w * field.matrix_at(&y)[entry.0][entry.1]
                        })
                        .sum::<f64>()
                };
                let reference = (face(0, x[0] + 0.5 * h, (0, 0)) - face(0, x[0] - 0.5 * h, (0, 0))
                    + face(1, x[1] + 0.5 * h, (1, 0))
                    - face(1, x[1] - 0.5 * h, (1, 0)))
                    / (h * h);
                worst = worst.max((op.apply_at(&u, i) - reference).abs());
            }
            errors.push((h, worst));
        }
        for (h, e) in &errors {
            assert!(*e <= 2.0 * h, "error {e} at h = {h}");
        }
        assert!(errors[2].1 < errors[0].1);
    }

    #[test]
    fn zero_data_gives_zero_solution() {
        let g = Grid::<2>::unit_box(17).unwrap();
        let problem = ObstacleProblem::new(g, CoefficientField::identity(), |_| 0.0).unwrap();
        let sol = solve(&problem, &SolverOptions::default()).unwrap();
        assert!(sol.converged);
        assert_eq!(sol.complementarity_residual, 0.0);
        assert!(sol.u.values.iter().all(|&v| v == 0.0));
        assert_eq!(energy_of(&sol, &problem), 0.0);
    }

    #[test]
    fn negative_dirichlet_data_rejected() {
        let g = Grid::<2>::unit_box(17).unwrap();
        assert!(ObstacleProblem::new(g, CoefficientField::identity(), |x| x[0]).is_err());
    }

    #[test]
    fn psor_decreases_energy_and_satisfies_complementarity() {
        let g = Grid::<2>::unit_box(33).unwrap();
        let problem = ObstacleProblem::new(g, CoefficientField::identity(), |x| {
            let s = x[0] + 0.3 * x[1];
            0.5 * s.max(0.0).powi(2) + 0.05
        })
        .unwrap();
        let options = SolverOptions {
            tolerance: 1e-10,
            track_energy: true,
            check_every: 1,
            ..SolverOptions::default()
        };
        let sol = solve(&problem, &options).unwrap();
        assert!(sol.converged);
        for pair in sol.energy_history.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-12);
        }
        let solver = Solver::new(&problem);
        let lu = solver.operator.apply(&sol.u.values);
        let f = problem.source_values();
        for p in 0..g.len() {
            assert!(sol.u.values[p] >= 0.0);
            if g.is_boundary(p) {
                continue;
            }
            let r = lu[p] - f[p];
            if sol.active_mask[p] {
                assert!(r.abs() <= 1e-8, "{r}");
            } else {
                assert!(r <= 1e-10);
            }
        }
    }

    #[test]
    fn non_convergence_is_flagged() {
        let g = Grid::<2>::unit_box(33).unwrap();
        let problem = ObstacleProblem::new(g, CoefficientField::identity(), |_| 1.0).unwrap();
        let options = SolverOptions {
            max_sweeps: 3,
            check_every: 1,
            ..SolverOptions::default()
        };
        let sol = solve(&problem, &options).unwrap();
        assert!(!sol.converged);
        assert_eq!(sol.iterations, 3);
        assert!(sol.complementarity_residual > options.tolerance);
    }
}
