//! Epiperimetric competitors: 2-homogeneous data near a half-space
//! solution, the constrained minimizer of `Ψ` with the same trace on
//! `∂B_1`, and the resulting contraction of the energy gap.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::coefficients::CoefficientField;
use crate::energies::psi_energy;
use crate::grid::{Grid, GridSampler};
use crate::lcp::{GridSolution, ObstacleProblem, Solver, SolverOptions};
use crate::linalg;
use crate::oracles::{OracleKind, OracleSolution};
use crate::quadrature::{gauss_legendre, Rules};
use crate::{Error, Point, Result, Sampler};

/// Default bound on `‖φ - w‖_{H^1(B_1)}`.
pub const DEFAULT_DELTA: f64 = 0.05;
/// Energy gaps at or below this are flagged neutral.
pub const NEUTRAL_GAP: f64 = 1e-10;
/// Highest angular frequency of the perturbation modes.
pub const MAX_MODE: usize = 4;

/// Values on `∂B_1` at the nodes of a lattice: uniform angles in 2D,
/// uniform longitudes times Gauss–Legendre latitudes (`z` increasing) in
/// 3D. Interpolated by cubic Lagrange polynomials (periodic in angle).
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryDatum<const D: usize> {
    pub angles: usize,
    /// Latitude rows `z` (3D only).
    pub latitudes: Vec<f64>,
    pub values: Vec<f64>,
}

fn lagrange4(nodes: &[f64; 4], t: f64) -> [f64; 4] {
    core::array::from_fn(|i| {
        let mut w = 1.0;
        for j in 0..4 {
            if j != i {
                w *= (t - nodes[j]) / (nodes[i] - nodes[j]);
            }
        }
        w
    })
}

impl<const D: usize> BoundaryDatum<D> {
    fn lattice(angles: usize, latitudes: usize) -> Result<(Vec<f64>, Vec<Point<D>>)> {
        if !(D == 2 || D == 3) {
            return Err(Error::param("dimension", "only n = 2 and n = 3 are supported"));
        }
        if angles < 8 || (D == 3 && latitudes < 4) {
            return Err(Error::param("resolution", "need at least 8 angles (and 4 latitudes in 3D)"));
        }
        let mut zs: Vec<f64> = if D == 3 {
            gauss_legendre(latitudes).into_iter().map(|(z, _)| z).collect()
        } else {
            Vec::new()
        };
        zs.sort_by(f64::total_cmp);
        let mut nodes = Vec::new();
        let rows: &[f64] = if D == 3 { &zs } else { &[0.0] };
        for &z in rows {
            let rho = libm::sqrt((1.0 - z * z).max(0.0));
            for k in 0..angles {
                let t = 2.0 * PI * k as f64 / angles as f64;
                let mut p = [0.0; D];
                if D == 2 {
                    p[0] = libm::cos(t);
                    p[1] = libm::sin(t);
                } else {
                    p[0] = rho * libm::cos(t);
                    p[1] = rho * libm::sin(t);
                    p[2] = z;
                }
                nodes.push(p);
            }
        }
        Ok((zs, nodes))
    }

    /// Samples `g` on the lattice (`latitudes` is ignored in 2D).
    pub fn sample(angles: usize, latitudes: usize, g: impl Fn(&Point<D>) -> f64) -> Result<Self> {
        let (zs, nodes) = Self::lattice(angles, latitudes)?;
        Ok(BoundaryDatum {
            angles,
            latitudes: zs,
            values: nodes.iter().map(g).collect(),
        })
    }

    /// 256 angles in 2D, 128 x 64 in 3D.
    pub fn standard(g: impl Fn(&Point<D>) -> f64) -> Self {
        if D == 2 {
            Self::sample(256, 0, g).expect("valid resolution")
        } else {
            Self::sample(128, 64, g).expect("valid resolution")
        }
    }

    /// The lattice points, in the order of `values`.
    pub fn nodes(&self) -> Vec<Point<D>> {
        Self::lattice(self.angles, self.latitudes.len()).map(|l| l.1).unwrap_or_default()
    }

    fn row(&self, row: usize, t: f64) -> f64 {
        let m = self.angles;
        let s = t / (2.0 * PI / m as f64);
        let base = libm::floor(s);
        let w = lagrange4(&[-1.0, 0.0, 1.0, 2.0], s - base);
        let base = base as isize;
        (0..4)
            .map(|i| {
                let k = (base - 1 + i as isize).rem_euclid(m as isize) as usize;
                w[i] * self.values[row * m + k]
            })
            .sum()
    }

    /// Interpolated value at a unit vector.
    pub fn eval(&self, unit: &Point<D>) -> f64 {
        let mut t = libm::atan2(unit[1], unit[0]);
        if t < 0.0 {
            t += 2.0 * PI;
        }
        if D == 2 {
            return self.row(0, t);
        }
        let z = unit[2].clamp(-1.0, 1.0);
        let zs = &self.latitudes;
        let above = zs.partition_point(|&r| r < z);
        let start = above.saturating_sub(2).min(zs.len() - 4);
        let nodes: [f64; 4] = core::array::from_fn(|i| zs[start + i]);
        let w = lagrange4(&nodes, z);
        (0..4).map(|i| w[i] * self.row(start + i, t)).sum()
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// `φ(x) = |x|^2 φ(x/|x|)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HomogeneousExtension<const D: usize> {
    pub datum: BoundaryDatum<D>,
}

pub fn homogeneous_extension<const D: usize>(datum: BoundaryDatum<D>) -> HomogeneousExtension<D> {
    HomogeneousExtension { datum }
}

const GRADIENT_STEP: f64 = 1e-6;

impl<const D: usize> Sampler<D> for HomogeneousExtension<D> {
    fn value(&self, x: &Point<D>) -> f64 {
        let r = linalg::norm(x);
        if r == 0.0 {
            return 0.0;
        }
        r * r * self.datum.eval(&linalg::scale(x, 1.0 / r))
    }

    fn gradient(&self, x: &Point<D>) -> Point<D> {
        let r = linalg::norm(x);
        if r == 0.0 {
            return [0.0; D];
        }
        let h = GRADIENT_STEP * r;
        core::array::from_fn(|k| {
            let mut a = *x;
            let mut b = *x;
            a[k] += h;
            b[k] -= h;
            (self.value(&a) - self.value(&b)) / (2.0 * h)
        })
    }
}

/// `‖φ - w‖_{H^1(B_1)}` by ball quadrature.
pub fn h1_distance<const D: usize>(phi: &impl Sampler<D>, w: &impl Sampler<D>, rules: &Rules<D>) -> f64 {
    libm::sqrt(rules.ball.integrate(|x| {
        let d = phi.value(x) - w.value(x);
        let g = linalg::sub(&phi.gradient(x), &w.gradient(x));
        d * d + linalg::dot(&g, &g)
    }))
}

/// Discretization of the constrained minimization: an embedded grid on
/// `[-1, 1]^D` with the nodes outside the open unit ball fixed to `φ`.
#[derive(Debug, Clone)]
pub struct EpiOptions<const D: usize> {
    pub nodes_per_axis: usize,
    pub solver: SolverOptions,
    pub rules: Rules<D>,
    pub delta: f64,
}

impl<const D: usize> EpiOptions<D> {
    pub fn new(nodes_per_axis: usize) -> Result<Self> {
        let grid = Grid::<D>::unit_box(nodes_per_axis)?;
        let solver = SolverOptions {
            omega: SolverOptions::optimal_omega(&grid),
            ..SolverOptions::default()
        };
        Ok(EpiOptions {
            nodes_per_axis,
            solver,
            rules: Rules::standard(),
            delta: DEFAULT_DELTA,
        })
    }
}

/// The minimizer `ξ` of `∫_{B_1}(|∇ξ|^2 + 2ξ)` over `ξ >= 0`, `ξ = φ` on
/// `∂B_1`.
#[derive(Debug, Clone)]
pub struct PsiMinimizer<const D: usize> {
    pub solution: GridSolution<D>,
    pub xi: GridSampler<D>,
    /// Discrete energy of `ξ` minus that of the nodal interpolant of `φ`.
    pub energy_drop: f64,
    /// `max |ξ - φ|` over the sphere quadrature nodes.
    pub boundary_error: f64,
}

pub fn minimize_psi<const D: usize>(phi: &impl Sampler<D>, options: &EpiOptions<D>) -> Result<PsiMinimizer<D>> {
    let grid = Grid::<D>::unit_box(options.nodes_per_axis)?;
    let (problem, fixed) = ObstacleProblem::with_fixed_nodes(
        grid,
        CoefficientField::identity(),
        |x| phi.value(x).max(0.0),
        |x| linalg::norm(x) >= 1.0,
    )?;
    let solver = Solver::with_free_nodes(&problem, fixed.iter().map(|f| !f).collect());
    let start: Vec<f64> = (0..grid.len())
        .map(|i| {
            if fixed[i] {
                problem.dirichlet[i]
            } else {
                phi.value(&grid.point(i)).max(0.0)
            }
        })
        .collect();
    let before = solver.energy(&start);
    let solution = solver.run(start, &options.solver);
    if !solution.converged {
        return Err(Error::NotConverged {
            iterations: solution.iterations,
            residual: solution.complementarity_residual,
        });
    }
    let energy_drop = solver.energy(&solution.u.values) - before;
    let xi = GridSampler::new(solution.u.clone());
    let boundary_error = options
        .rules
        .sphere
        .nodes
        .iter()
        .map(|(p, _)| (xi.value(p) - phi.value(p)).abs())
        .fold(0.0, f64::max);
    Ok(PsiMinimizer {
        solution,
        xi,
        energy_drop,
        boundary_error,
    })
}

/// Reference values for a half-space model `w` at a given resolution: `θ`
/// as `Ψ` of the extension of the sampled trace of `w`, and the discrete
/// energy drop of the minimization started from `w` itself.
#[derive(Debug, Clone)]
pub struct EpiReference<const D: usize> {
    pub model: OracleSolution<D>,
    pub theta: f64,
    pub model_drop: f64,
    pub angles: usize,
    pub latitudes: usize,
}

impl<const D: usize> EpiReference<D> {
    pub fn new(model: OracleSolution<D>, angles: usize, latitudes: usize, options: &EpiOptions<D>) -> Result<Self> {
        if !matches!(model.kind, OracleKind::Halfspace { .. }) {
            return Err(Error::param("w", "the model must be a half-space solution"));
        }
        let ext = homogeneous_extension(BoundaryDatum::sample(angles, latitudes, |p| model.value(p))?);
        let theta = psi_energy(&ext, &options.rules);
        let model_drop = minimize_psi(&ext, options)?.energy_drop;
        Ok(EpiReference {
            model,
            theta,
            model_drop,
            angles,
            latitudes,
        })
    }
}

/// Outcome of one epiperimetric comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpiCheck {
    /// `‖φ - w‖_{H^1(B_1)}`
    pub distance: f64,
    pub psi_phi: f64,
    /// `Ψ_φ(1)` plus the discrete energy drop, less the drop of the model.
    pub psi_xi: f64,
    pub theta: f64,
    /// `(Ψ_ξ - θ)/(Ψ_φ - θ)`; `None` when neutral.
    pub ratio: Option<f64>,
    pub neutral: bool,
    pub boundary_error: f64,
}

pub fn epiperimetric_check<const D: usize>(
    datum: &BoundaryDatum<D>,
    reference: &EpiReference<D>,
    options: &EpiOptions<D>,
) -> Result<EpiCheck> {
    if datum.min_value() < 0.0 {
        return Err(Error::param("phi", "boundary datum must be nonnegative"));
    }
    let phi = homogeneous_extension(datum.clone());
    let distance = h1_distance(&phi, &reference.model, &options.rules);
    if !(distance <= options.delta) {
        return Err(Error::DatumTooFar {
            distance,
            delta: options.delta,
        });
    }
    let psi_phi = psi_energy(&phi, &options.rules);
    let gap = psi_phi - reference.theta;
    if !(gap > NEUTRAL_GAP) {
        return Ok(EpiCheck {
            distance,
            psi_phi,
            psi_xi: psi_phi,
            theta: reference.theta,
            ratio: None,
            neutral: true,
            boundary_error: 0.0,
        });
    }
    let minimizer = minimize_psi(&phi, options)?;
    let psi_xi = psi_phi + minimizer.energy_drop - reference.model_drop;
    Ok(EpiCheck {
        distance,
        psi_phi,
        psi_xi,
        theta: reference.theta,
        ratio: Some((psi_xi - reference.theta) / gap),
        neutral: false,
        boundary_error: minimizer.boundary_error,
    })
}

/// Number of perturbation modes: `cos mt, sin mt` for `m <= 4` in 2D,
/// monomials of degree `<= 4` in 3D.
pub fn mode_count<const D: usize>() -> usize {
    if D == 2 {
        2 * MAX_MODE + 1
    } else {
        35
    }
}

/// Value of mode `index` at a unit vector.
pub fn mode<const D: usize>(index: usize, unit: &Point<D>) -> f64 {
    if D == 2 {
        let t = libm::atan2(unit[1], unit[0]);
        let m = index.div_ceil(2) as f64;
        return if index == 0 {
            1.0
        } else if index % 2 == 1 {
            libm::cos(m * t)
        } else {
            libm::sin(m * t)
        };
    }
    let mut k = 0;
    for degree in 0..=MAX_MODE as u32 {
        for a in 0..=degree {
            for b in 0..=(degree - a) {
                if k == index {
                    let c = degree - a - b;
                    return libm::pow(unit[0], a as f64) * libm::pow(unit[1], b as f64) * libm::pow(unit[2], c as f64);
                }
                k += 1;
            }
        }
    }
    0.0
}

/// `max(0, w + s Σ ε_m T_m)` on `∂B_1`.
pub fn perturbed_datum<const D: usize>(
    model: &OracleSolution<D>,
    coefficients: &[f64],
    scale: f64,
    angles: usize,
    latitudes: usize,
) -> Result<BoundaryDatum<D>> {
    BoundaryDatum::sample(angles, latitudes, |p| {
        let bump: f64 = coefficients.iter().enumerate().map(|(i, e)| e * mode(i, p)).sum();
        (model.value(p) + scale * bump).max(0.0)
    })
}

/// Scale `s` with `‖φ_s - w‖_{H^1} = target` for the perturbation
/// direction `coefficients`, by bisection.
pub fn scale_to_distance<const D: usize>(
    model: &OracleSolution<D>,
    coefficients: &[f64],
    target: f64,
    angles: usize,
    latitudes: usize,
    rules: &Rules<D>,
) -> Result<f64> {
    if !(target > 0.0) {
        return Err(Error::param("target", "distance must be positive"));
    }
    let distance = |s: f64| -> Result<f64> {
        let phi = homogeneous_extension(perturbed_datum(model, coefficients, s, angles, latitudes)?);
        Ok(h1_distance(&phi, model, rules))
    };
    let mut hi = 1.0;
    while distance(hi)? < target {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::param("coefficients", "perturbation direction is degenerate"));
        }
    }
    let mut lo = 0.0;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if distance(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Empirical `κ = 1 - max ratio` over the non-neutral checks.
pub fn empirical_kappa(checks: &[EpiCheck]) -> Option<f64> {
    checks
        .iter()
        .filter_map(|c| c.ratio)
        .fold(None, |m: Option<f64>, r| Some(m.map_or(r, |m| m.max(r))))
        .map(|worst| 1.0 - worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn extension_reproduces_homogeneous_functions() {
        let w = OracleSolution::<2>::halfspace_at_angle(0.4);
        let ext = homogeneous_extension(BoundaryDatum::standard(|p| w.value(p)));
        let c = homogeneous_extension(BoundaryDatum::<2>::standard(|_| 0.7));
        let q = OracleSolution::<3>::quadratic([[0.2, 0.05, 0.0], [0.05, 0.2, 0.0], [0.0, 0.0, 0.1]]).unwrap();
        let ext3 = homogeneous_extension(BoundaryDatum::standard(|p| q.value(p)));
        for x in [[0.3, 0.1], [-0.5, 0.6], [0.01, -0.02]] {
            assert_relative_eq!(ext.value(&x), w.value(&x), epsilon = 1e-6);
            assert_relative_eq!(c.value(&x), 0.7 * linalg::dot(&x, &x), epsilon = 1e-14);
        }
        for x in [[0.3, 0.1, -0.4], [0.0, 0.0, 0.9], [-0.2, 0.5, 0.1]] {
            assert_relative_eq!(ext3.value(&x), q.value(&x), epsilon = 1e-6);
            let g = ext3.gradient(&x);
            let e = q.gradient(&x);
            assert!(linalg::norm(&linalg::sub(&g, &e)) < 1e-5);
        }
    }

    #[test]
    fn modes_span_low_frequencies() {
        let p = [libm::cos(0.3), libm::sin(0.3)];
        assert_eq!(mode_count::<2>(), 9);
        assert_relative_eq!(mode(0, &p), 1.0);
        assert_relative_eq!(mode(7, &p), libm::cos(1.2), epsilon = 1e-14);
        assert_relative_eq!(mode(8, &p), libm::sin(1.2), epsilon = 1e-14);
        assert_relative_eq!(mode::<3>(34, &[0.0, 0.0, 1.0]), 0.0);
        assert_relative_eq!(mode::<3>(20, &[0.0, 0.0, 1.0]), 1.0);
    }

    #[test]
    fn model_datum_is_neutral_and_far_data_rejected() {
        let options = EpiOptions::<2>::new(33).unwrap();
        let w = OracleSolution::<2>::halfspace([1.0, 0.0]).unwrap();
        let reference = EpiReference::new(w, 256, 0, &options).unwrap();
        assert_relative_eq!(reference.theta, PI / 16.0, max_relative = 1e-3);
        let same = BoundaryDatum::sample(256, 0, |p| w.value(p)).unwrap();
        let check = epiperimetric_check(&same, &reference, &options).unwrap();
        assert!(check.neutral);
        assert_eq!(check.ratio, None);
        let far = BoundaryDatum::sample(256, 0, |p| w.value(p) + 0.5).unwrap();
        assert!(matches!(
            epiperimetric_check(&far, &reference, &options),
            Err(Error::DatumTooFar { .. })
        ));
    }

    #[test]
    fn perturbation_contracts() {
        let options = EpiOptions::<2>::new(65).unwrap();
        let w = OracleSolution::<2>::halfspace([1.0, 0.0]).unwrap();
        let reference = EpiReference::new(w, 256, 0, &options).unwrap();
        let eps = [0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        let s = scale_to_distance(&w, &eps, 0.04, 256, 0, &options.rules).unwrap();
        let datum = perturbed_datum(&w, &eps, s, 256, 0).unwrap();
        let check = epiperimetric_check(&datum, &reference, &options).unwrap();
        assert_relative_eq!(check.distance, 0.04, max_relative = 1e-6);
        assert!(!check.neutral);
        assert!(check.psi_xi <= check.psi_phi + 1e-8);
        assert!(check.ratio.unwrap() < 1.0);
        assert!(check.boundary_error <= 2.0 * 2.0 / 64.0);
        assert_eq!(empirical_kappa(&[check]), Some(1.0 - check.ratio.unwrap()));
    }
}
