//! Closed-form solutions with `A ≡ I`, `f ≡ 1`: the two families of
//! 2-homogeneous global solutions and a radial annulus solution in the
//! plane.

use alloc::format;

use crate::linalg::{self, Matrix, SymmetricEigen};
use crate::quadrature::Rules;
use crate::{Error, Point, Result, Sampler};

/// Tolerance on `|ν| = 1` and `Tr B = 1/2` at construction.
const SHAPE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OracleKind<const D: usize> {
    /// `½ (<x,ν> ∨ 0)^2`
    Halfspace { normal: Point<D> },
    /// `<Bx, x>` with `B` symmetric PSD, `Tr B = ½`
    Quadratic { matrix: Matrix<D> },
    /// Radial solution vanishing on `|x| <= a` (2D only).
    Annulus { radius: f64 },
}

/// Type of a 2-homogeneous blow-up.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlowupType {
    /// Half-space solution (regular point).
    A,
    /// Quadratic polynomial (singular point).
    B,
}

/// Description of the free boundary `∂{u > 0}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FreeBoundary<const D: usize> {
    /// `{<x,ν> = 0}`
    Hyperplane { normal: Point<D> },
    /// `Ker B`; the zero set of the quadratic.
    Kernel { matrix: Matrix<D> },
    Circle { radius: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleSolution<const D: usize> {
    pub kind: OracleKind<D>,
}

impl<const D: usize> OracleSolution<D> {
    /// Half-space solution; `normal` must be a unit vector.
    pub fn halfspace(normal: Point<D>) -> Result<Self> {
        let len = linalg::norm(&normal);
        if !((len - 1.0).abs() <= SHAPE_TOLERANCE) {
            return Err(Error::param("normal", format!("|ν| must be 1, got {len}")));
        }
        Ok(OracleSolution {
            kind: OracleKind::Halfspace { normal },
        })
    }

    /// Half-space solution in 2D with normal `(cos t, sin t)`.
    pub fn halfspace_at_angle(angle: f64) -> Self {
        let mut normal = [0.0; D];
        normal[0] = libm::cos(angle);
        normal[1] = libm::sin(angle);
        OracleSolution {
            kind: OracleKind::Halfspace { normal },
        }
    }

    /// Quadratic solution; `matrix` must be symmetric PSD with trace ½.
    pub fn quadratic(matrix: Matrix<D>) -> Result<Self> {
        if linalg::asymmetry(&matrix) > SHAPE_TOLERANCE {
            return Err(Error::param("B", "matrix must be symmetric"));
        }
        let tr = linalg::trace(&matrix);
        if !((tr - 0.5).abs() <= SHAPE_TOLERANCE) {
            return Err(Error::param("B", format!("Tr B must be 1/2, got {tr}")));
        }
        let eig = SymmetricEigen::new(&matrix);
        if eig.min() < -SHAPE_TOLERANCE {
            return Err(Error::NotPositiveDefinite {
                min_eigenvalue: eig.min(),
            });
        }
        Ok(OracleSolution {
            kind: OracleKind::Quadratic { matrix },
        })
    }

    /// `u = 0` on `|x| <= a`, `(r^2 - a^2)/4 - (a^2/2) log(r/a)` outside.
    pub fn annulus(radius: f64) -> Result<Self> {
        if D != 2 {
            return Err(Error::param("dimension", "the annulus solution is planar"));
        }
        if !(radius > 0.0) {
            return Err(Error::param("a", format!("radius must be positive, got {radius}")));
        }
        Ok(OracleSolution {
            kind: OracleKind::Annulus { radius },
        })
    }

    pub fn is_two_homogeneous(&self) -> bool {
        !matches!(self.kind, OracleKind::Annulus { .. })
    }

    /// Type of the blow-up at free-boundary points (`A` for the annulus).
    pub fn blowup_type(&self) -> BlowupType {
        match self.kind {
            OracleKind::Quadratic { .. } => BlowupType::B,
            _ => BlowupType::A,
        }
    }

    pub fn free_boundary(&self) -> FreeBoundary<D> {
        match self.kind {
            OracleKind::Halfspace { normal } => FreeBoundary::Hyperplane { normal },
            OracleKind::Quadratic { matrix } => FreeBoundary::Kernel { matrix },
            OracleKind::Annulus { radius } => FreeBoundary::Circle { radius },
        }
    }

    /// `Δu` away from the free boundary.
    pub fn laplacian(&self, x: &Point<D>) -> f64 {
        if self.value(x) > 0.0 {
            1.0
        } else {
            match self.kind {
                OracleKind::Quadratic { .. } => 1.0,
                _ => 0.0,
            }
        }
    }

    /// `Φ(0+)` at a free-boundary point: `θ` for type `A`, `2θ` for type `B`.
    pub fn expected_phi(&self, rules: &Rules<D>) -> f64 {
        reference_energy(self, Quantity::Psi, rules)
    }
}

impl<const D: usize> Sampler<D> for OracleSolution<D> {
    fn value(&self, x: &Point<D>) -> f64 {
        match self.kind {
            OracleKind::Halfspace { normal } => {
                let s = linalg::dot(x, &normal).max(0.0);
                0.5 * s * s
            }
            OracleKind::Quadratic { matrix } => linalg::quadratic_form(&matrix, x),
            OracleKind::Annulus { radius: a } => {
                let r = linalg::norm(x);
                if r <= a {
                    0.0
                } else {
                    ((r * r - a * a) / 4.0 - 0.5 * a * a * libm::log(r / a)).max(0.0)
                }
            }
        }
    }

    fn gradient(&self, x: &Point<D>) -> Point<D> {
        match self.kind {
            OracleKind::Halfspace { normal } => {
                let s = linalg::dot(x, &normal).max(0.0);
                linalg::scale(&normal, s)
            }
            OracleKind::Quadratic { matrix } => linalg::scale(&linalg::mat_vec(&matrix, x), 2.0),
            OracleKind::Annulus { radius: a } => {
                let r = linalg::norm(x);
                if r <= a {
                    [0.0; D]
                } else {
                    // u'(r) x / r
                    let du = 0.5 * r - 0.5 * a * a / r;
                    linalg::scale(x, du / r)
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    /// `Φ(1)` at the origin with `A ≡ I`, `f ≡ 1`.
    Phi,
    /// `Ψ_w(1) = ∫_{B_1}(|∇w|^2 + 2w) - 2∫_{∂B_1} w^2`.
    Psi,
}

/// Reference energy of an oracle, by quadrature with `rules`. For
/// 2-homogeneous oracles `Φ(1)` and `Ψ_w(1)` coincide; for the annulus both
/// refer to its half-space blow-up, `θ`.
pub fn reference_energy<const D: usize>(oracle: &OracleSolution<D>, quantity: Quantity, rules: &Rules<D>) -> f64 {
    let w = match oracle.kind {
        OracleKind::Annulus { .. } => {
            let mut e = [0.0; D];
            e[0] = 1.0;
            OracleSolution {
                kind: OracleKind::Halfspace { normal: e },
            }
        }
        _ => *oracle,
    };
    match quantity {
        Quantity::Phi | Quantity::Psi => psi_unit(&w, rules),
    }
}

/// `θ`, the energy of half-space solutions in dimension `D`.
pub fn theta<const D: usize>(rules: &Rules<D>) -> f64 {
    let mut e = [0.0; D];
    e[0] = 1.0;
    psi_unit(
        &OracleSolution {
            kind: OracleKind::Halfspace { normal: e },
        },
        rules,
    )
}

fn psi_unit<const D: usize>(w: &impl Sampler<D>, rules: &Rules<D>) -> f64 {
    let bulk = rules.ball.integrate(|x| {
        let g = w.gradient(x);
        linalg::dot(&g, &g) + 2.0 * w.value(x)
    });
    let boundary = rules.sphere.integrate(|x| {
        let v = w.value(x);
        v * v
    });
    bulk - 2.0 * boundary
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use core::f64::consts::PI;

    #[test]
    fn evaluation_examples() {
        let h = OracleSolution::<2>::halfspace([1.0, 0.0]).unwrap();
        assert_relative_eq!(h.value(&[0.4, 0.3]), 0.08, epsilon = 1e-15);
        assert_eq!(h.gradient(&[0.4, 0.3]), [0.4, 0.0]);
        let q = OracleSolution::<2>::quadratic(linalg::diagonal(&[0.25, 0.25])).unwrap();
        assert_relative_eq!(q.value(&[0.2, 0.2]), 0.02, epsilon = 1e-15);
        let a = OracleSolution::<2>::annulus(0.5).unwrap();
        assert_eq!(a.value(&[0.5, 0.0]), 0.0);
        assert_eq!(a.gradient(&[0.3, 0.4]), [0.0, 0.0]);
        // just outside the circle the gradient is continuous
        let g = a.gradient(&[0.5 + 1e-9, 0.0]);
        assert!(g[0].abs() < 1e-8);
    }

    #[test]
    fn constructors_validate_shape() {
        assert!(OracleSolution::<2>::halfspace([1.0, 1.0]).is_err());
        assert!(OracleSolution::<2>::quadratic(linalg::diagonal(&[0.5, 0.5])).is_err());
        assert!(OracleSolution::<2>::quadratic(linalg::diagonal(&[0.75, -0.25])).is_err());
        assert!(OracleSolution::<3>::annulus(0.5).is_err());
    }

    #[test]
    fn annulus_solves_the_equation() {
        // Δu = u'' + u'/r = 1 for r > a
        let a = 0.5;
        let u = OracleSolution::<2>::annulus(a).unwrap();
        for r in [0.6, 0.8, 1.2] {
            let h = 1e-4;
            let f = |s: f64| u.value(&[s, 0.0]);
            let d2 = (f(r + h) - 2.0 * f(r) + f(r - h)) / (h * h);
            let d1 = (f(r + h) - f(r - h)) / (2.0 * h);
            assert_relative_eq!(d2 + d1 / r, 1.0, epsilon = 1e-5);
        }
    }

    #[test]
    fn reference_energies() {
        let rules = Rules::<2>::standard();
        let h = OracleSolution::<2>::halfspace([1.0, 0.0]).unwrap();
        let theta = reference_energy(&h, Quantity::Psi, &rules);
        assert_relative_eq!(theta, PI / 16.0, epsilon = 1e-9);
        let q = OracleSolution::<2>::quadratic(linalg::diagonal(&[0.25, 0.25])).unwrap();
        let two_theta = reference_energy(&q, Quantity::Psi, &rules);
        assert_relative_eq!(two_theta, PI / 8.0, epsilon = 1e-9);
        assert_relative_eq!(two_theta / theta, 2.0, epsilon = 1e-8);
        // Ψ_v(1) = ∫_{B_1} v for the quadratic
        let int_v = rules.ball.integrate(|x| q.value(x));
        assert_relative_eq!(two_theta, int_v, epsilon = 1e-10);
    }

    #[test]
    fn two_homogeneity() {
        let h = OracleSolution::<3>::halfspace([0.0, 0.6, 0.8]).unwrap();
        let q = OracleSolution::<3>::quadratic(linalg::diagonal(&[0.25, 0.25, 0.0])).unwrap();
        let x = [0.3, -0.2, 0.7];
        for t in [0.1, 0.5, 3.0] {
            let tx = linalg::scale(&x, t);
            assert_relative_eq!(h.value(&tx), t * t * h.value(&x), max_relative = 1e-14);
            assert_relative_eq!(q.value(&tx), t * t * q.value(&x), max_relative = 1e-14);
        }
    }
}
