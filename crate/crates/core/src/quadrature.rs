//! Quadrature: Gauss–Legendre rules, adaptive integration (including
//! integrals from `0+` with integrable singularities) and node sets on the
//! unit ball and unit sphere of `R^2` / `R^3`.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::Point;

/// Gauss–Legendre nodes and weights on `[-1, 1]`, by Newton iteration on the
/// Legendre recurrence.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut rule = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = libm::cos(PI * (i as f64 + 0.75) / (n as f64 + 0.5));
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let step = p / dp;
            x -= step;
            if step.abs() <= 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.push((x, w));
    }
    rule.reverse();
    rule
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let dp = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, dp)
}

/// Gauss–Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_on(a: f64, b: f64, n: usize) -> Vec<(f64, f64)> {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    gauss_legendre(n)
        .into_iter()
        .map(|(x, w)| (mid + half * x, half * w))
        .collect()
}

/// Adaptive integration comparing 8- and 16-point Gauss–Legendre rules on
/// each panel and bisecting until they agree.
#[derive(Debug, Clone)]
pub struct Adaptive {
    coarse: Vec<(f64, f64)>,
    fine: Vec<(f64, f64)>,
    pub tolerance: f64,
    pub max_depth: u32,
}

impl Default for Adaptive {
    fn default() -> Self {
        Adaptive::new(1e-12)
    }
}

impl Adaptive {
    pub fn new(tolerance: f64) -> Self {
        Adaptive {
            coarse: gauss_legendre(8),
            fine: gauss_legendre(16),
            tolerance,
            max_depth: 48,
        }
    }

    fn panel(&self, f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let coarse: f64 = self.coarse.iter().map(|&(x, w)| w * f(mid + half * x)).sum();
        let fine: f64 = self.fine.iter().map(|&(x, w)| w * f(mid + half * x)).sum();
        (half * fine, (half * (fine - coarse)).abs())
    }

    fn recurse(&self, f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (value, error) = self.panel(f, a, b);
        if error <= tol || depth >= self.max_depth {
            return value;
        }
        let mid = 0.5 * (a + b);
        self.recurse(f, a, mid, 0.5 * tol, depth + 1) + self.recurse(f, mid, b, 0.5 * tol, depth + 1)
    }

    /// `∫_a^b f`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        if a == b {
            return 0.0;
        }
        let (value, _) = self.panel(&f, a, b);
        let tol = self.tolerance.max(self.tolerance * value.abs());
        self.recurse(&f, a, b, tol, 0)
    }

    /// `∫_0^∞ g`, through `τ = s / (1 - s)`.
    pub fn integrate_semi_infinite(&self, g: impl Fn(f64) -> f64) -> f64 {
        self.integrate(
            |s| {
                let one_minus = 1.0 - s;
                if one_minus <= 0.0 {
                    return 0.0;
                }
                let tau = s / one_minus;
                let v = g(tau) / (one_minus * one_minus);
                if v.is_finite() {
                    v
                } else {
                    0.0
                }
            },
            0.0,
            1.0,
        )
    }

    /// `∫_0^r f(t) dt` for integrands that may be singular (but integrable)
    /// at `0`, using `t = r e^{-τ}`. Mass below `t ≈ 1e-300 r` is dropped;
    /// slowly decaying integrands should be written in `τ` directly.
    pub fn integrate_from_zero(&self, f: impl Fn(f64) -> f64, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        self.integrate_semi_infinite(|tau| {
            let t = r * libm::exp(-tau);
            if t <= 0.0 {
                0.0
            } else {
                f(t) * t
            }
        })
    }
}

/// Nodes and weights on the unit sphere `S^{D-1}`; the weights sum to the
/// sphere's measure (`2π` in 2D, `4π` in 3D).
#[derive(Debug, Clone)]
pub struct SphereRule<const D: usize> {
    pub nodes: Vec<(Point<D>, f64)>,
}

impl<const D: usize> SphereRule<D> {
    /// Uniform trapezoid in angle (2D) or a latitude-longitude grid with
    /// Gauss–Legendre latitudes in `cos φ` and uniform longitudes (3D).
    pub fn new(angles: usize, latitudes: usize) -> Self {
        assert!(D == 2 || D == 3, "only dimensions 2 and 3 are supported");
        let mut nodes = Vec::new();
        if D == 2 {
            let w = 2.0 * PI / angles as f64;
            for k in 0..angles {
                let t = 2.0 * PI * k as f64 / angles as f64;
                let mut p = [0.0; D];
                p[0] = libm::cos(t);
                p[1] = libm::sin(t);
                nodes.push((p, w));
            }
        } else {
            let dphi = 2.0 * PI / angles as f64;
            for (z, wz) in gauss_legendre(latitudes) {
                let rho = libm::sqrt((1.0 - z * z).max(0.0));
                for k in 0..angles {
                    let t = 2.0 * PI * k as f64 / angles as f64;
                    let mut p = [0.0; D];
                    p[0] = rho * libm::cos(t);
                    p[1] = rho * libm::sin(t);
                    p[2] = z;
                    nodes.push((p, wz * dphi));
                }
            }
        }
        SphereRule { nodes }
    }

    /// 256 angles in 2D, 64 x 128 latitude-longitude nodes in 3D.
    pub fn standard() -> Self {
        if D == 2 {
            SphereRule::new(256, 0)
        } else {
            SphereRule::new(128, 64)
        }
    }

    pub fn measure(&self) -> f64 {
        self.nodes.iter().map(|(_, w)| w).sum()
    }

    /// `∫_{∂B_1} g`.
    pub fn integrate(&self, g: impl Fn(&Point<D>) -> f64) -> f64 {
        self.nodes.iter().map(|(p, w)| w * g(p)).sum()
    }
}

/// Product rule on the spherical shell `inner <= |x| <= outer`: Gauss–Legendre
/// in the radius (with the `ρ^{D-1}` Jacobian folded into the weights) times a
/// [`SphereRule`].
#[derive(Debug, Clone)]
pub struct BallRule<const D: usize> {
    pub nodes: Vec<(Point<D>, f64)>,
}

impl<const D: usize> BallRule<D> {
    pub fn shell(inner: f64, outer: f64, radial: usize, sphere: &SphereRule<D>) -> Self {
        let mut nodes = Vec::with_capacity(radial * sphere.nodes.len());
        for (rho, wr) in gauss_legendre_on(inner, outer, radial) {
            let jac = libm::pow(rho, (D - 1) as f64);
            for (p, ws) in &sphere.nodes {
                nodes.push((core::array::from_fn(|i| rho * p[i]), wr * jac * ws));
            }
        }
        BallRule { nodes }
    }

    pub fn unit(radial: usize, sphere: &SphereRule<D>) -> Self {
        BallRule::shell(0.0, 1.0, radial, sphere)
    }

    pub fn measure(&self) -> f64 {
        self.nodes.iter().map(|(_, w)| w).sum()
    }

    pub fn integrate(&self, g: impl Fn(&Point<D>) -> f64) -> f64 {
        self.nodes.iter().map(|(p, w)| w * g(p)).sum()
    }
}

/// Default radial node count for ball integrals.
pub const DEFAULT_RADIAL_NODES: usize = 24;

/// The ball and sphere rules used together by the energy functionals.
#[derive(Debug, Clone)]
pub struct Rules<const D: usize> {
    pub sphere: SphereRule<D>,
    pub ball: BallRule<D>,
}

impl<const D: usize> Rules<D> {
    pub fn new(sphere: SphereRule<D>, radial: usize) -> Self {
        let ball = BallRule::unit(radial, &sphere);
        Rules { sphere, ball }
    }

    pub fn standard() -> Self {
        Rules::new(SphereRule::standard(), DEFAULT_RADIAL_NODES)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        let rule = gauss_legendre(8);
        let s: f64 = rule.iter().map(|(_, w)| w).sum();
        assert_relative_eq!(s, 2.0, epsilon = 1e-14);
        // degree 14: ∫ x^14 = 2/15
        let m: f64 = rule.iter().map(|(x, w)| w * x.powi(14)).sum();
        assert_relative_eq!(m, 2.0 / 15.0, epsilon = 1e-14);
    }

    #[test]
    fn adaptive_handles_singular_integrands() {
        let q = Adaptive::default();
        // ∫_0^1 t^{-2/3} dt = 3
        let v = q.integrate_from_zero(|t| libm::pow(t, -2.0 / 3.0), 1.0);
        assert_relative_eq!(v, 3.0, epsilon = 1e-9);
        // ∫_0^∞ (1+τ)^{-3} dτ = 1/2
        let w = q.integrate_semi_infinite(|t| libm::pow(1.0 + t, -3.0));
        assert_relative_eq!(w, 0.5, epsilon = 1e-10);
        let s = q.integrate(libm::sin, 0.0, PI);
        assert_relative_eq!(s, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn sphere_and_ball_measures() {
        let s2 = SphereRule::<2>::standard();
        assert_relative_eq!(s2.measure(), 2.0 * PI, epsilon = 1e-12);
        let b2 = BallRule::unit(8, &s2);
        assert_relative_eq!(b2.measure(), PI, epsilon = 1e-12);
        let s3 = SphereRule::<3>::new(32, 16);
        assert_relative_eq!(s3.measure(), 4.0 * PI, epsilon = 1e-12);
        let b3 = BallRule::unit(8, &s3);
        assert_relative_eq!(b3.measure(), 4.0 * PI / 3.0, epsilon = 1e-12);
        // ∫_{B_1} |x|^2 = 2π/4 in 2D
        assert_relative_eq!(
            b2.integrate(|p| p[0] * p[0] + p[1] * p[1]),
            PI / 2.0,
            epsilon = 1e-12
        );
    }
}
