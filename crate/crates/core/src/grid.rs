//! Uniform Cartesian grids on `[lower, upper]^D`, nodal functions and their
//! interpolation.
//!
//! Values are interpolated with tensor-product cubic Lagrange polynomials,
//! which reproduce quadratics exactly; gradients come from central
//! differences at the nodes, interpolated multilinearly.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::Matrix;
use crate::{Error, Point, Result, Sampler};

/// Smallest admissible node count per axis.
pub const MIN_NODES: usize = 17;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid<const D: usize> {
    pub nodes_per_axis: usize,
    pub lower: f64,
    pub upper: f64,
}

impl<const D: usize> Grid<D> {
    pub fn new(nodes_per_axis: usize, lower: f64, upper: f64) -> Result<Self> {
        if !(D == 2 || D == 3) {
            return Err(Error::param("dimension", "only n = 2 and n = 3 are supported"));
        }
        if nodes_per_axis < MIN_NODES {
            return Err(Error::param(
                "nodes_per_axis",
                alloc::format!("need at least {MIN_NODES} nodes per axis, got {nodes_per_axis}"),
            ));
        }
        if !(upper > lower) {
            return Err(Error::param("box", "upper bound must exceed lower bound"));
        }
        Ok(Grid {
            nodes_per_axis,
            lower,
            upper,
        })
    }

    /// `[-1, 1]^D` with `N` nodes per axis, `h = 2/(N-1)`.
    pub fn unit_box(nodes_per_axis: usize) -> Result<Self> {
        Grid::new(nodes_per_axis, -1.0, 1.0)
    }

    pub fn spacing(&self) -> f64 {
        (self.upper - self.lower) / (self.nodes_per_axis - 1) as f64
    }

    pub fn len(&self) -> usize {
        self.nodes_per_axis.pow(D as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat-index stride of each axis (axis 0 fastest).
    pub fn strides(&self) -> [usize; D] {
        let mut s = [1; D];
        for k in 1..D {
            s[k] = s[k - 1] * self.nodes_per_axis;
        }
        s
    }

    pub fn coords(&self, index: usize) -> [usize; D] {
        let mut rest = index;
        core::array::from_fn(|_| {
            let c = rest % self.nodes_per_axis;
            rest /= self.nodes_per_axis;
            c
        })
    }

    pub fn index(&self, coords: &[usize; D]) -> usize {
        let s = self.strides();
        (0..D).map(|k| coords[k] * s[k]).sum()
    }

    pub fn point(&self, index: usize) -> Point<D> {
        let c = self.coords(index);
        let h = self.spacing();
        core::array::from_fn(|k| self.lower + h * c[k] as f64)
    }

    pub fn is_boundary(&self, index: usize) -> bool {
        let last = self.nodes_per_axis - 1;
        self.coords(index).iter().any(|&c| c == 0 || c == last)
    }

    /// Distance from `x` to the nearest face of the box (negative outside).
    pub fn distance_to_boundary(&self, x: &Point<D>) -> f64 {
        x.iter()
            .map(|&xi| (xi - self.lower).min(self.upper - xi))
            .fold(f64::INFINITY, f64::min)
    }

    /// Node nearest to `x` (clamped into the box).
    pub fn nearest_node(&self, x: &Point<D>) -> usize {
        let h = self.spacing();
        let last = (self.nodes_per_axis - 1) as f64;
        let c: [usize; D] =
            core::array::from_fn(|k| libm::round(((x[k] - self.lower) / h).clamp(0.0, last)) as usize);
        self.index(&c)
    }
}

/// Values attached to the nodes of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction<const D: usize> {
    pub grid: Grid<D>,
    pub values: Vec<f64>,
}

impl<const D: usize> GridFunction<D> {
    pub fn zeros(grid: Grid<D>) -> Self {
        GridFunction {
            values: vec![0.0; grid.len()],
            grid,
        }
    }

    pub fn from_fn(grid: Grid<D>, f: impl Fn(&Point<D>) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(&grid.point(i))).collect();
        GridFunction { grid, values }
    }

    /// Gradient at a node of a nonnegative function. Nodes where the
    /// function vanishes get `0`. Next to a zero neighbour the second-order
    /// one-sided difference from the positive side replaces the central
    /// one; on the box faces a first-order one-sided difference is used.
    pub fn node_gradient(&self, index: usize) -> Point<D> {
        let g = &self.grid;
        let h = g.spacing();
        let c = g.coords(index);
        let s = g.strides();
        let last = g.nodes_per_axis - 1;
        let v = &self.values;
        if v[index] == 0.0 {
            return [0.0; D];
        }
        core::array::from_fn(|k| {
            if c[k] == 0 {
                return (v[index + s[k]] - v[index]) / h;
            }
            if c[k] == last {
                return (v[index] - v[index - s[k]]) / h;
            }
            let (lo, hi) = (v[index - s[k]], v[index + s[k]]);
            if lo == 0.0 && hi > 0.0 && c[k] + 2 <= last && v[index + 2 * s[k]] > 0.0 {
                (-3.0 * v[index] + 4.0 * hi - v[index + 2 * s[k]]) / (2.0 * h)
            } else if hi == 0.0 && lo > 0.0 && c[k] >= 2 && v[index - 2 * s[k]] > 0.0 {
                (3.0 * v[index] - 4.0 * lo + v[index - 2 * s[k]]) / (2.0 * h)
            } else {
                (hi - lo) / (2.0 * h)
            }
        })
    }

    /// Second-difference Hessian at an interior node (pure and mixed
    /// centered differences).
    pub fn node_hessian(&self, index: usize) -> Matrix<D> {
        let g = &self.grid;
        let h = g.spacing();
        let s = g.strides();
        let v = &self.values;
        let mut m = [[0.0; D]; D];
        for i in 0..D {
            m[i][i] = (v[index + s[i]] - 2.0 * v[index] + v[index - s[i]]) / (h * h);
            for j in 0..i {
                let pp = v[index + s[i] + s[j]];
                let mm = v[index - s[i] - s[j]];
                let pm = v[index + s[i] - s[j]];
                let mp = v[index - s[i] + s[j]];
                let d = (pp - pm - mp + mm) / (4.0 * h * h);
                m[i][j] = d;
                m[j][i] = d;
            }
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

fn cubic_weights(t: f64) -> [f64; 4] {
    // Lagrange basis on the nodes 0, 1, 2, 3
    let a = t;
    let b = t - 1.0;
    let c = t - 2.0;
    let d = t - 3.0;
    [
        -b * c * d / 6.0,
        a * c * d / 2.0,
        -a * b * d / 2.0,
        a * b * c / 6.0,
    ]
}

/// Interpolating view of a nodal function with precomputed nodal gradients.
#[derive(Debug, Clone)]
pub struct GridSampler<const D: usize> {
    pub function: GridFunction<D>,
    gradients: Vec<Point<D>>,
}

impl<const D: usize> GridSampler<D> {
    pub fn new(function: GridFunction<D>) -> Self {
        let gradients = (0..function.grid.len()).map(|i| function.node_gradient(i)).collect();
        GridSampler { function, gradients }
    }

    pub fn grid(&self) -> &Grid<D> {
        &self.function.grid
    }

    fn local(&self, x: &Point<D>, window: usize) -> ([usize; D], [f64; D]) {
        let g = &self.function.grid;
        let h = g.spacing();
        let max_start = g.nodes_per_axis - window;
        let mut base = [0usize; D];
        let mut frac = [0.0; D];
        for k in 0..D {
            let t = (x[k] - g.lower) / h;
            let offset = if window == 4 { 1.0 } else { 0.0 };
            let start = (libm::floor(t) - offset).clamp(0.0, max_start as f64);
            base[k] = start as usize;
            frac[k] = t - start;
        }
        (base, frac)
    }
}

impl<const D: usize> Sampler<D> for GridSampler<D> {
    fn value(&self, x: &Point<D>) -> f64 {
        let g = &self.function.grid;
        let (base, frac) = self.local(x, 4);
        let w: [[f64; 4]; D] = core::array::from_fn(|k| cubic_weights(frac[k]));
        let s = g.strides();
        let origin: usize = (0..D).map(|k| base[k] * s[k]).sum();
        let mut acc = 0.0;
        for combo in 0..4usize.pow(D as u32) {
            let mut rest = combo;
            let mut weight = 1.0;
            let mut offset = 0;
            for k in 0..D {
                let o = rest % 4;
                rest /= 4;
                weight *= w[k][o];
                offset += o * s[k];
            }
            acc += weight * self.function.values[origin + offset];
        }
        acc
    }

    fn gradient(&self, x: &Point<D>) -> Point<D> {
        let g = &self.function.grid;
        let (base, frac) = self.local(x, 2);
        let s = g.strides();
        let origin: usize = (0..D).map(|k| base[k] * s[k]).sum();
        let mut acc = [0.0; D];
        for combo in 0..(1usize << D) {
            let mut weight = 1.0;
            let mut offset = 0;
            for k in 0..D {
                let bit = (combo >> k) & 1;
                weight *= if bit == 1 { frac[k] } else { 1.0 - frac[k] };
                offset += bit * s[k];
            }
            let gn = &self.gradients[origin + offset];
            for k in 0..D {
                acc[k] += weight * gn[k];
            }
        }
        acc
    }

    /// Distance to the box minus a `2h` margin.
    fn reach(&self, center: &Point<D>) -> f64 {
        let g = &self.function.grid;
        g.distance_to_boundary(center) - 2.0 * g.spacing()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn indexing_round_trips() {
        let g = Grid::<3>::unit_box(17).unwrap();
        for idx in [0, 5, 289, 4912] {
            assert_eq!(g.index(&g.coords(idx)), idx);
        }
        assert!(g.is_boundary(0));
        assert!(!g.is_boundary(g.index(&[8, 8, 8])));
        assert_eq!(g.point(g.index(&[8, 8, 8])), [0.0, 0.0, 0.0]);
        assert!(Grid::<2>::unit_box(9).is_err());
    }

    #[test]
    fn quadratics_are_reproduced() {
        let g = Grid::<2>::unit_box(33).unwrap();
        let q = |x: &Point<2>| 0.3 * x[0] * x[0] - 0.2 * x[0] * x[1] + 0.7 * x[1] * x[1] + x[0] - 2.0;
        let s = GridSampler::new(GridFunction::from_fn(g, q));
        for x in [[0.013, -0.71], [0.5, 0.5], [-0.99, 0.98], [0.1234, 0.4321]] {
            assert_relative_eq!(s.value(&x), q(&x), epsilon = 1e-13);
            let gr = s.gradient(&x);
            // central differences and bilinear interpolation are exact here
            // away from the faces
            if g.distance_to_boundary(&x) > 2.0 * g.spacing() {
                assert_relative_eq!(gr[0], 0.6 * x[0] - 0.2 * x[1] + 1.0, epsilon = 1e-12);
                assert_relative_eq!(gr[1], -0.2 * x[0] + 1.4 * x[1], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn hessian_of_quadratic() {
        let g = Grid::<3>::unit_box(17).unwrap();
        let f = GridFunction::from_fn(g, |x| x[0] * x[0] / 4.0 + x[1] * x[2]);
        let hs = f.node_hessian(g.index(&[5, 6, 7]));
        assert_relative_eq!(hs[0][0], 0.5, epsilon = 1e-12);
        assert_relative_eq!(hs[1][2], 1.0, epsilon = 1e-12);
        assert_relative_eq!(hs[0][1], 0.0, epsilon = 1e-12);
    }
}
