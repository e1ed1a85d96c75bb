//! Numerical core for the classical obstacle problem with variable matrix
//! coefficients.
//!
//! The crate is `no_std` (it needs `alloc`) and contains everything that is
//! pure computation: coefficient fields and their normalization, a projected
//! SOR solver for the discrete complementarity problem, closed-form global
//! solutions, the Weiss and Monneau energies, blow-up classification and the
//! epiperimetric competitor. File formats, configuration and the CLI live in
//! the `obstacle-lab` crate.
//!
//! Points are plain arrays `[f64; D]` with `D` the space dimension (2 or 3).

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod blowup;
pub mod coefficients;
pub mod energies;
pub mod epiperimetric;
mod error;
pub mod grid;
pub mod lcp;
pub mod linalg;
pub mod oracles;
pub mod quadrature;

pub use error::{Error, Result};

/// A point (or vector) of `R^D`.
pub type Point<const D: usize> = [f64; D];

/// Anything that can be evaluated together with its gradient: closed-form
/// oracles, interpolated grid solutions, rescaled and normalized views.
pub trait Sampler<const D: usize> {
    fn value(&self, x: &Point<D>) -> f64;
    fn gradient(&self, x: &Point<D>) -> Point<D>;

    /// Largest `r` for which `B_r(center)` may be sampled.
    fn reach(&self, center: &Point<D>) -> f64 {
        let _ = center;
        f64::INFINITY
    }
}

impl<const D: usize, S: Sampler<D> + ?Sized> Sampler<D> for &S {
    fn value(&self, x: &Point<D>) -> f64 {
        (**self).value(x)
    }
    fn gradient(&self, x: &Point<D>) -> Point<D> {
        (**self).gradient(x)
    }
    fn reach(&self, center: &Point<D>) -> f64 {
        (**self).reach(center)
    }
}
