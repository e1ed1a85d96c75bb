//! Ball and sphere energies around a free-boundary point, the Weiss
//! functional `Φ`, its adjusted quasi-monotone version, the Monneau
//! functional and the calibration of their constants.
//!
//! Everything is evaluated in the normalized frame of the center: with
//! `x = x0 + L y`, the function `u_L(y) = u(x0 + L y)` and the field
//! `C(y) = A(x0)^{-1/2} A(x0 + L y) A(x0)^{-1/2}`, `f(x0 + L y) / f(x0)`.

use alloc::vec::Vec;

use crate::coefficients::{normalize_at, translate_to, CoefficientField, Modulus, Normalization};
use crate::linalg::{self, Matrix};
use crate::oracles::{BlowupType, OracleKind, OracleSolution};
use crate::quadrature::{Adaptive, Rules};
use crate::{Error, Point, Result, Sampler};

/// A function seen from the normalized frame of `x0`.
#[derive(Debug, Clone)]
pub struct Centered<S, const D: usize> {
    inner: S,
    pub normalization: Normalization<D>,
    /// The normalized field: `C(0) = I`, `f(0) = 1`.
    pub field: CoefficientField<D>,
    map_transpose: Matrix<D>,
    map_norm: f64,
}

impl<S: Sampler<D>, const D: usize> Centered<S, D> {
    pub fn new(inner: S, field: &CoefficientField<D>, x0: &Point<D>) -> Result<Self> {
        let (normalization, field) = normalize_at(field, x0)?;
        Ok(Centered {
            inner,
            map_transpose: linalg::transpose(&normalization.map),
            map_norm: linalg::spectral_norm(&normalization.map),
            normalization,
            field,
        })
    }

    /// The plain translation `y ↦ u(x0 + y)` with `A(x0 + y)`, `f(x0 + y)`.
    pub fn translated(inner: S, field: &CoefficientField<D>, x0: &Point<D>) -> Self {
        let (normalization, field) = translate_to(field, x0);
        Centered {
            inner,
            map_transpose: linalg::identity(),
            map_norm: 1.0,
            normalization,
            field,
        }
    }

    pub fn inner(&self) -> &S {
        &self.inner
    }

    /// Largest admissible radius around the center.
    pub fn max_radius(&self) -> f64 {
        self.reach(&[0.0; D])
    }

    pub fn check_radius(&self, r: f64) -> Result<()> {
        if !(r > 0.0) {
            return Err(Error::param("r", alloc::format!("radius must be positive, got {r}")));
        }
        let limit = self.max_radius();
        if r > limit {
            return Err(Error::RadiusTooLarge { radius: r, limit });
        }
        Ok(())
    }

    /// `E(r) = ∫_{B_r} <C ∇u_L, ∇u_L> + 2 f_L u_L`.
    pub fn ball_energy(&self, r: f64, rules: &Rules<D>) -> Result<f64> {
        self.check_radius(r)?;
        let scale = libm::pow(r, D as f64);
        let sum = rules.ball.integrate(|p| {
            let y = linalg::scale(p, r);
            let g = self.gradient(&y);
            let c = self.field.matrix_at(&y);
            linalg::quadratic_form(&c, &g) + 2.0 * self.field.source_at(&y) * self.value(&y)
        });
        Ok(scale * sum)
    }

    /// `H(r) = ∫_{∂B_r} μ u_L^2`.
    pub fn sphere_energy(&self, r: f64, rules: &Rules<D>) -> Result<f64> {
        self.check_radius(r)?;
        let scale = libm::pow(r, (D - 1) as f64);
        let sum = rules.sphere.integrate(|p| {
            let y = linalg::scale(p, r);
            let v = self.value(&y);
            self.field.mu(&y) * v * v
        });
        Ok(scale * sum)
    }

    /// `Φ(r) = r^{-n-2} E(r) - 2 r^{-n-3} H(r)`.
    pub fn phi(&self, r: f64, rules: &Rules<D>) -> Result<f64> {
        let n = D as f64;
        let e = self.ball_energy(r, rules)?;
        let h = self.sphere_energy(r, rules)?;
        Ok(libm::pow(r, -n - 2.0) * e - 2.0 * libm::pow(r, -n - 3.0) * h)
    }

    /// `∫_{∂B_r} μ (<μ^{-1} C ν, ∇u_L> - 2 u_L / r)^2`.
    pub fn radial_defect(&self, r: f64, rules: &Rules<D>) -> Result<f64> {
        self.check_radius(r)?;
        let scale = libm::pow(r, (D - 1) as f64);
        let sum = rules.sphere.integrate(|nu| {
            let y = linalg::scale(nu, r);
            let c = self.field.matrix_at(&y);
            let mu = linalg::quadratic_form(&c, nu);
            let conormal = linalg::scale(&linalg::mat_vec(&c, nu), 1.0 / mu);
            let d = linalg::dot(&conormal, &self.gradient(&y)) - 2.0 * self.value(&y) / r;
            mu * d * d
        });
        Ok(scale * sum)
    }

    /// `∫_{∂B_1} (u_L(r y)/r^2 - v(y))^2`.
    pub fn distance_to(&self, v: &impl Sampler<D>, r: f64, rules: &Rules<D>) -> Result<f64> {
        self.check_radius(r)?;
        let r2 = r * r;
        Ok(rules.sphere.integrate(|y| {
            let d = self.value(&linalg::scale(y, r)) / r2 - v.value(y);
            d * d
        }))
    }
}

impl<S: Sampler<D>, const D: usize> Sampler<D> for Centered<S, D> {
    fn value(&self, y: &Point<D>) -> f64 {
        self.inner.value(&self.normalization.to_original(y))
    }

    /// `L^T ∇u(x0 + L y)`.
    fn gradient(&self, y: &Point<D>) -> Point<D> {
        let g = self.inner.gradient(&self.normalization.to_original(y));
        linalg::mat_vec(&self.map_transpose, &g)
    }

    fn reach(&self, center: &Point<D>) -> f64 {
        self.inner.reach(&self.normalization.to_original(center)) / self.map_norm
    }
}

/// `E(r)` around `x0`.
pub fn ball_energy<S: Sampler<D>, const D: usize>(
    u: &S,
    field: &CoefficientField<D>,
    x0: &Point<D>,
    r: f64,
    rules: &Rules<D>,
) -> Result<f64> {
    Centered::new(u, field, x0)?.ball_energy(r, rules)
}

/// `H(r)` around `x0`.
pub fn sphere_energy<S: Sampler<D>, const D: usize>(
    u: &S,
    field: &CoefficientField<D>,
    x0: &Point<D>,
    r: f64,
    rules: &Rules<D>,
) -> Result<f64> {
    Centered::new(u, field, x0)?.sphere_energy(r, rules)
}

/// `Φ(r)` around `x0`.
pub fn weiss_phi<S: Sampler<D>, const D: usize>(
    u: &S,
    field: &CoefficientField<D>,
    x0: &Point<D>,
    r: f64,
    rules: &Rules<D>,
) -> Result<f64> {
    Centered::new(u, field, x0)?.phi(r, rules)
}

/// `Ψ_v(r) = r^{-n-2} ∫_{B_r}(|∇v|^2 + 2v) - 2 r^{-n-3} ∫_{∂B_r} v^2`.
pub fn psi_energy_at<const D: usize>(v: &impl Sampler<D>, r: f64, rules: &Rules<D>) -> f64 {
    let n = D as f64;
    let bulk = libm::pow(r, n)
        * rules.ball.integrate(|p| {
            let y = linalg::scale(p, r);
            let g = v.gradient(&y);
            linalg::dot(&g, &g) + 2.0 * v.value(&y)
        });
    let boundary = libm::pow(r, n - 1.0)
        * rules.sphere.integrate(|p| {
            let w = v.value(&linalg::scale(p, r));
            w * w
        });
    libm::pow(r, -n - 2.0) * bulk - 2.0 * libm::pow(r, -n - 3.0) * boundary
}

/// `Ψ_v(1)`.
pub fn psi_energy<const D: usize>(v: &impl Sampler<D>, rules: &Rules<D>) -> f64 {
    psi_energy_at(v, 1.0, rules)
}

/// `∫_{∂B_r} (<ν, ∇u> - 2u/r)^2`: zero for 2-homogeneous `u`.
pub fn euler_residual<const D: usize>(u: &impl Sampler<D>, r: f64, rules: &Rules<D>) -> f64 {
    libm::pow(r, (D - 1) as f64)
        * rules.sphere.integrate(|nu| {
            let y = linalg::scale(nu, r);
            let d = linalg::dot(nu, &u.gradient(&y)) - 2.0 * u.value(&y) / r;
            d * d
        })
}

/// Geometric radii `r_max 2^{-k/per_octave}` down to `r_min`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadiusSchedule {
    pub r_max: f64,
    pub r_min: f64,
    pub per_octave: u32,
}

impl RadiusSchedule {
    pub fn new(r_max: f64, r_min: f64, per_octave: u32) -> Result<Self> {
        if !(r_min > 0.0 && r_max >= r_min) {
            return Err(Error::param("radii", alloc::format!("need 0 < r_min <= r_max, got [{r_min}, {r_max}]")));
        }
        if per_octave == 0 {
            return Err(Error::param("per_octave", "must be at least 1"));
        }
        Ok(RadiusSchedule { r_max, r_min, per_octave })
    }

    /// Radii in increasing order.
    pub fn radii(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut k = 0;
        loop {
            let r = self.r_max * libm::exp2(-(k as f64) / self.per_octave as f64);
            if r < self.r_min * (1.0 - 1e-12) {
                break;
            }
            out.push(r);
            k += 1;
        }
        out.reverse();
        out
    }
}

/// Constants of the quasi-monotone quantities.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Constants {
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
}

/// Energies of one center over a radius schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyTrace<const D: usize> {
    pub center: Point<D>,
    pub radii: Vec<f64>,
    pub energy: Vec<f64>,
    pub boundary: Vec<f64>,
    pub phi: Vec<f64>,
    pub adjusted_phi: Vec<f64>,
    /// Monneau values, empty unless the center is singular.
    pub monneau: Vec<f64>,
    pub constants: Constants,
}

impl<const D: usize> EnergyTrace<D> {
    /// `max E(r)/r^{n+2}` and `max H(r)/r^{n+3}` over the trace.
    pub fn renormalized_bounds(&self) -> (f64, f64) {
        let n = D as f64;
        let mut e_max = 0.0f64;
        let mut h_max = 0.0f64;
        for (k, &r) in self.radii.iter().enumerate() {
            e_max = e_max.max(self.energy[k] / libm::pow(r, n + 2.0));
            h_max = h_max.max(self.boundary[k] / libm::pow(r, n + 3.0));
        }
        (e_max, h_max)
    }
}

/// Evaluates `E`, `H`, `Φ` at every radius (sorted increasingly).
pub fn energy_trace<S: Sampler<D>, const D: usize>(
    view: &Centered<S, D>,
    radii: &[f64],
    rules: &Rules<D>,
) -> Result<EnergyTrace<D>> {
    if radii.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::param("radii", "must be strictly increasing"));
    }
    let n = D as f64;
    let mut energy = Vec::with_capacity(radii.len());
    let mut boundary = Vec::with_capacity(radii.len());
    let mut phi = Vec::with_capacity(radii.len());
    for &r in radii {
        let e = view.ball_energy(r, rules)?;
        let h = view.sphere_energy(r, rules)?;
        energy.push(e);
        boundary.push(h);
        phi.push(libm::pow(r, -n - 2.0) * e - 2.0 * libm::pow(r, -n - 3.0) * h);
    }
    Ok(EnergyTrace {
        center: view.normalization.base_point,
        radii: radii.to_vec(),
        energy,
        boundary,
        adjusted_phi: phi.clone(),
        phi,
        monneau: Vec::new(),
        constants: Constants::default(),
    })
}

/// `min_k (v[k+1] - v[k])`, `+∞` for fewer than two values.
pub fn min_forward_difference(values: &[f64]) -> f64 {
    values
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min)
}

pub fn is_nondecreasing(values: &[f64], slack: f64) -> bool {
    values.iter().all(|v| v.is_finite()) && min_forward_difference(values) >= -slack
}

/// `∫_0^r (t^{-n/Θ} + ω(t)/t) e^{c3 t^{1-n/Θ}} dt`, in `t = r e^{-τ}`.
pub fn weiss_correction(r: f64, n: usize, theta: f64, modulus: &Modulus, c3: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    let beta = 1.0 - n as f64 / theta;
    let lr = libm::log(r);
    Adaptive::default().integrate_semi_infinite(|tau| {
        let lt = lr - tau;
        let t_beta = libm::exp(beta * lt);
        (t_beta + modulus.eval_log(lt)) * libm::exp(c3 * t_beta)
    })
}

/// `Φ(r) e^{c3 r^{1-n/Θ}} + c4 ∫_0^r (t^{-n/Θ} + ω(t)/t) e^{c3 t^{1-n/Θ}} dt`.
pub fn adjusted_weiss<const D: usize>(
    trace: &EnergyTrace<D>,
    theta: f64,
    modulus: &Modulus,
    c3: f64,
    c4: f64,
) -> Vec<f64> {
    let beta = 1.0 - D as f64 / theta;
    trace
        .radii
        .iter()
        .zip(&trace.phi)
        .map(|(&r, &phi)| {
            let correction = if c4 == 0.0 {
                0.0
            } else {
                c4 * weiss_correction(r, D, theta, modulus, c3)
            };
            phi * libm::exp(c3 * libm::pow(r, beta)) + correction
        })
        .collect()
}

/// Outcome of a constant search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub c3: f64,
    pub c4: f64,
    /// `false` when no pair on the search grid works.
    pub feasible: bool,
}

/// Largest constant tried by the calibrations.
pub const CALIBRATION_CEILING: f64 = 1e6;

/// `0` followed by `10^{k/4}`, `k = -24..=24`.
pub fn calibration_grid() -> Vec<f64> {
    let mut v = alloc::vec![0.0];
    v.extend((-24..=24).map(|k| libm::pow(10.0, k as f64 / 4.0)));
    v
}

/// Smallest `(c3, c4)` (by `c3 + c4`) on [`calibration_grid`] making
/// [`adjusted_weiss`] nondecreasing within `slack`.
pub fn calibrate_constants<const D: usize>(
    trace: &EnergyTrace<D>,
    theta: f64,
    modulus: &Modulus,
    slack: f64,
) -> Result<Calibration> {
    calibrate_constants_with(trace, &[], theta, modulus, slack)
}

/// As [`calibrate_constants`], additionally requiring every
/// [`derivative_records`] margin built from `samples` to be `>= -slack`.
pub fn calibrate_constants_with<const D: usize>(
    trace: &EnergyTrace<D>,
    samples: &[DerivativeSample],
    theta: f64,
    modulus: &Modulus,
    slack: f64,
) -> Result<Calibration> {
    if trace.radii.len() < 16 {
        return Err(Error::param(
            "trace",
            alloc::format!("calibration needs at least 16 radii, got {}", trace.radii.len()),
        ));
    }
    if !(theta > D as f64) {
        return Err(Error::param("theta", "Θ must exceed n"));
    }
    let beta = 1.0 - D as f64 / theta;
    let grid = calibration_grid();
    let mut best: Option<(f64, f64)> = None;
    for &c3 in &grid {
        if let Some((b3, b4)) = best {
            if c3 >= b3 + b4 {
                break;
            }
        }
        let scaled: Vec<f64> = trace
            .radii
            .iter()
            .zip(&trace.phi)
            .map(|(&r, &phi)| phi * libm::exp(c3 * libm::pow(r, beta)))
            .collect();
        if scaled.iter().any(|v| !v.is_finite()) {
            break;
        }
        let integrals: Vec<f64> = trace
            .radii
            .iter()
            .map(|&r| weiss_correction(r, D, theta, modulus, c3))
            .collect();
        let works = |c4: f64| {
            let adjusted: Vec<f64> = scaled.iter().zip(&integrals).map(|(s, i)| s + c4 * i).collect();
            is_nondecreasing(&adjusted, slack)
                && derivative_records(samples, D, c3, c4, theta, modulus)
                    .iter()
                    .all(|r| r.margin >= -slack)
        };
        if !works(CALIBRATION_CEILING) {
            continue;
        }
        // feasibility is monotone in c4: bisect on the grid index
        let (mut lo, mut hi) = (0usize, grid.len() - 1);
        if works(grid[0]) {
            hi = 0;
        }
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if works(grid[mid]) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let c4 = grid[hi];
        if best.map_or(true, |(b3, b4)| c3 + c4 < b3 + b4) {
            best = Some((c3, c4));
        }
    }
    Ok(match best {
        Some((c3, c4)) => Calibration { c3, c4, feasible: true },
        None => Calibration {
            c3: f64::NAN,
            c4: f64::NAN,
            feasible: false,
        },
    })
}

/// Constant-free ingredients of the derivative check at one radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeSample {
    pub r: f64,
    pub phi: f64,
    /// `r Φ'(r)` by finite differences in `log r`.
    pub log_slope: f64,
    /// `∫_{∂B_r} μ (<μ^{-1} C ν, ∇u> - 2u/r)^2`
    pub radial_defect: f64,
}

/// One radius of [`weiss_derivative_bound_check`]; all entries are in the
/// scale-free form `r · d/dr`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeRecord {
    pub r: f64,
    pub derivative: f64,
    pub rhs: f64,
    /// `derivative - rhs`
    pub margin: f64,
}

/// Relative log-step of the centered difference in the derivative check.
pub const LOG_STEP: f64 = 0.15;

/// `Φ`, `r Φ'` (second-order difference in `log r`, one-sided at the
/// largest admissible radius) and the radial defect at each radius.
pub fn derivative_samples<S: Sampler<D>, const D: usize>(
    view: &Centered<S, D>,
    radii: &[f64],
    rules: &Rules<D>,
) -> Result<Vec<DerivativeSample>> {
    let limit = view.max_radius();
    radii
        .iter()
        .map(|&r| {
            let up = r * libm::exp(LOG_STEP);
            let down = r * libm::exp(-LOG_STEP);
            let phi = view.phi(r, rules)?;
            let log_slope = if up <= limit {
                (view.phi(up, rules)? - view.phi(down, rules)?) / (2.0 * LOG_STEP)
            } else {
                let further = r * libm::exp(-2.0 * LOG_STEP);
                (3.0 * phi - 4.0 * view.phi(down, rules)? + view.phi(further, rules)?) / (2.0 * LOG_STEP)
            };
            Ok(DerivativeSample {
                r,
                phi,
                log_slope,
                radial_defect: view.radial_defect(r, rules)?,
            })
        })
        .collect()
}

/// `r d/dr` of the adjusted Weiss quantity (exact derivative for the
/// correction) against `r · 2 e^{c3 r^{1-n/Θ}} r^{-n-2}` times the radial
/// defect.
pub fn derivative_records(
    samples: &[DerivativeSample],
    n: usize,
    c3: f64,
    c4: f64,
    theta: f64,
    modulus: &Modulus,
) -> Vec<DerivativeRecord> {
    let nf = n as f64;
    let beta = 1.0 - nf / theta;
    samples
        .iter()
        .map(|s| {
            let r = s.r;
            let rb = libm::pow(r, beta);
            let growth = libm::exp(c3 * rb);
            let derivative = growth * (s.log_slope + s.phi * c3 * beta * rb) + c4 * (rb + modulus.eval(r)) * growth;
            let rhs = 2.0 * growth * libm::pow(r, -nf - 1.0) * s.radial_defect;
            DerivativeRecord {
                r,
                derivative,
                rhs,
                margin: derivative - rhs,
            }
        })
        .collect()
}

/// [`derivative_samples`] followed by [`derivative_records`].
pub fn weiss_derivative_bound_check<S: Sampler<D>, const D: usize>(
    view: &Centered<S, D>,
    radii: &[f64],
    constants: &Calibration,
    theta: f64,
    modulus: &Modulus,
    rules: &Rules<D>,
) -> Result<Vec<DerivativeRecord>> {
    let samples = derivative_samples(view, radii, rules)?;
    Ok(derivative_records(&samples, D, constants.c3, constants.c4, theta, modulus))
}

/// `r^{1-n/Θ} + ∫_0^r ω(t)/t dt + ∫_0^r dt/t ∫_0^t ω(s)/s ds`.
pub fn monneau_correction(r: f64, n: usize, theta: f64, modulus: &Modulus) -> f64 {
    libm::pow(r, 1.0 - n as f64 / theta) + modulus.dini_up_to(r) + modulus.iterated_dini_up_to(r)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonneauRecord {
    pub r: f64,
    /// `∫_{∂B_1} (u_r - v)^2`
    pub distance: f64,
    pub correction: f64,
}

impl MonneauRecord {
    pub fn value(&self, c5: f64) -> f64 {
        self.distance + c5 * self.correction
    }
}

/// Monneau distances and corrections at a singular center. `center_type`
/// is the classification of the center's blow-up; `v` must be a quadratic
/// oracle.
pub fn monneau<S: Sampler<D>, const D: usize>(
    view: &Centered<S, D>,
    v: &OracleSolution<D>,
    center_type: BlowupType,
    radii: &[f64],
    theta: f64,
    modulus: &Modulus,
    rules: &Rules<D>,
) -> Result<Vec<MonneauRecord>> {
    if center_type != BlowupType::B {
        return Err(Error::NotSingular {
            reason: alloc::string::String::from("the blow-up at the center is of type A"),
        });
    }
    if !matches!(v.kind, OracleKind::Quadratic { .. }) {
        return Err(Error::param("v", "the comparison function must be a quadratic solution"));
    }
    radii
        .iter()
        .map(|&r| {
            Ok(MonneauRecord {
                r,
                distance: view.distance_to(v, r, rules)?,
                correction: monneau_correction(r, D, theta, modulus),
            })
        })
        .collect()
}

/// Smallest `c5` on [`calibration_grid`] making the Monneau quantity
/// nondecreasing within `slack`; `None` if none does.
pub fn calibrate_c5(records: &[MonneauRecord], slack: f64) -> Option<f64> {
    calibration_grid().into_iter().find(|&c5| {
        let values: Vec<f64> = records.iter().map(|m| m.value(c5)).collect();
        is_nondecreasing(&values, slack)
    })
}

/// Value at `r = 0` of the least-squares line through the `count` smallest
/// radii.
pub fn extrapolate_to_zero(radii: &[f64], values: &[f64], count: usize) -> Result<f64> {
    if radii.len() != values.len() || radii.len() < count || count < 2 {
        return Err(Error::param("radii", "need at least `count >= 2` samples"));
    }
    let mut pairs: Vec<(f64, f64)> = radii.iter().copied().zip(values.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let pts = &pairs[..count];
    let m = count as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    Ok((sy - slope * sx) / m)
}
