//! Coefficient data `(A, f)` with prescribed regularity, and the affine
//! normalization that reduces a free-boundary point to `A(0) = I`, `f(0) = 1`.
//!
//! Fields are built from presets with known moduli of continuity instead of
//! being verified against Sobolev norms; the Sobolev exponents `(s, p, t0)`
//! are carried as metadata and only feed [`theta_exponent`].

use alloc::format;
use alloc::string::ToString;

use crate::linalg::{self, Matrix, SymmetricEigen};
use crate::quadrature::Adaptive;
use crate::{Error, Point, Result};

/// Shape of a modulus of continuity `ω`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModulusKind {
    /// `ω(t) = t^α`, `α ∈ (0, 1]`.
    Holder { alpha: f64 },
    /// `ω(t) = (1 + |log t|)^{-b}` on `(0, 1]`, `b > 0`.
    LogPower { b: f64 },
    ConstantZero,
}

/// A modulus of continuity together with the exponent `a >= 1` used for the
/// double-Dini condition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Modulus {
    pub kind: ModulusKind,
    pub a_exponent: f64,
}

/// Value of a possibly divergent improper integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Improper {
    Finite(f64),
    Divergent,
}

impl Improper {
    pub fn is_finite(&self) -> bool {
        matches!(self, Improper::Finite(_))
    }

    pub fn value(&self) -> Option<f64> {
        match *self {
            Improper::Finite(v) => Some(v),
            Improper::Divergent => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiniIntegrals {
    /// `∫_0^1 ω(t)/t dt`
    pub dini: Improper,
    /// `∫_0^1 ω(t)/t |log t|^a dt`
    pub double_dini: Improper,
}

impl Modulus {
    pub fn holder(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::param("alpha", format!("Hölder exponent must lie in (0, 1], got {alpha}")));
        }
        Ok(Modulus {
            kind: ModulusKind::Holder { alpha },
            a_exponent: 1.0,
        })
    }

    pub fn log_power(b: f64) -> Result<Self> {
        if !(b > 0.0 && b.is_finite()) {
            return Err(Error::param("b", format!("log-power exponent must be positive, got {b}")));
        }
        Ok(Modulus {
            kind: ModulusKind::LogPower { b },
            a_exponent: 1.0,
        })
    }

    pub fn zero() -> Self {
        Modulus {
            kind: ModulusKind::ConstantZero,
            a_exponent: 1.0,
        }
    }

    pub fn with_a_exponent(mut self, a: f64) -> Result<Self> {
        if !(a >= 1.0) {
            return Err(Error::param("a", format!("double-Dini exponent must be >= 1, got {a}")));
        }
        self.a_exponent = a;
        Ok(self)
    }

    /// `ω(t)`; nondecreasing on `[0, ∞)`, constant past `t = 1` for the
    /// logarithmic kind.
    pub fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match self.kind {
            ModulusKind::Holder { alpha } => libm::pow(t, alpha),
            ModulusKind::LogPower { b } => {
                if t >= 1.0 {
                    1.0
                } else {
                    libm::pow(1.0 - libm::log(t), -b)
                }
            }
            ModulusKind::ConstantZero => 0.0,
        }
    }

    /// `ω(e^{log_t})`, without underflow for very small `t`.
    pub fn eval_log(&self, log_t: f64) -> f64 {
        match self.kind {
            ModulusKind::Holder { alpha } => libm::exp(alpha * log_t),
            ModulusKind::LogPower { b } => {
                if log_t >= 0.0 {
                    1.0
                } else {
                    libm::pow(1.0 - log_t, -b)
                }
            }
            ModulusKind::ConstantZero => 0.0,
        }
    }

    /// `∫_0^r ω(t)/t dt = ∫_0^∞ ω(r e^{-τ}) dτ`.
    pub fn dini_up_to(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        let lr = libm::log(r);
        match self.kind {
            ModulusKind::ConstantZero => 0.0,
            ModulusKind::LogPower { b } if b <= 1.0 => f64::INFINITY,
            _ => Adaptive::default().integrate_semi_infinite(|tau| self.eval_log(lr - tau)),
        }
    }

    /// `∫_0^r dt/t ∫_0^t ω(s)/s ds = ∫_0^∞ ω(r e^{-τ}) τ dτ`.
    pub fn iterated_dini_up_to(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        let lr = libm::log(r);
        match self.kind {
            ModulusKind::ConstantZero => 0.0,
            ModulusKind::LogPower { b } if b <= 2.0 => f64::INFINITY,
            _ => Adaptive::default().integrate_semi_infinite(|tau| self.eval_log(lr - tau) * tau),
        }
    }
}

/// Dini and double-Dini integrals of `m` over `(0, 1]`. Convergence is
/// decided from the modulus kind; finite values come from adaptive
/// quadrature in `τ = -log t`.
pub fn dini_integrals(m: &Modulus, a: f64) -> Result<DiniIntegrals> {
    if !(a >= 1.0) {
        return Err(Error::param("a", format!("double-Dini exponent must be >= 1, got {a}")));
    }
    let q = Adaptive::default();
    let omega_tau = |tau: f64| m.eval_log(-tau);
    let (dini_finite, double_finite) = match m.kind {
        ModulusKind::ConstantZero => return Ok(DiniIntegrals {
            dini: Improper::Finite(0.0),
            double_dini: Improper::Finite(0.0),
        }),
        ModulusKind::Holder { .. } => (true, true),
        // (1+τ)^{-b} τ^k is integrable on (0, ∞) iff b - k > 1
        ModulusKind::LogPower { b } => (b > 1.0, b - a > 1.0),
    };
    let dini = if dini_finite {
        Improper::Finite(q.integrate_semi_infinite(omega_tau))
    } else {
        Improper::Divergent
    };
    let double_dini = if double_finite {
        Improper::Finite(q.integrate_semi_infinite(|tau| omega_tau(tau) * libm::pow(tau, a)))
    } else {
        Improper::Divergent
    };
    Ok(DiniIntegrals { dini, double_dini })
}

/// Fractional Sobolev exponents of the coefficient matrix, `A ∈ W^{1+s,p}`,
/// and the trace exponent `t0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SobolevParams {
    pub s: f64,
    pub p: f64,
    pub t0: f64,
}

impl Default for SobolevParams {
    fn default() -> Self {
        SobolevParams { s: 0.5, p: 3.0, t0: 0.25 }
    }
}

/// The raw two-branch formula for `Θ(s, p, n, t0)` with no admissibility
/// checks.
pub fn theta_formula(s: f64, p: f64, n: usize, t0: f64) -> f64 {
    let nf = n as f64;
    if p > nf {
        p
    } else {
        nf * p / (nf - (s - t0) * p)
    }
}

/// Integrability exponent `Θ` of the boundary-energy remainder. Rejects
/// parameters outside the admissible range, naming the violated inequality;
/// accepted inputs always give `Θ > n`.
pub fn theta_exponent(s: f64, p: f64, n: usize, t0: f64) -> Result<f64> {
    let nf = n as f64;
    if n < 2 {
        return Err(Error::param("n", "dimension must be at least 2"));
    }
    if !(s > 0.0 && p > 0.0 && s.is_finite() && p.is_finite()) {
        return Err(Error::param("s, p", "must be positive and finite"));
    }
    if !(s > 1.0 / p) {
        return Err(Error::param("s", format!("requires s > 1/p ({s} <= {})", 1.0 / p)));
    }
    let p_min = (nf * nf / (nf * (1.0 + s) - 1.0)).min(nf);
    if !(p > p_min) {
        return Err(Error::param(
            "p",
            format!("requires p > min(n^2/(n(1+s)-1), n) = {p_min}, got {p}"),
        ));
    }
    if p <= nf {
        let lower = (nf - s * p) / (p * (nf - 1.0));
        if !(t0 > lower) {
            return Err(Error::param("t0", format!("requires t0 > (n-sp)/(p(n-1)) = {lower}, got {t0}")));
        }
        if !(t0 < s) {
            return Err(Error::param("t0", format!("requires t0 < s = {s}, got {t0}")));
        }
        let integrable = s + 1.0 - nf / p;
        if !(t0 < integrable) {
            return Err(Error::param(
                "t0",
                format!("requires t0 < s+1-n/p = {integrable} for Θ > n, got {t0}"),
            ));
        }
    }
    let theta = theta_formula(s, p, n, t0);
    debug_assert!(theta > nf);
    Ok(theta)
}

/// Matrix part of a coefficient preset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MatrixField<const D: usize> {
    Constant(Matrix<D>),
    /// `A(x) = I + |x|^γ S` with `S` symmetric.
    HolderPerturbation { gamma: f64, perturbation: Matrix<D> },
}

/// Source term: `f(x) = base + amplitude · ω_f(|x - center|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceField<const D: usize> {
    pub base: f64,
    pub amplitude: f64,
    pub center: Point<D>,
}

impl<const D: usize> SourceField<D> {
    pub fn constant(value: f64) -> Self {
        SourceField {
            base: value,
            amplitude: 0.0,
            center: [0.0; D],
        }
    }
}

/// Affine frame in which a field is evaluated:
/// `A_frame(y) = M A(origin + L y) M^T`, `f_frame(y) = scale · f(origin + L y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame<const D: usize> {
    pub origin: Point<D>,
    pub map: Matrix<D>,
    pub congruence: Matrix<D>,
    pub source_scale: f64,
}

impl<const D: usize> Default for Frame<D> {
    fn default() -> Self {
        Frame {
            origin: [0.0; D],
            map: linalg::identity(),
            congruence: linalg::identity(),
            source_scale: 1.0,
        }
    }
}

impl<const D: usize> Frame<D> {
    pub fn to_base(&self, y: &Point<D>) -> Point<D> {
        linalg::add(&self.origin, &linalg::mat_vec(&self.map, y))
    }

    pub fn is_identity(&self) -> bool {
        *self == Frame::default()
    }
}

/// Box `[lower, upper]^D` on which a field is sampled for validation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    pub lower: f64,
    pub upper: f64,
}

impl Default for Domain {
    fn default() -> Self {
        Domain { lower: -1.0, upper: 1.0 }
    }
}

impl Domain {
    /// Largest `|x|` over the box.
    pub fn radius<const D: usize>(&self) -> f64 {
        self.lower.abs().max(self.upper.abs()) * libm::sqrt(D as f64)
    }
}

/// Problem data `(A, f)` with ellipticity constant `Λ`, lower bound `c0` for
/// `f`, moduli of continuity and Sobolev metadata.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientField<const D: usize> {
    pub matrix: MatrixField<D>,
    pub source: SourceField<D>,
    pub ellipticity: f64,
    pub source_floor: f64,
    pub matrix_modulus: Modulus,
    pub source_modulus: Modulus,
    pub sobolev: SobolevParams,
    pub domain: Domain,
    pub frame: Frame<D>,
}

/// Named coefficient presets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FieldPreset<const D: usize> {
    /// `A ≡ I`.
    Identity,
    /// `A(x) = I + |x|^γ S`, declared ellipticity `Λ`.
    HolderPerturbation {
        gamma: f64,
        perturbation: Matrix<D>,
        ellipticity: f64,
    },
    /// Constant symmetric positive definite `A`.
    Anisotropic { matrix: Matrix<D> },
}

/// Source-term part of a preset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceSpec<const D: usize> {
    pub field: SourceField<D>,
    pub modulus: Modulus,
}

impl<const D: usize> SourceSpec<D> {
    /// `f ≡ value`.
    pub fn constant(value: f64) -> Self {
        SourceSpec {
            field: SourceField::constant(value),
            modulus: Modulus::zero(),
        }
    }

    /// `f(x) = base + amplitude · ω(|x - center|)`.
    pub fn modulated(base: f64, amplitude: f64, center: Point<D>, modulus: Modulus) -> Self {
        SourceSpec {
            field: SourceField { base, amplitude, center },
            modulus,
        }
    }

    /// Infimum of `f` over the box: `base`, lowered by the modulus when the
    /// amplitude is negative.
    pub fn floor_on(&self, domain: &Domain) -> f64 {
        let f = &self.field;
        if f.amplitude >= 0.0 {
            return f.base;
        }
        let reach = (0..D)
            .map(|i| {
                let d = (f.center[i] - domain.lower).abs().max((f.center[i] - domain.upper).abs());
                d * d
            })
            .sum::<f64>();
        f.base + f.amplitude * self.modulus.eval(libm::sqrt(reach))
    }
}

impl<const D: usize> Default for SourceSpec<D> {
    fn default() -> Self {
        SourceSpec::constant(1.0)
    }
}

/// Builds a field from a preset and checks every invariant on a sampling
/// lattice of `domain`.
pub fn make_field<const D: usize>(
    preset: FieldPreset<D>,
    source: SourceSpec<D>,
    sobolev: SobolevParams,
    domain: Domain,
) -> Result<CoefficientField<D>> {
    if !(D == 2 || D == 3) {
        return Err(Error::param("dimension", "only n = 2 and n = 3 are supported"));
    }
    let (matrix, ellipticity, matrix_modulus) = match preset {
        FieldPreset::Identity => (MatrixField::Constant(linalg::identity()), 1.0, Modulus::zero()),
        FieldPreset::Anisotropic { matrix } => {
            if linalg::asymmetry(&matrix) > 0.0 {
                return Err(Error::Ellipticity {
                    location: "anisotropic preset".to_string(),
                    reason: "matrix is not symmetric".to_string(),
                });
            }
            let eig = SymmetricEigen::new(&matrix);
            if eig.min() <= 0.0 {
                return Err(Error::NotPositiveDefinite {
                    min_eigenvalue: eig.min(),
                });
            }
            let lambda = eig.max().max(1.0 / eig.min()).max(1.0);
            (MatrixField::Constant(matrix), lambda, Modulus::zero())
        }
        FieldPreset::HolderPerturbation {
            gamma,
            perturbation,
            ellipticity,
        } => {
            let modulus = Modulus::holder(gamma)?;
            if !(ellipticity >= 1.0) {
                return Err(Error::param("ellipticity", format!("Λ must be >= 1, got {ellipticity}")));
            }
            if linalg::asymmetry(&perturbation) > 0.0 {
                return Err(Error::Ellipticity {
                    location: "holder_perturbation preset".to_string(),
                    reason: "perturbation matrix is not symmetric".to_string(),
                });
            }
            let eig = SymmetricEigen::new(&perturbation);
            let spectral = eig.min().abs().max(eig.max().abs());
            let reach = spectral * libm::pow(domain.radius::<D>(), gamma);
            let allowed = (ellipticity - 1.0) / ellipticity;
            if reach > allowed {
                return Err(Error::Ellipticity {
                    location: "holder_perturbation preset".to_string(),
                    reason: format!(
                        "‖S‖·R^γ = {reach} exceeds (Λ-1)/Λ = {allowed} on the domain"
                    ),
                });
            }
            (
                MatrixField::HolderPerturbation { gamma, perturbation },
                ellipticity,
                modulus,
            )
        }
    };
    let field = CoefficientField {
        matrix,
        source: source.field,
        ellipticity,
        source_floor: source.floor_on(&domain),
        matrix_modulus,
        source_modulus: source.modulus,
        sobolev,
        domain,
        frame: Frame::default(),
    };
    if !(field.source_floor > 0.0) {
        return Err(Error::SourceBelowBound {
            location: "preset".to_string(),
            value: field.source_floor,
            c0: field.source_floor,
        });
    }
    field.validate(17)?;
    Ok(field)
}

/// Relative slack for the sampled invariants.
const INVARIANT_SLACK: f64 = 1e-12;

impl<const D: usize> CoefficientField<D> {
    /// The identity field `A ≡ I`, `f ≡ 1` on `[-1, 1]^D`.
    pub fn identity() -> Self {
        make_field(
            FieldPreset::Identity,
            SourceSpec::constant(1.0),
            SobolevParams::default(),
            Domain::default(),
        )
        .expect("identity preset is valid")
    }

    /// Assembles a field without validation (negative controls). `c0` is
    /// taken as given.
    pub fn new_unchecked(
        matrix: MatrixField<D>,
        source: SourceSpec<D>,
        ellipticity: f64,
        matrix_modulus: Modulus,
        source_floor: f64,
    ) -> Self {
        CoefficientField {
            matrix,
            source: source.field,
            ellipticity,
            source_floor,
            matrix_modulus,
            source_modulus: source.modulus,
            sobolev: SobolevParams::default(),
            domain: Domain::default(),
            frame: Frame::default(),
        }
    }

    fn base_matrix(&self, x: &Point<D>) -> Matrix<D> {
        match self.matrix {
            MatrixField::Constant(m) => m,
            MatrixField::HolderPerturbation { gamma, perturbation } => {
                let weight = libm::pow(linalg::norm(x), gamma);
                linalg::mat_add(&linalg::identity(), &linalg::mat_scale(&perturbation, weight))
            }
        }
    }

    fn base_source(&self, x: &Point<D>) -> f64 {
        let s = &self.source;
        if s.amplitude == 0.0 {
            return s.base;
        }
        let d = linalg::norm(&linalg::sub(x, &s.center));
        s.base + s.amplitude * self.source_modulus.eval(d)
    }

    /// `A(x)` in this field's frame.
    pub fn matrix_at(&self, x: &Point<D>) -> Matrix<D> {
        if self.frame.is_identity() {
            return self.base_matrix(x);
        }
        let a = self.base_matrix(&self.frame.to_base(x));
        let m = &self.frame.congruence;
        linalg::mat_mul(&linalg::mat_mul(m, &a), &linalg::transpose(m))
    }

    /// `f(x)` in this field's frame.
    pub fn source_at(&self, x: &Point<D>) -> f64 {
        if self.frame.is_identity() {
            return self.base_source(x);
        }
        self.frame.source_scale * self.base_source(&self.frame.to_base(x))
    }

    /// Radial weight `μ(x) = <A(x) x/|x|, x/|x|>`, with `μ(0) = 1`.
    pub fn mu(&self, x: &Point<D>) -> f64 {
        let r = linalg::norm(x);
        if r == 0.0 {
            return 1.0;
        }
        let nu = linalg::scale(x, 1.0 / r);
        linalg::quadratic_form(&self.matrix_at(x), &nu)
    }

    /// Checks symmetry, two-sided ellipticity and `f >= c0` at `x`.
    pub fn check_point(&self, x: &Point<D>) -> Result<()> {
        let a = self.matrix_at(x);
        let scale = linalg::frobenius(&a).max(1.0);
        if linalg::asymmetry(&a) > INVARIANT_SLACK * scale {
            return Err(Error::Ellipticity {
                location: format!("{x:?}"),
                reason: "A(x) is not symmetric".to_string(),
            });
        }
        let eig = SymmetricEigen::new(&a);
        let lambda = self.ellipticity;
        if eig.min() < (1.0 / lambda) * (1.0 - INVARIANT_SLACK) || eig.max() > lambda * (1.0 + INVARIANT_SLACK)
        {
            return Err(Error::Ellipticity {
                location: format!("{x:?}"),
                reason: format!(
                    "spectrum [{}, {}] outside [1/Λ, Λ] = [{}, {}]",
                    eig.min(),
                    eig.max(),
                    1.0 / lambda,
                    lambda
                ),
            });
        }
        let f = self.source_at(x);
        if !(f >= self.source_floor * (1.0 - INVARIANT_SLACK)) || !(self.source_floor > 0.0) {
            return Err(Error::SourceBelowBound {
                location: format!("{x:?}"),
                value: f,
                c0: self.source_floor,
            });
        }
        Ok(())
    }

    /// Runs [`check_point`](Self::check_point) on a `per_axis^D` lattice of
    /// the domain box.
    pub fn validate(&self, per_axis: usize) -> Result<()> {
        let per_axis = per_axis.max(2);
        let total = per_axis.pow(D as u32);
        let step = (self.domain.upper - self.domain.lower) / (per_axis - 1) as f64;
        for flat in 0..total {
            let mut rest = flat;
            let x: Point<D> = core::array::from_fn(|_| {
                let i = rest % per_axis;
                rest /= per_axis;
                self.domain.lower + step * i as f64
            });
            self.check_point(&x)?;
        }
        Ok(())
    }
}

/// The affine change of variables `x = x0 + L y`, `L = f(x0)^{-1/2} A(x0)^{1/2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalization<const D: usize> {
    pub base_point: Point<D>,
    pub map: Matrix<D>,
    pub map_inverse: Matrix<D>,
    /// `A(x0)^{-1/2}`
    pub inv_sqrt_matrix: Matrix<D>,
    pub source_at_base: f64,
}

impl<const D: usize> Normalization<D> {
    /// Original coordinates of the normalized point `y`.
    pub fn to_original(&self, y: &Point<D>) -> Point<D> {
        linalg::add(&self.base_point, &linalg::mat_vec(&self.map, y))
    }

    pub fn to_normalized(&self, x: &Point<D>) -> Point<D> {
        linalg::mat_vec(&self.map_inverse, &linalg::sub(x, &self.base_point))
    }

    pub fn identity_at(x0: Point<D>) -> Self {
        Normalization {
            base_point: x0,
            map: linalg::identity(),
            map_inverse: linalg::identity(),
            inv_sqrt_matrix: linalg::identity(),
            source_at_base: 1.0,
        }
    }

    /// `true` when `L = I` exactly.
    pub fn is_trivial(&self) -> bool {
        self.map == linalg::identity::<D>() && self.source_at_base == 1.0
    }
}

/// Normalizes `field` at `x0`: the returned field is
/// `C(y) = A(x0)^{-1/2} A(x0 + L y) A(x0)^{-1/2}`, `f(x0 + L y) / f(x0)`, so
/// that it equals `I` and `1` at the origin.
pub fn normalize_at<const D: usize>(
    field: &CoefficientField<D>,
    x0: &Point<D>,
) -> Result<(Normalization<D>, CoefficientField<D>)> {
    let a0 = field.matrix_at(x0);
    let f0 = field.source_at(x0);
    if !(f0 > 0.0) || f0 < field.source_floor * (1.0 - INVARIANT_SLACK) {
        return Err(Error::SourceBelowBound {
            location: format!("{x0:?}"),
            value: f0,
            c0: field.source_floor,
        });
    }
    let sqrt_a = linalg::sqrt_spd(&a0)?;
    let inv_sqrt_a = linalg::inv_sqrt_spd(&a0)?;
    let root_f = libm::sqrt(f0);
    let map = linalg::mat_scale(&sqrt_a, 1.0 / root_f);
    let map_inverse = linalg::mat_scale(&inv_sqrt_a, root_f);
    let normalization = Normalization {
        base_point: *x0,
        map,
        map_inverse,
        inv_sqrt_matrix: inv_sqrt_a,
        source_at_base: f0,
    };
    let mut out = *field;
    out.frame = Frame {
        origin: field.frame.to_base(x0),
        map: linalg::mat_mul(&field.frame.map, &map),
        congruence: linalg::mat_mul(&inv_sqrt_a, &field.frame.congruence),
        source_scale: field.frame.source_scale / f0,
    };
    out.ellipticity = field.ellipticity * field.ellipticity;
    out.source_floor = field.source_floor / f0;
    Ok((normalization, out))
}

/// `field` seen from `x0` without normalization: `A(x0 + y)`, `f(x0 + y)`.
pub fn translate_to<const D: usize>(field: &CoefficientField<D>, x0: &Point<D>) -> (Normalization<D>, CoefficientField<D>) {
    let mut out = *field;
    out.frame.origin = field.frame.to_base(x0);
    (Normalization::identity_at(*x0), out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn holder_field() -> CoefficientField<2> {
        make_field(
            FieldPreset::HolderPerturbation {
                gamma: 0.5,
                perturbation: linalg::diagonal(&[0.1, -0.1]),
                ellipticity: 1.25,
            },
            SourceSpec::constant(1.0),
            SobolevParams::default(),
            Domain::default(),
        )
        .unwrap()
    }

    fn anisotropic() -> CoefficientField<2> {
        make_field(
            FieldPreset::Anisotropic {
                matrix: linalg::diagonal(&[2.0, 1.0]),
            },
            SourceSpec::constant(1.0),
            SobolevParams::default(),
            Domain::default(),
        )
        .unwrap()
    }

    #[test]
    fn identity_preset() {
        let f = CoefficientField::<2>::identity();
        assert_eq!(f.ellipticity, 1.0);
        assert_eq!(f.matrix_at(&[0.3, -0.2]), linalg::identity());
        assert_eq!(f.source_at(&[0.3, -0.2]), 1.0);
    }

    #[test]
    fn holder_perturbation_spectrum_by_dense_sampling() {
        let f = holder_field();
        assert_eq!(f.ellipticity, 1.25);
        // eigenvalues are 1 ± 0.1|x|^0.5; on |x| <= 1 they stay in [0.9, 1.1]
        let n = 200;
        for i in 0..=n {
            for j in 0..=n {
                let x = [-1.0 + 2.0 * i as f64 / n as f64, -1.0 + 2.0 * j as f64 / n as f64];
                let r = linalg::norm(&x);
                if r > 1.0 {
                    continue;
                }
                let eig = SymmetricEigen::new(&f.matrix_at(&x));
                let bound = 0.1 * libm::sqrt(r);
                assert_relative_eq!(eig.min(), 1.0 - bound, epsilon = 1e-13);
                assert_relative_eq!(eig.max(), 1.0 + bound, epsilon = 1e-13);
                assert!(eig.min() >= 1.0 / 1.25 && eig.max() <= 1.25);
            }
        }
    }

    #[test]
    fn anisotropic_preset_lambda() {
        assert_eq!(anisotropic().ellipticity, 2.0);
    }

    #[test]
    fn presets_reject_bad_parameters() {
        let too_big = make_field(
            FieldPreset::HolderPerturbation {
                gamma: 0.5,
                perturbation: linalg::diagonal(&[0.5, -0.5]),
                ellipticity: 1.25,
            },
            SourceSpec::constant(1.0),
            SobolevParams::default(),
            Domain::default(),
        );
        assert!(matches!(too_big, Err(Error::Ellipticity { .. })));
        let bad_source = make_field::<2>(
            FieldPreset::Identity,
            SourceSpec::constant(-1.0),
            SobolevParams::default(),
            Domain::default(),
        );
        assert!(matches!(bad_source, Err(Error::SourceBelowBound { .. })));
        assert!(Modulus::holder(1.5).is_err());
        assert!(Modulus::log_power(0.0).is_err());
    }

    #[test]
    fn mu_examples() {
        let id = CoefficientField::<2>::identity();
        assert_eq!(id.mu(&[0.3, 0.4]), 1.0);
        assert_eq!(id.mu(&[0.0, 0.0]), 1.0);
        let an = anisotropic();
        assert_relative_eq!(an.mu(&[0.25, 0.0]), 2.0, epsilon = 1e-15);
        assert_relative_eq!(an.mu(&[0.3, 0.3]), 1.5, epsilon = 1e-15);
        assert_eq!(an.mu(&[0.0, 0.0]), 1.0);
    }

    #[test]
    fn mu_holder_bound_after_normalization() {
        let f = holder_field();
        let (norm, g) = normalize_at(&f, &[0.0, 0.0]).unwrap();
        assert!(norm.is_trivial());
        for k in 0..64 {
            let t = 2.0 * core::f64::consts::PI * k as f64 / 64.0;
            for r in [1e-4, 0.01, 0.3, 1.0] {
                let x = [r * libm::cos(t), r * libm::sin(t)];
                let mu = g.mu(&x);
                assert!((mu - 1.0).abs() <= 0.1 * libm::sqrt(r) + 1e-15);
                assert!(mu >= 1.0 / 1.25 && mu <= 1.25);
            }
        }
    }

    #[test]
    fn normalization_examples() {
        let four = make_field::<2>(
            FieldPreset::Identity,
            SourceSpec::constant(4.0),
            SobolevParams::default(),
            Domain::default(),
        )
        .unwrap();
        let (n, g) = normalize_at(&four, &[0.1, 0.2]).unwrap();
        assert_relative_eq!(n.map[0][0], 0.5, epsilon = 1e-15);
        assert_relative_eq!(n.map[1][1], 0.5, epsilon = 1e-15);
        assert_relative_eq!(g.source_at(&[0.0, 0.0]), 1.0, epsilon = 1e-15);

        let an = make_field(
            FieldPreset::Anisotropic {
                matrix: linalg::diagonal(&[4.0, 1.0]),
            },
            SourceSpec::constant(1.0),
            SobolevParams::default(),
            Domain::default(),
        )
        .unwrap();
        let (n, g) = normalize_at(&an, &[0.0, 0.0]).unwrap();
        assert_relative_eq!(n.map[0][0], 2.0, epsilon = 1e-15);
        assert_relative_eq!(n.map[1][1], 1.0, epsilon = 1e-15);
        assert_relative_eq!(n.map[0][1], 0.0, epsilon = 1e-15);
        let c = g.matrix_at(&[0.0, 0.0]);
        assert_relative_eq!(c[0][0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(c[1][1], 1.0, epsilon = 1e-12);

        let id = CoefficientField::<2>::identity();
        let (n, g) = normalize_at(&id, &[0.3, 0.1]).unwrap();
        assert!(n.is_trivial());
        assert_eq!(g.matrix_at(&[0.2, 0.2]), linalg::identity());
    }

    #[test]
    fn normalization_of_holder_field_off_origin() {
        let f = holder_field();
        let x0 = [0.5, -0.1];
        let (n, g) = normalize_at(&f, &x0).unwrap();
        let c = g.matrix_at(&[0.0, 0.0]);
        for i in 0..2 {
            for j in 0..2 {
                assert_relative_eq!(c[i][j], if i == j { 1.0 } else { 0.0 }, epsilon = 1e-12);
            }
        }
        assert_relative_eq!(g.source_at(&[0.0, 0.0]), 1.0, epsilon = 1e-12);
        let y = [0.1, 0.2];
        let back = n.to_normalized(&n.to_original(&y));
        assert_relative_eq!(back[0], y[0], epsilon = 1e-14);
        assert_relative_eq!(back[1], y[1], epsilon = 1e-14);
    }

    #[test]
    fn indefinite_base_matrix_is_rejected() {
        let bad = CoefficientField::<2>::new_unchecked(
            MatrixField::Constant(linalg::diagonal(&[1.0, -1.0])),
            SourceSpec::constant(1.0),
            1.0,
            Modulus::zero(),
            1.0,
        );
        assert!(matches!(
            normalize_at(&bad, &[0.0, 0.0]),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn theta_examples() {
        assert_eq!(theta_exponent(0.5, 3.0, 2, 0.1).unwrap(), 3.0);
        assert_relative_eq!(theta_formula(0.9, 2.0, 3, 0.5), 6.0 / 2.2, epsilon = 1e-15);
        // t0 = 0.5 is above s + 1 - n/p = 0.4, where Θ would drop below n
        assert!(theta_exponent(0.9, 2.0, 3, 0.5).is_err());
        assert_relative_eq!(theta_exponent(0.9, 2.0, 3, 0.35).unwrap(), 6.0 / 1.9, epsilon = 1e-15);
        let err = theta_exponent(0.9, 2.0, 3, 0.95).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter { name: "t0", .. }));
    }

    #[test]
    fn dini_examples() {
        let h = dini_integrals(&Modulus::holder(0.5).unwrap(), 1.0).unwrap();
        // ∫ t^{α-1} = 1/α, ∫ t^{α-1}|log t| = 1/α²
        assert_relative_eq!(h.dini.value().unwrap(), 2.0, epsilon = 1e-9);
        assert_relative_eq!(h.double_dini.value().unwrap(), 4.0, epsilon = 1e-9);

        let l3 = dini_integrals(&Modulus::log_power(3.0).unwrap(), 1.0).unwrap();
        assert_relative_eq!(l3.dini.value().unwrap(), 0.5, epsilon = 1e-9);
        assert!(l3.double_dini.is_finite());

        let l1 = dini_integrals(&Modulus::log_power(1.0).unwrap(), 1.0).unwrap();
        assert_eq!(l1.dini, Improper::Divergent);
        assert!(dini_integrals(&Modulus::zero(), 0.5).is_err());
    }

    #[test]
    fn log_power_double_dini_matches_antiderivative() {
        // ∫_0^∞ (1+τ)^{-3} τ dτ = ∫ (1+τ)^{-2} - (1+τ)^{-3} = 1 - 1/2
        let l3 = dini_integrals(&Modulus::log_power(3.0).unwrap(), 1.0).unwrap();
        assert_relative_eq!(l3.double_dini.value().unwrap(), 0.5, epsilon = 1e-9);
        // b = 3, a = 2: (1+τ)^{-3} τ^2 is not integrable
        let l3a2 = dini_integrals(&Modulus::log_power(3.0).unwrap(), 2.0).unwrap();
        assert_eq!(l3a2.double_dini, Improper::Divergent);
    }

    #[test]
    fn partial_dini_integrals_match_closed_forms() {
        let m = Modulus::log_power(3.0).unwrap();
        for r in [0.5, 0.1, 0.01] {
            let l = 1.0 - libm::log(r);
            // ∫_0^r ω/t = (1+|log r|)^{-2}/2, iterated: (1+|log r|)^{-1}/2
            assert_relative_eq!(m.dini_up_to(r), 0.5 / (l * l), epsilon = 1e-9);
            assert_relative_eq!(m.iterated_dini_up_to(r), 0.5 / l, epsilon = 1e-8);
        }
        let h = Modulus::holder(0.5).unwrap();
        // ∫_0^r t^{-1/2} = 2 r^{1/2}; iterated = 4 r^{1/2}
        assert_relative_eq!(h.dini_up_to(0.25), 1.0, epsilon = 1e-10);
        assert_relative_eq!(h.iterated_dini_up_to(0.25), 2.0, epsilon = 1e-9);
    }
}
