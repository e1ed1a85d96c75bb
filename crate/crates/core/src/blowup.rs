//! Free-boundary extraction, rescalings `u(x0 + r x)/r^2`, nondegeneracy,
//! blow-up classification and decay of the rescalings towards their limit.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::grid::{GridFunction, GridSampler};
use crate::linalg::{self, Matrix, SymmetricEigen};
use crate::oracles::{BlowupType, OracleSolution};
use crate::quadrature::{gauss_legendre_on, SphereRule};
use crate::{Error, Point, Result, Sampler};

/// Free-boundary points of a nonnegative nodal function, one per positive
/// node `q` with a zero neighbour along some axis. Along the gradient
/// direction at `q`, `√(2u)` is sampled at distances `h, 2h, 3h` and the zero
/// of its least-squares line is taken. Near the box faces the zero of `√u`
/// extrapolated along the grid edge is used instead.
pub fn extract_free_boundary<const D: usize>(u: &GridFunction<D>) -> Vec<Point<D>> {
    let g = &u.grid;
    let h = g.spacing();
    let s = g.strides();
    let last = g.nodes_per_axis - 1;
    let v = &u.values;
    let sampler = GridSampler::new(u.clone());
    let mut out = Vec::new();
    for q in 0..g.len() {
        if !(v[q] > 0.0) {
            continue;
        }
        let c = g.coords(q);
        let mut edge = None;
        'search: for k in 0..D {
            for dir in [-1isize, 1] {
                let t = c[k] as isize + dir;
                if t < 0 || t > last as isize {
                    continue;
                }
                if v[(q as isize + dir * s[k] as isize) as usize] == 0.0 {
                    edge = Some((k, dir));
                    break 'search;
                }
            }
        }
        let Some((k, dir)) = edge else { continue };
        let xq = g.point(q);
        let grad = u.node_gradient(q);
        let len = linalg::norm(&grad);
        if len > 0.0 && g.distance_to_boundary(&xq) > 4.0 * h {
            let nu = linalg::scale(&grad, 1.0 / len);
            if let Some(t) = zero_of_root_line(&sampler, &xq, &nu, h) {
                if t.abs() <= 2.0 * h {
                    out.push(linalg::add(&xq, &linalg::scale(&nu, t)));
                    continue;
                }
            }
        }
        // fraction of the edge, measured from q towards the zero node
        let mut t = 0.5;
        let back = c[k] as isize - dir;
        if back >= 0 && back <= last as isize {
            let q2 = (q as isize - dir * s[k] as isize) as usize;
            let (w1, w2) = (libm::sqrt(v[q]), libm::sqrt(v[q2]));
            if w2 > w1 {
                t = (w1 / (w2 - w1)).clamp(0.0, 1.0);
            }
        }
        let mut x = xq;
        x[k] += dir as f64 * t * h;
        out.push(x);
    }
    out
}

fn zero_of_root_line<const D: usize>(u: &GridSampler<D>, x: &Point<D>, nu: &Point<D>, h: f64) -> Option<f64> {
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for k in 1..=3 {
        let t = k as f64 * h;
        let w = libm::sqrt(2.0 * u.value(&linalg::add(x, &linalg::scale(nu, t))).max(0.0));
        sx += t;
        sy += w;
        sxx += t * t;
        sxy += t * w;
    }
    let slope = (3.0 * sxy - sx * sy) / (3.0 * sxx - sx * sx);
    let intercept = (sy - slope * sx) / 3.0;
    (slope > 0.0).then(|| -intercept / slope)
}

/// Up to `count` well-spread points among `candidates` with `reach >=
/// min_reach`: farthest-point sampling started from the first admissible
/// candidate.
pub fn select_centers<const D: usize>(
    candidates: &[Point<D>],
    count: usize,
    admissible: impl Fn(&Point<D>) -> bool,
) -> Vec<Point<D>> {
    let pool: Vec<Point<D>> = candidates.iter().copied().filter(|x| admissible(x)).collect();
    let mut chosen: Vec<Point<D>> = Vec::new();
    if pool.is_empty() || count == 0 {
        return chosen;
    }
    let mut dist = vec![f64::INFINITY; pool.len()];
    let mut next = 0;
    while chosen.len() < count.min(pool.len()) {
        chosen.push(pool[next]);
        let last = pool[next];
        let mut best = (0usize, -1.0);
        for (i, x) in pool.iter().enumerate() {
            dist[i] = dist[i].min(linalg::norm(&linalg::sub(x, &last)));
            if dist[i] > best.1 {
                best = (i, dist[i]);
            }
        }
        if best.1 <= 0.0 {
            break;
        }
        next = best.0;
    }
    chosen
}

/// Polar reference grid on the unit ball: Gauss–Legendre radii on
/// `[0, 0.1]`, `[0.1, 0.25]`, `[0.25, 1]` times a sphere rule. The fit
/// domain `|x| >= 0.1` and the annulus `|x| >= 0.25` are unions of panels.
#[derive(Debug, Clone)]
pub struct ReferenceBall<const D: usize> {
    /// `(ρ, w ρ^{D-1})`
    pub radial: Vec<(f64, f64)>,
    pub sphere: SphereRule<D>,
}

/// Inner radius of the classification fit domain.
pub const FIT_INNER_RADIUS: f64 = 0.1;
/// Inner radius of the homogeneity annulus.
pub const HOMOGENEITY_INNER_RADIUS: f64 = 0.25;

impl<const D: usize> ReferenceBall<D> {
    pub fn new(sphere: SphereRule<D>) -> Self {
        let mut radial = Vec::new();
        for (a, b, m) in [
            (0.0, FIT_INNER_RADIUS, 6),
            (FIT_INNER_RADIUS, HOMOGENEITY_INNER_RADIUS, 8),
            (HOMOGENEITY_INNER_RADIUS, 1.0, 16),
        ] {
            for (rho, w) in gauss_legendre_on(a, b, m) {
                radial.push((rho, w * libm::pow(rho, (D - 1) as f64)));
            }
        }
        ReferenceBall { radial, sphere }
    }

    /// 128 angles in 2D, 16 x 32 nodes in 3D.
    pub fn standard() -> Self {
        if D == 2 {
            ReferenceBall::new(SphereRule::new(128, 0))
        } else {
            ReferenceBall::new(SphereRule::new(32, 16))
        }
    }
}

/// `u_{x0,r}(x) = u(x0 + r x)/r^2` sampled on a [`ReferenceBall`].
#[derive(Debug, Clone)]
pub struct Rescaling<const D: usize> {
    pub center: Point<D>,
    pub radius: f64,
    /// `(x, weight, value)` over the whole ball.
    pub samples: Vec<(Point<D>, f64, f64)>,
    /// Radius of each sample.
    pub sample_radius: Vec<f64>,
    /// Index of each sample's direction in the sphere rule.
    pub direction: Vec<usize>,
    /// Values on `∂B_1` with the sphere weights.
    pub sphere: Vec<(Point<D>, f64, f64)>,
}

/// Rescales `u` around `x0`. The ball `B_r(x0)` must be admissible.
pub fn rescale<const D: usize>(
    u: &impl Sampler<D>,
    x0: &Point<D>,
    r: f64,
    reference: &ReferenceBall<D>,
) -> Result<Rescaling<D>> {
    if !(r > 0.0) {
        return Err(Error::param("r", "radius must be positive"));
    }
    let limit = u.reach(x0);
    if r > limit {
        return Err(Error::RadiusTooLarge { radius: r, limit });
    }
    let r2 = r * r;
    let eval = |y: &Point<D>| u.value(&linalg::add(x0, &linalg::scale(y, r))) / r2;
    let mut samples = Vec::with_capacity(reference.radial.len() * reference.sphere.nodes.len());
    let mut sample_radius = Vec::with_capacity(samples.capacity());
    let mut direction = Vec::with_capacity(samples.capacity());
    for &(rho, wr) in &reference.radial {
        for (k, (nu, ws)) in reference.sphere.nodes.iter().enumerate() {
            let y = linalg::scale(nu, rho);
            samples.push((y, wr * ws, eval(&y)));
            sample_radius.push(rho);
            direction.push(k);
        }
    }
    let sphere = reference
        .sphere
        .nodes
        .iter()
        .map(|(nu, w)| (*nu, *w, eval(nu)))
        .collect();
    Ok(Rescaling {
        center: *x0,
        radius: r,
        samples,
        sample_radius,
        direction,
        sphere,
    })
}

impl<const D: usize> Rescaling<D> {
    /// `L^2` norm over `|x| >= inner`.
    pub fn norm_beyond(&self, inner: f64) -> f64 {
        libm::sqrt(
            self.masked(inner)
                .map(|(_, w, v)| w * v * v)
                .sum::<f64>(),
        )
    }

    fn masked(&self, inner: f64) -> impl Iterator<Item = &(Point<D>, f64, f64)> + '_ {
        self.samples
            .iter()
            .zip(&self.sample_radius)
            .filter(move |(_, &rho)| rho >= inner)
            .map(|(s, _)| s)
    }

    /// `L^2` distance to `model` over `|x| >= inner`.
    pub fn residual_against(&self, model: &impl Sampler<D>, inner: f64) -> f64 {
        libm::sqrt(
            self.masked(inner)
                .map(|(x, w, v)| {
                    let d = v - model.value(x);
                    w * d * d
                })
                .sum::<f64>(),
        )
    }
}

/// `min_r sup_{∂B_r(x0)} u / r^2`, with the per-radius values.
#[derive(Debug, Clone, PartialEq)]
pub struct Nondegeneracy {
    pub per_radius: Vec<(f64, f64)>,
    pub min: f64,
}

pub fn nondegeneracy<const D: usize>(
    u: &impl Sampler<D>,
    x0: &Point<D>,
    radii: &[f64],
    sphere: &SphereRule<D>,
) -> Result<Nondegeneracy> {
    let limit = u.reach(x0);
    let mut per_radius = Vec::with_capacity(radii.len());
    for &r in radii {
        if r > limit {
            return Err(Error::RadiusTooLarge { radius: r, limit });
        }
        let sup = sphere
            .nodes
            .iter()
            .map(|(nu, _)| u.value(&linalg::add(x0, &linalg::scale(nu, r))))
            .fold(f64::NEG_INFINITY, f64::max);
        per_radius.push((r, sup / (r * r)));
    }
    let min = per_radius.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    Ok(Nondegeneracy { per_radius, min })
}

/// Fraction of `‖u_r‖` above which a fit is rejected.
pub const UNCLASSIFIED_FRACTION: f64 = 0.2;
/// Relative eigenvalue threshold for `Ker B`.
pub const KERNEL_THRESHOLD: f64 = 1e-3;

/// Result of fitting both blow-up models to a rescaling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlowupFit<const D: usize> {
    /// Model with the smaller residual.
    pub blowup_type: BlowupType,
    /// Both residuals exceed [`UNCLASSIFIED_FRACTION`] of `‖u_r‖`.
    pub unclassified: bool,
    pub normal: Point<D>,
    /// PSD, trace ½.
    pub matrix: Matrix<D>,
    pub residual_a: f64,
    pub residual_b: f64,
    /// `‖u_r‖` on the fit domain.
    pub norm: f64,
    /// `dim Ker B` (type B only).
    pub stratum_dim: Option<usize>,
}

impl<const D: usize> BlowupFit<D> {
    /// The selected global solution `w`.
    pub fn model(&self) -> OracleSolution<D> {
        use crate::oracles::OracleKind;
        match self.blowup_type {
            BlowupType::A => OracleSolution {
                kind: OracleKind::Halfspace { normal: self.normal },
            },
            BlowupType::B => OracleSolution {
                kind: OracleKind::Quadratic { matrix: self.matrix },
            },
        }
    }
}

/// Fits `½(<x,ν> ∨ 0)^2` and `<Bx,x>` on `|x| >= 0.1`.
pub fn classify<const D: usize>(rescaling: &Rescaling<D>) -> Result<BlowupFit<D>> {
    let data: Vec<(Point<D>, f64, f64)> = rescaling.masked(FIT_INNER_RADIUS).copied().collect();
    let norm = libm::sqrt(data.iter().map(|(_, w, v)| w * v * v).sum::<f64>());
    let (normal, residual_a) = fit_halfspace(&data);
    let (matrix, residual_b) = fit_quadratic(&data)?;
    let blowup_type = if residual_a <= residual_b { BlowupType::A } else { BlowupType::B };
    let unclassified = residual_a.min(residual_b) > UNCLASSIFIED_FRACTION * norm;
    let stratum_dim = match blowup_type {
        BlowupType::B => Some(stratum_dimension(&matrix)),
        BlowupType::A => None,
    };
    Ok(BlowupFit {
        blowup_type,
        unclassified,
        normal,
        matrix,
        residual_a,
        residual_b,
        norm,
        stratum_dim,
    })
}

/// `dim Ker B` with eigenvalue threshold `1e-3 Tr B`.
pub fn stratum_dimension<const D: usize>(b: &Matrix<D>) -> usize {
    linalg::kernel_dimension(b, KERNEL_THRESHOLD * linalg::trace(b))
}

fn halfspace_residual<const D: usize>(data: &[(Point<D>, f64, f64)], nu: &Point<D>) -> f64 {
    libm::sqrt(
        data.iter()
            .map(|(x, w, v)| {
                let s = linalg::dot(x, nu).max(0.0);
                let d = v - 0.5 * s * s;
                w * d * d
            })
            .sum::<f64>(),
    )
}

fn unit_from_angles<const D: usize>(angles: &[f64]) -> Point<D> {
    let mut p = [0.0; D];
    if D == 2 {
        p[0] = libm::cos(angles[0]);
        p[1] = libm::sin(angles[0]);
    } else {
        let (t, z) = (angles[0], angles[1]);
        let rho = libm::sqrt((1.0 - z * z).max(0.0));
        p[0] = rho * libm::cos(t);
        p[1] = rho * libm::sin(t);
        p[2] = z;
    }
    p
}

fn tangent_basis<const D: usize>(nu: &Point<D>) -> Vec<Point<D>> {
    let mut basis: Vec<Point<D>> = Vec::new();
    for k in 0..D {
        let mut e = [0.0; D];
        e[k] = 1.0;
        let mut t = linalg::sub(&e, &linalg::scale(nu, linalg::dot(&e, nu)));
        for b in &basis {
            t = linalg::sub(&t, &linalg::scale(b, linalg::dot(&t, b)));
        }
        let len = linalg::norm(&t);
        if len > 1e-6 {
            basis.push(linalg::scale(&t, 1.0 / len));
        }
        if basis.len() == D - 1 {
            break;
        }
    }
    basis
}

/// Coarse search over directions (1° in 2D, a Fibonacci lattice in 3D)
/// followed by a shrinking pattern search on the sphere.
fn fit_halfspace<const D: usize>(data: &[(Point<D>, f64, f64)]) -> (Point<D>, f64) {
    let mut candidates: Vec<Point<D>> = Vec::new();
    if D == 2 {
        for k in 0..360 {
            candidates.push(unit_from_angles(&[2.0 * PI * k as f64 / 360.0]));
        }
    } else {
        let m = 2000;
        let golden = PI * (3.0 - libm::sqrt(5.0));
        for k in 0..m {
            let z = 1.0 - (2.0 * k as f64 + 1.0) / m as f64;
            candidates.push(unit_from_angles(&[golden * k as f64, z]));
        }
    }
    let mut best = candidates[0];
    let mut best_res = f64::INFINITY;
    for c in &candidates {
        let res = halfspace_residual(data, c);
        if res < best_res {
            best_res = res;
            best = *c;
        }
    }
    let mut step = if D == 2 { PI / 180.0 } else { 0.08 };
    while step > 1e-10 {
        let mut improved = false;
        for t in tangent_basis(&best) {
            for sign in [-1.0, 1.0] {
                let trial = linalg::add(&best, &linalg::scale(&t, sign * step));
                let trial = linalg::scale(&trial, 1.0 / linalg::norm(&trial));
                let res = halfspace_residual(data, &trial);
                if res < best_res {
                    best_res = res;
                    best = trial;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (best, best_res)
}

/// Linear least squares for symmetric `B`, then projection onto PSD
/// matrices with trace ½.
fn fit_quadratic<const D: usize>(data: &[(Point<D>, f64, f64)]) -> Result<(Matrix<D>, f64)> {
    let pairs: Vec<(usize, usize)> = (0..D).flat_map(|i| (i..D).map(move |j| (i, j))).collect();
    let m = pairs.len();
    let basis = |x: &Point<D>, (i, j): (usize, usize)| if i == j { x[i] * x[i] } else { 2.0 * x[i] * x[j] };
    let mut normal = vec![0.0; m * m];
    let mut rhs = vec![0.0; m];
    for (x, w, v) in data {
        let phi: Vec<f64> = pairs.iter().map(|&p| basis(x, p)).collect();
        for a in 0..m {
            rhs[a] += w * phi[a] * v;
            for b in 0..m {
                normal[a * m + b] += w * phi[a] * phi[b];
            }
        }
    }
    let coef = linalg::solve(normal, rhs, m)?;
    let mut b = [[0.0; D]; D];
    for (k, &(i, j)) in pairs.iter().enumerate() {
        b[i][j] = coef[k];
        b[j][i] = coef[k];
    }
    let projected = linalg::project_psd_with_trace(&b, 0.5);
    let residual = libm::sqrt(
        data.iter()
            .map(|(x, w, v)| {
                let d = v - linalg::quadratic_form(&projected, x);
                w * d * d
            })
            .sum::<f64>(),
    );
    Ok((projected, residual))
}

/// `L^2` norm over `0.25 <= |x| <= 1` of `u_r(x) - |x|^2 u_r(x/|x|)`.
pub fn homogeneity_residual<const D: usize>(rescaling: &Rescaling<D>) -> f64 {
    let mut acc = 0.0;
    for (k, (_, w, v)) in rescaling.samples.iter().enumerate() {
        let rho = rescaling.sample_radius[k];
        if rho < HOMOGENEITY_INNER_RADIUS {
            continue;
        }
        let boundary = rescaling.sphere[rescaling.direction[k]].2;
        let d = v - rho * rho * boundary;
        acc += w * d * d;
    }
    libm::sqrt(acc)
}

/// `ρ(t) = Σ_{j >= h} j^{-a/2}` for `t ∈ [2^{-h}, 2^{-h+1})`: an exact
/// partial sum followed by the midpoint-corrected tail integral.
pub fn rho(t: f64, a: f64) -> Result<f64> {
    if !(a > 2.0) {
        return Err(Error::param("a", alloc::format!("the series needs a > 2, got {a}")));
    }
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::param("t", alloc::format!("t must lie in (0, 1), got {t}")));
    }
    let mut h: u32 = 1;
    while libm::exp2(-(h as f64)) > t {
        h += 1;
    }
    let p = a / 2.0;
    let terms = 4096;
    let cut = h as f64 + terms as f64;
    let mut sum = libm::pow(cut - 0.5, 1.0 - p) / (p - 1.0);
    for j in (h..h + terms).rev() {
        sum += libm::pow(j as f64, -p);
    }
    Ok(sum)
}

/// Decay of the rescalings towards a fixed blow-up.
#[derive(Debug, Clone, PartialEq)]
pub struct Decay {
    /// `(r, d(r))` with `d(r) = ∫_{∂B_1} |u_r - w|`, radii increasing.
    pub distances: Vec<(f64, f64)>,
    /// `C7` fitted on the larger half of the radii as `max d/ρ`.
    pub c7: f64,
    /// Largest `d(r) / (C7 ρ(r))` over the smaller half.
    pub envelope_ratio: f64,
    /// Smallest forward difference of `d` in increasing `r`.
    pub min_increment: f64,
}

/// `d(r) = ∫_{∂B_1} |u_{L,r} - w|` with `u` already in the normalized frame
/// (the origin is the center), plus the `C7 ρ(r)` envelope with exponent `a`.
pub fn uniqueness_decay<const D: usize>(
    u: &impl Sampler<D>,
    model: &impl Sampler<D>,
    radii: &[f64],
    a: f64,
    sphere: &SphereRule<D>,
) -> Result<Decay> {
    let limit = u.reach(&[0.0; D]);
    let mut distances = Vec::with_capacity(radii.len());
    for &r in radii {
        if r > limit {
            return Err(Error::RadiusTooLarge { radius: r, limit });
        }
        let r2 = r * r;
        let d = sphere.integrate(|nu| (u.value(&linalg::scale(nu, r)) / r2 - model.value(nu)).abs());
        distances.push((r, d));
    }
    distances.sort_by(|x, y| x.0.total_cmp(&y.0));
    let split = distances.len() / 2;
    let mut c7 = 0.0f64;
    for &(r, d) in &distances[split..] {
        c7 = c7.max(d / rho(r, a)?);
    }
    let mut envelope_ratio = 0.0f64;
    for &(r, d) in &distances[..split] {
        let bound = c7 * rho(r, a)?;
        envelope_ratio = envelope_ratio.max(if bound > 0.0 { d / bound } else if d > 0.0 { f64::INFINITY } else { 0.0 });
    }
    let values: Vec<f64> = distances.iter().map(|p| p.1).collect();
    Ok(Decay {
        distances,
        c7,
        envelope_ratio,
        min_increment: crate::energies::min_forward_difference(&values),
    })
}

/// `max_r max_y ‖D^2 u_{x0,r}(y)‖_2` over lattice points of `B_1`, with
/// second differences of step `step / r` (in the original variables a fixed
/// step `step`).
pub fn uniform_hessian_bound<const D: usize>(
    u: &impl Sampler<D>,
    x0: &Point<D>,
    radii: &[f64],
    step: f64,
) -> Result<Vec<(f64, f64)>> {
    let limit = u.reach(x0);
    let per_axis = 17usize;
    let mut out = Vec::with_capacity(radii.len());
    for &r in radii {
        if r > limit {
            return Err(Error::RadiusTooLarge { radius: r, limit });
        }
        let delta = step / r;
        let ur = |y: &Point<D>| u.value(&linalg::add(x0, &linalg::scale(y, r))) / (r * r);
        let mut worst = 0.0f64;
        for flat in 0..per_axis.pow(D as u32) {
            let mut rest = flat;
            let y: Point<D> = core::array::from_fn(|_| {
                let i = rest % per_axis;
                rest /= per_axis;
                -1.0 + 2.0 * i as f64 / (per_axis - 1) as f64
            });
            if linalg::norm(&y) + 2.0 * delta > 1.0 {
                continue;
            }
            let centre = ur(&y);
            let mut hess = [[0.0; D]; D];
            for i in 0..D {
                let mut e = [0.0; D];
                e[i] = delta;
                hess[i][i] = (ur(&linalg::add(&y, &e)) - 2.0 * centre + ur(&linalg::sub(&y, &e))) / (delta * delta);
                for j in 0..i {
                    let mut f = [0.0; D];
                    f[j] = delta;
                    let pp = ur(&linalg::add(&linalg::add(&y, &e), &f));
                    let pm = ur(&linalg::sub(&linalg::add(&y, &e), &f));
                    let mp = ur(&linalg::add(&linalg::sub(&y, &e), &f));
                    let mm = ur(&linalg::sub(&linalg::sub(&y, &e), &f));
                    let d = (pp - pm - mp + mm) / (4.0 * delta * delta);
                    hess[i][j] = d;
                    hess[j][i] = d;
                }
            }
            let eig = SymmetricEigen::new(&hess);
            worst = worst.max(eig.min().abs().max(eig.max().abs()));
        }
        out.push((r, worst));
    }
    Ok(out)
}
