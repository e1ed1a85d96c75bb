//! Experiment configuration files.
//!
//! Configurations are TOML documents; unknown keys are rejected. See the
//! README for the full grammar. [`ExperimentConfig::validate`] enforces
//! every cross-field rule before any computation starts, and
//! [`ExperimentConfig::hash`] fingerprints the configuration for the
//! `config_hash` column of every report row.

use std::path::{Path, PathBuf};

use obstacle_core::coefficients::{
    make_field, theta_exponent, CoefficientField, Domain, FieldPreset, Modulus, SobolevParams, SourceSpec,
};
use obstacle_core::energies::RadiusSchedule;
use obstacle_core::linalg::Matrix;
use obstacle_core::oracles::OracleSolution;
use obstacle_core::Point;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{LabError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub field: FieldConfig,
    #[serde(default)]
    pub source: SourceConfig,
    #[serde(default)]
    pub solution: SolutionConfig,
    #[serde(default)]
    pub centers: CentersConfig,
    #[serde(default)]
    pub radii: RadiiConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub checks: ChecksConfig,
    #[serde(default)]
    pub epiperimetric: EpiConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub dimension: usize,
    pub nodes: usize,
    pub lower: f64,
    pub upper: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            dimension: 2,
            nodes: 257,
            lower: -1.0,
            upper: 1.0,
        }
    }
}

impl GridConfig {
    pub fn spacing(&self) -> f64 {
        (self.upper - self.lower) / (self.nodes.max(2) - 1) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PresetName {
    #[default]
    Identity,
    HolderPerturbation,
    Anisotropic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FieldConfig {
    pub preset: PresetName,
    pub gamma: Option<f64>,
    pub perturbation: Option<Vec<Vec<f64>>>,
    pub ellipticity: Option<f64>,
    pub matrix: Option<Vec<Vec<f64>>>,
    pub sobolev: SobolevConfig,
}

impl Default for FieldConfig {
    fn default() -> Self {
        FieldConfig {
            preset: PresetName::Identity,
            gamma: None,
            perturbation: None,
            ellipticity: None,
            matrix: None,
            sobolev: SobolevConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SobolevConfig {
    pub s: f64,
    pub p: f64,
    pub t0: f64,
}

impl Default for SobolevConfig {
    fn default() -> Self {
        let d = SobolevParams::default();
        SobolevConfig { s: d.s, p: d.p, t0: d.t0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ModulusName {
    #[default]
    Zero,
    Holder,
    LogPower,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SourceConfig {
    pub base: f64,
    pub amplitude: f64,
    pub center: Option<Vec<f64>>,
    pub modulus: ModulusName,
    /// `α` for `holder`, `b` for `log_power`.
    pub modulus_param: Option<f64>,
}

impl Default for SourceConfig {
    fn default() -> Self {
        SourceConfig {
            base: 1.0,
            amplitude: 0.0,
            center: None,
            modulus: ModulusName::Zero,
            modulus_param: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SolutionKind {
    /// PSOR solve with Dirichlet data from an oracle or a file.
    #[default]
    Solve,
    /// Analyse the closed-form oracle directly.
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleName {
    Halfspace,
    Quadratic,
    Annulus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolutionConfig {
    pub kind: SolutionKind,
    pub oracle: Option<OracleName>,
    pub normal: Option<Vec<f64>>,
    pub matrix: Option<Vec<Vec<f64>>>,
    pub radius: Option<f64>,
    /// Add the radial correction that keeps the oracle an exact solution
    /// for the modulated source.
    pub compensate_source: bool,
    /// CSV with columns `i,j[,k],u` giving the Dirichlet values at every
    /// boundary node (instead of an oracle).
    pub values: Option<PathBuf>,
}

impl Default for SolutionConfig {
    fn default() -> Self {
        SolutionConfig {
            kind: SolutionKind::Solve,
            oracle: Some(OracleName::Annulus),
            normal: None,
            matrix: None,
            radius: None,
            compensate_source: false,
            values: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CenterMode {
    /// Farthest-point sample of the extracted free boundary.
    #[default]
    Auto,
    Explicit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CentersConfig {
    pub mode: CenterMode,
    pub count: usize,
    pub points: Vec<Vec<f64>>,
    /// Points inside the coincidence set, for the nondegeneracy control.
    pub controls: Vec<Vec<f64>>,
}

impl Default for CentersConfig {
    fn default() -> Self {
        CentersConfig {
            mode: CenterMode::Auto,
            count: 8,
            points: Vec::new(),
            controls: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RadiiConfig {
    pub r_max: f64,
    /// Defaults to `4h` (solve) and is required for oracle runs.
    pub r_min: Option<f64>,
    pub per_octave: u32,
    /// Radii per octave of the trace when constants are calibrated.
    pub calibration_per_octave: u32,
    /// Radius of the rescaling used for classification; defaults to the
    /// largest trace radius `<= max(8h, 0.1)`.
    pub fit_radius: Option<f64>,
}

impl Default for RadiiConfig {
    fn default() -> Self {
        RadiiConfig {
            r_max: 0.45,
            r_min: None,
            per_octave: 2,
            calibration_per_octave: 4,
            fit_radius: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub tolerance: f64,
    /// Relaxation factor; the optimal `2/(1 + sin(π/(N-1)))` when absent.
    pub omega: Option<f64>,
    pub max_sweeps: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tolerance: 1e-10,
            omega: None,
            max_sweeps: 200_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChecksConfig {
    pub reference_phi: bool,
    pub weiss_monotone: bool,
    pub phi_limit: bool,
    pub classify: bool,
    pub nondegeneracy: bool,
    pub calibration: bool,
    pub monneau: bool,
    pub decay: bool,
    pub epiperimetric: bool,
    pub slack: f64,
    pub reference_tolerance: f64,
    pub phi_tolerance: f64,
    pub constants_ceiling: f64,
    pub nondegeneracy_floor: f64,
    pub control_ceiling: f64,
    pub decay_exponent: f64,
    pub kappa_floor: f64,
}

impl Default for ChecksConfig {
    fn default() -> Self {
        ChecksConfig {
            reference_phi: false,
            weiss_monotone: true,
            phi_limit: true,
            classify: true,
            nondegeneracy: true,
            calibration: false,
            monneau: false,
            decay: false,
            epiperimetric: false,
            slack: 1e-3,
            reference_tolerance: 0.01,
            phi_tolerance: 0.03,
            constants_ceiling: 1e3,
            nondegeneracy_floor: 0.1,
            control_ceiling: 1e-3,
            decay_exponent: 4.0,
            kappa_floor: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EpiConfig {
    pub count: usize,
    pub delta: f64,
    pub nodes: usize,
    pub angles: usize,
    /// Gauss–Legendre latitudes of the boundary lattice (3D only).
    pub latitudes: usize,
    pub normal: Option<Vec<f64>>,
}

impl Default for EpiConfig {
    fn default() -> Self {
        EpiConfig {
            count: 20,
            delta: 0.05,
            nodes: 129,
            angles: 256,
            latitudes: 32,
            normal: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
}

fn bad(rule: impl Into<String>) -> LabError {
    LabError::Config(rule.into())
}

pub fn point<const D: usize>(v: &[f64], what: &str) -> Result<Point<D>> {
    if v.len() != D {
        return Err(bad(format!("{what}: expected {D} coordinates, got {}", v.len())));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(bad(format!("{what}: coordinates must be finite")));
    }
    Ok(std::array::from_fn(|k| v[k]))
}

pub fn matrix<const D: usize>(rows: &[Vec<f64>], what: &str) -> Result<Matrix<D>> {
    if rows.len() != D {
        return Err(bad(format!("{what}: expected {D} rows, got {}", rows.len())));
    }
    let mut m = [[0.0; D]; D];
    for (i, row) in rows.iter().enumerate() {
        m[i] = point::<D>(row, what)?;
    }
    Ok(m)
}

fn core_err(context: &str) -> impl Fn(obstacle_core::Error) -> LabError + '_ {
    move |e| bad(format!("{context}: {e}"))
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| bad(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        let mut config = Self::from_toml(&text).map_err(|e| match e {
            LabError::Config(msg) => bad(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        if let Some(values) = &config.solution.values {
            if values.is_relative() {
                let base = path.parent().unwrap_or(Path::new("."));
                config.solution.values = Some(base.join(values));
            }
        }
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON form
    /// (output directory excluded).
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output = OutputConfig::default();
        let json = serde_json::to_string(&canonical).expect("configuration serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn is_oracle_run(&self) -> bool {
        self.solution.kind == SolutionKind::Oracle
    }

    /// Grid spacing of a solve run.
    pub fn spacing(&self) -> Option<f64> {
        (!self.is_oracle_run()).then(|| self.grid.spacing())
    }

    pub fn r_min(&self) -> Result<f64> {
        match (self.radii.r_min, self.spacing()) {
            (Some(r), _) => Ok(r),
            (None, Some(h)) => Ok(4.0 * h),
            (None, None) => Err(bad("radii.r_min is required for oracle runs")),
        }
    }

    /// Trace radii, increasing.
    pub fn trace_radii(&self) -> Result<Vec<f64>> {
        let per_octave = if self.checks.calibration {
            self.radii.calibration_per_octave
        } else {
            self.radii.per_octave
        };
        let schedule = RadiusSchedule::new(self.radii.r_max, self.r_min()?, per_octave).map_err(core_err("radii"))?;
        Ok(schedule.radii())
    }

    pub fn theta_exponent(&self) -> Result<f64> {
        let s = &self.field.sobolev;
        theta_exponent(s.s, s.p, self.grid.dimension, s.t0).map_err(core_err("field.sobolev"))
    }

    pub fn modulus(&self) -> Result<Modulus> {
        let param = |name: &str| {
            self.source
                .modulus_param
                .ok_or_else(|| bad(format!("source.modulus_param is required for modulus `{name}`")))
        };
        match self.source.modulus {
            ModulusName::Zero => Ok(Modulus::zero()),
            ModulusName::Holder => Modulus::holder(param("holder")?).map_err(core_err("source.modulus_param")),
            ModulusName::LogPower => Modulus::log_power(param("log_power")?).map_err(core_err("source.modulus_param")),
        }
    }

    pub fn source_center<const D: usize>(&self) -> Result<Point<D>> {
        match &self.source.center {
            Some(c) => point::<D>(c, "source.center"),
            None => Ok([0.0; D]),
        }
    }

    pub fn coefficient_field<const D: usize>(&self) -> Result<CoefficientField<D>> {
        let f = &self.field;
        let preset = match f.preset {
            PresetName::Identity => FieldPreset::Identity,
            PresetName::Anisotropic => FieldPreset::Anisotropic {
                matrix: matrix::<D>(
                    f.matrix.as_deref().ok_or_else(|| bad("field.matrix is required for preset `anisotropic`"))?,
                    "field.matrix",
                )?,
            },
            PresetName::HolderPerturbation => FieldPreset::HolderPerturbation {
                gamma: f.gamma.ok_or_else(|| bad("field.gamma is required for preset `holder_perturbation`"))?,
                perturbation: matrix::<D>(
                    f.perturbation
                        .as_deref()
                        .ok_or_else(|| bad("field.perturbation is required for preset `holder_perturbation`"))?,
                    "field.perturbation",
                )?,
                ellipticity: f
                    .ellipticity
                    .ok_or_else(|| bad("field.ellipticity is required for preset `holder_perturbation`"))?,
            },
        };
        let source = SourceSpec::modulated(
            self.source.base,
            self.source.amplitude,
            self.source_center::<D>()?,
            self.modulus()?,
        );
        let sobolev = SobolevParams {
            s: f.sobolev.s,
            p: f.sobolev.p,
            t0: f.sobolev.t0,
        };
        let domain = Domain {
            lower: self.grid.lower,
            upper: self.grid.upper,
        };
        make_field(preset, source, sobolev, domain).map_err(core_err("field"))
    }

    pub fn oracle<const D: usize>(&self) -> Result<Option<OracleSolution<D>>> {
        let s = &self.solution;
        let Some(name) = s.oracle else {
            return Ok(None);
        };
        let oracle = match name {
            OracleName::Halfspace => {
                let normal = match &s.normal {
                    Some(v) => point::<D>(v, "solution.normal")?,
                    None => std::array::from_fn(|k| if k == 0 { 1.0 } else { 0.0 }),
                };
                OracleSolution::halfspace(normal)
            }
            OracleName::Quadratic => {
                let m = match &s.matrix {
                    Some(rows) => matrix::<D>(rows, "solution.matrix")?,
                    None => obstacle_core::linalg::mat_scale(&obstacle_core::linalg::identity(), 0.5 / D as f64),
                };
                OracleSolution::quadratic(m)
            }
            OracleName::Annulus => OracleSolution::annulus(s.radius.unwrap_or(0.5)),
        };
        oracle.map(Some).map_err(core_err("solution"))
    }

    pub fn explicit_centers<const D: usize>(&self) -> Result<Vec<Point<D>>> {
        self.centers.points.iter().map(|p| point::<D>(p, "centers.points")).collect()
    }

    pub fn control_centers<const D: usize>(&self) -> Result<Vec<Point<D>>> {
        self.centers.controls.iter().map(|p| point::<D>(p, "centers.controls")).collect()
    }

    /// Checks every rule that can be decided without solving.
    pub fn validate(&self) -> Result<()> {
        match self.grid.dimension {
            2 => self.validate_dim::<2>(),
            3 => self.validate_dim::<3>(),
            d => Err(bad(format!("grid.dimension must be 2 or 3, got {d}"))),
        }
    }

    fn validate_dim<const D: usize>(&self) -> Result<()> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(bad("name must be a non-empty file name component"));
        }
        let g = &self.grid;
        if !(g.upper > g.lower) {
            return Err(bad("grid.upper must exceed grid.lower"));
        }
        if !self.is_oracle_run() && g.nodes < obstacle_core::grid::MIN_NODES {
            return Err(bad(format!(
                "grid.nodes must be at least {}, got {}",
                obstacle_core::grid::MIN_NODES,
                g.nodes
            )));
        }
        let field = self.coefficient_field::<D>()?;
        self.theta_exponent()?;
        let oracle = self.oracle::<D>()?;

        match self.solution.kind {
            SolutionKind::Oracle => {
                if oracle.is_none() {
                    return Err(bad("solution.oracle is required for oracle runs"));
                }
                if field.ellipticity != 1.0 || self.source.amplitude != 0.0 || self.source.base != 1.0 {
                    return Err(bad("oracle runs need the identity preset with f ≡ 1"));
                }
                if self.centers.mode == CenterMode::Auto {
                    return Err(bad("oracle runs need centers.mode = \"explicit\""));
                }
            }
            SolutionKind::Solve => {
                if oracle.is_some() == self.solution.values.is_some() {
                    return Err(bad("solve runs need exactly one of solution.oracle and solution.values"));
                }
                if self.solution.compensate_source {
                    if !matches!(self.solution.oracle, Some(OracleName::Quadratic)) {
                        return Err(bad("solution.compensate_source needs the quadratic oracle"));
                    }
                    if self.field.preset != PresetName::Identity {
                        return Err(bad("solution.compensate_source needs the identity preset"));
                    }
                }
            }
        }

        let r = &self.radii;
        let r_min = self.r_min()?;
        if let Some(h) = self.spacing() {
            if r_min < 4.0 * h * (1.0 - 1e-12) {
                return Err(bad(format!("radii.r_min = {r_min} is below 4h = {}", 4.0 * h)));
            }
        }
        if !(r.r_max >= r_min && r_min > 0.0) {
            return Err(bad(format!("radii need 0 < r_min <= r_max, got r_min = {r_min}, r_max = {}", r.r_max)));
        }
        if r.per_octave == 0 || r.calibration_per_octave == 0 {
            return Err(bad("radii per octave must be at least 1"));
        }
        if let Some(fit) = r.fit_radius {
            if !(fit > 0.0 && fit <= r.r_max) {
                return Err(bad("radii.fit_radius must lie in (0, r_max]"));
            }
        }
        let radii = self.trace_radii()?;
        if radii.len() < 3 {
            return Err(bad(format!("the radius schedule has {} radii, need at least 3", radii.len())));
        }
        if self.checks.calibration && radii.len() < 16 {
            return Err(bad(format!(
                "calibration needs at least 16 radii, the schedule has {}",
                radii.len()
            )));
        }

        match self.centers.mode {
            CenterMode::Explicit => {
                if self.centers.points.is_empty() {
                    return Err(bad("centers.points must not be empty in explicit mode"));
                }
            }
            CenterMode::Auto => {
                if self.centers.count == 0 {
                    return Err(bad("centers.count must be at least 1"));
                }
            }
        }
        for x in self.explicit_centers::<D>()?.iter().chain(&self.control_centers::<D>()?) {
            if x.iter().any(|&c| c <= g.lower || c >= g.upper) {
                return Err(bad(format!("center {x:?} lies outside the box")));
            }
        }

        let s = &self.solver;
        if !(s.tolerance > 0.0) || s.max_sweeps == 0 {
            return Err(bad("solver.tolerance must be positive and solver.max_sweeps nonzero"));
        }
        if let Some(w) = s.omega {
            if !(w > 0.0 && w < 2.0) {
                return Err(bad(format!("solver.omega must lie in (0, 2), got {w}")));
            }
        }

        let c = &self.checks;
        if !(c.slack >= 0.0 && c.reference_tolerance > 0.0 && c.phi_tolerance > 0.0) {
            return Err(bad("checks tolerances must be positive"));
        }
        if c.decay && !(c.decay_exponent > 2.0) {
            return Err(bad("checks.decay_exponent must exceed 2"));
        }
        if c.epiperimetric {
            let e = &self.epiperimetric;
            if e.count == 0 || !(e.delta > 0.0) {
                return Err(bad("epiperimetric.count must be positive and epiperimetric.delta > 0"));
            }
            if e.nodes < obstacle_core::grid::MIN_NODES || e.angles < 8 {
                return Err(bad("epiperimetric.nodes must be at least 17 and epiperimetric.angles at least 8"));
            }
            if D == 3 && e.latitudes < 4 {
                return Err(bad("epiperimetric.latitudes must be at least 4 in 3D"));
            }
            if let Some(n) = &e.normal {
                let n = point::<D>(n, "epiperimetric.normal")?;
                OracleSolution::halfspace(n).map_err(core_err("epiperimetric.normal"))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
name = "annulus"

[grid]
nodes = 65
"#;

    #[test]
    fn defaults_fill_a_minimal_file() {
        let c = ExperimentConfig::from_toml(MINIMAL).unwrap();
        c.validate().unwrap();
        assert_eq!(c.solution.oracle, Some(OracleName::Annulus));
        assert_eq!(c.r_min().unwrap(), 4.0 * 2.0 / 64.0);
        assert_eq!(c.hash().len(), 16);
    }

    #[test]
    fn round_trip_preserves_the_hash() {
        let c = ExperimentConfig::from_toml(MINIMAL).unwrap();
        let again = ExperimentConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(c, again);
        assert_eq!(c.hash(), again.hash());
        let mut other = c.clone();
        other.seed = 7;
        assert_ne!(c.hash(), other.hash());
        other = c.clone();
        other.output.dir = Some("elsewhere".into());
        assert_eq!(c.hash(), other.hash());
    }

    #[test]
    fn small_r_min_is_rejected() {
        let c = ExperimentConfig::from_toml(&format!("{MINIMAL}\n[radii]\nr_min = 0.01\n")).unwrap();
        let err = c.validate().unwrap_err().to_string();
        assert!(err.contains("below 4h"), "{err}");
    }

    #[test]
    fn unknown_keys_and_presets_are_rejected() {
        assert!(ExperimentConfig::from_toml(&format!("{MINIMAL}\nbogus = 1\n")).is_err());
        assert!(ExperimentConfig::from_toml("name = \"x\"\n[field]\npreset = \"spherical\"\n").is_err());
        let missing = ExperimentConfig::from_toml(&format!("{MINIMAL}\n[field]\npreset = \"holder_perturbation\"\n")).unwrap();
        assert!(missing.validate().unwrap_err().to_string().contains("field.gamma"));
    }

    #[test]
    fn oracle_runs_need_explicit_centers_and_r_min() {
        let text = "name = \"h\"\n[solution]\nkind = \"oracle\"\noracle = \"halfspace\"\n";
        let c = ExperimentConfig::from_toml(text).unwrap();
        assert!(c.validate().unwrap_err().to_string().contains("explicit"));
        let c = ExperimentConfig::from_toml(&format!("{text}[centers]\nmode = \"explicit\"\npoints = [[0.0, 0.0]]\n")).unwrap();
        assert!(c.validate().unwrap_err().to_string().contains("r_min"));
    }

    #[test]
    fn wrong_arity_is_reported() {
        let text = format!("{MINIMAL}\n[centers]\nmode = \"explicit\"\npoints = [[0.5, 0.0, 0.0]]\n");
        let err = ExperimentConfig::from_toml(&text).unwrap().validate().unwrap_err().to_string();
        assert!(err.contains("expected 2 coordinates"), "{err}");
    }
}
