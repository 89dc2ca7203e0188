//! Experiment configuration: JSON with complex entries as `[re, im]` pairs and
//! matrices as row-major nested arrays. See `config.schema.json`.

use std::fmt;
use std::path::Path;

use oqbm::linalg::pauli::{sigma_minus, sigma_plus, sigma_x, sigma_y, sigma_z};
use oqbm::linalg::DensityMatrix;
use oqbm::{Complex64, Matrix};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },

    /// Syntax or type error, located in the source text.
    #[error("line {line}, column {column}, field `{field}`: {message}")]
    Parse { line: usize, column: usize, field: String, message: String },

    /// Semantically invalid value in a well-formed document.
    #[error("field `{field}`: {message}")]
    Invalid { field: String, message: String },
}

fn invalid<T>(field: &str, message: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError::Invalid { field: field.into(), message: message.into() })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    SimulateOqw,
    SimulateBelavkin,
    SolveLindblad,
    TrajectoryConvergence,
    ChannelConvergence,
    DilationAudit,
    RegimeMap,
    ConsistencyAudit,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::SimulateOqw => "simulate-oqw",
            Self::SimulateBelavkin => "simulate-belavkin",
            Self::SolveLindblad => "solve-lindblad",
            Self::TrajectoryConvergence => "trajectory-convergence",
            Self::ChannelConvergence => "channel-convergence",
            Self::DilationAudit => "dilation-audit",
            Self::RegimeMap => "regime-map",
            Self::ConsistencyAudit => "consistency-audit",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A matrix literal or one of the named 2×2 operators
/// `sigma_x`, `sigma_y`, `sigma_z`, `sigma_minus`, `sigma_plus`, `i_sigma_y`, `zero`, `identity`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixLiteral {
    Named(String),
    Entries(Vec<Vec<[f64; 2]>>),
}

impl MatrixLiteral {
    pub fn to_matrix(&self, field: &str) -> Result<Matrix, ConfigError> {
        match self {
            Self::Named(name) => named(name).map_or_else(|| invalid(field, format!("unknown operator name `{name}`")), Ok),
            Self::Entries(rows) => {
                let n = rows.len();
                if n == 0 {
                    return invalid(field, "empty matrix");
                }
                for (i, r) in rows.iter().enumerate() {
                    if r.len() != n {
                        return invalid(&format!("{field}[{i}]"), format!("row has {} entries, expected {n}", r.len()));
                    }
                    if r.iter().flatten().any(|v| !v.is_finite()) {
                        return invalid(&format!("{field}[{i}]"), "non-finite entry");
                    }
                }
                Ok(Matrix::from_fn(n, n, |i, j| Complex64::new(rows[i][j][0], rows[i][j][1])))
            }
        }
    }
}

fn named(name: &str) -> Option<Matrix> {
    Some(match name {
        "sigma_x" => sigma_x(),
        "sigma_y" => sigma_y(),
        "sigma_z" => sigma_z(),
        "sigma_minus" => sigma_minus(),
        "sigma_plus" => sigma_plus(),
        "i_sigma_y" => sigma_y::<f64>().scale(Complex64::new(0.0, 1.0)),
        "zero" => Matrix::zeros(2, 2),
        "identity" => Matrix::identity(2),
        _ => return None,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub n: MatrixLiteral,
    pub h: MatrixLiteral,
    #[serde(default)]
    pub m: Option<MatrixLiteral>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reference {
    /// Belavkin SDE ensemble at `dt` (default: the finest `tau`).
    #[default]
    Sde,
    /// Exact `N(x0, t_final)` law; requires `N = 0`.
    Gaussian,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowConfig {
    /// Half-width of the spatial window.
    pub half_width: Option<f64>,
    /// Number of lattice sites (odd), for lattice fields and walks.
    pub sites: Option<usize>,
    /// Variance of the Gaussian initial position density.
    pub initial_variance: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeConfig {
    pub from: usize,
    pub to: usize,
    pub kraus: MatrixLiteral,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WalkConfig {
    pub n_vertices: usize,
    pub edges: Vec<EdgeConfig>,
    pub start: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegimeConfig {
    /// Coupling scales `λ`; the generator uses `λN` and `H`.
    pub lambdas: Vec<f64>,
    /// Expected `|speed| = slope·λ` for every invariant state, if declared.
    #[serde(default)]
    pub speed_slope: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConsistencyConfig {
    #[serde(default = "three")]
    pub n_vertices: usize,
    #[serde(default = "two")]
    pub gyro_dim: usize,
    #[serde(default = "two")]
    pub n_steps: usize,
    #[serde(default = "yes")]
    pub noisy_pointers: bool,
    #[serde(default = "yes")]
    pub counterexample: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DilationConfig {
    #[serde(default = "eight")]
    pub n_probes: usize,
    #[serde(default = "thirty_three")]
    pub toy_window: usize,
    /// Initial gyroscope vector of the register, `[re, im]` entries.
    #[serde(default)]
    pub psi0: Option<Vec<[f64; 2]>>,
}

fn two() -> usize {
    2
}
fn three() -> usize {
    3
}
fn eight() -> usize {
    8
}
fn thirty_three() -> usize {
    33
}
fn yes() -> bool {
    true
}

/// Declared tolerances; unset entries fall back to the defaults of the accessors.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub dilation: Option<f64>,
    pub toyfock: Option<f64>,
    pub defect_spread: Option<f64>,
    pub ks_final: Option<f64>,
    pub ratio_band: Option<[f64; 2]>,
    pub heat_kernel: Option<f64>,
    pub marginal: Option<f64>,
    pub residual: Option<f64>,
    pub speed: Option<f64>,
    pub consistency: Option<f64>,
    pub counterexample: Option<f64>,
    pub stderr_factor: Option<f64>,
}

impl Tolerances {
    pub fn dilation(&self) -> f64 {
        self.dilation.unwrap_or(1e-11)
    }
    pub fn toyfock(&self) -> f64 {
        self.toyfock.unwrap_or(1e-10)
    }
    pub fn defect_spread(&self) -> f64 {
        self.defect_spread.unwrap_or(2.0)
    }
    pub fn ks_final(&self) -> f64 {
        self.ks_final.unwrap_or(0.02)
    }
    /// Error ratio per 4× shrink of `tau`: halving within ±25%.
    pub fn ratio_band(&self) -> [f64; 2] {
        self.ratio_band.unwrap_or([0.375, 0.625])
    }
    pub fn heat_kernel(&self) -> f64 {
        self.heat_kernel.unwrap_or(1e-4)
    }
    pub fn marginal(&self) -> f64 {
        self.marginal.unwrap_or(1e-8)
    }
    pub fn residual(&self) -> f64 {
        self.residual.unwrap_or(1e-10)
    }
    pub fn speed(&self) -> f64 {
        self.speed.unwrap_or(1e-8)
    }
    pub fn consistency(&self) -> f64 {
        self.consistency.unwrap_or(1e-10)
    }
    pub fn counterexample(&self) -> f64 {
        self.counterexample.unwrap_or(1e-3)
    }
    pub fn stderr_factor(&self) -> f64 {
        self.stderr_factor.unwrap_or(5.0)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_csv")]
    pub csv: String,
    #[serde(default = "default_manifest")]
    pub manifest: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { csv: default_csv(), manifest: default_manifest() }
    }
}

fn default_csv() -> String {
    "results.csv".into()
}
fn default_manifest() -> String {
    "manifest.json".into()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub kind: Option<ExperimentKind>,
    pub model: ModelConfig,
    /// Initial gyroscope state; defaults to `|0⟩⟨0|`.
    #[serde(default)]
    pub rho0: Option<MatrixLiteral>,
    #[serde(default)]
    pub x0: f64,
    #[serde(default)]
    pub t_final: Option<f64>,
    /// Time-step sweep, strictly decreasing.
    #[serde(default)]
    pub tau: Vec<f64>,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub dx: Option<f64>,
    #[serde(default)]
    pub n_steps: Option<usize>,
    #[serde(default)]
    pub n_paths: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub record_every: Option<usize>,
    #[serde(default)]
    pub reference: Reference,
    #[serde(default)]
    pub girsanov: bool,
    #[serde(default)]
    pub window: WindowConfig,
    #[serde(default)]
    pub walk: Option<WalkConfig>,
    #[serde(default)]
    pub regime: Option<RegimeConfig>,
    #[serde(default)]
    pub consistency: Option<ConsistencyConfig>,
    #[serde(default)]
    pub dilation: Option<DilationConfig>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Top-level field names, kept in step with the schema file.
pub const TOP_LEVEL_FIELDS: &[&str] = &[
    "kind", "model", "rho0", "x0", "t_final", "tau", "dt", "dx", "n_steps", "n_paths", "seed", "record_every",
    "reference", "girsanov", "window", "walk", "regime", "consistency", "dilation", "tolerances", "output",
];

/// Parses a config document, reporting the line, column and field path of
/// the first syntax or type error.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        let inner = e.into_inner();
        ConfigError::Parse { line: inner.line(), column: inner.column(), field, message: inner.to_string() }
    })
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
    parse_config(&text)
}

/// Matrices and scalars of a validated config.
#[derive(Clone, Debug)]
pub struct Model {
    pub n: Matrix,
    pub h: Matrix,
    pub m: Option<Matrix>,
    pub rho0: DensityMatrix<f64>,
}

impl ExperimentConfig {
    /// Resolves the experiment kind against the one implied by the subcommand.
    pub fn resolve_kind(&self, allowed: &[ExperimentKind]) -> Result<ExperimentKind, ConfigError> {
        match (self.kind, allowed) {
            (Some(k), _) if allowed.contains(&k) => Ok(k),
            (Some(k), _) => invalid(
                "kind",
                format!("`{k}` is not handled by this subcommand (expected one of {})", names(allowed)),
            ),
            (None, [only]) => Ok(*only),
            (None, _) => invalid("kind", format!("required, one of {}", names(allowed))),
        }
    }

    pub fn model(&self) -> Result<Model, ConfigError> {
        let n = self.model.n.to_matrix("model.n")?;
        let d = n.rows();
        let h = self.model.h.to_matrix("model.h")?;
        if h.rows() != d {
            return invalid("model.h", format!("is {}×{}, model.n is {d}×{d}", h.rows(), h.rows()));
        }
        if h.hermiticity_defect() > 1e-12 {
            return invalid("model.h", "not Hermitian");
        }
        let m = match &self.model.m {
            Some(lit) => {
                let m = lit.to_matrix("model.m")?;
                if m.rows() != d {
                    return invalid("model.m", format!("is {}×{}, model.n is {d}×{d}", m.rows(), m.rows()));
                }
                (m.max_abs() > 0.0).then_some(m)
            }
            None => None,
        };
        let rho0 = match &self.rho0 {
            Some(lit) => {
                let r = lit.to_matrix("rho0")?;
                if r.rows() != d {
                    return invalid("rho0", format!("is {}×{}, model.n is {d}×{d}", r.rows(), r.rows()));
                }
                DensityMatrix::new(r).or_else(|e| invalid("rho0", e.to_string()))?
            }
            None => DensityMatrix::basis(d, 0),
        };
        Ok(Model { n, h, m, rho0 })
    }

    pub fn require_t_final(&self) -> Result<f64, ConfigError> {
        positive("t_final", self.t_final)
    }

    pub fn require_dt(&self) -> Result<f64, ConfigError> {
        positive("dt", self.dt)
    }

    pub fn require_n_paths(&self) -> Result<usize, ConfigError> {
        match self.n_paths {
            Some(n) if n > 0 => Ok(n),
            Some(_) => invalid("n_paths", "must be positive"),
            None => invalid("n_paths", "required for this experiment"),
        }
    }

    /// The `tau` sweep, nonempty, positive and strictly decreasing.
    pub fn require_taus(&self, min_len: usize) -> Result<&[f64], ConfigError> {
        if self.tau.len() < min_len {
            return invalid("tau", format!("need at least {min_len} values"));
        }
        for (i, &t) in self.tau.iter().enumerate() {
            if !(t > 0.0 && t.is_finite()) {
                return invalid(&format!("tau[{i}]"), "must be positive");
            }
        }
        if let Some(i) = self.tau.windows(2).position(|w| w[1] >= w[0]) {
            return invalid(&format!("tau[{}]", i + 1), "sweep must be strictly decreasing");
        }
        Ok(&self.tau)
    }

    /// Number of steps `t_final / tau`, which must be an integer.
    pub fn steps_for(&self, tau: f64, index: usize) -> Result<usize, ConfigError> {
        let t = self.require_t_final()?;
        let n = (t / tau).round();
        if (n * tau - t).abs() > 1e-9 * t || n < 1.0 {
            return invalid(&format!("tau[{index}]"), format!("t_final = {t} is not a multiple of {tau}"));
        }
        Ok(n as usize)
    }
}

fn positive(field: &str, v: Option<f64>) -> Result<f64, ConfigError> {
    match v {
        Some(x) if x > 0.0 && x.is_finite() => Ok(x),
        Some(x) => invalid(field, format!("must be positive, got {x}")),
        None => invalid(field, "required for this experiment"),
    }
}

fn names(kinds: &[ExperimentKind]) -> String {
    kinds.iter().map(|k| format!("`{k}`")).collect::<Vec<_>>().join(", ")
}

pub(crate) fn invalid_field(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field: field.into(), message: message.into() }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"model": {"n": "sigma_z", "h": "zero"}}"#;

    #[test]
    fn named_and_literal_matrices_agree() {
        let lit = MatrixLiteral::Entries(vec![vec![[1.0, 0.0], [0.0, 0.0]], vec![[0.0, 0.0], [-1.0, 0.0]]]);
        let a = lit.to_matrix("n").unwrap();
        let b = MatrixLiteral::Named("sigma_z".into()).to_matrix("n").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn minimal_config_defaults() {
        let cfg = parse_config(MINIMAL).unwrap();
        let m = cfg.model().unwrap();
        assert_eq!(m.rho0.matrix()[(0, 0)].re, 1.0);
        assert_eq!(cfg.output.csv, "results.csv");
        assert_eq!(cfg.tolerances.ratio_band(), [0.375, 0.625]);
    }

    #[test]
    fn kind_resolution() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.resolve_kind(&[ExperimentKind::RegimeMap]).unwrap(), ExperimentKind::RegimeMap);
        let both = [ExperimentKind::TrajectoryConvergence, ExperimentKind::ChannelConvergence];
        assert!(matches!(cfg.resolve_kind(&both), Err(ConfigError::Invalid { field, .. }) if field == "kind"));
    }
}
