//! Experiment configuration files.
//!
//! A config is a single JSON object. Common keys are `experiment`, `trials`,
//! `seed`, `model` and `output`; the remaining keys depend on the experiment.
//! A stored [`RunReport`](crate::RunReport) is also accepted and replays the
//! config it echoes.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sr_core::bell::{ChshSettings, PairRole, ParityScenario};
use sr_core::ensemble::{Axis, MeasurementSetting, Party, Pauli, TableModel, TableRow};
use sr_core::linalg::{c, Projector, StateVector, C64};
use sr_core::measurement::MeasurementBranching;
use sr_core::statespace::{Observable, DEFAULT_NO_REGISTRATION};

use crate::error::LabError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(flatten)]
    pub experiment: Experiment,
    pub trials: u64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
    Text,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "kebab-case")]
pub enum Experiment {
    Chsh {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        model: Option<ModelSpec>,
        /// `[a, a', b, b']` in degrees, or the name of an angle preset.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        angles: Option<AnglesSpec>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        order: Option<[PairRole; 4]>,
    },
    Ghz {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        model: Option<ModelSpec>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        contexts: Option<[[Pauli; 3]; 4]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        parities: Option<[i8; 4]>,
    },
    Pc {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        model: Option<ModelSpec>,
        direction: AxisSpec,
    },
    MerminBruteforce {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        contexts: Option<[[Pauli; 3]; 4]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        parities: Option<[i8; 4]>,
    },
    Tally {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        model: Option<ModelSpec>,
        /// Settings measured jointly; the tallied value is their product.
        context: Vec<SettingSpec>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        observable: Option<ObservableSpec>,
        window: Vec<f64>,
        #[serde(default)]
        includes_a0: bool,
    },
    Measure {
        branching: BranchingSpec,
    },
    Fapp {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        branching: Option<BranchingSpec>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        state: Option<StateSpec>,
    },
    Recognize {
        prepared: StateSpec,
        candidate: StateSpec,
        detect_probability: f64,
        #[serde(default = "default_min_detected")]
        min_detected: usize,
    },
}

fn default_min_detected() -> usize {
    1
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::Chsh { .. } => "chsh",
            Experiment::Ghz { .. } => "ghz",
            Experiment::Pc { .. } => "pc",
            Experiment::MerminBruteforce { .. } => "mermin-bruteforce",
            Experiment::Tally { .. } => "tally",
            Experiment::Measure { .. } => "measure",
            Experiment::Fapp { .. } => "fapp",
            Experiment::Recognize { .. } => "recognize",
        }
    }
}

pub const KINDS: [&str; 8] = ["chsh", "ghz", "pc", "mermin-bruteforce", "tally", "measure", "fapp", "recognize"];

/// A built-in model name or an inline table model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelSpec {
    Named(String),
    Table(TableSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableSpec {
    pub name: String,
    pub settings: Vec<SettingSpec>,
    pub rows: Vec<TableRow>,
}

pub const MODELS: [(&str, &str); 3] = [
    ("singlet-reference", "lambda uniform on the sphere; Alice detects with probability |a.lambda|"),
    ("always-detect", "singlet-reference value maps with perfect detection"),
    ("ghz-contextual", "uniform local assignment; a triple registers iff its context parity holds"),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AnglesSpec {
    Preset(String),
    Degrees([f64; 4]),
}

pub const ANGLE_PRESETS: [(&str, [f64; 4]); 2] = [("chsh-optimal", [0.0, 90.0, 45.0, 315.0]), ("aligned", [0.0, 0.0, 0.0, 0.0])];

impl AnglesSpec {
    pub fn resolve(&self) -> Result<ChshSettings, String> {
        let deg = match self {
            AnglesSpec::Degrees(d) => *d,
            AnglesSpec::Preset(name) => {
                ANGLE_PRESETS.iter().find(|(n, _)| n == name).map(|(_, d)| *d).ok_or_else(|| {
                    format!("unknown angle preset `{name}`")
                })?
            }
        };
        if deg.iter().any(|d| !d.is_finite()) {
            return Err(String::from("angles must be finite"));
        }
        Ok(ChshSettings::from_degrees(deg[0], deg[1], deg[2], deg[3]))
    }
}

/// A direction: an in-plane angle in degrees, a Pauli name, or a 3-vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AxisSpec {
    Degrees(f64),
    Pauli(Pauli),
    Vector([f64; 3]),
}

impl AxisSpec {
    pub fn resolve(&self) -> Result<Axis, String> {
        match self {
            AxisSpec::Degrees(d) if d.is_finite() => Ok(Axis::in_plane_degrees(*d)),
            AxisSpec::Degrees(d) => Err(format!("angle {d} is not finite")),
            AxisSpec::Pauli(p) => Ok(Axis::from_pauli(*p)),
            AxisSpec::Vector(v) => Axis::normalized(*v).map_err(|e| e.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SettingSpec {
    pub party: Party,
    pub axis: AxisSpec,
}

impl SettingSpec {
    pub fn resolve(&self) -> Result<MeasurementSetting, String> {
        Ok(MeasurementSetting::new(self.party, self.axis.resolve()?))
    }
}

/// A complex number as a bare real or an `[re, im]` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ComplexSpec {
    Real(f64),
    Pair([f64; 2]),
}

impl ComplexSpec {
    pub fn value(self) -> C64 {
        match self {
            ComplexSpec::Real(x) => c(x, 0.0),
            ComplexSpec::Pair([re, im]) => c(re, im),
        }
    }
}

fn complex_list(v: &[ComplexSpec]) -> Vec<C64> {
    v.iter().map(|z| z.value()).collect()
}

/// An observable preset such as `"spin-along(90,0)"` (polar and azimuthal
/// angles in degrees), or an inline definition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ObservableSpec {
    Preset(String),
    Inline(InlineObservable),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineObservable {
    pub label: String,
    pub eigenvalues: Vec<f64>,
    /// One square matrix per eigenvalue, given row by row.
    pub projectors: Vec<Vec<Vec<ComplexSpec>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub no_registration_value: Option<f64>,
}

pub const OBSERVABLE_PRESETS: [&str; 2] = ["spin-along(theta,phi)", "dichotomic"];

impl ObservableSpec {
    pub fn resolve(&self) -> Result<Observable, String> {
        match self {
            ObservableSpec::Preset(name) if name == "dichotomic" => {
                let z = Observable::spin_along([0.0, 0.0, 1.0]);
                Observable::new(name.clone(), z.eigenvalues().to_vec(), z.projectors().to_vec(), DEFAULT_NO_REGISTRATION)
                    .map_err(|e| e.to_string())
            }
            ObservableSpec::Preset(name) => {
                let args = name
                    .strip_prefix("spin-along(")
                    .and_then(|r| r.strip_suffix(')'))
                    .ok_or_else(|| format!("unknown observable preset `{name}`"))?;
                let parts: Vec<f64> = args
                    .split(',')
                    .map(|p| p.trim().parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|e| format!("bad angle in `{name}`: {e}"))?;
                match parts[..] {
                    [theta, phi] if theta.is_finite() && phi.is_finite() => {
                        let obs = Observable::spin_along_angles(theta.to_radians(), phi.to_radians());
                        Observable::new(name.clone(), obs.eigenvalues().to_vec(), obs.projectors().to_vec(), DEFAULT_NO_REGISTRATION)
                            .map_err(|e| e.to_string())
                    }
                    _ => Err(format!("`{name}` needs two finite angles")),
                }
            }
            ObservableSpec::Inline(o) => {
                let projectors = o
                    .projectors
                    .iter()
                    .enumerate()
                    .map(|(k, rows)| matrix(rows).and_then(|m| Projector::new(m).map_err(|e| e.to_string())).map_err(|e| format!("projector {k}: {e}")))
                    .collect::<Result<Vec<_>, _>>()?;
                Observable::new(
                    o.label.clone(),
                    o.eigenvalues.clone(),
                    projectors,
                    o.no_registration_value.unwrap_or(DEFAULT_NO_REGISTRATION),
                )
                .map_err(|e| e.to_string())
            }
        }
    }
}

fn matrix(rows: &[Vec<ComplexSpec>]) -> Result<nalgebra::DMatrix<C64>, String> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(String::from("matrix must be square and non-empty"));
    }
    Ok(nalgebra::DMatrix::from_fn(n, n, |i, j| rows[i][j].value()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchingSpec {
    pub c: Vec<ComplexSpec>,
    pub t: Vec<ComplexSpec>,
    pub system_dim: usize,
    pub apparatus_dim: usize,
}

impl BranchingSpec {
    pub fn resolve(&self) -> Result<MeasurementBranching, String> {
        MeasurementBranching::standard(complex_list(&self.c), complex_list(&self.t), self.system_dim, self.apparatus_dim)
            .map_err(|e| e.to_string())
    }
}

/// Amplitudes, normalized on load, with optional tensor factor dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSpec {
    pub amplitudes: Vec<ComplexSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dims: Option<Vec<usize>>,
}

impl StateSpec {
    pub fn resolve(&self) -> Result<StateVector, String> {
        let amps = complex_list(&self.amplitudes);
        let out = match &self.dims {
            Some(d) => StateVector::normalized_with_dims(amps, d.clone()),
            None => StateVector::normalized(amps),
        };
        out.map_err(|e| e.to_string())
    }
}

pub fn scenario(contexts: &Option<[[Pauli; 3]; 4]>, parities: &Option<[i8; 4]>) -> Result<ParityScenario, String> {
    let std = ParityScenario::standard();
    ParityScenario::new(contexts.unwrap_or(std.contexts), parities.unwrap_or(std.parities)).map_err(|e| e.to_string())
}

pub fn table_model(spec: &TableSpec) -> Result<TableModel, String> {
    let settings = spec
        .settings
        .iter()
        .enumerate()
        .map(|(i, s)| s.resolve().map_err(|e| format!("settings[{i}]: {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    TableModel::new(spec.name.clone(), settings, spec.rows.clone()).map_err(|e| e.to_string())
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), LabError> {
        if self.trials == 0 {
            return Err(LabError::config("trials", "must be at least 1"));
        }
        Ok(())
    }

    /// Parses a config, or the config echoed by a stored report.
    pub fn from_json(text: &str) -> Result<Self, LabError> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| LabError::config("<file>", e.to_string()))?;
        let value = match value.get("config") {
            Some(inner) if value.get("tool").is_some() => inner.clone(),
            _ => value,
        };
        if let Some(kind) = value.get("experiment").and_then(|k| k.as_str()) {
            if !KINDS.contains(&kind) {
                return Err(LabError::config("experiment", format!("unknown kind `{kind}` (expected one of {})", KINDS.join(", "))));
            }
        }
        let cfg: ExperimentConfig = serde_json::from_value(value).map_err(|e| LabError::config("<file>", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, LabError> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::config(path.display().to_string(), e.to_string()))?;
        Self::from_json(&text)
    }
}
