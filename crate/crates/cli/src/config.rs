//! Config files, their defaults and the textual forms accepted for channels, states, groups and
//! resource specifications.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thermocap::channels::{constant, parse_named, ChannelChoi, UnitaryGroup};
use thermocap::kernel::ComplexMatrix;
use thermocap::localtherm::{HamiltonianSpec, SetupSpec, VListSpec};
use thermocap::quantum::{max_entangled, plus_state, DensityMatrix, ThermalContext};
use thermocap::resources::ResourceSpec;
use thermocap::thermo::CollisionStyle;
use thermocap::tolerance::Tolerances;
use thermocap::Error;

pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_PRECONDITION: i32 = 3;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self { code: EXIT_CONFIG, message: message.into() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Precondition(_) | Error::Guard(_) | Error::Sdp(_) => EXIT_PRECONDITION,
            _ => EXIT_CONFIG,
        };
        Self { code, message: e.to_string() }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub fn read_json(path: &Path) -> CliResult<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::config(format!("malformed JSON in {}: {e}", path.display())))
}

/// Settings shared by every command; the rest of a config file belongs to the command.
#[derive(Debug, Clone, Default)]
pub struct Common {
    pub seed: Option<u64>,
    pub format: Option<String>,
    pub out: Option<String>,
    pub tol: BTreeMap<String, f64>,
}

/// Splits a config object into the common keys and the command keys.
pub fn split_common(mut obj: Map<String, Value>) -> CliResult<(Common, Map<String, Value>)> {
    let mut common = Common::default();
    if let Some(v) = obj.remove("seed") {
        common.seed = Some(serde_json::from_value(v).map_err(|e| CliError::config(format!("seed: {e}")))?);
    }
    if let Some(v) = obj.remove("format") {
        common.format = Some(serde_json::from_value(v).map_err(|e| CliError::config(format!("format: {e}")))?);
    }
    if let Some(v) = obj.remove("out") {
        common.out = Some(serde_json::from_value(v).map_err(|e| CliError::config(format!("out: {e}")))?);
    }
    if let Some(v) = obj.remove("tol") {
        common.tol = serde_json::from_value(v).map_err(|e| CliError::config(format!("tol: {e}")))?;
    }
    Ok((common, obj))
}

pub fn resolve_tolerances(file: &BTreeMap<String, f64>, flags: &[String]) -> CliResult<Tolerances> {
    let mut t = Tolerances::default();
    for (k, v) in file {
        t.set(k, *v)?;
    }
    for a in flags {
        t.apply_assignment(a)?;
    }
    Ok(t)
}

/// Deserializes a command config; unknown keys are errors.
pub fn typed<T: DeserializeOwned>(obj: Map<String, Value>, what: &str) -> CliResult<T> {
    serde_json::from_value(Value::Object(obj)).map_err(|e| CliError::config(format!("{what} config: {e}")))
}

/// `@path` loads JSON from a file.
fn load_ref<T: DeserializeOwned>(s: &str) -> Option<CliResult<T>> {
    let path = s.strip_prefix('@')?;
    Some(read_json(Path::new(path)).and_then(|v| serde_json::from_value(v).map_err(|e| CliError::config(format!("{path}: {e}")))))
}

fn parse_f64s(s: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|_| CliError::config(format!("{x:?} is not a number"))))
        .collect()
}

fn field<T: std::str::FromStr>(parts: &[&str], k: usize, what: &str) -> CliResult<T> {
    parts
        .get(k)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| CliError::config(format!("{}: missing or invalid {what}", parts.join(":"))))
}

/// A channel: a name understood by the library (`dephasing:4`), `constant:p0,p1,...`,
/// `@file.json`, or an object with `kraus`, `choi` or `constant`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ChannelInput {
    Named(String),
    Kraus {
        kraus: Vec<ComplexMatrix>,
    },
    Choi {
        d_in: usize,
        d_out: usize,
        choi: ComplexMatrix,
    },
    Constant {
        constant: Vec<f64>,
    },
}

impl ChannelInput {
    pub fn build(&self) -> CliResult<ChannelChoi> {
        match self {
            Self::Named(s) => {
                if let Some(r) = load_ref::<ChannelInput>(s) {
                    return r?.build();
                }
                if let Some(p) = s.strip_prefix("constant:") {
                    let p = parse_f64s(p)?;
                    return Ok(constant(&DensityMatrix::diagonal(&p)?, p.len()));
                }
                Ok(parse_named(s)?)
            }
            Self::Kraus { kraus } => Ok(ChannelChoi::from_kraus(kraus)?),
            Self::Choi { d_in, d_out, choi } => Ok(ChannelChoi::new(*d_in, *d_out, choi.clone())?),
            Self::Constant { constant: p } => Ok(constant(&DensityMatrix::diagonal(p)?, p.len())),
        }
    }
}

/// Thermal data as populations (realized at `beta = 1`) or a Hamiltonian and `beta`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ThermalInput {
    Populations { populations: Vec<f64> },
    Hamiltonian { hamiltonian: HamiltonianSpec, beta: f64 },
}

impl ThermalInput {
    pub fn build(&self) -> CliResult<ThermalContext> {
        Ok(match self {
            Self::Populations { populations } => ThermalContext::from_populations(populations)?,
            Self::Hamiltonian { hamiltonian, beta } => ThermalContext::new(hamiltonian.build()?, *beta)?,
        })
    }
}

/// `"coherence"`, `"athermality"` (taking `thermal` from the same config), `@file.json`, or a
/// full specification object.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpecInput {
    Named(String),
    Full(ResourceSpec),
}

impl Default for SpecInput {
    fn default() -> Self {
        Self::Named("coherence".into())
    }
}

impl SpecInput {
    pub fn build(&self, thermal: Option<&ThermalContext>) -> CliResult<ResourceSpec> {
        match self {
            Self::Full(s) => Ok(s.clone()),
            Self::Named(s) => {
                if let Some(r) = load_ref::<SpecInput>(s) {
                    return r?.build(thermal);
                }
                match s.as_str() {
                    "coherence" => Ok(ResourceSpec::coherence()),
                    "athermality" => thermal
                        .map(|ctx| ResourceSpec::Athermality { ctx: ctx.clone() })
                        .ok_or_else(|| CliError::config("athermality needs a \"thermal\" entry")),
                    other => Err(CliError::config(format!("unknown resource {other:?}"))),
                }
            }
        }
    }
}

/// A state: `basis:d:k`, `plus`, `maximally-mixed:d`, `max-entangled:d`, `isotropic:d:p`,
/// `@file.json`, a population vector, or a matrix object.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StateInput {
    Named(String),
    Populations(Vec<f64>),
    Matrix(ComplexMatrix),
}

impl StateInput {
    pub fn build(&self) -> CliResult<DensityMatrix> {
        match self {
            Self::Populations(p) => Ok(DensityMatrix::diagonal(p)?),
            Self::Matrix(m) => Ok(DensityMatrix::from_matrix(m.clone())?),
            Self::Named(s) => {
                if let Some(r) = load_ref::<StateInput>(s) {
                    return r?.build();
                }
                let parts: Vec<&str> = s.split(':').collect();
                match parts[0] {
                    "plus" if parts.len() == 1 => Ok(plus_state()),
                    "basis" if parts.len() == 3 => {
                        let (d, k): (usize, usize) = (field(&parts, 1, "dimension")?, field(&parts, 2, "index")?);
                        if k >= d {
                            return Err(CliError::config(format!("{s}: index out of range")));
                        }
                        Ok(DensityMatrix::basis(d, k))
                    }
                    "maximally-mixed" if parts.len() == 2 => Ok(DensityMatrix::maximally_mixed(field(&parts, 1, "dimension")?)),
                    "max-entangled" if parts.len() == 2 => Ok(max_entangled(field(&parts, 1, "dimension")?)),
                    "isotropic" if parts.len() == 3 => {
                        let (d, p): (usize, f64) = (field(&parts, 1, "dimension")?, field(&parts, 2, "weight")?);
                        if !(0.0..=1.0).contains(&p) {
                            return Err(CliError::config(format!("{s}: weight outside [0, 1]")));
                        }
                        let n = d * d;
                        let mut m = max_entangled(d).mat.scale_real(p);
                        m += &ComplexMatrix::identity(n).scale_real((1.0 - p) / n as f64);
                        Ok(DensityMatrix::new(vec![d, d], m)?)
                    }
                    _ => Err(CliError::config(format!("unknown state {s:?}"))),
                }
            }
        }
    }
}

/// `"full-swap"`, `"partial-swap"` (angle pi/4) or a tagged object
/// `{"style": "partial-swap", "theta": 0.3}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StyleInput {
    Named(String),
    Full(CollisionStyle),
}

impl StyleInput {
    pub fn build(&self) -> CliResult<CollisionStyle> {
        match self {
            Self::Full(s) => Ok(*s),
            Self::Named(n) => match n.as_str() {
                "full-swap" => Ok(CollisionStyle::FullSwap),
                "partial-swap" => Ok(CollisionStyle::PartialSwap { theta: std::f64::consts::FRAC_PI_4 }),
                other => Err(CliError::config(format!("unknown collision style {other:?}"))),
            },
        }
    }
}

fn default_spec() -> SpecInput {
    SpecInput::default()
}
fn default_kappa_bound() -> f64 {
    1e-6
}
fn default_restarts() -> usize {
    4
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsConfig {
    pub channel: ChannelInput,
    #[serde(default = "default_spec")]
    pub spec: SpecInput,
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default)]
    pub delta: f64,
    #[serde(default = "default_kappa_bound")]
    pub kappa: f64,
    /// Largest code size searched; defaults to `floor(d_out / (1 - epsilon))`.
    #[serde(default)]
    pub m_max: Option<usize>,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    /// Thermal state for the Gibbs-preserving bound and for `"athermality"`.
    #[serde(default)]
    pub thermal: Option<ThermalInput>,
}

fn default_full_swap() -> StyleInput {
    StyleInput::Named("full-swap".into())
}
fn default_n_max() -> usize {
    3
}
fn one() -> f64 {
    1.0
}
fn two() -> usize {
    2
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermoConfig {
    pub hamiltonian: HamiltonianSpec,
    pub beta: f64,
    pub epsilon: f64,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    #[serde(default = "default_full_swap")]
    pub style: StyleInput,
    #[serde(default = "one")]
    pub rate: f64,
    /// System state before the collisions; defaults to the ground state `basis:d:0`.
    #[serde(default)]
    pub state: Option<StateInput>,
    /// Adds the channel bath size of this channel.
    #[serde(default)]
    pub channel: Option<ChannelInput>,
    #[serde(default = "two")]
    pub probes: usize,
}

fn two_dims() -> usize {
    2
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalthermConfig {
    #[serde(default = "two_dims")]
    pub d: usize,
    #[serde(default)]
    pub beta_a: f64,
    #[serde(default)]
    pub beta_b: f64,
    #[serde(default)]
    pub beta_c: f64,
    #[serde(default)]
    pub h_a: Option<HamiltonianSpec>,
    #[serde(default)]
    pub h_b: Option<HamiltonianSpec>,
    #[serde(default)]
    pub h_c: Option<HamiltonianSpec>,
    #[serde(default)]
    pub v_list: VListSpec,
    /// Defaults to `kappa_star`.
    #[serde(default)]
    pub kappa: Option<f64>,
    /// Defaults to the success threshold.
    #[serde(default)]
    pub epsilon: Option<f64>,
}

impl LocalthermConfig {
    pub fn setup_spec(&self) -> SetupSpec {
        SetupSpec {
            d: self.d,
            beta_a: self.beta_a,
            beta_b: self.beta_b,
            beta_c: self.beta_c,
            h_a: self.h_a.clone(),
            h_b: self.h_b.clone(),
            h_c: self.h_c.clone(),
            v_list: self.v_list.clone(),
        }
    }
}

/// A finite group given explicitly or as qubit phase rotations of the given order.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GroupInput {
    PhaseRotations { phase_rotations: usize },
    Full(UnitaryGroup),
}

impl GroupInput {
    pub fn build(&self) -> CliResult<UnitaryGroup> {
        Ok(match self {
            Self::PhaseRotations { phase_rotations } => UnitaryGroup::phase_rotations(*phase_rotations)?,
            Self::Full(g) => g.clone(),
        })
    }
}

fn plus() -> StateInput {
    StateInput::Named("plus".into())
}
fn phase4() -> GroupInput {
    GroupInput::PhaseRotations { phase_rotations: 4 }
}
fn one_usize() -> usize {
    1
}
fn ten_thousand() -> usize {
    10_000
}
fn tenth() -> f64 {
    0.1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AsymConfig {
    #[serde(default = "plus")]
    pub state: StateInput,
    #[serde(default = "phase4")]
    pub group: GroupInput,
    #[serde(default = "one_usize")]
    pub m: usize,
    #[serde(default = "ten_thousand")]
    pub trials: usize,
    #[serde(default = "tenth")]
    pub kappa: f64,
}

fn fef_restarts() -> usize {
    thermocap::localtherm::FEF_RESTARTS
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FefConfig {
    pub state: StateInput,
    #[serde(default = "fef_restarts")]
    pub restarts: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    Kappa,
    Epsilon,
    Delta,
}

/// `kappa` sweeps the local thermalization demo; `epsilon` and `delta` sweep the bounds.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub parameter: SweepParameter,
    /// Grid; defaults to `0, 0.2, ... , kappa_star` for kappa, `0, 0.1, ..., 0.5` for epsilon and
    /// `0, 0.05, 0.1, 0.2` for delta.
    #[serde(default)]
    pub values: Option<Vec<f64>>,
    #[serde(default)]
    pub localtherm: Option<LocalthermConfig>,
    #[serde(default)]
    pub bounds: Option<BoundsConfig>,
}

/// Sets `key` in a JSON object when the flag was given.
pub fn set<T: Serialize>(obj: &mut Map<String, Value>, key: &str, v: Option<T>) {
    if let Some(v) = v {
        obj.insert(key.to_string(), serde_json::to_value(v).expect("serializable flag"));
    }
}

/// Nested object under `key`, created on demand.
pub fn nested<'a>(obj: &'a mut Map<String, Value>, key: &str) -> CliResult<&'a mut Map<String, Value>> {
    let entry = obj.entry(key.to_string()).or_insert_with(|| Value::Object(Map::new()));
    entry.as_object_mut().ok_or_else(|| CliError::config(format!("{key} must be an object")))
}

pub fn parse_list(s: &str) -> CliResult<Vec<f64>> {
    parse_f64s(s)
}
