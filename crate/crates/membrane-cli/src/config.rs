//! Run configuration: a TOML document with nested sections, strictly
//! schema-validated before anything runs.
//!
//! Top-level keys: `n`, `directions`, `output_dir`, `seed`, and the
//! `[shape]`, `[family]`, `[solver]`, `[output]` tables. Unknown keys are
//! rejected everywhere, and all physical parameters are range-checked so
//! that an invalid file fails fast with a config error (exit code 2)
//! rather than mid-run.

use std::fmt;
use std::path::PathBuf;

use membrane_core::evolution::{Direction, SolverParams};
use membrane_core::grid;
use serde::Deserialize;

/// A configuration problem: malformed syntax, unknown keys, or parameter
/// values outside their admissible ranges. Maps to exit code 2.
#[derive(Debug, Clone)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DirectionName {
    Forward,
    Backward,
}

impl DirectionName {
    pub fn to_direction(self) -> Direction {
        match self {
            DirectionName::Forward => Direction::Forward,
            DirectionName::Backward => Direction::Backward,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DirectionName::Forward => "forward",
            DirectionName::Backward => "backward",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapeConfig {
    pub m: usize,
    pub d: Vec<u32>,
}

/// Mirror of the solver parameters with per-field defaults, so configs
/// only need to mention what they change.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub cfl: f64,
    pub t_end: f64,
    pub indicator_floor: f64,
    pub radius_floor: f64,
    pub dt_floor: f64,
    pub record_every: usize,
    pub max_steps: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let p = SolverParams::default();
        Self {
            cfl: p.cfl,
            t_end: p.t_end,
            indicator_floor: p.indicator_floor,
            radius_floor: p.radius_floor,
            dt_floor: p.dt_floor,
            record_every: p.record_every,
            max_steps: p.max_steps,
        }
    }
}

impl SolverConfig {
    pub fn to_params(&self) -> SolverParams {
        SolverParams {
            cfl: self.cfl,
            t_end: self.t_end,
            indicator_floor: self.indicator_floor,
            radius_floor: self.radius_floor,
            dt_floor: self.dt_floor,
            record_every: self.record_every,
            max_steps: self.max_steps,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SnapshotPolicy {
    None,
    #[default]
    Final,
    All,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub snapshots: SnapshotPolicy,
}

/// One deterministic Fourier perturbation: `field += amplitude *
/// cos(mode * y + phase)` applied to the named target field.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeConfig {
    /// Field selector: `z1..zm`, `r1..rk`, `vz1..vzm`, `vr1..vrk`.
    pub target: String,
    pub mode: u32,
    pub amplitude: f64,
    #[serde(default)]
    pub phase: f64,
}

/// Seeded random perturbations: `count` draws of (target, mode, phase),
/// each applied with the given amplitude. Reproducible from the run seed.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomConfig {
    pub count: usize,
    pub amplitude: f64,
    #[serde(default = "default_max_mode")]
    pub max_mode: u32,
}

fn default_max_mode() -> u32 {
    4
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CliffordParams {
    pub rho0: f64,
    pub a0: f64,
    #[serde(default)]
    pub rho_dot0: f64,
    #[serde(default)]
    pub a_dot0: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TorusParams {
    #[serde(rename = "R0")]
    pub r0: f64,
    pub b: f64,
}

#[derive(Debug, Clone)]
pub struct PerturbedParams {
    pub base: Box<FamilyConfig>,
    pub modes: Vec<ModeConfig>,
    pub random: Option<RandomConfig>,
}

#[derive(Debug, Clone)]
pub enum FamilyConfig {
    Clifford(CliffordParams),
    TorusOfRevolution(TorusParams),
    Perturbed(PerturbedParams),
}

impl FamilyConfig {
    pub fn name(&self) -> &'static str {
        match self {
            FamilyConfig::Clifford(_) => "clifford",
            FamilyConfig::TorusOfRevolution(_) => "torus_of_revolution",
            FamilyConfig::Perturbed(_) => "perturbed",
        }
    }

    /// The (m, d) shape this family generates.
    pub fn implied_shape(&self) -> (usize, Vec<u32>) {
        match self {
            FamilyConfig::Clifford(_) => (2, vec![1]),
            FamilyConfig::TorusOfRevolution(_) => (1, vec![1]),
            FamilyConfig::Perturbed(p) => p.base.implied_shape(),
        }
    }
}

/// Raw deserialization shape of the whole file; the family table is kept
/// as a raw value so each variant can be schema-checked individually.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    n: usize,
    directions: Option<Vec<DirectionName>>,
    output_dir: Option<String>,
    seed: Option<u64>,
    shape: Option<ShapeConfig>,
    family: toml::Value,
    solver: Option<SolverConfig>,
    output: Option<OutputConfig>,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub n: usize,
    pub directions: Vec<DirectionName>,
    pub output_dir: Option<PathBuf>,
    pub seed: u64,
    pub family: FamilyConfig,
    pub solver: SolverConfig,
    pub output: OutputConfig,
}

fn parse_family(value: &toml::Value, allow_perturbed: bool) -> Result<FamilyConfig, ConfigError> {
    let table = match value.as_table() {
        Some(t) => t,
        None => return err("[family] must be a table"),
    };
    let name = match table.get("name").and_then(|v| v.as_str()) {
        Some(n) => n.to_owned(),
        None => return err("[family] needs a string key `name`"),
    };
    let mut params = table.clone();
    params.remove("name");

    match name.as_str() {
        "clifford" => {
            let p: CliffordParams = toml::Value::Table(params)
                .try_into()
                .map_err(|e| ConfigError(format!("family clifford: {e}")))?;
            if !(p.rho0 > 0.0) || !(p.a0 > 0.0) {
                return err(format!(
                    "family clifford: radii must be positive (rho0 = {}, a0 = {})",
                    p.rho0, p.a0
                ));
            }
            let v2 = p.rho_dot0 * p.rho_dot0 + p.a_dot0 * p.a_dot0;
            if v2 >= 1.0 {
                return err(format!(
                    "family clifford: initial speed violates the time-like bound (v^2 = {v2})"
                ));
            }
            Ok(FamilyConfig::Clifford(p))
        }
        "torus_of_revolution" => {
            let p: TorusParams = toml::Value::Table(params)
                .try_into()
                .map_err(|e| ConfigError(format!("family torus_of_revolution: {e}")))?;
            if !(p.r0 > 0.0) {
                return err(format!("family torus_of_revolution: R0 must be positive, got {}", p.r0));
            }
            if p.b == 0.0 || !p.b.is_finite() {
                return err("family torus_of_revolution: b must be nonzero (the generatrix degenerates otherwise)");
            }
            if p.r0 - p.b.abs() <= 0.0 {
                return err(format!(
                    "family torus_of_revolution: |b| must stay below R0 to keep r > 0 (R0 = {}, b = {})",
                    p.r0, p.b
                ));
            }
            Ok(FamilyConfig::TorusOfRevolution(p))
        }
        "perturbed" => {
            if !allow_perturbed {
                return err("family perturbed: base family cannot itself be perturbed");
            }
            #[derive(Deserialize)]
            #[serde(deny_unknown_fields)]
            struct PerturbedRaw {
                base: toml::Value,
                #[serde(default)]
                modes: Vec<ModeConfig>,
                random: Option<RandomConfig>,
            }
            let raw: PerturbedRaw = toml::Value::Table(params)
                .try_into()
                .map_err(|e| ConfigError(format!("family perturbed: {e}")))?;
            let base = parse_family(&raw.base, false)?;
            for m in &raw.modes {
                if m.mode == 0 {
                    return err("family perturbed: mode numbers start at 1");
                }
                if !m.amplitude.is_finite() || !m.phase.is_finite() {
                    return err("family perturbed: non-finite mode parameters");
                }
            }
            if let Some(r) = &raw.random {
                if r.count == 0 || r.max_mode == 0 {
                    return err("family perturbed: random.count and random.max_mode must be positive");
                }
                if !(r.amplitude.is_finite() && r.amplitude >= 0.0) {
                    return err("family perturbed: random.amplitude must be a finite non-negative number");
                }
            }
            Ok(FamilyConfig::Perturbed(PerturbedParams {
                base: Box::new(base),
                modes: raw.modes,
                random: raw.random,
            }))
        }
        other => err(format!(
            "unknown family {other:?} (expected clifford, torus_of_revolution, or perturbed)"
        )),
    }
}

fn validate_solver(s: &SolverConfig) -> Result<(), ConfigError> {
    s.to_params()
        .validate()
        .map_err(|e| ConfigError(format!("[solver]: {e}")))
}

/// Parses and validates a full configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let raw: RawConfig =
        toml::from_str(text).map_err(|e| ConfigError(format!("parse error: {e}")))?;

    if !grid::valid_size(raw.n) {
        return err(format!(
            "n = {} is not a valid grid size (even, at least {})",
            raw.n,
            grid::MIN_GRID
        ));
    }
    let directions = raw
        .directions
        .unwrap_or_else(|| vec![DirectionName::Forward, DirectionName::Backward]);
    if directions.is_empty() {
        return err("directions must name at least one of \"forward\", \"backward\"");
    }
    if directions.len() > 2
        || (directions.len() == 2 && directions[0] == directions[1])
    {
        return err("directions may list each direction at most once");
    }

    let family = parse_family(&raw.family, true)?;
    if let Some(shape) = &raw.shape {
        let (m, d) = family.implied_shape();
        if shape.m != m || shape.d != d {
            return err(format!(
                "[shape] (m = {}, d = {:?}) contradicts family {:?} which generates (m = {}, d = {:?})",
                shape.m,
                shape.d,
                family.name(),
                m,
                d
            ));
        }
    }

    let solver = raw.solver.unwrap_or_default();
    validate_solver(&solver)?;

    Ok(RunConfig {
        n: raw.n,
        directions,
        output_dir: raw.output_dir.map(PathBuf::from),
        seed: raw.seed.unwrap_or(0),
        family,
        solver,
        output: raw.output.unwrap_or_default(),
    })
}
