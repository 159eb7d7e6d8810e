//! Sweep configuration files, schema version 1.

use std::path::Path;

use dephasing::hopfield::HopfieldParams;
use dephasing::noise::NoiseKind;
use dephasing::oracle::{HopfieldTarget, OracleSettings};
use dephasing::rabi::{RabiParams, StateLabel, Target, Transition};
use dephasing::GaugeMode;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bundled;

pub const SCHEMA_VERSION: u32 = 1;

/// Problem with a configuration file; always maps to exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    Rabi,
    Hopfield,
    Oscillator,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub from: f64,
    pub to: f64,
    pub n: usize,
    #[serde(default)]
    pub scale: Scale,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridItem {
    Value(f64),
    Range(Range),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    One(Range),
    Many(Vec<GridItem>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelTarget {
    Qubit,
    Cavity,
    Exciton,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Channel {
    pub target: ChannelTarget,
    #[serde(default = "one")]
    pub gamma0: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    pub target: ChannelTarget,
    /// Rabi transition such as `(1-,0)`.
    #[serde(default)]
    pub transition: Option<String>,
    /// Hopfield polariton branch, 1 (lower) or 2 (upper).
    #[serde(default)]
    pub branch: Option<usize>,
    #[serde(default)]
    pub s0: Option<f64>,
    #[serde(default)]
    pub n_traj: Option<usize>,
    #[serde(default)]
    pub t_final: Option<f64>,
    #[serde(default)]
    pub dt: Option<f64>,
    /// Correlation time of the Ornstein-Uhlenbeck noise; 0 selects white noise.
    #[serde(default)]
    pub tau: Option<f64>,
    #[serde(default)]
    pub levels: Option<usize>,
    #[serde(default)]
    pub record_every: Option<usize>,
    #[serde(default)]
    pub fit_from: Option<f64>,
    /// Accepted relative disagreement of the three rates.
    #[serde(default = "oracle_tolerance")]
    pub tolerance: f64,
}

fn oracle_tolerance() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OscillatorConfig {
    pub omega0: f64,
    pub gamma0: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    pub csv: Option<String>,
    pub provenance: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub schema_version: u32,
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub model: Model,
    #[serde(default)]
    pub modes: Vec<GaugeMode>,
    #[serde(default)]
    pub channels: Vec<Channel>,
    #[serde(default)]
    pub transitions: Vec<String>,
    #[serde(default)]
    pub grid: Option<Grid>,
    #[serde(default = "zero_detuning")]
    pub detunings: Vec<f64>,
    #[serde(default)]
    pub cutoff: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub oracle: Option<OracleConfig>,
    #[serde(default)]
    pub oscillator: Option<OscillatorConfig>,
    #[serde(default)]
    pub outputs: Outputs,
}

fn zero_detuning() -> Vec<f64> {
    vec![0.0]
}

/// A config that passed validation, with its grid expanded.
#[derive(Debug, Clone)]
pub struct Plan {
    pub config: Config,
    /// SHA-256 of the canonical (key-sorted, compact) JSON form of the file.
    pub config_hash: String,
    pub seed: u64,
    pub couplings: Vec<f64>,
    pub kind: PlanKind,
}

#[derive(Debug, Clone)]
pub enum PlanKind {
    Rabi {
        target: Target,
        gamma0: f64,
        transitions: Vec<Transition>,
        modes: Vec<GaugeMode>,
        /// Grid points, detuning-major.
        grid: Vec<RabiParams>,
        oracle: Option<(Target, Transition, OracleSettings, f64)>,
    },
    Hopfield {
        gamma0_c: f64,
        gamma0_x: f64,
        modes: Vec<GaugeMode>,
        grid: Vec<HopfieldParams>,
        oracle: Option<(HopfieldTarget, usize, OracleSettings, f64)>,
    },
    Oscillator {
        omega0: f64,
        gamma0: f64,
    },
}

impl Plan {
    pub fn csv_name(&self) -> String {
        self.config
            .outputs
            .csv
            .clone()
            .unwrap_or_else(|| format!("{}.csv", self.config.name))
    }

    pub fn provenance_name(&self) -> String {
        self.config
            .outputs
            .provenance
            .clone()
            .unwrap_or_else(|| format!("{}.provenance.json", self.config.name))
    }

    /// Configured detuning of grid point `index` (grids are detuning-major).
    pub fn nominal_detuning(&self, index: usize) -> f64 {
        self.config.detunings[index / self.couplings.len().max(1)]
    }

    pub fn verify_name(&self) -> String {
        format!("{}.verify.json", self.config.name)
    }
}

/// Reads `source` as a file path, falling back to the bundled config of that name.
pub fn load(source: &str) -> Result<(String, String), ConfigError> {
    let path = Path::new(source);
    if path.exists() {
        return std::fs::read_to_string(path)
            .map(|text| (source.to_string(), text))
            .map_err(|e| ConfigError(format!("cannot read {source}: {e}")));
    }
    match bundled::find(source) {
        Some(text) => Ok((format!("bundled:{source}"), text.to_string())),
        None => invalid(format!("{source}: no such file or bundled config")),
    }
}

pub fn parse(text: &str, seed_override: Option<u64>) -> Result<Plan, ConfigError> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| ConfigError(format!("malformed JSON: {e}")))?;
    let canonical = serde_json::to_string(&value).expect("a parsed value serialises");
    let config: Config =
        serde_json::from_value(value).map_err(|e| ConfigError(format!("invalid config: {e}")))?;
    let config_hash = format!("{:x}", Sha256::digest(canonical.as_bytes()));
    validate(config, config_hash, seed_override)
}

fn finite(name: &str, v: f64) -> Result<f64, ConfigError> {
    if v.is_finite() {
        Ok(v)
    } else {
        invalid(format!("{name} must be finite, got {v}"))
    }
}

fn expand_range(r: &Range) -> Result<Vec<f64>, ConfigError> {
    finite("grid.from", r.from)?;
    finite("grid.to", r.to)?;
    if r.to < r.from {
        return invalid(format!(
            "grid range runs backwards: from {} to {}",
            r.from, r.to
        ));
    }
    if r.n == 1 {
        return Ok(vec![r.from]);
    }
    let last = (r.n.max(1) - 1) as f64;
    match r.scale {
        Scale::Linear => Ok((0..r.n)
            .map(|k| {
                if k + 1 == r.n {
                    r.to
                } else {
                    r.from + (r.to - r.from) * k as f64 / last
                }
            })
            .collect()),
        Scale::Log => {
            if !(r.from > 0.0) {
                return invalid("log-scaled grid must start above zero");
            }
            let (a, b) = (r.from.ln(), r.to.ln());
            Ok((0..r.n)
                .map(|k| {
                    if k + 1 == r.n {
                        r.to
                    } else {
                        (a + (b - a) * k as f64 / last).exp()
                    }
                })
                .collect())
        }
    }
}

/// Sorted coupling values, with values equal up to rounding merged.
pub fn expand_grid(grid: &Grid) -> Result<Vec<f64>, ConfigError> {
    let mut values = Vec::new();
    match grid {
        Grid::One(r) => values.extend(expand_range(r)?),
        Grid::Many(items) => {
            for item in items {
                match item {
                    GridItem::Value(v) => values.push(finite("grid value", *v)?),
                    GridItem::Range(r) => values.extend(expand_range(r)?),
                }
            }
        }
    }
    if let Some(v) = values.iter().find(|v| **v < 0.0) {
        return invalid(format!("couplings must be non-negative, got {v}"));
    }
    values.sort_by(f64::total_cmp);
    // Log ranges land within rounding of literal values such as 0.01.
    values.dedup_by(|b, a| (*b - *a).abs() <= 1e-12 * a.abs().max(b.abs()));
    Ok(values)
}

pub fn parse_transition(s: &str) -> Result<Transition, ConfigError> {
    let inner = s
        .trim()
        .strip_prefix('(')
        .and_then(|t| t.strip_suffix(')'))
        .ok_or_else(|| ConfigError(format!("transition {s:?} is not of the form (j,k)")))?;
    let (j, k) = inner
        .split_once(',')
        .ok_or_else(|| ConfigError(format!("transition {s:?} is not of the form (j,k)")))?;
    let label = |x: &str| {
        x.trim()
            .parse::<StateLabel>()
            .map_err(|_| ConfigError(format!("unknown state label {x:?} in {s:?}")))
    };
    let t = (label(j)?, label(k)?);
    if t.0 == t.1 {
        return invalid(format!("transition {s:?} joins a state to itself"));
    }
    Ok(t)
}

fn oracle_settings(o: &OracleConfig, seed: u64) -> Result<OracleSettings, ConfigError> {
    let d = OracleSettings::default();
    let noise = match o.tau {
        None => d.noise,
        Some(0.0) => NoiseKind::White,
        Some(t) if t > 0.0 && t.is_finite() => NoiseKind::OrnsteinUhlenbeck { tau: t },
        Some(t) => return invalid(format!("oracle.tau must be non-negative, got {t}")),
    };
    let s = OracleSettings {
        s0: o.s0.unwrap_or(d.s0),
        n_traj: o.n_traj.unwrap_or(d.n_traj),
        t_final: o.t_final.unwrap_or(d.t_final),
        dt: o.dt.unwrap_or(d.dt),
        noise,
        n_levels: o.levels.unwrap_or(d.n_levels),
        record_every: o.record_every.unwrap_or(d.record_every),
        fit_from: o.fit_from.unwrap_or(d.fit_from),
        fit_tolerance: d.fit_tolerance,
        seed,
    };
    if !(s.s0 > 0.0) || !s.s0.is_finite() {
        return invalid("oracle.s0 must be positive");
    }
    if !(s.dt > 0.0) || !(s.t_final > s.dt) || !(s.fit_from >= 0.0) || s.fit_from >= s.t_final {
        return invalid("oracle needs 0 < dt < t_final and 0 <= fit_from < t_final");
    }
    if s.n_traj < 100 || s.n_levels < 2 || s.record_every == 0 {
        return invalid("oracle needs n_traj >= 100, levels >= 2 and record_every >= 1");
    }
    if !(o.tolerance > 0.0) {
        return invalid("oracle.tolerance must be positive");
    }
    Ok(s)
}

fn validate(
    config: Config,
    config_hash: String,
    seed_override: Option<u64>,
) -> Result<Plan, ConfigError> {
    if config.schema_version != SCHEMA_VERSION {
        return invalid(format!(
            "unsupported schema_version {} (this build reads {SCHEMA_VERSION})",
            config.schema_version
        ));
    }
    if config.name.is_empty()
        || !config
            .name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
    {
        return invalid("name must be non-empty and use only [A-Za-z0-9_-]");
    }
    let seed = seed_override.unwrap_or(config.seed);
    for d in &config.detunings {
        finite("detuning", *d)?;
        if *d <= -1.0 {
            return invalid(format!("detuning {d} leaves a non-positive bare frequency"));
        }
    }
    if let Some(c) = config.cutoff {
        if c < 2 {
            return invalid(format!("cutoff must be at least 2, got {c}"));
        }
    }
    for ch in &config.channels {
        if !(ch.gamma0 >= 0.0) || !ch.gamma0.is_finite() {
            return invalid(format!(
                "gamma0 must be finite and non-negative, got {}",
                ch.gamma0
            ));
        }
    }
    let mut detunings = config.detunings.clone();
    detunings.sort_by(f64::total_cmp);
    detunings.dedup();
    if detunings.windows(2).any(|w| w[1] - w[0] < 1e-12) {
        return invalid("detunings must differ by at least 1e-12");
    }

    let needs_grid = config.model != Model::Oscillator;
    let couplings = match (&config.grid, needs_grid) {
        (Some(g), true) => expand_grid(g)?,
        (None, true) => return invalid("grid is required"),
        (_, false) => Vec::new(),
    };
    if needs_grid && (couplings.is_empty() || detunings.is_empty()) {
        return invalid("sweep grid is empty");
    }

    let kind = match config.model {
        Model::Rabi => {
            let [ch] = config.channels.as_slice() else {
                return invalid("a rabi config takes exactly one channel");
            };
            let target = match ch.target {
                ChannelTarget::Qubit => Target::Qubit,
                ChannelTarget::Cavity => Target::Cavity,
                ChannelTarget::Exciton => return invalid("rabi channels target qubit or cavity"),
            };
            if config.modes.is_empty() {
                return invalid("modes must not be empty");
            }
            let transitions = if config.transitions.is_empty() {
                vec![
                    (StateLabel::Minus(1), StateLabel::Ground),
                    (StateLabel::Plus(1), StateLabel::Ground),
                ]
            } else {
                config
                    .transitions
                    .iter()
                    .map(|t| parse_transition(t))
                    .collect::<Result<_, _>>()?
            };
            let mut grid = Vec::new();
            for &d in &detunings {
                for &eta in &couplings {
                    let mut p = RabiParams::resonant_with_detuning(d, eta)
                        .map_err(|e| ConfigError(e.to_string()))?;
                    if let Some(c) = config.cutoff {
                        p = p.with_cutoff(c).map_err(|e| ConfigError(e.to_string()))?;
                    }
                    grid.push(p);
                }
            }
            let oracle = match &config.oracle {
                None => None,
                Some(o) => {
                    let t = match o.target {
                        ChannelTarget::Qubit => Target::Qubit,
                        ChannelTarget::Cavity => Target::Cavity,
                        ChannelTarget::Exciton => {
                            return invalid("rabi oracle targets qubit or cavity")
                        }
                    };
                    let transition = parse_transition(o.transition.as_deref().unwrap_or("(1-,0)"))?;
                    if o.branch.is_some() {
                        return invalid("oracle.branch applies to hopfield configs");
                    }
                    Some((t, transition, oracle_settings(o, seed)?, o.tolerance))
                }
            };
            PlanKind::Rabi {
                target,
                gamma0: ch.gamma0,
                transitions,
                modes: config.modes.clone(),
                grid,
                oracle,
            }
        }
        Model::Hopfield => {
            let (mut gamma0_c, mut gamma0_x) = (None, None);
            for ch in &config.channels {
                let slot = match ch.target {
                    ChannelTarget::Cavity => &mut gamma0_c,
                    ChannelTarget::Exciton => &mut gamma0_x,
                    ChannelTarget::Qubit => {
                        return invalid("hopfield channels target cavity or exciton")
                    }
                };
                if slot.replace(ch.gamma0).is_some() {
                    return invalid("each hopfield channel target may appear once");
                }
            }
            if !config.transitions.is_empty() {
                return invalid("transitions apply to rabi configs");
            }
            let mut grid = Vec::new();
            for &d in &detunings {
                for &lambda in &couplings {
                    let mut p = HopfieldParams::resonant_with_detuning(d, lambda)
                        .map_err(|e| ConfigError(e.to_string()))?;
                    if let Some(c) = config.cutoff {
                        p = p.with_cutoff(c).map_err(|e| ConfigError(e.to_string()))?;
                    }
                    grid.push(p);
                }
            }
            let oracle = match &config.oracle {
                None => None,
                Some(o) => {
                    let t = match o.target {
                        ChannelTarget::Cavity => HopfieldTarget::Cavity,
                        ChannelTarget::Exciton => HopfieldTarget::Exciton,
                        ChannelTarget::Qubit => {
                            return invalid("hopfield oracle targets cavity or exciton")
                        }
                    };
                    let branch = o.branch.unwrap_or(1);
                    if !(1..=2).contains(&branch) || o.transition.is_some() {
                        return invalid("hopfield oracle takes branch 1 or 2 and no transition");
                    }
                    Some((t, branch - 1, oracle_settings(o, seed)?, o.tolerance))
                }
            };
            PlanKind::Hopfield {
                gamma0_c: gamma0_c.unwrap_or(0.0),
                gamma0_x: gamma0_x.unwrap_or(0.0),
                modes: config.modes.clone(),
                grid,
                oracle,
            }
        }
        Model::Oscillator => {
            let Some(o) = &config.oscillator else {
                return invalid("an oscillator config needs an \"oscillator\" block");
            };
            if !(o.omega0 > 0.0)
                || !(o.gamma0 >= 0.0)
                || !o.omega0.is_finite()
                || !o.gamma0.is_finite()
            {
                return invalid("oscillator needs omega0 > 0 and gamma0 >= 0");
            }
            PlanKind::Oscillator {
                omega0: o.omega0,
                gamma0: o.gamma0,
            }
        }
    };
    Ok(Plan {
        config: Config {
            detunings,
            ..config
        },
        config_hash,
        seed,
        couplings,
        kind,
    })
}
