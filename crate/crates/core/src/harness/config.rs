//! JSON experiment configuration.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::QosTargets;
use crate::learner::{Algorithm, NoiseModel, SimulationSpec, StepsizeSchedule, SwitchProbabilities};
use crate::oracle::OdeOptions;
use crate::scenarios::{power, sensor, task, ScenarioInstance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    PowerControl,
    TaskAllocation,
    SensorNetwork,
}

impl ScenarioKind {
    fn of(instance: &ScenarioInstance) -> Self {
        match instance {
            ScenarioInstance::PowerControl(_) => ScenarioKind::PowerControl,
            ScenarioInstance::TaskAllocation(_) => ScenarioKind::TaskAllocation,
            ScenarioInstance::SensorNetwork(_) => ScenarioKind::SensorNetwork,
        }
    }

    fn default_bound(self) -> f64 {
        match self {
            ScenarioKind::TaskAllocation => task::DEFAULT_EFFORT_BOUND,
            _ => 1.0,
        }
    }
}

/// Which sampled instances a realization accepts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceFilter {
    Any,
    /// The drawn targets admit an interior equilibrium.
    Feasible,
    /// Every all-in-one-game assignment is infeasible while every balanced
    /// split is feasible.
    SplitOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_players: Option<usize>,
    #[serde(default = "one")]
    pub n_games: usize,
    /// Uniform action bound; ignored when `bounds` is given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_floor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge_prob: Option<f64>,
    /// A pinned instance shared by every realization.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance: Option<ScenarioInstance>,
    #[serde(default = "any_filter")]
    pub filter: InstanceFilter,
    #[serde(default = "default_max_draws")]
    pub max_draws: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Lambda {
    Uniform(f64),
    PerPlayer(Vec<f64>),
}

impl Lambda {
    pub fn resolve(&self, n_players: usize) -> Vec<f64> {
        match self {
            Lambda::Uniform(l) => vec![*l; n_players],
            Lambda::PerPlayer(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetsConfig {
    #[serde(default = "default_lambda")]
    pub lambda: Lambda,
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// Fixed `λ̄`, skipping the randomization.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pinned: Option<Vec<f64>>,
}

impl Default for TargetsConfig {
    fn default() -> Self {
        Self {
            lambda: default_lambda(),
            delta: default_delta(),
            pinned: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmConfig {
    pub kind: Algorithm,
    #[serde(default = "default_rho")]
    pub rho: f64,
    #[serde(default = "default_phi")]
    pub phi: f64,
}

impl Default for AlgorithmConfig {
    fn default() -> Self {
        Self {
            kind: Algorithm::Top,
            rho: default_rho(),
            phi: default_phi(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_horizon")]
    pub horizon: u64,
    #[serde(default = "default_realizations")]
    pub realizations: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_stride")]
    pub record_stride: u64,
    /// Worker threads; `None` uses rayon's default pool.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            horizon: default_horizon(),
            realizations: default_realizations(),
            seed: 0,
            record_stride: default_stride(),
            threads: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_out_dir")]
    pub dir: PathBuf,
    /// Write the per-round trace file as well as the aggregates.
    #[serde(default = "yes")]
    pub traces: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: default_out_dir(),
            traces: true,
        }
    }
}

/// Per-realization pass conditions for `check`; unset conditions are not
/// evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckConfig {
    /// `max_n |x̄_n − x*_n|` over the tail window.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action_tolerance: Option<f64>,
    /// `max_n |ū_n − λ̄_n|` over the tail window.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reward_tolerance: Option<f64>,
    /// `ū_n ≥ λ_n − margin` for every player.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reward_floor_margin: Option<f64>,
    /// Tail average of `min_n u_n` at least this.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_reward_floor: Option<f64>,
    /// No reset in this final fraction of the horizon.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quiet_resets: Option<f64>,
    /// No switch in this final fraction of the horizon.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quiet_switches: Option<f64>,
    /// Fraction of realizations each condition must hold in.
    #[serde(default = "default_pass_fraction")]
    pub pass_fraction: f64,
    #[serde(default)]
    pub ode: OdeOptions,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self {
            action_tolerance: None,
            reward_tolerance: None,
            reward_floor_margin: None,
            min_reward_floor: None,
            quiet_resets: None,
            quiet_switches: None,
            pass_fraction: default_pass_fraction(),
            ode: OdeOptions::default(),
        }
    }
}

/// Tug-of-War sign sweep used by `validate`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateConfig {
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "default_fd_step")]
    pub step: f64,
    #[serde(default = "default_cross_tolerance")]
    pub cross_tolerance: f64,
}

impl Default for ValidateConfig {
    fn default() -> Self {
        Self {
            points: default_points(),
            step: default_fd_step(),
            cross_tolerance: default_cross_tolerance(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: ScenarioConfig,
    #[serde(default)]
    pub algorithm: AlgorithmConfig,
    #[serde(default)]
    pub schedule: StepsizeSchedule,
    #[serde(default = "default_noise")]
    pub noise: NoiseModel,
    #[serde(default)]
    pub targets: TargetsConfig,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub check: CheckConfig,
    #[serde(default)]
    pub validate: ValidateConfig,
}

fn one() -> usize {
    1
}
fn yes() -> bool {
    true
}
fn any_filter() -> InstanceFilter {
    InstanceFilter::Any
}
fn default_max_draws() -> usize {
    1000
}
fn default_lambda() -> Lambda {
    Lambda::Uniform(0.1)
}
fn default_delta() -> f64 {
    0.01
}
fn default_rho() -> f64 {
    0.2
}
fn default_phi() -> f64 {
    0.1
}
fn default_horizon() -> u64 {
    100_000
}
fn default_realizations() -> usize {
    100
}
fn default_stride() -> u64 {
    100
}
fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_pass_fraction() -> f64 {
    0.95
}
fn default_points() -> usize {
    100
}
fn default_fd_step() -> f64 {
    crate::game::DEFAULT_FD_STEP
}
fn default_cross_tolerance() -> f64 {
    crate::game::DEFAULT_CROSS_TOLERANCE
}
fn default_noise() -> NoiseModel {
    NoiseModel::Gaussian { sigma: 0.1 }
}

fn config_err(field: &str, reason: impl std::fmt::Display) -> Error {
    Error::Config(format!("{field}: {reason}"))
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(config_err(field, format_args!("must be > 0, got {v}")))
    }
}

fn fraction(field: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(config_err(field, format_args!("must lie in [0, 1], got {v}")))
    }
}

/// Parses and validates a config, resolving every family-dependent default.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let mut config: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if path == "." {
            Error::Config(inner.to_string())
        } else {
            Error::Config(format!("{path}: {inner}"))
        }
    })?;
    config.resolve()?;
    Ok(config)
}

impl ExperimentConfig {
    pub fn n_players(&self) -> usize {
        self.scenario
            .n_players
            .expect("resolved configs always carry n_players")
    }

    fn resolve(&mut self) -> Result<()> {
        let s = &mut self.scenario;
        if let Some(instance) = &s.instance {
            if ScenarioKind::of(instance) != s.kind {
                return Err(config_err("scenario.instance", "kind differs from scenario.kind"));
            }
            let n = instance.n_players();
            match s.n_players {
                Some(m) if m != n => {
                    return Err(config_err(
                        "scenario.n_players",
                        format_args!("{m} but the pinned instance has {n} players"),
                    ))
                }
                _ => s.n_players = Some(n),
            }
        }
        let n = match s.n_players {
            Some(n) if n >= 1 => n,
            Some(_) => return Err(config_err("scenario.n_players", "must be >= 1")),
            None => return Err(config_err("scenario.n_players", "required without a pinned instance")),
        };
        if s.n_games == 0 {
            return Err(config_err("scenario.n_games", "must be >= 1"));
        }
        if s.kind == ScenarioKind::SensorNetwork {
            if s.n_games != 1 {
                return Err(config_err("scenario.n_games", "sensor activation is a single game"));
            }
            if n > sensor::MAX_EXACT_SENSORS {
                return Err(config_err(
                    "scenario.n_players",
                    format_args!("at most {} sensors, got {n}", sensor::MAX_EXACT_SENSORS),
                ));
            }
        }
        match &s.bounds {
            Some(b) if b.len() != n => {
                return Err(config_err("scenario.bounds", format_args!("has {} entries, expected {n}", b.len())))
            }
            Some(b) => {
                for (i, v) in b.iter().enumerate() {
                    positive(&format!("scenario.bounds[{i}]"), *v)?;
                }
            }
            None => {
                let bound = *s.bound.get_or_insert(s.kind.default_bound());
                positive("scenario.bound", bound)?;
            }
        }
        match s.kind {
            ScenarioKind::PowerControl => {
                if s.instance.is_none() {
                    positive("scenario.noise_floor", *s.noise_floor.get_or_insert(power::DEFAULT_NOISE_FLOOR))?;
                } else if s.noise_floor.is_some() {
                    return Err(config_err("scenario.noise_floor", "comes from the pinned instance"));
                }
            }
            _ if s.noise_floor.is_some() => {
                return Err(config_err("scenario.noise_floor", "only applies to power_control"));
            }
            _ => {}
        }
        match s.kind {
            ScenarioKind::SensorNetwork if s.instance.is_none() => {
                fraction("scenario.edge_prob", *s.edge_prob.get_or_insert(0.2))?;
            }
            _ if s.edge_prob.is_some() => {
                return Err(config_err("scenario.edge_prob", "only applies to a generated sensor_network"));
            }
            _ => {}
        }
        if s.max_draws == 0 {
            return Err(config_err("scenario.max_draws", "must be >= 1"));
        }
        if s.filter == InstanceFilter::SplitOnly && s.n_games < 2 {
            return Err(config_err("scenario.filter", "split_only needs n_games >= 2"));
        }

        let lambda = self.targets.lambda.resolve(n);
        if lambda.len() != n {
            return Err(config_err(
                "targets.lambda",
                format_args!("has {} entries, expected {n}", lambda.len()),
            ));
        }
        QosTargets::new(lambda, self.targets.delta).map_err(|e| config_err("targets", e))?;
        if let Some(p) = &self.targets.pinned {
            if p.len() != n {
                return Err(config_err("targets.pinned", format_args!("has {} entries, expected {n}", p.len())));
            }
            for (i, v) in p.iter().enumerate() {
                positive(&format!("targets.pinned[{i}]"), *v)?;
            }
        }

        SwitchProbabilities::new(self.algorithm.rho, self.algorithm.phi)
            .map_err(|e| config_err("algorithm", e))?;
        self.algorithm
            .kind
            .check_games(s.n_games)
            .map_err(|e| config_err("algorithm.kind", e))?;
        self.noise.validate().map_err(|e| config_err("noise", e))?;
        if self.noise == NoiseModel::BinomialFeedback && s.kind != ScenarioKind::SensorNetwork {
            return Err(config_err("noise.kind", "binomial_feedback needs a sensor_network scenario"));
        }

        let run = &self.run;
        if run.horizon == 0 {
            return Err(config_err("run.horizon", "must be >= 1"));
        }
        if run.realizations == 0 {
            return Err(config_err("run.realizations", "must be >= 1"));
        }
        if run.record_stride == 0 {
            return Err(config_err("run.record_stride", "must be >= 1"));
        }
        if run.threads == Some(0) {
            return Err(config_err("run.threads", "must be >= 1"));
        }

        let c = &self.check;
        for (name, v) in [
            ("check.action_tolerance", c.action_tolerance),
            ("check.reward_tolerance", c.reward_tolerance),
        ] {
            if let Some(v) = v {
                positive(name, v)?;
            }
        }
        if let Some(v) = c.reward_floor_margin {
            if !(v.is_finite() && v >= 0.0) {
                return Err(config_err("check.reward_floor_margin", format_args!("must be >= 0, got {v}")));
            }
        }
        if let Some(v) = c.min_reward_floor {
            if !v.is_finite() {
                return Err(config_err("check.min_reward_floor", "must be finite"));
            }
        }
        for (name, v) in [("check.quiet_resets", c.quiet_resets), ("check.quiet_switches", c.quiet_switches)] {
            if let Some(v) = v {
                fraction(name, v)?;
            }
        }
        fraction("check.pass_fraction", c.pass_fraction)?;
        c.ode.validate().map_err(|e| config_err("check.ode", e))?;

        let v = &self.validate;
        if v.points == 0 {
            return Err(config_err("validate.points", "must be >= 1"));
        }
        positive("validate.step", v.step)?;
        positive("validate.cross_tolerance", v.cross_tolerance)?;
        Ok(())
    }

    pub fn qos_targets(&self) -> QosTargets {
        QosTargets::new(self.targets.lambda.resolve(self.n_players()), self.targets.delta)
            .expect("validated at parse time")
    }

    pub fn simulation_spec(&self) -> SimulationSpec {
        SimulationSpec::new(self.algorithm.kind, self.schedule, self.noise, self.run.horizon)
            .with_switching(SwitchProbabilities::new(self.algorithm.rho, self.algorithm.phi).expect("validated at parse time"))
            .with_record_stride(self.run.record_stride)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}
