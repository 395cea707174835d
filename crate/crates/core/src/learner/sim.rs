//! Drives the per-round state machines over a horizon and records a trace.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::noise::NoiseModel;
use super::round::{LearnerState, RoundEvents, SwitchProbabilities};
use super::schedule::StepsizeSchedule;
use crate::error::{Error, Result};
use crate::game::{GameAssignment, RandomizedTargets, RewardField};
use crate::rng::{stream, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    /// Tug-of-Peace with 1-bit reset signals.
    Top,
    /// Fully distributed Tug-of-Peace, no signalling.
    Fdtop,
    /// Meta Tug-of-Peace over several games.
    MetaTop,
}

impl Algorithm {
    pub fn check_games(&self, n_games: usize) -> Result<()> {
        match self {
            Algorithm::Top | Algorithm::Fdtop if n_games != 1 => Err(Error::Incompatible(format!(
                "{self:?} needs exactly one game, the scenario has {n_games}"
            ))),
            Algorithm::MetaTop if n_games < 2 => Err(Error::Incompatible(
                "MetaTop needs at least two games".into(),
            )),
            _ => Ok(()),
        }
    }
}

/// Fraction of the horizon, at the end, over which convergence metrics are
/// averaged.
pub const TAIL_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationSpec {
    pub algorithm: Algorithm,
    pub schedule: StepsizeSchedule,
    pub noise: NoiseModel,
    pub switching: SwitchProbabilities,
    pub horizon: u64,
    /// Rows are recorded for rounds `t` with `t % record_stride == 0`.
    pub record_stride: u64,
}

impl SimulationSpec {
    pub fn new(algorithm: Algorithm, schedule: StepsizeSchedule, noise: NoiseModel, horizon: u64) -> Self {
        Self {
            algorithm,
            schedule,
            noise,
            switching: SwitchProbabilities::default(),
            horizon,
            record_stride: 1,
        }
    }

    pub fn with_switching(mut self, switching: SwitchProbabilities) -> Self {
        self.switching = switching;
        self
    }

    pub fn with_record_stride(mut self, stride: u64) -> Self {
        self.record_stride = stride;
        self
    }
}

/// One player in one recorded round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub t: u64,
    pub player: usize,
    pub game: usize,
    pub action: f64,
    pub reward_true: f64,
    pub reward_observed: f64,
    /// A reset was triggered at the end of this round.
    pub reset: bool,
    /// This player changed game at the end of this round.
    pub switched: bool,
}

/// Statistics accumulated over every round, recorded or not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub horizon: u64,
    /// First round of the averaging window.
    pub tail_start: u64,
    pub tail_mean_reward: Vec<f64>,
    pub tail_mean_action: Vec<f64>,
    /// Tail average of `min_n u_n`.
    pub tail_mean_min_reward: f64,
    pub reset_count: u64,
    pub last_reset: Option<u64>,
    /// Rounds in which at least one player switched.
    pub switch_rounds: u64,
    pub player_switches: u64,
    pub last_switch: Option<u64>,
    /// Largest `|y_n(t) − u_n(t)|` seen.
    pub max_abs_noise: f64,
    /// Profile and assignment after the final round.
    pub final_actions: Vec<f64>,
    pub final_assignment: GameAssignment,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub seed: u64,
    pub scenario_fingerprint: u64,
    pub initial_actions: Vec<f64>,
    pub initial_assignment: GameAssignment,
    pub rows: Vec<TraceRow>,
    pub summary: TraceSummary,
}

impl Trace {
    pub fn n_players(&self) -> usize {
        self.initial_actions.len()
    }

    /// Rows grouped by recorded round.
    pub fn rounds(&self) -> impl Iterator<Item = &[TraceRow]> {
        self.rows.chunks(self.n_players().max(1))
    }
}

fn tail_start(horizon: u64) -> u64 {
    horizon - (horizon as f64 * TAIL_FRACTION).ceil() as u64
}

/// Round-0 games: uniform for Meta-ToP, otherwise everyone in game 0.
pub fn initial_assignment(algorithm: Algorithm, n_players: usize, n_games: usize, seed: u64) -> Result<GameAssignment> {
    match algorithm {
        Algorithm::MetaTop => {
            let mut rng = stream(seed, Stream::InitialGames);
            GameAssignment::new((0..n_players).map(|_| rng.random_range(0..n_games)).collect(), n_games)
        }
        _ => Ok(GameAssignment::single_game(n_players)),
    }
}

/// Runs one realization. `x(0) = 0`; for Meta-ToP the initial games are
/// drawn uniformly. Noise, switching and initial games each read their own
/// stream derived from `seed`.
pub fn run_simulation(
    field: &dyn RewardField,
    fingerprint: u64,
    targets: &RandomizedTargets,
    spec: &SimulationSpec,
    seed: u64,
) -> Result<Trace> {
    spec.algorithm.check_games(field.n_games())?;
    spec.noise.validate()?;
    if spec.record_stride == 0 {
        return Err(Error::invalid("record_stride", "must be >= 1"));
    }
    let n = field.n_players();
    let assignment = initial_assignment(spec.algorithm, n, field.n_games(), seed)?;
    let mut state = LearnerState::new(field, targets, assignment.clone())?;
    let mut noise_rng = stream(seed, Stream::Noise);
    let mut switch_rng = stream(seed, Stream::Switching);

    let horizon = spec.horizon;
    let tail_from = tail_start(horizon);
    let mut summary = TraceSummary {
        horizon,
        tail_start: tail_from,
        tail_mean_reward: vec![0.0; n],
        tail_mean_action: vec![0.0; n],
        tail_mean_min_reward: 0.0,
        reset_count: 0,
        last_reset: None,
        switch_rounds: 0,
        player_switches: 0,
        last_switch: None,
        max_abs_noise: 0.0,
        final_actions: Vec::new(),
        final_assignment: assignment.clone(),
    };
    let mut rows = Vec::with_capacity(((horizon / spec.record_stride + 1) as usize).saturating_mul(n));
    let mut switched = vec![false; n];

    for t in 0..horizon {
        let played_actions = state.actions().to_vec();
        let played_games = state.assignment().clone();
        let events: RoundEvents = match spec.algorithm {
            Algorithm::Top => state.top_round(field, &spec.schedule, &spec.noise, t, &mut noise_rng)?,
            Algorithm::Fdtop => state.fdtop_round(field, &spec.schedule, &spec.noise, t, &mut noise_rng)?,
            Algorithm::MetaTop => state.metatop_round(
                field,
                &spec.schedule,
                &spec.noise,
                &spec.switching,
                t,
                &mut noise_rng,
                &mut switch_rng,
            )?,
        };
        let clean = state.last_clean_rewards();
        let observed = state.last_observed_rewards();

        for (u, y) in clean.iter().zip(observed) {
            summary.max_abs_noise = summary.max_abs_noise.max((y - u).abs());
        }
        if t >= tail_from {
            let mut min = f64::INFINITY;
            for i in 0..n {
                summary.tail_mean_reward[i] += clean[i];
                summary.tail_mean_action[i] += played_actions[i];
                min = min.min(clean[i]);
            }
            summary.tail_mean_min_reward += min;
        }
        if events.reset {
            summary.reset_count += 1;
            summary.last_reset = Some(t);
        }
        if !events.switches.is_empty() {
            summary.switch_rounds += 1;
            summary.player_switches += events.switches.len() as u64;
            summary.last_switch = Some(t);
        }
        if t % spec.record_stride == 0 {
            switched.iter_mut().for_each(|s| *s = false);
            for &(p, _) in &events.switches {
                switched[p] = true;
            }
            for i in 0..n {
                rows.push(TraceRow {
                    t,
                    player: i,
                    game: played_games.game_of(i),
                    action: played_actions[i],
                    reward_true: clean[i],
                    reward_observed: observed[i],
                    reset: events.reset,
                    switched: switched[i],
                });
            }
        }
    }

    let window = (horizon - tail_from) as f64;
    if window > 0.0 {
        summary.tail_mean_reward.iter_mut().for_each(|v| *v /= window);
        summary.tail_mean_action.iter_mut().for_each(|v| *v /= window);
        summary.tail_mean_min_reward /= window;
    }
    summary.final_actions = state.actions().to_vec();
    summary.final_assignment = state.assignment().clone();

    Ok(Trace {
        seed,
        scenario_fingerprint: fingerprint,
        initial_actions: vec![0.0; n],
        initial_assignment: assignment,
        rows,
        summary,
    })
}
