//! Oracle cross-checks of stochastic runs and the Tug-of-War sign sweep.

use serde::{Deserialize, Serialize};

use super::config::{CheckConfig, ExperimentConfig};
use super::experiment::{prepare_instance, run_experiment, with_pool, ExperimentResult, Realization};
use crate::error::{Error, Result};
use crate::game::{check_tow_condition, random_interior_points, GameAssignment, RewardField};
use crate::oracle::{
    minimal_equilibrium, power_control_equilibrium_linear, EquilibriumReport, EquilibriumStatus, INTERIOR_MARGIN,
};
use crate::rng::{stream, Stream};
use rand::Rng;
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    ActionTolerance,
    RewardTolerance,
    RewardFloor,
    MinRewardFloor,
    QuietResets,
    QuietSwitches,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizationCheck {
    pub run_id: usize,
    pub seed: u64,
    pub draws: usize,
    /// `None` when the oracle was inconclusive.
    pub oracle_status: Option<EquilibriumStatus>,
    pub equilibrium: Option<Vec<f64>>,
    /// `max_n |x̄_n − x*_n|`.
    pub action_error: Option<f64>,
    /// `max_n |ū_n − λ̄_n|`.
    pub reward_error: f64,
    /// `max_n (λ_n − ū_n)`.
    pub reward_shortfall: f64,
    pub tail_mean_min_reward: f64,
    pub reset_count: u64,
    pub last_reset: Option<u64>,
    pub player_switches: u64,
    pub last_switch: Option<u64>,
    /// Some player ended on its upper bound.
    pub boundary_pinned: bool,
    pub outcomes: Vec<(Condition, bool)>,
}

impl RealizationCheck {
    pub fn outcome(&self, condition: Condition) -> Option<bool> {
        self.outcomes.iter().find(|(c, _)| *c == condition).map(|(_, ok)| *ok)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionSummary {
    pub condition: Condition,
    pub passed: usize,
    pub evaluated: usize,
    pub required_fraction: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossCheckReport {
    pub realizations: Vec<RealizationCheck>,
    pub conditions: Vec<ConditionSummary>,
    pub inconclusive_oracles: usize,
    pub boundary_pinned: usize,
    pub passed: bool,
}

impl CrossCheckReport {
    pub fn condition(&self, condition: Condition) -> Option<&ConditionSummary> {
        self.conditions.iter().find(|c| c.condition == condition)
    }
}

/// Oracle for one realization's final assignment; `None` if inconclusive.
pub fn realization_oracle(config: &ExperimentConfig, r: &Realization) -> Result<Option<EquilibriumReport>> {
    let scenario = &r.instance.scenario;
    let assignment = &r.trace.summary.final_assignment;
    let report = match scenario.as_power_control() {
        Some(p) => match power_control_equilibrium_linear(p, scenario.bounds(), assignment, &r.instance.targets) {
            Ok(report) => report,
            Err(Error::Singular { .. }) => return Ok(None),
            Err(e) => return Err(e),
        },
        None => minimal_equilibrium(scenario, assignment, &r.instance.targets, &config.check.ode)?,
    };
    Ok(match report.status {
        EquilibriumStatus::NotConverged => None,
        _ => Some(report),
    })
}

fn quiet_since(last: Option<u64>, horizon: u64, fraction: f64) -> bool {
    let start = horizon - (fraction * horizon as f64).round() as u64;
    last.is_none_or(|t| t < start)
}

fn check_realization(config: &ExperimentConfig, r: &Realization) -> Result<RealizationCheck> {
    let c: &CheckConfig = &config.check;
    let s = &r.trace.summary;
    let lambda = config.qos_targets().lambda().to_vec();
    let lambda_bar = r.instance.targets.as_slice();
    let upper = r.instance.scenario.bounds().upper();
    let oracle = realization_oracle(config, r)?;
    let equilibrium = oracle
        .as_ref()
        .filter(|o| o.status == EquilibriumStatus::Converged)
        .map(|o| o.profile.clone());
    let action_error = equilibrium.as_ref().map(|x| {
        x.iter()
            .zip(&s.tail_mean_action)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    });
    let reward_error = s
        .tail_mean_reward
        .iter()
        .zip(lambda_bar)
        .map(|(u, l)| (u - l).abs())
        .fold(0.0, f64::max);
    let reward_shortfall = s
        .tail_mean_reward
        .iter()
        .zip(&lambda)
        .map(|(u, l)| l - u)
        .fold(f64::NEG_INFINITY, f64::max);

    let mut outcomes = Vec::new();
    if let Some(tol) = c.action_tolerance {
        match (&oracle, action_error) {
            (Some(_), Some(err)) => outcomes.push((Condition::ActionTolerance, err <= tol)),
            // a conclusive oracle without an equilibrium cannot be matched
            (Some(_), None) => outcomes.push((Condition::ActionTolerance, false)),
            (None, _) => {}
        }
    }
    if let Some(tol) = c.reward_tolerance {
        outcomes.push((Condition::RewardTolerance, reward_error <= tol));
    }
    if let Some(margin) = c.reward_floor_margin {
        outcomes.push((Condition::RewardFloor, reward_shortfall <= margin));
    }
    if let Some(floor) = c.min_reward_floor {
        outcomes.push((Condition::MinRewardFloor, s.tail_mean_min_reward >= floor));
    }
    if let Some(f) = c.quiet_resets {
        outcomes.push((Condition::QuietResets, quiet_since(s.last_reset, s.horizon, f)));
    }
    if let Some(f) = c.quiet_switches {
        outcomes.push((Condition::QuietSwitches, quiet_since(s.last_switch, s.horizon, f)));
    }

    Ok(RealizationCheck {
        run_id: r.index,
        seed: r.seed,
        draws: r.instance.draws,
        oracle_status: oracle.as_ref().map(|o| o.status),
        equilibrium,
        action_error,
        reward_error,
        reward_shortfall,
        tail_mean_min_reward: s.tail_mean_min_reward,
        reset_count: s.reset_count,
        last_reset: s.last_reset,
        player_switches: s.player_switches,
        last_switch: s.last_switch,
        boundary_pinned: s
            .final_actions
            .iter()
            .zip(upper)
            .any(|(x, b)| *x >= b * (1.0 - INTERIOR_MARGIN)),
        outcomes,
    })
}

/// Compares every realization of an existing result against the oracle.
pub fn check_result(config: &ExperimentConfig, result: &ExperimentResult) -> Result<CrossCheckReport> {
    let realizations = with_pool(config.run.threads, || {
        result
            .realizations
            .par_iter()
            .map(|r| check_realization(config, r))
            .collect::<Result<Vec<_>>>()
    })??;
    let all = [
        Condition::ActionTolerance,
        Condition::RewardTolerance,
        Condition::RewardFloor,
        Condition::MinRewardFloor,
        Condition::QuietResets,
        Condition::QuietSwitches,
    ];
    let required = config.check.pass_fraction;
    let mut conditions = Vec::new();
    for condition in all {
        let results: Vec<bool> = realizations.iter().filter_map(|r| r.outcome(condition)).collect();
        let configured = match condition {
            Condition::ActionTolerance => config.check.action_tolerance.is_some(),
            Condition::RewardTolerance => config.check.reward_tolerance.is_some(),
            Condition::RewardFloor => config.check.reward_floor_margin.is_some(),
            Condition::MinRewardFloor => config.check.min_reward_floor.is_some(),
            Condition::QuietResets => config.check.quiet_resets.is_some(),
            Condition::QuietSwitches => config.check.quiet_switches.is_some(),
        };
        if !configured {
            continue;
        }
        let passed = results.iter().filter(|ok| **ok).count();
        let evaluated = results.len();
        conditions.push(ConditionSummary {
            condition,
            passed,
            evaluated,
            required_fraction: required,
            ok: passed as f64 >= required * evaluated as f64 - 1e-9,
        });
    }
    Ok(CrossCheckReport {
        inconclusive_oracles: realizations.iter().filter(|r| r.oracle_status.is_none()).count(),
        boundary_pinned: realizations.iter().filter(|r| r.boundary_pinned).count(),
        passed: conditions.iter().all(|c| c.ok),
        realizations,
        conditions,
    })
}

/// Runs the experiment and cross-checks it.
pub fn cross_check(config: &ExperimentConfig) -> Result<(ExperimentResult, CrossCheckReport)> {
    let result = run_experiment(config)?;
    let report = check_result(config, &result)?;
    Ok((result, report))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidateReport {
    pub family: String,
    pub seed: u64,
    pub points: usize,
    pub step: f64,
    pub cross_tolerance: f64,
    pub same_game_pairs: usize,
    pub cross_game_pairs: usize,
    pub same_game_violations: usize,
    pub cross_game_violations: usize,
    /// Largest same-game partial seen; must be negative.
    pub max_same_game_partial: Option<f64>,
    pub max_cross_game_abs: Option<f64>,
    pub clean: bool,
}

/// Samples an instance as realization 0 would and checks the sign pattern
/// of every off-diagonal partial at random interior points. With several
/// games the assignment is drawn uniformly.
pub fn validate_tow(config: &ExperimentConfig) -> Result<ValidateReport> {
    let seed = config.run.seed;
    let prepared = prepare_instance(config, seed)?;
    let scenario = &prepared.scenario;
    let n = scenario.n_players();
    let k = scenario.n_games();
    let mut rng = stream(seed, Stream::Probe);
    let assignment = if k == 1 {
        GameAssignment::single_game(n)
    } else {
        GameAssignment::new((0..n).map(|_| rng.random_range(0..k)).collect(), k)?
    };
    let v = &config.validate;
    let points = random_interior_points(scenario.bounds(), v.points, (4.0 * v.step).max(1e-2), &mut rng);
    let report = check_tow_condition(scenario, &assignment, &points, v.step, v.cross_tolerance)?;
    let same: Vec<f64> = report.estimates.iter().filter(|e| e.same_game).map(|e| e.estimate).collect();
    let cross: Vec<f64> = report.estimates.iter().filter(|e| !e.same_game).map(|e| e.estimate.abs()).collect();
    let same_game_violations = report.same_game_violations().count();
    let cross_game_violations = report.cross_game_violations().count();
    Ok(ValidateReport {
        family: scenario.instance().family().to_string(),
        seed,
        points: v.points,
        step: v.step,
        cross_tolerance: v.cross_tolerance,
        same_game_pairs: same.len(),
        cross_game_pairs: cross.len(),
        same_game_violations,
        cross_game_violations,
        max_same_game_partial: same.iter().copied().reduce(f64::max),
        max_cross_game_abs: cross.iter().copied().reduce(f64::max),
        clean: same_game_violations == 0 && cross_game_violations == 0,
    })
}
