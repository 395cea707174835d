//! Realization setup and the parallel fan-out.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, InstanceFilter, ScenarioKind};
use super::stats::AggregateStats;
use crate::error::{Error, Result};
use crate::game::{sample_targets, Bounds, GameAssignment, RandomizedTargets, RewardField};
use crate::learner::{run_simulation, Trace};
use crate::oracle::{check_feasibility, Feasibility, OdeOptions};
use crate::rng::{stream, Stream};
use crate::scenarios::{
    gen_power_control, gen_sensor_network, gen_task_allocation, power, PowerControlInstance, Scenario, ScenarioInstance,
};

/// Assignment enumeration is capped at this many configurations.
pub const MAX_ENUMERATED_ASSIGNMENTS: usize = 1 << 20;

/// The scenario and targets one realization plays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreparedInstance {
    pub scenario: Scenario,
    pub targets: RandomizedTargets,
    /// Instances drawn before one passed the filter.
    pub draws: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    pub index: usize,
    pub seed: u64,
    pub instance: PreparedInstance,
    pub trace: Trace,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub realizations: Vec<Realization>,
    pub aggregates: AggregateStats,
}

impl ExperimentResult {
    /// Instances rejected by the filter, summed over realizations.
    pub fn rejected_draws(&self) -> usize {
        self.realizations.iter().map(|r| r.instance.draws - 1).sum()
    }
}

pub fn realization_seed(config: &ExperimentConfig, index: usize) -> u64 {
    config.run.seed.wrapping_add(index as u64)
}

fn bounds(config: &ExperimentConfig) -> Result<Bounds> {
    let s = &config.scenario;
    match &s.bounds {
        Some(b) => Bounds::new(b.clone()),
        None => Bounds::uniform(config.n_players(), s.bound.expect("resolved at parse time")),
    }
}

fn generate<R: Rng + ?Sized>(config: &ExperimentConfig, rng: &mut R) -> Result<ScenarioInstance> {
    let s = &config.scenario;
    let n = config.n_players();
    Ok(match s.kind {
        ScenarioKind::PowerControl => {
            let p = gen_power_control(n, rng)?;
            let floor = s.noise_floor.unwrap_or(power::DEFAULT_NOISE_FLOOR);
            if floor == p.noise_floor() {
                ScenarioInstance::PowerControl(p)
            } else {
                ScenarioInstance::PowerControl(PowerControlInstance::new(p.gain_rows(), floor)?)
            }
        }
        ScenarioKind::TaskAllocation => ScenarioInstance::TaskAllocation(gen_task_allocation(n, s.n_games, rng)?),
        ScenarioKind::SensorNetwork => {
            ScenarioInstance::SensorNetwork(gen_sensor_network(n, s.edge_prob.unwrap_or(0.2), rng)?)
        }
    })
}

fn count_assignments(n_players: usize, n_games: usize) -> Result<usize> {
    let mut total = 1usize;
    for _ in 0..n_players {
        total = total.saturating_mul(n_games);
        if total > MAX_ENUMERATED_ASSIGNMENTS {
            return Err(Error::Incompatible(format!(
                "{n_games}^{n_players} assignments exceed the enumeration cap of {MAX_ENUMERATED_ASSIGNMENTS}"
            )));
        }
    }
    Ok(total)
}

/// Assignments in which no game holds more than one player above any other.
pub fn is_balanced(assignment: &GameAssignment) -> bool {
    let mut sizes = vec![0usize; assignment.n_games()];
    for &g in assignment.as_slice() {
        sizes[g] += 1;
    }
    let lo = sizes.iter().min().copied().unwrap_or(0);
    let hi = sizes.iter().max().copied().unwrap_or(0);
    hi - lo <= 1
}

pub fn passes_filter(
    filter: InstanceFilter,
    scenario: &Scenario,
    targets: &RandomizedTargets,
    ode: &OdeOptions,
) -> Result<bool> {
    let n = scenario.n_players();
    let k = scenario.n_games();
    match filter {
        InstanceFilter::Any => Ok(true),
        InstanceFilter::Feasible if k == 1 => {
            Ok(check_feasibility(scenario, &GameAssignment::single_game(n), targets, ode)?.is_feasible())
        }
        InstanceFilter::Feasible => {
            for index in 0..count_assignments(n, k)? {
                let g = GameAssignment::from_index(index, n, k);
                if check_feasibility(scenario, &g, targets, ode)?.is_feasible() {
                    return Ok(true);
                }
            }
            Ok(false)
        }
        InstanceFilter::SplitOnly => {
            for game in 0..k {
                let g = GameAssignment::new(vec![game; n], k)?;
                if check_feasibility(scenario, &g, targets, ode)? != Feasibility::Infeasible {
                    return Ok(false);
                }
            }
            for index in 0..count_assignments(n, k)? {
                let g = GameAssignment::from_index(index, n, k);
                if is_balanced(&g) && !check_feasibility(scenario, &g, targets, ode)?.is_feasible() {
                    return Ok(false);
                }
            }
            Ok(true)
        }
    }
}

/// Targets and scenario for the realization seeded with `seed`. Targets are
/// drawn once; instances are redrawn until one passes the filter.
pub fn prepare_instance(config: &ExperimentConfig, seed: u64) -> Result<PreparedInstance> {
    let targets = match &config.targets.pinned {
        Some(p) => RandomizedTargets::pinned(p.clone())?,
        None => sample_targets(&config.qos_targets(), &mut stream(seed, Stream::Targets)),
    };
    let bounds = bounds(config)?;
    let s = &config.scenario;
    let ode = &config.check.ode;
    if let Some(instance) = &s.instance {
        let scenario = Scenario::new(instance.clone(), bounds, s.n_games)?;
        if !passes_filter(s.filter, &scenario, &targets, ode)? {
            return Err(Error::ResampleExhausted {
                attempts: 1,
                filter: format!("pinned instance fails {:?}", s.filter),
            });
        }
        return Ok(PreparedInstance {
            scenario,
            targets,
            draws: 1,
        });
    }
    let mut rng = stream(seed, Stream::Instance);
    for draws in 1..=s.max_draws {
        let scenario = Scenario::new(generate(config, &mut rng)?, bounds.clone(), s.n_games)?;
        if passes_filter(s.filter, &scenario, &targets, ode)? {
            return Ok(PreparedInstance {
                scenario,
                targets,
                draws,
            });
        }
    }
    Err(Error::ResampleExhausted {
        attempts: s.max_draws,
        filter: format!("{:?}", s.filter),
    })
}

fn run_one(config: &ExperimentConfig, index: usize) -> Result<Realization> {
    let seed = realization_seed(config, index);
    let wrap = |e| Error::Realization {
        index,
        source: Box::new(e),
    };
    let instance = prepare_instance(config, seed).map_err(wrap)?;
    let trace = run_simulation(
        &instance.scenario,
        instance.scenario.fingerprint(),
        &instance.targets,
        &config.simulation_spec(),
        seed,
    )
    .map_err(wrap)?;
    Ok(Realization {
        index,
        seed,
        instance,
        trace,
    })
}

/// Runs `f` on a dedicated pool when a thread count is configured.
pub(crate) fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("run.threads: {e}")))?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

/// Runs every realization (in parallel) and aggregates the recorded rounds.
/// Realization `r` uses seed `run.seed + r`; output order is by index.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    let realizations = with_pool(config.run.threads, || {
        (0..config.run.realizations)
            .into_par_iter()
            .map(|r| run_one(config, r))
            .collect::<Result<Vec<_>>>()
    })??;
    let traces: Vec<&Trace> = realizations.iter().map(|r| &r.trace).collect();
    let aggregates = AggregateStats::from_traces(&traces);
    Ok(ExperimentResult {
        realizations,
        aggregates,
    })
}
