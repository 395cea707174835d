//! Distributed task allocation. Task `g` produces total value
//! `U_g = ln(α_g + Σ_{m∈g} β_{m,g} x_m)`, split among its agents in
//! proportion to their weighted effort.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::GameAssignment;

pub const DEFAULT_EFFORT_BOUND: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTaskAllocation", into = "RawTaskAllocation")]
pub struct TaskAllocationInstance {
    alpha: Vec<f64>,
    /// `beta[m][g]`: proficiency of agent `m` at task `g`.
    beta: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTaskAllocation {
    alpha: Vec<f64>,
    beta: Vec<Vec<f64>>,
}

impl TryFrom<RawTaskAllocation> for TaskAllocationInstance {
    type Error = Error;

    fn try_from(raw: RawTaskAllocation) -> Result<Self> {
        TaskAllocationInstance::new(raw.alpha, raw.beta)
    }
}

impl From<TaskAllocationInstance> for RawTaskAllocation {
    fn from(t: TaskAllocationInstance) -> Self {
        RawTaskAllocation {
            alpha: t.alpha,
            beta: t.beta,
        }
    }
}

impl TaskAllocationInstance {
    pub fn new(alpha: Vec<f64>, beta: Vec<Vec<f64>>) -> Result<Self> {
        if alpha.is_empty() {
            return Err(Error::invalid("alpha", "need at least one task"));
        }
        if let Some(g) = alpha.iter().position(|a| !(a.is_finite() && *a >= 1.0)) {
            return Err(Error::invalid(format!("alpha[{g}]"), format!("must be >= 1, got {}", alpha[g])));
        }
        for (m, row) in beta.iter().enumerate() {
            Error::check_len("beta row", alpha.len(), row.len())?;
            if let Some(g) = row.iter().position(|b| !(b.is_finite() && *b >= 0.0)) {
                return Err(Error::invalid(format!("beta[{m}][{g}]"), format!("must be >= 0, got {}", row[g])));
            }
        }
        Ok(Self { alpha, beta })
    }

    pub fn n_players(&self) -> usize {
        self.beta.len()
    }

    pub fn n_tasks(&self) -> usize {
        self.alpha.len()
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn beta(&self, agent: usize, task: usize) -> f64 {
        self.beta[agent][task]
    }

    pub(crate) fn evaluate_into(&self, assignment: &GameAssignment, actions: &[f64], out: &mut [f64]) {
        let games = assignment.as_slice();
        let mut effort = vec![0.0; self.alpha.len()];
        for (m, (&g, &x)) in games.iter().zip(actions).enumerate() {
            effort[g] += self.beta[m][g] * x;
        }
        for (n, u) in out.iter_mut().enumerate() {
            let g = games[n];
            let total = effort[g];
            // 0/0 share when every agent on the task is idle.
            *u = if total > 0.0 {
                self.beta[n][g] * actions[n] / total * (self.alpha[g] + total).ln()
            } else {
                0.0
            };
        }
    }
}

pub fn task_allocation_reward(
    instance: &TaskAllocationInstance,
    assignment: &GameAssignment,
    actions: &[f64],
) -> Result<Vec<f64>> {
    Error::check_len("game assignment", instance.n_players(), assignment.len())?;
    Error::check_len("action profile", instance.n_players(), actions.len())?;
    if assignment.n_games() > instance.n_tasks() {
        return Err(Error::invalid("assignment", "more games than tasks"));
    }
    let mut out = vec![0.0; actions.len()];
    instance.evaluate_into(assignment, actions, &mut out);
    Ok(out)
}

/// `α_g ~ U[1.1, 5]`, `β_{m,g} ~ U[100, 200]`.
pub fn gen_task_allocation<R: Rng + ?Sized>(
    n_players: usize,
    n_tasks: usize,
    rng: &mut R,
) -> Result<TaskAllocationInstance> {
    let alpha = (0..n_tasks).map(|_| rng.random_range(1.1..=5.0)).collect();
    let beta = (0..n_players)
        .map(|_| (0..n_tasks).map(|_| rng.random_range(100.0..=200.0)).collect())
        .collect();
    TaskAllocationInstance::new(alpha, beta)
}
