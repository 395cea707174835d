use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{check_dimensions, project, GameAssignment, RandomizedTargets, RewardField};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OdeOptions {
    pub dt: f64,
    pub max_time: f64,
    /// Stop once the projected residual drops below this.
    pub tol: f64,
    /// Record every k-th grid point; 0 keeps only the start and the terminal.
    pub record_every: u64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            max_time: 1e3,
            tol: 1e-9,
            record_every: 0,
        }
    }
}

impl OdeOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::invalid("dt", format!("must be > 0, got {}", self.dt)));
        }
        if !(self.max_time.is_finite() && self.max_time >= 0.0) {
            return Err(Error::invalid("max_time", format!("must be >= 0, got {}", self.max_time)));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::invalid("tol", format!("must be > 0, got {}", self.tol)));
        }
        Ok(())
    }

    pub fn max_steps(&self) -> u64 {
        (self.max_time / self.dt).round() as u64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdeTrajectory {
    pub times: Vec<f64>,
    pub profiles: Vec<Vec<f64>>,
    pub terminal: Vec<f64>,
    /// `‖λ̄ − u(terminal)‖∞`.
    pub residual: f64,
    /// Residual with components pushing into an active bound dropped.
    pub projected_residual: f64,
    /// `residual < tol`.
    pub converged: bool,
    pub steps: u64,
    /// No component ever decreased along the path.
    pub nondecreasing: bool,
}

impl OdeTrajectory {
    /// Stopped at a point the projection holds still but `u ≠ λ̄`.
    pub fn boundary_pinned(&self, tol: f64) -> bool {
        !self.converged && self.projected_residual < tol
    }
}

/// Projected forward Euler for `ẋ = λ̄ − u(g, x)` on `[0, B]`.
pub fn integrate_ode(
    field: &dyn RewardField,
    assignment: &GameAssignment,
    targets: &RandomizedTargets,
    x0: &[f64],
    options: &OdeOptions,
) -> Result<OdeTrajectory> {
    options.validate()?;
    check_dimensions(field, assignment, x0)?;
    Error::check_len("targets", field.n_players(), targets.len())?;
    if !field.bounds().contains(x0) {
        return Err(Error::invalid("x0", "outside the action bounds"));
    }
    let upper = field.bounds().upper();
    let lambda = targets.as_slice();
    let dt = options.dt;
    let max_steps = options.max_steps();

    let mut x = x0.to_vec();
    let mut u = vec![0.0; x.len()];
    let mut times = Vec::new();
    let mut profiles = Vec::new();
    let mut nondecreasing = true;
    let mut step = 0u64;
    let (residual, projected_residual) = loop {
        field.evaluate_into(assignment, &x, &mut u);
        if let Some(player) = u.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                player,
                time: step as f64 * dt,
            });
        }
        let mut residual = 0.0f64;
        let mut projected = 0.0f64;
        for n in 0..x.len() {
            let h = lambda[n] - u[n];
            residual = residual.max(h.abs());
            let held = (x[n] >= upper[n] && h > 0.0) || (x[n] <= 0.0 && h < 0.0);
            if !held {
                projected = projected.max(h.abs());
            }
        }
        let done = projected < options.tol || step >= max_steps;
        let due = step == 0 || (options.record_every > 0 && step % options.record_every == 0);
        if due || done {
            times.push(step as f64 * dt);
            profiles.push(x.clone());
        }
        if done {
            break (residual, projected);
        }
        for n in 0..x.len() {
            let next = project(x[n] + dt * (lambda[n] - u[n]), 0.0, upper[n]);
            nondecreasing &= next >= x[n];
            x[n] = next;
        }
        step += 1;
    };
    Ok(OdeTrajectory {
        times,
        profiles,
        terminal: x,
        residual,
        projected_residual,
        converged: residual < options.tol,
        steps: step,
        nondecreasing,
    })
}
