use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::ode::{integrate_ode, OdeOptions};
use super::spectrum::{jacobian_spectrum, BlockSpectrum, DEFAULT_JACOBIAN_STEP, HYPERBOLICITY_TOLERANCE};
use crate::error::{Error, Result};
use crate::game::{Bounds, GameAssignment, RandomizedTargets, RewardField};
use crate::scenarios::{PowerControlInstance, Scenario, ScenarioInstance};

/// Relative distance to `B_n` below which a component counts as pinned.
pub const INTERIOR_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EquilibriumStatus {
    /// `‖λ̄ − u(x̂)‖∞ < tol`.
    Converged,
    /// Held still by the projection with some `u_n ≠ λ̄_n`.
    BoundaryPinned,
    /// Ran out of time; inconclusive.
    NotConverged,
    /// The exact solution leaves `[0, B]`.
    Infeasible,
}

/// Summary of the ODE Jacobian `−Du` over all game blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSummary {
    /// Largest real part of any eigenvalue of `−Du`; negative means locally
    /// asymptotically stable.
    pub max_real_part: f64,
    pub hyperbolicity_warning: bool,
    pub blocks: Vec<BlockSpectrum>,
}

impl SpectrumSummary {
    fn from_blocks(blocks: Vec<BlockSpectrum>) -> Self {
        let max_real_part = blocks
            .iter()
            .flat_map(|b| b.eigenvalues.iter())
            .map(|e| -e.re)
            .fold(f64::NEG_INFINITY, f64::max);
        Self {
            max_real_part,
            hyperbolicity_warning: blocks.iter().any(|b| b.hyperbolicity_warning),
            blocks,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumReport {
    pub profile: Vec<f64>,
    /// `‖λ̄ − u(x̂)‖∞`.
    pub residual: f64,
    pub tol: f64,
    pub status: EquilibriumStatus,
    /// Every `x̂_n < B_n(1 − INTERIOR_MARGIN)`.
    pub interior: bool,
    /// Known to be the component-wise smallest equilibrium.
    pub minimal: bool,
    pub spectrum: Option<SpectrumSummary>,
}

fn is_interior(profile: &[f64], bounds: &Bounds) -> bool {
    profile
        .iter()
        .zip(bounds.upper())
        .all(|(x, b)| *x > 0.0 && *x < b * (1.0 - INTERIOR_MARGIN))
}

fn spectrum_at(field: &dyn RewardField, assignment: &GameAssignment, x: &[f64]) -> Option<SpectrumSummary> {
    let room = x
        .iter()
        .zip(field.bounds().upper())
        .map(|(x, b)| x.min(b - x))
        .fold(f64::INFINITY, f64::min);
    let step = DEFAULT_JACOBIAN_STEP.min(room / 2.0);
    if !(step > 0.0) {
        return None;
    }
    jacobian_spectrum(field, assignment, x, step, HYPERBOLICITY_TOLERANCE)
        .ok()
        .map(SpectrumSummary::from_blocks)
}

/// Integrates from `x = 0`. On a cooperative field the path rises
/// monotonically to the smallest equilibrium, which is reported with its
/// residual, interiority and Jacobian spectrum.
pub fn minimal_equilibrium(
    field: &dyn RewardField,
    assignment: &GameAssignment,
    targets: &RandomizedTargets,
    options: &OdeOptions,
) -> Result<EquilibriumReport> {
    let zero = vec![0.0; field.n_players()];
    let traj = integrate_ode(field, assignment, targets, &zero, options)?;
    let status = if traj.converged {
        EquilibriumStatus::Converged
    } else if traj.boundary_pinned(options.tol) {
        EquilibriumStatus::BoundaryPinned
    } else {
        EquilibriumStatus::NotConverged
    };
    let interior = is_interior(&traj.terminal, field.bounds());
    let spectrum = if status == EquilibriumStatus::Converged && interior {
        spectrum_at(field, assignment, &traj.terminal)
    } else {
        None
    };
    Ok(EquilibriumReport {
        minimal: status == EquilibriumStatus::Converged && traj.nondecreasing,
        profile: traj.terminal,
        residual: traj.residual,
        tol: options.tol,
        status,
        interior,
        spectrum,
    })
}

/// Solves `u_n = λ̄_n` exactly, one game at a time:
/// `(diag(c_nn) − diag(λ̄) Ĉᵀ) x = N_0 λ̄` with `Ĉ` the same-game cross gains.
pub fn power_control_equilibrium_linear(
    instance: &PowerControlInstance,
    bounds: &Bounds,
    assignment: &GameAssignment,
    targets: &RandomizedTargets,
) -> Result<EquilibriumReport> {
    let n = instance.n_players();
    Error::check_len("bounds", n, bounds.len())?;
    Error::check_len("game assignment", n, assignment.len())?;
    Error::check_len("targets", n, targets.len())?;
    let lambda = targets.as_slice();
    let mut x = vec![0.0; n];
    for game in 0..assignment.n_games() {
        let players: Vec<usize> = assignment.members(game).collect();
        if players.is_empty() {
            continue;
        }
        let k = players.len();
        let a = DMatrix::from_fn(k, k, |i, j| {
            let (rx, tx) = (players[i], players[j]);
            if i == j {
                instance.gain(rx, rx)
            } else {
                -lambda[rx] * instance.gain(tx, rx)
            }
        });
        let b = DVector::from_fn(k, |i, _| instance.noise_floor() * lambda[players[i]]);
        let sol = a.lu().solve(&b).ok_or(Error::Singular { game })?;
        if sol.iter().any(|v| !v.is_finite()) {
            return Err(Error::Singular { game });
        }
        for (i, &p) in players.iter().enumerate() {
            x[p] = sol[i];
        }
    }
    let feasible = x.iter().zip(bounds.upper()).all(|(x, b)| *x >= 0.0 && x <= b);
    let mut u = vec![0.0; n];
    instance.evaluate_into(assignment, &x, &mut u);
    let residual = u.iter().zip(lambda).map(|(u, l)| (l - u).abs()).fold(0.0, f64::max);
    Ok(EquilibriumReport {
        interior: is_interior(&x, bounds),
        profile: x,
        residual,
        tol: 0.0,
        status: if feasible {
            EquilibriumStatus::Converged
        } else {
            EquilibriumStatus::Infeasible
        },
        minimal: feasible,
        spectrum: None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Feasibility {
    Feasible { witness: Vec<f64> },
    Infeasible,
    Unknown,
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Feasibility::Feasible { .. })
    }
}

/// Whether the targets admit an interior equilibrium under `assignment`.
/// Power control is decided by the exact solve; task allocation is
/// cooperative, so a pinned run from 0 rules out any interior equilibrium;
/// sensor activation has no such guarantee and only ever answers feasible
/// or unknown.
pub fn check_feasibility(
    scenario: &Scenario,
    assignment: &GameAssignment,
    targets: &RandomizedTargets,
    options: &OdeOptions,
) -> Result<Feasibility> {
    let report = match scenario.instance() {
        ScenarioInstance::PowerControl(p) => {
            match power_control_equilibrium_linear(p, scenario.bounds(), assignment, targets) {
                Ok(r) => r,
                Err(Error::Singular { .. }) => return Ok(Feasibility::Unknown),
                Err(e) => return Err(e),
            }
        }
        _ => minimal_equilibrium(scenario, assignment, targets, options)?,
    };
    let cooperative = !matches!(scenario.instance(), ScenarioInstance::SensorNetwork(_));
    Ok(match report.status {
        EquilibriumStatus::Converged if report.interior => Feasibility::Feasible {
            witness: report.profile,
        },
        EquilibriumStatus::Infeasible => Feasibility::Infeasible,
        EquilibriumStatus::BoundaryPinned if cooperative => Feasibility::Infeasible,
        _ => Feasibility::Unknown,
    })
}
