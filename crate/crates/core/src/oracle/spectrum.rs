use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{check_dimensions, GameAssignment, RewardField};

pub const DEFAULT_JACOBIAN_STEP: f64 = 1e-6;
pub const HYPERBOLICITY_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eigenvalue {
    pub re: f64,
    pub im: f64,
}

/// Eigenvalues of `Du` restricted to one game's players.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockSpectrum {
    pub game: usize,
    pub players: Vec<usize>,
    /// Sorted by real part, then imaginary part.
    pub eigenvalues: Vec<Eigenvalue>,
    /// Some eigenvalue has `|Re| <` the tolerance.
    pub hyperbolicity_warning: bool,
}

/// Central-difference Jacobian `J[n][m] = ∂u_n/∂x_m` (row-major).
pub fn reward_jacobian(
    field: &dyn RewardField,
    assignment: &GameAssignment,
    x: &[f64],
    fd_step: f64,
) -> Result<DMatrix<f64>> {
    check_dimensions(field, assignment, x)?;
    if !(fd_step.is_finite() && fd_step > 0.0) {
        return Err(Error::invalid("fd_step", format!("must be > 0, got {fd_step}")));
    }
    let upper = field.bounds().upper();
    if let Some(player) = (0..x.len()).find(|&n| !(x[n] - fd_step >= 0.0 && x[n] + fd_step <= upper[n])) {
        return Err(Error::NotInterior {
            index: 0,
            player,
            step: fd_step,
        });
    }
    let n = x.len();
    let mut jac = DMatrix::zeros(n, n);
    let mut probe = x.to_vec();
    let mut plus = vec![0.0; n];
    let mut minus = vec![0.0; n];
    for m in 0..n {
        probe[m] = x[m] + fd_step;
        field.evaluate_into(assignment, &probe, &mut plus);
        probe[m] = x[m] - fd_step;
        field.evaluate_into(assignment, &probe, &mut minus);
        probe[m] = x[m];
        for r in 0..n {
            jac[(r, m)] = (plus[r] - minus[r]) / (2.0 * fd_step);
        }
    }
    Ok(jac)
}

/// Per-game eigenvalues of the finite-difference Jacobian of `u` at `x`.
pub fn jacobian_spectrum(
    field: &dyn RewardField,
    assignment: &GameAssignment,
    x: &[f64],
    fd_step: f64,
    tolerance: f64,
) -> Result<Vec<BlockSpectrum>> {
    let jac = reward_jacobian(field, assignment, x, fd_step)?;
    let mut blocks = Vec::new();
    for game in 0..assignment.n_games() {
        let players: Vec<usize> = assignment.members(game).collect();
        if players.is_empty() {
            continue;
        }
        let k = players.len();
        let block = DMatrix::from_fn(k, k, |i, j| jac[(players[i], players[j])]);
        let mut eigenvalues: Vec<Eigenvalue> = block
            .complex_eigenvalues()
            .iter()
            .map(|z| Eigenvalue { re: z.re, im: z.im })
            .collect();
        eigenvalues.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        let hyperbolicity_warning = eigenvalues.iter().any(|e| e.re.abs() < tolerance);
        blocks.push(BlockSpectrum {
            game,
            players,
            eigenvalues,
            hyperbolicity_warning,
        });
    }
    Ok(blocks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::Bounds;
    use crate::scenarios::{PowerControlInstance, Scenario, ScenarioInstance};

    fn power(gains: Vec<Vec<f64>>, k: usize) -> Scenario {
        let n = gains.len();
        let p = PowerControlInstance::new(gains, 0.1).unwrap();
        Scenario::new(ScenarioInstance::PowerControl(p), Bounds::uniform(n, 1.0).unwrap(), k).unwrap()
    }

    #[test]
    fn scalar_eigenvalue_is_gain_over_noise() {
        let field = power(vec![vec![1.0]], 1);
        let s = jacobian_spectrum(&field, &GameAssignment::single_game(1), &[0.05], DEFAULT_JACOBIAN_STEP, HYPERBOLICITY_TOLERANCE)
            .unwrap();
        assert_eq!(s.len(), 1);
        assert!((s[0].eigenvalues[0].re - 10.0).abs() < 1e-6);
        assert_eq!(s[0].eigenvalues[0].im, 0.0);
        assert!(!s[0].hyperbolicity_warning);
    }

    #[test]
    fn symmetric_pair_matches_hand_derivative() {
        let field = power(vec![vec![1.0, 0.2], vec![0.2, 1.0]], 1);
        let a = 0.05 / 0.9;
        let d = 0.1 + 0.2 * a;
        // ∂u1/∂x1 = 1/D, ∂u1/∂x2 = −0.2a/D²; symmetric ⇒ eigenvalues diag ± off
        let diag = 1.0 / d;
        let off = 0.2 * a / (d * d);
        let s = jacobian_spectrum(&field, &GameAssignment::single_game(2), &[a, a], DEFAULT_JACOBIAN_STEP, HYPERBOLICITY_TOLERANCE)
            .unwrap();
        let ev = &s[0].eigenvalues;
        assert!((ev[0].re - (diag - off)).abs() < 1e-5, "{ev:?}");
        assert!((ev[1].re - (diag + off)).abs() < 1e-5, "{ev:?}");
        let jac = reward_jacobian(&field, &GameAssignment::single_game(2), &[a, a], DEFAULT_JACOBIAN_STEP).unwrap();
        assert!((jac[(0, 1)] + off).abs() < 1e-5);
    }

    #[test]
    fn blocks_follow_the_assignment() {
        let field = power(vec![vec![1.0, 0.2, 0.1], vec![0.2, 1.0, 0.1], vec![0.1, 0.1, 0.5]], 2);
        let g = GameAssignment::new(vec![0, 1, 0], 2).unwrap();
        let s = jacobian_spectrum(&field, &g, &[0.1, 0.1, 0.1], DEFAULT_JACOBIAN_STEP, HYPERBOLICITY_TOLERANCE).unwrap();
        assert_eq!(s[0].players, vec![0, 2]);
        assert_eq!(s[1].players, vec![1]);
        // lone player in game 1 sees no interference: c/N_0
        assert!((s[1].eigenvalues[0].re - 10.0).abs() < 1e-6);
    }

    #[test]
    fn boundary_points_are_rejected() {
        let field = power(vec![vec![1.0]], 1);
        let g = GameAssignment::single_game(1);
        assert!(matches!(
            jacobian_spectrum(&field, &g, &[0.0], DEFAULT_JACOBIAN_STEP, HYPERBOLICITY_TOLERANCE),
            Err(Error::NotInterior { .. })
        ));
        assert!(jacobian_spectrum(&field, &g, &[1.0], DEFAULT_JACOBIAN_STEP, HYPERBOLICITY_TOLERANCE).is_err());
    }
}
