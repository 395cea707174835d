//! Shared game state: action profiles, game assignments, QoS targets and the
//! reward-field abstraction every scenario implements.

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-player upper action bounds `B_n`; the lower bound is always 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Bounds {
    upper: Vec<f64>,
}

impl Bounds {
    pub fn new(upper: Vec<f64>) -> Result<Self> {
        if let Some((n, b)) = upper
            .iter()
            .enumerate()
            .find(|(_, b)| !(b.is_finite() && **b > 0.0))
        {
            return Err(Error::invalid(
                format!("bounds[{n}]"),
                format!("must be finite and > 0, got {b}"),
            ));
        }
        Ok(Self { upper })
    }

    pub fn uniform(n_players: usize, bound: f64) -> Result<Self> {
        Self::new(vec![bound; n_players])
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn len(&self) -> usize {
        self.upper.len()
    }

    pub fn is_empty(&self) -> bool {
        self.upper.is_empty()
    }

    pub fn contains(&self, actions: &[f64]) -> bool {
        actions.len() == self.upper.len()
            && actions
                .iter()
                .zip(&self.upper)
                .all(|(x, b)| (0.0..=*b).contains(x))
    }
}

impl TryFrom<Vec<f64>> for Bounds {
    type Error = Error;

    fn try_from(value: Vec<f64>) -> Result<Self> {
        Bounds::new(value)
    }
}

impl From<Bounds> for Vec<f64> {
    fn from(value: Bounds) -> Self {
        value.upper
    }
}

/// Joint action `x = [x_1, ..., x_N]`, each within `[0, B_n]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionProfile(Vec<f64>);

impl ActionProfile {
    pub fn new(actions: Vec<f64>, bounds: &Bounds) -> Result<Self> {
        Error::check_len("action profile", bounds.len(), actions.len())?;
        if let Some(n) = (0..actions.len()).find(|&n| !(0.0..=bounds.upper[n]).contains(&actions[n])) {
            return Err(Error::invalid(
                format!("actions[{n}]"),
                format!("{} outside [0, {}]", actions[n], bounds.upper[n]),
            ));
        }
        Ok(Self(actions))
    }

    pub fn zeros(n_players: usize) -> Self {
        Self(vec![0.0; n_players])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Which game each player is in. Games are indexed `0..n_games`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GameAssignment {
    games: Vec<usize>,
    n_games: usize,
}

impl GameAssignment {
    pub fn new(games: Vec<usize>, n_games: usize) -> Result<Self> {
        if n_games == 0 {
            return Err(Error::invalid("n_games", "must be >= 1"));
        }
        if let Some(n) = games.iter().position(|&g| g >= n_games) {
            return Err(Error::invalid(
                format!("games[{n}]"),
                format!("game {} not in 0..{n_games}", games[n]),
            ));
        }
        Ok(Self { games, n_games })
    }

    /// Everyone in game 0 of a single-game system.
    pub fn single_game(n_players: usize) -> Self {
        Self {
            games: vec![0; n_players],
            n_games: 1,
        }
    }

    /// Decodes `index` as a base-`n_games` number, least significant digit
    /// for player 0. Used to enumerate all `K^N` configurations.
    pub fn from_index(mut index: usize, n_players: usize, n_games: usize) -> Self {
        let games = (0..n_players)
            .map(|_| {
                let g = index % n_games;
                index /= n_games;
                g
            })
            .collect();
        Self { games, n_games }
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.games
    }

    pub fn n_games(&self) -> usize {
        self.n_games
    }

    pub fn len(&self) -> usize {
        self.games.len()
    }

    pub fn is_empty(&self) -> bool {
        self.games.is_empty()
    }

    pub fn game_of(&self, player: usize) -> usize {
        self.games[player]
    }

    pub fn same_game(&self, n: usize, m: usize) -> bool {
        self.games[n] == self.games[m]
    }

    pub fn members(&self, game: usize) -> impl Iterator<Item = usize> + '_ {
        self.games
            .iter()
            .enumerate()
            .filter(move |(_, g)| **g == game)
            .map(|(n, _)| n)
    }

    pub(crate) fn set(&mut self, player: usize, game: usize) {
        debug_assert!(game < self.n_games);
        self.games[player] = game;
    }
}

/// QoS requirement `λ` and the randomization width `δ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QosTargets {
    lambda: Vec<f64>,
    delta: f64,
}

impl QosTargets {
    pub fn new(lambda: Vec<f64>, delta: f64) -> Result<Self> {
        if let Some(n) = lambda.iter().position(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(Error::invalid(
                format!("lambda[{n}]"),
                format!("must be > 0, got {}", lambda[n]),
            ));
        }
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::invalid("delta", format!("must be > 0, got {delta}")));
        }
        Ok(Self { lambda, delta })
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }
}

/// Per-player targets `λ̄_n ∈ [λ_n, λ_n + δ]` actually chased by the learners.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomizedTargets(Vec<f64>);

impl RandomizedTargets {
    /// Fixed targets, bypassing the randomization.
    pub fn pinned(values: Vec<f64>) -> Result<Self> {
        if let Some(n) = values.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::invalid(
                format!("lambda_bar[{n}]"),
                format!("must be > 0, got {}", values[n]),
            ));
        }
        Ok(Self(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Draws each `λ̄_n` independently and uniformly from `[λ_n, λ_n + δ]`.
pub fn sample_targets<R: Rng + ?Sized>(targets: &QosTargets, rng: &mut R) -> RandomizedTargets {
    RandomizedTargets(
        targets
            .lambda
            .iter()
            .map(|l| l + targets.delta * rng.random::<f64>())
            .collect(),
    )
}

/// Euclidean projection of a scalar onto `[lower, upper]`.
#[inline]
pub fn project(value: f64, lower: f64, upper: f64) -> f64 {
    debug_assert!(lower <= upper);
    value.max(lower).min(upper)
}

/// An evaluatable Meta-ToW game: `(g, x) -> u(g, x)`.
///
/// Implementations must be deterministic and must only couple players that
/// share a game.
pub trait RewardField: Send + Sync {
    fn n_players(&self) -> usize;

    fn n_games(&self) -> usize;

    fn bounds(&self) -> &Bounds;

    /// Writes the clean rewards into `out`. Dimensions are the caller's
    /// responsibility; use [`evaluate_rewards`] for a checked entry point.
    fn evaluate_into(&self, assignment: &GameAssignment, actions: &[f64], out: &mut [f64]);

    /// Scenario-specific noisy feedback. Returns `false` when the scenario
    /// has no structural estimator of its own.
    fn sample_feedback(
        &self,
        _assignment: &GameAssignment,
        _actions: &[f64],
        _rng: &mut dyn RngCore,
        _out: &mut [f64],
    ) -> bool {
        false
    }
}

pub(crate) fn check_dimensions(
    field: &dyn RewardField,
    assignment: &GameAssignment,
    actions: &[f64],
) -> Result<()> {
    let n = field.n_players();
    Error::check_len("game assignment", n, assignment.len())?;
    Error::check_len("action profile", n, actions.len())?;
    Error::check_len("bounds", n, field.bounds().len())?;
    if assignment.n_games() > field.n_games() {
        return Err(Error::invalid(
            "assignment",
            format!(
                "uses {} games but the field has {}",
                assignment.n_games(),
                field.n_games()
            ),
        ));
    }
    Ok(())
}

pub fn evaluate_rewards(
    field: &dyn RewardField,
    assignment: &GameAssignment,
    actions: &[f64],
) -> Result<Vec<f64>> {
    check_dimensions(field, assignment, actions)?;
    let mut out = vec![0.0; actions.len()];
    field.evaluate_into(assignment, actions, &mut out);
    Ok(out)
}

/// One central finite-difference estimate of `∂u_n/∂x_m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartialEstimate {
    pub point: usize,
    pub player: usize,
    pub wrt: usize,
    pub same_game: bool,
    pub estimate: f64,
}

impl PartialEstimate {
    fn violates(&self, cross_tolerance: f64) -> bool {
        if self.same_game {
            !(self.estimate < 0.0)
        } else {
            !(self.estimate.abs() <= cross_tolerance)
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct TowReport {
    pub step: f64,
    pub cross_tolerance: f64,
    pub estimates: Vec<PartialEstimate>,
}

impl TowReport {
    /// Same-game pairs whose estimate is not strictly negative.
    pub fn same_game_violations(&self) -> impl Iterator<Item = &PartialEstimate> {
        self.estimates
            .iter()
            .filter(|e| e.same_game && e.violates(self.cross_tolerance))
    }

    /// Cross-game pairs whose estimate exceeds the tolerance in magnitude.
    pub fn cross_game_violations(&self) -> impl Iterator<Item = &PartialEstimate> {
        self.estimates
            .iter()
            .filter(|e| !e.same_game && e.violates(self.cross_tolerance))
    }

    pub fn is_clean(&self) -> bool {
        self.estimates.iter().all(|e| !e.violates(self.cross_tolerance))
    }
}

pub const DEFAULT_FD_STEP: f64 = 1e-4;
pub const DEFAULT_CROSS_TOLERANCE: f64 = 1e-6;

/// Estimates every off-diagonal partial `∂u_n/∂x_m` at every sample point by
/// central differences and flags pairs breaking the Tug-of-War sign pattern.
pub fn check_tow_condition(
    field: &dyn RewardField,
    assignment: &GameAssignment,
    points: &[Vec<f64>],
    step: f64,
    cross_tolerance: f64,
) -> Result<TowReport> {
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::invalid("step", format!("must be > 0, got {step}")));
    }
    let n_players = field.n_players();
    let upper = field.bounds().upper();
    let mut estimates = Vec::with_capacity(points.len() * n_players * n_players.saturating_sub(1));
    let mut plus = vec![0.0; n_players];
    let mut minus = vec![0.0; n_players];
    for (index, point) in points.iter().enumerate() {
        check_dimensions(field, assignment, point)?;
        if let Some(player) =
            (0..n_players).find(|&n| !(point[n] - step >= 0.0 && point[n] + step <= upper[n] && point[n] > 0.0 && point[n] < upper[n]))
        {
            return Err(Error::NotInterior {
                index,
                player,
                step,
            });
        }
        let mut probe = point.clone();
        for m in 0..n_players {
            let base = probe[m];
            probe[m] = base + step;
            field.evaluate_into(assignment, &probe, &mut plus);
            probe[m] = base - step;
            field.evaluate_into(assignment, &probe, &mut minus);
            probe[m] = base;
            for n in (0..n_players).filter(|&n| n != m) {
                estimates.push(PartialEstimate {
                    point: index,
                    player: n,
                    wrt: m,
                    same_game: assignment.same_game(n, m),
                    estimate: (plus[n] - minus[n]) / (2.0 * step),
                });
            }
        }
    }
    Ok(TowReport {
        step,
        cross_tolerance,
        estimates,
    })
}

/// Uniform sample points at least `margin` away from both bounds.
pub fn random_interior_points<R: Rng + ?Sized>(
    bounds: &Bounds,
    count: usize,
    margin: f64,
    rng: &mut R,
) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| {
            bounds
                .upper()
                .iter()
                .map(|b| {
                    let m = margin.min(b / 4.0);
                    m + (b - 2.0 * m) * rng.random::<f64>()
                })
                .collect()
        })
        .collect()
}
