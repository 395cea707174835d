//! One synchronous round of each Tug-of-Peace variant.
//!
//! A round is atomic: every player observes its noisy reward for the current
//! profile, takes its projected step, and any boundary signals (with the
//! resets and game switches they trigger) are applied before the next round.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::noise::NoiseModel;
use super::schedule::StepsizeSchedule;
use crate::error::{Error, Result};
use crate::game::{project, GameAssignment, RandomizedTargets, RewardField};

/// Game-switch probabilities: `rho` for players signalled from their own
/// game, `phi` for players that only hear the global signal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSwitch", into = "RawSwitch")]
pub struct SwitchProbabilities {
    rho: f64,
    phi: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSwitch {
    rho: f64,
    phi: f64,
}

impl TryFrom<RawSwitch> for SwitchProbabilities {
    type Error = Error;

    fn try_from(raw: RawSwitch) -> Result<Self> {
        SwitchProbabilities::new(raw.rho, raw.phi)
    }
}

impl From<SwitchProbabilities> for RawSwitch {
    fn from(s: SwitchProbabilities) -> Self {
        RawSwitch { rho: s.rho, phi: s.phi }
    }
}

impl SwitchProbabilities {
    /// Requires `0 < phi <= rho < 1`.
    pub fn new(rho: f64, phi: f64) -> Result<Self> {
        if !(phi > 0.0 && phi <= rho && rho < 1.0) {
            return Err(Error::invalid(
                "switching",
                format!("need 0 < phi <= rho < 1, got rho = {rho}, phi = {phi}"),
            ));
        }
        Ok(Self { rho, phi })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }
}

impl Default for SwitchProbabilities {
    fn default() -> Self {
        Self { rho: 0.2, phi: 0.1 }
    }
}

/// Snapshot of one player's learner state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlayerRuntime {
    pub action: f64,
    pub game: usize,
    pub target: f64,
    pub bound: f64,
}

/// What happened on the signal bus during one round.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RoundEvents {
    /// Players whose projected update landed on their upper bound.
    pub boundary_hitters: Vec<usize>,
    /// Players that received `s = 1` (same game as some hitter, hitters included).
    pub s_recipients: Vec<usize>,
    /// Whether `r = 1` went out to everyone.
    pub r_broadcast: bool,
    /// `(player, new game)` for every player that switched.
    pub switches: Vec<(usize, usize)>,
    /// Whether every action was reset to zero for the next round.
    pub reset: bool,
}

/// Joint learner state of all players.
#[derive(Debug, Clone)]
pub struct LearnerState {
    actions: Vec<f64>,
    assignment: GameAssignment,
    targets: Vec<f64>,
    bounds: Vec<f64>,
    clean: Vec<f64>,
    observed: Vec<f64>,
}

impl LearnerState {
    /// All players start at action 0.
    pub fn new(field: &dyn RewardField, targets: &RandomizedTargets, assignment: GameAssignment) -> Result<Self> {
        let n = field.n_players();
        Self::with_actions(field, targets, assignment, vec![0.0; n])
    }

    pub fn with_actions(
        field: &dyn RewardField,
        targets: &RandomizedTargets,
        assignment: GameAssignment,
        actions: Vec<f64>,
    ) -> Result<Self> {
        let n = field.n_players();
        Error::check_len("targets", n, targets.len())?;
        crate::game::check_dimensions(field, &assignment, &actions)?;
        if !field.bounds().contains(&actions) {
            return Err(Error::invalid("actions", "outside the action bounds"));
        }
        Ok(Self {
            actions,
            assignment,
            targets: targets.as_slice().to_vec(),
            bounds: field.bounds().upper().to_vec(),
            clean: vec![0.0; n],
            observed: vec![0.0; n],
        })
    }

    pub fn actions(&self) -> &[f64] {
        &self.actions
    }

    pub fn assignment(&self) -> &GameAssignment {
        &self.assignment
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn player(&self, n: usize) -> PlayerRuntime {
        PlayerRuntime {
            action: self.actions[n],
            game: self.assignment.game_of(n),
            target: self.targets[n],
            bound: self.bounds[n],
        }
    }

    /// Clean rewards `u(g(t), x(t))` of the last round played.
    pub fn last_clean_rewards(&self) -> &[f64] {
        &self.clean
    }

    /// Noisy observations `y(t)` of the last round played.
    pub fn last_observed_rewards(&self) -> &[f64] {
        &self.observed
    }

    /// Steps (i)-(ii): observe, then take the projected step. Returns the
    /// players whose new action sits on the upper bound.
    fn observe_and_step<R: Rng>(
        &mut self,
        field: &dyn RewardField,
        schedule: &StepsizeSchedule,
        noise: &NoiseModel,
        t: u64,
        rng: &mut R,
    ) -> Result<Vec<usize>> {
        field.evaluate_into(&self.assignment, &self.actions, &mut self.clean);
        match noise {
            NoiseModel::BinomialFeedback => {
                if !field.sample_feedback(&self.assignment, &self.actions, rng, &mut self.observed) {
                    return Err(Error::Incompatible(
                        "binomial feedback noise needs a scenario with its own estimator".into(),
                    ));
                }
            }
            _ => {
                for (y, u) in self.observed.iter_mut().zip(&self.clean) {
                    *y = u + noise.sample(rng);
                }
            }
        }
        if let Some(player) = self.observed.iter().position(|y| !y.is_finite()) {
            return Err(Error::NonFinite {
                player,
                time: t as f64,
            });
        }
        let eta = schedule.stepsize(t);
        let mut hitters = Vec::new();
        for n in 0..self.actions.len() {
            let next = project(
                self.actions[n] + eta * (self.targets[n] - self.observed[n]),
                0.0,
                self.bounds[n],
            );
            self.actions[n] = next;
            if next >= self.bounds[n] {
                hitters.push(n);
            }
        }
        Ok(hitters)
    }

    fn require_single_game(&self, algorithm: &str) -> Result<()> {
        if self.assignment.n_games() != 1 {
            return Err(Error::Incompatible(format!(
                "{algorithm} runs a single game, got {} games",
                self.assignment.n_games()
            )));
        }
        Ok(())
    }

    /// Tug-of-Peace: any boundary hit resets every player to 0.
    pub fn top_round<R: Rng>(
        &mut self,
        field: &dyn RewardField,
        schedule: &StepsizeSchedule,
        noise: &NoiseModel,
        t: u64,
        rng: &mut R,
    ) -> Result<RoundEvents> {
        self.require_single_game("ToP")?;
        let hitters = self.observe_and_step(field, schedule, noise, t, rng)?;
        if hitters.is_empty() {
            return Ok(RoundEvents::default());
        }
        self.actions.iter_mut().for_each(|x| *x = 0.0);
        Ok(RoundEvents {
            boundary_hitters: hitters,
            s_recipients: (0..self.actions.len()).collect(),
            r_broadcast: false,
            switches: Vec::new(),
            reset: true,
        })
    }

    /// Fully distributed variant: no signals; boundary players stay clamped.
    pub fn fdtop_round<R: Rng>(
        &mut self,
        field: &dyn RewardField,
        schedule: &StepsizeSchedule,
        noise: &NoiseModel,
        t: u64,
        rng: &mut R,
    ) -> Result<RoundEvents> {
        self.require_single_game("FDToP")?;
        self.observe_and_step(field, schedule, noise, t, rng)?;
        Ok(RoundEvents::default())
    }

    /// Meta Tug-of-Peace. A boundary hit sends `s` to the hitter's game and
    /// `r` to everyone; everyone resets, `s` recipients switch with
    /// probability `rho` and the rest with `phi`, to a uniformly random
    /// other game. Switch draws come from `switch_rng` so noise draws stay
    /// aligned across algorithms.
    #[allow(clippy::too_many_arguments)]
    pub fn metatop_round<R: Rng, S: Rng>(
        &mut self,
        field: &dyn RewardField,
        schedule: &StepsizeSchedule,
        noise: &NoiseModel,
        switching: &SwitchProbabilities,
        t: u64,
        noise_rng: &mut R,
        switch_rng: &mut S,
    ) -> Result<RoundEvents> {
        let n_games = self.assignment.n_games();
        if n_games < 2 {
            return Err(Error::Incompatible("Meta-ToP needs at least two games".into()));
        }
        let hitters = self.observe_and_step(field, schedule, noise, t, noise_rng)?;
        if hitters.is_empty() {
            return Ok(RoundEvents::default());
        }
        let mut signalled = vec![false; n_games];
        for &h in &hitters {
            signalled[self.assignment.game_of(h)] = true;
        }
        let s_recipients: Vec<usize> = (0..self.actions.len())
            .filter(|&n| signalled[self.assignment.game_of(n)])
            .collect();
        self.actions.iter_mut().for_each(|x| *x = 0.0);

        let mut switches = Vec::new();
        for n in 0..self.actions.len() {
            let current = self.assignment.game_of(n);
            let p = if signalled[current] { switching.rho } else { switching.phi };
            if switch_rng.random_bool(p) {
                let mut next = switch_rng.random_range(0..n_games - 1);
                if next >= current {
                    next += 1;
                }
                switches.push((n, next));
            }
        }
        for &(n, g) in &switches {
            self.assignment.set(n, g);
        }
        Ok(RoundEvents {
            boundary_hitters: hitters,
            s_recipients,
            r_broadcast: true,
            switches,
            reset: true,
        })
    }
}
