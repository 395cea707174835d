//! Multi-channel power control: the reward is the receiver's SINR,
//! `u_n = c_{n,n} x_n / (N_0 + Σ_{m≠n, g_m=g_n} c_{m,n} x_m)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::GameAssignment;

/// Smallest off-diagonal gain a generator will emit; gains must be positive.
pub const MIN_CROSS_GAIN: f64 = 1e-9;
pub const DEFAULT_NOISE_FLOOR: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPowerControl", into = "RawPowerControl")]
pub struct PowerControlInstance {
    n: usize,
    /// `by_receiver[n * N + m] = c_{m,n}`, contiguous per receiver.
    by_receiver: Vec<f64>,
    noise_floor: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPowerControl {
    /// `gains[m][n]`: transmitter m to receiver n.
    gains: Vec<Vec<f64>>,
    noise_floor: f64,
}

impl TryFrom<RawPowerControl> for PowerControlInstance {
    type Error = Error;

    fn try_from(raw: RawPowerControl) -> Result<Self> {
        PowerControlInstance::new(raw.gains, raw.noise_floor)
    }
}

impl From<PowerControlInstance> for RawPowerControl {
    fn from(p: PowerControlInstance) -> Self {
        RawPowerControl {
            gains: p.gain_rows(),
            noise_floor: p.noise_floor,
        }
    }
}

impl PowerControlInstance {
    /// `gains[m][n]` is the gain from transmitter `m` to receiver `n`.
    pub fn new(gains: Vec<Vec<f64>>, noise_floor: f64) -> Result<Self> {
        let n = gains.len();
        if n == 0 {
            return Err(Error::invalid("gains", "need at least one player"));
        }
        for (m, row) in gains.iter().enumerate() {
            Error::check_len("gain row", n, row.len())?;
            if let Some(k) = row.iter().position(|c| !(c.is_finite() && *c > 0.0)) {
                return Err(Error::invalid(
                    format!("gains[{m}][{k}]"),
                    format!("must be > 0, got {}", row[k]),
                ));
            }
        }
        if !(noise_floor.is_finite() && noise_floor > 0.0) {
            return Err(Error::invalid("noise_floor", format!("must be > 0, got {noise_floor}")));
        }
        let mut by_receiver = vec![0.0; n * n];
        for (m, row) in gains.iter().enumerate() {
            for (r, c) in row.iter().enumerate() {
                by_receiver[r * n + m] = *c;
            }
        }
        Ok(Self {
            n,
            by_receiver,
            noise_floor,
        })
    }

    pub fn n_players(&self) -> usize {
        self.n
    }

    /// `c_{m,n}`: transmitter `m` to receiver `n`.
    pub fn gain(&self, m: usize, n: usize) -> f64 {
        self.by_receiver[n * self.n + m]
    }

    pub fn noise_floor(&self) -> f64 {
        self.noise_floor
    }

    pub fn gain_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|m| (0..self.n).map(|n| self.gain(m, n)).collect())
            .collect()
    }

    pub(crate) fn evaluate_into(&self, assignment: &GameAssignment, actions: &[f64], out: &mut [f64]) {
        let games = assignment.as_slice();
        let single = assignment.n_games() == 1;
        for (n, u) in out.iter_mut().enumerate() {
            let column = &self.by_receiver[n * self.n..(n + 1) * self.n];
            let mut interference = 0.0;
            if single {
                for (m, (c, x)) in column.iter().zip(actions).enumerate() {
                    if m != n {
                        interference += c * x;
                    }
                }
            } else {
                let g = games[n];
                for (m, (c, x)) in column.iter().zip(actions).enumerate() {
                    if m != n && games[m] == g {
                        interference += c * x;
                    }
                }
            }
            *u = column[n] * actions[n] / (self.noise_floor + interference);
        }
    }
}

/// SINR of every player under assignment `g` and powers `x`.
pub fn power_control_reward(
    instance: &PowerControlInstance,
    assignment: &GameAssignment,
    actions: &[f64],
) -> Result<Vec<f64>> {
    Error::check_len("game assignment", instance.n, assignment.len())?;
    Error::check_len("action profile", instance.n, actions.len())?;
    let mut out = vec![0.0; instance.n];
    instance.evaluate_into(assignment, actions, &mut out);
    Ok(out)
}

/// Diagonal-heavy random gains: `c_{n,n} ~ U[0.2, 0.8]`, `c_{m,n} ~ U[0, 0.2]`
/// (floored at [`MIN_CROSS_GAIN`]), `N_0 = 0.1`.
pub fn gen_power_control<R: Rng + ?Sized>(n_players: usize, rng: &mut R) -> Result<PowerControlInstance> {
    let gains = (0..n_players)
        .map(|m| {
            (0..n_players)
                .map(|n| {
                    if m == n {
                        rng.random_range(0.2..=0.8)
                    } else {
                        rng.random_range(0.0..=0.2f64).max(MIN_CROSS_GAIN)
                    }
                })
                .collect()
        })
        .collect();
    PowerControlInstance::new(gains, DEFAULT_NOISE_FLOOR)
}
