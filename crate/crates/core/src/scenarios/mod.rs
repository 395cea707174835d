//! Concrete Meta-ToW reward families and their random instance generators.

pub mod power;
pub mod sensor;
pub mod task;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{Bounds, GameAssignment, RewardField};

pub use power::{gen_power_control, power_control_reward, PowerControlInstance};
pub use sensor::{
    gen_sensor_network, sample_delivery_estimates, sensor_delivery_probability_exact, sensor_feedback_sample,
    sensor_reward, SensorNetworkInstance,
};
pub use task::{gen_task_allocation, task_allocation_reward, TaskAllocationInstance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScenarioInstance {
    PowerControl(PowerControlInstance),
    TaskAllocation(TaskAllocationInstance),
    SensorNetwork(SensorNetworkInstance),
}

impl ScenarioInstance {
    pub fn n_players(&self) -> usize {
        match self {
            ScenarioInstance::PowerControl(p) => p.n_players(),
            ScenarioInstance::TaskAllocation(t) => t.n_players(),
            ScenarioInstance::SensorNetwork(s) => s.n_sensors(),
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            ScenarioInstance::PowerControl(_) => "power_control",
            ScenarioInstance::TaskAllocation(_) => "task_allocation",
            ScenarioInstance::SensorNetwork(_) => "sensor_network",
        }
    }
}

/// A scenario instance together with its action bounds and game count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawScenario", into = "RawScenario")]
pub struct Scenario {
    instance: ScenarioInstance,
    bounds: Bounds,
    n_games: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    instance: ScenarioInstance,
    bounds: Bounds,
    n_games: usize,
}

impl TryFrom<RawScenario> for Scenario {
    type Error = Error;

    fn try_from(raw: RawScenario) -> Result<Self> {
        Scenario::new(raw.instance, raw.bounds, raw.n_games)
    }
}

impl From<Scenario> for RawScenario {
    fn from(s: Scenario) -> Self {
        RawScenario {
            instance: s.instance,
            bounds: s.bounds,
            n_games: s.n_games,
        }
    }
}

impl Scenario {
    pub fn new(instance: ScenarioInstance, bounds: Bounds, n_games: usize) -> Result<Self> {
        Error::check_len("bounds", instance.n_players(), bounds.len())?;
        if n_games == 0 {
            return Err(Error::invalid("n_games", "must be >= 1"));
        }
        match &instance {
            ScenarioInstance::TaskAllocation(t) if t.n_tasks() != n_games => {
                return Err(Error::invalid(
                    "n_games",
                    format!("task allocation instance has {} tasks, not {n_games}", t.n_tasks()),
                ));
            }
            ScenarioInstance::SensorNetwork(s) => {
                if n_games != 1 {
                    return Err(Error::invalid("n_games", "sensor activation is a single game"));
                }
                if s.n_sensors() > sensor::MAX_EXACT_SENSORS {
                    return Err(Error::TooManySensors {
                        max: sensor::MAX_EXACT_SENSORS,
                        found: s.n_sensors(),
                    });
                }
            }
            _ => {}
        }
        Ok(Self {
            instance,
            bounds,
            n_games,
        })
    }

    pub fn instance(&self) -> &ScenarioInstance {
        &self.instance
    }

    pub fn as_power_control(&self) -> Option<&PowerControlInstance> {
        match &self.instance {
            ScenarioInstance::PowerControl(p) => Some(p),
            _ => None,
        }
    }

    /// Stable 64-bit FNV-1a hash of the serialized scenario.
    pub fn fingerprint(&self) -> u64 {
        let bytes = serde_json::to_vec(self).expect("scenario serializes");
        bytes.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
            (h ^ u64::from(*b)).wrapping_mul(0x0000_0100_0000_01b3)
        })
    }
}

impl RewardField for Scenario {
    fn n_players(&self) -> usize {
        self.instance.n_players()
    }

    fn n_games(&self) -> usize {
        self.n_games
    }

    fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    fn evaluate_into(&self, assignment: &GameAssignment, actions: &[f64], out: &mut [f64]) {
        match &self.instance {
            ScenarioInstance::PowerControl(p) => p.evaluate_into(assignment, actions, out),
            ScenarioInstance::TaskAllocation(t) => t.evaluate_into(assignment, actions, out),
            ScenarioInstance::SensorNetwork(s) => {
                s.delivery_into(actions, out).expect("sensor count validated at construction");
                for (u, x) in out.iter_mut().zip(actions) {
                    *u = s.reward_value(*u, *x);
                }
            }
        }
    }

    fn sample_feedback(
        &self,
        _assignment: &GameAssignment,
        actions: &[f64],
        rng: &mut dyn RngCore,
        out: &mut [f64],
    ) -> bool {
        match &self.instance {
            ScenarioInstance::SensorNetwork(s) => {
                s.feedback_into(actions, rng, out).expect("sensor count validated at construction");
                true
            }
            _ => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{check_tow_condition, evaluate_rewards, random_interior_points, DEFAULT_CROSS_TOLERANCE, DEFAULT_FD_STEP};
    use crate::rng::{stream, Stream};
    use rand::Rng;

    fn power(n: usize, k: usize, seed: u64) -> Scenario {
        let p = gen_power_control(n, &mut stream(seed, Stream::Instance)).unwrap();
        Scenario::new(ScenarioInstance::PowerControl(p), Bounds::uniform(n, 1.0).unwrap(), k).unwrap()
    }

    fn task(n: usize, k: usize, seed: u64) -> Scenario {
        let t = gen_task_allocation(n, k, &mut stream(seed, Stream::Instance)).unwrap();
        Scenario::new(ScenarioInstance::TaskAllocation(t), Bounds::uniform(n, 10.0).unwrap(), k).unwrap()
    }

    #[test]
    fn other_game_actions_do_not_matter() {
        for (field, seed) in [(power(8, 3, 1), 1u64), (task(8, 3, 2), 2)] {
            let mut rng = stream(seed, Stream::Probe);
            let g = GameAssignment::new((0..8).map(|_| rng.random_range(0..3)).collect(), 3).unwrap();
            let b = field.bounds().upper().to_vec();
            let x: Vec<f64> = b.iter().map(|b| b * rng.random::<f64>()).collect();
            let u = evaluate_rewards(&field, &g, &x).unwrap();
            for n in 0..8 {
                let mut y = x.clone();
                for m in 0..8 {
                    if g.game_of(m) != g.game_of(n) {
                        y[m] = b[m] * rng.random::<f64>();
                    }
                }
                let v = evaluate_rewards(&field, &g, &y).unwrap();
                assert_eq!(u[n], v[n]);
            }
        }
    }

    #[test]
    fn rewards_are_non_negative_on_a_grid() {
        let sensor = Scenario::new(
            ScenarioInstance::SensorNetwork(gen_sensor_network(3, 0.5, &mut stream(4, Stream::Instance)).unwrap()),
            Bounds::uniform(3, 1.0).unwrap(),
            1,
        )
        .unwrap();
        let fields = [power(3, 1, 3), task(3, 2, 3), sensor];
        for field in &fields {
            let g = GameAssignment::from_index(1, 3, field.n_games());
            let steps = 7;
            for i in 0..steps * steps * steps {
                let x: Vec<f64> = [i % steps, i / steps % steps, i / (steps * steps)]
                    .iter()
                    .zip(field.bounds().upper())
                    .map(|(k, b)| *k as f64 / (steps - 1) as f64 * b)
                    .collect();
                let u = evaluate_rewards(field, &g, &x).unwrap();
                assert!(u.iter().all(|v| *v >= 0.0 && v.is_finite()));
                for n in 0..3 {
                    if x[n] == 0.0 && !matches!(field.instance(), ScenarioInstance::SensorNetwork(_)) {
                        assert_eq!(u[n], 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn power_and_task_satisfy_tow_sign_pattern() {
        for field in [power(6, 2, 5), task(6, 2, 6), power(5, 1, 7)] {
            let mut rng = stream(8, Stream::Probe);
            let g = GameAssignment::new((0..field.n_players()).map(|n| n % field.n_games()).collect(), field.n_games()).unwrap();
            let pts = random_interior_points(field.bounds(), 20, 1e-2, &mut rng);
            let report = check_tow_condition(&field, &g, &pts, DEFAULT_FD_STEP, DEFAULT_CROSS_TOLERANCE).unwrap();
            assert!(report.is_clean(), "{:?}", report.same_game_violations().next());
        }
    }

    #[test]
    fn power_partial_matches_closed_form() {
        let p = PowerControlInstance::new(vec![vec![0.7, 0.15], vec![0.05, 0.4]], 0.1).unwrap();
        let field = Scenario::new(ScenarioInstance::PowerControl(p.clone()), Bounds::uniform(2, 1.0).unwrap(), 1).unwrap();
        let x = vec![0.3, 0.6];
        let g = GameAssignment::single_game(2);
        let report = check_tow_condition(&field, &g, &[x.clone()], 1e-4, 1e-6).unwrap();
        // ∂u_0/∂x_1 = −c00·c10·x0 / (N0 + c10·x1)²
        let exact = -0.7 * 0.05 * 0.3 / (0.1f64 + 0.05 * 0.6).powi(2);
        let est = report.estimates.iter().find(|e| e.player == 0 && e.wrt == 1).unwrap();
        assert!((est.estimate - exact).abs() < 1e-7);
    }

    #[test]
    fn task_partial_matches_hand_derivative() {
        // u_0 = b0 x0 ln(a + b0 x0 + b1 x1) / (b0 x0 + b1 x1)
        // ∂u_0/∂x_1 = b0 x0 b1 [S/(a+S) − ln(a+S)] / S²
        let (a, b0, b1) = (1.5, 120.0, 180.0);
        let t = TaskAllocationInstance::new(vec![a], vec![vec![b0], vec![b1]]).unwrap();
        let field = Scenario::new(ScenarioInstance::TaskAllocation(t), Bounds::uniform(2, 10.0).unwrap(), 1).unwrap();
        let (x0, x1) = (2.0, 3.0);
        let s: f64 = b0 * x0 + b1 * x1;
        let exact = b0 * x0 * b1 * (s / (a + s) - (a + s).ln()) / (s * s);
        assert!(exact < 0.0);
        let report = check_tow_condition(&field, &GameAssignment::single_game(2), &[vec![x0, x1]], 1e-4, 1e-6).unwrap();
        let est = report.estimates.iter().find(|e| e.player == 0 && e.wrt == 1).unwrap();
        assert!((est.estimate - exact).abs() < 1e-9 * exact.abs().max(1.0), "{} vs {exact}", est.estimate);
    }

    #[test]
    fn cross_game_partials_vanish() {
        let field = power(2, 2, 9);
        let g = GameAssignment::new(vec![0, 1], 2).unwrap();
        let report = check_tow_condition(&field, &g, &[vec![0.4, 0.5]], 1e-4, 1e-6).unwrap();
        assert!(report.estimates.iter().all(|e| !e.same_game && e.estimate == 0.0));
        assert!(report.is_clean());
    }

    #[test]
    fn boundary_sample_points_are_rejected() {
        let field = power(2, 1, 1);
        let g = GameAssignment::single_game(2);
        assert!(matches!(
            check_tow_condition(&field, &g, &[vec![0.0, 0.5]], 1e-4, 1e-6),
            Err(Error::NotInterior { player: 0, .. })
        ));
        assert!(check_tow_condition(&field, &g, &[vec![0.5, 1.0 - 1e-5]], 1e-4, 1e-6).is_err());
    }

    #[test]
    fn scenario_round_trips_through_json() {
        let s = task(4, 2, 1);
        let json = serde_json::to_string(&s).unwrap();
        assert!(json.contains("\"kind\":\"task_allocation\""));
        let back: Scenario = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.fingerprint(), s.fingerprint());
    }

    #[test]
    fn scenario_validation() {
        let t = gen_task_allocation(3, 2, &mut stream(0, Stream::Instance)).unwrap();
        assert!(Scenario::new(ScenarioInstance::TaskAllocation(t), Bounds::uniform(3, 1.0).unwrap(), 3).is_err());
        let s = gen_sensor_network(3, 0.5, &mut stream(0, Stream::Instance)).unwrap();
        assert!(Scenario::new(ScenarioInstance::SensorNetwork(s), Bounds::uniform(3, 1.0).unwrap(), 2).is_err());
        let p = gen_power_control(3, &mut stream(0, Stream::Instance)).unwrap();
        assert!(Scenario::new(ScenarioInstance::PowerControl(p), Bounds::uniform(2, 1.0).unwrap(), 1).is_err());
    }
}
