//! Sensor activation. Each sensor is off with probability `x_n` and its
//! observation reaches the sink iff it is on and some path of on sensors
//! leads to a sensor with a sink link. The reward trades delivery value
//! against energy: `u_n = max(0, s·√P_n − α + β·x_n)`.

use std::sync::OnceLock;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exact enumeration walks all `2^N` activation states.
pub const MAX_EXACT_SENSORS: usize = 20;

pub const DEFAULT_PACKETS: u32 = 100;
pub const DEFAULT_VALUE_SCALE: f64 = 0.8;
pub const DEFAULT_OFFSET: f64 = 0.8;
pub const DEFAULT_ENERGY_WEIGHT: f64 = 2.0;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "RawSensorNetwork", into = "RawSensorNetwork")]
pub struct SensorNetworkInstance {
    adjacency: Vec<Vec<bool>>,
    sink_links: Vec<bool>,
    packets_per_round: u32,
    value_scale: f64,
    offset: f64,
    energy_weight: f64,
    /// `reach[state]`: bitmask of sensors connected to the sink when the
    /// active set is `state`.
    reach: OnceLock<Vec<u32>>,
}

impl PartialEq for SensorNetworkInstance {
    fn eq(&self, other: &Self) -> bool {
        self.adjacency == other.adjacency
            && self.sink_links == other.sink_links
            && self.packets_per_round == other.packets_per_round
            && self.value_scale == other.value_scale
            && self.offset == other.offset
            && self.energy_weight == other.energy_weight
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSensorNetwork {
    adjacency: Vec<Vec<bool>>,
    sink_links: Vec<bool>,
    packets_per_round: u32,
    value_scale: f64,
    offset: f64,
    energy_weight: f64,
}

impl TryFrom<RawSensorNetwork> for SensorNetworkInstance {
    type Error = Error;

    fn try_from(raw: RawSensorNetwork) -> Result<Self> {
        SensorNetworkInstance::new(
            raw.adjacency,
            raw.sink_links,
            raw.packets_per_round,
            raw.value_scale,
            raw.offset,
            raw.energy_weight,
        )
    }
}

impl From<SensorNetworkInstance> for RawSensorNetwork {
    fn from(s: SensorNetworkInstance) -> Self {
        RawSensorNetwork {
            adjacency: s.adjacency,
            sink_links: s.sink_links,
            packets_per_round: s.packets_per_round,
            value_scale: s.value_scale,
            offset: s.offset,
            energy_weight: s.energy_weight,
        }
    }
}

impl SensorNetworkInstance {
    pub fn new(
        adjacency: Vec<Vec<bool>>,
        sink_links: Vec<bool>,
        packets_per_round: u32,
        value_scale: f64,
        offset: f64,
        energy_weight: f64,
    ) -> Result<Self> {
        let n = adjacency.len();
        Error::check_len("sink links", n, sink_links.len())?;
        for (i, row) in adjacency.iter().enumerate() {
            Error::check_len("adjacency row", n, row.len())?;
            if row[i] {
                return Err(Error::invalid(format!("adjacency[{i}][{i}]"), "self loops are not allowed"));
            }
            if let Some(j) = (0..n).find(|&j| row[j] != adjacency[j][i]) {
                return Err(Error::invalid(format!("adjacency[{i}][{j}]"), "adjacency must be symmetric"));
            }
        }
        if packets_per_round == 0 {
            return Err(Error::invalid("packets_per_round", "must be >= 1"));
        }
        if !(value_scale.is_finite() && value_scale > 0.0) {
            return Err(Error::invalid("value_scale", "must be > 0"));
        }
        if !(energy_weight.is_finite() && energy_weight > 0.0) {
            return Err(Error::invalid("energy_weight", "must be > 0"));
        }
        if !offset.is_finite() {
            return Err(Error::invalid("offset", "must be finite"));
        }
        Ok(Self {
            adjacency,
            sink_links,
            packets_per_round,
            value_scale,
            offset,
            energy_weight,
            reach: OnceLock::new(),
        })
    }

    pub fn n_sensors(&self) -> usize {
        self.adjacency.len()
    }

    pub fn adjacency(&self) -> &[Vec<bool>] {
        &self.adjacency
    }

    pub fn sink_links(&self) -> &[bool] {
        &self.sink_links
    }

    pub fn packets_per_round(&self) -> u32 {
        self.packets_per_round
    }

    fn reach_table(&self) -> Result<&[u32]> {
        let n = self.n_sensors();
        if n > MAX_EXACT_SENSORS {
            return Err(Error::TooManySensors {
                max: MAX_EXACT_SENSORS,
                found: n,
            });
        }
        Ok(self.reach.get_or_init(|| {
            let neighbours: Vec<u32> = self
                .adjacency
                .iter()
                .map(|row| row.iter().enumerate().filter(|(_, e)| **e).fold(0, |acc, (j, _)| acc | (1 << j)))
                .collect();
            let sink_mask = self
                .sink_links
                .iter()
                .enumerate()
                .filter(|(_, l)| **l)
                .fold(0u32, |acc, (j, _)| acc | (1 << j));
            (0..1u32 << n)
                .map(|active| {
                    let mut reached = active & sink_mask;
                    loop {
                        let mut grown = reached;
                        let mut frontier = reached;
                        while frontier != 0 {
                            let m = frontier.trailing_zeros() as usize;
                            frontier &= frontier - 1;
                            grown |= neighbours[m] & active;
                        }
                        if grown == reached {
                            break reached;
                        }
                        reached = grown;
                    }
                })
                .collect()
        }))
    }

    pub(crate) fn delivery_into(&self, actions: &[f64], out: &mut [f64]) -> Result<()> {
        let reach = self.reach_table()?;
        let n = self.n_sensors();
        // probability of each activation state; bit m set = sensor m active
        let mut probs = Vec::with_capacity(1 << n);
        probs.push(1.0);
        for &x in actions.iter().take(n) {
            let len = probs.len();
            for s in 0..len {
                let p = probs[s];
                probs.push(p * (1.0 - x));
                probs[s] = p * x;
            }
        }
        out.iter_mut().for_each(|p| *p = 0.0);
        for (p, &mask) in probs.iter().zip(reach) {
            let mut bits = mask;
            while bits != 0 {
                let m = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                out[m] += p;
            }
        }
        for p in out.iter_mut() {
            *p = p.clamp(0.0, 1.0);
        }
        Ok(())
    }

    pub(crate) fn reward_value(&self, delivery: f64, action: f64) -> f64 {
        (self.value_scale * delivery.sqrt() - self.offset + self.energy_weight * action).max(0.0)
    }

    pub(crate) fn feedback_into<R: Rng + ?Sized>(&self, actions: &[f64], rng: &mut R, out: &mut [f64]) -> Result<()> {
        let estimates = sample_delivery_estimates(self, actions, rng)?;
        for ((u, p), x) in out.iter_mut().zip(&estimates).zip(actions) {
            *u = self.reward_value(*p, *x);
        }
        Ok(())
    }
}

/// Exact `P_n(x)` by enumerating every activation state.
pub fn sensor_delivery_probability_exact(instance: &SensorNetworkInstance, actions: &[f64]) -> Result<Vec<f64>> {
    Error::check_len("action profile", instance.n_sensors(), actions.len())?;
    let mut out = vec![0.0; actions.len()];
    instance.delivery_into(actions, &mut out)?;
    Ok(out)
}

pub fn sensor_reward(instance: &SensorNetworkInstance, actions: &[f64], delivery_prob: &[f64]) -> Result<Vec<f64>> {
    Error::check_len("action profile", instance.n_sensors(), actions.len())?;
    Error::check_len("delivery probabilities", instance.n_sensors(), delivery_prob.len())?;
    if let Some(n) = delivery_prob.iter().position(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::invalid(
            format!("delivery_prob[{n}]"),
            format!("{} outside [0, 1]", delivery_prob[n]),
        ));
    }
    Ok(delivery_prob
        .iter()
        .zip(actions)
        .map(|(p, x)| instance.reward_value(*p, *x))
        .collect())
}

/// Empirical delivery ratios `P̂_n = Binomial(L, P_n) / L`.
pub fn sample_delivery_estimates<R: Rng + ?Sized>(
    instance: &SensorNetworkInstance,
    actions: &[f64],
    rng: &mut R,
) -> Result<Vec<f64>> {
    let exact = sensor_delivery_probability_exact(instance, actions)?;
    let packets = instance.packets_per_round;
    Ok(exact
        .into_iter()
        .map(|p| {
            let successes = Binomial::new(u64::from(packets), p)
                .expect("probability clamped to [0, 1]")
                .sample(rng);
            successes as f64 / f64::from(packets)
        })
        .collect())
}

/// Noisy reward feedback built from the packet-count estimate of `P_n`.
pub fn sensor_feedback_sample<R: Rng + ?Sized>(
    instance: &SensorNetworkInstance,
    actions: &[f64],
    rng: &mut R,
) -> Result<Vec<f64>> {
    let mut out = vec![0.0; actions.len()];
    Error::check_len("action profile", instance.n_sensors(), actions.len())?;
    instance.feedback_into(actions, rng, &mut out)?;
    Ok(out)
}

/// Erdős–Rényi sensor graph plus independent sink links, both with
/// probability `edge_prob`.
pub fn gen_sensor_network<R: Rng + ?Sized>(
    n_sensors: usize,
    edge_prob: f64,
    rng: &mut R,
) -> Result<SensorNetworkInstance> {
    if !(0.0..=1.0).contains(&edge_prob) {
        return Err(Error::invalid("edge_prob", format!("{edge_prob} outside [0, 1]")));
    }
    let mut adjacency = vec![vec![false; n_sensors]; n_sensors];
    for i in 0..n_sensors {
        for j in i + 1..n_sensors {
            let edge = rng.random_bool(edge_prob);
            adjacency[i][j] = edge;
            adjacency[j][i] = edge;
        }
    }
    let sink_links = (0..n_sensors).map(|_| rng.random_bool(edge_prob)).collect();
    SensorNetworkInstance::new(
        adjacency,
        sink_links,
        DEFAULT_PACKETS,
        DEFAULT_VALUE_SCALE,
        DEFAULT_OFFSET,
        DEFAULT_ENERGY_WEIGHT,
    )
}
