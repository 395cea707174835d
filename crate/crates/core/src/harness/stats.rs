//! Cross-realization summaries of recorded rounds.

use serde::{Deserialize, Serialize};

use crate::learner::Trace;

/// Linear-interpolation quantile of sorted data (`p` in `[0, 1]`).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty data");
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quartiles {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub mean: f64,
}

impl Quartiles {
    pub fn of(values: &[f64]) -> Self {
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Self {
            q1: quantile_sorted(&sorted, 0.25),
            median: quantile_sorted(&sorted, 0.5),
            q3: quantile_sorted(&sorted, 0.75),
            mean: values.iter().sum::<f64>() / values.len() as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Metric {
    /// `min_n u_n`, the most dissatisfied player.
    MinReward,
    /// `Σ_n x_n`.
    TotalAction,
    /// `u_n` of one player.
    Reward(usize),
}

impl Metric {
    pub fn name(&self) -> String {
        match self {
            Metric::MinReward => "min_reward".into(),
            Metric::TotalAction => "total_action".into(),
            Metric::Reward(n) => format!("reward_{n}"),
        }
    }

    fn of_round(&self, rows: &[crate::learner::TraceRow]) -> f64 {
        match self {
            Metric::MinReward => rows.iter().map(|r| r.reward_true).fold(f64::INFINITY, f64::min),
            Metric::TotalAction => rows.iter().map(|r| r.action).sum(),
            Metric::Reward(n) => rows[*n].reward_true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub t: u64,
    pub metric: Metric,
    pub stats: Quartiles,
}

/// Per recorded round and metric, quartiles and mean across traces. Rows are
/// ordered by round, then metric (`min_reward`, `total_action`, rewards by
/// player).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AggregateStats {
    pub rows: Vec<AggregateRow>,
}

impl AggregateStats {
    pub fn from_traces(traces: &[&Trace]) -> Self {
        let Some(first) = traces.first() else {
            return Self::default();
        };
        let n = first.n_players();
        let mut metrics = vec![Metric::MinReward, Metric::TotalAction];
        metrics.extend((0..n).map(Metric::Reward));
        let per_trace: Vec<Vec<&[crate::learner::TraceRow]>> = traces.iter().map(|t| t.rounds().collect()).collect();
        let n_rounds = per_trace.iter().map(Vec::len).min().unwrap_or(0);
        let mut rows = Vec::with_capacity(n_rounds * metrics.len());
        let mut values = vec![0.0; traces.len()];
        for round in 0..n_rounds {
            let t = per_trace[0][round][0].t;
            for metric in &metrics {
                for (v, rounds) in values.iter_mut().zip(&per_trace) {
                    *v = metric.of_round(rounds[round]);
                }
                rows.push(AggregateRow {
                    t,
                    metric: metric.clone(),
                    stats: Quartiles::of(&values),
                });
            }
        }
        Self { rows }
    }

    pub fn series(&self, metric: &Metric) -> impl Iterator<Item = &AggregateRow> {
        let metric = metric.clone();
        self.rows.iter().filter(move |r| r.metric == metric)
    }
}
