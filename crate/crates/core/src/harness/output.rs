//! CSV emission. Reals are written with 17 significant digits.

use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};

use super::experiment::{ExperimentResult, Realization};
use super::stats::AggregateStats;
use crate::error::{Error, Result};

pub const TRACE_HEADER: [&str; 9] = [
    "run_id",
    "t",
    "player",
    "game",
    "action",
    "reward_true",
    "reward_observed",
    "reset",
    "switch",
];
pub const AGGREGATE_HEADER: [&str; 5] = ["t", "metric", "median", "q1", "q3"];
pub const MEANS_HEADER: [&str; 3] = ["t", "metric", "mean"];
pub const REALIZATION_HEADER: [&str; 11] = [
    "run_id",
    "seed",
    "draws",
    "reset_count",
    "last_reset",
    "switch_rounds",
    "player_switches",
    "last_switch",
    "tail_mean_min_reward",
    "max_abs_noise",
    "final_games",
];

pub fn real(v: f64) -> String {
    format!("{v:.16e}")
}

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

fn optional(v: Option<u64>) -> String {
    v.map(|t| t.to_string()).unwrap_or_default()
}

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(csv::Writer::from_writer(file))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn finish(mut w: csv::Writer<File>, path: &Path) -> Result<()> {
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// One row per recorded round and player, realizations in index order.
pub fn write_traces(path: &Path, realizations: &[Realization]) -> Result<()> {
    let mut w = writer(path)?;
    let err = csv_err(path);
    w.write_record(TRACE_HEADER).map_err(&err)?;
    for r in realizations {
        let run_id = r.index.to_string();
        for row in &r.trace.rows {
            w.write_record([
                run_id.as_str(),
                &row.t.to_string(),
                &row.player.to_string(),
                &row.game.to_string(),
                &real(row.action),
                &real(row.reward_true),
                &real(row.reward_observed),
                flag(row.reset),
                flag(row.switched),
            ])
            .map_err(&err)?;
        }
    }
    finish(w, path)
}

pub fn write_aggregates(path: &Path, stats: &AggregateStats) -> Result<()> {
    let mut w = writer(path)?;
    let err = csv_err(path);
    w.write_record(AGGREGATE_HEADER).map_err(&err)?;
    for row in &stats.rows {
        w.write_record([
            row.t.to_string(),
            row.metric.name(),
            real(row.stats.median),
            real(row.stats.q1),
            real(row.stats.q3),
        ])
        .map_err(&err)?;
    }
    finish(w, path)
}

pub fn write_means(path: &Path, stats: &AggregateStats) -> Result<()> {
    let mut w = writer(path)?;
    let err = csv_err(path);
    w.write_record(MEANS_HEADER).map_err(&err)?;
    for row in &stats.rows {
        w.write_record([row.t.to_string(), row.metric.name(), real(row.stats.mean)])
            .map_err(&err)?;
    }
    finish(w, path)
}

/// Per-realization counters and tail statistics.
pub fn write_realizations(path: &Path, realizations: &[Realization]) -> Result<()> {
    let mut w = writer(path)?;
    let err = csv_err(path);
    w.write_record(REALIZATION_HEADER).map_err(&err)?;
    for r in realizations {
        let s = &r.trace.summary;
        let games: Vec<String> = s.final_assignment.as_slice().iter().map(|g| g.to_string()).collect();
        w.write_record([
            r.index.to_string(),
            r.seed.to_string(),
            r.instance.draws.to_string(),
            s.reset_count.to_string(),
            optional(s.last_reset),
            s.switch_rounds.to_string(),
            s.player_switches.to_string(),
            optional(s.last_switch),
            real(s.tail_mean_min_reward),
            real(s.max_abs_noise),
            games.join(" "),
        ])
        .map_err(&err)?;
    }
    finish(w, path)
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut file = File::create(path).map_err(io)?;
    let text = serde_json::to_string_pretty(value).expect("report serializes");
    file.write_all(text.as_bytes()).map_err(io)?;
    file.write_all(b"\n").map_err(io)
}

/// Writes every CSV of an experiment into `dir` and returns the paths.
pub fn emit_csv(dir: &Path, result: &ExperimentResult, traces: bool) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut written = Vec::new();
    if traces {
        let p = dir.join("traces.csv");
        write_traces(&p, &result.realizations)?;
        written.push(p);
    }
    let p = dir.join("aggregates.csv");
    write_aggregates(&p, &result.aggregates)?;
    written.push(p);
    let p = dir.join("means.csv");
    write_means(&p, &result.aggregates)?;
    written.push(p);
    let p = dir.join("realizations.csv");
    write_realizations(&p, &result.realizations)?;
    written.push(p);
    Ok(written)
}
