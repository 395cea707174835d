//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::fs;
use std::time::{Duration, Instant};

use rand::Rng;
use tugpeace::game::{GameAssignment, RewardField};
use tugpeace::harness::check::check_result;
use tugpeace::harness::experiment::is_balanced;
use tugpeace::harness::output::write_json;
use tugpeace::harness::{
    emit_csv, parse_config, prepare_instance, run_experiment, validate_tow, Condition, CrossCheckReport,
    ExperimentConfig,
};
use tugpeace::oracle::{check_feasibility, integrate_ode, power_control_equilibrium_linear, Feasibility, OdeOptions};
use tugpeace::rng::{stream, Stream};
use tugpeace::scenarios::{gen_sensor_network, sample_delivery_estimates, sensor_delivery_probability_exact};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn secs(d: Duration) -> String {
    format!("{:.1} s", d.as_secs_f64())
}

const C1_CONFIG: &str = r#"{
    "scenario": {"kind": "power_control", "n_players": 10, "filter": "feasible"},
    "targets": {"lambda": 0.05, "delta": 0.1},
    "run": {"realizations": 50, "seed": 1000}
}"#;

const C2_CONFIG: &str = r#"{
    "scenario": {"kind": "power_control", "n_players": 10, "filter": "feasible"},
    "algorithm": {"kind": "top"},
    "schedule": {"scale": 1.0, "offset": 100.0, "exponent": 1.0},
    "noise": {"kind": "none"},
    "targets": {"lambda": 0.05, "delta": 0.1},
    "run": {"horizon": 100000, "realizations": 100, "seed": 2000, "record_stride": 1000}
}"#;

const C3_CONFIG: &str = r#"{
    "scenario": {"kind": "power_control", "n_players": 4, "bound": 1.0, "filter": "feasible"},
    "algorithm": {"kind": "top"},
    "schedule": {"scale": 1.0, "offset": 10.0, "exponent": 0.9},
    "noise": {"kind": "truncated_gaussian", "sigma": 0.1, "bound": 0.4},
    "targets": {"lambda": [0.8, 1.2, 1.0, 0.9], "delta": 0.01},
    "run": {"horizon": 200000, "realizations": 100, "seed": 3000, "record_stride": 1000},
    "check": {"reward_tolerance": 0.05, "quiet_resets": 0.5, "pass_fraction": 0.95}
}"#;

const C4_CONFIG: &str = r#"{
    "scenario": {"kind": "power_control", "n_players": 50, "filter": "feasible", "max_draws": 100000},
    "algorithm": {"kind": "top"},
    "schedule": {"scale": 1.0, "offset": 100.0, "exponent": 1.0},
    "noise": {"kind": "gaussian", "sigma": 0.1},
    "targets": {"lambda": 0.1, "delta": 0.01},
    "run": {"horizon": 200000, "realizations": 100, "seed": 4000, "record_stride": 2000},
    "check": {"min_reward_floor": 0.08, "pass_fraction": 0.95}
}"#;

const C5_CONFIG: &str = r#"{
    "scenario": {"kind": "power_control",
                 "instance": {"kind": "power_control", "gains": [[1.0, 0.2], [0.2, 1.0]], "noise_floor": 0.1}},
    "algorithm": {"kind": "fdtop"},
    "schedule": {"scale": 1.0, "offset": 1000.0, "exponent": 1.0},
    "noise": {"kind": "gaussian", "sigma": 0.05},
    "targets": {"pinned": [0.5, 0.5]},
    "run": {"horizon": 200000, "realizations": 100, "seed": 5000, "record_stride": 1000},
    "check": {"action_tolerance": 0.01, "pass_fraction": 0.95}
}"#;

const C7_CONFIG: &str = r#"{
    "scenario": {"kind": "power_control", "n_players": 10, "n_games": 2, "filter": "split_only", "max_draws": 10000},
    "algorithm": {"kind": "meta_top", "rho": 0.2, "phi": 0.1},
    "schedule": {"scale": 1.0, "offset": 10.0, "exponent": 0.9},
    "noise": {"kind": "truncated_gaussian", "sigma": 0.1, "bound": 0.4},
    "targets": {"lambda": 0.6, "delta": 0.01},
    "run": {"horizon": 500000, "realizations": 100, "seed": 7000, "record_stride": 5000},
    "check": {"reward_floor_margin": 0.02, "quiet_switches": 0.5, "pass_fraction": 0.9}
}"#;

const C9_CONFIGS: [&str; 3] = [
    r#"{"scenario": {"kind": "power_control", "n_players": 10, "n_games": 2},
        "algorithm": {"kind": "meta_top"}, "run": {"seed": 9000}, "validate": {"points": 100}}"#,
    r#"{"scenario": {"kind": "task_allocation", "n_players": 10, "n_games": 2},
        "algorithm": {"kind": "meta_top"}, "run": {"seed": 9001}, "validate": {"points": 100}}"#,
    r#"{"scenario": {"kind": "sensor_network", "n_players": 10, "edge_prob": 0.2},
        "noise": {"kind": "binomial_feedback"}, "run": {"seed": 9002}, "validate": {"points": 100}}"#,
];

fn config(text: &str) -> ExperimentConfig {
    parse_config(text).expect("acceptance config parses")
}

fn condition_line(report: &CrossCheckReport, condition: Condition) -> (bool, String) {
    let c = report.condition(condition).expect("condition configured");
    (
        c.ok,
        format!(
            "{}/{} realizations (need {:.0}%)",
            c.passed,
            c.evaluated,
            c.required_fraction * 100.0
        ),
    )
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let cfg = config(C1_CONFIG);
    let mut worst = 0.0f64;
    let mut agree = 0;
    let mut draws = 0;
    for r in 0..cfg.run.realizations {
        let p = prepare_instance(&cfg, cfg.run.seed + r as u64).unwrap();
        draws += p.draws;
        let g = GameAssignment::single_game(10);
        let linear =
            power_control_equilibrium_linear(p.scenario.as_power_control().unwrap(), p.scenario.bounds(), &g, &p.targets)
                .unwrap();
        let ode = integrate_ode(&p.scenario, &g, &p.targets, &[0.0; 10], &OdeOptions::default()).unwrap();
        let diff = linear
            .profile
            .iter()
            .zip(&ode.terminal)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        worst = worst.max(diff);
        if diff <= 1e-6 {
            agree += 1;
        }
    }
    let elapsed = start.elapsed();
    outcome(
        agree == 50 && elapsed < Duration::from_secs(10),
        format!(
            "{agree}/50 instances agree within 1e-6 (max diff {worst:.2e}, {draws} draws), {}",
            secs(elapsed)
        ),
    )
}

fn criterion_2() -> Outcome {
    let cfg = config(C2_CONFIG);
    let result = run_experiment(&cfg).unwrap();
    let mut worst = 0.0f64;
    let mut within = 0;
    for r in &result.realizations {
        let s = &r.instance.scenario;
        let g = GameAssignment::single_game(s.n_players());
        let x_star = power_control_equilibrium_linear(s.as_power_control().unwrap(), s.bounds(), &g, &r.instance.targets)
            .unwrap()
            .profile;
        let err = x_star
            .iter()
            .zip(&r.trace.summary.final_actions)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        worst = worst.max(err);
        if err < 1e-3 && r.trace.summary.reset_count == 0 {
            within += 1;
        }
    }
    outcome(
        within == 100,
        format!("{within}/100 terminal errors < 1e-3 (max {worst:.2e})"),
    )
}

fn criteria_3_and_6() -> (Outcome, Outcome) {
    let start = Instant::now();
    let cfg = config(C3_CONFIG);
    let result = run_experiment(&cfg).unwrap();
    let report = check_result(&cfg, &result).unwrap();
    let elapsed = start.elapsed();
    let (ok3, line3) = condition_line(&report, Condition::RewardTolerance);
    let (ok6, line6) = condition_line(&report, Condition::QuietResets);
    let worst = report
        .realizations
        .iter()
        .map(|r| r.reward_error)
        .fold(0.0, f64::max);
    (
        outcome(
            ok3 && elapsed < Duration::from_secs(120),
            format!(
                "{line3} within 0.05 of targets (worst {worst:.3}, {} rejected draws), {}",
                result.rejected_draws(),
                secs(elapsed)
            ),
        ),
        outcome(ok6, format!("{line6} reset-free over the final half")),
    )
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let cfg = config(C4_CONFIG);
    let result = run_experiment(&cfg).unwrap();
    let report = check_result(&cfg, &result).unwrap();
    let (ok, line) = condition_line(&report, Condition::MinRewardFloor);
    let lowest = report
        .realizations
        .iter()
        .map(|r| r.tail_mean_min_reward)
        .fold(f64::INFINITY, f64::min);
    outcome(
        ok,
        format!(
            "{line} with tail min-player reward >= 0.08 (lowest {lowest:.4}; {} infeasible draws resampled), {}",
            result.rejected_draws(),
            secs(start.elapsed())
        ),
    )
}

fn criterion_5() -> Outcome {
    let cfg = config(C5_CONFIG);
    let result = run_experiment(&cfg).unwrap();
    let report = check_result(&cfg, &result).unwrap();
    let (ok, line) = condition_line(&report, Condition::ActionTolerance);
    let worst = report
        .realizations
        .iter()
        .filter_map(|r| r.action_error)
        .fold(0.0, f64::max);
    outcome(ok, format!("{line} within 0.01 of x* (worst {worst:.4})"))
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let cfg = config(C7_CONFIG);
    let result = run_experiment(&cfg).unwrap();
    let report = check_result(&cfg, &result).unwrap();
    let elapsed = start.elapsed();
    let (ok_a, line_a) = condition_line(&report, Condition::RewardFloor);
    let (ok_b, line_b) = condition_line(&report, Condition::QuietSwitches);

    // re-verify the construction on every realization's instance
    let mut construction_ok = true;
    let ode = OdeOptions::default();
    for r in &result.realizations {
        let s = &r.instance.scenario;
        for index in 0..1usize << 10 {
            let g = GameAssignment::from_index(index, 10, 2);
            let verdict = check_feasibility(s, &g, &r.instance.targets, &ode).unwrap();
            let all_in_one = g.as_slice().iter().all(|&k| k == g.as_slice()[0]);
            if (all_in_one && verdict != Feasibility::Infeasible) || (is_balanced(&g) && !verdict.is_feasible()) {
                construction_ok = false;
            }
        }
    }
    let last_switch = result
        .realizations
        .iter()
        .filter_map(|r| r.trace.summary.last_switch)
        .max()
        .unwrap_or(0);
    outcome(
        ok_a && ok_b && construction_ok && elapsed < Duration::from_secs(300),
        format!(
            "(a) {line_a} meet lambda - 0.02; (b) {line_b} switch-free over the final half; \
             construction verified over 1024 assignments: {construction_ok}; latest switch round {last_switch}; \
             {} rejected draws; {}",
            result.rejected_draws(),
            secs(elapsed)
        ),
    )
}

fn criterion_8() -> Outcome {
    let mut rng = stream(8000, Stream::Instance);
    let instance = gen_sensor_network(10, 0.2, &mut rng).unwrap();
    let packets = f64::from(instance.packets_per_round());
    let draws = 100_000;
    let mut probe = stream(8000, Stream::Probe);
    let mut noise = stream(8000, Stream::Noise);
    let mut worst_sigma = 0.0f64;
    let mut failures = 0;
    for _ in 0..20 {
        let x: Vec<f64> = (0..10).map(|_| probe.random::<f64>()).collect();
        let exact = sensor_delivery_probability_exact(&instance, &x).unwrap();
        let mut sum = vec![0.0; 10];
        for _ in 0..draws {
            for (s, p) in sum.iter_mut().zip(sample_delivery_estimates(&instance, &x, &mut noise).unwrap()) {
                *s += p;
            }
        }
        for n in 0..10 {
            let mean = sum[n] / draws as f64;
            let sd = (exact[n] * (1.0 - exact[n]) / (packets * draws as f64)).sqrt();
            let dev = (mean - exact[n]).abs();
            if dev > 4.0 * sd {
                failures += 1;
            }
            if sd > 0.0 {
                worst_sigma = worst_sigma.max(dev / sd);
            }
        }
    }
    outcome(
        failures == 0,
        format!("{failures}/200 estimates outside 4 sigma (largest deviation {worst_sigma:.2} sigma)"),
    )
}

fn criterion_9() -> Outcome {
    let mut lines = Vec::new();
    let mut pass = true;
    for text in C9_CONFIGS {
        let report = validate_tow(&config(text)).unwrap();
        pass &= report.clean;
        lines.push(format!(
            "{}: {} same-game / {} cross-game violations of {} / {} pairs",
            report.family,
            report.same_game_violations,
            report.cross_game_violations,
            report.same_game_pairs,
            report.cross_game_pairs
        ));
    }
    outcome(pass, lines.join("; "))
}

fn criterion_10() -> Outcome {
    let cfg = config(C1_CONFIG);
    let opts = OdeOptions {
        max_time: 20.0,
        record_every: 1,
        ..OdeOptions::default()
    };
    let mut ordered = 0;
    let mut compared = 0usize;
    let mut worst = f64::NEG_INFINITY;
    for r in 0..20u64 {
        let seed = 10_000 + r;
        let p = prepare_instance(&cfg, seed).unwrap();
        let g = GameAssignment::single_game(10);
        let mut rng = stream(seed, Stream::Probe);
        let upper: Vec<f64> = (0..10).map(|_| rng.random::<f64>()).collect();
        let low = integrate_ode(&p.scenario, &g, &p.targets, &[0.0; 10], &opts).unwrap();
        let high = integrate_ode(&p.scenario, &g, &p.targets, &upper, &opts).unwrap();
        let mut ok = true;
        for (a, b) in low.profiles.iter().zip(&high.profiles) {
            compared += 1;
            for (x, y) in a.iter().zip(b) {
                worst = worst.max(x - y);
                ok &= *x <= *y + 1e-12;
            }
        }
        ordered += usize::from(ok);
    }
    outcome(
        ordered == 20,
        format!("{ordered}/20 instance pairs stay ordered over {compared} shared grid points (max x - x' = {worst:.2e})"),
    )
}

fn criterion_11() -> Outcome {
    let root = tempfile::tempdir().unwrap();
    let mut identical = 0;
    let mut total = 0;
    for (name, text) in [
        ("c2", C2_CONFIG),
        ("c3", C3_CONFIG),
        ("c4", C4_CONFIG),
        ("c5", C5_CONFIG),
        ("c7", C7_CONFIG),
    ] {
        let mut cfg = config(text);
        cfg.run.realizations = 3;
        let mut outputs = Vec::new();
        for threads in [1, 3] {
            cfg.run.threads = Some(threads);
            let dir = root.path().join(format!("{name}-{threads}"));
            let result = run_experiment(&cfg).unwrap();
            let files = emit_csv(&dir, &result, true).unwrap();
            outputs.push(files.iter().map(|f| fs::read(f).unwrap()).collect::<Vec<_>>());
        }
        total += 1;
        identical += usize::from(outputs[0] == outputs[1]);
    }
    for text in C9_CONFIGS {
        let cfg = config(text);
        let a = root.path().join("validate-a.json");
        let b = root.path().join("validate-b.json");
        write_json(&a, &validate_tow(&cfg).unwrap()).unwrap();
        write_json(&b, &validate_tow(&cfg).unwrap()).unwrap();
        total += 1;
        identical += usize::from(fs::read(&a).unwrap() == fs::read(&b).unwrap());
    }
    outcome(
        identical == total,
        format!("{identical}/{total} reruns byte-identical (1 vs 3 worker threads)"),
    )
}

fn main() {
    let mut results: Vec<(&str, Outcome)> = Vec::new();
    let mut report = |label: &'static str, o: Outcome| {
        println!("{} {label}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((label, o));
    };
    report("criterion 1 (linear vs ODE oracle)", criterion_1());
    report("criterion 2 (noiseless ToP exactness)", criterion_2());
    let (c3, c6) = criteria_3_and_6();
    report("criterion 3 (four-player QoS targets)", c3);
    report("criterion 4 (fifty players, min-player reward)", criterion_4());
    report("criterion 5 (minimal equilibrium selection)", criterion_5());
    report("criterion 6 (finitely many resets)", c6);
    report("criterion 7 (Meta-ToP convergence and finite switching)", criterion_7());
    report("criterion 8 (sensor feedback unbiasedness)", criterion_8());
    report("criterion 9 (ToW sign sweep)", criterion_9());
    report("criterion 10 (monotone ODE flow)", criterion_10());
    report("criterion 11 (determinism)", criterion_11());

    let failed: Vec<&str> = results.iter().filter(|(_, o)| !o.pass).map(|(l, _)| *l).collect();
    println!(
        "acceptance: {}/{} criteria passed",
        results.len() - failed.len(),
        results.len()
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
