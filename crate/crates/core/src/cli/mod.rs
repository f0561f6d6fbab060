//! Scenario orchestration for the `peakon-lab` binary.
//!
//! Every scenario writes into the output directory:
//!
//! * `records.csv`: the time series of the scenario,
//! * `summary.json`: scalar results,
//! * `fields_t{t}.csv`: the final field (not for `verify`).
//!
//! Exit status: 0 success, 1 failed verification or goal not reached,
//! 2 configuration or I/O error, 3 breakdown where none was expected.

pub mod verify;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::Parser;
use serde::Serialize;

use crate::config::{load_config, Scenario, ScenarioConfig};
use crate::error::{Error, Result};
use crate::field::{uniform_grid, Profile, Side, Span};
use crate::io;
use crate::linear::solve_linear;
use crate::linear::h1_identity_rhs;
use crate::multipeakon::{mp_hamiltonian, mp_integrate, reconstruct, MultipeakonState};
use crate::nonlinear::{
    build_initial_data, instability_experiment_on, integrate, write_records, InitialDataSpec,
    IntegrateOptions, Mechanism,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Success = 0,
    Failed = 1,
    ConfigError = 2,
    Breakdown = 3,
}

impl Status {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "peakon-lab",
    version,
    about = "Peaked perturbations of the Camassa-Holm peakon: closed forms, \
             characteristic integration and self-checks"
)]
struct Args {
    /// JSON scenario configuration.
    #[arg(required_unless_present = "scenario")]
    config: Option<PathBuf>,

    /// Run a scenario with default settings instead of reading a file.
    #[arg(long, conflicts_with = "config")]
    scenario: Option<Scenario>,
}

/// Parses arguments, runs, and returns the process exit code.
pub fn main_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => Status::ConfigError.code(),
            };
        }
    };
    let config = match (&args.config, args.scenario) {
        (Some(path), _) => load_config(path),
        (None, Some(s)) => Ok(ScenarioConfig::defaults(s)),
        (None, None) => unreachable!("clap requires one of them"),
    };
    let status = config.and_then(|c| run(&c)).unwrap_or_else(|e| {
        eprintln!("error: {e}");
        match e {
            Error::Config(_) | Error::Io { .. } => Status::ConfigError,
            _ => Status::Failed,
        }
    });
    status.code()
}

pub fn run(config: &ScenarioConfig) -> Result<Status> {
    let out = config.effective_output_dir();
    std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    match config.scenario {
        Scenario::Verify => run_verify(&out),
        Scenario::Linear => run_linear(config, &out),
        Scenario::Nonlinear => run_nonlinear(config, &out),
        Scenario::Instability => run_instability(config, &out),
        Scenario::Multipeakon => run_multipeakon(config, &out),
    }
}

fn fields_path(out: &Path, t: f64) -> PathBuf {
    out.join(format!("fields_t{t:.4}.csv"))
}

fn write_profile_csv(path: &Path, profile: &Profile) -> Result<()> {
    let mut w = io::csv_writer(path)?;
    w.write_record(["position", "value", "slope_left", "slope_right"])?;
    for i in 0..profile.len() {
        w.write_record([
            io::fmt17(profile.positions()[i]),
            io::fmt17(profile.values()[i]),
            io::fmt17(profile.slope_left()[i]),
            io::fmt17(profile.slope_right()[i]),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Serialize)]
struct VerifySummary<'a> {
    scenario: &'static str,
    passed: bool,
    checks: &'a [verify::Check],
}

fn run_verify(out: &Path) -> Result<Status> {
    let checks = verify::run_all()?;
    println!("{:<40} {:>12} {:>10}  status", "check", "measured", "tolerance");
    for c in &checks {
        println!(
            "{:<40} {:>12.3e} {:>10.0e}  {}",
            c.name,
            c.measured,
            c.tolerance,
            if c.passed { "PASS" } else { "FAIL" }
        );
    }
    let passed = checks.iter().all(|c| c.passed);
    io::write_json(
        &out.join("summary.json"),
        &VerifySummary {
            scenario: "verify",
            passed,
            checks: &checks,
        },
    )?;
    Ok(if passed { Status::Success } else { Status::Failed })
}

#[derive(Serialize)]
struct LinearSummary {
    scenario: &'static str,
    t_end: f64,
    alpha: f64,
    l1_norm_positive: f64,
    h1_pos_measured: f64,
    h1_pos_predicted: f64,
    h1_neg_measured: f64,
    h1_neg_predicted: f64,
    max_relative_mismatch: f64,
}

fn run_linear(config: &ScenarioConfig, out: &Path) -> Result<Status> {
    let grid = config.grid()?;
    let spec = InitialDataSpec {
        epsilon: config.epsilon,
        mu: config.mu,
    };
    let v0 = build_initial_data(spec, &grid)?;
    let samples = ((config.t_end / 0.1).round() as usize).max(1);

    let path = out.join("records.csv");
    let mut w = io::csv_writer(&path)?;
    w.write_record([
        "t",
        "h1_pos_measured",
        "h1_pos_predicted",
        "h1_neg_measured",
        "h1_neg_predicted",
    ])?;
    let mut worst: f64 = 0.0;
    let mut last = None;
    for k in 0..=samples {
        let t = config.t_end * k as f64 / samples as f64;
        let state = solve_linear(&v0, t)?;
        let row = [
            state.h1_norm_sq(Side::Positive)?,
            h1_identity_rhs(&v0, t, Side::Positive)?,
            state.h1_norm_sq(Side::Negative)?,
            h1_identity_rhs(&v0, t, Side::Negative)?,
        ];
        worst = worst
            .max(((row[0] - row[1]) / row[1]).abs())
            .max(((row[2] - row[3]) / row[3]).abs());
        let mut rec = vec![io::fmt17(t)];
        rec.extend(row.iter().map(|&x| io::fmt17(x)));
        w.write_record(&rec)?;
        last = Some((state, row));
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    let (state, row) = last.expect("at least one sample");
    state.write_csv(&fields_path(out, config.t_end))?;
    io::write_json(
        &out.join("summary.json"),
        &LinearSummary {
            scenario: "linear",
            t_end: config.t_end,
            alpha: state.alpha,
            l1_norm_positive: v0.l1_norm(Span::Positive),
            h1_pos_measured: row[0],
            h1_pos_predicted: row[1],
            h1_neg_measured: row[2],
            h1_neg_predicted: row[3],
            max_relative_mismatch: worst,
        },
    )?;
    println!(
        "linear: t = {}, |v|^2_H1(0,inf) = {:.6e} (predicted {:.6e}), worst mismatch {:.2e}",
        config.t_end, row[0], row[1], worst
    );
    Ok(Status::Success)
}

#[derive(Serialize)]
struct RunSummary {
    scenario: &'static str,
    t0: Option<f64>,
    tau: f64,
    triggered: bool,
    mechanism: Option<&'static str>,
    t_break: Option<f64>,
    epsilon: f64,
    mu: f64,
    t_final: f64,
    initial_h1: f64,
    stability_hypothesis_holds: bool,
    max_relative_energy_drift: f64,
    max_h1_v: f64,
    tail_magnitude: f64,
}

fn options(config: &ScenarioConfig) -> IntegrateOptions {
    IntegrateOptions {
        dt: config.dt,
        t_end: config.t_end,
        ..IntegrateOptions::default()
    }
}

fn energy_drift(records: &[crate::nonlinear::RunRecord]) -> f64 {
    let e0 = records[0].energy;
    records
        .iter()
        .map(|r| ((r.energy - e0) / e0).abs())
        .fold(0.0, f64::max)
}

fn run_nonlinear(config: &ScenarioConfig, out: &Path) -> Result<Status> {
    let spec = InitialDataSpec {
        epsilon: config.epsilon,
        mu: config.mu,
    };
    let v0 = build_initial_data(spec, &config.grid()?)?;
    let initial_h1 = v0.h1_norm_sq(Span::Whole).sqrt();
    let run = integrate(&v0, &options(config))?;
    let last = run.final_state();
    write_records(&out.join("records.csv"), &run.records)?;
    last.to_field()?.write_csv(&fields_path(out, last.t))?;
    let summary = RunSummary {
        scenario: "nonlinear",
        t0: run.records.iter().find(|r| r.sup_vx > 1.0).map(|r| r.t),
        tau: spec.tau(),
        triggered: run.report.triggered,
        mechanism: run.report.mechanism.map(Mechanism::as_str),
        t_break: run.report.t_break,
        epsilon: spec.epsilon,
        mu: spec.mu,
        t_final: last.t,
        initial_h1,
        stability_hypothesis_holds: initial_h1 < (spec.epsilon / 3.0).powi(4),
        max_relative_energy_drift: energy_drift(&run.records),
        max_h1_v: run.records.iter().map(|r| r.h1_v).fold(0.0, f64::max),
        tail_magnitude: last.tail_magnitude(),
    };
    io::write_json(&out.join("summary.json"), &summary)?;
    println!(
        "nonlinear: reached t = {:.4}, min slope {:.4}, breakdown: {}",
        last.t,
        run.report.min_slope,
        summary.mechanism.unwrap_or("none")
    );
    Ok(if run.report.triggered {
        Status::Breakdown
    } else {
        Status::Success
    })
}

fn run_instability(config: &ScenarioConfig, out: &Path) -> Result<Status> {
    let spec = InitialDataSpec {
        epsilon: config.epsilon,
        mu: config.mu,
    };
    let outcome = instability_experiment_on(spec, &config.grid()?, &options(config))?;
    let last = &outcome.final_state;
    write_records(&out.join("records.csv"), &outcome.records)?;
    last.to_field()?.write_csv(&fields_path(out, last.t))?;
    let summary = RunSummary {
        scenario: "instability",
        t0: outcome.t0,
        tau: outcome.tau,
        triggered: outcome.report.triggered,
        mechanism: outcome.report.mechanism.map(Mechanism::as_str),
        t_break: outcome.report.t_break,
        epsilon: spec.epsilon,
        mu: spec.mu,
        t_final: last.t,
        initial_h1: outcome.initial_h1,
        stability_hypothesis_holds: outcome.stability_hypothesis_holds,
        max_relative_energy_drift: energy_drift(&outcome.records),
        max_h1_v: outcome.records.iter().map(|r| r.h1_v).fold(0.0, f64::max),
        tail_magnitude: outcome.tail_magnitude,
    };
    io::write_json(&out.join("summary.json"), &summary)?;
    match outcome.t0 {
        Some(t0) => println!(
            "instability: sup|v_x| > 1 first at t0 = {t0:.4} (tau = {:.4})",
            outcome.tau
        ),
        None => println!(
            "instability: goal not reached by t = {:.4} (breakdown: {})",
            last.t,
            summary.mechanism.unwrap_or("none")
        ),
    }
    let reached = outcome.t0.is_some()
        || outcome.report.mechanism == Some(Mechanism::SlopeUnbounded);
    Ok(if reached { Status::Success } else { Status::Failed })
}

/// The built-in two-peakon state: a taller, faster peakon behind a shorter one.
pub fn builtin_multipeakon() -> MultipeakonState {
    MultipeakonState::new(vec![-5.0, 0.0], vec![2.0, 1.0]).expect("valid built-in state")
}

#[derive(Serialize)]
struct MultipeakonSummary {
    scenario: &'static str,
    t_final: f64,
    hamiltonian_initial: f64,
    hamiltonian_final: f64,
    sum_m_initial: f64,
    sum_m_final: f64,
    collision: Option<f64>,
}

fn run_multipeakon(config: &ScenarioConfig, out: &Path) -> Result<Status> {
    let state0 = builtin_multipeakon();
    let trajectory = mp_integrate(&state0, config.t_end, config.dt)?;
    trajectory.write_csv(&out.join("records.csv"))?;
    let last = trajectory.last();
    let t_final = *trajectory.times.last().expect("non-empty");
    let grid: Vec<f64> = uniform_grid(config.domain_half_width, config.nodes)?
        .into_iter()
        .map(|x| x + t_final)
        .collect();
    write_profile_csv(&fields_path(out, t_final), &reconstruct(last, &grid)?)?;
    io::write_json(
        &out.join("summary.json"),
        &MultipeakonSummary {
            scenario: "multipeakon",
            t_final,
            hamiltonian_initial: mp_hamiltonian(&state0),
            hamiltonian_final: mp_hamiltonian(last),
            sum_m_initial: state0.total_mass(),
            sum_m_final: last.total_mass(),
            collision: trajectory.collision.map(|c| c.t),
        },
    )?;
    println!(
        "multipeakon: t = {t_final:.4}, H drift {:.2e}",
        (mp_hamiltonian(last) - mp_hamiltonian(&state0)).abs()
    );
    Ok(if trajectory.collision.is_some() {
        Status::Breakdown
    } else {
        Status::Success
    })
}
