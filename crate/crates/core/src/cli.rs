//! Command-line front end. Exit codes: 0 when every assertion of the command
//! holds, 1 when a statistical test or assertion fails, 2 on errors
//! (malformed scenario, node proximity, I/O).

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};

use crate::error::{Error, Result};
use crate::io::{ensemble_csv, nr_trajectory_csv, sha256_hex, to_json, trajectory_csv, write_atomic, Manifest};
use crate::runner::{self, Check, LimitMode, Simulation};
use crate::scenario::Scenario;
use crate::verify;

pub const THREADS_ENV: &str = "BOHMFLOW_THREADS";

#[derive(Debug, Parser)]
#[command(name = "bohmflow", version, about = "Multi-time Bohmian trajectories for Klein-Gordon particles")]
pub struct Cli {
    /// Replaces every seed in the scenario.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Directory for all written files.
    #[arg(long, global = true, default_value = "out")]
    pub out_dir: PathBuf,
    /// Dotted-path override, e.g. `integrator.d_sigma=0.005`. Repeatable.
    #[arg(long = "override", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the guide equations and write the trajectory table.
    Simulate { scenario: String },
    /// Draw an ensemble from |psi|^2 over the sampler box.
    Sample { scenario: String },
    /// Push an equilibrium ensemble through the flow and test it against |psi|^2.
    Equivariance {
        scenario: String,
        /// Multiply the spatial velocity components (power check).
        #[arg(long, default_value_t = 1.0)]
        corrupt_velocities: f64,
    },
    /// Compare box probabilities in two Lorentz frames.
    Frames { scenario: String },
    /// Classical or non-relativistic limit scan.
    Limits {
        scenario: String,
        #[arg(long, value_enum)]
        mode: ModeArg,
    },
    /// Run the invariant suite, then the embedded assertions of the given
    /// scenarios (all bundled ones when none are given).
    Verify {
        scenarios: Vec<String>,
        /// Skip the scenario smoke suite.
        #[arg(long)]
        quick: bool,
    },
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum ModeArg {
    Classical,
    Nonrelativistic,
}

struct Run<'a> {
    cli: &'a Cli,
    outputs: Vec<PathBuf>,
}

impl Run<'_> {
    fn load(&self, spec: &str) -> Result<Scenario> {
        let mut s = Scenario::load(spec, &self.cli.overrides)?;
        if let Some(seed) = self.cli.seed {
            s.set_seed(seed);
        }
        Ok(s)
    }

    fn write(&mut self, name: &str, body: &str) -> Result<()> {
        let path = self.cli.out_dir.join(name);
        write_atomic(&path, body.as_bytes())?;
        self.outputs.push(path);
        Ok(())
    }
}

fn print_checks(checks: &[Check]) -> bool {
    for c in checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    checks.iter().all(|c| c.passed)
}

fn execute(run: &mut Run<'_>) -> Result<(i32, Option<Scenario>)> {
    let cli = run.cli;
    match &cli.command {
        Command::Simulate { scenario } => {
            let s = run.load(scenario)?;
            let stem = s.stem().to_string();
            match runner::simulate(&s)? {
                Simulation::Relativistic(rec) => {
                    run.write(&format!("{stem}.trajectory.csv"), &trajectory_csv(&rec, s.constants.c))?;
                    if let crate::dynamics::Termination::NodeHalt { sigma, particle, rho } = rec.termination {
                        let psi = s.relativistic()?;
                        eprintln!("trajectory stopped at sigma = {sigma}, partial table written");
                        return Err(Error::NodeProximity {
                            particle,
                            rho,
                            threshold: crate::wavefunction::WaveFunction::node_epsilon(&psi),
                        });
                    }
                    println!("{}: {} steps, sigma = {}", s.name, rec.states.len() - 1, rec.last().sigma);
                }
                Simulation::Nonrelativistic(rec) => {
                    run.write(&format!("{stem}.nr_trajectory.csv"), &nr_trajectory_csv(&rec))?;
                    if rec.termination != crate::dynamics::Termination::Completed {
                        return Err(Error::Integration {
                            sigma: rec.last().sigma,
                            detail: "non-relativistic run met a node".into(),
                        });
                    }
                    println!("{}: {} steps, sigma = {}", s.name, rec.states.len() - 1, rec.last().sigma);
                }
            }
            Ok((0, Some(s)))
        }
        Command::Sample { scenario } => {
            let s = run.load(scenario)?;
            let (ens, report) = runner::sample(&s)?;
            let stem = s.stem().to_string();
            run.write(&format!("{stem}.ensemble.csv"), &ensemble_csv(&ens, s.constants.c))?;
            run.write(&format!("{stem}.sample.json"), &to_json(&report))?;
            println!("{}: {} samples, acceptance rate {:.4}", s.name, report.n, report.acceptance_rate);
            Ok((0, Some(s)))
        }
        Command::Equivariance { scenario, corrupt_velocities } => {
            let s = run.load(scenario)?;
            let report = runner::equivariance(&s, *corrupt_velocities)?;
            run.write(&format!("{}.equivariance.json", s.stem()), &to_json(&report))?;
            println!(
                "{}: worst KS {:.5} vs {:.5}, edge loss {:.4}, chi-square p {:.3}: {}",
                s.name,
                report.statistic,
                report.critical,
                report.edge_loss,
                report.chi_square.p_value,
                if report.passed { "passed" } else { "failed" }
            );
            Ok((if report.passed { 0 } else { 1 }, Some(s)))
        }
        Command::Frames { scenario } => {
            let s = run.load(scenario)?;
            let report = runner::frames(&s)?;
            run.write(&format!("{}.frames.json", s.stem()), &to_json(&report))?;
            println!(
                "{}: P = {:.6}, P' = {:.6}, |P - P'| = {:.3e} vs {:.3e}: {}",
                s.name,
                report.probability,
                report.probability_boosted,
                report.statistic,
                report.critical,
                if report.passed { "passed" } else { "failed" }
            );
            Ok((if report.passed { 0 } else { 1 }, Some(s)))
        }
        Command::Limits { scenario, mode } => {
            let s = run.load(scenario)?;
            let mode = match mode {
                ModeArg::Classical => LimitMode::Classical,
                ModeArg::Nonrelativistic => LimitMode::Nonrelativistic,
            };
            let report = runner::limits(&s, mode)?;
            let tag = match mode {
                LimitMode::Classical => "classical",
                LimitMode::Nonrelativistic => "nonrelativistic",
            };
            run.write(&format!("{}.limits_{tag}.json", s.stem()), &to_json(&report))?;
            match &report {
                runner::LimitReport::Classical { report: r, .. } => println!(
                    "{}: Q exponent {:.3}, monotone {}",
                    s.name, r.quantum_ratio_exponent, r.monotone
                ),
                runner::LimitReport::Nonrelativistic { report: r, .. } => println!(
                    "{}: deviation exponent {:.3}, dT/dsigma exponent {:.3}",
                    s.name, r.scaling_exponent, r.decoupling_exponent
                ),
            }
            Ok((if report.passed() { 0 } else { 1 }, Some(s)))
        }
        Command::Verify { scenarios, quick } => {
            let mut checks = verify::invariant_suite()?;
            if !*quick {
                if scenarios.is_empty() {
                    checks.extend(verify::smoke_suite()?);
                } else {
                    for spec in scenarios {
                        checks.extend(runner::check_expectations(&run.load(spec)?)?);
                    }
                }
            }
            let ok = print_checks(&checks);
            run.write("verify.json", &to_json(&checks))?;
            Ok((if ok { 0 } else { 1 }, None))
        }
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Simulate { .. } => "simulate",
        Command::Sample { .. } => "sample",
        Command::Equivariance { .. } => "equivariance",
        Command::Frames { .. } => "frames",
        Command::Limits { .. } => "limits",
        Command::Verify { .. } => "verify",
    }
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    let start = Instant::now();
    let mut r = Run { cli, outputs: Vec::new() };
    let (code, scenario) = match execute(&mut r) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            (2, None)
        }
    };
    let Some(s) = scenario else { return code };
    let name = command_name(&cli.command);
    let manifest = Manifest {
        command: name.into(),
        scenario: s.name.clone(),
        scenario_sha256: sha256_hex(s.to_json().as_bytes()),
        seed: s.seed(),
        overrides: cli.overrides.clone(),
        version: env!("CARGO_PKG_VERSION").into(),
        outputs: r.outputs.clone(),
        exit_code: code,
        wall_time_seconds: start.elapsed().as_secs_f64(),
    };
    let path = cli.out_dir.join(format!("{}.{name}.manifest.json", s.stem()));
    if let Err(e) = write_atomic(Path::new(&path), to_json(&manifest).as_bytes()) {
        eprintln!("error: {e}");
        return 2;
    }
    code
}

/// Caps the global worker pool from `BOHMFLOW_THREADS`.
pub fn init_threads() -> Result<()> {
    let Ok(v) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Error::Config(format!("{THREADS_ENV} must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))
}

pub fn main() -> i32 {
    let cli = Cli::parse();
    if let Err(e) = init_threads() {
        eprintln!("error: {e}");
        return 2;
    }
    run(&cli)
}
