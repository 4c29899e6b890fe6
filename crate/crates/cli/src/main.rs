//! `clubx`: clear exchange-club instances from the command line.
//!
//! Exit codes: 0 success, 1 rejected (failed validation or verification),
//! 2 usage error, 3 invalid input file, 4 time limit hit before optimality
//! was proven (the best solution found is still written).

mod io;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use clubx_core::clearing::{limited_horizon, solve_uncapped, FrameTemplate};
use clubx_core::frames::Frame;
use clubx_core::gadgets::{check_reduction, VerifyError};
use clubx_core::gen::{
    gen_master_graph, mean_improvement, run_experiment, sample_pool_with, thin_edges, write_csv,
    ExperimentConfig, GenConfig, MasterGraph,
};
use clubx_core::rational::Pretty;
use clubx_core::*;
use io::{invalid, read_json, write_json, Invalid};
use serde::Serialize;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(
    name = "clubx",
    version,
    about = "Exact clearing for kidney exchange clubs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Solve {
    /// Where to write the JSON result.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Solver time limit in seconds.
    #[arg(long, default_value_t = 300.0)]
    time_limit: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Best matching with no frame caps.
    SolveUncapped {
        #[arg(long)]
        instance: PathBuf,
        #[command(flatten)]
        solve: Solve,
    },
    /// Best schedule over a frame DAG.
    SolveCapped {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        frames: PathBuf,
        #[command(flatten)]
        solve: Solve,
    },
    /// Cycle and chain packing on a classic pair/altruist pool.
    SolveStandard {
        #[arg(long)]
        pool: PathBuf,
        #[arg(long, default_value_t = 3)]
        cycle_cap: usize,
        #[arg(long, default_value_t = 4)]
        chain_cap: usize,
        #[command(flatten)]
        solve: Solve,
    },
    /// Repeated short-horizon solves with debt updates between rounds.
    Horizon {
        #[arg(long)]
        instance: PathBuf,
        /// Transplants allowed per frame.
        #[arg(long)]
        cap: u32,
        /// Frames solved per round.
        #[arg(long)]
        horizon: usize,
        #[arg(long, default_value_t = 100)]
        max_rounds: usize,
        #[arg(long, default_value_t = 1.0)]
        discount: f64,
        #[command(flatten)]
        solve: Solve,
    },
    /// Sample a synthetic club instance.
    Gen {
        /// Generator settings; defaults apply to missing fields.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 50)]
        pool_size: usize,
        #[arg(long)]
        output: PathBuf,
        /// Also write the single-donor pool.
        #[arg(long)]
        standard: Option<PathBuf>,
    },
    /// Turn a set-packing instance into a club instance.
    ReduceSp {
        #[arg(long)]
        sp: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Check the set-packing reduction against brute force.
    VerifySp {
        #[arg(long)]
        sp: PathBuf,
        #[arg(long, default_value_t = 300.0)]
        time_limit: f64,
    },
    /// Run the synthetic sweep and write one CSV row per cell.
    Experiment {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the generator seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        output: PathBuf,
    },
    /// Check a schedule against an instance and frames.
    Validate {
        #[arg(long, conflicts_with = "pool", required_unless_present = "pool")]
        instance: Option<PathBuf>,
        /// A classic pool, embedded as single-pair clubs.
        #[arg(long)]
        pool: Option<PathBuf>,
        /// Defaults to the frames stored with the schedule, else one frame.
        #[arg(long)]
        frames: Option<PathBuf>,
        /// A schedule, or the output of any solve command.
        #[arg(long)]
        schedule: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::PerFrame)]
        mode: Mode,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    PerFrame,
    AllLinearizations,
}

impl From<Mode> for ValidationMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::PerFrame => ValidationMode::PerFrame,
            Mode::AllLinearizations => ValidationMode::AllLinearizations,
        }
    }
}

enum Outcome {
    Done,
    Rejected,
    TimedOut,
}

impl Outcome {
    fn from_optimal(optimal: bool) -> Self {
        if optimal {
            Outcome::Done
        } else {
            Outcome::TimedOut
        }
    }
}

#[derive(Serialize)]
struct SolveOutput<'a> {
    version: &'static str,
    command: &'static str,
    optimal: bool,
    objective: f64,
    exact_objective: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    upper_bound: Option<f64>,
    schedule: &'a Schedule,
    #[serde(skip_serializing_if = "Option::is_none")]
    frames: Option<&'a FrameDag>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rounds: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cycles: Option<&'a [Vec<usize>]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    chains: Option<&'a [Vec<usize>]>,
}

impl<'a> SolveOutput<'a> {
    fn new(command: &'static str, optimal: bool, exact: &Rational, schedule: &'a Schedule) -> Self {
        SolveOutput {
            version: VERSION,
            command,
            optimal,
            objective: schedule.objective,
            exact_objective: Pretty(exact).to_string(),
            upper_bound: None,
            schedule,
            frames: None,
            rounds: None,
            cycles: None,
            chains: None,
        }
    }

    fn finish(&self, output: Option<&PathBuf>, started: Instant) -> Result<Outcome> {
        if let Some(path) = output {
            write_json(path, self)?;
        }
        let status = if self.optimal { "optimal" } else { "timeout" };
        println!(
            "{} objective={} status={status} time={:.3}s",
            self.command,
            self.exact_objective,
            started.elapsed().as_secs_f64()
        );
        Ok(Outcome::from_optimal(self.optimal))
    }
}

fn seconds(limit: f64) -> Result<Duration> {
    Duration::try_from_secs_f64(limit).map_err(|_| invalid(format!("bad time limit {limit}")))
}

fn load_instance(path: &PathBuf) -> Result<Instance> {
    let instance: Instance = read_json(path)?;
    let report = validate_instance(&instance);
    if !report.is_empty() {
        return Err(invalid(format!(
            "{}: invalid instance\n{report}",
            path.display()
        )));
    }
    Ok(instance)
}

fn load_pool(path: &PathBuf) -> Result<StandardPool> {
    read_json(path)
}

/// Solver errors caused by bad input map to exit code 3.
fn classify(err: ClearingError) -> anyhow::Error {
    match err {
        ClearingError::InvalidInstance(_)
        | ClearingError::Frame(_)
        | ClearingError::InvalidSchedule(_) => invalid(err.to_string()),
        other => other.into(),
    }
}

fn run(command: Command) -> Result<Outcome> {
    let started = Instant::now();
    match command {
        Command::SolveUncapped { instance, solve } => {
            let inst = load_instance(&instance)?;
            let m = solve_uncapped(&inst, seconds(solve.time_limit)?).map_err(classify)?;
            let schedule = m.to_schedule(FrameId(1));
            let mut out =
                SolveOutput::new("solve-uncapped", m.optimal, &m.exact_objective, &schedule);
            out.upper_bound = m.upper_bound.filter(|_| !m.optimal);
            out.finish(solve.output.as_ref(), started)
        }
        Command::SolveCapped {
            instance,
            frames,
            solve,
        } => {
            let inst = load_instance(&instance)?;
            let dag: FrameDag = read_json(&frames)?;
            let sol = solve_capped(&inst, &dag, seconds(solve.time_limit)?).map_err(classify)?;
            let mut out = SolveOutput::new(
                "solve-capped",
                sol.optimal,
                &sol.exact_objective,
                &sol.schedule,
            );
            out.upper_bound = sol.upper_bound.filter(|_| !sol.optimal);
            out.frames = Some(&dag);
            out.finish(solve.output.as_ref(), started)
        }
        Command::SolveStandard {
            pool,
            cycle_cap,
            chain_cap,
            solve,
        } => {
            let pool = load_pool(&pool)?;
            let graph = CompatGraph::from_pool(&pool).map_err(|e| invalid(e.to_string()))?;
            let sol = solve_picef(&graph, cycle_cap, chain_cap, seconds(solve.time_limit)?)?;
            let assignments = sol
                .structures(&graph)
                .into_iter()
                .flatten()
                .map(|(donor, patient)| Assignment {
                    donor,
                    patient,
                    frame: FrameId(1),
                })
                .collect();
            let schedule = Schedule {
                assignments,
                objective: sol.objective,
            };
            let mut out = SolveOutput::new(
                "solve-standard",
                sol.optimal,
                &sol.exact_objective,
                &schedule,
            );
            out.cycles = Some(&sol.cycles);
            out.chains = Some(&sol.chains);
            out.finish(solve.output.as_ref(), started)
        }
        Command::Horizon {
            instance,
            cap,
            horizon,
            max_rounds,
            discount,
            solve,
        } => {
            if cap == 0 || horizon == 0 || !(discount > 0.0 && discount.is_finite()) {
                return Err(invalid(
                    "cap and horizon must be positive and discount a positive number",
                ));
            }
            let inst = load_instance(&instance)?;
            let template = FrameTemplate { cap, discount };
            let r = limited_horizon(
                &inst,
                template,
                horizon,
                max_rounds,
                seconds(solve.time_limit)?,
            )
            .map_err(classify)?;
            let dag = r.frame_dag(template);
            let exact = rational::from_f64(r.schedule.objective).unwrap_or_default();
            let mut out = SolveOutput::new("horizon", r.optimal, &exact, &r.schedule);
            out.frames = Some(&dag);
            out.rounds = Some(r.rounds);
            out.finish(solve.output.as_ref(), started)
        }
        Command::Gen {
            config,
            seed,
            pool_size,
            output,
            standard,
        } => {
            let mut cfg: GenConfig = match &config {
                Some(path) => read_json(path)?,
                None => GenConfig::default(),
            };
            if let Some(s) = seed {
                cfg.seed = s;
            }
            cfg.validate().map_err(|e| invalid(e.to_string()))?;
            let master = gen_master_graph(&cfg)?;
            let thinned = MasterGraph {
                pool: thin_edges(&master.pool, cfg.edge_failure_rate, cfg.seed),
                ..master
            };
            let sample = sample_pool_with(&thinned, pool_size, &cfg, cfg.seed)
                .map_err(|e| invalid(e.to_string()))?;
            write_json(&output, &sample.instance)?;
            if let Some(path) = standard {
                write_json(&path, &sample.standard)?;
            }
            println!(
                "gen clubs={} edges={} multi_donor_clubs={} seed={} time={:.3}s",
                sample.instance.clubs().len(),
                sample.instance.edges().len(),
                sample.multi_donor_clubs,
                cfg.seed,
                started.elapsed().as_secs_f64()
            );
            Ok(Outcome::Done)
        }
        Command::ReduceSp { sp, output } => {
            let sp: SetPackingInstance = read_json(&sp)?;
            let inst = reduce_set_packing(&sp).map_err(|e| invalid(e.to_string()))?;
            write_json(&output, &inst)?;
            println!(
                "reduce-sp clubs={} edges={} M={}",
                inst.clubs().len(),
                inst.edges().len(),
                sp.big_m()
            );
            Ok(Outcome::Done)
        }
        Command::VerifySp { sp, time_limit } => {
            let sp: SetPackingInstance = read_json(&sp)?;
            match check_reduction(&sp, seconds(time_limit)?) {
                Ok(c) => {
                    let verdict = if c.holds() { "OK" } else { "FAIL" };
                    println!(
                        "objective={} M={} k={} {verdict}",
                        Pretty(&c.objective),
                        c.m,
                        c.k
                    );
                    Ok(if c.holds() {
                        Outcome::Done
                    } else {
                        Outcome::Rejected
                    })
                }
                Err(VerifyError::TimedOut) => {
                    println!("verify-sp status=timeout");
                    Ok(Outcome::TimedOut)
                }
                Err(VerifyError::Gadget(e)) => Err(invalid(e.to_string())),
                Err(e) => Err(e.into()),
            }
        }
        Command::Experiment {
            config,
            seed,
            jobs,
            output,
        } => {
            let mut cfg: ExperimentConfig = match &config {
                Some(path) => read_json(path)?,
                None => ExperimentConfig::default(),
            };
            if let Some(s) = seed {
                cfg.gen.seed = s;
            }
            cfg.validate().map_err(|e| invalid(e.to_string()))?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs.max(1))
                .build()
                .context("starting worker pool")?;
            let rows = pool.install(|| run_experiment(&cfg))?;
            let mut file = std::fs::File::create(&output)
                .with_context(|| format!("creating {}", output.display()))?;
            write_csv(&rows, &mut file)?;
            let fmt = |v: Option<f64>| {
                v.map(|p| format!("{p:.2}%"))
                    .unwrap_or_else(|| "n/a".into())
            };
            println!(
                "experiment rows={} mean_1don={} mean_2don={} unproven={} time={:.3}s",
                rows.len(),
                fmt(mean_improvement(&rows, false)),
                fmt(mean_improvement(&rows, true)),
                rows.iter().filter(|r| r.timed_out).count(),
                started.elapsed().as_secs_f64()
            );
            Ok(Outcome::Done)
        }
        Command::Validate {
            instance,
            pool,
            frames,
            schedule,
            mode,
        } => {
            let inst = match (instance, pool) {
                (Some(path), _) => load_instance(&path)?,
                (None, Some(path)) => {
                    from_standard(&load_pool(&path)?).map_err(|e| invalid(e.to_string()))?
                }
                (None, None) => unreachable!("clap requires one of --instance and --pool"),
            };
            let (sched, stored) = io::read_schedule(&schedule)?;
            let dag = match (frames, stored) {
                (Some(path), _) => read_json(&path)?,
                (None, Some(dag)) => dag,
                (None, None) => {
                    let cap = sched.len().max(1) as u32;
                    build_dag(vec![Frame::new(1, cap)], vec![]).expect("one frame is a DAG")
                }
            };
            let report = validate_schedule(&inst, &dag, &sched, mode.into());
            if report.is_empty() {
                println!("valid assignments={}", sched.len());
                Ok(Outcome::Done)
            } else {
                print!("{report}");
                println!("invalid violations={}", report.len());
                Ok(Outcome::Rejected)
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::Rejected) => ExitCode::from(1),
        Ok(Outcome::TimedOut) => ExitCode::from(4),
        Err(err) => {
            eprintln!("error: {err:#}");
            if err.is::<Invalid>() {
                ExitCode::from(3)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
