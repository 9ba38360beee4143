//! `rdcbf`: scenario runs, Monte-Carlo benchmarks and geometry fuzzing.
//!
//! Exit codes: 0 success, 1 goal not reached without a violation or an
//! output failure, 2 safety violation or fuzz failure, 3 configuration error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;
use rdcbf_core::geometry::oracle;
use rdcbf_core::io::write_atomic;
use rdcbf_core::safety::Mode;
use rdcbf_core::sim::{monte_carlo, run, Aggregate, RunOverrides, Scenario, SimError};

const EXIT_INCOMPLETE: u8 = 1;
const EXIT_VIOLATION: u8 = 2;
const EXIT_CONFIG: u8 = 3;

#[derive(Parser)]
#[command(name = "rdcbf", version, about = "Robust dynamic CBF safety filter: simulation and benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write the CSV log and JSON summary.
    Run(RunArgs),
    /// Monte-Carlo batch over seeds and modes.
    Bench(BenchArgs),
    /// Compare the exact distance queries against a brute-force reference.
    FuzzGeometry(FuzzArgs),
}

#[derive(Args, Clone)]
struct Overrides {
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    /// Planning period T, seconds.
    #[arg(long)]
    period: Option<f64>,
    /// Rows with h above this are pruned; `inf` keeps all.
    #[arg(long)]
    activation_h: Option<f64>,
    /// Duration cap, seconds.
    #[arg(long)]
    duration: Option<f64>,
    /// Measured obstacle velocity as a fraction of the true one.
    #[arg(long)]
    velocity_scale: Option<f64>,
    /// Disable the injected disturbance.
    #[arg(long)]
    no_disturbance: bool,
    #[arg(long)]
    seed: Option<u64>,
}

impl Overrides {
    fn to_run(&self) -> RunOverrides {
        RunOverrides {
            seed: self.seed,
            dt: self.dt,
            gamma: self.gamma,
            alpha: self.alpha,
            beta: self.beta,
            mu: self.mu,
            period: self.period,
            activation_h: self.activation_h,
            duration: self.duration,
            velocity_scale: self.velocity_scale,
            disturbance: self.no_disturbance.then_some(false),
            ..RunOverrides::default()
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// cbf, dcbf, r1cbf, r2cbf or rdcbf; the scenario's mode or rdcbf if absent.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Dump the QP and rows of every non-optimal cycle into <out>/qp_dumps.
    #[arg(long)]
    debug_qp_dumps: bool,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Comma-separated modes; `ablation` (default) or `all`.
    #[arg(long, default_value = "ablation")]
    mode: String,
    #[arg(long, default_value_t = 50)]
    runs: usize,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct FuzzArgs {
    /// Instances per query type.
    #[arg(long, default_value_t = 10_000)]
    runs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Optional JSON report path.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Config(String),
    Output(String),
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        if e.is_config() {
            Failure::Config(e.to_string())
        } else {
            Failure::Output(e.to_string())
        }
    }
}

fn parse_modes(s: &str) -> Result<Vec<Mode>, Failure> {
    match s {
        "ablation" => Ok(Mode::ABLATION.to_vec()),
        "all" => Ok(Mode::ALL.to_vec()),
        _ => s.split(',').map(|m| m.trim().parse().map_err(|e: rdcbf_core::safety::SafetyError| Failure::Config(e.to_string()))).collect(),
    }
}

fn load(path: &Path) -> Result<Scenario, Failure> {
    Ok(Scenario::from_path(path)?)
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let bytes = serde_json::to_vec_pretty(value).map_err(|e| Failure::Output(e.to_string()))?;
    write_atomic(path, &bytes).map_err(|e| Failure::Output(format!("{}: {e}", path.display())))
}

fn cmd_run(args: &RunArgs) -> Result<u8, Failure> {
    let scenario = load(&args.scenario)?;
    let mode = match &args.mode {
        Some(m) => parse_modes(m)?.into_iter().next().ok_or_else(|| Failure::Config("empty mode".into()))?,
        None => scenario.mode.unwrap_or(Mode::Rdcbf),
    };
    let mut o = args.overrides.to_run();
    o.keep_series = true;
    if args.debug_qp_dumps {
        o.debug_dir = Some(args.out.join("qp_dumps"));
    }
    let record = run(&scenario, mode, &o)?;
    record.save(&args.out, "run")?;
    let s = &record.summary;
    println!(
        "{} {}: success={} reached_goal={} min_h={:.4} length={:.3} m time={:.3} s freq={:.1} Hz cycles={} relaxed={} failed={}",
        s.scenario,
        s.mode,
        s.success,
        s.reached_goal,
        s.min_h,
        s.trajectory_length,
        s.total_time,
        s.timing.mean_frequency_hz,
        s.cycles,
        s.relaxed_cycles,
        s.failed_cycles
    );
    Ok(if s.violated() {
        EXIT_VIOLATION
    } else if s.success {
        0
    } else {
        EXIT_INCOMPLETE
    })
}

fn print_table(aggs: &[Aggregate]) {
    println!("{:<8} {:>14} {:>10} {:>12} {:>12}", "mode", "frequency Hz", "success %", "violations", "mean min_h");
    for a in aggs {
        println!(
            "{:<8} {:>14.1} {:>10.1} {:>12} {:>12.4}",
            a.mode.as_str(),
            a.mean_frequency_hz,
            100.0 * a.success_rate,
            a.violations,
            a.mean_min_h
        );
    }
}

fn cmd_bench(args: &BenchArgs) -> Result<u8, Failure> {
    let scenario = load(&args.scenario)?;
    let modes = parse_modes(&args.mode)?;
    if args.runs == 0 {
        return Err(Failure::Config("--runs must be at least 1".into()));
    }
    let started = std::time::Instant::now();
    let result = monte_carlo(&scenario, &modes, args.runs, &args.overrides.to_run(), args.jobs)?;
    info!("batch finished in {:.1} s", started.elapsed().as_secs_f64());
    print_table(&result.aggregates);
    for a in &result.aggregates {
        write_json(&args.out.join(format!("{}_{}.json", a.scenario, a.mode)), a)?;
    }
    write_json(&args.out.join("bench.json"), &result)?;
    Ok(0)
}

fn cmd_fuzz(args: &FuzzArgs) -> Result<u8, Failure> {
    if args.runs == 0 {
        return Err(Failure::Config("--runs must be at least 1".into()));
    }
    let report = oracle::fuzz(args.runs, args.seed);
    println!("instances per query: {} (seed {})", report.instances, report.seed);
    println!("segment-segment max error: {:.3e}", report.segment_segment_max_error);
    println!("segment-rect    max error: {:.3e}", report.segment_rect_max_error);
    println!("tolerance: {:.1e} -> {}", report.tolerance, if report.passed() { "pass" } else { "FAIL" });
    if let Some(p) = &args.out {
        write_json(p, &report)?;
    }
    Ok(if report.passed() { 0 } else { EXIT_VIOLATION })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Bench(a) => cmd_bench(a),
        Command::FuzzGeometry(a) => cmd_fuzz(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Output(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_INCOMPLETE)
        }
    }
}
