//! `chainreg`: run catalog or file scenarios with any integrator and write CSV.

use chainreg::metrics::RotatingFrame;
use chainreg::run::{step_count, write_diagnostics_row, write_trajectory_rows, DIAGNOSTICS_HEADER, TRAJECTORY_HEADER};
use chainreg::scenario::resolve;
use chainreg::{run, Error, Frame, MethodId, RunConfig, StepConfig};
use clap::{CommandFactory, Parser, Subcommand};
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_USAGE: u8 = 2;
const EXIT_SOLVER: u8 = 3;
const EXIT_IO: u8 = 1;

#[derive(Parser)]
#[command(name = "chainreg", version, about = "Planar N-body runs with chain-regularized and reference integrators")]
#[command(after_help = "CHAINREG_SEED is reserved for future stochastic scenarios; all current runs are deterministic.")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a scenario and write the trajectory as CSV.
    Simulate(SimulateArgs),
    /// Print the built-in scenarios.
    ListScenarios,
}

#[derive(clap::Args)]
struct SimulateArgs {
    /// Catalog name or path to a scenario TOML file.
    #[arg(long)]
    scenario: String,
    /// rk4, si4, greenspan, dcrgnbp or drgnbp.
    #[arg(long, default_value = "dcrgnbp")]
    method: MethodId,
    /// Step size (defaults to the scenario's).
    #[arg(long)]
    dt: Option<f64>,
    /// Final time (defaults to the scenario's).
    #[arg(long = "t-final")]
    t_final: Option<f64>,
    /// Trajectory CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Diagnostics CSV path.
    #[arg(long)]
    diagnostics: Option<PathBuf>,
    /// inertial, body1 or omega1 (defaults to the scenario's).
    #[arg(long)]
    frame: Option<Frame>,
    /// Write every k-th record; the final record is always written.
    #[arg(long = "sample-every", default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    sample_every: u64,
    #[arg(long = "newton-tol")]
    newton_tol: Option<f64>,
    #[arg(long = "max-iter")]
    max_iter: Option<usize>,
}

/// Usage of the subcommand named on the command line, or of the whole tool.
fn usage() -> String {
    let mut cmd = Cli::command();
    cmd.build();
    let sub = std::env::args().nth(1).unwrap_or_default();
    match cmd.find_subcommand_mut(&sub) {
        Some(s) => s.render_usage().to_string(),
        None => cmd.render_usage().to_string(),
    }
}

fn usage_error(msg: String) -> ExitCode {
    eprintln!("error: {msg}\n\n{}", usage());
    ExitCode::from(EXIT_USAGE)
}

fn open(path: &Option<PathBuf>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn simulate(a: SimulateArgs) -> ExitCode {
    let sc = match resolve(&a.scenario) {
        Ok(sc) => sc,
        Err(e) => return usage_error(e.to_string()),
    };
    let dt = a.dt.unwrap_or(sc.default_dt);
    let t_final = a.t_final.unwrap_or(sc.default_t_final);
    let mut step = StepConfig::new(dt);
    if let Some(tol) = a.newton_tol {
        step.newton_tol = tol;
    }
    if let Some(it) = a.max_iter {
        step.newton_max_iter = it;
    }
    if let Err(e) = step.validate() {
        return usage_error(e.to_string());
    }
    if !(t_final.is_finite() && t_final >= sc.s0.t) {
        return usage_error(format!("--t-final {t_final} precedes the scenario start {}", sc.s0.t));
    }
    let frame = match RotatingFrame::new(a.frame.unwrap_or(sc.frame), &sc.s0) {
        Ok(f) => f,
        Err(e) => return usage_error(e.to_string()),
    };

    let (mut out, mut diag) = match (open(&a.out), a.diagnostics.as_ref().map(|p| File::create(p).map(BufWriter::new)).transpose()) {
        (Ok(o), Ok(d)) => (o, d),
        (Err(e), _) | (_, Err(e)) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_IO);
        }
    };

    let n = step_count(sc.s0.t, t_final, dt);
    let every = a.sample_every as usize;
    let mut io_err = writeln!(out, "{TRAJECTORY_HEADER}").err();
    if let Some(d) = diag.as_mut() {
        io_err = io_err.or(writeln!(d, "{DIAGNOSTICS_HEADER}").err());
    }
    let cfg = RunConfig { method: a.method, step, t_final };
    let result = run(&sc.sys, &sc.s0, &cfg, |r| {
        if io_err.is_some() || !(r.step % every == 0 || r.step == n) {
            return;
        }
        let mut w = || -> io::Result<()> {
            write_trajectory_rows(&mut out, &frame, r.state)?;
            if let Some(d) = diag.as_mut() {
                write_diagnostics_row(d, r.diagnostics)?;
            }
            Ok(())
        };
        io_err = w().err();
    });
    io_err = io_err.or(out.flush().err());
    if let Some(d) = diag.as_mut() {
        io_err = io_err.or(d.flush().err());
    }
    if let Some(e) = io_err {
        eprintln!("error: writing output: {e}");
        return ExitCode::from(EXIT_IO);
    }
    match result {
        Ok(s) => {
            eprintln!(
                "{} {} steps, max rel H error {:.3e}, max rel j error {:.3e}, max |l| {:.3e}, max |c| {:.3e}, rechains {}",
                a.method, s.steps, s.max_rel_err_h, s.max_rel_err_j, s.max_norm_l, s.max_norm_c, s.rechains
            );
            ExitCode::SUCCESS
        }
        Err(e @ Error::StepFailed { .. }) => {
            eprintln!("error: solver failed: {e}");
            ExitCode::from(EXIT_SOLVER)
        }
        Err(e) => usage_error(e.to_string()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            e.print().ok();
            if !e.use_stderr() {
                return ExitCode::SUCCESS;
            }
            if !e.to_string().contains("Usage:") {
                eprintln!("\n{}", usage());
            }
            return ExitCode::from(EXIT_USAGE);
        }
    };
    match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::ListScenarios => {
            for sc in chainreg::catalog() {
                println!(
                    "{:<18} N={} dt={} t_final={} frame={}  {}",
                    sc.name,
                    sc.sys.n(),
                    sc.default_dt,
                    sc.default_t_final,
                    sc.frame,
                    sc.description
                );
            }
            ExitCode::SUCCESS
        }
    }
}
