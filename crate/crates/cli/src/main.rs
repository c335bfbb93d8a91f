//! `atomxfer`: run transfer simulations, parameter sweeps and loss reports.
//!
//! Exit codes: 0 success, 1 configuration error, 2 numerical guard trip,
//! 3 I/O error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use atomxfer::config::load_scenario;
use atomxfer::output::{emit_fig3, emit_losses, emit_sweeps, loss_table, OutputFormat};
use atomxfer::scenario::{run_fig3, run_fig3_from, run_losses, run_sweep, Scenario, ScenarioKind};
use atomxfer::snapshot::load_state;
use atomxfer::{Error, OpticalSolver};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "atomxfer", version, about = "Atom-light-atom quantum state transfer simulator")]
struct Cli {
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single transfer and report its metrics.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Continue from a saved state file.
        #[arg(long, value_name = "FILE")]
        resume: Option<PathBuf>,
    },
    /// Run the configured parameter sweeps.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Worker threads for sweep points.
        #[arg(long, value_name = "N")]
        threads: Option<usize>,
    },
    /// Spontaneous-emission and phase-diffusion budget.
    Losses {
        #[command(flatten)]
        common: Common,
        /// Skip the integral form, which needs a full transfer run.
        #[arg(long)]
        no_integral: bool,
    },
    /// Parse and validate a configuration without running it.
    ValidateConfig {
        #[arg(long, value_name = "PATH")]
        config: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    /// Run configuration (TOML). The reference scenario when omitted.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, default_value = "all", value_parser = ["csv", "json", "svg", "all"])]
    format: String,
    /// Multiply grid points and divide the time step by N (a power of two).
    #[arg(long, value_name = "N", default_value_t = 1)]
    resolution_mult: usize,
    #[arg(long, value_parser = ["quasistatic", "dynamic"])]
    optical_solver: Option<String>,
}

impl Common {
    fn scenario(&self, default: ScenarioKind) -> Result<Scenario, Error> {
        let mut s = match &self.config {
            Some(path) => load_scenario(path)?,
            None => Scenario::reference(default),
        };
        if let Some(solver) = &self.optical_solver {
            s.integrator.optical_solver = solver.parse::<OpticalSolver>()?;
        }
        let s = s.with_resolution(self.resolution_mult)?;
        s.validate()?;
        Ok(s)
    }

    fn out_dir(&self, scenario: &Scenario) -> PathBuf {
        self.out
            .clone()
            .or_else(|| scenario.output_dir.clone())
            .unwrap_or_else(|| PathBuf::from("out").join(scenario.name.as_str()))
    }

    fn format(&self) -> Result<OutputFormat, Error> {
        self.format.parse()
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io { .. } | Error::Snapshot { .. } | Error::Serialization(_) => 3,
        e if e.is_numerical() => 2,
        _ => 1,
    }
}

fn print_written(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

fn simulate(common: &Common, resume: Option<&Path>) -> Result<(), Error> {
    let scenario = common.scenario(ScenarioKind::Fig3Transfer)?;
    let result = match resume {
        None => run_fig3(&scenario)?,
        Some(path) => {
            let (state, header) = load_state(path)?;
            let mut run = scenario.prepare()?;
            if state.psi.grid != run.grid {
                return Err(Error::Config(format!("{} was saved on a different grid", path.display())));
            }
            if state.t > run.t_final {
                return Err(Error::Config(format!("{} is already past the end of the run", path.display())));
            }
            run.state = state;
            run_fig3_from(&scenario, run, header.outflow, header.excited_integral)?
        }
    };
    let t = &result.transfer;
    println!("scenario       {}", scenario.name.as_str());
    println!("eta            {:.6}", t.eta);
    println!("T_q            {:.6}  (T_X {:.6}, T_Y {:.6})", t.t_q, t.t_x, t.t_y);
    println!("V_q            {:.6e}", t.v_q);
    println!("translation    {:.6e} m", t.translation_m);
    println!("final centroid {:.6e} m (receiver at {:.6e} m)", result.final_centroid, scenario.physical.trap.x_recv);
    println!("mode total     {:.9}", result.mode_total);
    println!("steps          {} (dt {:.4e} s, {:.2} s wall)", result.steps, result.dt, result.wall_time);
    if result.projection_flat {
        println!("warning: template projection maximum lies on the search-window edge");
    }
    print_written(&emit_fig3(&result, &scenario, &common.out_dir(&scenario), common.format()?)?);
    Ok(())
}

/// Returns the number of failed sweep points.
fn sweep(common: &Common, threads: Option<usize>) -> Result<usize, Error> {
    if threads == Some(0) {
        return Err(Error::Config("--threads must be at least 1".into()));
    }
    let scenario = common.scenario(ScenarioKind::SweepRabi)?;
    if scenario.sweeps.is_empty() {
        return Err(Error::Config("the configuration defines no [[sweep]] entries".into()));
    }
    let mut reports = Vec::new();
    for spec in &scenario.sweeps {
        let report = run_sweep(&scenario, spec, threads)?;
        println!("sweep {} ({} points)", spec.parameter.as_str(), report.points.len());
        println!("  {:>10} {:>10} {:>10} {:>12} {:>6} {:>8}", "value", "eta", "T_q", "V_q", "ok", "wall s");
        for p in &report.points {
            match &p.result {
                Some(r) => println!(
                    "  {:>10.4} {:>10.6} {:>10.6} {:>12.4e} {:>6} {:>8.1}",
                    p.parameter, r.eta, r.t_q, r.v_q, p.converged, p.wall_time
                ),
                None => println!("  {:>10.4} failed: {}", p.parameter, p.error.as_deref().unwrap_or("")),
            }
        }
        reports.push(report);
    }
    print_written(&emit_sweeps(&reports, &common.out_dir(&scenario), common.format()?)?);
    Ok(reports.iter().map(|r| r.failures()).sum())
}

fn losses(common: &Common, no_integral: bool) -> Result<(), Error> {
    let mut scenario = common.scenario(ScenarioKind::LossReport)?;
    if no_integral {
        scenario.losses.integral = false;
    }
    let report = run_losses(&scenario)?;
    print!("{}", loss_table(&report));
    print_written(&emit_losses(&report, &common.out_dir(&scenario), common.format()?)?);
    Ok(())
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Simulate { common, resume } => simulate(&common, resume.as_deref()).map(|_| 0),
        Command::Sweep { common, threads } => {
            let failed = sweep(&common, threads)?;
            if failed > 0 {
                eprintln!("{failed} sweep point(s) failed");
                Ok(2)
            } else {
                Ok(0)
            }
        }
        Command::Losses { common, no_integral } => losses(&common, no_integral).map(|_| 0),
        Command::ValidateConfig { config } => {
            let s = load_scenario(&config)?;
            println!("{}: valid {} configuration", config.display(), s.name.as_str());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
