use std::fs::{self, File};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use robin_heat_cli::commands::{cmd_solve, cmd_steady, CliError, EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_OK};
use robin_heat_cli::config::{ConfigError, Overrides, Path as JsonPath, RunConfig};
use robin_heat_cli::presets;
use robin_heat_cli::verify::{cmd_verify, Check};

#[derive(Parser)]
#[command(name = "robin-heat", version, about = "Semilinear heat equation with Robin boundary conditions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Time-dependent solve; writes the `x,t,u` surface CSV.
    Solve(Common),
    /// Steady state of the limit problem; writes `x,u_inf`.
    Steady(Common),
    /// Audits a run and reports one block per check.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Comma-separated subset of error, decay, bound, contraction,
        /// energy, hypotheses. Defaults to every check the config supports.
        #[arg(long, value_delimiter = ',')]
        checks: Vec<Check>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Fdm,
    Galerkin,
}

#[derive(Clone, Copy, ValueEnum)]
enum StepperArg {
    Eigen,
    Be,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    config: Option<PathBuf>,
    /// Built-in configuration: manufactured, bound-demo or zero.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    #[arg(long)]
    nx: Option<u64>,
    #[arg(long)]
    dt: Option<f64>,
    /// Final time, replaces `problem.T`.
    #[arg(long)]
    tmax: Option<f64>,
    #[arg(long, value_enum)]
    stepper: Option<StepperArg>,
    /// CSV destination; stdout when neither this nor `output.csv` is set.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON report destination.
    #[arg(long)]
    report: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> Result<RunConfig, CliError> {
        let text = match (&self.config, &self.preset) {
            (Some(path), _) => fs::read_to_string(path).map_err(CliError::io(path.display().to_string()))?,
            (None, Some(name)) => presets::preset(name)
                .ok_or_else(|| {
                    ConfigError::new(
                        &JsonPath::root(),
                        format!("unknown preset `{name}`, expected one of {}", presets::NAMES.join(", ")),
                    )
                })?
                .to_string(),
            (None, None) => unreachable!("clap requires --config or --preset"),
        };
        let overrides = Overrides {
            method: self.method.map(|m| match m {
                MethodArg::Fdm => "fdm".to_string(),
                MethodArg::Galerkin => "galerkin".to_string(),
            }),
            nx: self.nx,
            dt: self.dt,
            tmax: self.tmax,
            stepper: self.stepper.map(|s| match s {
                StepperArg::Eigen => "eigen".to_string(),
                StepperArg::Be => "be".to_string(),
            }),
            out: self.out.clone(),
        };
        let mut cfg = RunConfig::parse(&text, &overrides)?;
        if self.report.is_some() {
            cfg.output.report = self.report.clone();
        }
        Ok(cfg)
    }
}

fn create(path: &Path) -> Result<File, CliError> {
    File::create(path).map_err(CliError::io(path.display().to_string()))
}

/// Writes the CSV through `produce`, to the configured file or stdout.
/// Returns whether stdout was used.
fn with_csv<T>(
    cfg: &RunConfig,
    produce: impl FnOnce(&RunConfig, &mut dyn Write) -> Result<T, CliError>,
) -> Result<(T, bool), CliError> {
    match &cfg.output.csv {
        Some(path) => {
            let mut file = create(path)?;
            Ok((produce(cfg, &mut file)?, false))
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            Ok((produce(cfg, &mut lock)?, true))
        }
    }
}

/// Report goes to its own file, else to whichever stream the CSV left free.
fn emit_report(cfg: &RunConfig, report: &impl Serialize, csv_on_stdout: bool) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(report).expect("reports serialize");
    text.push('\n');
    match &cfg.output.report {
        Some(path) => create(path)?
            .write_all(text.as_bytes())
            .map_err(CliError::io(path.display().to_string())),
        None if csv_on_stdout => io::stderr().write_all(text.as_bytes()).map_err(CliError::io("stderr")),
        None => io::stdout().write_all(text.as_bytes()).map_err(CliError::io("stdout")),
    }
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Solve(common) => {
            let cfg = common.load()?;
            let (report, on_stdout) = with_csv(&cfg, cmd_solve)?;
            emit_report(&cfg, &report, on_stdout)?;
            Ok(EXIT_OK)
        }
        Command::Steady(common) => {
            let cfg = common.load()?;
            let (report, on_stdout) = with_csv(&cfg, cmd_steady)?;
            emit_report(&cfg, &report, on_stdout)?;
            Ok(EXIT_OK)
        }
        Command::Verify { common, checks } => {
            let cfg = common.load()?;
            let checks = if checks.is_empty() { Check::feasible(&cfg) } else { checks };
            let report = cmd_verify(&cfg, &checks)?;
            emit_report(&cfg, &report, false)?;
            Ok(if report.passed { EXIT_OK } else { EXIT_CHECK_FAILED })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG as u8 } else { EXIT_OK as u8 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("robin-heat: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
