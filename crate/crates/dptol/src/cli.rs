//! Command-line front end.
//!
//! Exit codes: 0 success, 1 interval only available as an infeasible
//! fallback, 2 input error, 3 numerical failure.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use dptol_core::{EmpiricalCdf, Error, RngStream};

use crate::config::{self, ExperimentConfig, MethodFields, SpecFields};
use crate::harness;
use crate::input;
use crate::manifest::{now_ms, Command, RunManifest, TableFormat};
use crate::potency;
use crate::report::FitReport;
use crate::table::{self, Format};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INFEASIBLE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Numeric(_) => EXIT_NUMERIC,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Convergence { .. } | Error::NoCrossing { .. } | Error::InvertedInterval { .. } => {
                CliError::Numeric(e.to_string())
            }
            _ => CliError::Input(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "dptol", version, about = "Dirichlet-process tolerance intervals")]
pub struct Cli {
    /// Worker threads for simulations [default: available cores]
    #[arg(long, global = true, env = "DPTOL_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Fit a tolerance interval to a data file
    Fit(FitArgs),
    /// Run a coverage simulation from a TOML config
    Simulate(SimulateArgs),
    /// Relative-potency case study on the bundled data
    Potency(PotencyArgs),
    /// Re-run the command recorded in a manifest
    Replay(ReplayArgs),
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Write the main output here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Manifest path [default: <out>.manifest.json, or stderr without --out]
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// One value per line, or CSV with --column
    pub input: PathBuf,
    #[arg(long)]
    pub column: Option<String>,
    /// dp | wilks | mdp
    #[arg(long, default_value = "dp")]
    pub method: String,
    /// Concentration parameter
    #[arg(long)]
    pub a: Option<f64>,
    /// constant | linear | sqrt
    #[arg(long)]
    pub schedule: Option<String>,
    #[arg(long)]
    pub c: Option<f64>,
    /// Base measure, e.g. normal:100,3.3
    #[arg(long)]
    pub base: Option<String>,
    /// Fit the base to the data: mle | moment_match
    #[arg(long)]
    pub fit: Option<String>,
    /// normal | laplace | t
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long)]
    pub dof: Option<f64>,
    #[arg(long)]
    pub fixed_location: Option<f64>,
    /// n | n-1
    #[arg(long)]
    pub sd_denominator: Option<String>,
    #[arg(long)]
    pub a_a: Option<f64>,
    #[arg(long)]
    pub b_a: Option<f64>,
    #[arg(long)]
    pub mu0: Option<f64>,
    #[arg(long)]
    pub tau0: Option<f64>,
    #[arg(long)]
    pub ig_shape: Option<f64>,
    #[arg(long)]
    pub ig_scale: Option<f64>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub burnin: Option<usize>,
    #[arg(long)]
    pub thin: Option<usize>,
    /// normal | laplace
    #[arg(long)]
    pub base_family: Option<String>,
    /// bg | expectation
    #[arg(long, default_value = "bg")]
    pub kind: String,
    /// lower | upper | two
    #[arg(long, default_value = "two")]
    pub side: String,
    #[arg(long, default_value_t = 0.95)]
    pub beta: f64,
    #[arg(long, default_value_t = 0.95)]
    pub gamma: f64,
    #[arg(long)]
    pub q_split: Option<f64>,
    /// level_and_content_split | level_split
    #[arg(long)]
    pub convention: Option<String>,
    /// Seed for the MDP chain
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Print the report as JSON
    #[arg(long)]
    pub json: bool,
    /// Also write the JSON report here
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    pub config: PathBuf,
    /// csv | markdown
    #[arg(long, default_value = "markdown")]
    pub format: String,
    /// Override the replication count
    #[arg(long)]
    pub replications: Option<usize>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct PotencyArgs {
    /// Seed for the MDP chain
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub json: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// What a command produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub stdout: String,
    pub infeasible: bool,
    pub input_digest: Option<String>,
}

fn fit_command(a: &FitArgs) -> Result<Command, CliError> {
    let mut errs = Vec::new();
    let method = config::build_method(
        MethodFields {
            kind: Some(a.method.clone()),
            a: a.a,
            schedule: a.schedule.clone(),
            c: a.c,
            base: a.base.clone(),
            fit: a.fit.clone(),
            family: a.family.clone(),
            dof: a.dof,
            fixed_location: a.fixed_location,
            sd_denominator: a.sd_denominator.clone(),
            a_a: a.a_a,
            b_a: a.b_a,
            mu0: a.mu0,
            tau0: a.tau0,
            ig_shape: a.ig_shape,
            ig_scale: a.ig_scale,
            iterations: a.iterations,
            burnin: a.burnin,
            thin: a.thin,
            base_family: a.base_family.clone(),
        },
        "--",
        &mut errs,
    );
    let spec = config::build_spec(
        SpecFields {
            kind: Some(a.kind.clone()),
            side: Some(a.side.clone()),
            beta: Some(a.beta),
            gamma: Some(a.gamma),
            q_split: a.q_split,
            convention: a.convention.clone(),
        },
        "--",
        &mut errs,
    );
    config::check_compatible(method.as_ref(), spec.as_ref(), "--", &mut errs);
    match (method, spec) {
        (Some(method), Some(spec)) if errs.is_empty() => Ok(Command::Fit {
            input: a.input.clone(),
            column: a.column.clone(),
            method,
            spec,
            seed: a.seed,
            json: a.json,
        }),
        _ => Err(CliError::Input(errs.join("\n"))),
    }
}

fn parse_format(s: &str) -> Result<TableFormat, CliError> {
    match s {
        "csv" => Ok(TableFormat::Csv),
        "markdown" | "md" => Ok(TableFormat::Markdown),
        other => Err(CliError::Input(format!("--format: unknown value `{other}` (expected csv or markdown)"))),
    }
}

/// Runs a resolved command. Output depends only on `cmd`, never on `threads`.
pub fn execute(cmd: &Command, threads: usize) -> Result<Outcome, CliError> {
    match cmd {
        Command::Fit {
            input,
            column,
            method,
            spec,
            seed,
            json,
        } => {
            let sample = input::read_sample(input, column.as_deref()).map_err(CliError::Input)?;
            let data = EmpiricalCdf::new(&sample.values)?;
            let mut rng = RngStream::new(*seed, 0);
            let fitted = method.fit(spec, &data, &mut rng)?;
            let report = FitReport::new(method, spec, data.n(), &fitted, &sample.digest);
            Ok(Outcome {
                stdout: if *json { report.to_json() + "\n" } else { report.to_text() },
                infeasible: fitted.interval.flags.infeasible_small_n,
                input_digest: Some(sample.digest),
            })
        }
        Command::Simulate { config, format } => {
            let rows = harness::run_experiment(config, threads).map_err(|e| CliError::Numeric(e.to_string()))?;
            let f = match format {
                TableFormat::Csv => Format::Csv,
                TableFormat::Markdown => Format::Markdown,
            };
            Ok(Outcome {
                stdout: table::emit_table(&rows, f),
                infeasible: false,
                input_digest: None,
            })
        }
        Command::Potency { seed, json } => {
            let r = potency::run(*seed)?;
            Ok(Outcome {
                stdout: if *json {
                    serde_json::to_string_pretty(&r).expect("report serializes") + "\n"
                } else {
                    r.to_markdown()
                },
                infeasible: false,
                input_digest: None,
            })
        }
    }
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Input(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn manifest_path(o: &OutputArgs) -> Option<PathBuf> {
    o.manifest.clone().or_else(|| {
        o.out.as_ref().map(|p| {
            let mut s = p.clone().into_os_string();
            s.push(".manifest.json");
            PathBuf::from(s)
        })
    })
}

fn run_and_record(cmd: Command, output: &OutputArgs, threads: usize, report: Option<&Path>) -> Result<bool, CliError> {
    let started = now_ms();
    let outcome = execute(&cmd, threads)?;
    write_out(output.out.as_deref(), &outcome.stdout)?;
    if let (Some(p), Command::Fit { .. }) = (report, &cmd) {
        let json = match &cmd {
            Command::Fit { json: true, .. } => outcome.stdout.clone(),
            Command::Fit { json: false, .. } => {
                let json_cmd = match cmd.clone() {
                    Command::Fit { json: _, input, column, method, spec, seed } => Command::Fit {
                        input,
                        column,
                        method,
                        spec,
                        seed,
                        json: true,
                    },
                    other => other,
                };
                execute(&json_cmd, threads)?.stdout
            }
            _ => unreachable!(),
        };
        std::fs::write(p, json).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?;
    }
    let manifest = RunManifest::new(cmd, started, outcome.input_digest.clone()).to_json();
    match manifest_path(output) {
        Some(p) => std::fs::write(&p, manifest + "\n").map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?,
        None => eprintln!("{manifest}"),
    }
    Ok(outcome.infeasible)
}

fn replay(args: &ReplayArgs, threads: usize) -> Result<bool, CliError> {
    let text = std::fs::read_to_string(&args.manifest)
        .map_err(|e| CliError::Input(format!("{}: {e}", args.manifest.display())))?;
    let m = RunManifest::from_json(&text).map_err(CliError::Input)?;
    let outcome = execute(&m.command, threads)?;
    if let (Some(want), Some(got)) = (&m.input_digest, &outcome.input_digest) {
        if want != got {
            return Err(CliError::Input(format!(
                "input file changed since the recorded run (sha256 {got}, recorded {want})"
            )));
        }
    }
    write_out(args.out.as_deref(), &outcome.stdout)?;
    Ok(outcome.infeasible)
}

pub fn default_threads() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

pub fn run(cli: Cli) -> Result<bool, CliError> {
    let threads = cli.threads.unwrap_or_else(default_threads).max(1);
    match cli.command {
        Sub::Fit(a) => {
            let cmd = fit_command(&a)?;
            run_and_record(cmd, &a.output, threads, a.report.as_deref())
        }
        Sub::Simulate(a) => {
            let mut config = ExperimentConfig::from_path(&a.config).map_err(|e| CliError::Input(e.to_string()))?;
            if let Some(k) = a.replications {
                if k == 0 {
                    return Err(CliError::Input("--replications: must be at least 1".into()));
                }
                config.replications = k;
            }
            let format = parse_format(&a.format)?;
            run_and_record(Command::Simulate { config, format }, &a.output, threads, None)
        }
        Sub::Potency(a) => run_and_record(
            Command::Potency {
                seed: a.seed,
                json: a.json,
            },
            &a.output,
            threads,
            None,
        ),
        Sub::Replay(a) => replay(&a, threads),
    }
}

/// Parses `args`, runs, and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(false) => EXIT_OK,
        Ok(true) => {
            eprintln!("warning: the requested level is not attainable at this sample size; limits are the fallback at the sample extreme");
            EXIT_INFEASIBLE
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fit_flags() {
        let cli = Cli::try_parse_from([
            "dptol", "fit", "x.txt", "--method", "dp", "--a", "1", "--base", "normal:100,3.3", "--side", "two",
        ])
        .unwrap();
        let Sub::Fit(a) = cli.command else { panic!() };
        let Command::Fit { spec, .. } = fit_command(&a).unwrap() else { panic!() };
        assert_eq!(spec.beta, 0.95);
    }

    #[test]
    fn flag_errors_name_flags() {
        let cli = Cli::try_parse_from(["dptol", "fit", "x.txt", "--schedule", "cubic", "--c", "1", "--base", "normal:0,1"])
            .unwrap();
        let Sub::Fit(a) = cli.command else { panic!() };
        let e = fit_command(&a).unwrap_err();
        assert!(e.to_string().contains("--schedule"));
        assert_eq!(e.exit_code(), EXIT_INPUT);
    }

    #[test]
    fn error_classes() {
        assert_eq!(CliError::from(Error::NoCrossing { level: 0.5 }).exit_code(), EXIT_NUMERIC);
        assert_eq!(CliError::from(Error::DegenerateData("x".into())).exit_code(), EXIT_INPUT);
    }
}
