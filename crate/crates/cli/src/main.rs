//! Batch front end: one experiment per invocation, configured by a JSON
//! document, emitting CSV artifacts, a JSON summary, and one PASS/FAIL line
//! per check.
//!
//! Exit codes: 0 all checks passed, 1 configuration or validation error,
//! 2 numerical failure during the computation, 3 at least one check missed
//! its tolerance. Reruns of the same configuration are byte-identical.

mod config;
mod experiments;

use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;

use config::{
    AbSweepParams, DoubleSlitParams, ExperimentConfig, ExtremalParams, GeometryCheckParams,
    HjOrderParams, KernelConsistencyParams, KgVerifyParams, MomentsParams, OutputSpec,
    SCHEMA_VERSION,
};
use experiments::{Check, Failure, RunOutput};

#[derive(Parser)]
#[command(
    name = "weylq",
    version,
    about = "Gauge-transport interference and short-time propagator experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compare curvature from the metric jet against the contraction oracle
    GeometryCheck(RunArgs),
    /// Relax a path to its action extremum and compare with a geodesic oracle
    Extremal(RunArgs),
    /// Two-path interference with optional probe and Monte Carlo cross-check
    DoubleSlit(RunArgs),
    /// Sweep the enclosed-flux phase; verify the 2π period and the shift rate
    AbSweep(RunArgs),
    /// Short-time moment identities and the damping-free extrapolation
    Moments(RunArgs),
    /// Convergence order of the short-time action expansion
    HjOrder(RunArgs),
    /// Plane-mode residual of the wave operator, on and off shell
    KgVerify(RunArgs),
    /// One transport step on a curved ring against the equation it generates
    KernelConsistency(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment configuration; documented defaults apply when omitted
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; overrides output.directory from the config
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the experiment's RNG seed where one applies
    #[arg(long)]
    seed: Option<u64>,
    /// Validate and echo the resolved configuration without computing
    #[arg(long)]
    dry_run: bool,
}

/// Per-experiment parameter plumbing: validation and the seed override.
trait Params: Default + Serialize + DeserializeOwned {
    fn check(&self) -> Result<(), String>;
    fn apply_seed(&mut self, _seed: u64) {}
}

impl Params for GeometryCheckParams {
    fn check(&self) -> Result<(), String> {
        self.validate()
    }
    fn apply_seed(&mut self, seed: u64) {
        self.seed = seed;
    }
}

impl Params for ExtremalParams {
    fn check(&self) -> Result<(), String> {
        self.validate()
    }
}

impl Params for DoubleSlitParams {
    fn check(&self) -> Result<(), String> {
        self.validate()
    }
    fn apply_seed(&mut self, seed: u64) {
        if let Some(mc) = &mut self.mc {
            mc.seed = seed;
        }
    }
}

impl Params for AbSweepParams {
    fn check(&self) -> Result<(), String> {
        self.validate()
    }
}

impl Params for MomentsParams {
    fn check(&self) -> Result<(), String> {
        self.validate()
    }
}

impl Params for HjOrderParams {
    fn check(&self) -> Result<(), String> {
        self.validate()
    }
}

impl Params for KgVerifyParams {
    fn check(&self) -> Result<(), String> {
        self.validate()
    }
}

impl Params for KernelConsistencyParams {
    fn check(&self) -> Result<(), String> {
        self.validate()
    }
}

/// Summary schema; field order is fixed by this struct.
#[derive(Serialize)]
struct Summary<'a> {
    experiment: &'a str,
    params: &'a serde_json::Value,
    checks: &'a [Check],
}

#[derive(Serialize)]
struct ResolvedOutput {
    directory: String,
    formats: Vec<String>,
}

/// Echo printed by `--dry-run`: the configuration with every default
/// filled in, in envelope form.
#[derive(Serialize)]
struct ResolvedConfig<'a> {
    schema_version: u32,
    experiment: &'a str,
    parameters: &'a serde_json::Value,
    output: ResolvedOutput,
}

fn load<P: Params>(name: &str, args: &RunArgs) -> Result<(P, OutputSpec), Failure> {
    let Some(path) = &args.config else {
        return Ok((P::default(), OutputSpec::default()));
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Config(format!("--config {}: {e}", path.display())))?;
    let envelope: ExperimentConfig = serde_json::from_str(&text)
        .map_err(|e| Failure::Config(format!("--config {}: {e}", path.display())))?;
    if envelope.schema_version != SCHEMA_VERSION {
        return Err(Failure::Config(format!(
            "config field schema_version must be {SCHEMA_VERSION}, got {}",
            envelope.schema_version
        )));
    }
    if envelope.experiment != name {
        return Err(Failure::Config(format!(
            "config field experiment is {:?} but the {name} subcommand was invoked",
            envelope.experiment
        )));
    }
    let params = if envelope.parameters.is_null() {
        P::default()
    } else {
        serde_json::from_value(envelope.parameters)
            .map_err(|e| Failure::Config(format!("config field parameters: {e}")))?
    };
    Ok((params, envelope.output))
}

fn drive<P: Params>(
    name: &str,
    args: &RunArgs,
    run: impl FnOnce(&P) -> Result<RunOutput, Failure>,
) -> i32 {
    match drive_inner(name, args, run) {
        Ok(code) => code,
        Err(failure) => {
            eprintln!("error: {}", failure.message());
            failure.exit_code()
        }
    }
}

fn drive_inner<P: Params>(
    name: &str,
    args: &RunArgs,
    run: impl FnOnce(&P) -> Result<RunOutput, Failure>,
) -> Result<i32, Failure> {
    let (mut params, output) = load::<P>(name, args)?;
    if let Some(seed) = args.seed {
        params.apply_seed(seed);
    }
    params.check().map_err(Failure::Config)?;
    output.validate().map_err(Failure::Config)?;

    let resolved = serde_json::to_value(&params)
        .map_err(|e| Failure::Config(format!("parameters did not serialize: {e}")))?;
    let out_dir = args
        .out
        .clone()
        .or_else(|| output.directory.clone().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));

    if args.dry_run {
        let echo = ResolvedConfig {
            schema_version: SCHEMA_VERSION,
            experiment: name,
            parameters: &resolved,
            output: ResolvedOutput {
                directory: out_dir.display().to_string(),
                formats: output.formats.clone(),
            },
        };
        println!("{}", serde_json::to_string_pretty(&echo).expect("echo serializes"));
        return Ok(0);
    }

    let result = run(&params)?;

    std::fs::create_dir_all(&out_dir)
        .map_err(|e| Failure::Config(format!("output directory {}: {e}", out_dir.display())))?;
    if output.wants("csv") {
        for (file, contents) in &result.artifacts {
            std::fs::write(out_dir.join(file), contents)
                .map_err(|e| Failure::Config(format!("writing {file}: {e}")))?;
        }
    }
    if output.wants("json") {
        let summary = Summary { experiment: name, params: &resolved, checks: &result.checks };
        let text = serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n";
        std::fs::write(out_dir.join("summary.json"), text)
            .map_err(|e| Failure::Config(format!("writing summary.json: {e}")))?;
    }

    let mut all_pass = true;
    for check in &result.checks {
        all_pass &= check.pass;
        let verdict = if check.pass { "PASS" } else { "FAIL" };
        println!(
            "{verdict} {}  value={} tolerance={}",
            check.name, check.value, check.tolerance
        );
    }
    Ok(if all_pass { 0 } else { 3 })
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            std::process::exit(0);
        }
        Err(e) => {
            // Usage mistakes are configuration errors, same as a bad file.
            let _ = e.print();
            std::process::exit(1);
        }
    };
    let code = match &cli.command {
        Command::GeometryCheck(a) => {
            drive::<GeometryCheckParams>("geometry-check", a, experiments::run_geometry_check)
        }
        Command::Extremal(a) => drive::<ExtremalParams>("extremal", a, experiments::run_extremal),
        Command::DoubleSlit(a) => {
            drive::<DoubleSlitParams>("double-slit", a, experiments::run_double_slit)
        }
        Command::AbSweep(a) => drive::<AbSweepParams>("ab-sweep", a, experiments::run_ab_sweep),
        Command::Moments(a) => drive::<MomentsParams>("moments", a, experiments::run_moments),
        Command::HjOrder(a) => drive::<HjOrderParams>("hj-order", a, experiments::run_hj_order),
        Command::KgVerify(a) => drive::<KgVerifyParams>("kg-verify", a, experiments::run_kg_verify),
        Command::KernelConsistency(a) => drive::<KernelConsistencyParams>(
            "kernel-consistency",
            a,
            experiments::run_kernel_consistency,
        ),
    };
    std::process::exit(code);
}
