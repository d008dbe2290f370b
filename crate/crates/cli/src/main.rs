use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use semiclassical::Execution;
use semiclassical_cli::{run, write_outputs, ExperimentConfig, ScenarioKind};

#[derive(Debug, Parser)]
#[command(name = "semiclass", version, about = "Semiclassical overlaps against exact grid quantization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Bohr-Sommerfeld levels against oracle eigenvalues
    Spectrum(RunArgs),
    /// Bridged overlap moduli
    Overlap(RunArgs),
    /// Transition probabilities
    Probability(RunArgs),
    /// Cyclic amplitudes of 2 to 4 systems
    Cyclic(RunArgs),
    /// Star-product identities and operator correspondence
    StarCheck(RunArgs),
    /// Stationary-phase composition against the direct kernel
    GlueCheck(RunArgs),
    /// Error-slope sweep over h
    Sweep(RunArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config's `output.dir`)
    #[arg(long, env = "SEMICLASS_OUT_DIR")]
    out: Option<PathBuf>,
    /// Worker threads; 1 runs sequentially
    #[arg(long)]
    jobs: Option<usize>,
}

impl Command {
    fn split(&self) -> (ScenarioKind, &RunArgs) {
        match self {
            Command::Spectrum(a) => (ScenarioKind::Spectrum, a),
            Command::Overlap(a) => (ScenarioKind::Overlap, a),
            Command::Probability(a) => (ScenarioKind::Probability, a),
            Command::Cyclic(a) => (ScenarioKind::Cyclic, a),
            Command::StarCheck(a) => (ScenarioKind::StarCheck, a),
            Command::GlueCheck(a) => (ScenarioKind::GlueCheck, a),
            Command::Sweep(a) => (ScenarioKind::Sweep, a),
        }
    }
}

fn execute(cli: &Cli) -> anyhow::Result<ExitCode> {
    let (kind, args) = cli.command.split();
    let cfg = ExperimentConfig::load(&args.config).with_context(|| format!("invalid config {}", args.config.display()))?;
    if cfg.scenario != kind {
        bail!(
            "{} declares scenario '{}' but the '{}' subcommand was used",
            args.config.display(),
            cfg.scenario.name(),
            kind.name()
        );
    }
    let out_dir = args
        .out
        .clone()
        .or_else(|| cfg.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("semiclass-out"));
    let exec = match args.jobs {
        Some(1) => Execution::Sequential,
        _ => Execution::Parallel,
    };
    let output = match args.jobs {
        Some(n) if n > 1 => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .context("cannot start the worker pool")?
            .install(|| run(&cfg, exec)),
        Some(0) => bail!("--jobs must be at least 1"),
        _ => run(&cfg, exec),
    }
    .with_context(|| format!("scenario '{}' failed", kind.name()))?;

    let written = write_outputs(&output.report, &output.fibers, &out_dir)
        .with_context(|| format!("cannot write to {}", out_dir.display()))?;
    for path in &written {
        log::info!("wrote {}", path.display());
    }
    for check in &output.report.checks {
        println!(
            "{} {} (value {:e}, tolerance {:e})",
            if check.passed { "PASS" } else { "FAIL" },
            check.name,
            check.value,
            check.tolerance
        );
    }
    if let Some(reg) = &output.report.regression {
        println!("regression: {}", serde_json::to_string(reg)?);
    }
    if !output.report.passed() {
        eprintln!("error: {} check(s) failed", output.report.checks.iter().filter(|c| !c.passed).count());
        return Ok(ExitCode::from(1));
    }
    if !output.report.warnings.is_empty() {
        eprintln!("warning: {} numerical warning(s), see report.json", output.report.warnings.len());
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
