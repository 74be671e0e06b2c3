use clap::{Parser, ValueEnum};
use contact_stab::config::{RawConfig, ScenarioConfig, ScenarioKind};
use contact_stab::scenarios::dispatch;
use contact_stab::Error;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    ValidateState,
    Spectrum,
    EnergyTest,
    NeutralMode,
    RtRun,
    EpsSweep,
    AdjointCheck,
    Mms,
}

impl Command {
    fn kind(self) -> ScenarioKind {
        match self {
            Command::ValidateState => ScenarioKind::ValidateState,
            Command::Spectrum => ScenarioKind::Spectrum,
            Command::EnergyTest => ScenarioKind::EnergyTest,
            Command::NeutralMode => ScenarioKind::NeutralMode,
            Command::RtRun => ScenarioKind::RtRun,
            Command::EpsSweep => ScenarioKind::EpsSweep,
            Command::AdjointCheck => ScenarioKind::AdjointCheck,
            Command::Mms => ScenarioKind::Mms,
        }
    }
}

/// Stability experiments for the linearized MHD contact-discontinuity problem.
///
/// Exit codes: 0 success, 1 check failure, 2 config error, 3 numerical blow-up.
#[derive(Debug, Parser)]
#[command(name = "contact-stab", version)]
struct Cli {
    /// Scenario to run (replaces scenario.kind from the config).
    #[arg(value_enum)]
    command: Command,
    /// Scenario config file.
    config: PathBuf,
    /// Output directory (default: run.out from the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for the parallel kernels.
    #[arg(long)]
    threads: Option<usize>,
    /// Replace a config value, e.g. --override grid.N1=128.
    #[arg(long = "override", value_name = "SECTION.KEY=VALUE")]
    overrides: Vec<String>,
}

fn load(cli: &Cli) -> contact_stab::Result<ScenarioConfig> {
    let text = std::fs::read_to_string(&cli.config)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", cli.config.display())))?;
    let mut raw = RawConfig::parse(&text)?;
    // the subcommand decides the scenario, so one config can serve several
    let kind = cli.command.kind();
    if raw.get("scenario.kind") != Some(kind.name()) {
        raw.set_override(&format!("scenario.kind={kind}"))?;
    }
    for o in &cli.overrides {
        raw.set_override(o)?;
    }
    ScenarioConfig::from_raw(raw)
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::ConfigSyntax { .. } | Error::Expr(_) => 2,
        Error::Inadmissible(_) | Error::Geometry(_) | Error::Precondition(_) => 2,
        Error::BlowUp { .. } => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 || rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
            eprintln!("error: cannot configure {n} threads");
            return ExitCode::from(2);
        }
    }
    let cfg = match load(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e));
        }
    };
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.run.out));
    match dispatch(&cfg, &out) {
        Ok(outcome) => {
            print!("{}", outcome.report());
            println!("artifacts in {}", out.display());
            if outcome.passed() {
                ExitCode::SUCCESS
            } else {
                for f in outcome.failures() {
                    eprintln!("check failed: {}", f.name);
                }
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
