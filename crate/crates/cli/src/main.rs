use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ultralube_core::gait::{Direction, GaitKind};
use ultralube_core::harness::checks::{run_checks, CheckOutcome, Manifest};
use ultralube_core::harness::experiments::Experiment;
use ultralube_core::harness::output::{emit_outputs, ExperimentOutput};
use ultralube_core::harness::scenario::{load_scenario, Format, LoadedScenario, Scenario};
use ultralube_core::Error;

#[derive(Parser, Debug)]
#[command(name = "ultralube", version, about = "Ultrasonic-lubrication virtual experiments")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Scenario file (TOML). The shipped default is used when omitted.
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,
    /// Output root; results go to <out>/<scenario-hash>/<experiment>/.
    #[arg(long, global = true, env = "ULTRALUBE_OUT", default_value = "ultralube-out")]
    out: PathBuf,
    /// Override the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Comma-separated output formats: csv, json, svg.
    #[arg(long, global = true, value_delimiter = ',')]
    format: Option<Vec<Format>>,
    /// Reject unknown scenario keys instead of warning.
    #[arg(long, global = true)]
    strict: bool,
    /// Run the acceptance suite after the experiment.
    #[arg(long, global = true)]
    check: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Beam and ring modal analysis.
    Modes,
    /// Frequency and voltage sweeps of both modules.
    Vibration,
    /// Forward/backward sliding with and without vibration.
    Tribometer,
    /// Friction under a linear voltage ramp.
    Ramp,
    /// Baseline, lubricated and reversed gait runs.
    Locomote(LocomoteArgs),
    /// Run the acceptance suite against the checks manifest.
    Check,
}

#[derive(Args, Debug)]
struct LocomoteArgs {
    #[arg(long, value_enum)]
    gait: Option<GaitArg>,
    #[arg(long, value_enum)]
    direction: Option<DirectionArg>,
    /// Counted cycles (warm-up cycles come on top).
    #[arg(long)]
    cycles: Option<u32>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum GaitArg {
    Inchworm,
    Ovipositor,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DirectionArg {
    Forward,
    Backward,
}

enum Failure {
    Validation(String),
    Simulation(String),
    Checks,
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Simulation(_) => 2,
            Failure::Checks => 3,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Diverged { .. } | Error::Solver { .. } | Error::UndefinedMeasurement(_) => {
                Failure::Simulation(e.to_string())
            }
            e => Failure::Validation(e.to_string()),
        }
    }
}

fn load(common: &Common) -> Result<LoadedScenario, Failure> {
    let mut loaded = match &common.scenario {
        Some(path) => load_scenario(path, common.strict)?,
        None => LoadedScenario {
            scenario: Scenario::default_scenario(),
            defaults_applied: Vec::new(),
            warnings: Vec::new(),
        },
    };
    if let Some(seed) = common.seed {
        loaded.scenario.seed = seed;
    }
    loaded.scenario.validate()?;
    Ok(loaded)
}

fn write(common: &Common, loaded: &LoadedScenario, mut outputs: Vec<ExperimentOutput>) -> Result<(), Failure> {
    let s = &loaded.scenario;
    let formats = common.format.clone().unwrap_or_else(|| s.outputs.formats.clone());
    let hash = s.short_hash()?;
    for o in &mut outputs {
        o.summary.defaults_applied = loaded.defaults_applied.clone();
        o.summary.warnings.splice(0..0, loaded.warnings.iter().cloned());
    }
    let files = emit_outputs(&outputs, &common.out, &hash, &formats)?;
    for o in &outputs {
        println!("{}", o.summary.experiment);
        for (k, v) in &o.summary.outcomes {
            println!("  {k} = {v}");
        }
        for w in &o.summary.warnings {
            eprintln!("warning: {w}");
        }
    }
    println!("wrote {} files under {}", files.len(), common.out.join(&hash).display());
    Ok(())
}

fn checks(common: &Common, s: &Scenario) -> Result<(), Failure> {
    let report = run_checks(s, &Manifest::default_manifest())?;
    for o in &report.outcomes {
        println!("{}", o.line());
    }
    let dir: PathBuf = common.out.join(s.short_hash()?);
    write_checks(&dir, &report.outcomes)?;
    let failed = report.outcomes.iter().filter(|o| !o.passed).count();
    println!("{} of {} checks passed", report.outcomes.len() - failed, report.outcomes.len());
    if failed > 0 {
        return Err(Failure::Checks);
    }
    Ok(())
}

fn write_checks(dir: &Path, outcomes: &[CheckOutcome]) -> Result<(), Failure> {
    let path = dir.join("checks.json");
    let fail = |e: &dyn std::fmt::Display| Failure::Validation(format!("{}: {e}", path.display()));
    std::fs::create_dir_all(dir).map_err(|e| fail(&e))?;
    let text = serde_json::to_string_pretty(outcomes).map_err(|e| fail(&e))?;
    std::fs::write(&path, text + "\n").map_err(|e| fail(&e))
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut loaded = load(&cli.common)?;
    let experiment = match &cli.command {
        Command::Modes => Some(Experiment::Modes),
        Command::Vibration => Some(Experiment::Vibration),
        Command::Tribometer => Some(Experiment::Tribometer),
        Command::Ramp => Some(Experiment::Ramp),
        Command::Locomote(args) => {
            let g = &mut loaded.scenario.gait;
            if let Some(kind) = args.gait {
                g.kind = match kind {
                    GaitArg::Inchworm => GaitKind::Inchworm,
                    GaitArg::Ovipositor => GaitKind::Ovipositor,
                };
            }
            if let Some(d) = args.direction {
                g.direction = match d {
                    DirectionArg::Forward => Direction::Forward,
                    DirectionArg::Backward => Direction::Backward,
                };
            }
            if let Some(c) = args.cycles {
                g.cycles = c;
            }
            loaded.scenario.validate()?;
            Some(Experiment::Locomote)
        }
        Command::Check => None,
    };
    if let Some(e) = experiment {
        let out = e.run(&loaded.scenario)?;
        write(&cli.common, &loaded, vec![out])?;
    }
    if cli.common.check || experiment.is_none() {
        checks(&cli.common, &loaded.scenario)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Validation(m) | Failure::Simulation(m) => eprintln!("error: {m}"),
                Failure::Checks => eprintln!("acceptance checks failed"),
            }
            ExitCode::from(f.code())
        }
    }
}
