use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use holo_isac::harness::{self, Scenario, EXIT_PARSE, EXIT_RUNTIME};
use holo_isac::rhs::Quantization;
use holo_isac::Error;

#[derive(Parser)]
#[command(name = "holo-isac", version, about = "Holographic-surface ISAC simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario file; the bundled prototype experiment when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Overrides HOLO_ISAC_SEED and the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Element amplitude resolution: a bit count or `continuous`.
    #[arg(long, value_name = "n|continuous")]
    quant_bits: Option<Quantization>,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize, simulate and write the report files.
    Run {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Per-metric deltas between two JSON reports (a - b).
    Compare { report_a: PathBuf, report_b: PathBuf },
    /// Beampattern of each holographic pattern alone, as CSV.
    PatternDump {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Element amplitudes of the pattern bank, as CSV.
    BankDump {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn read(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn load(args: &ScenarioArgs) -> Result<Scenario, Error> {
    let text = match &args.scenario {
        Some(p) => read(p)?,
        None => harness::PROTOTYPE_EXPERIMENT.to_string(),
    };
    let mut s = harness::parse_scenario(&text)?;
    let env = std::env::var("HOLO_ISAC_SEED").ok();
    s.seed = harness::resolve_seed(s.seed, env.as_deref(), args.seed)?;
    if let Some(q) = args.quant_bits {
        s.rhs.quantization = q;
    }
    Ok(s)
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Error> {
    match out {
        Some(p) => Ok(std::fs::write(p, text)?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32, Error> {
    match cli.command {
        Command::Run { scenario, out } => {
            let s = load(&scenario)?;
            let result = harness::run(&s, &out)?;
            if let Some(e) = &result.report.error {
                eprintln!("error: {}", e.message);
            }
            Ok(result.exit_code)
        }
        Command::Compare { report_a, report_b } => {
            let cmp = harness::compare_str(&read(&report_a)?, &read(&report_b)?)?;
            print!("{}", cmp.to_text());
            Ok(0)
        }
        Command::PatternDump { scenario, out } => {
            emit(out.as_deref(), &harness::pattern_dump(&load(&scenario)?)?)?;
            Ok(0)
        }
        Command::BankDump { scenario, out } => {
            emit(out.as_deref(), &harness::bank_dump(&load(&scenario)?)?)?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_PARSE as u8 } else { 0 });
        }
    };
    let code = dispatch(cli).unwrap_or_else(|e| {
        eprintln!("error: {e}");
        match e {
            Error::Io(_) => EXIT_RUNTIME,
            e => harness::exit_code(&e),
        }
    });
    ExitCode::from(code as u8)
}
