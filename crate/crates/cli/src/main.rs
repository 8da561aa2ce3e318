use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use contactrel_cli::run::{run_ensemble, run_trajectory};
use contactrel_cli::scenario::{load_scenario, Format, OutputSpec, Scenario};
use contactrel_cli::verify::{run_battery, VerifyOptions, VerifyReport};
use contactrel_cli::{presets, CliError};

#[derive(Parser)]
#[command(
    name = "contactrel",
    version,
    about = "Relativistic particles and gases with varying rest mass"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a single-particle scenario.
    Run(RunArgs),
    /// Propagate a marker ensemble and record weight and entropy.
    Ensemble(RunArgs),
    /// Run the invariant battery; exits 1 if any check fails.
    Verify(VerifyArgs),
    /// Built-in scenarios.
    Presets {
        #[command(subcommand)]
        command: PresetsCommand,
    },
}

#[derive(Subcommand)]
enum PresetsCommand {
    /// List preset names.
    List,
    /// Print a preset's scenario JSON.
    Show { name: String },
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Jsonl,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Jsonl => Format::Jsonl,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// Scenario JSON file.
    #[arg(required_unless_present = "preset", conflicts_with = "preset")]
    scenario: Option<PathBuf>,
    /// Use a built-in scenario instead of a file.
    #[arg(long)]
    preset: Option<String>,
    /// Output path (overrides the scenario's output section).
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Output format; inferred from a `.jsonl` output extension otherwise.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Accept an initial momentum that is off the mass shell.
    #[arg(long)]
    allow_off_shell: bool,
    /// Print the run report as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct VerifyArgs {
    /// Also check this scenario's conservation diagnostics.
    scenario: Option<PathBuf>,
    /// Run every preset and check its expected behaviour.
    #[arg(long)]
    all_presets: bool,
    /// One JSON record per check.
    #[arg(long)]
    json: bool,
    #[arg(long, hide = true)]
    perturb_divergence: bool,
}

fn load(args: &RunArgs) -> Result<Scenario, CliError> {
    let mut sc = match (&args.scenario, &args.preset) {
        (Some(path), _) => load_scenario(path)?,
        (None, Some(name)) => presets::get(name)?,
        (None, None) => unreachable!("clap requires one of them"),
    };
    let format = args.format.map(Format::from).or_else(|| {
        let ext = args.output.as_ref()?.extension()?;
        Some(if ext == "jsonl" {
            Format::Jsonl
        } else {
            Format::Csv
        })
    });
    match (&args.output, &mut sc.output) {
        (Some(path), Some(out)) => {
            out.path = path.clone();
            out.format = format.unwrap_or(out.format);
        }
        (Some(path), None) => sc.output = Some(OutputSpec::new(path, format.unwrap_or_default())),
        (None, Some(out)) => {
            if let Some(f) = format {
                out.format = f;
                out.path.set_extension(f.extension());
            }
        }
        (None, None) => {
            let f = format.unwrap_or_default();
            let path = PathBuf::from(format!("{}.{}", sc.display_name(), f.extension()));
            sc.output = Some(OutputSpec::new(path, f));
        }
    }
    Ok(sc)
}

fn run(args: &RunArgs, ensemble: bool) -> Result<(), CliError> {
    let sc = load(args)?;
    let report = if ensemble {
        run_ensemble(&sc)?.1
    } else {
        run_trajectory(&sc, args.allow_off_shell)?.1
    };
    if args.json {
        println!(
            "{}",
            serde_json::to_string_pretty(&report).expect("report serializes")
        );
    } else {
        print!("{report}");
    }
    Ok(())
}

fn verify(args: &VerifyArgs) -> Result<bool, CliError> {
    let scenario = args.scenario.as_deref().map(load_scenario).transpose()?;
    let opts = VerifyOptions {
        all_presets: args.all_presets,
        perturb_divergence: args.perturb_divergence,
        scenario,
    };
    let report = VerifyReport::new(run_battery(&opts));
    if args.json {
        for c in &report.checks {
            println!("{}", serde_json::to_string(c).expect("check serializes"));
        }
    } else {
        for c in &report.checks {
            println!("{c}");
        }
        let failed = report.checks.iter().filter(|c| !c.passed).count();
        println!("{} checks, {} failed", report.checks.len(), failed);
    }
    Ok(report.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(a) => run(a, false).map(|_| true),
        Command::Ensemble(a) => run(a, true).map(|_| true),
        Command::Verify(a) => verify(a),
        Command::Presets {
            command: PresetsCommand::List,
        } => {
            presets::names().for_each(|n| println!("{n}"));
            Ok(true)
        }
        Command::Presets {
            command: PresetsCommand::Show { name },
        } => presets::source(name).map(|s| {
            print!("{s}");
            true
        }),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
