use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use meanforce_harness::{output_root, parse_values, resolve, run_to_dir, sweep, Error, Kind, BUILTINS};

#[derive(Parser)]
#[command(name = "meanforce", version, about = "Run mean-force and projection-operator scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file (or built-in scenario id) and write its run directory.
    Run {
        config: String,
        /// Output directory; defaults to $MEANFORCE_OUTPUT_ROOT/<id>.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// List the built-in scenarios.
    ListScenarios,
    /// Describe a built-in scenario.
    Describe {
        id: String,
        /// Print only the scenario document with all defaults filled in.
        #[arg(long)]
        json: bool,
    },
    /// Run a scenario once per value of one numeric parameter.
    Sweep {
        config: String,
        /// Dotted parameter path below `params`, e.g. model.coupling.
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, allow_hyphen_values = true)]
        values: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn dispatch(command: Command) -> Result<(), Error> {
    match command {
        Command::Run { config, out, seed } => {
            let mut scenario = resolve(&config)?;
            if let Some(s) = seed {
                scenario.seed = s;
            }
            let dir = out.unwrap_or_else(|| output_root().join(&scenario.id));
            let outcome = run_to_dir(&scenario, &dir)?;
            let r = &outcome.report;
            println!("{} ({}) -> {}", scenario.id, scenario.kind.name(), dir.display());
            for c in &r.checks {
                println!("  [{}] {} = {:.6e} ({} {:e})", if c.passed { "pass" } else { "FAIL" }, c.name, c.value, c.relation, c.threshold);
            }
            let w = r.warnings;
            println!(
                "  warnings: {} eigenvalue floors, {} empty bins, {} singular times; {:.1} s",
                w.eigenvalue_floors, w.empty_bins, w.singular_times, outcome.wall_clock
            );
        }
        Command::ListScenarios => {
            let kinds: Vec<&str> = Kind::ALL.iter().map(|k| k.name()).collect();
            println!("kinds: {}", kinds.join(", "));
            for b in &BUILTINS {
                println!("{:<32} {:<24} {}", b.id, b.kind.name(), b.verifies.split(':').next().unwrap_or(b.verifies));
            }
        }
        Command::Describe { id, json } => {
            let b = meanforce_harness::builtin(&id)
                .ok_or_else(|| Error::Validation(format!("unknown scenario \"{id}\"; see list-scenarios")))?;
            let doc = b.scenario().to_json();
            if json {
                println!("{doc}");
            } else {
                println!("{} ({})\n\nverifies: {}\n\nconfiguration:\n{doc}", b.id, b.kind.name(), b.verifies);
            }
        }
        Command::Sweep { config, param, values, out, seed } => {
            let mut scenario = resolve(&config)?;
            if let Some(s) = seed {
                scenario.seed = s;
            }
            let values = parse_values(&values)?;
            let dir = out.unwrap_or_else(|| output_root().join(format!("{}-sweep-{param}", scenario.id)));
            let outcome = sweep(&scenario, &param, &values, &dir)?;
            print!("{}", String::from_utf8_lossy(&outcome.csv));
        }
    }
    Ok(())
}
