use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use halfwave_cli::audit::range_audit;
use halfwave_cli::config::{parse_config, PRESET_NAMES};
use halfwave_cli::scenario::{output_dir, repro, run_scenario, ScenarioResult, OUT_ENV};
use halfwave_cli::{formats_table, CliError};

#[derive(Parser)]
#[command(name = "halfwave", about = "Staggered-grid wave simulations in fp64, fp32 and emulated fp16")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario from a config file or a preset.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Start from a built-in preset instead of a file.
        #[arg(long, conflicts_with = "config")]
        preset: Option<String>,
        /// Use the desk-scale version of the preset.
        #[arg(long, requires = "preset")]
        desk: bool,
        /// Override a setting, e.g. `--set precision.mode=op6`.
        #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Run every precision variant of a paper preset and emit figure data.
    Repro {
        /// paper-acoustic, paper-elastic or all.
        name: String,
        #[arg(long)]
        desk: bool,
    },
    /// Check that every parameter fits the configured formats.
    Audit {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Print the format constants.
    Formats,
}

fn report(r: &ScenarioResult) {
    let drift = r.drift.map_or("n/a".to_string(), |d| format!("{:.3e} (slope {:.3e})", d.rel_deviation, d.trend_slope));
    print!("{:<40} final energy {:<12.6e} drift {drift}", r.label, r.final_energy());
    if let Some(c) = &r.comparison {
        print!("  vs {}: energy {:.2e}", c.reference, c.final_energy_rel);
        if let Some((label, t)) = c.traces.first() {
            print!(", {label} L2 {:.2e}", t.l2_rel);
        }
    }
    println!();
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Formats => print!("{}", formats_table()),
        Command::Audit { config, overrides } => {
            let cfg = parse_config(Some(&config), None, false, &overrides)?;
            let audit = range_audit(&cfg.materialize()?);
            if audit.has_errors() {
                return Err(CliError::Range(audit));
            }
            println!("{audit}");
        }
        Command::Run { config, preset, desk, overrides } => {
            let cfg = parse_config(config.as_deref(), preset.as_deref(), desk, &overrides)?;
            let dir = output_dir(&cfg);
            let r = run_scenario(&cfg, &dir, None)?;
            report(&r);
            println!("wrote {}", dir.display());
        }
        Command::Repro { name, desk } => {
            let root = std::env::var_os(OUT_ENV).map_or_else(|| PathBuf::from("out"), PathBuf::from);
            let names: Vec<&str> = if name == "all" { PRESET_NAMES.to_vec() } else { vec![name.as_str()] };
            for n in names {
                repro(n, desk, &root, report)?;
            }
            println!("wrote {}", root.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("halfwave: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
