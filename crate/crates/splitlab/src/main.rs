use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use splitlab::events::NullSink;
use splitlab::harness::{
    self, expected_overhead, overhead_inputs, ExperimentConfig, OutputWriter,
};
use splitlab::pigeon::Mode;

#[derive(Parser)]
#[command(
    name = "splitlab",
    version,
    about = "Deterministic split-learning laboratory: vanilla SL, cluster-selection SL, attacks, and traffic accounting"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write rounds.csv, ledger.csv, summary.txt.
    Run {
        /// Experiment configuration (TOML).
        config: PathBuf,
        /// Output directory, created if missing.
        #[arg(long)]
        out: PathBuf,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the config's mode: vanilla | pigeon | pigeon_plus.
        #[arg(long)]
        mode: Option<String>,
    },
    /// Print expected versus simulated traffic for a configuration.
    CheckOverheads {
        /// Experiment configuration (TOML).
        config: PathBuf,
    },
    /// Run the built-in oracle suites.
    Selftest,
}

fn parse_mode(text: &str) -> Result<Mode, String> {
    match text {
        "vanilla" => Ok(Mode::Vanilla),
        "pigeon" => Ok(Mode::Pigeon),
        "pigeon_plus" => Ok(Mode::PigeonPlus),
        other => Err(format!(
            "unknown mode '{other}' (expected vanilla | pigeon | pigeon_plus)"
        )),
    }
}

fn load_config(
    path: &Path,
    seed: Option<u64>,
    mode: Option<&str>,
) -> Result<ExperimentConfig, String> {
    let mut config = ExperimentConfig::load(path).map_err(|e| e.to_string())?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    if let Some(mode) = mode {
        config.mode = parse_mode(mode)?;
    }
    for warning in config.validate().map_err(|e| e.to_string())? {
        eprintln!("warning: {warning}");
    }
    Ok(config)
}

fn cmd_run(
    config_path: PathBuf,
    out: PathBuf,
    seed: Option<u64>,
    mode: Option<String>,
) -> Result<(), String> {
    let config = load_config(&config_path, seed, mode.as_deref())?;
    let mut writer =
        OutputWriter::create(&out, config.num_clusters()).map_err(|e| e.to_string())?;
    let output = harness::run_experiment(&config, &mut writer).map_err(|e| e.to_string())?;
    writer.finish(&config, &output).map_err(|e| e.to_string())?;

    let final_accuracy = output
        .records
        .last()
        .map_or(f64::NAN, |r| r.test_accuracy);
    println!("completed {} rounds", output.records.len());
    println!("final test accuracy: {final_accuracy}");
    println!(
        "detections: {}",
        output
            .records
            .iter()
            .map(|r| r.detections.len())
            .sum::<usize>()
    );
    println!("output written to {}", out.display());
    Ok(())
}

fn cmd_check_overheads(config_path: PathBuf) -> Result<(), String> {
    let config = load_config(&config_path, None, None)?;
    let expected = expected_overhead(&overhead_inputs(&config));
    let output = harness::run_experiment(&config, &mut NullSink).map_err(|e| e.to_string())?;
    let totals = output.ledger.total();
    let t = config.rounds as u64;

    println!("mode: {:?}   rounds: {t}", config.mode);
    println!("per-round closed forms:");
    println!("  comm_selected:   {}", expected.comm_selected);
    println!("  comm_unselected: {}", expected.comm_unselected);
    println!("  comm_total:      {}", expected.comm_total);
    println!("  compute_total:   {}", expected.compute_total);
    println!("simulated totals over {t} rounds:");
    println!(
        "  comm (cut {} + handoff {}): {}",
        totals.cut_scalar_units,
        totals.handoff_scalar_units,
        totals.cut_scalar_units + totals.handoff_scalar_units
    );
    println!("  compute: {}", totals.client_pass_units);
    println!("expected over {t} rounds:");
    println!("  comm:    {}", t * expected.comm_total);
    println!("  compute: {}", t * expected.compute_total);
    if output.ledger_matches_expected {
        println!("MATCH: ledger equals the closed forms exactly");
        Ok(())
    } else {
        println!("MISMATCH: ledger deviates from the closed forms");
        Err("overhead mismatch".into())
    }
}

fn cmd_selftest() -> Result<(), String> {
    let outcomes = harness::selftest::run_selftest();
    let mut failed = false;
    for outcome in &outcomes {
        let status = if outcome.passed { "PASS" } else { "FAIL" };
        println!("[{status}] {} - {}", outcome.name, outcome.detail);
        failed |= !outcome.passed;
    }
    if failed {
        Err("selftest failed".into())
    } else {
        Ok(())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            out,
            seed,
            mode,
        } => cmd_run(config, out, seed, mode),
        Command::CheckOverheads { config } => cmd_check_overheads(config),
        Command::Selftest => cmd_selftest(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}
