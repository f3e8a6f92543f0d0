//! `loopsim`: generate networks, run simulations, analyze spike logs and
//! evaluate scaling relations.
//!
//! Exit codes: 0 success, 2 user or parameter error, 3 resource or runtime error.

mod analyze;
mod generate;
mod io;
mod scale;
mod simulate;

use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "loopsim", about = "Event-driven simulator for optoelectronic loop-neuron networks")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Synthesize a network and print its topology report.
    Generate(generate::GenerateArgs),
    /// Print the topology report of an existing network.
    Measure(generate::MeasureArgs),
    /// Run the event-driven simulation.
    Simulate(simulate::SimulateArgs),
    /// Avalanches, power-law fit, branching ratio, synchrony and band power of a spike log.
    Analyze(analyze::AnalyzeArgs),
    /// Neuronal-pool, photon-energy and power-budget calculations.
    Scale(scale::ScaleArgs),
}

fn version() -> &'static str {
    let s = format!(
        "{} (format schema {})",
        env!("CARGO_PKG_VERSION"),
        loopsim::FORMAT_SCHEMA_VERSION
    );
    Box::leak(s.into_boxed_str())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("LOOPSIM_LOG", "warn")).init();

    let matches = Cli::command().version(version()).get_matches();
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    let result = match &cli.cmd {
        Command::Generate(a) => generate::run(a),
        Command::Measure(a) => generate::measure(a),
        Command::Simulate(a) => simulate::run(a),
        Command::Analyze(a) => analyze::run(a),
        Command::Scale(a) => scale::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.msg);
            ExitCode::from(e.code)
        }
    }
}
