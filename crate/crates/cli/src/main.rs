//! Command-line interface for panel-data counterfactual inference:
//! synthetic-data generation, posterior fitting, method benchmarking, and
//! plot-ready reporting.

mod commands;
mod output;
mod svg;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "bmc",
    version,
    about = "Bayesian matrix completion for counterfactual inference on panel data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic panel with known counterfactual truth.
    Simulate(commands::simulate::SimulateArgs),
    /// Run the posterior sampler on a panel CSV and write draw and summary
    /// files.
    Fit(commands::fit::FitArgs),
    /// Compare imputation methods on synthetic panels.
    Benchmark(commands::benchmark::BenchmarkArgs),
    /// Turn fit outputs into a plot-ready CSV and an SVG chart.
    Report(commands::report::ReportArgs),
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => commands::simulate::run(&args),
        Command::Fit(args) => commands::fit::run(&args),
        Command::Benchmark(args) => commands::benchmark::run(&args),
        Command::Report(args) => commands::report::run(&args),
    };
    if let Err(err) = result {
        let payload = serde_json::json!({
            "error": err.to_string(),
            "chain": err.chain().skip(1).map(|c| c.to_string()).collect::<Vec<_>>(),
        });
        eprintln!("{payload}");
        std::process::exit(1);
    }
}
