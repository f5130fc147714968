//! Pipeline front-end: generate oracle data, train the GAN, rebalance,
//! train the transformer classifier, evaluate, and diagnose synthetic
//! quality. One master seed (--seed) derives every stage's randomness.
//!
//! Exit codes: 0 success, 1 usage/config/input error, 2 undefined metric
//! (e.g. single-class test set), 3 training divergence.

mod commands;
mod config;
mod manifest;

use clap::{Parser, Subcommand};
use tidgan_core::error::Error;

#[derive(Parser)]
#[command(
    name = "tidgan",
    version,
    about = "GAN-based rebalancing and transformer incident detection for tabular data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic two-class dataset with known ground truth
    GenData(commands::gen_data::GenDataArgs),
    /// Train the GAN on real incident rows
    TrainGan(commands::train_gan::TrainGanArgs),
    /// Append synthetic incident rows up to a target class ratio
    Augment(commands::augment::AugmentArgs),
    /// Train the transformer classifier on the train split
    TrainClf(commands::train_clf::TrainClfArgs),
    /// Score the held-out split and write the evaluation report
    Evaluate(commands::evaluate::EvaluateArgs),
    /// Compare real vs synthetic feature distributions
    Diagnose(commands::diagnose::DiagnoseArgs),
}

fn exit_code(error: &Error) -> i32 {
    match error {
        Error::UndefinedMetric(_) => 2,
        Error::TrainingDivergence { .. } => 3,
        _ => 1,
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help/--version exit 0; real usage errors exit 1
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let result = match cli.command {
        Command::GenData(args) => commands::gen_data::run(args),
        Command::TrainGan(args) => commands::train_gan::run(args),
        Command::Augment(args) => commands::augment::run(args),
        Command::TrainClf(args) => commands::train_clf::run(args),
        Command::Evaluate(args) => commands::evaluate::run(args),
        Command::Diagnose(args) => commands::diagnose::run(args),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(exit_code(&e));
    }
}
