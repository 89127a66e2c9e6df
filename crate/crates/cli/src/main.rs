//! promptguard: train, evaluate and run prompt-injection detectors.

mod commands;
mod common;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "promptguard",
    version,
    about = "Prompt-injection detection pipeline: embed, train, evaluate, compare, predict"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Embed a labeled corpus with an ONNX encoder and write a PGEMB1 cache.
    Embed(commands::embed::EmbedArgs),
    /// Train one classifier and save the model JSON.
    Train(commands::train::TrainArgs),
    /// Evaluate a saved model on the held-out split.
    Eval(commands::eval::EvalArgs),
    /// Train and evaluate all four classifiers, emitting a comparison table.
    Compare(commands::compare::CompareArgs),
    /// Classify one prompt with a saved model.
    Predict(commands::predict::PredictArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Embed(args) => commands::embed::run(args),
        Command::Train(args) => commands::train::run(args),
        Command::Eval(args) => commands::eval::run(args),
        Command::Compare(args) => commands::compare::run(args),
        Command::Predict(args) => commands::predict::run(args),
    };
    match outcome {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
