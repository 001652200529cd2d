//! `jgekd`: generate MiniShapes, corrupt it, train and evaluate classifiers,
//! and write robustness and class-correlation tables.

mod commands;
mod error;
mod settings;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

#[derive(Parser, Debug)]
#[command(name = "jgekd", version, about = "Joint graph entropy distillation for point clouds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write the synthetic 8-class MiniShapes dataset.
    GenData(GenDataArgs),
    /// Apply one corruption (or all of them) to a dataset.
    Corrupt(CorruptArgs),
    /// Train a classifier with the st, skd or tkd strategy.
    Train(TrainArgs),
    /// Report OA, mAcc and per-class accuracy of a checkpoint.
    Eval(EvalArgs),
    /// Per-corruption accuracy and CE of a model against a reference.
    Robustness(RobustnessArgs),
    /// Pairwise class-correlation matrix from model embeddings.
    Correlation(CorrelationArgs),
}

#[derive(Args, Debug)]
pub struct GenDataArgs {
    /// `key = value` file; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub per_class_train: Option<usize>,
    #[arg(long)]
    pub per_class_test: Option<usize>,
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct CorruptArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Manifest (or directory holding `manifest.txt`) of the clean data.
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub kind: Option<String>,
    #[arg(long)]
    pub severity: Option<u8>,
    /// Every implemented kind at every severity.
    #[arg(long)]
    pub all: bool,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub train: Option<PathBuf>,
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// Output directory for the checkpoint and reports.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Frozen teacher checkpoint, required by `tkd`.
    #[arg(long)]
    pub teacher: Option<PathBuf>,
    #[arg(long)]
    pub strategy: Option<String>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub smoothing: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub detach_target: Option<bool>,
    #[arg(long)]
    pub augmentation: Option<bool>,
    #[arg(long)]
    pub noise_probability: Option<f64>,
    #[arg(long)]
    pub density_probability: Option<f64>,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct RobustnessArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Reference checkpoint the CE values are normalized by.
    #[arg(long = "ref")]
    pub reference: Option<PathBuf>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also evaluate and average the background corruption.
    #[arg(long)]
    pub with_background: bool,
}

#[derive(Args, Debug)]
pub struct CorrelationArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub samples_per_class: Option<usize>,
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::GenData(a) => commands::gen_data(a),
        Command::Corrupt(a) => commands::corrupt(a),
        Command::Train(a) => commands::train(a),
        Command::Eval(a) => commands::eval(a),
        Command::Robustness(a) => commands::robustness(a),
        Command::Correlation(a) => commands::correlation(a),
    };
    if let Err(e) = result {
        eprintln!("jgekd: {e}");
        std::process::exit(e.code());
    }
}
