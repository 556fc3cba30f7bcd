use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use prindt_cli::{cmd_check, cmd_predict, cmd_train, RunConfig, SelectorArg};
use prindt_core::resample::Execution;

#[derive(Parser)]
#[command(name = "prindt", version, about = "Interpretable decision trees from repeated undersampling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Grow one tree per repetition, filter by rules, build ensembles a/b/c.
    Train(TrainArgs),
    /// Predict classes for new rows with an ensemble from model.json.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// a, b, c, all, top:K or above:X
        #[arg(long, default_value = "a")]
        selector: SelectorArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-check the trees of model.json against a rule file.
    Check {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        constraints: PathBuf,
    },
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long = "class-col")]
    class_col: String,
    /// Label of the small class; required when both classes are the same size.
    #[arg(long = "small-class")]
    small_class: Option<String>,
    /// Comma-separated predictor columns (default: all but the class column).
    #[arg(long, value_delimiter = ',')]
    predictors: Option<Vec<String>>,
    /// Comma-separated columns to read as categorical even if numeric.
    #[arg(long, value_delimiter = ',')]
    categorical: Vec<String>,
    #[arg(long, default_value_t = 0.09)]
    fraction: f64,
    #[arg(long, default_value_t = 1001)]
    reps: usize,
    #[arg(long, default_value_t = 0.01)]
    alpha: f64,
    #[arg(long = "min-split", default_value_t = 20)]
    min_split: usize,
    #[arg(long = "min-bucket", default_value_t = 7)]
    min_bucket: usize,
    /// Categorical predictors with more levels use ordered split search.
    #[arg(long = "max-levels", default_value_t = 20)]
    max_levels: usize,
    #[arg(long)]
    constraints: Option<PathBuf>,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Number of histogram bins.
    #[arg(long, default_value_t = 20)]
    bins: usize,
    /// Run repetitions on one thread.
    #[arg(long)]
    serial: bool,
}

impl From<TrainArgs> for RunConfig {
    fn from(a: TrainArgs) -> Self {
        RunConfig {
            data: a.data,
            class_col: a.class_col,
            small_class: a.small_class,
            predictors: a.predictors,
            categorical: a.categorical,
            fraction: a.fraction,
            reps: a.reps,
            alpha: a.alpha,
            min_split: a.min_split,
            min_bucket: a.min_bucket,
            max_levels: a.max_levels,
            constraints: a.constraints,
            seed: a.seed,
            out: a.out,
            bins: a.bins,
            execution: if a.serial { Execution::Serial } else { Execution::Parallel },
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut stdout = io::stdout().lock();
    let mut stderr = io::stderr();
    let result = match cli.command {
        Command::Train(args) => cmd_train(&args.into(), &mut stdout, &mut stderr),
        Command::Predict { model, data, selector, out } => cmd_predict(&model, &data, selector, &out, &mut stdout),
        Command::Check { model, constraints } => cmd_check(&model, &constraints, &mut stdout, &mut stderr),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
