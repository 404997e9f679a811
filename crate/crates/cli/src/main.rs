use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand};

mod commands;
mod output;

/// PAC-reasoning engine: sample-complexity bounds, bottom-up and top-down
/// decomposition searches, and Monte Carlo validation of the bounds.
#[derive(Debug, Parser)]
#[command(name = "pacr", version)]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Number of critic samples m for a proposal class.
    SampleComplexity(SampleComplexityArgs),
    /// Run a decomposition search from a JSON experiment config.
    Run(RunArgs),
    /// Run a Monte Carlo bound-validation experiment from a JSON config.
    ValidateBounds(BoundsArgs),
    /// Exact and approximate success probability of a chain of steps.
    ChainDecay(DecayArgs),
    /// Evaluate a function of a .pacl file on literal arguments.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("bound").required(true).args(["lemma", "bottom_up", "top_down"])))]
struct SampleComplexityArgs {
    /// m = ceil(ln(|P|/delta) / epsilon).
    #[arg(long)]
    lemma: bool,
    /// m = ceil(ln(|P| k/delta) 2k / epsilon).
    #[arg(long)]
    bottom_up: bool,
    /// m = ceil(ln(|P| k/delta) k / epsilon).
    #[arg(long)]
    top_down: bool,
    /// Proposal class size |P|.
    #[arg(short = 'P', long = "class-size")]
    class_size: u64,
    /// Maximum number of steps k_max.
    #[arg(short = 'k', long = "k-max", default_value_t = 1)]
    k_max: u64,
    #[arg(short = 'e', long)]
    epsilon: f64,
    #[arg(short = 'd', long)]
    delta: f64,
    /// Print {m, epsilon_hat, delta_hat} as JSON.
    #[arg(long)]
    json: bool,
}

/// Values that take precedence over the config file.
#[derive(Debug, Args, Default)]
struct Overrides {
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long = "k-max")]
    k_max: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    heldout: Option<u64>,
    /// Worker threads for trials.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Experiment config (JSON).
    config: PathBuf,
    /// Directory for the certificate, event log and result program.
    #[arg(short, long, default_value = "pacr-out")]
    out: PathBuf,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Debug, Args)]
struct BoundsArgs {
    /// Experiment config (JSON) with task lemma1, lemma2 or decay.
    config: PathBuf,
    /// Directory for the CSV and JSON reports.
    #[arg(short, long, default_value = "pacr-out")]
    out: PathBuf,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Debug, Args)]
struct DecayArgs {
    /// Per-step error probability.
    #[arg(short = 'e', long)]
    epsilon: f64,
    /// Chain lengths, comma separated.
    #[arg(short = 'k', long = "k-values", value_delimiter = ',', default_values_t = [1u64, 5, 10, 50])]
    k_values: Vec<u64>,
    /// Also simulate this many chains per k.
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Program file (.pacl).
    file: PathBuf,
    /// Function to call.
    function: String,
    /// Argument literals, e.g. `[3, 1, 2]` or `-4`.
    #[arg(allow_hyphen_values = true)]
    args: Vec<String>,
    #[arg(long, default_value_t = pacr_core::dsl::DEFAULT_FUEL)]
    fuel: u64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match cli.command {
        Command::SampleComplexity(a) => commands::sample_complexity(a),
        Command::Run(a) => commands::run(a),
        Command::ValidateBounds(a) => commands::validate_bounds(a),
        Command::ChainDecay(a) => commands::chain_decay(a),
        Command::Eval(a) => commands::eval(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
