//! `polyfit`: batch workflows over game logs.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "polyfit", version, about = "Multivariate Bradley-Terry ratings from pairwise games")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "POLYFIT_THREADS")]
    threads: Option<usize>,

    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit a rating spec to a game log and write the fitted parameters.
    Fit(FitArgs),
    /// Rank models from a fit, with bootstrap uncertainties.
    Leaderboard(LeaderboardArgs),
    /// Report shared bias coefficients and their influence.
    BiasReport(BiasArgs),
    /// Turn a per-question correctness CSV into preference games.
    ConvertBenchmark(ConvertArgs),
    /// Generate games from randomly drawn ground-truth ratings.
    Simulate(SimulateArgs),
    /// Choose prior σ for every "cv" term by cross-validation.
    TunePriors(TuneArgs),
    /// Held-out loss against task-game budget, multivariate vs univariate.
    Curve(CurveArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Csv,
    Md,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Base seed; every command derives its own stream from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Skip malformed game lines instead of failing.
    #[arg(long)]
    skip_invalid: bool,
    #[arg(long, default_value_t = 1000)]
    max_iter: usize,
    /// Convergence threshold on the largest gradient entry.
    #[arg(long, default_value_t = 1e-7)]
    tolerance: f64,
}

#[derive(Args, Debug, Clone)]
struct CvArgs {
    /// σ grid for "cv" priors.
    #[arg(long, value_delimiter = ',', default_values_t = polyfit_core::fit::DEFAULT_SIGMA_GRID.to_vec())]
    grid: Vec<f64>,
    #[arg(long, default_value_t = 5)]
    folds: usize,
}

#[derive(Args, Debug)]
struct FitArgs {
    #[arg(long)]
    games: PathBuf,
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    cv: CvArgs,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct LeaderboardArgs {
    #[arg(long)]
    games: PathBuf,
    /// Fit written by `polyfit fit`.
    #[arg(long)]
    fit: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Bootstrap resamples; 0 reports zero uncertainty.
    #[arg(long, default_value_t = 100)]
    resamples: usize,
    /// Shift ratings so MODEL sits at RATING, e.g. `mixtral=1114`.
    #[arg(long, value_name = "MODEL=RATING")]
    anchor: Option<String>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct BiasArgs {
    #[arg(long)]
    games: PathBuf,
    #[arg(long)]
    fit: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long, default_value_t = 100)]
    resamples: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct ConvertArgs {
    /// CSV with header `question_id,model,correct`.
    #[arg(long)]
    csv: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Games are tagged `benchmark:<name>`.
    #[arg(long, default_value = "benchmark")]
    name: String,
    /// Pairs per question; all pairs when omitted.
    #[arg(long)]
    pairs_per_question: Option<usize>,
    /// Keep models in sorted order instead of random positions.
    #[arg(long)]
    fixed_positions: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long)]
    models: usize,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    out: PathBuf,
    /// Spec of the generating model; univariate when omitted.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Also write the ground truth in fit format.
    #[arg(long)]
    truth_out: Option<PathBuf>,
    #[arg(long, default_value_t = 1000.0)]
    base_mean: f64,
    #[arg(long, default_value_t = 100.0)]
    base_std: f64,
    #[arg(long, default_value_t = 30.0)]
    modifier_std: f64,
    /// Fix a parameter, e.g. `alpha:length=130`. Repeatable.
    #[arg(long = "set", value_name = "NAME=VALUE")]
    set: Vec<String>,
    /// Weighted class of games, e.g. `code,hard:0.2` or `llm@:0.5`. Repeatable.
    #[arg(long = "stratum", value_name = "[JUDGE@]TAGS:WEIGHT")]
    strata: Vec<String>,
    /// Per-side feature sampler, e.g. `length=normal:6:0.5`. Repeatable.
    #[arg(long = "feature", value_name = "NAME=KIND:P1[:P2]")]
    features: Vec<String>,
    #[arg(long, default_value_t = 0.0)]
    draw_rate: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct TuneArgs {
    #[arg(long)]
    games: PathBuf,
    #[arg(long)]
    spec: PathBuf,
    /// Resolved spec, usable with `polyfit fit`.
    #[arg(long)]
    out: PathBuf,
    /// Per-term cross-validation losses as CSV.
    #[arg(long)]
    losses: Option<PathBuf>,
    #[command(flatten)]
    cv: CvArgs,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct CurveArgs {
    /// Task games, consumed in file order.
    #[arg(long)]
    task: PathBuf,
    #[arg(long)]
    background: PathBuf,
    #[arg(long)]
    test: PathBuf,
    #[arg(long)]
    spec_multi: PathBuf,
    #[arg(long)]
    spec_uni: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    budgets: Vec<usize>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(flatten)]
    cv: CvArgs,
    #[command(flatten)]
    common: Common,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: cannot configure {threads} threads: {e}");
            return ExitCode::from(2);
        }
    }

    let result = match cli.command {
        Command::Fit(a) => commands::fit(a),
        Command::Leaderboard(a) => commands::leaderboard(a),
        Command::BiasReport(a) => commands::bias_report(a),
        Command::ConvertBenchmark(a) => commands::convert_benchmark(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::TunePriors(a) => commands::tune_priors(a),
        Command::Curve(a) => commands::curve(a),
    };
    match result {
        Ok(commands::Status::Done) => ExitCode::SUCCESS,
        Ok(commands::Status::NotConverged) => {
            eprintln!("warning: optimizer did not converge; result written anyway");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
