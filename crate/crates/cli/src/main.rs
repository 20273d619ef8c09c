//! `budgeval`: execute generations, score them, and build budget curves.

use std::path::PathBuf;
use std::process::ExitCode;

use budgeval_core::{BudgetKind, BudgetUnit};
use clap::{Args, Parser, Subcommand};

mod curve;
mod error;
mod execute;
mod output;
mod score;
mod validate;

use error::{CliError, Result};

#[derive(Parser)]
#[command(name = "budgeval", version, about = "Budget-aware evaluation of sampled code generations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every generation against its problem's tests and record verdicts.
    Execute(ExecuteArgs),
    /// Tabulate pass@k per model from verdict files.
    Score(ScoreArgs),
    /// Unit-test-policy pass curves over a compute budget grid.
    Curve(CurveArgs),
    /// Ranking-policy rank-score curves over a compute budget grid.
    RankCurve(RankCurveArgs),
    /// Check inputs and run the estimator self-test.
    Validate(ValidateArgs),
}

/// `NAME=PATH` pair.
#[derive(Debug, Clone)]
pub struct Named {
    pub name: String,
    pub path: PathBuf,
}

fn parse_named(s: &str) -> std::result::Result<Named, String> {
    match s.split_once('=') {
        Some((name, path)) if !name.is_empty() && !path.is_empty() => Ok(Named {
            name: name.to_string(),
            path: PathBuf::from(path),
        }),
        _ => Err(format!("expected NAME=PATH, got `{s}`")),
    }
}

#[derive(Args)]
pub struct ExecuteArgs {
    #[arg(long)]
    pub problems: PathBuf,
    #[arg(long)]
    pub generations: PathBuf,
    /// Output directory; `verdicts.jsonl` there doubles as the checkpoint.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub parallelism: usize,
    /// Per-execution wall-clock limit in seconds.
    #[arg(long, default_value_t = 10.0)]
    pub timeout: f64,
    /// Address-space cap per execution, in bytes.
    #[arg(long)]
    pub memory_cap: Option<u64>,
    /// Interpreter command, split on whitespace.
    #[arg(long, default_value = "python3")]
    pub interpreter: String,
}

#[derive(Args)]
pub struct ScoreArgs {
    /// Verdict file of one model; repeatable.
    #[arg(long, value_parser = parse_named, required = true)]
    pub verdicts: Vec<Named>,
    /// Comma-separated k values. Defaults to 1,2,4,16,64,128,256,500,1000.
    #[arg(long, value_delimiter = ',')]
    pub k: Option<Vec<u64>>,
    /// Allow k up to n instead of n/2.
    #[arg(long)]
    pub no_cap: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct BudgetArgs {
    #[arg(long)]
    pub cost_model: PathBuf,
    #[arg(long, default_value = "flops")]
    pub budget_kind: BudgetKind,
    #[arg(long, default_value = "normalized")]
    pub unit: BudgetUnit,
    /// Comma-separated budgets. Defaults to 1,2,4,...,1024.
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long)]
    pub no_cap: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct CurveArgs {
    /// Verdict file of one model; repeatable. MODEL must be in the cost model.
    #[arg(long, value_parser = parse_named, required = true)]
    pub verdicts: Vec<Named>,
    #[command(flatten)]
    pub budget: BudgetArgs,
}

#[derive(Args)]
pub struct RankCurveArgs {
    #[arg(long)]
    pub problems: PathBuf,
    #[arg(long)]
    pub generations: PathBuf,
    /// Verdicts of the sampled generations, as MODEL=PATH.
    #[arg(long, value_parser = parse_named)]
    pub verdicts: Named,
    /// Score sidecar; repeatable.
    #[arg(long, value_parser = parse_named)]
    pub scores: Vec<Named>,
    /// Ranking policy; repeatable. nll:<model>, nll-score:<name>,
    /// external:<name>[:higher|:lower], oracle, anti-oracle, random[:seed], index.
    #[arg(long, required = true)]
    pub policy: Vec<String>,
    /// Seed for `random` without an explicit seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub budget: BudgetArgs,
}

#[derive(Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub problems: Option<PathBuf>,
    #[arg(long, requires = "problems")]
    pub generations: Option<PathBuf>,
    #[arg(long, value_parser = parse_named, requires = "generations")]
    pub scores: Vec<Named>,
    #[arg(long, value_parser = parse_named)]
    pub verdicts: Vec<Named>,
    #[arg(long)]
    pub cost_model: Option<PathBuf>,
    /// Seed of the estimator self-test.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Execute(a) => execute::run(&a),
        Command::Score(a) => score::run(&a),
        Command::Curve(a) => curve::run_pass(&a),
        Command::RankCurve(a) => curve::run_rank(&a),
        Command::Validate(a) => validate::run(&a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

pub(crate) fn check_out_dir(dir: &std::path::Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::infra(format!("{}: {e}", dir.display())))
}
