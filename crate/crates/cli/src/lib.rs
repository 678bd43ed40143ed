//! Command-line driver: `rank`, `optimize`, `table`, `verify` and `serve`.
//!
//! Exit codes: 0 success, 1 some batch rows failed, 2 usage or input error,
//! 3 a solve stopped before proving optimality.

mod output;
mod verify;

use std::io::Write;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rankopt::dataset::{parse_json, DatasetError};
use rankopt::optimizer::{self, Direction, OptimizationSpec, OptimizerError, Order};
use rankopt::ranking::{ranking_table, RankingError, WeightMode, WeightVector};
use rankopt::{embedded_fixture_2014, parse_csv, IndicatorMatrix};
use thiserror::Error;

pub use output::{parse_table_csv, TableRow};

pub const EXIT_OK: u8 = 0;
pub const EXIT_PARTIAL: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_UNPROVEN: u8 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "rankopt",
    version,
    about = "Rank-optimal weights for composite indicators"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rank every entity under the given weights.
    Rank(RankArgs),
    /// Find the weights that move one entity highest (or lowest).
    Optimize(OptimizeArgs),
    /// Optimize every entity and print the sorted batch table.
    Table(TableArgs),
    /// Cross-check the optimizer against exhaustive enumeration.
    Verify(VerifyArgs),
    /// Serve the JSON API.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Indicator file (CSV, or JSON when the name ends in .json). Defaults
    /// to the embedded 15-entity fixture.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// The CSV holds raw values; min-max normalize each column (a `:lower`
    /// header suffix flips polarity).
    #[arg(long)]
    pub raw: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Text,
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct RankArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Weight mode; inferred from the values when omitted.
    #[arg(long)]
    pub mode: Option<WeightMode>,
    #[arg(long, value_enum, default_value = "text")]
    pub format: OutputFormat,
    /// One weight per dimension, in dataset order.
    #[arg(required = true, num_args = 1..)]
    pub weights: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long, default_value = "integer")]
    pub mode: WeightMode,
    /// 1 = best rank only, 2 = also maximize the lead.
    #[arg(long, default_value = "2")]
    pub order: Order,
    #[arg(long, default_value = "best")]
    pub direction: Direction,
    /// Minimal continuous weight.
    #[arg(long, default_value_t = 0.0)]
    pub wmin: f64,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub entity: String,
    #[command(flatten)]
    pub solve: SolveArgs,
    #[arg(long, value_enum, default_value = "text")]
    pub format: OutputFormat,
}

#[derive(Debug, Args)]
pub struct TableArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub solve: SolveArgs,
    #[arg(long, value_enum, default_value = "text")]
    pub format: OutputFormat,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Entity to check; all entities when omitted.
    #[arg(long)]
    pub entity: Option<String>,
    #[arg(long, default_value = "integer")]
    pub mode: WeightMode,
    #[arg(long, default_value = "best")]
    pub direction: Direction,
    /// Largest integer weight for both solvers.
    #[arg(long, default_value_t = 3)]
    pub cap: u32,
    /// Check seeded random instances instead of a data file.
    #[arg(long, conflicts_with_all = ["data", "entity"])]
    pub seed: Option<u64>,
    /// Number of consecutive seeds to check.
    #[arg(long, default_value_t = 1, requires = "seed")]
    pub count: u64,
    /// Entities per random instance.
    #[arg(long, default_value_t = 6, requires = "seed")]
    pub entities: usize,
    /// Dimensions per random instance.
    #[arg(long, default_value_t = 4, requires = "seed")]
    pub dimensions: usize,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = rankopt_service::DEFAULT_PORT)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: IpAddr,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Ranking(#[from] RankingError),
    #[error(transparent)]
    Optimizer(#[from] OptimizerError),
    #[error("output failed: {0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Output(_) => EXIT_PARTIAL,
            _ => EXIT_USAGE,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Output(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::Output(e.to_string())
    }
}

pub fn load_data(args: &DataArgs) -> Result<IndicatorMatrix, CliError> {
    let Some(path) = &args.data else {
        return Ok(embedded_fixture_2014());
    };
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let is_json = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    Ok(if is_json {
        parse_json(&text)?
    } else {
        parse_csv(&text, !args.raw)?
    })
}

/// Node budget from `RANKOPT_NODE_BUDGET`, if set.
pub fn node_budget_override() -> Result<Option<u64>, CliError> {
    match std::env::var("RANKOPT_NODE_BUDGET") {
        Ok(v) => v
            .trim()
            .parse::<u64>()
            .ok()
            .filter(|&n| n > 0)
            .map(Some)
            .ok_or_else(|| {
                CliError::Usage(format!(
                    "RANKOPT_NODE_BUDGET must be a positive integer, got `{v}`"
                ))
            }),
        Err(_) => Ok(None),
    }
}

fn find_entity(data: &IndicatorMatrix, name: &str) -> Result<usize, CliError> {
    data.find_entity(name)
        .ok_or_else(|| CliError::Usage(format!("unknown entity `{name}`")))
}

fn spec_for(target: usize, args: &SolveArgs) -> Result<OptimizationSpec, CliError> {
    let mut spec = OptimizationSpec::new(target)
        .with_mode(args.mode)
        .with_order(args.order)
        .with_direction(args.direction)
        .with_w_min(args.wmin);
    if let Some(budget) = node_budget_override()? {
        spec = spec.with_node_budget(budget);
    }
    Ok(spec)
}

/// Runs one command, writing its report to `out`. Returns the exit code.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<u8, CliError> {
    match cli.command {
        Command::Rank(args) => cmd_rank(&args, out),
        Command::Optimize(args) => cmd_optimize(&args, out),
        Command::Table(args) => cmd_table(&args, out),
        Command::Verify(args) => verify::cmd_verify(&args, out),
        Command::Serve(args) => cmd_serve(&args),
    }
}

fn cmd_rank(args: &RankArgs, out: &mut dyn Write) -> Result<u8, CliError> {
    let data = load_data(&args.data)?;
    if args.weights.len() != data.num_dimensions() {
        return Err(CliError::Usage(format!(
            "expected {} weights (one per dimension), got {}",
            data.num_dimensions(),
            args.weights.len()
        )));
    }
    let mode = args
        .mode
        .unwrap_or(if args.weights.iter().all(|w| w.fract() == 0.0) {
            WeightMode::Integer
        } else {
            WeightMode::Continuous
        });
    let weights = WeightVector::from_values(mode, &args.weights)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let table = ranking_table(&data, &weights)?;
    let equal = ranking_table(&data, &WeightVector::equal_weights(data.num_dimensions()))?;
    output::write_ranking(out, args.format, &table, &equal)?;
    Ok(EXIT_OK)
}

fn cmd_optimize(args: &OptimizeArgs, out: &mut dyn Write) -> Result<u8, CliError> {
    let data = load_data(&args.data)?;
    let target = find_entity(&data, &args.entity)?;
    let solution = optimizer::solve(&data, &spec_for(target, &args.solve)?)?;
    output::write_solution(out, args.format, &data, &solution)?;
    Ok(if solution.is_proven() {
        EXIT_OK
    } else {
        EXIT_UNPROVEN
    })
}

fn cmd_table(args: &TableArgs, out: &mut dyn Write) -> Result<u8, CliError> {
    let data = load_data(&args.data)?;
    let template = spec_for(0, &args.solve)?;
    let entries = optimizer::solve_all(&data, &template);
    let equal = ranking_table(&data, &WeightVector::equal_weights(data.num_dimensions()))?;
    let rows = output::table_rows(&data, &entries, &equal);
    output::write_table(out, args.format, &data, &rows)?;
    Ok(if rows.iter().any(|r| r.error.is_some()) {
        EXIT_PARTIAL
    } else if rows.iter().any(|r| !r.proven) {
        EXIT_UNPROVEN
    } else {
        EXIT_OK
    })
}

fn cmd_serve(args: &ServeArgs) -> Result<u8, CliError> {
    let data = load_data(&args.data)?;
    let mut state = rankopt_service::AppState::new(data);
    if let Some(budget) = node_budget_override()? {
        state = state.with_node_budget(budget);
    }
    let addr = SocketAddr::new(args.host, args.port);
    let runtime = tokio::runtime::Runtime::new()?;
    runtime
        .block_on(rankopt_service::serve(state, addr))
        .map_err(|e| CliError::Usage(format!("cannot serve on {addr}: {e}")))?;
    Ok(EXIT_OK)
}

/// Display name for a path-less dataset.
pub fn data_label(args: &DataArgs) -> String {
    args.data
        .as_deref()
        .map(Path::display)
        .map_or_else(|| "embedded fixture".to_owned(), |p| p.to_string())
}
