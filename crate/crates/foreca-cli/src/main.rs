//! Command-line front end: score forecastability per column, fit and store
//! forecastable-component models, apply stored models, and emit plot-ready
//! spectral density and autocorrelation tables.

mod commands;
mod csv_io;
mod error;
mod model_file;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use csv_io::{HeaderMode, ReadOptions};
use error::CliError;

#[derive(Parser)]
#[command(
    name = "foreca",
    version,
    about = "Forecastable component analysis for multivariate time series"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Report the forecastability score of each selected column
    Omega(OmegaArgs),
    /// Fit the K most forecastable components and store the model
    Fit(FitArgs),
    /// Apply a stored model to a dataset, emitting component series
    Transform(TransformArgs),
    /// Emit the spectral density and sample autocorrelation of one column
    Spectrum(SpectrumArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum HeaderArg {
    Auto,
    Yes,
    No,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Format {
    Table,
    Json,
}

fn parse_delimiter(s: &str) -> Result<u8, String> {
    let bytes = s.as_bytes();
    if bytes.len() != 1 {
        return Err(format!("delimiter must be a single byte, got '{s}'"));
    }
    Ok(bytes[0])
}

#[derive(Args)]
pub struct DataArgs {
    /// Input CSV file
    input: PathBuf,
    /// Field delimiter of the input file
    #[arg(long, default_value = ",", value_parser = parse_delimiter)]
    delimiter: u8,
    /// Header row handling; auto treats a non-numeric first row as a header
    #[arg(long, value_enum, default_value = "auto")]
    header: HeaderArg,
}

impl DataArgs {
    fn read_options(&self) -> ReadOptions {
        ReadOptions {
            delimiter: self.delimiter,
            header: match self.header {
                HeaderArg::Auto => HeaderMode::Auto,
                HeaderArg::Yes => HeaderMode::Yes,
                HeaderArg::No => HeaderMode::No,
            },
        }
    }
}

#[derive(Args)]
pub struct OmegaArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Columns to score (names or 1-based indices); default all
    #[arg(long)]
    columns: Option<String>,
    /// Spectral estimator segment length (even, at least 4); default is
    /// chosen from the series length
    #[arg(long)]
    segment_length: Option<usize>,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
    /// Exit with status 3 when any column fails to score
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
pub struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Number of components to extract (1..=n)
    #[arg(long)]
    components: usize,
    /// Random restarts per component
    #[arg(long, default_value = "5")]
    restarts: usize,
    /// Convergence tolerance on the iterate gap
    #[arg(long, default_value = "1e-8")]
    tol: f64,
    /// Iteration cap per restart
    #[arg(long, default_value = "200")]
    max_iter: usize,
    /// PRNG seed for the restart draws
    #[arg(long, default_value = "0")]
    seed: u64,
    /// Spectral estimator segment length; default chosen from series length
    #[arg(long)]
    segment_length: Option<usize>,
    /// Where to write the model document
    #[arg(long)]
    output: PathBuf,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
}

#[derive(Args)]
pub struct TransformArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Model document produced by `fit`
    #[arg(long)]
    model: PathBuf,
    /// Where to write the component series CSV
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Column to analyze (name or 1-based index)
    #[arg(long)]
    column: String,
    /// Longest autocorrelation lag to emit; default min(48, rows - 1)
    #[arg(long)]
    acf_lags: Option<usize>,
    /// Spectral estimator segment length; default chosen from series length
    #[arg(long)]
    segment_length: Option<usize>,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
    /// Exit with status 3 when the column fails to score
    #[arg(long)]
    strict: bool,
}

fn run(cli: Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Omega(args) => commands::cmd_omega(args),
        Command::Fit(args) => commands::cmd_fit(args),
        Command::Transform(args) => commands::cmd_transform(args),
        Command::Spectrum(args) => commands::cmd_spectrum(args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
