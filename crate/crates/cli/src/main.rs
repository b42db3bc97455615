//! `harq`: evaluate, optimize and regenerate figure data for RTD/INR HARQ
//! power allocation. Powers are given and reported in dB.

mod commands;
mod config;
mod error;
mod figures;
mod table;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use harq_power::optimizer::HarqScheme;
use harq_power::{CommModel, FadingSpec64, Protocol};

use error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProtocolArg {
    Rtd,
    Inr,
}

impl ProtocolArg {
    pub fn scheme(self, rate: f64, m: usize) -> Result<HarqScheme<f64>, CliError> {
        Ok(match self {
            ProtocolArg::Rtd => HarqScheme::rtd(rate, m)?,
            ProtocolArg::Inr => HarqScheme::inr_fixed_length(rate, m)?,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            ProtocolArg::Rtd => "rtd",
            ProtocolArg::Inr => "inr",
        }
    }
}

impl From<ProtocolArg> for Protocol {
    fn from(p: ProtocolArg) -> Self {
        match p {
            ProtocolArg::Rtd => Protocol::Rtd,
            ProtocolArg::Inr => Protocol::Inr,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Continuous,
    Bursting,
}

impl ModelArg {
    pub fn name(self) -> &'static str {
        match self {
            ModelArg::Continuous => "continuous",
            ModelArg::Bursting => "bursting",
        }
    }
}

impl From<ModelArg> for CommModel {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Continuous => CommModel::Continuous,
            ModelArg::Bursting => CommModel::Bursting,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Alg1,
    Geometric,
    ShortTerm,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Alg1 => "alg1",
            Method::Geometric => "geometric",
            Method::ShortTerm => "short-term",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Flags shared by every command. List flags take comma-separated values.
#[derive(Args, Debug, Clone, Default)]
pub struct Params {
    #[arg(long, value_enum)]
    pub protocol: Option<ProtocolArg>,
    #[arg(long, value_enum)]
    pub model: Option<ModelArg>,
    /// Maximum number of retransmissions.
    #[arg(long = "M", value_delimiter = ',', action = ArgAction::Set)]
    pub m: Vec<usize>,
    /// Initial rate in nats per channel use.
    #[arg(long = "R", value_delimiter = ',', action = ArgAction::Set)]
    pub r: Vec<f64>,
    #[arg(long, value_delimiter = ',', action = ArgAction::Set)]
    pub epsilon: Vec<f64>,
    /// Gauss-Markov correlation; 1 is block fading.
    #[arg(long, value_delimiter = ',', action = ArgAction::Set)]
    pub beta: Vec<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    /// Per-round powers in dB (evaluate), or the average power for figure 13.
    #[arg(long, value_delimiter = ',', action = ArgAction::Set, allow_negative_numbers = true)]
    pub power: Vec<f64>,
    /// Monte Carlo packets or sample-average samples.
    #[arg(long)]
    pub packets: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

impl Params {
    pub fn protocol(&self) -> ProtocolArg {
        self.protocol.unwrap_or(ProtocolArg::Rtd)
    }

    pub fn model(&self) -> ModelArg {
        self.model.unwrap_or(ModelArg::Continuous)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn fading(&self, beta: f64) -> Result<FadingSpec64, CliError> {
        Ok(FadingSpec64::rayleigh(self.lambda.unwrap_or(1.0))?.correlated(beta)?)
    }

    pub fn packets(&self, default: usize) -> Result<usize, CliError> {
        match self.packets {
            Some(0) => Err(CliError::Config("--packets must be positive".into())),
            Some(n) => Ok(n),
            None => Ok(default),
        }
    }

    pub fn format(&self) -> Format {
        self.format.unwrap_or(Format::Csv)
    }
}

/// A list flag or its default.
pub fn or_default<T: Clone>(values: &[T], default: &[T]) -> Vec<T> {
    if values.is_empty() {
        default.to_vec()
    } else {
        values.to_vec()
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Metrics of an explicit policy (--power) or of the uniform short-term
    /// policy for each --epsilon.
    Evaluate(Params),
    /// Outage-constrained minimum average power for each (R, M, epsilon).
    Optimize(Params),
    /// Data behind figure ID (3 to 14).
    Figure {
        id: u32,
        #[command(flatten)]
        params: Params,
    },
}

#[derive(Parser, Debug)]
#[command(name = "harq", version, about, args_override_self = true)]
struct Cli {
    /// Flat key = value file; keys are the flag names.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

fn run() -> Result<(), CliError> {
    let args = config::expand(std::env::args().collect())?;
    let cli = Cli::try_parse_from(args).unwrap_or_else(|e| e.exit());
    let (table, params) = match &cli.command {
        Command::Evaluate(p) => (commands::evaluate(p)?, p),
        Command::Optimize(p) => (commands::optimize(p)?, p),
        Command::Figure { id, params } => (figures::figure(*id, params)?, params),
    };
    table.write(params.format(), params.out.as_deref())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("harq: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
