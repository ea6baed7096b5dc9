//! Command-line surface over the channel, stochastic-matrix and gadget tools.
//!
//! [`run`] parses an argument vector, executes one command and returns the
//! exit code with the report text, so the binary and the tests share one
//! path. Exit codes: 0 Markovian, embeddable or success; 1 non-Markovian,
//! non-embeddable or a failed check; 2 not a channel or invalid input;
//! 3 budget or degeneracy errors; 64 usage errors.

mod commands;
mod input;
mod render;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

pub use commands::{jitter_channel, sample_measure, MeasureReport};

pub const EXIT_POSITIVE: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Budget(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) | CliError::Io { .. } => EXIT_INVALID,
            CliError::Budget(_) => EXIT_BUDGET,
        }
    }

    pub fn category(&self) -> &'static str {
        match self {
            CliError::Invalid(_) | CliError::Io { .. } => "invalid-input",
            CliError::Budget(_) => "budget-or-degeneracy",
        }
    }
}

impl From<markov_decider::DecideError> for CliError {
    fn from(e: markov_decider::DecideError) -> Self {
        use markov_decider::DecideError as E;
        match e {
            E::Core(_) | E::NotChannel(_) | E::Config(_) => CliError::Invalid(e.to_string()),
            _ => CliError::Budget(e.to_string()),
        }
    }
}

impl From<classical_embed::EmbedError> for CliError {
    fn from(e: classical_embed::EmbedError) -> Self {
        use classical_embed::EmbedError as E;
        match e {
            E::Core(_) | E::Invalid(_) => CliError::Invalid(e.to_string()),
            _ => CliError::Budget(e.to_string()),
        }
    }
}

impl From<sat_gadget::GadgetError> for CliError {
    fn from(e: sat_gadget::GadgetError) -> Self {
        use sat_gadget::GadgetError as E;
        match e {
            E::Parse(_) | E::Invalid(_) => CliError::Invalid(e.to_string()),
            _ => CliError::Budget(e.to_string()),
        }
    }
}

impl From<superop_core::CoreError> for CliError {
    fn from(e: superop_core::CoreError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

impl From<lindblad_check::LindbladError> for CliError {
    fn from(e: lindblad_check::LindbladError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

impl From<cpt_project::ProjectError> for CliError {
    fn from(e: cpt_project::ProjectError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Text,
}

#[derive(Debug, Parser)]
#[command(name = "markov-cli", version, about = "Decide Markovianity of channels and embeddability of stochastic matrices")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: Options,
}

#[derive(Debug, Clone, Args)]
pub struct Options {
    /// Decision precision.
    #[arg(long, global = true, default_value_t = 1e-3)]
    pub epsilon: f64,
    /// Distance beyond which a map counts as not a channel (check-map).
    #[arg(long = "epsilon-prime", global = true)]
    pub epsilon_prime: Option<f64>,
    /// Integer box bound M for branch indices.
    #[arg(long = "box", global = true)]
    pub box_bound: Option<u32>,
    /// Logarithm precision.
    #[arg(long, global = true)]
    pub kappa: Option<f64>,
    /// Mix the input with a random channel at this Frobenius distance and
    /// shrink epsilon by the same amount.
    #[arg(long, global = true, value_name = "NORM")]
    pub jitter: Option<f64>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Number of random channels (sample-measure).
    #[arg(long, global = true, default_value_t = 500)]
    pub samples: usize,
    /// Hilbert-space dimension (sample-measure).
    #[arg(long, global = true, default_value_t = 2)]
    pub dim: usize,
    /// Worker threads (sample-measure); 0 uses the available parallelism.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decide whether a channel is Markovian.
    CheckChannel { file: String },
    /// Decide a map that need only be close to a channel.
    CheckMap { file: String },
    /// Decide whether a column-stochastic matrix is embeddable.
    CheckStochastic { file: String },
    /// Nearest completely positive trace-preserving map.
    ProjectCpt { file: String },
    /// Compile a 1-in-3SAT instance into a generator instance.
    Gadget { file: String },
    /// Compile and verify a 1-in-3SAT gadget.
    VerifyGadget { file: String },
    /// Build a generator from Hamiltonian, Kossakowski matrix and basis.
    LindbladBuild { file: String },
    /// Fraction of random channels that are Markovian.
    SampleMeasure,
}

/// Exit code plus the text destined for standard output and standard error.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Parses `argv` (program name first) and runs one command.
pub fn run<I, T>(argv: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    Outcome { code: 0, stdout: text, stderr: String::new() }
                }
                _ => Outcome { code: EXIT_USAGE, stdout: String::new(), stderr: text },
            };
        }
    };
    match commands::execute(&cli) {
        Ok((code, report)) => Outcome { code, stdout: report, stderr: String::new() },
        Err(e) => Outcome { code: e.exit_code(), stdout: render::error(&e, cli.opts.format), stderr: format!("error: {e}\n") },
    }
}
