mod commands;
mod config;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Program induction over a typed adaptor grammar.
#[derive(Parser)]
#[command(name = "progind", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the chains described by a config and write logs, the final
    /// adaptor snapshot and result.json to its output directory.
    Induce { config: PathBuf },
    /// Print N programs drawn from the prior, one per line.
    SampleGrammar {
        config: PathBuf,
        #[arg(long = "n", value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
    },
    /// Print the prior and likelihood of a program under a config.
    Score {
        config: PathBuf,
        /// Program file, or `-` for standard input.
        #[arg(long)]
        program: String,
        /// Adaptor snapshot to score against instead of an empty one.
        #[arg(long)]
        adaptor: Option<PathBuf>,
    },
    /// Run a program once and print its value or failure kind.
    Eval {
        /// Program file, or `-` for standard input.
        #[arg(long)]
        program: String,
        /// JSON list of arguments.
        #[arg(long, default_value = "[]")]
        inputs: String,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        budget: u64,
    },
}

/// Every way a command can fail, each with its own exit code.
#[derive(Debug)]
pub enum Failure {
    Io(String),
    Usage(String),
    Config(String),
    Observations(String),
    AllChainsFailed(String),
    Parse(String),
    Type(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Io(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Config(_) => 3,
            Failure::Observations(_) => 4,
            Failure::AllChainsFailed(_) => 5,
            Failure::Parse(_) => 6,
            Failure::Type(_) => 7,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (kind, msg) = match self {
            Failure::Io(m) => ("i/o error", m),
            Failure::Usage(m) => ("usage error", m),
            Failure::Config(m) => ("config error", m),
            Failure::Observations(m) => ("observation error", m),
            Failure::AllChainsFailed(m) => ("induction failed", m),
            Failure::Parse(m) => ("program parse error", m),
            Failure::Type(m) => ("program type error", m),
        };
        write!(f, "{kind}: {msg}")
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Induce { config } => commands::induce(&config),
        Command::SampleGrammar { config, n } => commands::sample_grammar(&config, n),
        Command::Score {
            config,
            program,
            adaptor,
        } => commands::score(&config, &program, adaptor.as_deref()),
        Command::Eval {
            program,
            inputs,
            seed,
            budget,
        } => commands::eval(&program, &inputs, seed, budget),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("progind: {e}");
            ExitCode::from(e.code())
        }
    }
}
