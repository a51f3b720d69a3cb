//! `dibi`: satisfaction, conditional independence, composition and the
//! randomized suites over kernel files.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use dibi_core::ci::Flavor;
use dibi_core::Error;

mod commands;

use commands::Report;

/// Exit statuses.
pub mod status {
    pub const TRUE: u8 = 0;
    pub const FALSE: u8 = 1;
    pub const ERROR: u8 = 2;
    pub const USAGE: u8 = 64;
    pub const DATA: u8 = 65;
    pub const UNSUPPORTED: u8 = 69;
}

#[derive(Parser, Debug)]
#[command(name = "dibi", version, about = "Input-preserving kernels, DIBI satisfaction and conditional independence")]
struct Cli {
    /// Report format.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Op {
    Seq,
    Par,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum RandomInstance {
    Finstoch,
    Finrel,
    All,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Auto,
    Exact,
    Bounded,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Whether a kernel satisfies a formula.
    Check {
        file: PathBuf,
        kernel: String,
        formula: String,
        #[arg(long, value_enum, default_value_t = Mode::Auto)]
        mode: Mode,
        /// Search budget for the bounded mode.
        #[arg(long)]
        budget: Option<u64>,
    },
    /// Whether `X` and `Y` are independent given `W` in a state.
    Ci {
        file: PathBuf,
        kernel: String,
        #[arg(long, value_delimiter = ',', default_value = "")]
        w: Vec<String>,
        #[arg(long, value_delimiter = ',', default_value = "")]
        x: Vec<String>,
        #[arg(long, value_delimiter = ',', default_value = "")]
        y: Vec<String>,
        /// Extra output variables outside `W ∪ X ∪ Y`.
        #[arg(long, value_delimiter = ',', default_value = "")]
        u: Vec<String>,
        #[arg(long, default_value = "dibi", value_parser = parse_flavor)]
        flavor: Flavor,
    },
    /// Composes two kernels of a file and writes the result as a new file.
    Compose {
        file: PathBuf,
        left: String,
        #[arg(value_enum)]
        op: Op,
        right: String,
        #[arg(short, long)]
        output: PathBuf,
        /// Name of the composite in the output file.
        #[arg(long, default_value = "out")]
        name: String,
    },
    /// Evaluates frame conditions on a file, or runs the randomized suite.
    Frames {
        #[arg(required_unless_present = "random", conflicts_with = "random")]
        file: Option<PathBuf>,
        #[arg(long)]
        random: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        trials: u64,
        /// Variables available to each random case.
        #[arg(long, default_value_t = 4)]
        vars: usize,
        #[arg(long, value_enum, default_value_t = RandomInstance::All)]
        instance: RandomInstance,
        /// Directory receiving one kernel file per counterexample.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compares the independence notions on random states.
    Harness {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        trials: u64,
        /// Writes the first counterexample, if any, to this path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Whether two diagrams of a synvar file are equal.
    SynvarEq { file: PathBuf, left: String, right: String },
}

fn parse_flavor(s: &str) -> Result<Flavor, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn exit_for(e: &Error) -> u8 {
    match e {
        Error::Parse(_) | Error::File(_) => status::DATA,
        Error::Unsupported(_) | Error::UnsupportedShape(_) => status::UNSUPPORTED,
        _ => status::ERROR,
    }
}

fn run(cli: Cli) -> Result<Report, Error> {
    match cli.command {
        Command::Check { file, kernel, formula, mode, budget } => commands::check(&file, &kernel, &formula, mode, budget),
        Command::Ci { file, kernel, w, x, y, u, flavor } => commands::ci(&file, &kernel, [&w, &x, &y, &u], flavor),
        Command::Compose { file, left, op, right, output, name } => commands::compose(&file, &left, op, &right, &output, &name),
        Command::Frames { file: Some(file), .. } => commands::frames_file(&file),
        Command::Frames { file: None, seed, trials, vars, instance, out, .. } => commands::frames_random(seed, trials, vars, instance, out.as_deref()),
        Command::Harness { seed, trials, out } => commands::harness(seed, trials, out.as_deref()),
        Command::SynvarEq { file, left, right } => commands::synvar_eq(&file, &left, &right),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { status::USAGE } else { status::TRUE };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let format = cli.format;
    match run(cli) {
        Ok(report) => {
            match format {
                Format::Json => println!("{}", serde_json::to_string_pretty(&report.json).expect("reports serialize")),
                Format::Text => print!("{}", report.text),
            }
            ExitCode::from(if report.holds { status::TRUE } else { status::FALSE })
        }
        Err(e) => {
            match format {
                Format::Json => println!("{}", serde_json::json!({ "error": e.to_string() })),
                Format::Text => eprintln!("error: {e}"),
            }
            ExitCode::from(exit_for(&e))
        }
    }
}
