//! Benchmark, trace and analysis drivers behind the `smoothncp` binary.

pub mod analyze;
pub mod bench;
pub mod starts;
pub mod trace;

use std::io;

use smoothncp::kernels::SmoothingKernel;
use smoothncp::problems::ProblemSpec;
use thiserror::Error;

pub use analyze::{run_analyze, AnalyzeArgs, Check};
pub use bench::{run_bench, BenchRun, BenchTable, OutputFormat};
pub use starts::generate_starts;
pub use trace::run_trace;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),

    #[error(transparent)]
    Solver(#[from] smoothncp::Error),

    #[error("i/o: {0}")]
    Io(#[from] io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Solver(smoothncp::Error::Parse(_)) => 2,
            _ => 1,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

/// The suite used when no `--problem` is given.
pub const DEFAULT_SUITE: [&str; 6] = ["analytic2d", "ks", "monotone:10", "monotone:100", "hphard:20", "nash5"];

/// The larger suite, adding the bigger instances of each family.
pub const FULL_SUITE: [&str; 11] = [
    "analytic2d",
    "ks",
    "nash5",
    "nash10",
    "hphard:20",
    "hphard:30",
    "hphard:100",
    "monotone:10",
    "monotone:100",
    "monotone:500",
    "monotone:1000",
];

pub const DEFAULT_KERNELS: [&str; 2] = ["rational", "exp"];

/// Parses a problem selector. A bare family name (`monotone`, `hphard`,
/// `linspd`, `nash`) takes its size from `n` and its seed from `seed`.
pub fn resolve_problem(selector: &str, n: Option<usize>, seed: u64) -> Result<ProblemSpec> {
    let sized = match (selector, n) {
        ("monotone", Some(n)) => format!("monotone:{n}"),
        ("hphard", Some(n)) => format!("hphard:{n}:{seed}"),
        ("linspd", Some(n)) => format!("linspd:{n}:{seed}"),
        ("nash", Some(n)) => format!("nash{n}"),
        ("monotone" | "hphard" | "linspd" | "nash", None) => {
            return Err(CliError::Usage(format!("problem family '{selector}' needs --n")))
        }
        _ => selector.to_string(),
    };
    sized
        .parse()
        .map_err(|e: smoothncp::Error| CliError::Usage(e.to_string()))
}

pub fn resolve_kernel(selector: &str) -> Result<SmoothingKernel> {
    selector
        .parse()
        .map_err(|e: smoothncp::Error| CliError::Usage(e.to_string()))
}
