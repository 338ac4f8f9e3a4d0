use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use smoothncp::solver::{continuation_solve, SolverConfig};
use smoothncp_cli::{
    resolve_kernel, resolve_problem, run_analyze, run_bench, run_trace, AnalyzeArgs, BenchRun, Check, CliError,
    OutputFormat, Result, DEFAULT_KERNELS, DEFAULT_SUITE, FULL_SUITE,
};

#[derive(Parser)]
#[command(
    name = "smoothncp",
    version,
    about = "Smoothing continuation solver for nonlinear complementarity problems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one problem from one start.
    Solve(SolveArgs),
    /// Run the multi-start benchmark and print the worst case per (problem, kernel).
    Bench(BenchArgs),
    /// Dump every outer iterate of one problem to CSV.
    Trace(TraceArgs),
    /// Run a numerical check on a smoothing kernel and print the JSON report.
    Analyze(AnalyzeCmd),
}

#[derive(Args)]
struct Common {
    /// Size for bare problem families (monotone, hphard, linspd, nash).
    #[arg(long)]
    n: Option<usize>,
    /// Seed for random problem instances and starting points.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Outer stopping tolerance on Res.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
}

impl Common {
    fn config(&self) -> Result<SolverConfig> {
        let cfg = SolverConfig {
            outer_tol: self.tol,
            ..Default::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct SolveArgs {
    /// Problem selector, e.g. analytic2d, ks, nash5, monotone:100, hphard:20:3.
    #[arg(long)]
    problem: String,
    /// Kernel: rational, exp or phi:<lambda>[:<scale>].
    #[arg(long, default_value = "exp")]
    theta: String,
    /// Starting point, comma separated; all-ones if omitted.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x0: Option<Vec<f64>>,
    #[arg(long, default_value = "md")]
    format: String,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated problem selectors, or `default` / `full` for a built-in suite.
    #[arg(long, default_value = "default")]
    problem: String,
    /// Comma-separated kernels.
    #[arg(long, value_delimiter = ',')]
    theta: Option<Vec<String>>,
    #[arg(long, default_value_t = 11)]
    starts: usize,
    #[arg(long, default_value = "md")]
    format: String,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also list every individual start.
    #[arg(long)]
    verbose: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct TraceArgs {
    #[arg(long)]
    problem: String,
    #[arg(long, value_delimiter = ',')]
    theta: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x0: Option<Vec<f64>>,
    /// CSV output path.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct AnalyzeCmd {
    /// ha, limits, subadd_v, concavity or speed.
    #[arg(long)]
    check: String,
    #[arg(long, default_value = "exp")]
    theta: String,
    #[arg(long, default_value_t = 0.25)]
    a: f64,
    #[arg(long, default_value_t = 1e6)]
    s_max: f64,
    #[arg(long)]
    lo: Option<f64>,
    #[arg(long)]
    hi: Option<f64>,
    #[arg(long, default_value_t = 64)]
    per_decade: usize,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    s: f64,
    #[arg(long, default_value_t = 2.0, allow_hyphen_values = true)]
    t: f64,
    #[arg(long, default_value_t = 0.5)]
    r0: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn kernels_or_default(theta: Option<Vec<String>>) -> Vec<String> {
    theta.unwrap_or_else(|| DEFAULT_KERNELS.iter().map(|s| s.to_string()).collect())
}

fn solve(args: SolveArgs) -> Result<bool> {
    let spec = resolve_problem(&args.problem, args.common.n, args.common.seed)?;
    let problem = spec.build()?;
    let kernel = resolve_kernel(&args.theta)?;
    let x0 = args.x0.unwrap_or_else(|| vec![1.0; problem.dim()]);
    if x0.len() != problem.dim() {
        return Err(CliError::Usage(format!(
            "--x0 has {} entries, problem has {}",
            x0.len(),
            problem.dim()
        )));
    }
    let rep = continuation_solve(&problem, &kernel, &x0, &args.common.config()?)?;
    let text = match args.format.parse::<OutputFormat>()? {
        OutputFormat::Json => serde_json::to_string_pretty(&rep)? + "\n",
        OutputFormat::Markdown | OutputFormat::Csv => {
            let mut s = format!(
                "problem {spec} (n = {}), kernel {}\nstatus {}\nOutIter {}  InIter {}  Res {:.3e}  Feas {:.3e}  time {:.3}s\n",
                problem.dim(),
                kernel.name(),
                rep.status.as_str(),
                rep.out_iter,
                rep.in_iter,
                rep.res,
                rep.feas,
                rep.wall_time
            );
            if let Some(msg) = &rep.message {
                s += &format!("note: {msg}\n");
            }
            let shown: Vec<String> = rep.x_final.iter().take(10).map(|v| format!("{v:.8}")).collect();
            let more = if problem.dim() > 10 { ", ..." } else { "" };
            s += &format!("x = [{}{more}]\n", shown.join(", "));
            s
        }
    };
    emit(&args.out, &text)?;
    Ok(rep.converged())
}

fn bench(args: BenchArgs) -> Result<bool> {
    let selectors: Vec<String> = match args.problem.as_str() {
        "default" => DEFAULT_SUITE.iter().map(|s| s.to_string()).collect(),
        "full" => FULL_SUITE.iter().map(|s| s.to_string()).collect(),
        list => list
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(String::from)
            .collect(),
    };
    let problems = selectors
        .iter()
        .map(|s| resolve_problem(s, args.common.n, args.common.seed))
        .collect::<Result<Vec<_>>>()?;
    let format: OutputFormat = args.format.parse()?;
    let run = BenchRun {
        problems,
        kernels: kernels_or_default(args.theta),
        starts_per_problem: args.starts,
        rng_seed: args.common.seed,
        output_format: format,
        config: args.common.config()?,
    };
    let table = run_bench(&run)?;
    emit(&args.out, &table.render(format, args.verbose)?)?;
    Ok(table.all_converged())
}

fn trace(args: TraceArgs) -> Result<bool> {
    let spec = resolve_problem(&args.problem, args.common.n, args.common.seed)?;
    let kernels = kernels_or_default(args.theta);
    let reports = run_trace(&spec, &kernels, args.x0.as_deref(), &args.common.config()?, &args.out)?;
    for (name, rep) in &reports {
        eprintln!(
            "{name}: {} after {} outer iterations, Res {:.3e}",
            rep.status.as_str(),
            rep.out_iter,
            rep.res
        );
    }
    Ok(reports.iter().all(|(_, r)| r.converged()))
}

fn analyze(args: AnalyzeCmd) -> Result<bool> {
    let check: Check = args.check.parse()?;
    let grid = AnalyzeArgs {
        a: args.a,
        s_max: args.s_max,
        lo: args.lo,
        hi: args.hi,
        per_decade: args.per_decade,
        s: args.s,
        t: args.t,
        r0: args.r0,
    };
    let report = run_analyze(&args.theta, check, &grid)?;
    emit(&args.out, &(serde_json::to_string_pretty(&report)? + "\n"))?;
    Ok(report.holds())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Solve(a) => solve(a),
        Command::Bench(a) => bench(a),
        Command::Trace(a) => trace(a),
        Command::Analyze(a) => analyze(a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
