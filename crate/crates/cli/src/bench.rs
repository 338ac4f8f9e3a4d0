use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;
use smoothncp::problems::ProblemSpec;
use smoothncp::solver::{continuation_solve, SolveStatus, SolverConfig};
use smoothncp::NcpProblem;

use crate::starts::generate_starts;
use crate::{resolve_kernel, CliError, Result};

/// A converged point within this distance of a known solution is attributed to it.
pub const KNOWN_SOLUTION_RADIUS: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Markdown,
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "md" | "markdown" => Ok(OutputFormat::Markdown),
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(CliError::Usage(format!("unknown format '{s}' (md, csv, json)"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchRun {
    pub problems: Vec<ProblemSpec>,
    pub kernels: Vec<String>,
    pub starts_per_problem: usize,
    pub rng_seed: u64,
    pub output_format: OutputFormat,
    pub config: SolverConfig,
}

impl BenchRun {
    pub fn new(problems: Vec<ProblemSpec>, kernels: Vec<String>) -> Self {
        BenchRun {
            problems,
            kernels,
            starts_per_problem: 11,
            rng_seed: 1,
            output_format: OutputFormat::Markdown,
            config: SolverConfig::default(),
        }
    }
}

/// One solve from one start.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StartResult {
    pub problem: String,
    pub kernel: String,
    pub start: usize,
    pub status: SolveStatus,
    pub out_iter: usize,
    pub in_iter: usize,
    pub res: f64,
    pub feas: f64,
    /// Index into the problem's known solutions, if the final point is one of them.
    pub known_solution: Option<usize>,
    /// Largest `x_i F_i - r^2` over trace points whose inner solve converged.
    pub prop_i_excess: f64,
    /// Trace points carried forward from an unconverged inner solve.
    pub unconverged_points: usize,
    pub x_final: Vec<f64>,
    #[serde(skip)]
    pub cpu_s: f64,
}

/// Worst case over the starts of one (problem, kernel) pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub problem: String,
    pub n: usize,
    pub kernel: String,
    pub out_iter: usize,
    pub in_iter: usize,
    /// Over converged starts only; `None` if none converged.
    pub res: Option<f64>,
    pub feas: Option<f64>,
    pub converged: usize,
    pub starts: usize,
    #[serde(skip)]
    pub cpu_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchTable {
    pub notes: Vec<String>,
    pub rows: Vec<BenchRow>,
    pub runs: Vec<StartResult>,
}

impl BenchTable {
    pub fn all_converged(&self) -> bool {
        self.rows.iter().all(|r| r.converged == r.starts)
    }

    /// Renders the table; `verbose` appends one line per start.
    pub fn render(&self, format: OutputFormat, verbose: bool) -> Result<String> {
        match format {
            OutputFormat::Markdown => Ok(self.markdown(verbose)),
            OutputFormat::Csv => self.csv(verbose),
            OutputFormat::Json => self.json(verbose),
        }
    }

    fn markdown(&self, verbose: bool) -> String {
        let mut out = String::new();
        for note in &self.notes {
            let _ = writeln!(out, "> {note}");
        }
        out.push('\n');
        out.push_str("| problem | n | kernel | OutIter | InIter | Res | Feas | converged | cpu_s |\n");
        out.push_str("|---|---|---|---|---|---|---|---|---|\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "| {} | {} | {} | {} | {} | {} | {} | {}/{} | {:.3} |",
                r.problem,
                r.n,
                r.kernel,
                r.out_iter,
                r.in_iter,
                sci(r.res),
                sci(r.feas),
                r.converged,
                r.starts,
                r.cpu_s
            );
        }
        if verbose {
            out.push_str("\n| problem | kernel | start | status | OutIter | InIter | Res | Feas | known |\n");
            out.push_str("|---|---|---|---|---|---|---|---|---|\n");
            for s in &self.runs {
                let _ = writeln!(
                    out,
                    "| {} | {} | {} | {} | {} | {} | {:.2e} | {:.2e} | {} |",
                    s.problem,
                    s.kernel,
                    s.start,
                    s.status.as_str(),
                    s.out_iter,
                    s.in_iter,
                    s.res,
                    s.feas,
                    s.known_solution.map(|i| i.to_string()).unwrap_or_else(|| "-".into())
                );
            }
        }
        out
    }

    fn csv(&self, verbose: bool) -> Result<String> {
        let mut out = String::new();
        for note in &self.notes {
            let _ = writeln!(out, "# {note}");
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "problem",
            "n",
            "kernel",
            "OutIter",
            "InIter",
            "Res",
            "Feas",
            "converged",
            "cpu_s",
        ])?;
        for r in &self.rows {
            w.write_record([
                r.problem.clone(),
                r.n.to_string(),
                r.kernel.clone(),
                r.out_iter.to_string(),
                r.in_iter.to_string(),
                sci(r.res),
                sci(r.feas),
                format!("{}/{}", r.converged, r.starts),
                format!("{:.3}", r.cpu_s),
            ])?;
        }
        out.push_str(&String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("csv is utf-8"));
        if verbose {
            out.push('\n');
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record([
                "problem", "kernel", "start", "status", "OutIter", "InIter", "Res", "Feas", "known",
            ])?;
            for s in &self.runs {
                w.write_record([
                    s.problem.clone(),
                    s.kernel.clone(),
                    s.start.to_string(),
                    s.status.as_str().to_string(),
                    s.out_iter.to_string(),
                    s.in_iter.to_string(),
                    format!("{:.2e}", s.res),
                    format!("{:.2e}", s.feas),
                    s.known_solution.map(|i| i.to_string()).unwrap_or_default(),
                ])?;
            }
            out.push_str(&String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("csv is utf-8"));
        }
        Ok(out)
    }

    fn json(&self, verbose: bool) -> Result<String> {
        #[derive(Serialize)]
        struct Row<'a> {
            #[serde(flatten)]
            row: &'a BenchRow,
            cpu_s: f64,
        }
        #[derive(Serialize)]
        struct Doc<'a> {
            notes: &'a [String],
            rows: Vec<Row<'a>>,
            #[serde(skip_serializing_if = "Option::is_none")]
            runs: Option<&'a [StartResult]>,
        }
        let doc = Doc {
            notes: &self.notes,
            rows: self
                .rows
                .iter()
                .map(|row| Row {
                    row,
                    cpu_s: round3(row.cpu_s),
                })
                .collect(),
            runs: verbose.then_some(&self.runs[..]),
        };
        Ok(serde_json::to_string_pretty(&doc)? + "\n")
    }
}

fn sci(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.2e}")).unwrap_or_else(|| "-".into())
}

fn round3(v: f64) -> f64 {
    (v * 1000.0).round() / 1000.0
}

fn notes_for(run: &BenchRun) -> Vec<String> {
    let mut notes = vec![
        format!(
            "Worst case over {} starts per (problem, kernel): max OutIter and InIter over all starts, \
             max Res and Feas over converged starts. Starts: all-ones, then uniform on (0,20)^n with seed {}.",
            run.starts_per_problem, run.rng_seed
        ),
        format!(
            "Converged means Res <= {:e} and Feas <= {:e}. InIter counts Jacobian evaluations.",
            run.config.outer_tol, run.config.feas_tol
        ),
        "cpu_s is mean wall-clock seconds per start; hardware dependent and not reproducible.".into(),
    ];
    let has = |f: fn(&ProblemSpec) -> bool| run.problems.iter().any(f);
    if has(|p| matches!(p, ProblemSpec::Monotone(_))) {
        notes.push(
            "Synthetic: monotone:n is F(x) = tridiag(-1,4,-1) x + atan(x) - 1, a scalable strongly monotone NCP."
                .into(),
        );
    }
    if has(|p| matches!(p, ProblemSpec::HpHard { .. })) {
        notes.push(
            "Synthetic: hphard:n:seed is the LCP M = A^T A + B + D, q, with A, B(skew) uniform(-5,5), \
             D uniform(0,0.3), q uniform(-500,500) from ChaCha8 seeded by seed."
                .into(),
        );
    }
    if has(|p| matches!(p, ProblemSpec::LinearSpd { .. })) {
        notes.push("Synthetic: linspd:n:seed is the LCP M = A^T A + I, A uniform(-1,1), q uniform(-2,2).".into());
    }
    if has(|p| matches!(p, ProblemSpec::NashCournot(_))) {
        notes.push(
            "nash5/nash10 use c = (10,8,6,4,2), L = 10, beta = (1.2,1.1,1.0,0.9,0.8), gamma = 1.1, \
             repeated cyclically for 10 firms."
                .into(),
        );
    }
    if has(|p| matches!(p, ProblemSpec::KojimaShindo)) {
        notes.push(
            "ks has a non-degenerate solution (index 0) and a degenerate one (index 1); \
             --verbose shows which one each start reached."
                .into(),
        );
    }
    notes
}

fn nearest_known(problem: &NcpProblem, x: &[f64]) -> Option<usize> {
    problem
        .known_solutions()
        .iter()
        .position(|s| s.iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt() <= KNOWN_SOLUTION_RADIUS)
}

/// Solves every (problem, kernel, start) triple, in parallel, and aggregates
/// worst-case rows in input order.
pub fn run_bench(run: &BenchRun) -> Result<BenchTable> {
    if run.starts_per_problem == 0 {
        return Err(CliError::Usage("--starts must be at least 1".into()));
    }
    let kernels = run
        .kernels
        .iter()
        .map(|k| resolve_kernel(k))
        .collect::<Result<Vec<_>>>()?;
    let problems = run
        .problems
        .iter()
        .map(|p| p.build())
        .collect::<smoothncp::Result<Vec<_>>>()?;
    let starts: Vec<Vec<Vec<f64>>> = problems
        .iter()
        .map(|p| generate_starts(p.dim(), run.starts_per_problem, run.rng_seed))
        .collect();

    let mut jobs = Vec::new();
    for pi in 0..problems.len() {
        for ki in 0..kernels.len() {
            for si in 0..run.starts_per_problem {
                jobs.push((pi, ki, si));
            }
        }
    }
    let results = jobs
        .par_iter()
        .map(|&(pi, ki, si)| {
            let (problem, kernel) = (&problems[pi], &kernels[ki]);
            let rep = continuation_solve(problem, kernel, &starts[pi][si], &run.config)?;
            let prop_i_excess = rep
                .trace
                .iter()
                .filter(|tp| tp.inner_converged)
                .flat_map(|tp| tp.x.iter().zip(&tp.fx).map(move |(x, f)| x * f - tp.r * tp.r))
                .fold(f64::NEG_INFINITY, f64::max);
            Ok(StartResult {
                problem: run.problems[pi].to_string(),
                kernel: run.kernels[ki].clone(),
                start: si,
                status: rep.status,
                out_iter: rep.out_iter,
                in_iter: rep.in_iter,
                res: rep.res,
                feas: rep.feas,
                known_solution: if rep.converged() {
                    nearest_known(problem, &rep.x_final)
                } else {
                    None
                },
                prop_i_excess,
                unconverged_points: rep.trace.iter().filter(|tp| !tp.inner_converged).count(),
                x_final: rep.x_final,
                cpu_s: rep.wall_time,
            })
        })
        .collect::<Result<Vec<StartResult>>>()?;

    let rows = results
        .chunks(run.starts_per_problem)
        .zip(jobs.iter().step_by(run.starts_per_problem))
        .map(|(group, &(pi, _, _))| {
            let conv: Vec<&StartResult> = group.iter().filter(|s| s.status == SolveStatus::Converged).collect();
            let max_of = |f: fn(&StartResult) -> f64| conv.iter().map(|s| f(s)).reduce(f64::max);
            BenchRow {
                problem: group[0].problem.clone(),
                n: problems[pi].dim(),
                kernel: group[0].kernel.clone(),
                out_iter: group.iter().map(|s| s.out_iter).max().unwrap_or(0),
                in_iter: group.iter().map(|s| s.in_iter).max().unwrap_or(0),
                res: max_of(|s| s.res),
                feas: max_of(|s| s.feas),
                converged: conv.len(),
                starts: group.len(),
                cpu_s: group.iter().map(|s| s.cpu_s).sum::<f64>() / group.len() as f64,
            }
        })
        .collect();
    Ok(BenchTable {
        notes: notes_for(run),
        rows,
        runs: results,
    })
}
