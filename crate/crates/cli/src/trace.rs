use std::path::Path;

use smoothncp::problems::ProblemSpec;
use smoothncp::solver::{continuation_solve, SolveReport, SolverConfig};

use crate::{resolve_kernel, CliError, Result};

/// Solves `problem` once per kernel from `x0` (all-ones if `None`) and writes
/// every outer iterate to a CSV file at `path`.
pub fn run_trace(
    problem: &ProblemSpec,
    kernels: &[String],
    x0: Option<&[f64]>,
    config: &SolverConfig,
    path: &Path,
) -> Result<Vec<(String, SolveReport)>> {
    let p = problem.build()?;
    let n = p.dim();
    let ones = vec![1.0; n];
    let x0 = x0.unwrap_or(&ones);
    if x0.len() != n {
        return Err(CliError::Usage(format!(
            "--x0 has {} entries, problem has {n}",
            x0.len()
        )));
    }
    let mut reports = Vec::new();
    for name in kernels {
        let kernel = resolve_kernel(name)?;
        reports.push((name.clone(), continuation_solve(&p, &kernel, x0, config)?));
    }

    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["kernel".to_string(), "outer_index".into(), "r".into()];
    header.extend((1..=n).map(|i| format!("x_{i}")));
    header.extend((1..=n).map(|i| format!("F_{i}")));
    header.extend(["res".into(), "feas".into()]);
    w.write_record(&header)?;
    for (name, rep) in &reports {
        for tp in &rep.trace {
            let mut row = vec![name.clone(), tp.outer_index.to_string(), format!("{:e}", tp.r)];
            row.extend(tp.x.iter().chain(&tp.fx).map(|v| format!("{v:e}")));
            row.extend([format!("{:e}", tp.res), format!("{:e}", tp.feas)]);
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(reports)
}
