//! Damped Newton on `H_r(x) = 0` at fixed `r`, wrapped in a continuation loop
//! that shrinks `r` until `max_i |x_i F_i(x)|` drops below tolerance.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{check_r, SmoothingKernel};
use crate::ncp::{feas_metric, res_metric, NcpProblem};
use crate::smoothing::{h_r_jacobian_at, smoothed_residual, SmoothedResidual};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Stop once `Res <= outer_tol` and `Feas <= feas_tol`.
    pub outer_tol: f64,
    pub feas_tol: f64,
    /// Inner solves stop once `||H_r||_inf <= inner_tol`.
    pub inner_tol: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    pub armijo_sigma: f64,
    pub backtrack_factor: f64,
    pub max_backtracks: usize,
    pub r_floor: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            outer_tol: 1e-8,
            feas_tol: 1e-6,
            inner_tol: 1e-10,
            max_outer: 50,
            max_inner: 200,
            armijo_sigma: 1e-4,
            backtrack_factor: 0.5,
            max_backtracks: 50,
            r_floor: 1e-16,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.outer_tol,
            self.feas_tol,
            self.inner_tol,
            self.armijo_sigma,
            self.r_floor,
        ];
        if positive.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::invalid("tolerances, sigma and r_floor must be positive"));
        }
        if self.max_outer == 0 || self.max_inner == 0 || self.max_backtracks == 0 {
            return Err(Error::invalid("iteration budgets must be positive"));
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return Err(Error::invalid("backtrack_factor must lie in (0, 1)"));
        }
        if self.outer_tol <= self.r_floor * self.r_floor {
            return Err(Error::invalid("outer_tol must exceed r_floor^2"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    MaxOuterExceeded,
    InnerFailure,
    EvaluationError,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Converged => "converged",
            SolveStatus::MaxOuterExceeded => "max_outer_exceeded",
            SolveStatus::InnerFailure => "inner_failure",
            SolveStatus::EvaluationError => "evaluation_error",
        }
    }
}

/// The accepted iterate after the inner solve at one value of `r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub outer_index: usize,
    pub r: f64,
    pub x: Vec<f64>,
    pub fx: Vec<f64>,
    pub res: f64,
    pub feas: f64,
    pub inner_iters: usize,
    /// False when the inner solve stopped short of `inner_tol` and its best
    /// iterate was carried forward.
    pub inner_converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub x_final: Vec<f64>,
    /// Number of `r` values in the trace.
    pub out_iter: usize,
    /// Jacobian evaluations over all inner solves, failed ones included.
    pub in_iter: usize,
    pub res: f64,
    pub feas: f64,
    /// Seconds; not reproducible.
    pub wall_time: f64,
    pub trace: Vec<TracePoint>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl SolveReport {
    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }
}

/// `max(1, sqrt(Res(x0)))`.
pub fn r_init(x0: &[f64], fx0: &[f64]) -> f64 {
    res_metric(x0, fx0).sqrt().max(1.0)
}

/// `max(r_floor, min(0.1 r, r^2, sqrt(Res(x))))`.
pub fn r_update(r: f64, x: &[f64], fx: &[f64], r_floor: f64) -> f64 {
    (0.1 * r).min(r * r).min(res_metric(x, fx).sqrt()).max(r_floor)
}

#[derive(Debug, Clone, PartialEq)]
pub enum InnerStatus {
    Converged,
    MaxIterations,
    LineSearchFailed,
    Singular,
    Evaluation(Error),
}

#[derive(Debug, Clone)]
pub struct InnerResult {
    pub x: Vec<f64>,
    pub fx: Vec<f64>,
    pub h_norm: f64,
    /// Accepted Newton steps.
    pub iterations: usize,
    pub jac_evals: usize,
    pub status: InnerStatus,
    /// Merit `1/2 ||H_r||^2` at the start and after each accepted step.
    pub merit_history: Vec<f64>,
}

impl InnerResult {
    pub fn converged(&self) -> bool {
        self.status == InnerStatus::Converged
    }
}

/// Newton direction from `J d = -h`, retrying once with the diagonal shifted
/// by `1e-10 (1 + ||J||_inf)` if the LU factorization is singular.
fn newton_direction(jac: DMatrix<f64>, h: &[f64]) -> Option<DVector<f64>> {
    let rhs = -DVector::from_column_slice(h);
    let finite = |d: &DVector<f64>| d.iter().all(|v| v.is_finite());
    let shift = 1e-10 * (1.0 + jac.row_iter().map(|row| row.abs().sum()).fold(0.0, f64::max));
    if let Some(d) = jac.clone().lu().solve(&rhs).filter(finite) {
        return Some(d);
    }
    let n = jac.nrows();
    (jac + DMatrix::identity(n, n) * shift).lu().solve(&rhs).filter(finite)
}

/// Damped Newton on `H_r` from `x0` with Armijo backtracking on
/// `m(x) = 1/2 ||H_r(x)||^2`. A trial point where `F` cannot be evaluated
/// counts as a rejected step.
pub fn newton_inner(
    problem: &NcpProblem,
    kernel: &SmoothingKernel,
    r: f64,
    x0: &[f64],
    cfg: &SolverConfig,
) -> Result<InnerResult> {
    check_r(r)?;
    if x0.len() != problem.dim() {
        return Err(Error::Dimension {
            expected: problem.dim(),
            got: x0.len(),
        });
    }
    let mut x = x0.to_vec();
    let mut current: SmoothedResidual = match smoothed_residual(problem, kernel, &x, r) {
        Ok(sr) => sr,
        Err(e) => {
            return Ok(InnerResult {
                x,
                fx: Vec::new(),
                h_norm: f64::NAN,
                iterations: 0,
                jac_evals: 0,
                status: InnerStatus::Evaluation(e),
                merit_history: Vec::new(),
            })
        }
    };
    let mut merit = current.merit();
    let mut history = vec![merit];
    let mut jac_evals = 0;
    let mut iterations = 0;
    let status = loop {
        if current.norm_inf() <= cfg.inner_tol {
            break InnerStatus::Converged;
        }
        if iterations == cfg.max_inner {
            break InnerStatus::MaxIterations;
        }
        jac_evals += 1;
        let jac = match h_r_jacobian_at(problem, kernel, &x, &current.fx, r) {
            Ok(j) => j,
            Err(e) => break InnerStatus::Evaluation(e),
        };
        let Some(d) = newton_direction(jac, &current.values) else {
            break InnerStatus::Singular;
        };
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..=cfg.max_backtracks {
            let trial: Vec<f64> = x.iter().zip(d.iter()).map(|(xi, di)| xi + alpha * di).collect();
            if let Ok(sr) = smoothed_residual(problem, kernel, &trial, r) {
                let m = sr.merit();
                if m.is_finite() && m <= (1.0 - 2.0 * cfg.armijo_sigma * alpha) * merit {
                    accepted = Some((trial, sr, m));
                    break;
                }
            }
            alpha *= cfg.backtrack_factor;
        }
        let Some((trial, sr, m)) = accepted else {
            break InnerStatus::LineSearchFailed;
        };
        x = trial;
        current = sr;
        merit = m;
        history.push(merit);
        iterations += 1;
    };
    Ok(InnerResult {
        x,
        h_norm: current.norm_inf(),
        fx: current.fx,
        iterations,
        jac_evals,
        status,
        merit_history: history,
    })
}

/// Runs the continuation from `x0`: `r` starts at [`r_init`], each inner
/// solve warm-starts from the previous iterate, and `r` follows [`r_update`].
///
/// Seconds since the call; always zero on wasm32, which has no monotonic clock.
#[cfg(not(target_arch = "wasm32"))]
fn stopwatch() -> impl Fn() -> f64 {
    let start = std::time::Instant::now();
    move || start.elapsed().as_secs_f64()
}

#[cfg(target_arch = "wasm32")]
fn stopwatch() -> impl Fn() -> f64 {
    || 0.0
}

/// An inner solve that stops short of `inner_tol` after accepting steps has
/// its best iterate carried forward (flagged in the trace) and the
/// continuation goes on; `H_r` need not have a root for large `r` or near a
/// degenerate solution. One that cannot accept a single step is retried once
/// at `sqrt(r * r_prev)` from the previous iterate; if that is unavailable or
/// also stalls, the run ends with `InnerFailure` or `EvaluationError`. A run
/// whose `r` can no longer decrease ends with `MaxOuterExceeded`.
pub fn continuation_solve(
    problem: &NcpProblem,
    kernel: &SmoothingKernel,
    x0: &[f64],
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    cfg.validate()?;
    if x0.len() != problem.dim() {
        return Err(Error::Dimension {
            expected: problem.dim(),
            got: x0.len(),
        });
    }
    let elapsed = stopwatch();
    let mut x = x0.to_vec();
    let mut fx = match problem.eval_f(&x) {
        Ok(fx) => fx,
        Err(e) => {
            return Ok(SolveReport {
                status: SolveStatus::EvaluationError,
                x_final: x,
                out_iter: 0,
                in_iter: 0,
                res: f64::NAN,
                feas: f64::NAN,
                wall_time: elapsed(),
                trace: Vec::new(),
                message: Some(format!("F undefined at the starting point: {e}")),
            })
        }
    };
    let mut r = r_init(&x, &fx);
    let mut prev_r: Option<f64> = None;
    let mut retried = false;
    let mut in_iter = 0;
    let mut trace: Vec<TracePoint> = Vec::new();
    let mut message = None;

    let status = loop {
        if trace.len() == cfg.max_outer {
            break SolveStatus::MaxOuterExceeded;
        }
        let inner = newton_inner(problem, kernel, r, &x, cfg)?;
        in_iter += inner.jac_evals;
        if !inner.converged() && inner.iterations == 0 {
            if let Some(p) = prev_r.filter(|_| !retried) {
                retried = true;
                r = (r * p).sqrt();
                continue;
            }
            message = Some(format!("inner solve at r = {r:e} made no progress: {:?}", inner.status));
            break match inner.status {
                InnerStatus::Evaluation(_) => SolveStatus::EvaluationError,
                _ => SolveStatus::InnerFailure,
            };
        }
        retried = false;
        let inner_converged = inner.converged();
        x = inner.x;
        fx = inner.fx;
        let res = res_metric(&x, &fx);
        let feas = feas_metric(&x, &fx);
        trace.push(TracePoint {
            outer_index: trace.len(),
            r,
            x: x.clone(),
            fx: fx.clone(),
            res,
            feas,
            inner_iters: inner.iterations,
            inner_converged,
        });
        if res <= cfg.outer_tol && feas <= cfg.feas_tol {
            break SolveStatus::Converged;
        }
        let next = r_update(r, &x, &fx, cfg.r_floor);
        if next >= r {
            message = Some(format!("r cannot decrease below {r:e}"));
            break SolveStatus::MaxOuterExceeded;
        }
        prev_r = Some(r);
        r = next;
    };

    Ok(SolveReport {
        status,
        out_iter: trace.len(),
        in_iter,
        res: res_metric(&x, &fx),
        feas: feas_metric(&x, &fx),
        x_final: x,
        wall_time: elapsed(),
        trace,
        message,
    })
}
