//! Browser bindings for the demo page in `www/`. Each export returns a JSON
//! string; the plain functions behind them are ordinary Rust and tested natively.

// `!(x > 0.0)` style checks also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use serde::Serialize;
use smoothncp::analysis::check_concavity;
use smoothncp::kernels::SmoothingKernel;
use smoothncp::problems::ProblemSpec;
use smoothncp::smoothing::g_r;
use smoothncp::solver::{continuation_solve, SolverConfig};
use smoothncp::GridSpec;
use wasm_bindgen::prelude::*;

/// Largest problem the page will solve; the dense Newton steps get slow in the browser beyond it.
pub const MAX_DEMO_DIM: usize = 200;

#[derive(Debug, Serialize)]
pub struct SoftMinCurve {
    pub kernel: String,
    pub t: f64,
    pub r: f64,
    pub s: Vec<f64>,
    pub min: Vec<f64>,
    pub g: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct TraceRow {
    pub r: f64,
    pub res: f64,
    pub feas: f64,
    pub inner_iters: usize,
    pub inner_converged: bool,
    pub x: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct SolveSummary {
    pub problem: String,
    pub kernel: String,
    pub status: String,
    pub out_iter: usize,
    pub in_iter: usize,
    pub res: f64,
    pub feas: f64,
    pub x_final: Vec<f64>,
    pub trace: Vec<TraceRow>,
}

fn kernel(selector: &str) -> Result<SmoothingKernel, String> {
    selector.parse().map_err(|e: smoothncp::Error| e.to_string())
}

/// `g_r(s, t)` and `min(s, t)` for `points` values of `s` on `[s_lo, s_hi]`.
pub fn soft_min_curve(
    kernel_sel: &str,
    t: f64,
    r: f64,
    s_lo: f64,
    s_hi: f64,
    points: usize,
) -> Result<SoftMinCurve, String> {
    let k = kernel(kernel_sel)?;
    if points < 2 || !(s_lo < s_hi) {
        return Err("need at least two points on a non-empty interval".into());
    }
    let s: Vec<f64> = (0..points)
        .map(|i| s_lo + (s_hi - s_lo) * i as f64 / (points - 1) as f64)
        .collect();
    let g = s
        .iter()
        .map(|&si| g_r(&k, si, t, r))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    Ok(SoftMinCurve {
        kernel: k.name().to_string(),
        t,
        r,
        min: s.iter().map(|&si| si.min(t)).collect(),
        s,
        g,
    })
}

/// Runs the continuation solver; an empty `x0` means all-ones.
pub fn solve(problem_sel: &str, kernel_sel: &str, x0: &str) -> Result<SolveSummary, String> {
    let spec: ProblemSpec = problem_sel.parse().map_err(|e: smoothncp::Error| e.to_string())?;
    if spec.dim() > MAX_DEMO_DIM {
        return Err(format!("the demo solves problems up to n = {MAX_DEMO_DIM}"));
    }
    let p = spec.build().map_err(|e| e.to_string())?;
    let k = kernel(kernel_sel)?;
    let x0: Vec<f64> = if x0.trim().is_empty() {
        vec![1.0; p.dim()]
    } else {
        x0.split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|e| format!("x0 entry `{v}`: {e}")))
            .collect::<Result<_, _>>()?
    };
    let rep = continuation_solve(&p, &k, &x0, &SolverConfig::default()).map_err(|e| e.to_string())?;
    Ok(SolveSummary {
        problem: spec.to_string(),
        kernel: k.name().to_string(),
        status: rep.status.as_str().to_string(),
        out_iter: rep.out_iter,
        in_iter: rep.in_iter,
        res: rep.res,
        feas: rep.feas,
        trace: rep
            .trace
            .into_iter()
            .map(|tp| TraceRow {
                r: tp.r,
                res: tp.res,
                feas: tp.feas,
                inner_iters: tp.inner_iters,
                inner_converged: tp.inner_converged,
                x: tp.x,
            })
            .collect(),
        x_final: rep.x_final,
    })
}

/// Concavity of the soft-min for a kernel on `[lo, hi]^2`, 32 log-spaced points per decade.
pub fn concavity(kernel_sel: &str, lo: f64, hi: f64) -> Result<String, String> {
    let k = kernel(kernel_sel)?;
    let rep = check_concavity(&k, &GridSpec::log_per_decade(lo, hi, 32)).map_err(|e| e.to_string())?;
    serde_json::to_string(&rep).map_err(|e| e.to_string())
}

fn to_js<T: Serialize>(v: Result<T, String>) -> Result<String, JsValue> {
    v.and_then(|v| serde_json::to_string(&v).map_err(|e| e.to_string()))
        .map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = softMinCurve)]
pub fn soft_min_curve_js(kernel: &str, t: f64, r: f64, s_lo: f64, s_hi: f64, points: usize) -> Result<String, JsValue> {
    to_js(soft_min_curve(kernel, t, r, s_lo, s_hi, points))
}

#[wasm_bindgen(js_name = solve)]
pub fn solve_js(problem: &str, kernel: &str, x0: &str) -> Result<String, JsValue> {
    to_js(solve(problem, kernel, x0))
}

#[wasm_bindgen(js_name = concavity)]
pub fn concavity_js(kernel: &str, lo: f64, hi: f64) -> Result<String, JsValue> {
    concavity(kernel, lo, hi).map_err(|e| JsValue::from_str(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn soft_min_curve_stays_below_min() {
        let c = soft_min_curve("exp", 1.0, 0.2, -2.0, 4.0, 61).unwrap();
        assert_eq!(c.s.len(), 61);
        assert!(c.g.iter().zip(&c.min).all(|(g, m)| g <= m));
        // the largest gap is at s = t and equals r ln 2
        let gap = c.min.iter().zip(&c.g).map(|(m, g)| m - g).fold(0.0, f64::max);
        assert!((gap - 0.2 * 2f64.ln()).abs() < 1e-12);
        assert!(soft_min_curve("exp", 1.0, 0.2, 4.0, -2.0, 10).is_err());
        assert!(soft_min_curve("nope", 1.0, 0.2, 0.0, 1.0, 10).is_err());
    }

    #[test]
    fn solve_analytic2d() {
        let s = solve("analytic2d", "exp", "").unwrap();
        assert_eq!(s.status, "converged");
        assert_eq!(s.trace.len(), s.out_iter);
        assert!(s.res <= 1e-8);
        let json = serde_json::to_value(&s).unwrap();
        assert!(json["trace"][0]["r"].as_f64().unwrap() > 0.0);
    }

    #[test]
    fn solve_rejects_bad_input() {
        assert!(solve("analytic2d", "exp", "1,x").is_err());
        assert!(solve("analytic2d", "exp", "1,2,3").is_err());
        assert!(solve("monotone:1000", "exp", "").is_err());
    }

    #[test]
    fn concavity_report() {
        let v: serde_json::Value = serde_json::from_str(&concavity("rational", 0.1, 10.0).unwrap()).unwrap();
        assert_eq!(v["outcome"], "holds");
    }
}
