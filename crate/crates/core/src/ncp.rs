//! The complementarity problem `x >= 0, F(x) >= 0, x^T F(x) = 0`, its
//! residual metrics and sampled P0/P diagnostics.

use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::{AnalysisReport, Witness};
use crate::error::{Error, Result};
use crate::kernels::SmoothingKernel;
use crate::smoothing::h_r;

pub type VectorMap = dyn Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync;
pub type MatrixMap = dyn Fn(&[f64]) -> Result<DMatrix<f64>> + Send + Sync;

/// Tolerance on `Res` and `Feas` that a known solution must meet.
pub const KNOWN_SOLUTION_TOL: f64 = 1e-8;

/// Below this, `(x-y)_i (F_i(x) - F_i(y))` counts as negative in the sampled tests.
pub const P0_STRICTNESS: f64 = 1e-12;

pub struct NcpProblem {
    name: String,
    n: usize,
    f: Arc<VectorMap>,
    jacobian: Option<Arc<MatrixMap>>,
    known_solutions: Vec<Vec<f64>>,
    sample_box: Vec<(f64, f64)>,
    strong_monotonicity: Option<f64>,
    jacobian_evals: AtomicUsize,
}

impl fmt::Debug for NcpProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NcpProblem")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("analytic_jacobian", &self.jacobian.is_some())
            .field("known_solutions", &self.known_solutions.len())
            .finish()
    }
}

impl Clone for NcpProblem {
    fn clone(&self) -> Self {
        NcpProblem {
            name: self.name.clone(),
            n: self.n,
            f: Arc::clone(&self.f),
            jacobian: self.jacobian.clone(),
            known_solutions: self.known_solutions.clone(),
            sample_box: self.sample_box.clone(),
            strong_monotonicity: self.strong_monotonicity,
            jacobian_evals: AtomicUsize::new(self.jacobian_evals.load(Ordering::Relaxed)),
        }
    }
}

impl NcpProblem {
    pub fn new<F>(name: impl Into<String>, n: usize, f: F) -> Self
    where
        F: Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync + 'static,
    {
        NcpProblem {
            name: name.into(),
            n,
            f: Arc::new(f),
            jacobian: None,
            known_solutions: Vec::new(),
            sample_box: vec![(0.0, 20.0); n],
            strong_monotonicity: None,
            jacobian_evals: AtomicUsize::new(0),
        }
    }

    pub fn with_jacobian<J>(mut self, jacobian: J) -> Self
    where
        J: Fn(&[f64]) -> Result<DMatrix<f64>> + Send + Sync + 'static,
    {
        self.jacobian = Some(Arc::new(jacobian));
        self
    }

    /// Attaches known solutions after checking `Res` and `Feas` at each of them.
    pub fn with_known_solutions(mut self, solutions: Vec<Vec<f64>>) -> Result<Self> {
        for sol in &solutions {
            self.check_dim(sol)?;
            let fx = self.eval_f(sol)?;
            let (res, feas) = (res_metric(sol, &fx), feas_metric(sol, &fx));
            if res > KNOWN_SOLUTION_TOL || feas > KNOWN_SOLUTION_TOL {
                return Err(Error::Internal(format!(
                    "{}: listed solution {sol:?} has Res {res:e}, Feas {feas:e}",
                    self.name
                )));
            }
        }
        self.known_solutions = solutions;
        Ok(self)
    }

    pub fn with_sample_box(mut self, lo: f64, hi: f64) -> Self {
        self.sample_box = vec![(lo, hi); self.n];
        self
    }

    /// Records `mu` with `<x-y, F(x)-F(y)> >= mu |x-y|^2`.
    pub fn with_strong_monotonicity(mut self, mu: f64) -> Self {
        self.strong_monotonicity = Some(mu);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn known_solutions(&self) -> &[Vec<f64>] {
        &self.known_solutions
    }

    pub fn sample_box(&self) -> &[(f64, f64)] {
        &self.sample_box
    }

    pub fn strong_monotonicity(&self) -> Option<f64> {
        self.strong_monotonicity
    }

    pub fn has_analytic_jacobian(&self) -> bool {
        self.jacobian.is_some()
    }

    /// Number of Jacobian evaluations of `F` made through this problem so far.
    pub fn jacobian_evaluations(&self) -> usize {
        self.jacobian_evals.load(Ordering::Relaxed)
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn eval_f(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let fx = (self.f)(x)?;
        if fx.len() != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                got: fx.len(),
            });
        }
        if let Some(i) = fx.iter().position(|v| !v.is_finite()) {
            return Err(Error::eval_at(i, format!("non-finite value {}", fx[i])));
        }
        Ok(fx)
    }

    /// Jacobian of `F` at `x`, given `fx = F(x)` for the finite-difference
    /// fallback. Counts as one Jacobian evaluation either way.
    pub fn eval_jacobian(&self, x: &[f64], fx: &[f64]) -> Result<DMatrix<f64>> {
        self.check_dim(x)?;
        self.jacobian_evals.fetch_add(1, Ordering::Relaxed);
        match &self.jacobian {
            Some(jac) => {
                let j = jac(x)?;
                if j.nrows() != self.n || j.ncols() != self.n {
                    return Err(Error::Dimension {
                        expected: self.n,
                        got: j.nrows(),
                    });
                }
                Ok(j)
            }
            None => self.forward_difference_jacobian(x, fx),
        }
    }

    fn forward_difference_jacobian(&self, x: &[f64], fx: &[f64]) -> Result<DMatrix<f64>> {
        let eps = f64::EPSILON.sqrt();
        let mut jac = DMatrix::zeros(self.n, self.n);
        let mut xp = x.to_vec();
        for j in 0..self.n {
            let h = eps * (1.0 + x[j].abs());
            xp[j] = x[j] + h;
            let fp = self.eval_f(&xp)?;
            xp[j] = x[j];
            for i in 0..self.n {
                jac[(i, j)] = (fp[i] - fx[i]) / h;
            }
        }
        Ok(jac)
    }
}

/// `Res = max_i |x_i F_i(x)|`.
pub fn res_metric(x: &[f64], fx: &[f64]) -> f64 {
    x.iter().zip(fx).map(|(a, b)| (a * b).abs()).fold(0.0, f64::max)
}

/// `Feas = ||min(x, 0)||_1 + ||min(F(x), 0)||_1`.
pub fn feas_metric(x: &[f64], fx: &[f64]) -> f64 {
    let neg = |v: &f64| (-v).max(0.0);
    x.iter().map(neg).sum::<f64>() + fx.iter().map(neg).sum::<f64>()
}

fn draw_point(rng: &mut ChaCha8Rng, sample_box: &[(f64, f64)]) -> Vec<f64> {
    sample_box
        .iter()
        .map(|&(lo, hi)| if lo < hi { rng.gen_range(lo..hi) } else { lo })
        .collect()
}

/// `max_{i: x_i != y_i} (x-y)_i (G_i(x) - G_i(y))`, or `None` when `x == y`.
fn p_margin(x: &[f64], y: &[f64], gx: &[f64], gy: &[f64]) -> Option<f64> {
    (0..x.len())
        .filter(|&i| x[i] != y[i])
        .map(|i| (x[i] - y[i]) * (gx[i] - gy[i]))
        .reduce(f64::max)
}

fn sampled_p_test<G>(
    property: &str,
    problem: &NcpProblem,
    pair_count: usize,
    seed: u64,
    strict: bool,
    map: G,
) -> Result<AnalysisReport>
where
    G: Fn(&[f64]) -> Result<Vec<f64>>,
{
    if pair_count == 0 {
        return Err(Error::invalid("pair_count must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::INFINITY;
    for pair in 0..pair_count {
        let x = draw_point(&mut rng, problem.sample_box());
        let y = draw_point(&mut rng, problem.sample_box());
        let (gx, gy) = (map(&x)?, map(&y)?);
        let Some(margin) = p_margin(&x, &y, &gx, &gy) else {
            continue;
        };
        worst = worst.min(margin);
        let violated = if strict {
            !(margin > 0.0)
        } else {
            margin < -P0_STRICTNESS
        };
        if violated {
            let mut point = x;
            point.extend(y);
            return Ok(AnalysisReport::violated(
                property,
                format!("{pair_count} uniform pairs from the sample box, seed {seed}"),
                Witness {
                    index: pair,
                    point,
                    values: vec![margin],
                    note: "point holds x then y; value is the max over i of (x-y)_i (G_i(x)-G_i(y))".into(),
                },
                margin,
            ));
        }
    }
    Ok(AnalysisReport::holding(
        property,
        format!("{pair_count} uniform pairs from the sample box, seed {seed}"),
        worst,
    ))
}

/// Sampled evidence that `F` is a P0-function on the problem's sample box.
pub fn p0_sample_test(problem: &NcpProblem, pair_count: usize, seed: u64) -> Result<AnalysisReport> {
    sampled_p_test("p0_sample", problem, pair_count, seed, false, |x| problem.eval_f(x))
}

/// Sampled evidence that `H_r` is a P-function. When `F` itself fails the P0
/// test the result carries a note saying it is informational only.
pub fn p_sample_test_hr(
    problem: &NcpProblem,
    kernel: &SmoothingKernel,
    r: f64,
    pair_count: usize,
    seed: u64,
) -> Result<AnalysisReport> {
    crate::kernels::check_r(r)?;
    let base = p0_sample_test(problem, pair_count, seed)?;
    let mut report = sampled_p_test("p_sample_hr", problem, pair_count, seed, true, |x| {
        h_r(problem, kernel, x, r)
    })?;
    if !base.holds() {
        report.note = Some("F failed the sampled P0 test; H_r is not expected to be a P-function".into());
    }
    Ok(report)
}

/// An increasing bijection `h: [0, epsilon) -> [0, eta)` with `h(0) = 0` and its inverse.
#[derive(Clone)]
pub struct ErrorModulus {
    h: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    h_inv: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub epsilon: f64,
    pub eta: f64,
}

impl fmt::Debug for ErrorModulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ErrorModulus")
            .field("epsilon", &self.epsilon)
            .field("eta", &self.eta)
            .finish()
    }
}

impl ErrorModulus {
    /// `h(u) = mu u^2`, the strong-monotonicity modulus.
    pub fn quadratic(mu: f64) -> Result<Self> {
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(Error::invalid(format!("modulus must be positive, got {mu}")));
        }
        Ok(ErrorModulus {
            h: Arc::new(move |u| mu * u * u),
            h_inv: Arc::new(move |v| (v / mu).sqrt()),
            epsilon: f64::INFINITY,
            eta: f64::INFINITY,
        })
    }

    pub fn custom<H, HI>(h: H, h_inv: HI, epsilon: f64, eta: f64) -> Result<Self>
    where
        H: Fn(f64) -> f64 + Send + Sync + 'static,
        HI: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(epsilon > 0.0 && eta > 0.0) {
            return Err(Error::invalid("epsilon and eta must be positive"));
        }
        if h(0.0) != 0.0 {
            return Err(Error::invalid("h(0) must be 0"));
        }
        Ok(ErrorModulus {
            h: Arc::new(h),
            h_inv: Arc::new(h_inv),
            epsilon,
            eta,
        })
    }

    pub fn h(&self, u: f64) -> f64 {
        (self.h)(u)
    }

    pub fn h_inv(&self, v: f64) -> Result<f64> {
        if !(v >= 0.0 && v < self.eta) {
            return Err(Error::Domain(format!("h^-1 is defined on [0, {}), got {v}", self.eta)));
        }
        Ok((self.h_inv)(v))
    }
}

/// Bound on `|x* - x(r)|`: `h^{-1}(n r^2)`.
pub fn error_bound(modulus: &ErrorModulus, n: usize, r: f64) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(Error::invalid(format!("r must be nonnegative, got {r}")));
    }
    modulus.h_inv(n as f64 * r * r)
}
