//! Test problems: the 2-D analytic problem, Kojima–Shindo, Nash–Cournot,
//! random HpHard-style LCPs, a scalable monotone NCP and an SPD LCP with a
//! known solution.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::lcp::{enumerate_lcp, MAX_ENUMERATION_DIM};
use crate::ncp::NcpProblem;

/// A problem selector, parsed from strings like `"ks"` or `"hphard:20:1"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProblemSpec {
    Analytic2d,
    KojimaShindo,
    NashCournot(usize),
    HpHard { n: usize, seed: u64 },
    Monotone(usize),
    LinearSpd { n: usize, seed: u64 },
}

impl ProblemSpec {
    pub fn dim(&self) -> usize {
        match *self {
            ProblemSpec::Analytic2d => 2,
            ProblemSpec::KojimaShindo => 4,
            ProblemSpec::NashCournot(n)
            | ProblemSpec::Monotone(n)
            | ProblemSpec::HpHard { n, .. }
            | ProblemSpec::LinearSpd { n, .. } => n,
        }
    }

    pub fn build(&self) -> Result<NcpProblem> {
        match *self {
            ProblemSpec::Analytic2d => Ok(analytic2d()),
            ProblemSpec::KojimaShindo => Ok(kojima_shindo()),
            ProblemSpec::NashCournot(n) => nash_cournot(n),
            ProblemSpec::HpHard { n, seed } => hp_hard(n, seed),
            ProblemSpec::Monotone(n) => scalable_monotone(n),
            ProblemSpec::LinearSpd { n, seed } => Ok(linear_spd(n, seed)?.problem),
        }
    }

    /// True for problems standing in for instances that cannot be rebuilt exactly.
    pub fn is_substitute(&self) -> bool {
        matches!(
            self,
            ProblemSpec::HpHard { .. } | ProblemSpec::Monotone(_) | ProblemSpec::LinearSpd { .. }
        )
    }
}

impl fmt::Display for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProblemSpec::Analytic2d => write!(f, "analytic2d"),
            ProblemSpec::KojimaShindo => write!(f, "ks"),
            ProblemSpec::NashCournot(n) => write!(f, "nash{n}"),
            ProblemSpec::HpHard { n, seed } => write!(f, "hphard:{n}:{seed}"),
            ProblemSpec::Monotone(n) => write!(f, "monotone:{n}"),
            ProblemSpec::LinearSpd { n, seed } => write!(f, "linspd:{n}:{seed}"),
        }
    }
}

impl FromStr for ProblemSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("unknown problem selector '{s}'"));
        let num = |p: &str| p.parse::<u64>().map_err(|_| bad());
        let parts: Vec<&str> = s.split(':').collect();
        let spec = match parts.as_slice() {
            ["analytic2d"] => ProblemSpec::Analytic2d,
            ["ks"] => ProblemSpec::KojimaShindo,
            ["nash5"] => ProblemSpec::NashCournot(5),
            ["nash10"] => ProblemSpec::NashCournot(10),
            ["hphard", n] => ProblemSpec::HpHard {
                n: num(n)? as usize,
                seed: 1,
            },
            ["hphard", n, seed] => ProblemSpec::HpHard {
                n: num(n)? as usize,
                seed: num(seed)?,
            },
            ["monotone", n] => ProblemSpec::Monotone(num(n)? as usize),
            ["linspd", n] => ProblemSpec::LinearSpd {
                n: num(n)? as usize,
                seed: 1,
            },
            ["linspd", n, seed] => ProblemSpec::LinearSpd {
                n: num(n)? as usize,
                seed: num(seed)?,
            },
            _ => return Err(bad()),
        };
        match spec {
            ProblemSpec::HpHard { n: 0, .. } | ProblemSpec::LinearSpd { n: 0, .. } => {
                Err(Error::Parse(format!("{s}: dimension must be positive")))
            }
            ProblemSpec::Monotone(n) if n < 2 => Err(Error::Parse(format!("{s}: dimension must be at least 2"))),
            _ => Ok(spec),
        }
    }
}

/// `F(x, y) = (2 - x - x^3, y + y^3 - 2)`, solved by `(0, 1)` and `(1, 1)`.
pub fn analytic2d() -> NcpProblem {
    NcpProblem::new("analytic2d", 2, |x| {
        Ok(vec![2.0 - x[0] - x[0].powi(3), x[1] + x[1].powi(3) - 2.0])
    })
    .with_jacobian(|x| {
        Ok(DMatrix::from_row_slice(
            2,
            2,
            &[-1.0 - 3.0 * x[0] * x[0], 0.0, 0.0, 1.0 + 3.0 * x[1] * x[1]],
        ))
    })
    .with_known_solutions(vec![vec![0.0, 1.0], vec![1.0, 1.0]])
    .expect("listed solutions satisfy the NCP")
}

/// The Kojima–Shindo map with its non-degenerate solution `(1, 0, 3, 0)` and
/// degenerate solution `(sqrt(6)/2, 0, 0, 1/2)`.
pub fn kojima_shindo() -> NcpProblem {
    NcpProblem::new("ks", 4, |x| {
        let (a, b, c, d) = (x[0], x[1], x[2], x[3]);
        Ok(vec![
            3.0 * a * a + 2.0 * a * b + 2.0 * b * b + c + 3.0 * d - 6.0,
            2.0 * a * a + a + b * b + 10.0 * c + 2.0 * d - 2.0,
            3.0 * a * a + a * b + 2.0 * b * b + 2.0 * c + 9.0 * d - 9.0,
            a * a + 3.0 * b * b + 2.0 * c + 3.0 * d - 3.0,
        ])
    })
    .with_jacobian(|x| {
        let (a, b) = (x[0], x[1]);
        #[rustfmt::skip]
        let j = DMatrix::from_row_slice(4, 4, &[
            6.0 * a + 2.0 * b, 2.0 * a + 4.0 * b, 1.0, 3.0,
            4.0 * a + 1.0, 2.0 * b, 10.0, 2.0,
            6.0 * a + b, a + 4.0 * b, 2.0, 9.0,
            2.0 * a, 6.0 * b, 2.0, 3.0,
        ]);
        Ok(j)
    })
    .with_known_solutions(vec![vec![1.0, 0.0, 3.0, 0.0], vec![6f64.sqrt() / 2.0, 0.0, 0.0, 0.5]])
    .expect("listed solutions satisfy the NCP")
}

/// Firm data of a Cournot oligopoly with inverse demand `p(Q) = 5000^{1/gamma} Q^{-1/gamma}`
/// and marginal cost `c_i + (x_i / L_i)^{1/beta_i}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CournotParams {
    pub c: Vec<f64>,
    pub l: Vec<f64>,
    pub beta: Vec<f64>,
    pub gamma: f64,
}

impl CournotParams {
    /// The five-firm literature instance, repeated cyclically up to `n` firms.
    pub fn standard(n: usize) -> Self {
        let c = [10.0, 8.0, 6.0, 4.0, 2.0];
        let beta = [1.2, 1.1, 1.0, 0.9, 0.8];
        CournotParams {
            c: (0..n).map(|i| c[i % 5]).collect(),
            l: vec![10.0; n],
            beta: (0..n).map(|i| beta[i % 5]).collect(),
            gamma: 1.1,
        }
    }

    pub fn firms(&self) -> usize {
        self.c.len()
    }
}

/// Nash–Cournot with the standard parameters, `n` in `{5, 10}`.
pub fn nash_cournot(n: usize) -> Result<NcpProblem> {
    if n != 5 && n != 10 {
        return Err(Error::invalid(format!(
            "Nash-Cournot is defined for n = 5 or 10, got {n}"
        )));
    }
    nash_cournot_with(format!("nash{n}"), CournotParams::standard(n))
}

/// `F_i(x) = c_i + (x_i/L_i)^{1/beta_i} - p(Q) - x_i p'(Q)`, `Q = sum x`.
pub fn nash_cournot_with(name: impl Into<String>, params: CournotParams) -> Result<NcpProblem> {
    let n = params.firms();
    if n == 0 || params.l.len() != n || params.beta.len() != n {
        return Err(Error::invalid(
            "Cournot parameter vectors must be nonempty and of equal length",
        ));
    }
    if params.gamma <= 0.0 || params.beta.iter().chain(&params.l).any(|&v| v <= 0.0) {
        return Err(Error::invalid("Cournot gamma, beta and L must be positive"));
    }
    let jp = params.clone();
    let problem = NcpProblem::new(name, n, move |x| {
        let (p, dp, _) = demand(&params, x)?;
        Ok((0..n)
            .map(|i| params.c[i] + (x[i] / params.l[i]).powf(1.0 / params.beta[i]) - p - x[i] * dp)
            .collect())
    })
    .with_jacobian(move |x| {
        let (_, dp, d2p) = demand(&jp, x)?;
        let mut j = DMatrix::from_fn(n, n, |i, _| -dp - x[i] * d2p);
        for i in 0..n {
            if x[i] == 0.0 && jp.beta[i] > 1.0 {
                return Err(Error::eval_at(i, "marginal cost is not differentiable at zero output"));
            }
            let e = 1.0 / jp.beta[i];
            let dmc = match x[i] {
                v if v > 0.0 => e * (v / jp.l[i]).powf(e) / v,
                _ if jp.beta[i] == 1.0 => 1.0 / jp.l[i],
                _ => 0.0,
            };
            j[(i, i)] += dmc - dp;
        }
        Ok(j)
    })
    .with_sample_box(1.0, 20.0);
    Ok(problem)
}

/// `(p(Q), p'(Q), p''(Q))`, failing when output is negative or `Q <= 0`.
fn demand(params: &CournotParams, x: &[f64]) -> Result<(f64, f64, f64)> {
    if let Some(i) = x.iter().position(|&v| !(v >= 0.0)) {
        return Err(Error::eval_at(i, format!("negative output {}", x[i])));
    }
    let q: f64 = x.iter().sum();
    if !(q > 0.0) {
        return Err(Error::Evaluation {
            index: None,
            reason: format!("total output {q} is not positive"),
        });
    }
    let e = 1.0 / params.gamma;
    let p = 5000f64.powf(e) * q.powf(-e);
    Ok((p, -e * p / q, e * (e + 1.0) * p / (q * q)))
}

/// Dense linear map `F(x) = Mx + q`.
pub fn linear_ncp(name: impl Into<String>, m: DMatrix<f64>, q: DVector<f64>) -> NcpProblem {
    let n = q.len();
    let jm = m.clone();
    NcpProblem::new(name, n, move |x| {
        let x = DVector::from_column_slice(x);
        Ok((&m * x + &q).iter().copied().collect())
    })
    .with_jacobian(move |_| Ok(jm.clone()))
}

/// `M = A^T A + B + D`, `A` entries uniform(-5, 5), `B` skew-symmetric with
/// entries uniform(-5, 5), `D` diagonal uniform(0, 0.3), `q` uniform(-500, 500).
/// Draw order from `ChaCha8Rng::seed_from_u64(seed)`: `A` row-major, the
/// strict upper triangle of `B` row-major, `D`, then `q`.
pub fn hp_hard_data(n: usize, seed: u64) -> Result<(DMatrix<f64>, DVector<f64>)> {
    if n == 0 {
        return Err(Error::invalid("dimension must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] = rng.gen_range(-5.0..5.0);
        }
    }
    let mut b = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let v: f64 = rng.gen_range(-5.0..5.0);
            b[(i, j)] = v;
            b[(j, i)] = -v;
        }
    }
    let d = DMatrix::from_diagonal(&DVector::from_fn(n, |_, _| rng.gen_range(0.0..0.3)));
    let q = DVector::from_fn(n, |_, _| rng.gen_range(-500.0..500.0));
    Ok((a.transpose() * &a + b + d, q))
}

pub fn hp_hard(n: usize, seed: u64) -> Result<NcpProblem> {
    let (m, q) = hp_hard_data(n, seed)?;
    Ok(linear_ncp(format!("hphard:{n}:{seed}"), m, q))
}

/// `F(x) = Mx + atan(x) - 1` with `M = tridiag(-1, 4, -1)`.
pub fn scalable_monotone(n: usize) -> Result<NcpProblem> {
    if n < 2 {
        return Err(Error::invalid(format!("dimension must be at least 2, got {n}")));
    }
    let problem = NcpProblem::new(format!("monotone:{n}"), n, move |x| {
        Ok((0..n)
            .map(|i| {
                let left = if i > 0 { x[i - 1] } else { 0.0 };
                let right = if i + 1 < n { x[i + 1] } else { 0.0 };
                4.0 * x[i] - left - right + x[i].atan() - 1.0
            })
            .collect())
    })
    .with_jacobian(move |x| {
        let mut j = DMatrix::zeros(n, n);
        for i in 0..n {
            j[(i, i)] = 4.0 + 1.0 / (1.0 + x[i] * x[i]);
            if i > 0 {
                j[(i, i - 1)] = -1.0;
                j[(i - 1, i)] = -1.0;
            }
        }
        Ok(j)
    })
    // the smallest eigenvalue of tridiag(-1, 4, -1) exceeds 2
    .with_strong_monotonicity(2.0);
    Ok(problem)
}

/// A strongly monotone LCP with its data, smallest eigenvalue and exact solution.
#[derive(Debug, Clone)]
pub struct LinearSpd {
    pub problem: NcpProblem,
    pub m: DMatrix<f64>,
    pub q: DVector<f64>,
    pub lambda_min: f64,
    /// From active-set enumeration; `None` when `n` is too large for it.
    pub solution: Option<Vec<f64>>,
}

/// `M = A^T A + I` with `A` uniform(-1, 1), `q` uniform(-2, 2), drawn in that order.
pub fn linear_spd(n: usize, seed: u64) -> Result<LinearSpd> {
    if n == 0 {
        return Err(Error::invalid("dimension must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] = rng.gen_range(-1.0..1.0);
        }
    }
    let q = DVector::from_fn(n, |_, _| rng.gen_range(-2.0..2.0));
    let m = a.transpose() * &a + DMatrix::identity(n, n);
    let lambda_min = SymmetricEigen::new(m.clone()).eigenvalues.min();
    let solution = if n <= MAX_ENUMERATION_DIM {
        // M is positive definite, so the solution is unique
        let mut sols = enumerate_lcp(&m, &q, 1e-12)?;
        if sols.len() != 1 {
            return Err(Error::Internal(format!(
                "expected one LCP solution, found {}",
                sols.len()
            )));
        }
        sols.pop()
    } else {
        None
    };
    let mut problem =
        linear_ncp(format!("linspd:{n}:{seed}"), m.clone(), q.clone()).with_strong_monotonicity(lambda_min);
    if let Some(sol) = &solution {
        problem = problem.with_known_solutions(vec![sol.clone()])?;
    }
    Ok(LinearSpd {
        problem,
        m,
        q,
        lambda_min,
        solution,
    })
}
