//! Grid checks of the analytic properties of the soft-min: its limits as
//! `r -> 0`, sub-additivity of `V = (-psi' o psi^{-1}) psi^{-1}`, the speed
//! bound on `f(r) = G_r(s, t)`, and concavity of `G` through its Hessian and
//! through `L = -(psi' o psi^{-1})^2 / (psi'' o psi^{-1})`.
//!
//! Curvature quantities (`L`, the Hessian of `G`) are taken on the kernel's
//! [profile](SmoothingKernel::profile), i.e. the analytic formula without the
//! tangent-line continuation, since that continuation has `psi'' = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::kernels::{check_r, SmoothingKernel};
use crate::smoothing::{g_r, g_r_partials};

/// Slack allowed in the pairwise sub-additivity test.
pub const SUBADDITIVITY_TOL: f64 = 1e-12;
/// Slack allowed on `RT - S^2 >= 0`.
pub const DETERMINANT_TOL: f64 = 1e-10;
/// Slack allowed on `R <= 0`, `T <= 0`.
pub const DIAGONAL_TOL: f64 = 1e-12;
/// `|lim G_r| <= this` counts as a zero limit.
pub const ZERO_LIMIT_TOL: f64 = 1e-6;
/// Slack on the two-sided speed bound and on `r f'(r) <= f(r) - f(0+)`.
pub const SPEED_TOL: f64 = 1e-9;
/// Agreement required between the analytic `f'(r)` and a central difference.
pub const SPEED_FD_TOL: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Holds,
    Violated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    /// Position in grid order.
    pub index: usize,
    pub point: Vec<f64>,
    pub values: Vec<f64>,
    pub note: String,
}

/// Verdicts of the two independent concavity routes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RouteVerdicts {
    pub hessian: Outcome,
    pub l_function: Outcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub property: String,
    pub grid: String,
    pub outcome: Outcome,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    /// Smallest signed slack seen; negative beyond tolerance means violated.
    pub max_defect: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub routes: Option<RouteVerdicts>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl AnalysisReport {
    pub fn holding(property: &str, grid: String, max_defect: f64) -> Self {
        AnalysisReport {
            property: property.into(),
            grid,
            outcome: Outcome::Holds,
            witness: None,
            max_defect,
            routes: None,
            note: None,
        }
    }

    pub fn violated(property: &str, grid: String, witness: Witness, max_defect: f64) -> Self {
        AnalysisReport {
            property: property.into(),
            grid,
            outcome: Outcome::Violated,
            witness: Some(witness),
            max_defect,
            routes: None,
            note: None,
        }
    }

    pub fn holds(&self) -> bool {
        self.outcome == Outcome::Holds
    }
}

/// Running minimum of slacks with the first failing item in scan order.
struct Scan {
    tol: f64,
    worst: f64,
    first: Option<Witness>,
}

impl Scan {
    fn new(tol: f64) -> Self {
        Scan {
            tol,
            worst: f64::INFINITY,
            first: None,
        }
    }

    fn record(&mut self, slack: f64, witness: impl FnOnce() -> Witness) {
        // NaN slack is a failure
        let failed = !(slack >= -self.tol);
        if failed || slack < self.worst {
            self.worst = if slack.is_nan() {
                f64::NEG_INFINITY
            } else {
                self.worst.min(slack)
            };
        }
        if failed && self.first.is_none() {
            self.first = Some(witness());
        }
    }

    fn outcome(&self) -> Outcome {
        if self.first.is_some() {
            Outcome::Violated
        } else {
            Outcome::Holds
        }
    }

    fn into_report(self, property: &str, grid: String) -> AnalysisReport {
        let worst = if self.worst.is_infinite() && self.worst > 0.0 {
            0.0
        } else {
            self.worst
        };
        match self.first {
            Some(w) => AnalysisReport::violated(property, grid, w, worst),
            None => AnalysisReport::holding(property, grid, worst),
        }
    }
}

/// `V(y) = -psi'(psi^{-1}(y)) psi^{-1}(y)`.
pub fn v_function(kernel: &SmoothingKernel, y: f64) -> Result<f64> {
    let s = kernel.psi_inv(y)?;
    Ok(-kernel.dpsi(s) * s)
}

/// `L(alpha) = -psi'(s)^2 / psi''(s)` at `s = psi^{-1}(alpha)`, on the kernel profile.
pub fn l_function(kernel: &SmoothingKernel, alpha: f64) -> Result<f64> {
    let profile = kernel.profile();
    let s = profile.psi_inv(alpha)?;
    if !profile.in_domain(s) {
        return Err(Error::Domain(format!(
            "psi^-1({alpha}) = {s} is outside the kernel domain"
        )));
    }
    let curvature = profile.d2psi(s);
    if !(curvature > 0.0) {
        return Err(Error::Domain(format!("psi''({s}) = {curvature} is not positive")));
    }
    Ok(-profile.dpsi(s).powi(2) / curvature)
}

/// Checks `f(a + b) <= f(a) + f(b)` for every pair of grid nodes.
pub fn check_subadditivity<F>(property: &str, f: F, grid: &GridSpec) -> Result<AnalysisReport>
where
    F: Fn(f64) -> Result<f64>,
{
    let nodes = grid.nodes()?;
    let values = nodes.iter().map(|&a| f(a)).collect::<Result<Vec<_>>>()?;
    let mut scan = Scan::new(SUBADDITIVITY_TOL);
    let mut index = 0;
    for i in 0..nodes.len() {
        for j in i..nodes.len() {
            let (a, b) = (nodes[i], nodes[j]);
            let lhs = f(a + b)?;
            let rhs = values[i] + values[j];
            scan.record(rhs - lhs, || Witness {
                index,
                point: vec![a, b],
                values: vec![lhs, rhs],
                note: "values are f(a+b) and f(a)+f(b)".into(),
            });
            index += 1;
        }
    }
    Ok(scan.into_report(property, grid.describe()))
}

/// Second partials of `G(s, t) = psi^{-1}(psi(s) + psi(t))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HessianEntries {
    /// `d2G/ds2`
    pub r: f64,
    /// `d2G/dt2`
    pub t: f64,
    /// `d2G/dsdt`
    pub s: f64,
}

impl HessianEntries {
    pub fn determinant(&self) -> f64 {
        self.r * self.t - self.s * self.s
    }
}

/// Hessian of `G` at `(s, t)` from `W = psi'(z)`, `U = psi''(z)` with
/// `z = psi^{-1}(psi(s) + psi(t))`, evaluated on the kernel profile.
pub fn g_hessian_entries(kernel: &SmoothingKernel, s: f64, t: f64) -> Result<HessianEntries> {
    let p = kernel.profile();
    for v in [s, t] {
        if !p.in_domain(v) {
            return Err(Error::Domain(format!("{v} is outside the domain of {}", p.name())));
        }
    }
    let z = p.psi_inv(p.psi(s) + p.psi(t))?;
    if !p.in_domain(z) {
        return Err(Error::Domain(format!("psi^-1(psi(s)+psi(t)) = {z} outside the domain")));
    }
    let (w, u) = (p.dpsi(z), p.d2psi(z));
    let (ds, dt) = (p.dpsi(s), p.dpsi(t));
    let w3 = w * w * w;
    Ok(HessianEntries {
        r: (p.d2psi(s) * w * w - ds * ds * u) / w3,
        t: (p.d2psi(t) * w * w - dt * dt * u) / w3,
        s: -ds * dt * u / w3,
    })
}

/// Concavity of `G` on `grid x grid`, checked twice: through `R <= 0, T <= 0,
/// RT - S^2 >= 0` at every node pair, and through `L` being non-increasing
/// and sub-additive on the induced values `alpha = psi(grid)`. Holds only if
/// both routes hold.
pub fn check_concavity(kernel: &SmoothingKernel, grid: &GridSpec) -> Result<AnalysisReport> {
    let nodes = grid.nodes()?;
    let profile = kernel.profile();
    let description = format!("{0} x {0}", grid.describe());

    let mut hess = Scan::new(0.0);
    for (i, &s) in nodes.iter().enumerate() {
        for (j, &t) in nodes.iter().enumerate() {
            let index = i * nodes.len() + j;
            let slack = match g_hessian_entries(kernel, s, t) {
                Ok(h) => (DIAGONAL_TOL - h.r)
                    .min(DIAGONAL_TOL - h.t)
                    .min(h.determinant() + DETERMINANT_TOL),
                Err(_) => f64::NAN,
            };
            hess.record(slack, || {
                let vals = g_hessian_entries(kernel, s, t)
                    .map(|h| vec![h.r, h.t, h.s, h.determinant()])
                    .unwrap_or_default();
                Witness {
                    index,
                    point: vec![s, t],
                    values: vals,
                    note: "values are R, T, S, RT-S^2".into(),
                }
            });
        }
    }

    let mut alphas: Vec<f64> = nodes.iter().map(|&s| profile.psi(s)).collect();
    alphas.sort_by(f64::total_cmp);
    let l_values: Vec<Result<f64>> = alphas.iter().map(|&a| l_function(kernel, a)).collect();
    let mut lscan = Scan::new(0.0);
    let mut index = 0;
    for k in 0..alphas.len() {
        let slack = match (&l_values[k], l_values.get(k + 1)) {
            (Ok(lk), Some(Ok(lnext))) => lk - lnext + SUBADDITIVITY_TOL * (1.0 + lk.abs()),
            (Ok(_), None) => f64::INFINITY,
            _ => f64::NAN,
        };
        lscan.record(slack, || Witness {
            index: k,
            point: vec![alphas[k]],
            values: vec![],
            note: "L is undefined or increasing after this alpha".into(),
        });
    }
    for i in 0..alphas.len() {
        for j in i..alphas.len() {
            let slack = match (&l_values[i], &l_values[j], l_function(kernel, alphas[i] + alphas[j])) {
                (Ok(a), Ok(b), Ok(sum)) => a + b - sum + SUBADDITIVITY_TOL * (1.0 + sum.abs()),
                _ => f64::NAN,
            };
            lscan.record(slack, || Witness {
                index: alphas.len() + index,
                point: vec![alphas[i], alphas[j]],
                values: vec![],
                note: "L(a+b) > L(a) + L(b) or L undefined".into(),
            });
            index += 1;
        }
    }

    let routes = RouteVerdicts {
        hessian: hess.outcome(),
        l_function: lscan.outcome(),
    };
    let l_worst = if lscan.worst.is_finite() { lscan.worst } else { 0.0 };
    let l_witness = lscan.first;
    let mut report = hess.into_report("concavity", description);
    report.max_defect = report.max_defect.min(l_worst);
    if routes.l_function == Outcome::Violated {
        report.outcome = Outcome::Violated;
        report.witness = report.witness.or(l_witness);
    }
    if routes.hessian != routes.l_function {
        report.note = Some("Hessian and L-function routes disagree".into());
    }
    report.routes = Some(routes);
    Ok(report)
}

/// `G_r(s, t)` along a decreasing sequence of `r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitEstimate {
    pub r: Vec<f64>,
    pub values: Vec<f64>,
    /// Value at the smallest `r`.
    pub limit: f64,
    /// Linear extrapolation to `r = 0` from the last two values.
    pub extrapolated: f64,
    /// `|limit| <= 1e-6`.
    pub limit_is_zero: bool,
    /// The last increments shrink, as they should near the limit.
    pub consistent: bool,
}

/// `1e-1, 1e-2, ..., 1e-8`.
pub fn default_r_sequence() -> Vec<f64> {
    (1..=8).map(|k| 10f64.powi(-k)).collect()
}

pub fn limit_probe(kernel: &SmoothingKernel, s: f64, t: f64, r_seq: &[f64]) -> Result<LimitEstimate> {
    if r_seq.is_empty() {
        return Err(Error::invalid("empty r sequence"));
    }
    if r_seq.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::invalid("r sequence must be strictly decreasing"));
    }
    let values = r_seq
        .iter()
        .map(|&r| g_r(kernel, s, t, r))
        .collect::<Result<Vec<_>>>()?;
    let n = values.len();
    let limit = values[n - 1];
    let extrapolated = if n >= 2 {
        let (r1, r2) = (r_seq[n - 2], r_seq[n - 1]);
        limit + (limit - values[n - 2]) * r2 / (r1 - r2)
    } else {
        limit
    };
    let consistent = n < 3 || {
        let d1 = (values[n - 2] - values[n - 3]).abs();
        let d2 = (values[n - 1] - values[n - 2]).abs();
        d2 <= d1 + 1e-15
    };
    Ok(LimitEstimate {
        r: r_seq.to_vec(),
        values,
        limit,
        extrapolated,
        limit_is_zero: limit.abs() <= ZERO_LIMIT_TOL,
        consistent,
    })
}

/// The sequence the limit checks use: `1e-6, 1e-7, 1e-8`.
pub fn limit_r_sequence() -> Vec<f64> {
    vec![1e-6, 1e-7, 1e-8]
}

/// Checks that `lim G_r(s,t) = 0` exactly when `min(s, t) = 0` for all pairs of `points`.
pub fn check_limit_dichotomy(kernel: &SmoothingKernel, points: &[f64]) -> Result<AnalysisReport> {
    let seq = limit_r_sequence();
    let mut scan = Scan::new(0.0);
    let mut index = 0;
    for &s in points {
        for &t in points {
            let est = limit_probe(kernel, s, t, &seq)?;
            let expect_zero = s.min(t) == 0.0;
            let ok = est.limit_is_zero == expect_zero && est.consistent;
            scan.record(if ok { 0.0 } else { -1.0 }, || Witness {
                index,
                point: vec![s, t],
                values: vec![est.limit],
                note: "limit at r = 1e-8 misclassified or not settling".into(),
            });
            index += 1;
        }
    }
    Ok(scan.into_report("limit_dichotomy", format!("pairs of {points:?}")))
}

/// `r f'(r)` for `f(r) = G_r(s, t)`, from `r f'(r) = f(r) - (s dG/ds + t dG/dt)`.
pub fn speed_identity(kernel: &SmoothingKernel, s: f64, t: f64, r: f64) -> Result<f64> {
    let f = g_r(kernel, s, t, r)?;
    let (gs, gt) = g_r_partials(kernel, s, t, r)?;
    Ok(f - (s * gs + t * gt))
}

/// Verifies, at each `r` in `r_seq`,
/// `f(0+) - r (f(0+) - f(r0))/r0 <= f(r) <= f(0+)` and `r f'(r) <= f(r) - f(0+)`,
/// plus agreement of `f'` with a central difference. `f(0+)` is the
/// extrapolated limit from [`limit_probe`].
pub fn check_speed_bound(kernel: &SmoothingKernel, s: f64, t: f64, r0: f64, r_seq: &[f64]) -> Result<AnalysisReport> {
    check_r(r0)?;
    if !(s > 0.0 && t > 0.0) {
        return Err(Error::invalid("speed bound needs s, t > 0"));
    }
    if let Some(bad) = r_seq.iter().find(|&&r| !(r > 0.0 && r <= r0)) {
        return Err(Error::invalid(format!("r = {bad} is not in (0, r0]")));
    }
    let f0 = limit_probe(kernel, s, t, &limit_r_sequence())?.extrapolated;
    let f_r0 = g_r(kernel, s, t, r0)?;
    let mut scan = Scan::new(SPEED_TOL);
    for (index, &r) in r_seq.iter().enumerate() {
        let f = g_r(kernel, s, t, r)?;
        let rdf = speed_identity(kernel, s, t, r)?;
        let lower = f0 - r * (f0 - f_r0) / r0;
        let h = 1e-4 * r;
        let fd = r * (g_r(kernel, s, t, r + h)? - g_r(kernel, s, t, r - h)?) / (2.0 * h);
        let fd_slack = SPEED_FD_TOL * (1.0 + rdf.abs()) - (fd - rdf).abs();
        let slack = (f0 - f)
            .min(f - lower)
            .min(f - f0 - rdf)
            // rescaled so the shared tolerance applies
            .min(fd_slack * SPEED_TOL / SPEED_FD_TOL);
        scan.record(slack, || Witness {
            index,
            point: vec![s, t, r],
            values: vec![lower, f, f0, rdf, fd],
            note: "values are lower bound, f(r), f(0+), r f'(r), r f'(r) by central difference".into(),
        });
    }
    Ok(scan.into_report(
        "speed_bound",
        format!("s={s}, t={t}, r0={r0}, {} values of r", r_seq.len()),
    ))
}
