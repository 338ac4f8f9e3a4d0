//! Smoothing kernels: an increasing `theta` with `theta(0) = 0`, `theta(+inf) = 1`,
//! and its complement `psi = 1 - theta`, which is what the soft-min is built from.
//!
//! Three analytic families are provided:
//!
//! * the rational kernel `psi(t) = 1/(t+1)` for `t >= 0`, `1 - t` for `t < 0`;
//! * the exponential kernel `psi(t) = exp(-d t)`;
//! * the power family `psi(x) = (c1 x + 1)^(-1/(lambda-1))`, which solves
//!   `(psi')^2 = psi psi'' / lambda` and contains the rational kernel at
//!   `lambda = 2, c1 = 1` (and the exponential one as `lambda -> 1`).
//!
//! Power kernels are only defined for `x > -1/c1`, so for the solver they are
//! continued below a switch point by their tangent line. That keeps `psi`
//! decreasing, positive on its range and `C^1`. For the rational kernel the
//! tangent at 0 is exactly the `1 - t` branch. The unextended formula is
//! available through [`SmoothingKernel::profile`] for curvature analysis.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, POINTS_PER_DECADE};

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmoothnessClass {
    C2Everywhere,
    PiecewiseC2,
}

/// Parameters of the `phi_lambda` family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiLambdaParams {
    pub lambda: f64,
    /// Scale of the rational branch (`lambda > 1`).
    pub c1: f64,
    /// Rate of the exponential branch (`lambda = 1`).
    pub d: f64,
}

impl PhiLambdaParams {
    pub fn new(lambda: f64, c1: f64, d: f64) -> Self {
        PhiLambdaParams { lambda, c1, d }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 1.0) || !self.lambda.is_finite() {
            return Err(Error::invalid(format!("lambda must be >= 1, got {}", self.lambda)));
        }
        if !(self.c1 > 0.0) || !self.c1.is_finite() {
            return Err(Error::invalid(format!("c1 must be > 0, got {}", self.c1)));
        }
        if !(self.d > 0.0) || !self.d.is_finite() {
            return Err(Error::invalid(format!("d must be > 0, got {}", self.d)));
        }
        Ok(())
    }
}

/// A user supplied decreasing, convex `psi` on a bracket `[lo, hi]`.
///
/// The inverse is found by bisection, so `psi` must be strictly decreasing on
/// the bracket.
pub struct CustomKernel {
    pub psi: ScalarFn,
    pub dpsi: ScalarFn,
    pub d2psi: ScalarFn,
    pub domain: (f64, f64),
}

#[derive(Clone)]
enum Shape {
    /// `(1 + c1 x)^(-k)`
    Power {
        c1: f64,
        k: f64,
    },
    /// `exp(-rate x)`
    Exp {
        rate: f64,
    },
    Custom(Arc<CustomKernel>),
}

#[derive(Clone)]
pub struct SmoothingKernel {
    name: String,
    shape: Shape,
    /// Power kernels switch to their tangent line below this point.
    switch: Option<f64>,
    class: SmoothnessClass,
    dominates_rational: bool,
}

impl fmt::Debug for SmoothingKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SmoothingKernel")
            .field("name", &self.name)
            .field("class", &self.class)
            .field("dominates_rational", &self.dominates_rational)
            .finish()
    }
}

/// `theta(t) = t/(t+1)` on `t >= 0`, `theta(t) = t` below.
pub fn make_rational() -> SmoothingKernel {
    SmoothingKernel::build(
        "rational",
        Shape::Power { c1: 1.0, k: 1.0 },
        Some(0.0),
        SmoothnessClass::PiecewiseC2,
    )
}

/// `theta(t) = 1 - exp(-t)`.
pub fn make_exponential() -> SmoothingKernel {
    make_exponential_with_rate(1.0)
}

fn make_exponential_with_rate(rate: f64) -> SmoothingKernel {
    let name = if rate == 1.0 {
        "exp".to_string()
    } else {
        format!("phi:1:{rate}")
    };
    SmoothingKernel::build(name, Shape::Exp { rate }, None, SmoothnessClass::C2Everywhere)
}

/// Member of the family with `L(alpha) = -alpha / lambda`.
pub fn make_phi_lambda(params: PhiLambdaParams) -> Result<SmoothingKernel> {
    params.validate()?;
    if params.lambda == 1.0 {
        return Ok(make_exponential_with_rate(params.d));
    }
    let k = 1.0 / (params.lambda - 1.0);
    let c1 = params.c1;
    Ok(SmoothingKernel::build(
        format!("phi:{}:{}", params.lambda, c1),
        Shape::Power { c1, k },
        Some(-0.5 / c1),
        SmoothnessClass::PiecewiseC2,
    ))
}

/// `theta_r(t) = theta(t / r)`.
pub fn theta_r(kernel: &SmoothingKernel, t: f64, r: f64) -> Result<f64> {
    check_r(r)?;
    Ok(kernel.theta(t / r))
}

pub(crate) fn check_r(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("smoothing parameter must be positive, got {r}")))
    }
}

impl SmoothingKernel {
    fn build(name: impl Into<String>, shape: Shape, switch: Option<f64>, class: SmoothnessClass) -> Self {
        let mut kernel = SmoothingKernel {
            name: name.into(),
            shape,
            switch,
            class,
            dominates_rational: false,
        };
        kernel.dominates_rational = kernel.scan_dominates_rational();
        kernel
    }

    /// Kernel from an arbitrary decreasing `psi`, mostly useful to probe the
    /// analysis routines with shapes outside the analytic families.
    pub fn custom(name: impl Into<String>, custom: CustomKernel) -> Result<Self> {
        let (lo, hi) = custom.domain;
        if !(lo < hi) {
            return Err(Error::invalid(format!("custom kernel domain [{lo}, {hi}]")));
        }
        Ok(SmoothingKernel::build(
            name,
            Shape::Custom(Arc::new(custom)),
            None,
            SmoothnessClass::C2Everywhere,
        ))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn smoothness_class(&self) -> SmoothnessClass {
        self.class
    }

    /// `Some(d)` for `psi(t) = exp(-d t)`.
    pub fn exponential_rate(&self) -> Option<f64> {
        match self.shape {
            Shape::Exp { rate } => Some(rate),
            _ => None,
        }
    }

    /// Whether `theta >= t/(t+1)` was observed on a log grid over `[1e-8, 1e8]`
    /// (plus `t = 0`) with zero tolerance. Kernels with this flag satisfy the
    /// complementarity bound `x_i F_i(x) <= r^2` at roots of `H_r`.
    pub fn dominates_rational(&self) -> bool {
        self.dominates_rational
    }

    /// The kernel without its tangent-line continuation: the analytic formula
    /// on its natural domain (`x > -1/c1` for power kernels). Identical to
    /// `self` for the exponential and custom kernels.
    pub fn profile(&self) -> SmoothingKernel {
        if self.switch.is_none() {
            return self.clone();
        }
        SmoothingKernel {
            name: format!("{}/profile", self.name),
            shape: self.shape.clone(),
            switch: None,
            class: SmoothnessClass::C2Everywhere,
            dominates_rational: self.dominates_rational,
        }
    }

    /// Open interval on which `psi` and its derivatives are defined.
    pub fn domain(&self) -> (f64, f64) {
        match (&self.shape, self.switch) {
            (Shape::Power { c1, .. }, None) => (-1.0 / c1, f64::INFINITY),
            (Shape::Custom(c), _) => c.domain,
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    pub fn in_domain(&self, x: f64) -> bool {
        let (lo, hi) = self.domain();
        match &self.shape {
            Shape::Custom(_) => x >= lo && x <= hi,
            _ => x > lo && x < hi,
        }
    }

    fn tangent_point(&self) -> Option<f64> {
        match self.shape {
            Shape::Power { .. } => self.switch,
            _ => None,
        }
    }

    pub fn theta(&self, t: f64) -> f64 {
        match &self.shape {
            Shape::Power { c1, k } => match self.tangent_point() {
                Some(x0) if t < x0 => power_theta(*c1, *k, x0) - power_dpsi(*c1, *k, x0) * (t - x0),
                _ => power_theta(*c1, *k, t),
            },
            Shape::Exp { rate } => -(-rate * t).exp_m1(),
            Shape::Custom(c) => 1.0 - (c.psi)(t),
        }
    }

    pub fn psi(&self, t: f64) -> f64 {
        match &self.shape {
            Shape::Power { c1, k } => match self.tangent_point() {
                Some(x0) if t < x0 => power_psi(*c1, *k, x0) + power_dpsi(*c1, *k, x0) * (t - x0),
                _ => power_psi(*c1, *k, t),
            },
            Shape::Exp { rate } => (-rate * t).exp(),
            Shape::Custom(c) => (c.psi)(t),
        }
    }

    /// First derivative of `psi`. At the switch point the right derivative is used.
    pub fn dpsi(&self, t: f64) -> f64 {
        match &self.shape {
            Shape::Power { c1, k } => match self.tangent_point() {
                Some(x0) if t < x0 => power_dpsi(*c1, *k, x0),
                _ => power_dpsi(*c1, *k, t),
            },
            Shape::Exp { rate } => -rate * (-rate * t).exp(),
            Shape::Custom(c) => (c.dpsi)(t),
        }
    }

    pub fn d2psi(&self, t: f64) -> f64 {
        match &self.shape {
            Shape::Power { c1, k } => match self.tangent_point() {
                Some(x0) if t < x0 => 0.0,
                _ => power_d2psi(*c1, *k, t),
            },
            Shape::Exp { rate } => rate * rate * (-rate * t).exp(),
            Shape::Custom(c) => (c.d2psi)(t),
        }
    }

    /// Inverse of `psi` on its range.
    pub fn psi_inv(&self, y: f64) -> Result<f64> {
        if !(y > 0.0) || y.is_infinite() {
            return Err(self.out_of_range(y));
        }
        match &self.shape {
            Shape::Power { c1, k } => match self.tangent_point() {
                Some(x0) if y > power_psi(*c1, *k, x0) => {
                    Ok(x0 + (y - power_psi(*c1, *k, x0)) / power_dpsi(*c1, *k, x0))
                }
                _ => Ok(power_psi_inv(*c1, *k, y)),
            },
            Shape::Exp { rate } => Ok(-y.ln() / rate),
            Shape::Custom(c) => self.custom_inverse(c, y),
        }
    }

    /// `theta^{-1}(z) = psi^{-1}(1 - z)`, defined for `z < 1`.
    pub fn theta_inv(&self, z: f64) -> Result<f64> {
        self.psi_inv(1.0 - z)
    }

    fn custom_inverse(&self, c: &CustomKernel, y: f64) -> Result<f64> {
        let (mut lo, mut hi) = c.domain;
        let (p_lo, p_hi) = ((c.psi)(lo), (c.psi)(hi));
        if !(y <= p_lo && y >= p_hi) {
            return Err(self.out_of_range(y));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if (c.psi)(mid) > y {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    fn out_of_range(&self, value: f64) -> Error {
        Error::OutOfRange {
            kernel: self.name.clone(),
            value,
        }
    }

    fn scan_dominates_rational(&self) -> bool {
        let rational = |t: f64| t / (t + 1.0);
        let Ok(nodes) = GridSpec::log_per_decade(1e-8, 1e8, POINTS_PER_DECADE).nodes() else {
            return false;
        };
        std::iter::once(0.0)
            .chain(nodes)
            .filter(|t| self.in_domain(*t))
            .all(|t| self.theta(t) >= rational(t))
    }
}

fn power_base(c1: f64, x: f64) -> f64 {
    1.0 + c1 * x
}

fn power_psi(c1: f64, k: f64, x: f64) -> f64 {
    let b = power_base(c1, x);
    if k == 1.0 {
        1.0 / b
    } else {
        b.powf(-k)
    }
}

fn power_theta(c1: f64, k: f64, x: f64) -> f64 {
    let cx = c1 * x;
    if k == 1.0 {
        cx / (1.0 + cx)
    } else {
        -(-k * cx.ln_1p()).exp_m1()
    }
}

fn power_dpsi(c1: f64, k: f64, x: f64) -> f64 {
    -k * c1 * power_base(c1, x).powf(-k - 1.0)
}

fn power_d2psi(c1: f64, k: f64, x: f64) -> f64 {
    k * (k + 1.0) * c1 * c1 * power_base(c1, x).powf(-k - 2.0)
}

fn power_psi_inv(c1: f64, k: f64, y: f64) -> f64 {
    if k == 1.0 {
        (1.0 / y - 1.0) / c1
    } else {
        (y.powf(-1.0 / k) - 1.0) / c1
    }
}

impl FromStr for SmoothingKernel {
    type Err = Error;

    /// Accepts `rational`, `exp` and `phi:<lambda>[:<c1 or d>]`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "rational" => return Ok(make_rational()),
            "exp" => return Ok(make_exponential()),
            _ => {}
        }
        let rest = s
            .strip_prefix("phi:")
            .ok_or_else(|| Error::Parse(format!("unknown kernel `{s}`")))?;
        let mut parts = rest.split(':');
        let number = |p: Option<&str>, default: Option<f64>| -> Result<f64> {
            match p {
                Some(v) => v.parse::<f64>().map_err(|e| Error::Parse(format!("`{v}`: {e}"))),
                None => default.ok_or_else(|| Error::Parse(format!("kernel `{s}` needs lambda"))),
            }
        };
        let lambda = number(parts.next().filter(|p| !p.is_empty()), None)?;
        let scale = number(parts.next(), Some(1.0))?;
        if parts.next().is_some() {
            return Err(Error::Parse(format!("too many fields in kernel `{s}`")));
        }
        make_phi_lambda(PhiLambdaParams::new(lambda, scale, scale))
    }
}

/// Outcome of the numerical `(H_a)` certification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HaReport {
    /// `psi(s) <= psi(a s) / 2` at this grid point and every larger one.
    HoldsFrom(f64),
    /// The inequality still fails in the last decade of the grid; the value is
    /// the largest failing point.
    ViolatedAt(f64),
}

impl HaReport {
    pub fn holds(&self) -> bool {
        matches!(self, HaReport::HoldsFrom(_))
    }
}

/// Scans a geometric grid (64 points per decade, six decades below `s_max`)
/// for the threshold beyond which `psi(s) <= psi(a s) / 2`.
pub fn check_ha(kernel: &SmoothingKernel, a: f64, s_max: f64) -> Result<HaReport> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::invalid(format!("a must lie in (0, 1), got {a}")));
    }
    if !(s_max > 0.0) || !s_max.is_finite() {
        return Err(Error::invalid(format!("s_max must be positive, got {s_max}")));
    }
    let grid = GridSpec::log_per_decade(s_max * 1e-6, s_max, POINTS_PER_DECADE).nodes()?;
    let fails = |s: f64| kernel.psi(s) > 0.5 * kernel.psi(a * s);
    match grid.iter().rposition(|&s| fails(s)) {
        None => Ok(HaReport::HoldsFrom(grid[0])),
        Some(i) if grid[i] > s_max / 10.0 => Ok(HaReport::ViolatedAt(grid[i])),
        Some(i) => Ok(HaReport::HoldsFrom(grid[i + 1])),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn samples() -> Vec<f64> {
        let mut v: Vec<f64> = (-40..=40).map(|i| i as f64 * 0.25).collect();
        v.extend([1e-9, 1e-4, 0.3, 7.7, 55.0, 1e3, 1e5]);
        v
    }

    #[test]
    fn rational_values() {
        let k = make_rational();
        assert_eq!(k.theta(0.0), 0.0);
        assert_eq!(k.psi(0.0), 1.0);
        assert_eq!(k.theta(1.0), 0.5);
        assert_eq!(k.theta(-1.0), -1.0);
        assert_eq!(k.psi_inv(2.0).unwrap(), -1.0);
        assert_eq!(k.psi_inv(1.0).unwrap(), 0.0);
        assert_eq!(k.smoothness_class(), SmoothnessClass::PiecewiseC2);
        assert!(k.theta(1e6) > 1.0 - 1e-3);
    }

    #[test]
    fn exponential_values() {
        let k = make_exponential();
        assert_eq!(k.theta(0.0), 0.0);
        assert_relative_eq!(k.psi_inv(2.0).unwrap(), -(2f64.ln()), max_relative = 1e-15);
        assert_relative_eq!(k.dpsi(1.0), -(-1f64).exp(), max_relative = 1e-15);
        assert!(k.theta(1e6) > 1.0 - 1e-6);
        for t in samples() {
            assert_eq!(k.d2psi(t), k.psi(t));
        }
    }

    #[test]
    fn theta_is_increasing_and_signed() {
        for k in [make_rational(), make_exponential(), "phi:3".parse().unwrap()] {
            let s = samples();
            // theta saturates to 1.0 in double precision for large t
            for w in s.windows(2).filter(|w| w[0] < w[1] && w[1] < 30.0) {
                assert!(k.theta(w[0]) < k.theta(w[1]), "{} at {:?}", k.name(), w);
            }
            for &t in &s {
                if t < 0.0 {
                    assert!(k.theta(t) < 0.0);
                }
                if t.abs() > 1e-6 && t < 100.0 {
                    assert!(k.dpsi(t) < 0.0);
                    assert!(k.d2psi(t) >= 0.0);
                }
            }
        }
    }

    #[test]
    fn inverse_roundtrip_covers_both_branches() {
        for k in [make_rational(), make_exponential(), "phi:3:2".parse().unwrap()] {
            for t in samples().into_iter().filter(|t| t.abs() < 700.0) {
                let back = k.psi_inv(k.psi(t)).unwrap();
                assert!(
                    (back - t).abs() <= 1e-12 * t.abs().max(1.0),
                    "{} t={t} back={back}",
                    k.name()
                );
            }
            for y in [1e-6, 0.1, 0.5, 0.999, 1.0, 1.5, 2.0, 17.0] {
                let back = k.psi(k.psi_inv(y).unwrap());
                assert_relative_eq!(back, y, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn psi_inv_rejects_nonpositive() {
        let k = make_exponential();
        assert!(matches!(k.psi_inv(0.0), Err(Error::OutOfRange { .. })));
        assert!(k.psi_inv(-1.0).is_err());
        assert!(k.psi_inv(f64::NAN).is_err());
    }

    #[test]
    fn phi_two_is_rational_on_positive_axis() {
        let phi = make_phi_lambda(PhiLambdaParams::new(2.0, 1.0, 1.0)).unwrap();
        let rat = make_rational();
        for t in samples().into_iter().filter(|t| *t >= 0.0) {
            assert!((phi.theta(t) - rat.theta(t)).abs() <= 1e-14);
            assert!((phi.psi(t) - rat.psi(t)).abs() <= 1e-14);
            assert!((phi.dpsi(t) - rat.dpsi(t)).abs() <= 1e-14);
        }
    }

    #[test]
    fn phi_one_is_exponential() {
        let phi = make_phi_lambda(PhiLambdaParams::new(1.0, 5.0, 1.0)).unwrap();
        let exp = make_exponential();
        assert_eq!(phi.name(), "exp");
        for t in samples() {
            assert_eq!(phi.psi(t), exp.psi(t));
            assert_eq!(phi.theta(t), exp.theta(t));
        }
    }

    #[test]
    fn phi_lambda_ode_identity() {
        // (psi')^2 = psi psi'' / lambda on the natural domain.
        for (lambda, c1) in [(3.0, 1.0), (1.5, 0.7), (4.0, 3.0)] {
            let k = make_phi_lambda(PhiLambdaParams::new(lambda, c1, 1.0)).unwrap();
            for x in [-0.4 / c1, 0.0, 0.5, 2.0, 10.0, 300.0] {
                let lhs = k.dpsi(x).powi(2);
                let rhs = k.psi(x) * k.d2psi(x) / lambda;
                assert!(
                    (lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1e-300),
                    "lambda={lambda} x={x}"
                );
            }
        }
        let k3: SmoothingKernel = "phi:3:1".parse().unwrap();
        assert!((k3.dpsi(2.0).powi(2) - k3.psi(2.0) * k3.d2psi(2.0) / 3.0).abs() <= 1e-12);
    }

    #[test]
    fn phi_lambda_continuation_is_c1_and_increasing() {
        let k: SmoothingKernel = "phi:3:2".parse().unwrap();
        let x0 = -0.25;
        let h = 1e-9;
        assert!((k.psi(x0 - h) - k.psi(x0 + h)).abs() < 1e-7);
        assert!((k.dpsi(x0 - h) - k.dpsi(x0 + h)).abs() < 1e-6);
        // well below the pole at -1/c1
        assert!(k.theta(-3.0) < k.theta(-1.0));
        assert!(k.psi(-3.0).is_finite() && k.psi(-3.0) > 0.0);
    }

    #[test]
    fn rejects_invalid_phi_params() {
        assert!(make_phi_lambda(PhiLambdaParams::new(0.5, 1.0, 1.0)).is_err());
        assert!(make_phi_lambda(PhiLambdaParams::new(2.0, 0.0, 1.0)).is_err());
        assert!(make_phi_lambda(PhiLambdaParams::new(1.0, 1.0, -1.0)).is_err());
        assert!(make_phi_lambda(PhiLambdaParams::new(f64::NAN, 1.0, 1.0)).is_err());
    }

    #[test]
    fn theta_r_values() {
        let rat = make_rational();
        let exp = make_exponential();
        assert_eq!(theta_r(&rat, 0.0, 0.3).unwrap(), 0.0);
        assert_relative_eq!(
            theta_r(&exp, 1.0, 0.5).unwrap(),
            1.0 - (-2f64).exp(),
            max_relative = 1e-15
        );
        assert_eq!(theta_r(&rat, -1.0, 1.0).unwrap(), -1.0);
        assert!(theta_r(&rat, 1.0, 0.0).is_err());
        assert!(theta_r(&rat, 1.0, -2.0).is_err());
    }

    #[test]
    fn exponential_dominates_rational() {
        let rat = make_rational();
        let exp = make_exponential();
        for t in samples().into_iter().filter(|t| *t >= 0.0) {
            assert!(1.0 >= exp.theta(t) && exp.theta(t) >= rat.theta(t));
        }
        assert!(exp.dominates_rational());
        assert!(rat.dominates_rational());
        assert!("phi:2".parse::<SmoothingKernel>().unwrap().dominates_rational());
        assert!("phi:1.5".parse::<SmoothingKernel>().unwrap().dominates_rational());
        assert!(!"phi:3".parse::<SmoothingKernel>().unwrap().dominates_rational());
        assert!(!"phi:1:0.5".parse::<SmoothingKernel>().unwrap().dominates_rational());
    }

    #[test]
    fn parse_selectors() {
        assert_eq!("rational".parse::<SmoothingKernel>().unwrap().name(), "rational");
        assert_eq!("exp".parse::<SmoothingKernel>().unwrap().name(), "exp");
        assert_eq!("phi:3".parse::<SmoothingKernel>().unwrap().name(), "phi:3:1");
        assert_eq!("phi:1".parse::<SmoothingKernel>().unwrap().name(), "exp");
        for bad in ["", "phi", "phi:", "phi:x", "phi:2:1:3", "gauss", "phi:0.5"] {
            assert!(bad.parse::<SmoothingKernel>().is_err(), "{bad}");
        }
    }

    #[test]
    fn ha_exponential_threshold() {
        let step = 10f64.powf(1.0 / 64.0);
        match check_ha(&make_exponential(), 0.5, 100.0).unwrap() {
            HaReport::HoldsFrom(s) => assert!(s <= 2.0 * 2f64.ln() * step, "{s}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn ha_rational_threshold() {
        let step = 10f64.powf(1.0 / 64.0);
        match check_ha(&make_rational(), 0.25, 100.0).unwrap() {
            // consistent with s_a >= 1/(1 - 2a) = 2
            HaReport::HoldsFrom(s) => assert!(s <= 2.0 * step && s >= 2.0 / step, "{s}"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            check_ha(&make_rational(), 0.75, 1e6).unwrap(),
            HaReport::ViolatedAt(_)
        ));
        assert!(!check_ha(&make_rational(), 0.5, 1e6).unwrap().holds());
    }

    #[test]
    fn ha_rejects_bad_arguments() {
        assert!(check_ha(&make_exponential(), 1.0, 10.0).is_err());
        assert!(check_ha(&make_exponential(), 0.5, 0.0).is_err());
    }

    #[test]
    fn profile_drops_the_continuation() {
        let k = make_rational().profile();
        assert_eq!(k.psi(-0.5), 2.0);
        assert_eq!(k.psi_inv(2.0).unwrap(), -0.5);
        assert!(!k.in_domain(-1.0));
        assert!(k.in_domain(-0.99));
    }

    #[test]
    fn custom_kernel_inverse() {
        let k = SmoothingKernel::custom(
            "shifted",
            CustomKernel {
                psi: Arc::new(|x| 1.0 / (1.0 + x)),
                dpsi: Arc::new(|x| -1.0 / (1.0 + x).powi(2)),
                d2psi: Arc::new(|x| 2.0 / (1.0 + x).powi(3)),
                domain: (0.0, 100.0),
            },
        )
        .unwrap();
        assert!((k.psi_inv(0.25).unwrap() - 3.0).abs() < 1e-12);
        assert!(k.psi_inv(2.0).is_err());
    }
}
