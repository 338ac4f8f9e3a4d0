//! The soft-min `G_r(s, t) = r psi^{-1}(psi(s/r) + psi(t/r))` and the residual
//! map `H_r(x) = G_r(x, F(x))` whose roots approximate NCP solutions.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::kernels::{check_r, SmoothingKernel};
use crate::ncp::NcpProblem;

/// Soft-min of `s` and `t` at smoothing level `r`. Never exceeds `min(s, t)`.
pub fn g_r(kernel: &SmoothingKernel, s: f64, t: f64, r: f64) -> Result<f64> {
    check_r(r)?;
    let lo = s.min(t);
    // closed form for exp(-d t); composing psi directly overflows once r is small
    if let Some(d) = kernel.exponential_rate() {
        let gap = (s - t).abs() * d / r;
        return Ok(lo - (r / d) * (-gap).exp().ln_1p());
    }
    let y = kernel.psi(s / r) + kernel.psi(t / r);
    if !y.is_finite() {
        return Err(Error::Domain(format!("psi overflow at s={s}, t={t}, r={r}")));
    }
    let g = r * kernel.psi_inv(y)?;
    // psi^{-1} o psi can round a hair above the identity
    Ok(g.min(lo))
}

/// `(dG/ds, dG/dt)`, both positive.
pub fn g_r_partials(kernel: &SmoothingKernel, s: f64, t: f64, r: f64) -> Result<(f64, f64)> {
    check_r(r)?;
    if let Some(d) = kernel.exponential_rate() {
        // softmin weights; the larger one is formed as 1 - smaller so they sum to one
        let small = 1.0 / (1.0 + ((s - t).abs() * d / r).exp());
        let large = 1.0 - small;
        return Ok(if s <= t { (large, small) } else { (small, large) });
    }
    let (u, v) = (s / r, t / r);
    let y = kernel.psi(u) + kernel.psi(v);
    let w = kernel.dpsi(kernel.psi_inv(y)?);
    if w == 0.0 || !w.is_finite() {
        return Err(Error::Internal(format!(
            "psi' vanished at psi^-1({y}) for {}",
            kernel.name()
        )));
    }
    Ok((kernel.dpsi(u) / w, kernel.dpsi(v) / w))
}

/// `H_r(x)` together with the `F(x)` it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedResidual {
    pub values: Vec<f64>,
    pub fx: Vec<f64>,
    pub r: f64,
    pub jacobian_available: bool,
}

impl SmoothedResidual {
    pub fn norm_inf(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn merit(&self) -> f64 {
        0.5 * self.values.iter().map(|v| v * v).sum::<f64>()
    }
}

/// Evaluates `F` once and forms `H_r(x)`.
pub fn smoothed_residual(
    problem: &NcpProblem,
    kernel: &SmoothingKernel,
    x: &[f64],
    r: f64,
) -> Result<SmoothedResidual> {
    check_r(r)?;
    let fx = problem.eval_f(x)?;
    let values = x
        .iter()
        .zip(&fx)
        .enumerate()
        .map(|(i, (&xi, &fi))| {
            g_r(kernel, xi, fi, r).map_err(|e| Error::Component {
                index: i,
                reason: e.to_string(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SmoothedResidual {
        values,
        fx,
        r,
        jacobian_available: true,
    })
}

pub fn h_r(problem: &NcpProblem, kernel: &SmoothingKernel, x: &[f64], r: f64) -> Result<Vec<f64>> {
    Ok(smoothed_residual(problem, kernel, x, r)?.values)
}

/// `D1 + D2 J_F(x)` with `fx = F(x)` already known.
pub fn h_r_jacobian_at(
    problem: &NcpProblem,
    kernel: &SmoothingKernel,
    x: &[f64],
    fx: &[f64],
    r: f64,
) -> Result<DMatrix<f64>> {
    check_r(r)?;
    let mut jac = problem.eval_jacobian(x, fx)?;
    for i in 0..x.len() {
        let (ds, dt) = g_r_partials(kernel, x[i], fx[i], r).map_err(|e| Error::Component {
            index: i,
            reason: e.to_string(),
        })?;
        let mut row = jac.row_mut(i);
        row *= dt;
        row[i] += ds;
    }
    Ok(jac)
}

pub fn h_r_jacobian(problem: &NcpProblem, kernel: &SmoothingKernel, x: &[f64], r: f64) -> Result<DMatrix<f64>> {
    let fx = problem.eval_f(x)?;
    h_r_jacobian_at(problem, kernel, x, &fx, r)
}

/// `x -> r theta^{-1}(1 - theta(F(x)/r))`; its fixed points are the roots of `H_r`.
pub fn fixed_point_map(problem: &NcpProblem, kernel: &SmoothingKernel, x: &[f64], r: f64) -> Result<Vec<f64>> {
    check_r(r)?;
    let fx = problem.eval_f(x)?;
    fx.iter()
        .enumerate()
        .map(|(i, &fi)| {
            // theta^{-1}(1 - theta(u)) = psi^{-1}(theta(u))
            let target = kernel.theta(fi / r);
            kernel.psi_inv(target).map(|v| r * v).map_err(|_| Error::Component {
                index: i,
                reason: format!("1 - theta(F_i/r) = {} is outside the range of theta", 1.0 - target),
            })
        })
        .collect()
}

/// `min(x, F(x))` componentwise.
pub fn f_min(problem: &NcpProblem, x: &[f64]) -> Result<Vec<f64>> {
    let fx = problem.eval_f(x)?;
    Ok(x.iter().zip(&fx).map(|(a, b)| a.min(*b)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{make_exponential, make_rational};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn shift_one() -> NcpProblem {
        NcpProblem::new("x-1", 1, |x: &[f64]| Ok(vec![x[0] - 1.0]))
            .with_jacobian(|_: &[f64]| Ok(DMatrix::from_element(1, 1, 1.0)))
    }

    fn analytic2d() -> NcpProblem {
        NcpProblem::new("a2d", 2, |x: &[f64]| {
            Ok(vec![2.0 - x[0] - x[0].powi(3), x[1] + x[1].powi(3) - 2.0])
        })
    }

    fn identity(n: usize) -> NcpProblem {
        NcpProblem::new("id", n, |x: &[f64]| Ok(x.to_vec()))
            .with_jacobian(|x: &[f64]| Ok(DMatrix::identity(x.len(), x.len())))
    }

    #[test]
    fn g_r_examples() {
        let rat = make_rational();
        let exp = make_exponential();
        assert_relative_eq!(g_r(&rat, 3.0, 6.0, 1.0).unwrap(), 17.0 / 11.0, max_relative = 1e-14);
        assert_eq!(g_r(&rat, 0.0, 0.0, 0.5).unwrap(), -0.5);
        let expected = 1.0 - 0.5 * (-2f64).exp().ln_1p();
        assert_relative_eq!(g_r(&exp, 1.0, 2.0, 0.5).unwrap(), expected, max_relative = 1e-15);
        assert_relative_eq!(g_r(&exp, 1.0, 2.0, 0.5).unwrap(), 0.936536, epsilon = 1e-6);
        assert!(g_r(&exp, 1.0, 2.0, 0.0).is_err());
    }

    #[test]
    fn rational_matches_closed_form_where_valid() {
        let rat = make_rational();
        for &(s, t, r) in &[(3.0, 6.0, 1.0), (0.5, 2.0, 0.1), (10.0, 0.2, 0.01), (1.0, 1.0, 1.0)] {
            assert!(s * t >= r * r);
            let closed = (s * t - r * r) / (s + t + 2.0 * r);
            assert_relative_eq!(g_r(&rat, s, t, r).unwrap(), closed, max_relative = 1e-12);
        }
        // outside the region the closed form is wrong: at s = t = 0 it gives -r/2
        assert_eq!(g_r(&rat, 0.0, 0.0, 1.0).unwrap(), -1.0);
    }

    #[test]
    fn exponential_small_r_does_not_overflow() {
        let exp = make_exponential();
        let g = g_r(&exp, -3.0, 2.0, 1e-8).unwrap();
        assert_eq!(g, -3.0);
        let (a, b) = g_r_partials(&exp, -3.0, 2.0, 1e-8).unwrap();
        assert_eq!((a, b), (1.0, 0.0));
    }

    #[test]
    fn partial_examples() {
        let exp = make_exponential();
        for &(s, t, r) in &[
            (1.0, 2.0, 0.5),
            (-4.0, 3.0, 0.01),
            (0.3, 0.3001, 1e-3),
            (7.0, -7.0, 3.0),
        ] {
            let (a, b) = g_r_partials(&exp, s, t, r).unwrap();
            assert_eq!(a + b, 1.0);
            assert!(a >= 0.0 && b >= 0.0);
        }
        assert_eq!(g_r_partials(&exp, 2.5, 2.5, 0.2).unwrap(), (0.5, 0.5));

        let rat = make_rational();
        let (s, t, r) = (3.0, 6.0, 1.0);
        let (a, b) = g_r_partials(&rat, s, t, r).unwrap();
        let hs = 1e-6 * (1.0 + s);
        let ht = 1e-6 * (1.0 + t);
        let fds = (g_r(&rat, s + hs, t, r).unwrap() - g_r(&rat, s - hs, t, r).unwrap()) / (2.0 * hs);
        let fdt = (g_r(&rat, s, t + ht, r).unwrap() - g_r(&rat, s, t - ht, r).unwrap()) / (2.0 * ht);
        assert_relative_eq!(a, fds, max_relative = 1e-7);
        assert_relative_eq!(b, fdt, max_relative = 1e-7);
        assert!(a > 0.0 && b > 0.0);
    }

    #[test]
    fn rational_partials_at_kink_use_right_derivative() {
        let rat = make_rational();
        // psi is C^1 at 0, so the two one-sided values agree
        let (a, _) = g_r_partials(&rat, 0.0, 5.0, 1.0).unwrap();
        let (al, _) = g_r_partials(&rat, -1e-12, 5.0, 1.0).unwrap();
        assert!((a - al).abs() < 1e-9);
    }

    #[test]
    fn h_r_examples() {
        let exp = make_exponential();
        let h = h_r(&analytic2d(), &exp, &[0.0, 1.0], 0.1).unwrap();
        let e0 = -0.1 * (-20f64).exp().ln_1p();
        let e1 = -0.1 * (-10f64).exp().ln_1p();
        assert_relative_eq!(h[0], e0, max_relative = 1e-12);
        assert_relative_eq!(h[1], e1, max_relative = 1e-12);
        assert!((h[0] + 2.06e-10).abs() < 1e-12);
        assert!((h[1] + 4.54e-6).abs() < 1e-8);

        for r in [0.5f64, 0.1, 0.02] {
            let root = r * (1.0 / r).exp().ln_1p();
            let v = h_r(&shift_one(), &exp, &[root], r).unwrap()[0];
            assert!(v.abs() <= 1e-12, "r={r} v={v}");
        }
    }

    #[test]
    fn h_r_propagates_evaluation_errors() {
        let bad = NcpProblem::new("bad", 2, |x: &[f64]| {
            if x[1] < 0.0 {
                Err(Error::eval_at(1, "negative"))
            } else {
                Ok(x.to_vec())
            }
        });
        let err = h_r(&bad, &make_exponential(), &[1.0, -1.0], 0.1).unwrap_err();
        assert!(matches!(err, Error::Evaluation { index: Some(1), .. }));
    }

    #[test]
    fn jacobian_identity_map_exponential() {
        let p = identity(4);
        let x = [0.3, -2.0, 5.0, 1e-3];
        let j = h_r_jacobian(&p, &make_exponential(), &x, 0.05).unwrap();
        assert_eq!(j, DMatrix::identity(4, 4));
        assert_eq!(p.jacobian_evaluations(), 1);
    }

    fn fd_jacobian(p: &NcpProblem, k: &SmoothingKernel, x: &[f64], r: f64) -> DMatrix<f64> {
        let n = x.len();
        let mut j = DMatrix::zeros(n, n);
        for c in 0..n {
            let h = 1e-6 * (1.0 + x[c].abs());
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[c] += h;
            xm[c] -= h;
            let (hp, hm) = (h_r(p, k, &xp, r).unwrap(), h_r(p, k, &xm, r).unwrap());
            for i in 0..n {
                j[(i, c)] = (hp[i] - hm[i]) / (2.0 * h);
            }
        }
        j
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let p = analytic2d();
        for k in [make_exponential(), make_rational()] {
            let x = [0.7, 1.3];
            let j = h_r_jacobian(&p, &k, &x, 0.5).unwrap();
            let fd = fd_jacobian(&p, &k, &x, 0.5);
            for (a, b) in j.iter().zip(fd.iter()) {
                assert!((a - b).abs() <= 1e-6 * b.abs().max(1.0), "{} {a} vs {b}", k.name());
            }
        }
    }

    #[test]
    fn jacobian_one_dimensional_rational_closed_form() {
        // G = (s t - r^2)/(s + t + 2r) with s = x, t = x - 1
        let (x, r) = (2.0, 1.0);
        let num = |x: f64| x * (x - 1.0) - r * r;
        let den = |x: f64| 2.0 * x - 1.0 + 2.0 * r;
        let deriv = ((2.0 * x - 1.0) * den(x) - 2.0 * num(x)) / den(x).powi(2);
        let j = h_r_jacobian(&shift_one(), &make_rational(), &[x], r).unwrap();
        assert!((j[(0, 0)] - deriv).abs() <= 1e-10);
    }

    #[test]
    fn fixed_point_examples() {
        let exp = make_exponential();
        let r = 0.2;
        let p = NcpProblem::new("const", 1, move |_: &[f64]| Ok(vec![r * 2f64.ln()]));
        let v = fixed_point_map(&p, &exp, &[3.0], r).unwrap();
        assert_relative_eq!(v[0], r * 2f64.ln(), max_relative = 1e-14);

        let zero = NcpProblem::new("zero", 2, |_: &[f64]| Ok(vec![1.0, 0.0]));
        let err = fixed_point_map(&zero, &exp, &[1.0, 1.0], r).unwrap_err();
        assert!(matches!(err, Error::Component { index: 1, .. }));

        let root = r * (1.0 / r).exp().ln_1p();
        let fp = fixed_point_map(&shift_one(), &exp, &[root], r).unwrap();
        assert!((fp[0] - root).abs() <= 1e-9);
    }

    #[test]
    fn f_min_examples() {
        assert_eq!(f_min(&analytic2d(), &[0.0, 1.0]).unwrap(), vec![0.0, 0.0]);
        let p = NcpProblem::new("fixed", 2, |_: &[f64]| Ok(vec![3.0, -0.5]));
        assert_eq!(f_min(&p, &[1.0, 2.0]).unwrap(), vec![1.0, -0.5]);
        assert_eq!(f_min(&analytic2d(), &[1.0, 1.0]).unwrap(), vec![0.0, 0.0]);
    }

    proptest! {
        #[test]
        fn soft_min_is_below_min_and_symmetric(
            s in -10.0f64..10.0, t in -10.0f64..10.0, e in -3.0f64..0.0,
        ) {
            let r = 10f64.powf(e);
            for k in [make_rational(), make_exponential()] {
                let g = g_r(&k, s, t, r).unwrap();
                prop_assert!(g <= s.min(t));
                prop_assert_eq!(g, g_r(&k, t, s, r).unwrap());
            }
            let ge = g_r(&make_exponential(), s, t, r).unwrap();
            prop_assert!(s.min(t) - r * std::f64::consts::LN_2 <= ge);
        }

        #[test]
        fn rational_soft_min_decreases_in_r(s in 0.01f64..10.0, t in 0.01f64..10.0, r1 in 1e-4f64..1.0, f in 1.0f64..5.0) {
            let rat = make_rational();
            let r2 = r1 * f;
            prop_assert!(g_r(&rat, s, t, r1).unwrap() >= g_r(&rat, s, t, r2).unwrap() - 1e-15);
        }

        #[test]
        fn h_r_below_f_min(x0 in -5.0f64..5.0, x1 in -5.0f64..5.0, r in 1e-3f64..2.0) {
            let p = analytic2d();
            let fm = f_min(&p, &[x0, x1]).unwrap();
            for k in [make_rational(), make_exponential()] {
                let h = h_r(&p, &k, &[x0, x1], r).unwrap();
                prop_assert!(h[0] <= fm[0] && h[1] <= fm[1]);
            }
        }
    }
}
