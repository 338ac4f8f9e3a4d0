//! Exhaustive active-set enumeration for small linear complementarity
//! problems `x >= 0, Mx + q >= 0, x^T (Mx + q) = 0`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Largest dimension the enumeration accepts (`2^n` linear solves).
pub const MAX_ENUMERATION_DIM: usize = 12;

/// Every solution found by trying each support set `S`: solve
/// `M_SS x_S = -q_S`, set the rest of `x` to zero, and keep the candidate if
/// `x >= -tol` and `Mx + q >= -tol` (scaled by `1 + |q|_inf`). Near-duplicate
/// solutions from degenerate supports are merged.
pub fn enumerate_lcp(m: &DMatrix<f64>, q: &DVector<f64>, tol: f64) -> Result<Vec<Vec<f64>>> {
    let n = q.len();
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::Dimension {
            expected: n,
            got: m.nrows(),
        });
    }
    if n > MAX_ENUMERATION_DIM {
        return Err(Error::invalid(format!(
            "active-set enumeration is limited to n <= {MAX_ENUMERATION_DIM}, got {n}"
        )));
    }
    let scale = 1.0 + q.amax();
    let mut found: Vec<Vec<f64>> = Vec::new();
    for mask in 0u32..(1 << n) {
        let support: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
        let mut x = DVector::zeros(n);
        if !support.is_empty() {
            let k = support.len();
            let sub = DMatrix::from_fn(k, k, |i, j| m[(support[i], support[j])]);
            let rhs = DVector::from_fn(k, |i, _| -q[support[i]]);
            let Some(xs) = sub.lu().solve(&rhs) else { continue };
            for (i, &idx) in support.iter().enumerate() {
                x[idx] = xs[i];
            }
        }
        let w = m * &x + q;
        if x.iter().all(|&v| v >= -tol * scale) && w.iter().all(|&v| v >= -tol * scale) {
            let cand: Vec<f64> = x.iter().map(|&v| v.max(0.0)).collect();
            let duplicate = found.iter().any(|f| {
                f.iter()
                    .zip(&cand)
                    .all(|(a, b)| (a - b).abs() <= 1e-9 * (1.0 + a.abs()))
            });
            if !duplicate {
                found.push(cand);
            }
        }
    }
    Ok(found)
}
