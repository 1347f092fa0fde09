//! Cyclic Jacobi diagonalisation of complex Hermitian matrices.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;

/// Inputs whose Hermiticity defect exceeds this (relative to the Frobenius norm) are rejected.
pub const HERMITIAN_TOLERANCE: f64 = 1e-8;

const MAX_SWEEPS: usize = 100;

/// Eigenvalues in descending order and the matching unit eigenvectors as columns.
pub fn hermitian_eigen(matrix: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let n = matrix.dim();
    let scale = matrix.frobenius_norm();
    let defect = matrix.hermiticity_defect();
    if defect > HERMITIAN_TOLERANCE * scale.max(1.0) {
        return Err(Error::NotHermitian(defect));
    }
    // symmetrise so rounding in the input cannot leak into the rotations
    let mut a = CMatrix::from_fn(n, |i, j| 0.5 * (matrix[(i, j)] + matrix[(j, i)].conj()));
    let mut v = CMatrix::identity(n);
    if scale == 0.0 {
        return Ok((vec![0.0; n], v));
    }

    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[(i, j)].norm_sqr()).sum();
        if off.sqrt() <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag <= 1e-300 {
                    continue;
                }
                // unitary U = diag(1, e^{-i phi}) * real rotation annihilates a_pq
                let phase = apq / mag;
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let theta = (aqq - app) / (2.0 * mag);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let u_pp = C64::new(c, 0.0);
                let u_pq = C64::new(s, 0.0);
                let u_qp = -phase.conj() * s;
                let u_qq = phase.conj() * c;
                // A <- A U (columns p, q)
                for k in 0..n {
                    let x = a[(k, p)];
                    let y = a[(k, q)];
                    a[(k, p)] = x * u_pp + y * u_qp;
                    a[(k, q)] = x * u_pq + y * u_qq;
                }
                // A <- U^dag A (rows p, q)
                for k in 0..n {
                    let x = a[(p, k)];
                    let y = a[(q, k)];
                    a[(p, k)] = u_pp.conj() * x + u_qp.conj() * y;
                    a[(q, k)] = u_pq.conj() * x + u_qq.conj() * y;
                }
                a[(p, q)] = C64::new(0.0, 0.0);
                a[(q, p)] = C64::new(0.0, 0.0);
                a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
                for k in 0..n {
                    let x = v[(k, p)];
                    let y = v[(k, q)];
                    v[(k, p)] = x * u_pp + y * u_qp;
                    v[(k, q)] = x * u_pq + y * u_qq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].re.total_cmp(&a[(i, i)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = CMatrix::from_fn(n, |r, c| v[(r, order[c])]);
    Ok((values, vectors))
}

/// Eigenvalues in descending order.
pub fn hermitian_eigenvalues(matrix: &CMatrix) -> Result<Vec<f64>> {
    hermitian_eigen(matrix).map(|(values, _)| values)
}
