//! Small dense linear algebra: cyclic Jacobi eigendecomposition of symmetric
//! matrices, Cholesky factorization, and singular values for rank checks.
//!
//! Everything here works on `nalgebra::DMatrix<f64>`. Sizes are desk scale
//! (N up to a few dozen), so the Jacobi method is fast enough and gives
//! bit-reproducible results on a single thread.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Off-diagonal Frobenius norm at which the Jacobi sweep loop stops,
/// relative to `max(1, ||A||_F)`.
pub const JACOBI_TOLERANCE: f64 = 1e-12;

/// Hard cap on Jacobi sweeps before reporting failure.
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Allowed asymmetry `|a_ij - a_ji|` relative to `max(1, max |a_ij|)`.
pub const SYMMETRY_TOLERANCE: f64 = 1e-10;

/// Components within this distance of the largest magnitude count as tied
/// when fixing eigenvector signs.
const SIGN_TIE_TOLERANCE: f64 = 1e-12;

/// Eigenvalues sorted non-increasing with matching unit eigenvectors stored
/// as the columns of `eigenvectors`.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<f64>,
    pub sweeps: usize,
}

/// Largest `|a_ij - a_ji|` over the matrix.
pub fn max_asymmetry(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    worst
}

fn off_diagonal_norm(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sum += a[(i, j)] * a[(i, j)];
            }
        }
    }
    sum.sqrt()
}

/// Eigendecomposition of a symmetric matrix by the cyclic Jacobi method.
///
/// Eigenvalues come back sorted non-increasing (stable with respect to the
/// diagonal order on ties). Each eigenvector is normalized so that its
/// largest-magnitude component is positive; on (near) ties the lowest index
/// wins.
pub fn evd_symmetric(matrix: &DMatrix<f64>) -> Result<SymmetricEigen> {
    let n = matrix.nrows();
    if matrix.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: matrix.ncols(),
        });
    }
    if matrix.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(
            "matrix has non-finite entries".into(),
        ));
    }
    let scale = matrix.amax().max(1.0);
    let asymmetry = max_asymmetry(matrix);
    if asymmetry > SYMMETRY_TOLERANCE * scale {
        return Err(Error::NotSymmetric { asymmetry });
    }

    let mut a = (matrix + matrix.transpose()) * 0.5;
    let mut v = DMatrix::<f64>::identity(n, n);
    let threshold = JACOBI_TOLERANCE * a.norm().max(1.0);

    let mut sweeps = 0;
    loop {
        let off = off_diagonal_norm(&a);
        if off < threshold {
            break;
        }
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::NoConvergence {
                sweeps,
                off_norm: off,
            });
        }
        sweeps += 1;
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                // Rotation that annihilates a_pq; t is the smaller root of
                // t^2 + 2 theta t - 1 = 0.
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let arp = a[(r, p)];
                    let arq = a[(r, q)];
                    let new_rp = c * arp - s * arq;
                    let new_rq = s * arp + c * arq;
                    a[(r, p)] = new_rp;
                    a[(p, r)] = new_rp;
                    a[(r, q)] = new_rq;
                    a[(q, r)] = new_rq;
                }
                a[(p, p)] = app - t * apq;
                a[(q, q)] = aqq + t * apq;
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;

                for r in 0..n {
                    let vrp = v[(r, p)];
                    let vrq = v[(r, q)];
                    v[(r, p)] = c * vrp - s * vrq;
                    v[(r, q)] = s * vrp + c * vrq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    // sort_by is stable, so equal eigenvalues keep their diagonal order
    order.sort_by(|&i, &j| {
        a[(j, j)]
            .partial_cmp(&a[(i, i)])
            .unwrap_or(std::cmp::Ordering::Equal)
    });

    let eigenvalues: Vec<f64> = order.iter().map(|&i| a[(i, i)]).collect();
    let mut eigenvectors = DMatrix::<f64>::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col: Vec<f64> = v.column(src).iter().copied().collect();
        fix_sign(&mut col);
        for (r, x) in col.into_iter().enumerate() {
            eigenvectors[(r, dst)] = x;
        }
    }

    Ok(SymmetricEigen {
        eigenvalues,
        eigenvectors,
        sweeps,
    })
}

/// Flip `v` so that its largest-magnitude component (lowest index among
/// near-ties) is positive.
pub fn fix_sign(v: &mut [f64]) {
    let max = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if max == 0.0 {
        return;
    }
    let lead = v
        .iter()
        .position(|x| x.abs() >= max - SIGN_TIE_TOLERANCE)
        .unwrap_or(0);
    if v[lead] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Lower-triangular Cholesky factor `L` with `L Lᵀ = a`.
///
/// The matrix must be symmetric with all eigenvalues above `min_eigenvalue`;
/// the eigenvalue check runs first so the failure reports the actual
/// smallest eigenvalue rather than a pivot.
pub fn cholesky(a: &DMatrix<f64>, min_eigenvalue: f64) -> Result<DMatrix<f64>> {
    let eig = evd_symmetric(a)?;
    let smallest = eig.eigenvalues.last().copied().unwrap_or(0.0);
    if smallest.is_nan() || smallest <= min_eigenvalue {
        return Err(Error::NotPositiveDefinite {
            min_eigenvalue: smallest,
        });
    }
    let n = a.nrows();
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d <= 0.0 {
            return Err(Error::NotPositiveDefinite {
                min_eigenvalue: smallest,
            });
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok(l)
}

/// Singular values, largest first.
pub fn singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = a.clone().singular_values().iter().copied().collect();
    s.sort_by(|x, y| y.partial_cmp(x).unwrap_or(std::cmp::Ordering::Equal));
    s
}

/// Number of singular values above `rel_tol * largest`.
pub fn numerical_rank(a: &DMatrix<f64>, rel_tol: f64) -> usize {
    let s = singular_values(a);
    let Some(&largest) = s.first() else { return 0 };
    if largest == 0.0 {
        return 0;
    }
    s.iter().filter(|&&x| x > rel_tol * largest).count()
}
