use super::{GroupElement, Matrix};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Sweep cap for the one-sided Jacobi iteration.
pub const MAX_SWEEPS: usize = 50;

/// `g = u · diag(s) · vᵗ`, `s` nonincreasing.
#[derive(Clone, Debug, PartialEq)]
pub struct SvdFactors<T> {
    pub u: Matrix<T>,
    pub s: Vec<T>,
    pub v: Matrix<T>,
}

/// One-sided (Hestenes) Jacobi SVD.
///
/// Columns of a working copy are rotated pairwise until all are mutually
/// orthogonal to working precision; the column norms are then the singular
/// values. Returns [`Error::NoConvergence`] after [`MAX_SWEEPS`] sweeps.
pub fn svd<T: Scalar>(g: &GroupElement<T>) -> Result<SvdFactors<T>> {
    svd_matrix(g.matrix())
}

pub(crate) fn svd_matrix<T: Scalar>(g: &Matrix<T>) -> Result<SvdFactors<T>> {
    let n = g.dim();
    // column-major working copy for cache-friendly column rotations
    let mut cols: Vec<Vec<T>> = (0..n).map(|j| g.col(j)).collect();
    let mut vcols: Vec<Vec<T>> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { T::one() } else { T::zero() }).collect())
        .collect();
    let tol = T::jacobi_tol() * T::from_usize_lossy(n.max(1));

    let mut converged = n <= 1;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let (alpha, beta, gamma) = {
                    let (cp, cq) = (&cols[p], &cols[q]);
                    let mut a = T::zero();
                    let mut b = T::zero();
                    let mut c = T::zero();
                    for i in 0..n {
                        a += cp[i] * cp[i];
                        b += cq[i] * cq[i];
                        c += cp[i] * cq[i];
                    }
                    (a, b, c)
                };
                if gamma == T::zero() || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::lit(2.0) * gamma);
                let t = if zeta == T::zero() {
                    T::one()
                } else {
                    zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt())
                };
                let c = (T::one() + t * t).sqrt().recip();
                let s = c * t;
                rotate(&mut cols, p, q, c, s);
                rotate(&mut vcols, p, q, c, s);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence { sweeps: MAX_SWEEPS });
    }

    let norms: Vec<T> = cols.iter().map(|c| c.iter().map(|&x| x * x).sum::<T>().sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap_or(std::cmp::Ordering::Equal));

    let s: Vec<T> = order.iter().map(|&i| norms[i]).collect();
    let mut ucols: Vec<Vec<T>> = Vec::with_capacity(n);
    let mut vsorted: Vec<Vec<T>> = Vec::with_capacity(n);
    for &i in &order {
        let nrm = norms[i];
        if nrm > T::zero() {
            ucols.push(cols[i].iter().map(|&x| x / nrm).collect());
        } else {
            ucols.push(vec![T::zero(); n]);
        }
        vsorted.push(vcols[i].clone());
    }
    complete_basis(&mut ucols, &s);
    Ok(SvdFactors { u: Matrix::from_cols(&ucols)?, s, v: Matrix::from_cols(&vsorted)? })
}

fn rotate<T: Scalar>(cols: &mut [Vec<T>], p: usize, q: usize, c: T, s: T) {
    let n = cols[p].len();
    for i in 0..n {
        let xp = cols[p][i];
        let xq = cols[q][i];
        cols[p][i] = c * xp - s * xq;
        cols[q][i] = s * xp + c * xq;
    }
}

/// Replaces the columns belonging to zero singular values by an orthonormal
/// completion (Gram-Schmidt against the canonical basis).
fn complete_basis<T: Scalar>(ucols: &mut [Vec<T>], s: &[T]) {
    let n = ucols.len();
    for j in 0..n {
        if s[j] > T::zero() {
            continue;
        }
        for e in 0..n {
            let mut cand: Vec<T> = (0..n).map(|i| if i == e { T::one() } else { T::zero() }).collect();
            for k in 0..n {
                if k == j || (k > j && s[k] == T::zero()) {
                    continue;
                }
                let dot: T = cand.iter().zip(&ucols[k]).map(|(&a, &b)| a * b).sum();
                for i in 0..n {
                    cand[i] -= dot * ucols[k][i];
                }
            }
            let nrm = cand.iter().map(|&x| x * x).sum::<T>().sqrt();
            if nrm > T::lit(0.5) {
                ucols[j] = cand.into_iter().map(|x| x / nrm).collect();
                break;
            }
        }
    }
}
