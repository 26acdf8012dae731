use super::{GroupElement, Matrix};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// `g = k · r` with `k` orthogonal and `r` upper triangular, `diag(r) > 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct QrFactors<T> {
    pub k: Matrix<T>,
    pub r: Matrix<T>,
}

/// Householder QR followed by a sign fix that makes the diagonal of `r`
/// positive. This is the Iwasawa decomposition `G = K·A·U` of `GL_d`.
///
/// Fails with [`Error::SingularInput`] when a pivot falls below
/// `singular_tol · ‖g‖_F`.
pub fn qr_positive<T: Scalar>(g: &GroupElement<T>) -> Result<QrFactors<T>> {
    qr_positive_matrix(g.matrix())
}

pub(crate) fn qr_positive_matrix<T: Scalar>(g: &Matrix<T>) -> Result<QrFactors<T>> {
    let n = g.dim();
    let norm = g.frobenius();
    let mut r = g.clone();
    let mut q = Matrix::<T>::identity(n);
    let mut v = vec![T::zero(); n];

    for k in 0..n.saturating_sub(1) {
        let col_norm = (k..n).map(|i| r[(i, k)] * r[(i, k)]).sum::<T>().sqrt();
        if col_norm == T::zero() {
            continue;
        }
        let x0 = r[(k, k)];
        let alpha = if x0 >= T::zero() { -col_norm } else { col_norm };
        for i in 0..n {
            v[i] = if i < k { T::zero() } else { r[(i, k)] };
        }
        v[k] -= alpha;
        let vnorm2: T = (k..n).map(|i| v[i] * v[i]).sum();
        if vnorm2 == T::zero() {
            continue;
        }
        let two = T::lit(2.0);
        // r <- H r on rows k.., columns k..
        for j in k..n {
            let dot: T = (k..n).map(|i| v[i] * r[(i, j)]).sum();
            let f = two * dot / vnorm2;
            for i in k..n {
                r[(i, j)] -= f * v[i];
            }
        }
        // q <- q H
        for i in 0..n {
            let dot: T = (k..n).map(|j| q[(i, j)] * v[j]).sum();
            let f = two * dot / vnorm2;
            for j in k..n {
                q[(i, j)] -= f * v[j];
            }
        }
        for i in (k + 1)..n {
            r[(i, k)] = T::zero();
        }
    }

    let threshold = T::singular_tol() * norm;
    for k in 0..n {
        let d = r[(k, k)];
        if !(d.abs() > threshold) {
            return Err(Error::SingularInput {
                pivot: d.abs().to_f64().unwrap_or(0.0),
                threshold: threshold.to_f64().unwrap_or(0.0),
            });
        }
        if d < T::zero() {
            for j in k..n {
                r[(k, j)] = -r[(k, j)];
            }
            for i in 0..n {
                q[(i, k)] = -q[(i, k)];
            }
        }
    }
    Ok(QrFactors { k: q, r })
}
