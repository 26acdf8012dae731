use super::Matrix;
use crate::scalar::Scalar;

/// Eigendecomposition `a = vectors · diag(values) · vectorsᵗ` of a symmetric
/// matrix, eigenvalues nonincreasing, eigenvectors in the columns.
#[derive(Clone, Debug)]
pub struct SymEigen<T> {
    pub values: Vec<T>,
    pub vectors: Matrix<T>,
}

/// Cyclic Jacobi eigenvalue iteration. Only the upper triangle of `a` is
/// read after symmetrization `(a + aᵗ)/2`.
pub fn sym_eigen<T: Scalar>(a: &Matrix<T>) -> SymEigen<T> {
    let n = a.dim();
    let half = T::lit(0.5);
    let mut m = Matrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = half * (a[(i, j)] + a[(j, i)]);
        }
    }
    let mut v = Matrix::identity(n);
    let scale = m.frobenius();
    if scale > T::zero() {
        let tiny = T::epsilon() * T::lit(1e-3) * scale;
        for _sweep in 0..100 {
            let mut rotated = false;
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = m[(p, q)];
                    // relative test keeps small eigenvalues accurate to working precision
                    let rel = T::epsilon() * (m[(p, p)] * m[(q, q)]).abs().sqrt();
                    if apq.abs() <= rel || apq.abs() <= tiny * T::epsilon() {
                        m[(p, q)] = T::zero();
                        m[(q, p)] = T::zero();
                        continue;
                    }
                    rotated = true;
                    let app = m[(p, p)];
                    let aqq = m[(q, q)];
                    let theta = (aqq - app) / (T::lit(2.0) * apq);
                    let t = if theta == T::zero() {
                        T::one()
                    } else {
                        theta.signum() / (theta.abs() + (T::one() + theta * theta).sqrt())
                    };
                    let c = (T::one() + t * t).sqrt().recip();
                    let s = t * c;
                    for k in 0..n {
                        let mkp = m[(k, p)];
                        let mkq = m[(k, q)];
                        m[(k, p)] = c * mkp - s * mkq;
                        m[(k, q)] = s * mkp + c * mkq;
                    }
                    for k in 0..n {
                        let mpk = m[(p, k)];
                        let mqk = m[(q, k)];
                        m[(p, k)] = c * mpk - s * mqk;
                        m[(q, k)] = s * mpk + c * mqk;
                    }
                    m[(p, q)] = T::zero();
                    m[(q, p)] = T::zero();
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = c * vkp - s * vkq;
                        v[(k, q)] = s * vkp + c * vkq;
                    }
                }
            }
            if !rotated {
                break;
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].partial_cmp(&m[(i, i)]).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let mut vectors = Matrix::zeros(n);
    for (new, &old) in order.iter().enumerate() {
        for k in 0..n {
            vectors[(k, new)] = v[(k, old)];
        }
    }
    SymEigen { values, vectors }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two() {
        let a = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let e = sym_eigen(&a);
        assert!((e.values[0] - 3.0f64).abs() < 1e-14);
        assert!((e.values[1] - 1.0).abs() < 1e-14);
        let recon = e.vectors.matmul(&Matrix::diag(&e.values)).matmul(&e.vectors.transpose());
        assert!(recon.sub(&a).max_abs() < 1e-14);
    }

    #[test]
    fn zero_matrix() {
        let e = sym_eigen(&Matrix::<f64>::zeros(3));
        assert_eq!(e.values, vec![0.0; 3]);
    }
}
