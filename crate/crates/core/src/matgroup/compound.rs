use super::Matrix;
use crate::scalar::Scalar;

/// All `k`-element subsets of `0..n` in lexicographic order.
pub fn k_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k <= n {
        rec(0, n, k, &mut Vec::with_capacity(k), &mut out);
    }
    out
}

/// `k`-th compound matrix: the action of `m` on `Λᵏ ℝᵈ` in the basis of
/// wedge products `e_I`, `I` in lexicographic order. Its operator norm is
/// the product of the `k` largest singular values of `m`.
pub fn compound<T: Scalar>(m: &Matrix<T>, k: usize) -> Matrix<T> {
    let subsets = k_subsets(m.dim(), k);
    let size = subsets.len();
    let mut out = Matrix::zeros(size);
    let mut sub = Matrix::zeros(k);
    for (a, rows) in subsets.iter().enumerate() {
        for (b, cols) in subsets.iter().enumerate() {
            for (i, &r) in rows.iter().enumerate() {
                for (j, &c) in cols.iter().enumerate() {
                    sub[(i, j)] = m[(r, c)];
                }
            }
            out[(a, b)] = sub.det();
        }
    }
    out
}
