//! Small dense linear algebra over [`Scalar`]: square matrices, the group
//! elements of `GL_d`, positive-diagonal QR, one-sided Jacobi SVD, symmetric
//! eigendecomposition, exterior powers, and the actions on projective space
//! and on the full flag variety.

mod compound;
mod eigen;
mod qr;
mod space;
mod svd;

use std::ops::{Index, IndexMut, Mul};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub use compound::{compound, k_subsets};
pub use eigen::{sym_eigen, SymEigen};
pub use qr::{qr_positive, QrFactors};
pub use space::{flag_act, flag_dist, proj_act, proj_dist, Flag, ProjPoint};
pub use svd::{svd, SvdFactors, MAX_SWEEPS};

/// Square `dim × dim` matrix stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    dim: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(dim: usize) -> Self {
        Matrix { dim, data: vec![T::zero(); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn diag(values: &[T]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn from_row_major(dim: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimMismatch { expected: dim * dim, got: data.len() });
        }
        Ok(Matrix { dim, data })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for r in rows {
            if r.len() != dim {
                return Err(Error::DimMismatch { expected: dim, got: r.len() });
            }
            data.extend_from_slice(r);
        }
        Ok(Matrix { dim, data })
    }

    /// Builds a matrix from its columns.
    pub fn from_cols(cols: &[Vec<T>]) -> Result<Self> {
        let dim = cols.len();
        let mut m = Self::zeros(dim);
        for (j, c) in cols.iter().enumerate() {
            if c.len() != dim {
                return Err(Error::DimMismatch { expected: dim, got: c.len() });
            }
            for i in 0..dim {
                m[(i, j)] = c[i];
            }
        }
        Ok(m)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn rows(&self) -> Vec<Vec<T>> {
        self.data.chunks(self.dim).map(|r| r.to_vec()).collect()
    }

    pub fn col(&self, j: usize) -> Vec<T> {
        (0..self.dim).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        let n = self.dim;
        let mut t = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim, "matmul dimension mismatch");
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * rhs.data[k * n + j];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.dim, v.len(), "mul_vec dimension mismatch");
        self.data
            .chunks(self.dim)
            .map(|row| row.iter().zip(v).map(|(&a, &b)| a * b).sum())
            .collect()
    }

    pub fn scale(&self, s: T) -> Self {
        Matrix { dim: self.dim, data: self.data.iter().map(|&x| x * s).collect() }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim);
        Matrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a - b).collect(),
        }
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim);
        Matrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a + b).collect(),
        }
    }

    pub fn frobenius(&self) -> T {
        self.data.iter().map(|&x| x * x).sum::<T>().sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Largest singular value.
    pub fn op_norm(&self) -> T {
        if self.dim == 0 {
            return T::zero();
        }
        if self.dim == 2 {
            return op_norm_2x2(self);
        }
        // Gram matrix route: accurate for the top singular value
        let gram = self.transpose().matmul(self);
        let eig = sym_eigen(&gram);
        eig.values[0].max(T::zero()).sqrt()
    }

    /// Determinant by LU with partial pivoting.
    pub fn det(&self) -> T {
        let n = self.dim;
        let mut a = self.data.clone();
        let mut det = T::one();
        for k in 0..n {
            let mut p = k;
            let mut best = a[k * n + k].abs();
            for i in (k + 1)..n {
                let v = a[i * n + k].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == T::zero() {
                return T::zero();
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                det = -det;
            }
            let piv = a[k * n + k];
            det *= piv;
            for i in (k + 1)..n {
                let f = a[i * n + k] / piv;
                if f != T::zero() {
                    for j in k..n {
                        let v = a[k * n + j];
                        a[i * n + j] -= f * v;
                    }
                }
            }
        }
        det
    }

    pub fn cast<U: Scalar>(&self) -> Matrix<U> {
        Matrix {
            dim: self.dim,
            data: self.data.iter().map(|x| U::from_f64(x.to_f64().unwrap()).unwrap()).collect(),
        }
    }
}

fn op_norm_2x2<T: Scalar>(m: &Matrix<T>) -> T {
    let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    // s1 = (sqrt((a+d)^2 + (c-b)^2) + sqrt((a-d)^2 + (b+c)^2)) / 2
    let p = (a + d).hypot(c - b);
    let q = (a - d).hypot(b + c);
    (p + q) / T::lit(2.0)
}

/// Serialized as a list of rows.
impl<T: Scalar + serde::Serialize> serde::Serialize for Matrix<T> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.rows().serialize(s)
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.dim + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.dim + j]
    }
}

impl<T: Scalar> Mul for &Matrix<T> {
    type Output = Matrix<T>;
    fn mul(self, rhs: &Matrix<T>) -> Matrix<T> {
        self.matmul(rhs)
    }
}

/// Invertible matrix: an element of `GL_d`.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupElement<T>(Matrix<T>);

impl<T: Scalar> GroupElement<T> {
    /// Validates finiteness and `|det| > 1e-12 · ‖g‖_op^d` (scaled per scalar type).
    pub fn new(m: Matrix<T>) -> Result<Self> {
        if m.dim() == 0 {
            return Err(Error::Validation("empty matrix".into()));
        }
        if !m.is_finite() {
            return Err(Error::Validation("non-finite entry".into()));
        }
        let op = m.op_norm();
        let det = m.det().abs();
        let threshold = T::singular_tol() * op.powi(m.dim() as i32);
        if !(det > threshold) {
            return Err(Error::SingularInput {
                pivot: det.to_f64().unwrap_or(0.0),
                threshold: threshold.to_f64().unwrap_or(0.0),
            });
        }
        Ok(GroupElement(m))
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    pub fn identity(dim: usize) -> Self {
        GroupElement(Matrix::identity(dim))
    }

    /// Rotation by `theta` in the `(0, 1)` coordinate plane.
    pub fn rotation(dim: usize, theta: T) -> Self {
        let mut m = Matrix::identity(dim);
        let (s, c) = theta.sin_cos();
        m[(0, 0)] = c;
        m[(0, 1)] = -s;
        m[(1, 0)] = s;
        m[(1, 1)] = c;
        GroupElement(m)
    }

    /// Wraps a product of group elements; skips the determinant check.
    pub(crate) fn from_product(m: Matrix<T>) -> Self {
        GroupElement(m)
    }

    #[inline]
    pub fn matrix(&self) -> &Matrix<T> {
        &self.0
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn compose(&self, rhs: &Self) -> Self {
        GroupElement(self.0.matmul(&rhs.0))
    }

    /// Sign of the determinant, `+1` or `-1`.
    pub fn det_sign(&self) -> i8 {
        if self.0.det() < T::zero() {
            -1
        } else {
            1
        }
    }

    pub fn transpose(&self) -> Self {
        GroupElement(self.0.transpose())
    }

    pub fn into_matrix(self) -> Matrix<T> {
        self.0
    }
}

/// Product of many group elements kept as `exp(log_scale) · mat` with
/// `‖mat‖_op = 1`, so long walks do not overflow.
#[derive(Clone, Debug, PartialEq)]
pub struct ScaledProduct<T> {
    pub mat: Matrix<T>,
    pub log_scale: T,
}

impl<T: Scalar> ScaledProduct<T> {
    pub fn identity(dim: usize) -> Self {
        ScaledProduct { mat: Matrix::identity(dim), log_scale: T::zero() }
    }

    pub fn from_element(g: &GroupElement<T>) -> Self {
        let mut p = ScaledProduct { mat: g.matrix().clone(), log_scale: T::zero() };
        p.renormalize();
        p
    }

    /// `self ← g · self`.
    pub fn left_mul(&mut self, g: &GroupElement<T>) {
        self.mat = g.matrix().matmul(&self.mat);
        self.renormalize();
    }

    /// `self ← self · g`.
    pub fn right_mul(&mut self, g: &GroupElement<T>) {
        self.mat = self.mat.matmul(g.matrix());
        self.renormalize();
    }

    fn renormalize(&mut self) {
        let s = self.mat.op_norm();
        if s > T::zero() && s.is_finite() {
            self.mat = self.mat.scale(s.recip());
            self.log_scale += s.ln();
        }
    }

    /// The represented matrix; overflows for long products.
    pub fn to_matrix(&self) -> Matrix<T> {
        self.mat.scale(self.log_scale.exp())
    }

    pub fn as_element(&self) -> GroupElement<T> {
        GroupElement::from_product(self.mat.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn det_and_inverse_checks() {
        let g = Matrix::from_rows(&[vec![2.0, 1.0], vec![0.0, 3.0]]).unwrap();
        assert!((g.det() - 6.0f64).abs() < 1e-15);
        assert!(GroupElement::new(g).is_ok());
        let s = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap();
        assert!(matches!(GroupElement::new(s), Err(Error::SingularInput { .. })));
        let nan = Matrix::from_rows(&[vec![f64::NAN, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!(GroupElement::new(nan).is_err());
    }

    #[test]
    fn op_norm_2x2_closed_form() {
        let m = Matrix::from_rows(&[vec![0.0, 2.0], vec![1.0, 0.0]]).unwrap();
        assert!((m.op_norm() - 2.0f64).abs() < 1e-15);
        let m3 = Matrix::diag(&[1.0, 5.0, 2.0f64]);
        assert!((m3.op_norm() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn scaled_product_tracks_scale() {
        let g = GroupElement::new(Matrix::diag(&[2.0f64, 0.5])).unwrap();
        let mut p = ScaledProduct::identity(2);
        for _ in 0..2000 {
            p.left_mul(&g);
        }
        assert!((p.log_scale - 2000.0 * 2f64.ln()).abs() < 1e-9);
        assert!((p.mat[(0, 0)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn works_in_f32() {
        let g = GroupElement::<f32>::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(g.det_sign(), -1);
    }
}
