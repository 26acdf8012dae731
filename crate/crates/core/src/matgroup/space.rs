use super::qr::qr_positive_matrix;
use super::{sym_eigen, GroupElement, Matrix};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Point of the projective space `P(ℝᵈ)`: a unit vector whose first
/// non-negligible coordinate is positive.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjPoint<T> {
    vec: Vec<T>,
}

impl<T: Scalar> ProjPoint<T> {
    /// Normalizes and canonicalizes the sign; rejects zero or non-finite input.
    pub fn new(v: Vec<T>) -> Result<Self> {
        let norm = v.iter().map(|&x| x * x).sum::<T>().sqrt();
        if v.is_empty() || !norm.is_finite() || norm == T::zero() {
            return Err(Error::Validation("projective point needs a finite nonzero vector".into()));
        }
        Ok(Self::from_unnormalized(v, norm))
    }

    fn from_unnormalized(mut v: Vec<T>, norm: T) -> Self {
        for x in v.iter_mut() {
            *x /= norm;
        }
        let tiny = T::singular_tol();
        let lead = v.iter().copied().find(|x| x.abs() > tiny).unwrap_or(T::one());
        if lead < T::zero() {
            for x in v.iter_mut() {
                *x = -*x;
            }
        }
        ProjPoint { vec: v }
    }

    /// The line spanned by the `i`-th basis vector.
    pub fn basis(dim: usize, i: usize) -> Self {
        let mut v = vec![T::zero(); dim];
        v[i] = T::one();
        ProjPoint { vec: v }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.vec.len()
    }

    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.vec
    }
}

/// Point of the full flag variety `G/P_c`, represented by an orthogonal
/// matrix `k` (the coset `k·P_c`). The nested subspaces are spanned by the
/// leading columns of `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct Flag<T> {
    k: Matrix<T>,
}

impl<T: Scalar> Flag<T> {
    /// Validates `kᵗk = I` to `1e-10` entrywise (for `f64`).
    pub fn new(k: Matrix<T>) -> Result<Self> {
        let err = k.transpose().matmul(&k).sub(&Matrix::identity(k.dim())).max_abs();
        let tol = T::singular_tol() * T::lit(100.0);
        if !(err <= tol) {
            return Err(Error::Validation(format!(
                "flag representative not orthogonal (max |kᵗk - I| = {err})"
            )));
        }
        Ok(Flag { k })
    }

    /// The standard flag `e₁ ⊂ span(e₁, e₂) ⊂ …`.
    pub fn standard(dim: usize) -> Self {
        Flag { k: Matrix::identity(dim) }
    }

    /// Flag spanned by the columns of an invertible matrix (Gram-Schmidt).
    pub fn from_basis(m: &Matrix<T>) -> Result<Self> {
        Ok(Flag { k: qr_positive_matrix(m)?.k })
    }

    pub(crate) fn from_orthogonal_unchecked(k: Matrix<T>) -> Self {
        Flag { k }
    }

    #[inline]
    pub fn k(&self) -> &Matrix<T> {
        &self.k
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.k.dim()
    }

    /// Multiplies column `j` by `-1`: same subspaces, opposite fiber.
    pub fn flip_column(&self, j: usize) -> Self {
        let mut k = self.k.clone();
        for i in 0..k.dim() {
            k[(i, j)] = -k[(i, j)];
        }
        Flag { k }
    }
}

/// `g·x`, renormalized and sign-canonicalized.
pub fn proj_act<T: Scalar>(g: &GroupElement<T>, x: &ProjPoint<T>) -> ProjPoint<T> {
    let y = g.matrix().mul_vec(&x.vec);
    let norm = y.iter().map(|&t| t * t).sum::<T>().sqrt();
    ProjPoint::from_unnormalized(y, norm)
}

/// Sine of the angle between two lines, computed from the wedge norm
/// `|x ∧ y|` so that it stays accurate for nearby points.
pub fn proj_dist<T: Scalar>(x: &ProjPoint<T>, y: &ProjPoint<T>) -> Result<T> {
    if x.dim() != y.dim() {
        return Err(Error::DimMismatch { expected: x.dim(), got: y.dim() });
    }
    Ok(sine_between(&x.vec, &y.vec))
}

pub(crate) fn sine_between<T: Scalar>(x: &[T], y: &[T]) -> T {
    let n = x.len();
    let mut wedge = T::zero();
    for i in 0..n {
        for j in (i + 1)..n {
            let w = x[i] * y[j] - x[j] * y[i];
            wedge += w * w;
        }
    }
    let nx: T = x.iter().map(|&a| a * a).sum();
    let ny: T = y.iter().map(|&a| a * a).sum();
    (wedge / (nx * ny)).sqrt().min(T::one())
}

/// `g·η`: the orthogonal factor of `qr_positive(g·k)`.
pub fn flag_act<T: Scalar>(g: &GroupElement<T>, eta: &Flag<T>) -> Result<Flag<T>> {
    let gk = g.matrix().matmul(&eta.k);
    Ok(Flag { k: qr_positive_matrix(&gk)?.k })
}

/// Largest principal-angle sine between the nested spans, maximized over
/// the levels `1..d`: `max_i ‖P_{U_i} − P_{V_i}‖_op`, where `U_i`, `V_i` are
/// the spans of the first `i` columns.
pub fn flag_dist<T: Scalar>(a: &Flag<T>, b: &Flag<T>) -> Result<T> {
    let n = a.dim();
    if n != b.dim() {
        return Err(Error::DimMismatch { expected: n, got: b.dim() });
    }
    if n == 2 {
        // a single level: the projective sine metric on the first columns
        return Ok(sine_between(&a.k.col(0), &b.k.col(0)));
    }
    let mut pa = Matrix::<T>::zeros(n);
    let mut pb = Matrix::<T>::zeros(n);
    let mut best = T::zero();
    for level in 0..n.saturating_sub(1) {
        for r in 0..n {
            for c in 0..n {
                pa[(r, c)] += a.k[(r, level)] * a.k[(c, level)];
                pb[(r, c)] += b.k[(r, level)] * b.k[(c, level)];
            }
        }
        let diff = pa.sub(&pb);
        let eig = sym_eigen(&diff);
        let top = eig.values.iter().fold(T::zero(), |m, &v| m.max(v.abs()));
        best = best.max(top);
    }
    Ok(best.min(T::one()))
}
