//! The norm cocycle on projective space, the Iwasawa cocycle on the flag
//! variety, the Cartan projection, and their regularity diagnostics.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matgroup::{
    compound, flag_act, flag_dist, proj_act, proj_dist, qr_positive, svd, Flag, GroupElement,
    Matrix, ProjPoint, ScaledProduct,
};
use crate::measures::AtomicMeasure;
use crate::rng::RngStream;
use crate::scalar::Scalar;

/// Which cocycle (or path functional) an experiment evaluates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CocycleKind {
    /// `log |g x|` on projective space.
    Norm,
    /// Log-diagonal of the Iwasawa decomposition on the flag variety.
    Iwasawa,
    /// Increments `κ(A_n) − κ(A_{n−1})` of the Cartan projection. Not a cocycle.
    Cartan,
}

impl CocycleKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CocycleKind::Norm => "norm",
            CocycleKind::Iwasawa => "iwasawa",
            CocycleKind::Cartan => "cartan",
        }
    }

    /// Dimension of the values for matrices of size `d`.
    pub fn value_dim(self, d: usize) -> usize {
        match self {
            CocycleKind::Norm => 1,
            _ => d,
        }
    }
}

impl fmt::Display for CocycleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CocycleKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "norm" => Ok(CocycleKind::Norm),
            "iwasawa" => Ok(CocycleKind::Iwasawa),
            "cartan" => Ok(CocycleKind::Cartan),
            other => Err(Error::Parse(format!("unknown cocycle '{other}' (norm|iwasawa|cartan)"))),
        }
    }
}

/// Finite vector in `ℝ^d`; for the norm cocycle `d = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct CocycleValue<T> {
    vec: Vec<T>,
}

impl<T: Scalar> CocycleValue<T> {
    pub fn new(vec: Vec<T>) -> Result<Self> {
        if vec.iter().any(|x| !x.is_finite()) {
            return Err(Error::Validation("cocycle value has non-finite entries".into()));
        }
        Ok(CocycleValue { vec })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.vec.len()
    }

    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.vec
    }

    pub fn into_vec(self) -> Vec<T> {
        self.vec
    }

    pub fn sum(&self) -> T {
        self.vec.iter().copied().sum()
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.vec
            .iter()
            .zip(&other.vec)
            .map(|(a, b)| (*a - *b).abs())
            .fold(T::zero(), T::max)
    }
}

/// `log |g x|` for a unit representative `x`.
pub fn norm_cocycle<T: Scalar>(g: &GroupElement<T>, x: &ProjPoint<T>) -> T {
    let y = g.matrix().mul_vec(x.as_slice());
    y.iter().map(|&t| t * t).sum::<T>().sqrt().ln()
}

/// Norm cocycle of a renormalized product.
pub fn norm_cocycle_product<T: Scalar>(p: &ScaledProduct<T>, x: &ProjPoint<T>) -> T {
    let y = p.mat.mul_vec(x.as_slice());
    p.log_scale + y.iter().map(|&t| t * t).sum::<T>().sqrt().ln()
}

/// `(log r₁₁, …, log r_dd)` where `g·k = k'·r` is the positive-diagonal QR.
pub fn iwasawa_cocycle<T: Scalar>(g: &GroupElement<T>, eta: &Flag<T>) -> Result<CocycleValue<T>> {
    let gk = GroupElement::from_product(g.matrix().matmul(eta.k()));
    let r = qr_positive(&gk)?.r;
    CocycleValue::new((0..r.dim()).map(|i| r[(i, i)].ln()).collect())
}

/// Iwasawa cocycle of a renormalized product. Long products may become
/// numerically singular; use [`CocycleWalker`] along paths instead.
pub fn iwasawa_cocycle_product<T: Scalar>(p: &ScaledProduct<T>, eta: &Flag<T>) -> Result<CocycleValue<T>> {
    let mut v = iwasawa_cocycle(&p.as_element(), eta)?.into_vec();
    for x in v.iter_mut() {
        *x += p.log_scale;
    }
    CocycleValue::new(v)
}

/// Log singular values sorted nonincreasing.
pub fn cartan_projection<T: Scalar>(g: &GroupElement<T>) -> Result<CocycleValue<T>> {
    let s = svd(g)?.s;
    CocycleValue::new(s.iter().map(|x| x.ln()).collect())
}

/// `sgn det(k)` of a flag representative.
pub fn fiber<T: Scalar>(eta: &Flag<T>) -> i8 {
    if eta.k().det() < T::zero() {
        -1
    } else {
        1
    }
}

/// A point of either homogeneous space.
#[derive(Clone, Debug, PartialEq)]
pub enum SpacePoint<T> {
    Proj(ProjPoint<T>),
    Flag(Flag<T>),
}

/// `|σ(gh, x) − σ(g, h·x) − σ(h, x)|` in the max norm.
pub fn cocycle_identity_residual<T: Scalar>(
    kind: CocycleKind,
    g: &GroupElement<T>,
    h: &GroupElement<T>,
    x: &SpacePoint<T>,
) -> Result<T> {
    let gh = g.compose(h);
    match (kind, x) {
        (CocycleKind::Cartan, _) => Err(Error::InvalidKind("the Cartan projection is not a cocycle")),
        (CocycleKind::Norm, SpacePoint::Proj(x)) => {
            let lhs = norm_cocycle(&gh, x);
            let rhs = norm_cocycle(g, &proj_act(h, x)) + norm_cocycle(h, x);
            Ok((lhs - rhs).abs())
        }
        (CocycleKind::Iwasawa, SpacePoint::Flag(eta)) => {
            let lhs = iwasawa_cocycle(&gh, eta)?;
            let a = iwasawa_cocycle(g, &flag_act(h, eta)?)?;
            let b = iwasawa_cocycle(h, eta)?;
            let rhs = CocycleValue {
                vec: a.vec.iter().zip(&b.vec).map(|(x, y)| *x + *y).collect(),
            };
            Ok(lhs.max_abs_diff(&rhs))
        }
        (CocycleKind::Norm, _) => Err(Error::Validation("norm cocycle needs a projective point".into())),
        (CocycleKind::Iwasawa, _) => Err(Error::Validation("Iwasawa cocycle needs a flag".into())),
    }
}

/// Exterior powers `∧^i g` for `i = 1..d−1` and `log|det g|`, precomputed
/// once per atom.
#[derive(Clone, Debug)]
pub struct Exterior<T> {
    powers: Vec<GroupElement<T>>,
    log_abs_det: T,
}

impl<T: Scalar> Exterior<T> {
    pub fn of(g: &GroupElement<T>) -> Self {
        let d = g.dim();
        let powers = (1..d).map(|i| GroupElement::from_product(compound(g.matrix(), i))).collect();
        Exterior { powers, log_abs_det: g.matrix().det().abs().ln() }
    }
}

/// Tracks `κ(A_n)` along a left walk through `log‖∧^i A_n‖`, which stays
/// accurate when the small singular values of `A_n` underflow.
#[derive(Clone, Debug)]
pub struct CartanTracker<T> {
    dim: usize,
    wedges: Vec<ScaledProduct<T>>,
    log_abs_det: T,
}

impl<T: Scalar> CartanTracker<T> {
    pub fn new(dim: usize) -> Self {
        let wedges = (1..dim)
            .map(|i| ScaledProduct::identity(binomial(dim, i)))
            .collect();
        CartanTracker { dim, wedges, log_abs_det: T::zero() }
    }

    /// `A ← g·A`.
    pub fn push(&mut self, g: &GroupElement<T>) {
        self.push_exterior(&Exterior::of(g));
    }

    pub fn push_exterior(&mut self, e: &Exterior<T>) {
        for (w, p) in self.wedges.iter_mut().zip(&e.powers) {
            w.left_mul(p);
        }
        self.log_abs_det += e.log_abs_det;
    }

    /// `κ(A) = (log s₁, …, log s_d)`.
    pub fn kappa(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.dim);
        let mut prev = T::zero();
        for w in &self.wedges {
            out.push(w.log_scale - prev);
            prev = w.log_scale;
        }
        out.push(self.log_abs_det - prev);
        out
    }

    /// `κ(g·A)` without updating the tracker.
    pub fn kappa_after(&self, e: &Exterior<T>) -> Vec<T> {
        let mut t = self.clone();
        t.push_exterior(e);
        t.kappa()
    }
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// Running value of a cocycle (or of `κ`) along a left walk started at a
/// point: after steps `Y_1..Y_n` it holds `σ(A_n, x)` and `A_n·x`.
#[derive(Clone, Debug)]
pub enum CocycleWalker<T> {
    Norm { x: ProjPoint<T>, total: T },
    Iwasawa { eta: Flag<T>, total: Vec<T> },
    Cartan(CartanTracker<T>),
}

impl<T: Scalar> CocycleWalker<T> {
    pub fn norm(x: ProjPoint<T>) -> Self {
        CocycleWalker::Norm { x, total: T::zero() }
    }

    pub fn iwasawa(eta: Flag<T>) -> Self {
        let d = eta.dim();
        CocycleWalker::Iwasawa { eta, total: vec![T::zero(); d] }
    }

    pub fn cartan(dim: usize) -> Self {
        CocycleWalker::Cartan(CartanTracker::new(dim))
    }

    /// Applies one step and returns its increment.
    pub fn step(&mut self, g: &GroupElement<T>) -> Result<Vec<T>> {
        match self {
            CocycleWalker::Norm { x, total } => {
                let inc = norm_cocycle(g, x);
                *x = proj_act(g, x);
                *total += inc;
                Ok(vec![inc])
            }
            CocycleWalker::Iwasawa { eta, total } => {
                let gk = GroupElement::from_product(g.matrix().matmul(eta.k()));
                let f = qr_positive(&gk)?;
                let inc: Vec<T> = (0..f.r.dim()).map(|i| f.r[(i, i)].ln()).collect();
                *eta = Flag::from_orthogonal_unchecked(f.k);
                for (t, v) in total.iter_mut().zip(&inc) {
                    *t += *v;
                }
                Ok(inc)
            }
            CocycleWalker::Cartan(tr) => {
                let before = tr.kappa();
                tr.push(g);
                Ok(tr.kappa().iter().zip(&before).map(|(a, b)| *a - *b).collect())
            }
        }
    }

    /// Accumulated value `σ(A_n, x)` or `κ(A_n)`.
    pub fn value(&self) -> Vec<T> {
        match self {
            CocycleWalker::Norm { total, .. } => vec![*total],
            CocycleWalker::Iwasawa { total, .. } => total.clone(),
            CocycleWalker::Cartan(tr) => tr.kappa(),
        }
    }
}

/// A compact homogeneous space carrying a cocycle: projective space with the
/// norm cocycle, or the flag variety with the Iwasawa cocycle.
pub trait CocycleSpace: Clone + Send + Sync {
    const KIND: CocycleKind;
    fn act(&self, g: &GroupElement<f64>) -> Result<Self>;
    fn dist(&self, other: &Self) -> f64;
    /// Fiber label; constant on projective space.
    fn fiber(&self) -> i8;
    fn cocycle(&self, g: &GroupElement<f64>) -> Result<Vec<f64>>;
    /// Uniformly distributed point (Haar measure of `O(d)` pushed forward).
    fn random(dim: usize, stream: &mut RngStream) -> Self;
    /// Base point `e₁` or the standard flag.
    fn base(dim: usize) -> Self;
    /// Point at distance about `scale` from `self`, in the same fiber.
    fn perturb(&self, scale: f64, stream: &mut RngStream) -> Self;
    /// `other` moved into the fiber of `self` by a sign flip.
    fn match_fiber(&self, other: Self) -> Self;
    fn dim(&self) -> usize;
    fn walker(&self) -> CocycleWalker<f64>;
}

fn gaussian_vec(dim: usize, stream: &mut RngStream) -> Vec<f64> {
    (0..dim).map(|_| stream.normal()).collect()
}

impl CocycleSpace for ProjPoint<f64> {
    const KIND: CocycleKind = CocycleKind::Norm;

    fn act(&self, g: &GroupElement<f64>) -> Result<Self> {
        Ok(proj_act(g, self))
    }

    fn dist(&self, other: &Self) -> f64 {
        proj_dist(self, other).unwrap_or(f64::NAN)
    }

    fn fiber(&self) -> i8 {
        1
    }

    fn cocycle(&self, g: &GroupElement<f64>) -> Result<Vec<f64>> {
        Ok(vec![norm_cocycle(g, self)])
    }

    fn random(dim: usize, stream: &mut RngStream) -> Self {
        loop {
            if let Ok(p) = ProjPoint::new(gaussian_vec(dim, stream)) {
                return p;
            }
        }
    }

    fn base(dim: usize) -> Self {
        ProjPoint::basis(dim, 0)
    }

    fn perturb(&self, scale: f64, stream: &mut RngStream) -> Self {
        loop {
            let v: Vec<f64> = self
                .as_slice()
                .iter()
                .map(|x| x + scale * stream.normal())
                .collect();
            if let Ok(p) = ProjPoint::new(v) {
                return p;
            }
        }
    }

    fn match_fiber(&self, other: Self) -> Self {
        other
    }

    fn dim(&self) -> usize {
        ProjPoint::dim(self)
    }

    fn walker(&self) -> CocycleWalker<f64> {
        CocycleWalker::norm(self.clone())
    }
}

impl CocycleSpace for Flag<f64> {
    const KIND: CocycleKind = CocycleKind::Iwasawa;

    fn act(&self, g: &GroupElement<f64>) -> Result<Self> {
        flag_act(g, self)
    }

    fn dist(&self, other: &Self) -> f64 {
        flag_dist(self, other).unwrap_or(f64::NAN)
    }

    fn fiber(&self) -> i8 {
        fiber(self)
    }

    fn cocycle(&self, g: &GroupElement<f64>) -> Result<Vec<f64>> {
        Ok(iwasawa_cocycle(g, self)?.into_vec())
    }

    fn random(dim: usize, stream: &mut RngStream) -> Self {
        loop {
            let cols: Vec<Vec<f64>> = (0..dim).map(|_| gaussian_vec(dim, stream)).collect();
            if let Ok(m) = Matrix::from_cols(&cols) {
                if let Ok(f) = Flag::from_basis(&m) {
                    return f;
                }
            }
        }
    }

    fn base(dim: usize) -> Self {
        Flag::standard(dim)
    }

    fn perturb(&self, scale: f64, stream: &mut RngStream) -> Self {
        let d = Flag::dim(self);
        loop {
            let mut m = self.k().clone();
            for i in 0..d {
                for j in 0..d {
                    m[(i, j)] += scale * stream.normal();
                }
            }
            if let Ok(f) = Flag::from_basis(&m) {
                return self.match_fiber(f);
            }
        }
    }

    fn match_fiber(&self, other: Self) -> Self {
        if fiber(self) == fiber(&other) {
            other
        } else {
            let last = other.dim() - 1;
            other.flip_column(last)
        }
    }

    fn dim(&self) -> usize {
        Flag::dim(self)
    }

    fn walker(&self) -> CocycleWalker<f64> {
        CocycleWalker::iwasawa(self.clone())
    }
}

/// Sampled lower bound for `∫ κ₀(g)^p μ(dg)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Kappa0Estimate {
    pub value: f64,
    /// Point pairs sampled per atom for `σ_Lip`.
    pub pairs: usize,
    /// True when `σ_sup` was computed exactly (norm cocycle).
    pub sup_exact: bool,
    /// Always true: the sampled suprema only bound the moment from below.
    pub lower_bound: bool,
}

/// `Σ_atoms w · max(σ_sup(g), log σ_Lip(g))^p`, with `σ_Lip` maximized over
/// `x_trials` same-fiber pairs. Pair `i` depends only on `(seed, i)`, so the
/// estimate is nondecreasing in `x_trials`.
pub fn kappa0_estimate(
    mu: &AtomicMeasure,
    kind: CocycleKind,
    p: f64,
    x_trials: usize,
    seed: u64,
) -> Result<Kappa0Estimate> {
    if !(p >= 1.0) {
        return Err(Error::BadExponent(p));
    }
    match kind {
        CocycleKind::Norm => Ok(kappa0_on::<ProjPoint<f64>>(mu, p, x_trials, seed, true)),
        CocycleKind::Iwasawa => Ok(kappa0_on::<Flag<f64>>(mu, p, x_trials, seed, false)),
        CocycleKind::Cartan => Err(Error::InvalidKind("the Cartan projection is not a cocycle")),
    }
}

fn kappa0_on<S: CocycleSpace>(mu: &AtomicMeasure, p: f64, trials: usize, seed: u64, exact_sup: bool) -> Kappa0Estimate {
    let d = mu.dim();
    let mut value = 0.0;
    for (ai, (w, g)) in mu.atoms().enumerate() {
        let mut sup = if exact_sup {
            let s = svd(g).map(|f| f.s).unwrap_or_else(|_| vec![1.0; d]);
            s[0].ln().abs().max(s[d - 1].ln().abs())
        } else {
            0.0f64
        };
        let mut lip = 0.0f64;
        for i in 0..trials {
            let mut stream = RngStream::derive(seed, &[ai as u64, i as u64]);
            let x = S::random(d, &mut stream);
            let y = if i % 2 == 0 {
                x.match_fiber(S::random(d, &mut stream))
            } else {
                x.perturb(1e-4, &mut stream)
            };
            let dxy = x.dist(&y);
            let (Ok(sx), Ok(sy)) = (x.cocycle(g), y.cocycle(g)) else {
                continue;
            };
            if !exact_sup {
                sup = sup.max(max_abs(&sx)).max(max_abs(&sy));
            }
            if dxy > 1e-12 {
                let diff = sx.iter().zip(&sy).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                lip = lip.max(diff / dxy);
            }
        }
        let k0 = sup.max(lip.ln()).max(0.0);
        value += w * k0.powf(p);
    }
    Kappa0Estimate { value, pairs: trials, sup_exact: exact_sup, lower_bound: true }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ge(rows: &[[f64; 2]]) -> GroupElement<f64> {
        GroupElement::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn norm_examples() {
        let x = ProjPoint::new(vec![0.6, 0.8]).unwrap();
        assert_eq!(norm_cocycle(&GroupElement::identity(2), &x), 0.0);
        assert!(norm_cocycle(&GroupElement::<f64>::rotation(2, 0.7), &x).abs() < 1e-15);
        let e = std::f64::consts::E;
        let g = ge(&[[e * e, 0.0], [0.0, e]]);
        assert!((norm_cocycle(&g, &ProjPoint::basis(2, 0)) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn iwasawa_examples() {
        let eta = Flag::standard(2);
        let z = iwasawa_cocycle(&GroupElement::<f64>::rotation(2, 1.1), &Flag::standard(2)).unwrap();
        assert!(z.as_slice().iter().all(|v| v.abs() < 1e-15));
        let z = iwasawa_cocycle(&ge(&[[2.0, 0.0], [0.0, 3.0]]), &eta).unwrap();
        assert!((z.as_slice()[0] - 2f64.ln()).abs() < 1e-15);
        assert!((z.as_slice()[1] - 3f64.ln()).abs() < 1e-15);
        let z = iwasawa_cocycle(&ge(&[[1.0, 5.0], [0.0, 4.0]]), &eta).unwrap();
        assert!(z.as_slice()[0].abs() < 1e-15);
        assert!((z.as_slice()[1] - 4f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn cartan_examples() {
        let k = cartan_projection(&GroupElement::<f64>::identity(3)).unwrap();
        assert!(k.as_slice().iter().all(|v| v.abs() < 1e-15));
        let e = std::f64::consts::E;
        let k = cartan_projection(&ge(&[[e, 0.0], [0.0, e * e * e]])).unwrap();
        assert!((k.as_slice()[0] - 3.0).abs() < 1e-14 && (k.as_slice()[1] - 1.0).abs() < 1e-14);
        let k = cartan_projection(&ge(&[[0.0, 2.0], [1.0, 0.0]])).unwrap();
        assert!((k.as_slice()[0] - 2f64.ln()).abs() < 1e-15 && k.as_slice()[1].abs() < 1e-15);
    }

    #[test]
    fn fiber_examples() {
        assert_eq!(fiber(&Flag::<f64>::standard(2)), 1);
        let f = Flag::new(Matrix::diag(&[-1.0, 1.0])).unwrap();
        assert_eq!(fiber(&f), -1);
        let g = ge(&[[0.0, 1.0], [1.0, 0.0]]);
        assert_eq!(fiber(&flag_act(&g, &f).unwrap()), g.det_sign() * fiber(&f));
    }

    #[test]
    fn residual_identity_and_cartan() {
        let i = GroupElement::<f64>::identity(2);
        let x = SpacePoint::Proj(ProjPoint::basis(2, 1));
        assert_eq!(cocycle_identity_residual(CocycleKind::Norm, &i, &i, &x).unwrap(), 0.0);
        assert!(matches!(
            cocycle_identity_residual(CocycleKind::Cartan, &i, &i, &x),
            Err(Error::InvalidKind(_))
        ));
    }

    #[test]
    fn tracker_matches_svd() {
        let g = GroupElement::<f64>::from_rows(&[
            vec![1.0, 2.0, 0.0],
            vec![0.5, 1.0, 1.0],
            vec![0.0, -1.0, 2.0],
        ])
        .unwrap();
        let h = GroupElement::rotation(3, 0.4);
        let mut tr = CartanTracker::new(3);
        let mut prod = GroupElement::identity(3);
        for step in [&g, &h, &g, &g] {
            tr.push(step);
            prod = step.compose(&prod);
        }
        let want = cartan_projection(&prod).unwrap();
        for (a, b) in tr.kappa().iter().zip(want.as_slice()) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn walker_cartan_survives_long_walks() {
        let g = ge(&[[2.0, 1.0], [1.0, 1.0]]);
        let mut w = CocycleWalker::cartan(2);
        for _ in 0..5000 {
            w.step(&g).unwrap();
        }
        let k = w.value();
        // g is symmetric positive definite with det 1: κ(gⁿ) = n·(log ρ, −log ρ)
        let rho = (3.0 + 5f64.sqrt()) / 2.0;
        assert!((k[0] / 5000.0 - rho.ln()).abs() < 1e-10);
        assert!((k[1] / 5000.0 + rho.ln()).abs() < 1e-10);
    }

    #[test]
    fn kappa0_trivial_measures() {
        let id = AtomicMeasure::dirac(GroupElement::identity(2));
        assert_eq!(kappa0_estimate(&id, CocycleKind::Norm, 3.0, 50, 1).unwrap().value, 0.0);
        assert!(kappa0_estimate(&id, CocycleKind::Iwasawa, 3.0, 50, 1).unwrap().value < 1e-40);
        let rot = AtomicMeasure::dirac(GroupElement::rotation(2, 0.9));
        assert!(kappa0_estimate(&rot, CocycleKind::Norm, 3.0, 50, 1).unwrap().value < 1e-20);
    }

    #[test]
    fn kappa0_monotone_in_trials() {
        let mu = AtomicMeasure::parse(
            r#"{"dim": 2, "atoms": [{"w": 0.5, "m": [[1, 1], [0, 1]]}, {"w": 0.5, "m": [[1, 0], [1, 1]]}]}"#,
        )
        .unwrap();
        let mut last = 0.0;
        for t in [1, 5, 20, 100] {
            let v = kappa0_estimate(&mu, CocycleKind::Norm, 3.0, t, 7).unwrap().value;
            assert!(v >= last && v.is_finite() && v > 0.0);
            last = v;
        }
    }
}
