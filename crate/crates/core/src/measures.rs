//! Finitely supported probability measures on `GL_d` and the walks they
//! drive.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matgroup::{GroupElement, Matrix, ScaledProduct};
use crate::rng::RngStream;

/// Tolerance within which weights are renormalized instead of rejected.
pub const WEIGHT_RENORMALIZE_TOL: f64 = 1e-9;

/// Probability measure with finitely many atoms.
#[derive(Clone, Debug, PartialEq)]
pub struct AtomicMeasure {
    dim: usize,
    weights: Vec<f64>,
    atoms: Vec<GroupElement<f64>>,
    cumulative: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct MeasureFile {
    dim: usize,
    atoms: Vec<AtomFile>,
}

#[derive(Serialize, Deserialize)]
struct AtomFile {
    w: f64,
    m: Vec<Vec<f64>>,
}

impl AtomicMeasure {
    /// Validates the atoms and weights. Weights within
    /// [`WEIGHT_RENORMALIZE_TOL`] of summing to one are renormalized.
    pub fn new(atoms: Vec<(f64, GroupElement<f64>)>) -> Result<Self> {
        let first = atoms.first().ok_or_else(|| Error::Validation("measure has no atoms".into()))?;
        let dim = first.1.dim();
        let mut weights = Vec::with_capacity(atoms.len());
        let mut elems = Vec::with_capacity(atoms.len());
        for (i, (w, g)) in atoms.into_iter().enumerate() {
            if !(w > 0.0 && w <= 1.0) {
                return Err(Error::Validation(format!("atom {i}: weight {w} outside (0, 1]")));
            }
            if g.dim() != dim {
                return Err(Error::Validation(format!("atom {i}: dimension {} != {dim}", g.dim())));
            }
            weights.push(w);
            elems.push(g);
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_RENORMALIZE_TOL {
            return Err(Error::Validation(format!("weights sum to {total}, not 1")));
        }
        for w in weights.iter_mut() {
            *w /= total;
        }
        let mut acc = 0.0;
        let mut cumulative: Vec<f64> = weights
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        *cumulative.last_mut().unwrap() = 1.0;
        Ok(AtomicMeasure { dim, weights, atoms: elems, cumulative })
    }

    /// Point mass at `g`.
    pub fn dirac(g: GroupElement<f64>) -> Self {
        Self::new(vec![(1.0, g)]).expect("single atom with unit weight")
    }

    /// Parses the JSON measure format
    /// `{"dim": d, "atoms": [{"w": weight, "m": [[row], ...]}, ...]}`.
    pub fn parse(text: &str) -> Result<Self> {
        let file: MeasureFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let mut atoms = Vec::with_capacity(file.atoms.len());
        for (i, a) in file.atoms.into_iter().enumerate() {
            if a.m.len() != file.dim || a.m.iter().any(|r| r.len() != file.dim) {
                return Err(Error::Validation(format!("atom {i}: matrix is not {0}x{0}", file.dim)));
            }
            let m = Matrix::from_rows(&a.m)?;
            let g = GroupElement::new(m)
                .map_err(|e| Error::Validation(format!("atom {i}: {e}")))?;
            atoms.push((a.w, g));
        }
        Self::new(atoms)
    }

    pub fn to_json(&self) -> String {
        let file = MeasureFile {
            dim: self.dim,
            atoms: self
                .atoms
                .iter()
                .zip(&self.weights)
                .map(|(g, &w)| AtomFile { w, m: g.matrix().rows() })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("measure serializes")
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atoms(&self) -> impl Iterator<Item = (f64, &GroupElement<f64>)> {
        self.weights.iter().copied().zip(self.atoms.iter())
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn atom(&self, i: usize) -> &GroupElement<f64> {
        &self.atoms[i]
    }

    /// Index of the atom selected by one uniform draw.
    #[inline]
    pub fn sample_index(&self, stream: &mut RngStream) -> usize {
        let u = stream.uniform();
        self.cumulative.partition_point(|&c| c <= u).min(self.atoms.len() - 1)
    }

    /// Measure of the transposed atoms.
    pub fn transposed(&self) -> Self {
        AtomicMeasure {
            dim: self.dim,
            weights: self.weights.clone(),
            atoms: self.atoms.iter().map(|g| g.transpose()).collect(),
            cumulative: self.cumulative.clone(),
        }
    }
}

/// One step of the walk: atom `i` with probability `weight_i`. Consumes
/// exactly one 64-bit word of `stream`.
pub fn sample_step<'a>(mu: &'a AtomicMeasure, stream: &mut RngStream) -> &'a GroupElement<f64> {
    mu.atom(mu.sample_index(stream))
}

/// Which end of the product new steps are multiplied onto.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// `A_n = Y_n ⋯ Y_1`
    Left,
    /// `B_n = Y_1 ⋯ Y_n`
    Right,
}

/// Steps `Y_1..Y_n` and the running products for one side.
#[derive(Clone, Debug)]
pub struct WalkPath {
    pub seed: u64,
    pub side: Side,
    pub step_indices: Vec<usize>,
    pub steps: Vec<GroupElement<f64>>,
    pub products: Vec<ScaledProduct<f64>>,
}

impl WalkPath {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// Runs `n` steps of the walk. Steps depend only on `seed`, so the left and
/// right walks for one seed share their steps.
pub fn walk(mu: &AtomicMeasure, n: usize, seed: u64, side: Side) -> Result<WalkPath> {
    if n == 0 {
        return Err(Error::Validation("walk length must be at least 1".into()));
    }
    let mut stream = RngStream::new(seed);
    let mut step_indices = Vec::with_capacity(n);
    let mut steps = Vec::with_capacity(n);
    let mut products = Vec::with_capacity(n);
    let mut acc = ScaledProduct::identity(mu.dim());
    for _ in 0..n {
        let i = mu.sample_index(&mut stream);
        let y = mu.atom(i);
        match side {
            Side::Left => acc.left_mul(y),
            Side::Right => acc.right_mul(y),
        }
        step_indices.push(i);
        steps.push(y.clone());
        products.push(acc.clone());
    }
    Ok(WalkPath { seed, side, step_indices, steps, products })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SL2: &str = r#"{"dim": 2, "atoms": [
        {"w": 0.5, "m": [[1, 1], [0, 1]]},
        {"w": 0.5, "m": [[1, 0], [1, 1]]}]}"#;

    #[test]
    fn parse_two_atoms() {
        let mu = AtomicMeasure::parse(SL2).unwrap();
        assert_eq!(mu.len(), 2);
        assert_eq!(mu.dim(), 2);
        let again = AtomicMeasure::parse(&mu.to_json()).unwrap();
        assert_eq!(again, mu);
    }

    #[test]
    fn bad_weights_rejected() {
        let t = SL2.replace("0.5, \"m\": [[1, 0]", "0.4, \"m\": [[1, 0]");
        assert!(matches!(AtomicMeasure::parse(&t), Err(Error::Validation(_))));
    }

    #[test]
    fn near_unit_weights_renormalized() {
        let t = SL2.replace("0.5, \"m\": [[1, 0]", "0.5000000001, \"m\": [[1, 0]");
        let mu = AtomicMeasure::parse(&t).unwrap();
        let total: f64 = mu.atoms().map(|(w, _)| w).sum();
        assert!((total - 1.0).abs() < 1e-15);
    }

    #[test]
    fn singular_atom_rejected() {
        let t = r#"{"dim": 2, "atoms": [{"w": 1.0, "m": [[1, 0], [0, 0]]}]}"#;
        assert!(matches!(AtomicMeasure::parse(t), Err(Error::Validation(_))));
    }

    #[test]
    fn malformed_rejected() {
        assert!(matches!(AtomicMeasure::parse("{\"dim\": 2"), Err(Error::Parse(_))));
        let ragged = r#"{"dim": 2, "atoms": [{"w": 1.0, "m": [[1, 0, 0], [0, 1]]}]}"#;
        assert!(AtomicMeasure::parse(ragged).is_err());
    }

    #[test]
    fn single_atom_always_sampled() {
        let g = GroupElement::rotation(2, 0.3);
        let mu = AtomicMeasure::dirac(g.clone());
        let mut s = RngStream::new(3);
        for _ in 0..100 {
            assert_eq!(sample_step(&mu, &mut s), &g);
        }
    }

    #[test]
    fn fair_two_atom_frequency() {
        let mu = AtomicMeasure::parse(SL2).unwrap();
        let mut s = RngStream::new(11);
        let n = 100_000;
        let hits = (0..n).filter(|_| mu.sample_index(&mut s) == 0).count();
        let freq = hits as f64 / n as f64;
        assert!((freq - 0.5).abs() < 0.01, "freq = {freq}");
    }

    #[test]
    fn same_seed_same_steps() {
        let mu = AtomicMeasure::parse(SL2).unwrap();
        let a = walk(&mu, 10, 99, Side::Left).unwrap();
        let b = walk(&mu, 10, 99, Side::Left).unwrap();
        assert_eq!(a.step_indices, b.step_indices);
        assert_eq!(a.products, b.products);
    }

    #[test]
    fn single_atom_powers() {
        let g = GroupElement::from_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap();
        let mu = AtomicMeasure::dirac(g.clone());
        let path = walk(&mu, 3, 0, Side::Left).unwrap();
        let g2 = g.compose(&g);
        let g3 = g2.compose(&g);
        for (p, want) in path.products.iter().zip([&g, &g2, &g3]) {
            assert!(p.to_matrix().sub(want.matrix()).max_abs() < 1e-12);
        }
        let one = walk(&mu, 1, 5, Side::Right).unwrap();
        assert!(one.products[0].to_matrix().sub(g.matrix()).max_abs() < 1e-15);
    }

    #[test]
    fn left_and_right_share_steps() {
        let mu = AtomicMeasure::parse(SL2).unwrap();
        let l = walk(&mu, 20, 4, Side::Left).unwrap();
        let r = walk(&mu, 20, 4, Side::Right).unwrap();
        assert_eq!(l.step_indices, r.step_indices);
        for k in 1..20 {
            let a = l.steps[k].matrix().matmul(&l.products[k - 1].to_matrix());
            assert!(a.sub(&l.products[k].to_matrix()).max_abs() < 1e-9 * a.max_abs());
            let b = r.products[k - 1].to_matrix().matmul(r.steps[k].matrix());
            assert!(b.sub(&r.products[k].to_matrix()).max_abs() < 1e-9 * b.max_abs());
        }
    }
}
