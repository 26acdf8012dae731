use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Tolerance for stochastic rows, stationarity and conditional centering.
pub const CHAIN_TOL: f64 = 1e-12;

/// One innovation outcome: `value · scale` with probability `prob`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Innovation {
    pub prob: f64,
    pub value: i64,
}

/// Scalar martingale differences driven by a stationary finite chain.
///
/// With chain state `s_{i−1}` known at time `i − 1`, step `i` draws an
/// innovation from `alphabets[s_{i−1}]` and, independently, the next state
/// from `transition[s_{i−1}]`. The increment is `scale · value`, centered
/// given the past.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DrivenMartingale {
    pub scale: f64,
    pub transition: Vec<Vec<f64>>,
    pub stationary: Vec<f64>,
    pub alphabets: Vec<Vec<Innovation>>,
    /// Moment exponent carried with the model.
    pub p: f64,
}

impl DrivenMartingale {
    pub fn validate(&self) -> Result<()> {
        let s = self.transition.len();
        let bad = |m: &str| Err(Error::Validation(m.to_string()));
        if s == 0 || self.stationary.len() != s || self.alphabets.len() != s {
            return bad("chain needs matching transition, stationary and alphabet sizes");
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return bad("scale must be positive");
        }
        for (i, row) in self.transition.iter().enumerate() {
            if row.len() != s || row.iter().any(|&x| !(x >= 0.0)) {
                return Err(Error::Validation(format!("transition row {i} malformed")));
            }
            if (row.iter().sum::<f64>() - 1.0).abs() > CHAIN_TOL {
                return Err(Error::Validation(format!("transition row {i} does not sum to 1")));
            }
        }
        if (self.stationary.iter().sum::<f64>() - 1.0).abs() > CHAIN_TOL {
            return bad("stationary row does not sum to 1");
        }
        for j in 0..s {
            let pj: f64 = (0..s).map(|i| self.stationary[i] * self.transition[i][j]).sum();
            if (pj - self.stationary[j]).abs() > CHAIN_TOL {
                return bad("stationary row is not invariant");
            }
        }
        for (i, alpha) in self.alphabets.iter().enumerate() {
            if alpha.is_empty() || alpha.iter().any(|a| !(a.prob > 0.0)) {
                return Err(Error::Validation(format!("alphabet {i} malformed")));
            }
            if (alpha.iter().map(|a| a.prob).sum::<f64>() - 1.0).abs() > CHAIN_TOL {
                return Err(Error::Validation(format!("alphabet {i} does not sum to 1")));
            }
            let mean: f64 = alpha.iter().map(|a| a.prob * a.value as f64).sum();
            if mean.abs() > CHAIN_TOL {
                return Err(Error::Validation(format!("alphabet {i} is not centered (mean {mean})")));
            }
        }
        Ok(())
    }

    /// iid Rademacher increments.
    pub fn rademacher() -> Self {
        DrivenMartingale {
            scale: 1.0,
            transition: vec![vec![1.0]],
            stationary: vec![1.0],
            alphabets: vec![vec![Innovation { prob: 0.5, value: -1 }, Innovation { prob: 0.5, value: 1 }]],
            p: 3.0,
        }
    }

    /// Two-regime chain: a calm state with `±1` increments and a volatile
    /// state with `−3` (prob 1/4) or `+1` (prob 3/4).
    pub fn two_regime() -> Self {
        DrivenMartingale {
            scale: 1.0,
            transition: vec![vec![0.9, 0.1], vec![0.3, 0.7]],
            stationary: vec![0.75, 0.25],
            alphabets: vec![
                vec![Innovation { prob: 0.5, value: -1 }, Innovation { prob: 0.5, value: 1 }],
                vec![Innovation { prob: 0.25, value: -3 }, Innovation { prob: 0.75, value: 1 }],
            ],
            p: 3.0,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let m: DrivenMartingale = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        m.validate()?;
        Ok(m)
    }

    pub fn states(&self) -> usize {
        self.transition.len()
    }

    /// Stationary variance `E d₀²`.
    pub fn variance(&self) -> f64 {
        let s2: f64 = self
            .alphabets
            .iter()
            .zip(&self.stationary)
            .map(|(alpha, pi)| pi * alpha.iter().map(|a| a.prob * (a.value as f64).powi(2)).sum::<f64>())
            .sum();
        s2 * self.scale * self.scale
    }

    /// Largest `|increment|`.
    pub fn max_abs_increment(&self) -> f64 {
        self.alphabets
            .iter()
            .flatten()
            .map(|a| a.value.unsigned_abs() as f64)
            .fold(0.0, f64::max)
            * self.scale
    }
}

fn draw<T>(items: &[T], prob: impl Fn(&T) -> f64, u: f64) -> usize {
    let mut acc = 0.0;
    for (i, it) in items.iter().enumerate() {
        acc += prob(it);
        if u < acc {
            return i;
        }
    }
    items.len() - 1
}

/// Increments `d_1..d_n` with the chain states that drive them.
#[derive(Clone, Debug, PartialEq)]
pub struct MartPath {
    pub increments: Vec<f64>,
    /// `states[i]` is the state known before increment `i` (0-based).
    pub states: Vec<usize>,
    /// Integer values of the increments in units of the lattice scale, when
    /// the increments live on a lattice.
    pub lattice: Option<Vec<i64>>,
}

impl MartPath {
    pub fn len(&self) -> usize {
        self.increments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.increments.is_empty()
    }

    pub fn partial_sums(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.increments
            .iter()
            .map(|d| {
                acc += d;
                acc
            })
            .collect()
    }
}

/// Stationary path of length `n`. Each step uses exactly two uniforms
/// (innovation, then next state) after one uniform for the initial state.
pub fn simulate_driven(mart: &DrivenMartingale, n: usize, seed: u64) -> Result<MartPath> {
    mart.validate()?;
    let mut stream = RngStream::derive(seed, &[0xf0]);
    let mut s = draw(&mart.stationary, |p| *p, stream.uniform());
    let mut increments = Vec::with_capacity(n);
    let mut states = Vec::with_capacity(n);
    let mut lattice = Vec::with_capacity(n);
    for _ in 0..n {
        let alpha = &mart.alphabets[s];
        let v = alpha[draw(alpha, |a| a.prob, stream.uniform())].value;
        states.push(s);
        lattice.push(v);
        increments.push(v as f64 * mart.scale);
        s = draw(&mart.transition[s], |p| *p, stream.uniform());
    }
    Ok(MartPath { increments, states, lattice: Some(lattice) })
}

/// iid `N(0, σ²)` increments as a single-state path.
pub fn simulate_gaussian(sigma: f64, n: usize, seed: u64) -> MartPath {
    let mut stream = RngStream::derive(seed, &[0xf1]);
    MartPath {
        increments: (0..n).map(|_| sigma * stream.normal()).collect(),
        states: vec![0; n],
        lattice: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_chains_valid() {
        DrivenMartingale::rademacher().validate().unwrap();
        let c = DrivenMartingale::two_regime();
        c.validate().unwrap();
        assert!((c.variance() - (0.75 + 0.25 * 3.0)).abs() < 1e-15);
    }

    #[test]
    fn uncentered_rejected() {
        let mut c = DrivenMartingale::rademacher();
        c.alphabets[0][0].value = -2;
        assert!(c.validate().is_err());
        let mut c = DrivenMartingale::two_regime();
        c.stationary = vec![0.5, 0.5];
        assert!(c.validate().is_err());
    }

    #[test]
    fn rademacher_path() {
        let p = simulate_driven(&DrivenMartingale::rademacher(), 1000, 3).unwrap();
        assert!(p.increments.iter().all(|&d| d == 1.0 || d == -1.0));
        assert_eq!(p, simulate_driven(&DrivenMartingale::rademacher(), 1000, 3).unwrap());
    }

    #[test]
    fn mean_in_clt_band() {
        let n = 1_000_000;
        let c = DrivenMartingale::two_regime();
        let p = simulate_driven(&c, n, 9).unwrap();
        let mean = p.increments.iter().sum::<f64>() / n as f64;
        assert!(mean.abs() < 3.0 * (c.variance() / n as f64).sqrt(), "{mean}");
    }
}
