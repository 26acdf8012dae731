//! Sampled diagnostics for contraction of the action: the contraction
//! index, proximality decay of `d(A_n x, A_n y)`, the coupling coefficient of
//! the cocycle, and occupation of the determinant-sign fibers.
//!
//! Every supremum over pairs of points is a maximum over sampled pairs and
//! is reported with its pair count.

use rayon::prelude::*;
use serde::Serialize;

use crate::cocycles::{fiber, CocycleSpace};
use crate::error::{Error, Result};
use crate::matgroup::{flag_act, Flag};
use crate::measures::{sample_step, AtomicMeasure};
use crate::rng::RngStream;
use crate::stats::{linear_fit, median, permutation_slope_pvalue};

/// Single-pair log ratios are clipped here; the true integrand may be `−∞`.
pub const LOG_RATIO_CLIP: f64 = -700.0;
/// Pairs closer than this are skipped as degenerate.
pub const DEGENERATE_PAIR: f64 = 1e-12;
/// Distances below this are at the resolution of unit vectors in `f64`.
pub const SATURATION_FLOOR: f64 = 1e-13;
/// Scale of the local perturbation used for half of the sampled pairs.
pub const LOCAL_PAIR_SCALE: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContractionIndex {
    pub n0: usize,
    /// Max over sampled pairs of the mean log ratio.
    pub index_hat: f64,
    pub pair_count: usize,
    pub skipped_pairs: usize,
    pub trials: usize,
    /// Number of single-pair log ratios clipped at [`LOG_RATIO_CLIP`].
    pub clipped: usize,
}

/// Pair `i` of the sampling scheme: even indices are independent uniform
/// points, odd indices a point and a small perturbation of it.
fn sample_pair<S: CocycleSpace>(dim: usize, seed: u64, i: usize) -> (S, S) {
    let mut stream = RngStream::derive(seed, &[0xa1, i as u64]);
    let x = S::random(dim, &mut stream);
    let y = if i % 2 == 0 {
        x.match_fiber(S::random(dim, &mut stream))
    } else {
        x.perturb(LOCAL_PAIR_SCALE, &mut stream)
    };
    (x, y)
}

/// Max over sampled same-fiber pairs of the Monte Carlo mean of
/// `log(d(g·x, g·y) / d(x, y))` with `g ~ μ^{*n0}`.
pub fn contraction_index<S: CocycleSpace>(
    mu: &AtomicMeasure,
    n0: usize,
    pairs: usize,
    trials: usize,
    seed: u64,
) -> Result<ContractionIndex> {
    if n0 == 0 || pairs == 0 || trials == 0 {
        return Err(Error::Validation("n0, pairs and trials must be at least 1".into()));
    }
    let d = mu.dim();
    let per_pair: Vec<Result<Option<(f64, usize)>>> = (0..pairs)
        .into_par_iter()
        .map(|i| {
            let (x, y) = sample_pair::<S>(d, seed, i);
            let d0 = x.dist(&y);
            if !(d0 >= DEGENERATE_PAIR) {
                return Ok(None);
            }
            let mut sum = 0.0;
            let mut clipped = 0;
            for t in 0..trials {
                let mut stream = RngStream::derive(seed, &[0xa2, i as u64, t as u64]);
                let (mut gx, mut gy) = (x.clone(), y.clone());
                for _ in 0..n0 {
                    let g = sample_step(mu, &mut stream);
                    gx = gx.act(g)?;
                    gy = gy.act(g)?;
                }
                let mut r = (gx.dist(&gy) / d0).ln();
                if !(r >= LOG_RATIO_CLIP) {
                    r = LOG_RATIO_CLIP;
                    clipped += 1;
                }
                sum += r;
            }
            Ok(Some((sum / trials as f64, clipped)))
        })
        .collect();
    let mut index_hat = f64::NEG_INFINITY;
    let (mut skipped, mut clipped) = (0, 0);
    for r in per_pair {
        match r? {
            Some((m, c)) => {
                index_hat = index_hat.max(m);
                clipped += c;
            }
            None => skipped += 1,
        }
    }
    Ok(ContractionIndex { n0, index_hat, pair_count: pairs - skipped, skipped_pairs: skipped, trials, clipped })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayCurve {
    /// Median over replicates of `log d(A_k x, A_k y)`, `k = 1..len`.
    pub median_log_dist: Vec<f64>,
    /// Step at which the median first fell under [`SATURATION_FLOOR`];
    /// the curve is truncated just before it.
    pub saturated_at: Option<usize>,
    /// `−slope` of the median curve over the second half of its range.
    pub delta_hat: f64,
    pub slope_stderr: f64,
    /// One-sided permutation p-value for a negative slope.
    pub p_value: f64,
    pub replicates: usize,
}

/// Per-step medians of `log d(A_k x, A_k y)` and the fitted decay rate.
pub fn proximality_decay<S: CocycleSpace>(
    mu: &AtomicMeasure,
    x: &S,
    y: &S,
    n: usize,
    replicates: usize,
    seed: u64,
) -> Result<DecayCurve> {
    if x.fiber() != y.fiber() {
        return Err(Error::Validation("points lie in different fibers".into()));
    }
    if !(x.dist(y) >= DEGENERATE_PAIR) {
        return Err(Error::Validation("points must be distinct".into()));
    }
    if n < 4 || replicates == 0 {
        return Err(Error::Validation("need n >= 4 and at least one replicate".into()));
    }
    let curves: Vec<Result<Vec<f64>>> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut stream = RngStream::derive(seed, &[0xb1, r as u64]);
            let (mut ax, mut ay) = (x.clone(), y.clone());
            let mut out = Vec::with_capacity(n);
            for _ in 0..n {
                let g = sample_step(mu, &mut stream);
                ax = ax.act(g)?;
                ay = ay.act(g)?;
                out.push(ax.dist(&ay).max(f64::MIN_POSITIVE).ln());
            }
            Ok(out)
        })
        .collect();
    let curves = curves.into_iter().collect::<Result<Vec<_>>>()?;
    let mut medians = Vec::with_capacity(n);
    let mut saturated_at = None;
    let floor = SATURATION_FLOOR.ln();
    for k in 0..n {
        let col: Vec<f64> = curves.iter().map(|c| c[k]).collect();
        let m = median(&col);
        if m < floor {
            saturated_at = Some(k + 1);
            break;
        }
        medians.push(m);
    }
    let start = medians.len() / 2;
    let (delta_hat, slope_stderr, p_value) = if medians.len() - start >= 3 {
        let ks: Vec<f64> = (start..medians.len()).map(|k| (k + 1) as f64).collect();
        let fit = linear_fit(&ks, &medians[start..])?;
        let p = permutation_slope_pvalue(&ks, &medians[start..], 999, seed)?;
        ((-fit.slope).max(0.0), fit.slope_stderr, p)
    } else {
        (f64::NAN, f64::NAN, f64::NAN)
    };
    Ok(DecayCurve { median_log_dist: medians, saturated_at, delta_hat, slope_stderr, p_value, replicates })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CouplingEstimate {
    pub k: usize,
    pub estimate: f64,
    pub stderr: f64,
    pub trials: usize,
}

/// `E|σ(Y_k, A_{k−1}x) − σ(Y_k, A_{k−1}y)|^q` for `k = 1..=k_max` at a
/// fixed pair. Trials share their walks across `k`.
pub fn coupling_coefficient_at<S: CocycleSpace>(
    mu: &AtomicMeasure,
    x: &S,
    y: &S,
    k_max: usize,
    q: f64,
    trials: usize,
    seed: u64,
) -> Result<Vec<CouplingEstimate>> {
    if k_max == 0 || !(q > 0.0) || trials < 2 {
        return Err(Error::Validation("need k >= 1, q > 0 and at least two trials".into()));
    }
    let rows: Vec<Result<Vec<f64>>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut stream = RngStream::derive(seed, &[0xc1, t as u64]);
            let (mut ax, mut ay) = (x.clone(), y.clone());
            let mut out = Vec::with_capacity(k_max);
            for _ in 0..k_max {
                let g = sample_step(mu, &mut stream);
                let sx = ax.cocycle(g)?;
                let sy = ay.cocycle(g)?;
                let diff = sx.iter().zip(&sy).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                out.push(diff.powf(q));
                ax = ax.act(g)?;
                ay = ay.act(g)?;
            }
            Ok(out)
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let tf = trials as f64;
    Ok((0..k_max)
        .map(|k| {
            let m = rows.iter().map(|r| r[k]).sum::<f64>() / tf;
            let v = rows.iter().map(|r| (r[k] - m).powi(2)).sum::<f64>() / (tf - 1.0);
            CouplingEstimate { k: k + 1, estimate: m, stderr: (v / tf).sqrt(), trials }
        })
        .collect())
}

/// Coupling coefficient at the sampled worst pair: each of `pairs` pairs is
/// screened with `trials` walks at step `k`; the curve is returned for the
/// pair with the largest estimate.
pub fn coupling_coefficient<S: CocycleSpace>(
    mu: &AtomicMeasure,
    k: usize,
    q: f64,
    pairs: usize,
    trials: usize,
    seed: u64,
) -> Result<Vec<CouplingEstimate>> {
    if pairs == 0 {
        return Err(Error::Validation("need at least one pair".into()));
    }
    let d = mu.dim();
    let mut best: Option<(f64, Vec<CouplingEstimate>)> = None;
    for i in 0..pairs {
        let (x, y) = sample_pair::<S>(d, seed, i);
        let curve = coupling_coefficient_at(mu, &x, &y, k, q, trials, seed ^ 0x5a5a)?;
        let score = curve[k - 1].estimate;
        if best.as_ref().is_none_or(|(b, _)| score > *b) {
            best = Some((score, curve));
        }
    }
    Ok(best.expect("pairs >= 1").1)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FiberOccupation {
    /// Fraction of observations in the `+1` fiber.
    pub plus: f64,
    pub minus: f64,
    pub observations: usize,
    pub burnin: usize,
}

/// Occupation of the `sgn det` fibers along `A_k·x` for `burnin < k ≤ n`,
/// with burn-in `n/10`.
pub fn fiber_occupation(mu: &AtomicMeasure, x: &Flag<f64>, n: usize, seed: u64) -> Result<FiberOccupation> {
    if n == 0 {
        return Err(Error::Validation("n must be at least 1".into()));
    }
    let burnin = n / 10;
    let mut stream = RngStream::derive(seed, &[0xd1]);
    let mut eta = x.clone();
    let mut plus = 0usize;
    for k in 1..=n {
        eta = flag_act(sample_step(mu, &mut stream), &eta)?;
        if k > burnin && fiber(&eta) > 0 {
            plus += 1;
        }
    }
    let obs = n - burnin;
    let p = plus as f64 / obs as f64;
    Ok(FiberOccupation { plus: p, minus: 1.0 - p, observations: obs, burnin })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matgroup::{GroupElement, ProjPoint};

    fn mu_of(text: &str) -> AtomicMeasure {
        AtomicMeasure::parse(text).unwrap()
    }

    fn dense_sl2() -> AtomicMeasure {
        mu_of(r#"{"dim": 2, "atoms": [{"w": 0.5, "m": [[2, 1], [1, 1]]}, {"w": 0.5, "m": [[1, 0], [1, 1]]}]}"#)
    }

    #[test]
    fn isometries_have_zero_index() {
        let rot = AtomicMeasure::dirac(GroupElement::rotation(2, 0.8));
        let r = contraction_index::<ProjPoint<f64>>(&rot, 1, 20, 5, 1).unwrap();
        assert!(r.index_hat.abs() < 1e-9, "{}", r.index_hat);
        let id = AtomicMeasure::dirac(GroupElement::identity(3));
        let r = contraction_index::<Flag<f64>>(&id, 2, 10, 3, 1).unwrap();
        assert!(r.index_hat.abs() < 1e-9, "{}", r.index_hat);
    }

    #[test]
    fn hyperbolic_index_approaches_log4() {
        let mu = mu_of(r#"{"dim": 2, "atoms": [{"w": 1.0, "m": [[2, 0], [0, 0.5]]}]}"#);
        let r = contraction_index::<ProjPoint<f64>>(&mu, 1, 4000, 1, 3).unwrap();
        assert!(r.index_hat < 4f64.ln() + 1e-6);
        assert!(r.index_hat > 4f64.ln() - 0.05, "{}", r.index_hat);
    }

    #[test]
    fn rotation_decay_flat() {
        let rot = AtomicMeasure::dirac(GroupElement::rotation(2, 0.3));
        let x = ProjPoint::new(vec![1.0, 0.0]).unwrap();
        let y = ProjPoint::new(vec![1.0, 1.0]).unwrap();
        let c = proximality_decay(&rot, &x, &y, 20, 3, 1).unwrap();
        assert!(c.delta_hat.abs() < 1e-9);
        assert!(proximality_decay(&rot, &x, &x, 20, 3, 1).is_err());
    }

    #[test]
    fn dense_measure_contracts() {
        let mu = dense_sl2();
        let x = ProjPoint::new(vec![1.0, 0.0]).unwrap();
        let y = ProjPoint::new(vec![0.0, 1.0]).unwrap();
        let a = proximality_decay(&mu, &x, &y, 16, 200, 1).unwrap();
        let b = proximality_decay(&mu, &x, &y, 16, 200, 2).unwrap();
        assert!(a.delta_hat > 0.0 && a.p_value < 0.01);
        assert!((a.delta_hat - b.delta_hat).abs() / a.delta_hat < 0.2);
    }

    #[test]
    fn coupling_trivial_cases() {
        let rot = AtomicMeasure::dirac(GroupElement::rotation(2, 0.3));
        let c = coupling_coefficient::<ProjPoint<f64>>(&rot, 1, 1.0, 4, 10, 1).unwrap();
        assert!(c[0].estimate < 1e-12);
        let mu = dense_sl2();
        let x = ProjPoint::new(vec![0.3, 1.0]).unwrap();
        let c = coupling_coefficient_at(&mu, &x, &x, 3, 1.0, 10, 1).unwrap();
        assert!(c.iter().all(|e| e.estimate == 0.0));
    }

    #[test]
    fn coupling_decays_for_dense_measure() {
        let mu = dense_sl2();
        let c = coupling_coefficient::<ProjPoint<f64>>(&mu, 8, 1.0, 8, 400, 5).unwrap();
        for w in c.windows(2) {
            assert!(w[1].estimate <= w[0].estimate + 2.0 * (w[0].stderr + w[1].stderr));
        }
        assert!(c[7].estimate < 0.1 * c[0].estimate);
    }

    #[test]
    fn fiber_trivial_and_single() {
        let mu = dense_sl2();
        let occ = fiber_occupation(&mu, &Flag::standard(2), 1000, 1).unwrap();
        assert_eq!(occ.plus, 1.0);
        let occ = fiber_occupation(&mu, &Flag::standard(2), 1, 1).unwrap();
        assert_eq!(occ.observations, 1);
        assert!(occ.plus == 0.0 || occ.plus == 1.0);
    }
}
