//! Two-term maximal tail bound for martingales and its empirical probe.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::martcouple::{simulate_driven, DrivenMartingale};
use crate::rng::RngStream;
use crate::stats::wilson95;

/// Smallest constant returned by [`calibrate_c_p`].
pub const C_P_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FukNagaevParams {
    pub n: usize,
    pub sigma: f64,
    pub p: f64,
    pub c_p: f64,
}

impl FukNagaevParams {
    pub fn new(n: usize, sigma: f64, p: f64, c_p: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Validation("n must be at least 1".into()));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::Validation(format!("sigma must be positive, got {sigma}")));
        }
        if !(p > 2.0 && p <= 3.0) {
            return Err(Error::BadExponent(p));
        }
        if !(c_p > 0.0 && c_p.is_finite()) {
            return Err(Error::Validation(format!("c_p must be positive, got {c_p}")));
        }
        Ok(FukNagaevParams { n, sigma, p, c_p })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TailBound {
    pub gaussian_term: f64,
    pub polynomial_term: f64,
    /// Sum of the two terms, possibly above 1.
    pub raw: f64,
    /// `raw` clamped to `[0, 1]`.
    pub value: f64,
}

/// `7·2^{2p−1/2}(nσ²/x²)^{p+1/2} exp(−x²/(8nσ²)) + C_p n x^{−p}`.
pub fn fuk_nagaev_bound(params: &FukNagaevParams, x: f64) -> Result<TailBound> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::Validation(format!("threshold must be positive, got {x}")));
    }
    let FukNagaevParams { n, sigma, p, c_p } = *params;
    let v = n as f64 * sigma * sigma;
    let r = v / (x * x);
    // in logs so that huge r does not overflow before the exponential
    let log_g = 7f64.ln() + (2.0 * p - 0.5) * 2f64.ln() + (p + 0.5) * r.ln() - x * x / (8.0 * v);
    let gaussian_term = log_g.exp();
    let polynomial_term = c_p * n as f64 * x.powf(-p);
    let raw = gaussian_term + polynomial_term;
    Ok(TailBound { gaussian_term, polynomial_term, raw, value: raw.clamp(0.0, 1.0) })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MaximalTail {
    pub x: f64,
    pub hits: usize,
    pub paths: usize,
    pub fraction: f64,
    pub wilson_lo: f64,
    pub wilson_hi: f64,
}

/// `M_n* = max_{1≤k≤n} M_k` for a path of partial sums.
pub fn running_max(partial_sums: &[f64]) -> f64 {
    partial_sums.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Fraction of paths (given as partial sums) whose maximum reaches `x`.
pub fn maximal_tail_empirical(paths: &[Vec<f64>], x: f64) -> Result<MaximalTail> {
    if paths.is_empty() || paths.iter().any(|p| p.is_empty()) {
        return Err(Error::Validation("need nonempty paths".into()));
    }
    let maxima: Vec<f64> = paths.iter().map(|p| running_max(p)).collect();
    tail_from_maxima(&maxima, x)
}

/// Same as [`maximal_tail_empirical`] from precomputed maxima.
pub fn tail_from_maxima(maxima: &[f64], x: f64) -> Result<MaximalTail> {
    if maxima.is_empty() {
        return Err(Error::Validation("need at least one path".into()));
    }
    let hits = maxima.iter().filter(|&&m| m >= x).count();
    let (wilson_lo, wilson_hi) = wilson95(hits, maxima.len());
    Ok(MaximalTail {
        x,
        hits,
        paths: maxima.len(),
        fraction: hits as f64 / maxima.len() as f64,
        wilson_lo,
        wilson_hi,
    })
}

/// Running maxima of `paths` independent stationary paths of length `n`;
/// path `i` uses the stream `(seed, i)`.
pub fn simulate_maxima(mart: &DrivenMartingale, n: usize, paths: usize, seed: u64) -> Result<Vec<f64>> {
    if n == 0 || paths == 0 {
        return Err(Error::Validation("n and paths must be at least 1".into()));
    }
    mart.validate()?;
    (0..paths)
        .into_par_iter()
        .map(|i| {
            let s = RngStream::derive(seed, &[0x7b, i as u64]).next_u64();
            Ok(running_max(&simulate_driven(mart, n, s)?.partial_sums()))
        })
        .collect()
}

/// One-point fit of `C_p`: the smallest constant for which the bound at
/// `x0` covers the Wilson upper limit there, floored at [`C_P_FLOOR`].
pub fn calibrate_c_p(maxima: &[f64], n: usize, sigma: f64, p: f64, x0: f64) -> Result<f64> {
    let tail = tail_from_maxima(maxima, x0)?;
    let gauss = fuk_nagaev_bound(&FukNagaevParams::new(n, sigma, p, C_P_FLOOR)?, x0)?.gaussian_term;
    Ok(((tail.wilson_hi - gauss) * x0.powf(p) / n as f64).max(C_P_FLOOR))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TailCheck {
    pub tail: MaximalTail,
    pub bound: TailBound,
    /// True for the calibration threshold, false for validation points.
    pub calibration: bool,
    /// Wilson upper limit at or below the bound.
    pub covered: bool,
}

/// Calibrate at `x0` then compare at every threshold in `validate`.
pub fn calibrate_and_validate(
    maxima: &[f64],
    n: usize,
    sigma: f64,
    p: f64,
    x0: f64,
    validate: &[f64],
) -> Result<(FukNagaevParams, Vec<TailCheck>)> {
    let c_p = calibrate_c_p(maxima, n, sigma, p, x0)?;
    let params = FukNagaevParams::new(n, sigma, p, c_p)?;
    let mut out = Vec::with_capacity(validate.len() + 1);
    for (i, &x) in std::iter::once(&x0).chain(validate).enumerate() {
        let tail = tail_from_maxima(maxima, x)?;
        let bound = fuk_nagaev_bound(&params, x)?;
        out.push(TailCheck { tail, bound, calibration: i == 0, covered: tail.wilson_hi <= bound.value });
    }
    Ok((params, out))
}
