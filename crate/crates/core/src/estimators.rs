//! Lyapunov vector, asymptotic covariance, covariance reduction and the
//! envelope norm.

use rayon::prelude::*;
use serde::Serialize;
use statrs::function::gamma::{gamma, gamma_ur};

use crate::cocycles::{CartanTracker, CocycleKind, CocycleSpace, CocycleWalker, Exterior};
use crate::error::{Error, Result};
use crate::matgroup::{sym_eigen, Flag, Matrix, ProjPoint};
use crate::measures::AtomicMeasure;
use crate::normal;
use crate::rng::RngStream;

/// Default burn-in before the start point is taken as a draw from the
/// stationary measure.
pub const DEFAULT_BURNIN: usize = 1000;
/// Relative eigenvalue threshold that decides the rank in
/// [`covariance_reduction`].
pub const RANK_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LyapunovMethod {
    /// Mean of `σ(A_n, W₀)/n` (or `κ(A_n)/n`) over replicates.
    Endpoint,
    /// Mean over the path of the conditional increment
    /// `Σ_atoms w·σ(g, W_{k−1})`, which has the same expectation and
    /// no step-sampling noise.
    Conditional,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LyapunovEstimate {
    pub kind: CocycleKind,
    pub method: LyapunovMethod,
    pub lambda_hat: Vec<f64>,
    pub stderr: Vec<f64>,
    pub n: usize,
    pub replicates: usize,
    pub burnin: usize,
}

/// Start point after `burnin` steps from the base point, on its own stream.
fn burned_in<S: CocycleSpace>(mu: &AtomicMeasure, burnin: usize, seed: u64, rep: u64) -> Result<S> {
    let mut stream = RngStream::derive(seed, &[0xe0, rep]);
    let mut x = S::base(mu.dim());
    for _ in 0..burnin {
        x = x.act(mu.atom(mu.sample_index(&mut stream)))?;
    }
    Ok(x)
}

/// `Σ_atoms w·σ(g, x)`.
fn conditional_mean<S: CocycleSpace>(mu: &AtomicMeasure, x: &S) -> Result<Vec<f64>> {
    let mut acc = vec![0.0; S::KIND.value_dim(mu.dim())];
    for (w, g) in mu.atoms() {
        for (a, v) in acc.iter_mut().zip(x.cocycle(g)?) {
            *a += w * v;
        }
    }
    Ok(acc)
}

fn lyapunov_replicate<S: CocycleSpace>(
    mu: &AtomicMeasure,
    method: LyapunovMethod,
    n: usize,
    burnin: usize,
    seed: u64,
    rep: u64,
) -> Result<Vec<f64>> {
    let x0: S = burned_in(mu, burnin, seed, rep)?;
    let mut stream = RngStream::derive(seed, &[0xe1, rep]);
    match method {
        LyapunovMethod::Endpoint => {
            let mut w = x0.walker();
            for _ in 0..n {
                w.step(mu.atom(mu.sample_index(&mut stream)))?;
            }
            Ok(w.value().into_iter().map(|v| v / n as f64).collect())
        }
        LyapunovMethod::Conditional => {
            let mut x = x0;
            let mut acc = vec![0.0; S::KIND.value_dim(mu.dim())];
            for _ in 0..n {
                for (a, v) in acc.iter_mut().zip(conditional_mean(mu, &x)?) {
                    *a += v;
                }
                x = x.act(mu.atom(mu.sample_index(&mut stream)))?;
            }
            Ok(acc.into_iter().map(|v| v / n as f64).collect())
        }
    }
}

fn cartan_replicate(
    mu: &AtomicMeasure,
    exts: &[Exterior<f64>],
    method: LyapunovMethod,
    n: usize,
    seed: u64,
    rep: u64,
) -> Vec<f64> {
    let d = mu.dim();
    let mut stream = RngStream::derive(seed, &[0xe1, rep]);
    let mut tr = CartanTracker::<f64>::new(d);
    let mut acc = vec![0.0; d];
    for _ in 0..n {
        if method == LyapunovMethod::Conditional {
            let now = tr.kappa();
            for ((w, _), e) in mu.atoms().zip(exts) {
                for ((a, after), before) in acc.iter_mut().zip(tr.kappa_after(e)).zip(&now) {
                    *a += w * (after - before);
                }
            }
        }
        tr.push_exterior(&exts[mu.sample_index(&mut stream)]);
    }
    if method == LyapunovMethod::Endpoint {
        acc = tr.kappa();
    }
    acc.into_iter().map(|v| v / n as f64).collect()
}

/// Estimates the Lyapunov vector from `replicates` independent walks of
/// length `n`. The Cartan kind ignores `burnin` (`κ` has no start point).
pub fn lyapunov(
    mu: &AtomicMeasure,
    kind: CocycleKind,
    method: LyapunovMethod,
    n: usize,
    replicates: usize,
    burnin: usize,
    seed: u64,
) -> Result<LyapunovEstimate> {
    if n == 0 || replicates == 0 {
        return Err(Error::Validation("n and replicates must be at least 1".into()));
    }
    let exts: Vec<Exterior<f64>> = match kind {
        CocycleKind::Cartan => mu.atoms().map(|(_, g)| Exterior::of(g)).collect(),
        _ => Vec::new(),
    };
    let reps: Vec<Result<Vec<f64>>> = (0..replicates as u64)
        .into_par_iter()
        .map(|r| match kind {
            CocycleKind::Norm => lyapunov_replicate::<ProjPoint<f64>>(mu, method, n, burnin, seed, r),
            CocycleKind::Iwasawa => lyapunov_replicate::<Flag<f64>>(mu, method, n, burnin, seed, r),
            CocycleKind::Cartan => Ok(cartan_replicate(mu, &exts, method, n, seed, r)),
        })
        .collect();
    let reps = reps.into_iter().collect::<Result<Vec<_>>>()?;
    let dim = reps[0].len();
    let rf = replicates as f64;
    let lambda_hat: Vec<f64> = (0..dim).map(|j| reps.iter().map(|r| r[j]).sum::<f64>() / rf).collect();
    let stderr = (0..dim)
        .map(|j| {
            if replicates < 2 {
                return f64::NAN;
            }
            let v = reps.iter().map(|r| (r[j] - lambda_hat[j]).powi(2)).sum::<f64>() / (rf - 1.0);
            (v / rf).sqrt()
        })
        .collect();
    Ok(LyapunovEstimate { kind, method, lambda_hat, stderr, n, replicates, burnin: if kind == CocycleKind::Cartan { 0 } else { burnin } })
}

fn check_grid(ns: &[usize]) -> Result<()> {
    if ns.is_empty() || ns[0] == 0 || ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Validation("n grid must be nonempty, positive and strictly increasing".into()));
    }
    Ok(())
}

fn sums_replicate(mu: &AtomicMeasure, kind: CocycleKind, ns: &[usize], burnin: usize, seed: u64, rep: u64) -> Result<Vec<Vec<f64>>> {
    let mut w = match kind {
        CocycleKind::Norm => burned_in::<ProjPoint<f64>>(mu, burnin, seed, rep)?.walker(),
        CocycleKind::Iwasawa => burned_in::<Flag<f64>>(mu, burnin, seed, rep)?.walker(),
        CocycleKind::Cartan => CocycleWalker::cartan(mu.dim()),
    };
    let mut stream = RngStream::derive(seed, &[0xe1, rep]);
    let mut out = Vec::with_capacity(ns.len());
    let mut k = 0;
    for &n in ns {
        while k < n {
            w.step(mu.atom(mu.sample_index(&mut stream)))?;
            k += 1;
        }
        out.push(w.value());
    }
    Ok(out)
}

/// `σ(A_n, W₀)` (or `κ(A_n)`) at every `n` of the increasing grid `ns`,
/// reading one walk per replicate. Indexed `[replicate][grid point]`.
pub fn walk_sums(
    mu: &AtomicMeasure,
    kind: CocycleKind,
    ns: &[usize],
    replicates: usize,
    burnin: usize,
    seed: u64,
) -> Result<Vec<Vec<Vec<f64>>>> {
    check_grid(ns)?;
    if replicates == 0 {
        return Err(Error::Validation("replicates must be at least 1".into()));
    }
    (0..replicates as u64)
        .into_par_iter()
        .map(|r| sums_replicate(mu, kind, ns, burnin, seed, r))
        .collect()
}

/// `max_seeds |σ(A_n, e₁) − κ₁(A_n)|` for each `n` of the grid, with walk
/// `s` on the stream `(seed, s)`.
pub fn norm_cartan_gap(mu: &AtomicMeasure, ns: &[usize], seeds: usize, seed: u64) -> Result<Vec<f64>> {
    check_grid(ns)?;
    let exts: Vec<Exterior<f64>> = mu.atoms().map(|(_, g)| Exterior::of(g)).collect();
    let rows: Vec<Result<Vec<f64>>> = (0..seeds as u64)
        .into_par_iter()
        .map(|s| {
            let mut stream = RngStream::derive(seed, &[0xe3, s]);
            let mut w = CocycleWalker::norm(ProjPoint::basis(mu.dim(), 0));
            let mut tr = CartanTracker::<f64>::new(mu.dim());
            let mut out = Vec::with_capacity(ns.len());
            let mut k = 0;
            for &n in ns {
                while k < n {
                    let i = mu.sample_index(&mut stream);
                    w.step(mu.atom(i))?;
                    tr.push_exterior(&exts[i]);
                    k += 1;
                }
                out.push((w.value()[0] - tr.kappa()[0]).abs());
            }
            Ok(out)
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    Ok((0..ns.len()).map(|j| rows.iter().map(|r| r[j]).fold(0.0, f64::max)).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CovarianceMethod {
    Series,
    BatchMeans,
}

/// One lag of the covariance series.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CovTerm {
    /// Lag index: 1 is the variance term, `k ≥ 2` is `Cov(X₁, X_k)`.
    pub k: usize,
    pub term: Matrix<f64>,
    /// Entrywise standard errors.
    pub stderr: Matrix<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CovarianceEstimate {
    pub sigma_hat: Matrix<f64>,
    pub method: CovarianceMethod,
    /// Series: last lag included. Batch means: number of batches.
    pub truncation: usize,
    /// Typical standard error of the entries of `sigma_hat`.
    pub stderr_scale: f64,
    /// True when negative eigenvalues were clipped to zero.
    pub clipped: bool,
    pub terms: Vec<CovTerm>,
}

fn outer_add(acc: &mut [f64], a: &[f64], b: &[f64], w: f64) {
    let m = a.len();
    for i in 0..m {
        for j in 0..m {
            acc[i * m + j] += w * a[i] * b[j];
        }
    }
}

/// Symmetrizes and clips eigenvalues in `[-1e-8·scale, 0)` to zero.
fn psd_project(m: &Matrix<f64>) -> (Matrix<f64>, bool) {
    let sym = m.add(&m.transpose()).scale(0.5);
    let eig = sym_eigen(&sym);
    if eig.values.iter().all(|&v| v >= 0.0) {
        return (sym, false);
    }
    let d = sym.dim();
    let mut out = Matrix::zeros(d);
    for (k, &v) in eig.values.iter().enumerate() {
        let v = v.max(0.0);
        for i in 0..d {
            for j in 0..d {
                out[(i, j)] += v * eig.vectors[(i, k)] * eig.vectors[(j, k)];
            }
        }
    }
    let out = out.add(&out.transpose()).scale(0.5);
    (out, true)
}

/// Per-trial samples for [`sigma_series`]: the within-step variance
/// `Σ w(σ−φ)(σ−φ)ᵗ` at `W₀`, the conditional mean `φ(W₀)`, the sampled
/// `X₁`, and `φ(W_{k−1})` for `k = 2..=K`.
struct SeriesTrial {
    within: Vec<f64>,
    phi0: Vec<f64>,
    x1: Vec<f64>,
    phis: Vec<Vec<f64>>,
}

fn series_trial<S: CocycleSpace>(mu: &AtomicMeasure, k_max: usize, burnin: usize, seed: u64, t: u64) -> Result<SeriesTrial> {
    let mut x: S = burned_in(mu, burnin, seed, t)?;
    let m = S::KIND.value_dim(mu.dim());
    let mut stream = RngStream::derive(seed, &[0xe2, t]);
    let vals: Vec<Vec<f64>> = mu.atoms().map(|(_, g)| x.cocycle(g)).collect::<Result<_>>()?;
    let mut phi0 = vec![0.0; m];
    for ((w, _), v) in mu.atoms().zip(&vals) {
        for (a, b) in phi0.iter_mut().zip(v) {
            *a += w * b;
        }
    }
    let mut within = vec![0.0; m * m];
    for ((w, _), v) in mu.atoms().zip(&vals) {
        let c: Vec<f64> = v.iter().zip(&phi0).map(|(a, b)| a - b).collect();
        outer_add(&mut within, &c, &c, w);
    }
    let i = mu.sample_index(&mut stream);
    let x1 = vals[i].clone();
    x = x.act(mu.atom(i))?;
    let mut phis = Vec::with_capacity(k_max.saturating_sub(1));
    for _ in 2..=k_max {
        phis.push(conditional_mean(mu, &x)?);
        x = x.act(mu.atom(mu.sample_index(&mut stream)))?;
    }
    Ok(SeriesTrial { within, phi0, x1, phis })
}

/// Mean and entrywise standard error of `(a_t − ā)(b_t − b̄)ᵗ`.
fn cross_cov(a: &[&[f64]], b: &[&[f64]]) -> (Vec<f64>, Vec<f64>) {
    let n = a.len() as f64;
    let m = a[0].len();
    let mean = |xs: &[&[f64]]| -> Vec<f64> { (0..m).map(|j| xs.iter().map(|x| x[j]).sum::<f64>() / n).collect() };
    let (ma, mb) = (mean(a), mean(b));
    let mut c = vec![0.0; m * m];
    let mut c2 = vec![0.0; m * m];
    for (x, y) in a.iter().zip(b) {
        for i in 0..m {
            for j in 0..m {
                let v = (x[i] - ma[i]) * (y[j] - mb[j]);
                c[i * m + j] += v;
                c2[i * m + j] += v * v;
            }
        }
    }
    let cov: Vec<f64> = c.iter().map(|v| v / (n - 1.0)).collect();
    let se = c
        .iter()
        .zip(&c2)
        .map(|(s, s2)| {
            let mu = s / n;
            ((s2 / n - mu * mu).max(0.0) / (n - 1.0)).sqrt()
        })
        .collect();
    (cov, se)
}

/// Truncated series `Var(X₁) + Σ_{k≥2} (Cov(X₁, X_k) + Cov(X_k, X₁))` with
/// `X_k = σ(Y_k, A_{k−1}W₀)`. `X_k` for `k ≥ 2` is replaced by its
/// conditional mean given the past, and `Var(X₁)` is split into the exact
/// within-step part and the variance of `φ(W₀)`. Stops after three
/// consecutive lags with every entry inside two standard errors of zero, or
/// at `k_max`.
pub fn sigma_series(
    mu: &AtomicMeasure,
    kind: CocycleKind,
    k_max: usize,
    trials: usize,
    burnin: usize,
    seed: u64,
) -> Result<CovarianceEstimate> {
    if k_max == 0 || trials < 2 {
        return Err(Error::Validation("need K >= 1 and at least two trials".into()));
    }
    let rows: Vec<Result<SeriesTrial>> = (0..trials as u64)
        .into_par_iter()
        .map(|t| match kind {
            CocycleKind::Norm => series_trial::<ProjPoint<f64>>(mu, k_max, burnin, seed, t),
            CocycleKind::Iwasawa => series_trial::<Flag<f64>>(mu, k_max, burnin, seed, t),
            CocycleKind::Cartan => Err(Error::InvalidKind("the series needs a cocycle; use batch means for Cartan")),
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let m = rows[0].phi0.len();
    let n = trials as f64;

    let mut var = vec![0.0; m * m];
    for r in &rows {
        for (a, b) in var.iter_mut().zip(&r.within) {
            *a += b / n;
        }
    }
    let phi0: Vec<&[f64]> = rows.iter().map(|r| r.phi0.as_slice()).collect();
    let (cphi, sphi) = cross_cov(&phi0, &phi0);
    for (a, b) in var.iter_mut().zip(&cphi) {
        *a += b;
    }
    let within_se = {
        let mut s2 = vec![0.0; m * m];
        for r in &rows {
            for (i, v) in r.within.iter().enumerate() {
                s2[i] += (v - var[i] + cphi[i]).powi(2);
            }
        }
        s2.into_iter().zip(&sphi).map(|(s, p)| (s / (n - 1.0) / n + p * p).sqrt()).collect::<Vec<_>>()
    };
    let to_mat = |v: Vec<f64>| Matrix::from_row_major(m, v).expect("square");
    let mut terms = vec![CovTerm { k: 1, term: to_mat(var.clone()), stderr: to_mat(within_se.clone()) }];
    let mut total = var;
    let mut quiet = 0;
    let mut truncation = 1;
    let x1: Vec<&[f64]> = rows.iter().map(|r| r.x1.as_slice()).collect();
    for k in 2..=k_max {
        let xk: Vec<&[f64]> = rows.iter().map(|r| r.phis[k - 2].as_slice()).collect();
        let (c, se) = cross_cov(&x1, &xk);
        for i in 0..m {
            for j in 0..m {
                total[i * m + j] += c[i * m + j] + c[j * m + i];
            }
        }
        truncation = k;
        let small = c.iter().zip(&se).all(|(v, s)| v.abs() <= 2.0 * s);
        terms.push(CovTerm { k, term: to_mat(c), stderr: to_mat(se) });
        quiet = if small { quiet + 1 } else { 0 };
        if quiet >= 3 {
            break;
        }
    }
    let stderr_scale = terms
        .iter()
        .map(|t| {
            let s = t.stderr.max_abs();
            if t.k == 1 { s * s } else { 4.0 * s * s }
        })
        .sum::<f64>()
        .sqrt();
    let (sigma_hat, clipped) = psd_project(&to_mat(total));
    Ok(CovarianceEstimate { sigma_hat, method: CovarianceMethod::Series, truncation, stderr_scale, clipped, terms })
}

/// Batch-means estimate from paths of increments `paths[path][step][coord]`.
/// Increments are centered by their grand mean; each path is cut into
/// nonoverlapping batches of `batch_len` steps.
pub fn sigma_batch_means(paths: &[Vec<Vec<f64>>], batch_len: usize) -> Result<CovarianceEstimate> {
    if batch_len == 0 || paths.is_empty() {
        return Err(Error::Validation("need batch_len >= 1 and at least one path".into()));
    }
    let len = paths.iter().map(|p| p.len()).min().unwrap_or(0);
    if len < 10 * batch_len {
        return Err(Error::TooShort { needed: 10 * batch_len, got: len });
    }
    let m = paths[0][0].len();
    let mut grand = vec![0.0; m];
    let mut count = 0.0;
    for p in paths {
        for x in p {
            for (g, v) in grand.iter_mut().zip(x) {
                *g += v;
            }
            count += 1.0;
        }
    }
    grand.iter_mut().for_each(|g| *g /= count);
    let mut sums = Vec::new();
    for p in paths {
        for chunk in p.chunks_exact(batch_len) {
            let mut s = vec![0.0; m];
            for x in chunk {
                for ((a, v), g) in s.iter_mut().zip(x).zip(&grand) {
                    *a += v - g;
                }
            }
            sums.push(s);
        }
    }
    let b = sums.len() as f64;
    let mut acc = vec![0.0; m * m];
    for s in &sums {
        outer_add(&mut acc, s, s, 1.0 / ((b - 1.0) * batch_len as f64));
    }
    let sigma = Matrix::from_row_major(m, acc)?;
    let (sigma_hat, clipped) = psd_project(&sigma);
    let stderr_scale = sigma_hat.max_abs() * (2.0 / (b - 1.0)).sqrt();
    Ok(CovarianceEstimate {
        sigma_hat,
        method: CovarianceMethod::BatchMeans,
        truncation: sums.len(),
        stderr_scale,
        clipped,
        terms: Vec::new(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReducedCovariance {
    pub a: Matrix<f64>,
    pub m: usize,
    pub eigvals: Vec<f64>,
    /// `max |AΣAᵗ − J_m|`.
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Reduction {
    /// `Σ = 0`: nothing to reduce.
    Zero,
    Reduced(ReducedCovariance),
}

/// `AΣAᵗ` with error-free products and compensated sums, so that the
/// residual reflects `A` rather than rounding in the check itself.
fn sandwich_compensated(a: &Matrix<f64>, sigma: &Matrix<f64>) -> Matrix<f64> {
    let d = a.dim();
    let mut out = Matrix::zeros(d);
    for i in 0..d {
        for j in 0..d {
            let (mut sum, mut comp) = (0.0f64, 0.0f64);
            let mut add = |x: f64| {
                let t = sum + x;
                comp += if sum.abs() >= x.abs() { (sum - t) + x } else { (x - t) + sum };
                sum = t;
            };
            for k in 0..d {
                for l in 0..d {
                    let p = a[(i, k)] * sigma[(k, l)];
                    let pe = a[(i, k)].mul_add(sigma[(k, l)], -p);
                    let q = p * a[(j, l)];
                    add(q);
                    add(p.mul_add(a[(j, l)], -q));
                    add(pe * a[(j, l)]);
                }
            }
            out[(i, j)] = sum + comp;
        }
    }
    out
}

/// One refinement step: re-diagonalize the leading `m × m` block of `AΣAᵗ`,
/// then make the remaining rows `Σ`-orthogonal to the leading ones.
fn refine_reduction(a: &mut Matrix<f64>, sigma: &Matrix<f64>, m: usize) {
    let d = a.dim();
    let b = sandwich_compensated(a, sigma);
    let mut c = Matrix::zeros(m);
    for i in 0..m {
        for j in 0..m {
            c[(i, j)] = b[(i, j)];
        }
    }
    let e = sym_eigen(&c);
    if e.values.iter().any(|&v| !(v > 0.0)) {
        return;
    }
    let old = a.clone();
    for i in 0..m {
        let g = 1.0 / e.values[i].sqrt();
        for col in 0..d {
            a[(i, col)] = g * (0..m).map(|k| e.vectors[(k, i)] * old[(k, col)]).sum::<f64>();
        }
    }
    for i in m..d {
        let sv: Vec<f64> = (0..d).map(|l| (0..d).map(|k| a[(i, k)] * sigma[(k, l)]).sum()).collect();
        for j in 0..m {
            let coef: f64 = (0..d).map(|l| sv[l] * a[(j, l)]).sum();
            for col in 0..d {
                a[(i, col)] -= coef * a[(j, col)];
            }
        }
    }
}

/// Builds `A` with `AΣAᵗ = J_m`, the diagonal matrix with `m = rank Σ` leading
/// ones. With `Σ = P D Pᵗ`, `Δ = diag(λ₁, …, λ_m, λ_m, …, λ_m)` and
/// `A = Δ^{−1/2} Pᵗ`.
pub fn covariance_reduction(sigma: &Matrix<f64>) -> Result<Reduction> {
    let d = sigma.dim();
    let asym = sigma.sub(&sigma.transpose()).max_abs();
    if asym > 1e-12 * sigma.max_abs().max(1.0) {
        return Err(Error::Validation(format!("matrix not symmetric (max asymmetry {asym})")));
    }
    let eig = sym_eigen(sigma);
    let top = eig.values[0];
    if let Some(&low) = eig.values.last() {
        if low < -1e-10 * top.abs().max(1.0) {
            return Err(Error::Validation(format!("matrix not PSD (eigenvalue {low})")));
        }
    }
    if !(top > 0.0) {
        return Ok(Reduction::Zero);
    }
    let eigvals: Vec<f64> = eig.values.iter().map(|&v| v.max(0.0)).collect();
    let m = eigvals.iter().filter(|&&v| v > RANK_TOL * top).count();
    let mut a = Matrix::zeros(d);
    for i in 0..d {
        let gamma = 1.0 / eigvals[i.min(m - 1)].sqrt();
        for j in 0..d {
            a[(i, j)] = gamma * eig.vectors[(j, i)];
        }
    }
    let mut j_m = Matrix::zeros(d);
    for i in 0..m {
        j_m[(i, i)] = 1.0;
    }
    refine_reduction(&mut a, sigma, m);
    let residual = sandwich_compensated(&a, sigma).sub(&j_m).max_abs();
    Ok(Reduction::Reduced(ReducedCovariance { a, m, eigvals, residual }))
}

/// `G(t) = ∫_t^∞ 2 s^{p−2} φ(s) ds`.
fn envelope_tail(t: f64, p: f64) -> f64 {
    let a = 0.5 * (p - 1.0);
    2f64.powf(0.5 * (p - 2.0)) / std::f64::consts::PI.sqrt() * gamma(a) * gamma_ur(a, 0.5 * t * t)
}

/// `∫₀¹ (1 ∨ Φ⁻¹(1 − u/2))^{p−2} Q(u) du` for the empirical quantile
/// function `Q` of `|X|`, integrated exactly on each quantile step.
///
/// The weight has the primitive `F(u) = G(Φ⁻¹(1 − u/2))` for
/// `u ≤ u* = 2(1 − Φ(1))` and `F(u) = G(1) + u − u*` above.
pub fn envelope_norm(samples: &[f64], p: f64) -> Result<f64> {
    if !(p > 2.0) {
        return Err(Error::BadExponent(p));
    }
    if samples.is_empty() {
        return Err(Error::Validation("envelope norm of an empty sample".into()));
    }
    let mut q: Vec<f64> = samples.iter().map(|x| x.abs()).collect();
    q.sort_by(|a, b| b.total_cmp(a));
    let n = q.len();
    let u_star = 2.0 * normal::sf(1.0);
    let g1 = envelope_tail(1.0, p);
    let prim = |u: f64| -> f64 {
        if u <= 0.0 {
            0.0
        } else if u <= u_star {
            envelope_tail(normal::quantile(1.0 - 0.5 * u), p)
        } else {
            g1 + (u - u_star)
        }
    };
    let step = 1.0 / n as f64;
    let mut total = 0.0;
    let mut lo = 0.0;
    for (j, &qj) in q.iter().enumerate() {
        let hi = prim((j + 1) as f64 / n as f64);
        total += qj * (hi - lo).max(step);
        lo = hi;
    }
    Ok(total)
}
