use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;
use randwalk::cocycles::{cocycle_identity_residual, iwasawa_cocycle, CocycleKind, CocycleSpace, SpacePoint};
use randwalk::contraction::{contraction_index, coupling_coefficient, fiber_occupation, proximality_decay};
use randwalk::estimators::{
    lyapunov, sigma_batch_means, sigma_series, walk_sums, CovarianceEstimate, LyapunovMethod,
};
use randwalk::martcouple::{
    asip_deviation, block_scheme, couple_blocks, simulate_driven, CouplingLaw, DrivenMartingale, Mode,
};
use randwalk::matgroup::{sym_eigen, Flag, GroupElement, Matrix, ProjPoint};
use randwalk::measures::{sample_step, AtomicMeasure};
use randwalk::rng::RngStream;
use randwalk::stats::median;
use randwalk::tailbounds::{calibrate_and_validate, simulate_maxima};
use randwalk::wasserstein::{w1_1d_gaussian, w1_exact, EmpiricalMeasure};
use randwalk::{Error, Result};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{Experiment, ExperimentConfig};
use crate::output::{fmt_f, OutputSet, Table};
use crate::rate::{fit_points, RateFit};

/// Lag cap of the covariance series.
pub const SIGMA_K_MAX: usize = 64;
/// Sample size for the exact transport distance in dimension ≥ 2.
pub const EXACT_SAMPLES: usize = 256;
/// Calibration threshold for `C_p`, in units of `σ√n`.
pub const TAIL_CALIBRATION: f64 = 3.0;
/// Validation thresholds, in units of `σ√n`.
pub const TAIL_VALIDATION: [f64; 5] = [3.4, 3.8, 4.2, 4.6, 5.0];
/// Mean log ratios per pair in the contraction index.
pub const CONTRACTION_TRIALS: usize = 32;
/// Steps and screened pairs for the coupling coefficient curve (q = 1).
pub const COUPLING_K: usize = 8;
pub const COUPLING_PAIRS: usize = 8;
/// Steps per product in the cocycle identity check.
pub const CHECK_PRODUCT_LEN: usize = 4;

#[derive(Debug)]
pub struct RunOutput {
    pub files: Vec<PathBuf>,
    pub manifest: PathBuf,
    /// Headline numbers of the run, also stored in the manifest.
    pub summary: Value,
}

/// SHA-256 of the config as canonical JSON.
pub fn config_hash(config: &ExperimentConfig) -> String {
    let bytes = serde_json::to_vec(config).expect("config serializes");
    hex::encode(Sha256::digest(&bytes))
}

struct Products {
    tables: Vec<Table>,
    json: Vec<(String, Value)>,
    summary: Value,
}

impl Products {
    fn new(summary: Value) -> Self {
        Products { tables: Vec::new(), json: Vec::new(), summary }
    }
}

/// Runs one experiment and writes its CSV and JSON outputs plus a manifest
/// into `config.out`. Everything except the manifest's wall time is a pure
/// function of the config. On error no output files are left behind.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunOutput> {
    config.validate()?;
    let start = Instant::now();
    let products = match config.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Error::Io(e.to_string()))?
            .install(|| dispatch(config))?,
        None => dispatch(config)?,
    };
    let stem = config.stem();
    let mut out = OutputSet::new(&config.out)?;
    for t in &products.tables {
        let name = if t.kind == config.experiment.as_str() {
            format!("{stem}.csv")
        } else {
            format!("{stem}_{}.csv", t.kind)
        };
        out.write(&name, &t.to_bytes()?)?;
    }
    for (suffix, v) in &products.json {
        out.write(&format!("{stem}_{suffix}.json"), &to_pretty(v)?)?;
    }
    let names: Vec<String> = out
        .files()
        .iter()
        .filter_map(|p| p.file_name().map(|s| s.to_string_lossy().into_owned()))
        .collect();
    let manifest = json!({
        "experiment": config.experiment,
        "seed": config.seed,
        "config_hash": config_hash(config),
        "version": env!("CARGO_PKG_VERSION"),
        "wall_time_secs": start.elapsed().as_secs_f64(),
        "outputs": names,
        "config": config,
        "summary": products.summary,
    });
    let manifest_path = out.write(&format!("{stem}_manifest.json"), &to_pretty(&manifest)?)?;
    let files = out.commit();
    Ok(RunOutput { files, manifest: manifest_path, summary: products.summary })
}

fn to_pretty(v: &Value) -> Result<Vec<u8>> {
    let mut b = serde_json::to_vec_pretty(v).map_err(|e| Error::Io(e.to_string()))?;
    b.push(b'\n');
    Ok(b)
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

fn dispatch(c: &ExperimentConfig) -> Result<Products> {
    match c.experiment {
        Experiment::Simulate => simulate(c, &c.load_measure()?),
        Experiment::Lyapunov => lyapunov_exp(c, &c.load_measure()?),
        Experiment::Sigma => sigma_exp(c, &c.load_measure()?),
        Experiment::CltRate => clt_rate(c, &c.load_measure()?),
        Experiment::Asip => asip(c, &c.load_martingale()?),
        Experiment::Contraction => match c.cocycle {
            CocycleKind::Norm => contraction::<ProjPoint<f64>>(c, &c.load_measure()?),
            _ => contraction::<Flag<f64>>(c, &c.load_measure()?),
        },
        Experiment::Fiber => fiber(c, &c.load_measure()?),
        Experiment::FukNagaev => fuk_nagaev(c, &c.load_martingale()?),
        Experiment::CocycleCheck => cocycle_check(c, &c.load_measure()?),
    }
}

fn last_n(c: &ExperimentConfig) -> usize {
    *c.n.last().expect("validated grid")
}

fn simulate(c: &ExperimentConfig, mu: &AtomicMeasure) -> Result<Products> {
    let n = last_n(c);
    let grid: Vec<usize> = (1..=n).collect();
    let sums = walk_sums(mu, c.cocycle, &grid, c.replicates, c.burnin, c.seed)?;
    let mut t = Table::new("simulate", &["replicate", "k", "component", "value"]);
    for (r, path) in sums.iter().enumerate() {
        for (k, v) in grid.iter().zip(path) {
            for (j, x) in v.iter().enumerate() {
                t.push(vec![r.to_string(), k.to_string(), j.to_string(), fmt_f(*x)]);
            }
        }
    }
    let mut p = Products::new(json!({ "n": n, "replicates": c.replicates }));
    p.tables.push(t);
    Ok(p)
}

fn lyapunov_exp(c: &ExperimentConfig, mu: &AtomicMeasure) -> Result<Products> {
    let mut t = Table::new("lyapunov", &["n", "method", "component", "lambda_hat", "stderr", "replicates"]);
    let mut last = Vec::new();
    for &n in &c.n {
        for method in [LyapunovMethod::Endpoint, LyapunovMethod::Conditional] {
            let e = lyapunov(mu, c.cocycle, method, n, c.replicates, c.burnin, c.seed)?;
            let mname = to_value(&method).as_str().unwrap_or_default().to_string();
            for (j, (l, s)) in e.lambda_hat.iter().zip(&e.stderr).enumerate() {
                t.push(vec![n.to_string(), mname.clone(), j.to_string(), fmt_f(*l), fmt_f(*s), c.replicates.to_string()]);
            }
            last.push(e);
        }
    }
    let tail = &last[last.len() - 2..];
    let mut p = Products::new(json!({ "lambda_hat": tail.iter().map(to_value).collect::<Vec<_>>() }));
    p.tables.push(t);
    Ok(p)
}

/// `σ(A_n)`-increments of `paths` walks of length `n`, for batch means.
fn increment_paths(mu: &AtomicMeasure, kind: CocycleKind, n: usize, paths: usize, burnin: usize, seed: u64) -> Result<Vec<Vec<Vec<f64>>>> {
    let grid: Vec<usize> = (1..=n).collect();
    let sums = walk_sums(mu, kind, &grid, paths, burnin, seed)?;
    Ok(sums
        .into_iter()
        .map(|s| {
            let mut prev = vec![0.0; s[0].len()];
            s.into_iter()
                .map(|v| {
                    let inc = v.iter().zip(&prev).map(|(a, b)| a - b).collect();
                    prev = v;
                    inc
                })
                .collect()
        })
        .collect())
}

fn estimate_sigma(c: &ExperimentConfig, mu: &AtomicMeasure, seed: u64) -> Result<CovarianceEstimate> {
    match c.cocycle {
        CocycleKind::Cartan => {
            let n = last_n(c).max(1000);
            let batch = ((n as f64).sqrt() as usize).max(1);
            let paths = increment_paths(mu, c.cocycle, n, c.replicates.min(64), c.burnin, seed)?;
            sigma_batch_means(&paths, batch)
        }
        kind => sigma_series(mu, kind, SIGMA_K_MAX, c.replicates.max(2), c.burnin, seed),
    }
}

fn sigma_table(est: &CovarianceEstimate) -> Table {
    let mut t = Table::new("sigma", &["i", "j", "sigma", "method", "truncation", "stderr_scale"]);
    let method = to_value(&est.method).as_str().unwrap_or_default().to_string();
    let m = est.sigma_hat.dim();
    for i in 0..m {
        for j in 0..m {
            t.push(vec![
                i.to_string(),
                j.to_string(),
                fmt_f(est.sigma_hat[(i, j)]),
                method.clone(),
                est.truncation.to_string(),
                fmt_f(est.stderr_scale),
            ]);
        }
    }
    t
}

fn sigma_exp(c: &ExperimentConfig, mu: &AtomicMeasure) -> Result<Products> {
    let est = estimate_sigma(c, mu, c.seed)?;
    let mut p = Products::new(json!({ "sigma_hat": est.sigma_hat, "clipped": est.clipped, "truncation": est.truncation }));
    p.tables.push(sigma_table(&est));
    Ok(p)
}

/// Draws of `N(0, Σ)` through the eigendecomposition; draw `i` uses the
/// stream `(seed, i)` whatever the sample size.
fn gaussian_sample(sigma: &Matrix<f64>, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let eig = sym_eigen(sigma);
    let m = sigma.dim();
    (0..count)
        .map(|i| {
            let mut s = RngStream::derive(seed, &[0xc1, i as u64]);
            let z: Vec<f64> = (0..m).map(|_| s.normal()).collect();
            (0..m)
                .map(|r| (0..m).map(|k| eig.vectors[(r, k)] * eig.values[k].max(0.0).sqrt() * z[k]).sum())
                .collect()
        })
        .collect()
}

fn clt_rate(c: &ExperimentConfig, mu: &AtomicMeasure) -> Result<Products> {
    let est = estimate_sigma(c, mu, RngStream::derive(c.seed, &[0xc0]).next_u64())?;
    let sums = walk_sums(mu, c.cocycle, &c.n, c.replicates, c.burnin, c.seed)?;
    let m = sums[0][0].len();
    let mut t = Table::new("clt_rate", &["n", "distance", "method", "samples", "seed"]);
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (j, &n) in c.n.iter().enumerate() {
        let rows: Vec<&Vec<f64>> = sums.iter().map(|r| &r[j]).collect();
        let mean: Vec<f64> = (0..m).map(|k| rows.iter().map(|r| r[k]).sum::<f64>() / rows.len() as f64).collect();
        let scale = (n as f64).sqrt();
        let centered: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| r.iter().zip(&mean).map(|(a, b)| (a - b) / scale).collect())
            .collect();
        let (d, method, samples) = if m == 1 {
            let xs: Vec<f64> = centered.iter().map(|v| v[0]).collect();
            let emp = EmpiricalMeasure::from_scalars(&xs)?;
            (w1_1d_gaussian(&emp, est.sigma_hat[(0, 0)].max(0.0).sqrt())?, "quantile", xs.len())
        } else {
            let k = centered.len().min(EXACT_SAMPLES);
            let a = EmpiricalMeasure::new(&centered[..k])?;
            let b = EmpiricalMeasure::new(&gaussian_sample(&est.sigma_hat, k, c.seed))?;
            (w1_exact(&a, &b)?, "exact", k)
        };
        t.push(vec![n.to_string(), fmt_f(d), method.to_string(), samples.to_string(), c.seed.to_string()]);
        xs.push(n as f64);
        ys.push(d);
    }
    let fit: Option<RateFit> = if xs.len() >= 3 { Some(fit_points(&xs, &ys, "n", "distance")?) } else { None };
    let mut p = Products::new(json!({ "fit": fit, "sigma_hat": est.sigma_hat }));
    p.tables.push(t);
    p.tables.push(sigma_table(&est));
    Ok(p)
}

fn coupling_law(mart: &DrivenMartingale, scheme: &randwalk::martcouple::BlockScheme, seed: u64) -> Result<CouplingLaw> {
    match CouplingLaw::exact(mart, scheme) {
        Err(Error::AlphabetTooLarge { .. }) => CouplingLaw::sampled(mart, scheme, 1 << 16, seed),
        other => other,
    }
}

fn asip(c: &ExperimentConfig, mart: &DrivenMartingale) -> Result<Products> {
    let mut t = Table::new("asip", &["n", "replicate", "sup_dev", "ratio_as", "ratio_l1", "certified"]);
    let mut s = Table::new("asip_summary", &["n", "mode", "median_ratio", "replicates"]);
    let mut medians = Vec::new();
    for &n in &c.n {
        let scheme = block_scheme(n, c.p, c.mode)?;
        let h = scheme.horizon();
        let law = coupling_law(mart, &scheme, c.seed)?;
        let rows: Vec<Result<(f64, f64, f64, bool)>> = (0..c.replicates as u64)
            .into_par_iter()
            .map(|r| {
                let seed = RngStream::derive(c.seed, &[0xa5, h as u64, r]).next_u64();
                let path = simulate_driven(mart, h, seed)?;
                let coupled = couple_blocks(&path, &law, &scheme, seed)?;
                let a = asip_deviation(&coupled, c.p, 0.0)?;
                Ok((a.sup_dev, a.ratio_as, a.ratio_l1, a.certified))
            })
            .collect();
        let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
        for (r, (d, ra, rl, cert)) in rows.iter().enumerate() {
            t.push(vec![h.to_string(), r.to_string(), fmt_f(*d), fmt_f(*ra), fmt_f(*rl), cert.to_string()]);
        }
        let ratios: Vec<f64> = rows.iter().map(|r| if c.mode == Mode::As { r.1 } else { r.2 }).collect();
        let med = median(&ratios);
        s.push(vec![h.to_string(), c.mode.as_str().to_string(), fmt_f(med), c.replicates.to_string()]);
        medians.push(json!({ "n": h, "median_ratio": med }));
    }
    let mut p = Products::new(json!({ "mode": c.mode, "medians": medians }));
    p.tables.push(t);
    p.tables.push(s);
    Ok(p)
}

fn contraction<S: CocycleSpace>(c: &ExperimentConfig, mu: &AtomicMeasure) -> Result<Products> {
    let d = mu.dim();
    let index = contraction_index::<S>(mu, c.n[0], c.replicates, CONTRACTION_TRIALS, c.seed)?;
    let x = S::base(d);
    let mut s = RngStream::derive(c.seed, &[0xc7]);
    let y = loop {
        let y = x.match_fiber(S::random(d, &mut s));
        if x.dist(&y) > 1e-3 {
            break y;
        }
    };
    let curve = proximality_decay(mu, &x, &y, last_n(c), c.replicates, c.seed)?;
    let mut t = Table::new("decay", &["k", "median_log_dist"]);
    for (k, v) in curve.median_log_dist.iter().enumerate() {
        t.push(vec![(k + 1).to_string(), fmt_f(*v)]);
    }
    let coupling = coupling_coefficient::<S>(mu, COUPLING_K, 1.0, COUPLING_PAIRS, c.replicates.max(2), c.seed)?;
    let mut ct = Table::new("coupling", &["k", "estimate", "stderr", "trials"]);
    for e in &coupling {
        ct.push(vec![e.k.to_string(), fmt_f(e.estimate), fmt_f(e.stderr), e.trials.to_string()]);
    }
    let mut p = Products::new(json!({
        "index": index,
        "delta_hat": curve.delta_hat,
        "slope_stderr": curve.slope_stderr,
        "p_value": curve.p_value,
        "saturated_at": curve.saturated_at,
    }));
    p.tables.push(t);
    p.tables.push(ct);
    Ok(p)
}

fn fiber(c: &ExperimentConfig, mu: &AtomicMeasure) -> Result<Products> {
    let n = last_n(c);
    let start = Flag::standard(mu.dim());
    let occ: Vec<Result<_>> = (0..c.replicates as u64)
        .into_par_iter()
        .map(|r| fiber_occupation(mu, &start, n, RngStream::derive(c.seed, &[0xf5, r]).next_u64()))
        .collect();
    let occ = occ.into_iter().collect::<Result<Vec<_>>>()?;
    let mut t = Table::new("fiber", &["replicate", "n", "plus", "minus", "observations"]);
    for (r, o) in occ.iter().enumerate() {
        t.push(vec![r.to_string(), n.to_string(), fmt_f(o.plus), fmt_f(o.minus), o.observations.to_string()]);
    }
    let worst = occ.iter().map(|o| (o.plus - 0.5).abs()).fold(0.0, f64::max);
    let mut p = Products::new(json!({ "max_abs_deviation_from_half": worst }));
    p.tables.push(t);
    Ok(p)
}

fn fuk_nagaev(c: &ExperimentConfig, mart: &DrivenMartingale) -> Result<Products> {
    let sigma = mart.variance().sqrt();
    let mut t = Table::new(
        "tail_bound",
        &["n", "x", "role", "empirical", "wilson_lo", "wilson_hi", "bound_first_term", "bound_second_term", "bound", "c_p"],
    );
    let mut summary = Vec::new();
    for &n in &c.n {
        let maxima = simulate_maxima(mart, n, c.replicates, RngStream::derive(c.seed, &[0xfb, n as u64]).next_u64())?;
        let unit = sigma * (n as f64).sqrt();
        let xs: Vec<f64> = TAIL_VALIDATION.iter().map(|k| k * unit).collect();
        let (params, checks) = calibrate_and_validate(&maxima, n, sigma, c.p, TAIL_CALIBRATION * unit, &xs)?;
        for ch in &checks {
            t.push(vec![
                n.to_string(),
                fmt_f(ch.tail.x),
                if ch.calibration { "calibration" } else { "validation" }.to_string(),
                fmt_f(ch.tail.fraction),
                fmt_f(ch.tail.wilson_lo),
                fmt_f(ch.tail.wilson_hi),
                fmt_f(ch.bound.gaussian_term),
                fmt_f(ch.bound.polynomial_term),
                fmt_f(ch.bound.value),
                fmt_f(params.c_p),
            ]);
        }
        let covered = checks.iter().filter(|c| !c.calibration).all(|c| c.covered);
        summary.push(json!({ "n": n, "c_p": params.c_p, "validation_covered": covered }));
    }
    let mut p = Products::new(json!({ "sigma": sigma, "runs": summary }));
    p.tables.push(t);
    Ok(p)
}

fn random_product(mu: &AtomicMeasure, len: usize, s: &mut RngStream) -> GroupElement<f64> {
    (0..len).fold(GroupElement::identity(mu.dim()), |acc, _| acc.compose(sample_step(mu, s)))
}

fn cocycle_check(c: &ExperimentConfig, mu: &AtomicMeasure) -> Result<Products> {
    let len = c.n.first().copied().unwrap_or(CHECK_PRODUCT_LEN);
    let d = mu.dim();
    let rows: Vec<Result<[f64; 3]>> = (0..c.replicates as u64)
        .into_par_iter()
        .map(|r| {
            let mut s = RngStream::derive(c.seed, &[0xcc, r]);
            let g = random_product(mu, len, &mut s);
            let h = random_product(mu, len, &mut s);
            let x = ProjPoint::random(d, &mut s);
            let eta = Flag::random(d, &mut s);
            let rn = cocycle_identity_residual(CocycleKind::Norm, &g, &h, &SpacePoint::Proj(x))?;
            let ri = cocycle_identity_residual(CocycleKind::Iwasawa, &g, &h, &SpacePoint::Flag(eta.clone()))?;
            let det = g.matrix().det().abs().ln();
            let rd = (iwasawa_cocycle(&g, &eta)?.sum() - det).abs();
            Ok([rn, ri, rd])
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let mut t = Table::new("cocycle_check", &["triple", "norm_residual", "iwasawa_residual", "det_residual"]);
    let mut worst = [0.0f64; 3];
    for (i, r) in rows.iter().enumerate() {
        t.push(vec![i.to_string(), fmt_f(r[0]), fmt_f(r[1]), fmt_f(r[2])]);
        for k in 0..3 {
            worst[k] = worst[k].max(r[k]);
        }
    }
    let summary = json!({
        "triples": rows.len(),
        "product_len": len,
        "max_norm_residual": worst[0],
        "max_iwasawa_residual": worst[1],
        "max_det_residual": worst[2],
        "max_residual": worst.iter().copied().fold(0.0, f64::max),
    });
    let mut p = Products::new(summary.clone());
    p.tables.push(t);
    p.json.push(("residuals".into(), summary));
    Ok(p)
}
