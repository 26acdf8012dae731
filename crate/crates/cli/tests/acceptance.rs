//! Acceptance criteria 1 to 10. Run with
//! `cargo test -p randwalk-cli --test acceptance -- --nocapture`
//! to see one pass/fail line per criterion.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use randwalk::cocycles::{
    cocycle_identity_residual, iwasawa_cocycle, CocycleKind, CocycleSpace, SpacePoint,
};
use randwalk::estimators::{covariance_reduction, lyapunov, norm_cartan_gap, LyapunovMethod, Reduction};
use randwalk::martcouple::{block_sum_laws, DrivenMartingale, Mode};
use randwalk::matgroup::{qr_positive, svd, Flag, GroupElement, Matrix, ProjPoint};
use randwalk::measures::AtomicMeasure;
use randwalk::rng::RngStream;
use randwalk::stats::linear_fit;
use randwalk::tailbounds::maximal_tail_empirical;
use randwalk_cli::{run_experiment, Experiment, ExperimentConfig};
use serde_json::Value;

fn measure_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../measures").join(name)
}

fn measure(name: &str) -> AtomicMeasure {
    AtomicMeasure::parse(&std::fs::read_to_string(measure_path(name)).unwrap()).unwrap()
}

fn gaussian_matrix(d: usize, s: &mut RngStream) -> Matrix<f64> {
    Matrix::from_row_major(d, (0..d * d).map(|_| s.normal()).collect()).unwrap()
}

fn random_element(d: usize, s: &mut RngStream) -> GroupElement<f64> {
    loop {
        if let Ok(g) = GroupElement::new(gaussian_matrix(d, s)) {
            return g;
        }
    }
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn run(out: &Path, mut c: ExperimentConfig) -> Value {
    c.out = out.to_path_buf();
    run_experiment(&c).unwrap().summary
}

fn c1_linear_algebra() -> Outcome {
    let mut s = RngStream::derive(1, &[1]);
    let (mut qr_worst, mut svd_worst) = (0.0f64, 0.0f64);
    for d in 2..=8 {
        for _ in 0..1000 {
            let g = random_element(d, &mut s);
            let m = g.matrix();
            let norm = m.frobenius();
            let f = qr_positive(&g).unwrap();
            qr_worst = qr_worst.max(f.k.matmul(&f.r).sub(m).frobenius() / norm);
            let sv = svd(&g).unwrap();
            let recon = sv.u.matmul(&Matrix::diag(&sv.s)).matmul(&sv.v.transpose());
            svd_worst = svd_worst.max(recon.sub(m).frobenius() / norm);
        }
    }
    outcome(
        qr_worst <= 1e-10 && svd_worst <= 1e-10,
        format!("max relative residual qr {qr_worst:.2e}, svd {svd_worst:.2e} over 7000 matrices each"),
    )
}

fn c2_cocycle_identity() -> Outcome {
    let mut s = RngStream::derive(2, &[2]);
    let (mut norm_w, mut iwa_w, mut det_w) = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..10_000 {
        let d = 2 + i % 4;
        let g = random_element(d, &mut s);
        let h = random_element(d, &mut s);
        let x = ProjPoint::random(d, &mut s);
        let eta = Flag::random(d, &mut s);
        norm_w = norm_w.max(cocycle_identity_residual(CocycleKind::Norm, &g, &h, &SpacePoint::Proj(x)).unwrap());
        iwa_w = iwa_w
            .max(cocycle_identity_residual(CocycleKind::Iwasawa, &g, &h, &SpacePoint::Flag(eta.clone())).unwrap());
        let det = g.matrix().det().abs().ln();
        det_w = det_w.max((iwasawa_cocycle(&g, &eta).unwrap().sum() - det).abs());
    }
    outcome(
        norm_w <= 1e-9 && iwa_w <= 1e-9 && det_w <= 1e-9,
        format!("max residual norm {norm_w:.2e}, iwasawa {iwa_w:.2e}, coordinate sum vs log|det| {det_w:.2e}"),
    )
}

fn c3_covariance_reduction() -> Outcome {
    let mut s = RngStream::derive(3, &[3]);
    let mut worst = 0.0f64;
    let mut deficient = 0;
    for i in 0..1000 {
        let d = 2 + i % 5;
        let rank = if i % 3 == 0 { 1 + i % d } else { d };
        if rank < d {
            deficient += 1;
        }
        let cols: Vec<Vec<f64>> = (0..rank).map(|_| (0..d).map(|_| s.normal()).collect()).collect();
        let mut sigma = Matrix::zeros(d);
        for c in &cols {
            for a in 0..d {
                for b in 0..d {
                    sigma[(a, b)] += c[a] * c[b];
                }
            }
        }
        match covariance_reduction(&sigma).unwrap() {
            Reduction::Reduced(r) => {
                if r.m != rank {
                    return outcome(false, format!("rank {} detected as {}", rank, r.m));
                }
                worst = worst.max(r.residual);
            }
            Reduction::Zero => return outcome(false, "nonzero matrix reported as zero"),
        }
    }
    outcome(worst <= 1e-9, format!("max |AΣAᵗ − J_m| {worst:.2e} over 1000 matrices, {deficient} rank-deficient"))
}

fn c4_oracle_lyapunov() -> Outcome {
    let mu = measure("diag3.json");
    let oracle = [0.2 * 2f64.ln(), 0.4 * 3f64.ln(), 0.6 * 0.25f64.ln()];
    let iwa = lyapunov(&mu, CocycleKind::Iwasawa, LyapunovMethod::Conditional, 2000, 8, 100, 4).unwrap();
    let err = iwa.lambda_hat.iter().zip(&oracle).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let cartan = lyapunov(&mu, CocycleKind::Cartan, LyapunovMethod::Conditional, 20_000, 8, 0, 4).unwrap();
    let mut sorted = iwa.lambda_hat.clone();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let gap = cartan.lambda_hat.iter().zip(&sorted).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    outcome(
        err <= 1e-10 && gap <= 1e-3,
        format!("iwasawa vs closed form {err:.2e}; cartan vs sorted iwasawa {gap:.2e} at n = 20000"),
    )
}

fn c5_norm_vs_cartan() -> Outcome {
    let mu = measure("sl2_dense.json");
    let ns: Vec<usize> = (4..=12).map(|k| 1usize << k).collect();
    let gaps = norm_cartan_gap(&mu, &ns, 50, 5).unwrap();
    let x: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let f = linear_fit(&x, &gaps).unwrap();
    // one-sided 95% lower confidence bound for the slope, t quantile at 7 df
    let lower = f.slope - 1.895 * f.slope_stderr;
    outcome(
        lower <= 0.0,
        format!("slope of max gap vs log n {:.3e} (lower 95% bound {lower:.3e}), max gap {:.3}", f.slope, gaps.iter().copied().fold(0.0, f64::max)),
    )
}

fn clt_fit(out: &Path, measure_name: &str) -> (f64, f64) {
    let mut c = ExperimentConfig::new(Experiment::CltRate);
    c.measure = Some(measure_path(measure_name));
    c.n = (6..=14).map(|k| 1usize << k).collect();
    c.replicates = 10_000;
    c.seed = 6;
    let s = run(out, c);
    (s["fit"]["slope"].as_f64().unwrap(), s["fit"]["r2"].as_f64().unwrap())
}

fn c6_w1_rate(out: &Path) -> Outcome {
    let (s1, r1) = clt_fit(out, "skewed_1d.json");
    let (s2, r2) = clt_fit(out, "sl2_dense.json");
    outcome(
        s1 <= -0.40 && r1 >= 0.9 && s2 <= -0.40 && r2 >= 0.9,
        format!("iid increments slope {s1:.3} r2 {r1:.3}; SL2 norm walk slope {s2:.3} r2 {r2:.3}"),
    )
}

fn block_law_brute_force(mart: &DrivenMartingale, max_len: usize) -> f64 {
    let lens: Vec<usize> = (1..=max_len).collect();
    let laws = block_sum_laws(mart, &lens).unwrap();
    let mut worst = 0.0f64;
    for &len in &lens {
        for (s0, pmf) in laws[&len].iter().enumerate() {
            // enumerate every (innovation, next state) sequence
            let mut mass = std::collections::BTreeMap::<i64, f64>::new();
            let mut stack = vec![(s0, 0usize, 0i64, 1.0f64)];
            while let Some((s, k, sum, p)) = stack.pop() {
                if k == len {
                    *mass.entry(sum).or_default() += p;
                    continue;
                }
                for a in &mart.alphabets[s] {
                    for (t, &q) in mart.transition[s].iter().enumerate() {
                        if q > 0.0 {
                            stack.push((t, k + 1, sum + a.value, p * a.prob * q));
                        }
                    }
                }
            }
            let mut acc = 0.0;
            for (&v, &m) in &mass {
                acc += m;
                worst = worst.max((pmf.cdf(v) - acc).abs());
            }
        }
    }
    worst
}

fn c7_asip(out: &Path) -> Outcome {
    let mut c = ExperimentConfig::new(Experiment::Asip);
    c.n = vec![1 << 10, 1 << 12, 1 << 14];
    c.replicates = 50;
    c.mode = Mode::L1;
    c.seed = 7;
    let s = run(out, c);
    let med: Vec<f64> = s["medians"].as_array().unwrap().iter().map(|m| m["median_ratio"].as_f64().unwrap()).collect();
    let monotone = med.windows(2).all(|w| w[1] <= 1.15 * w[0]);
    let cdf_rad = block_law_brute_force(&DrivenMartingale::rademacher(), 16);
    let cdf_two = block_law_brute_force(&DrivenMartingale::two_regime(), 8);
    outcome(
        monotone && cdf_rad <= 1e-12 && cdf_two <= 1e-12,
        format!(
            "median ratios {:.4} {:.4} {:.4}; block cdf vs enumeration {cdf_rad:.1e} (rademacher, len <= 16), {cdf_two:.1e} (two-regime, len <= 8)",
            med[0], med[1], med[2]
        ),
    )
}

fn c8_fuk_nagaev(out: &Path) -> Outcome {
    let mut covered = Vec::new();
    for m in ["rademacher", "two_regime"] {
        let mut c = ExperimentConfig::new(Experiment::FukNagaev);
        c.martingale = Some(m.into());
        c.n = vec![100];
        c.replicates = 100_000;
        c.seed = 8;
        let s = run(out, c);
        covered.push((m, s["runs"][0]["validation_covered"].as_bool().unwrap(), s["runs"][0]["c_p"].as_f64().unwrap()));
    }
    let paths: Vec<Vec<f64>> = (0..16u32)
        .map(|mask| {
            (0..4)
                .scan(0.0, |acc, i| {
                    *acc += if mask >> i & 1 == 1 { 1.0 } else { -1.0 };
                    Some(*acc)
                })
                .collect()
        })
        .collect();
    let brute = maximal_tail_empirical(&paths, 4.0).unwrap().fraction;
    outcome(
        covered.iter().all(|c| c.1) && brute == 1.0 / 16.0,
        format!(
            "validation covered: {}; P(M4* >= 4) = {brute}",
            covered.iter().map(|(m, ok, cp)| format!("{m} {ok} (C_p {cp:.2e})")).collect::<Vec<_>>().join(", ")
        ),
    )
}

fn c9_fiber(out: &Path) -> Outcome {
    let mut c = ExperimentConfig::new(Experiment::Fiber);
    c.measure = Some(measure_path("gl2_mixed_sign.json"));
    c.n = vec![100_000];
    c.replicates = 4;
    c.seed = 9;
    let dev = run(out, c)["max_abs_deviation_from_half"].as_f64().unwrap();
    outcome(dev <= 0.01, format!("max |occupation − 1/2| {dev:.4} over 4 runs at n = 1e5"))
}

fn small_configs() -> Vec<ExperimentConfig> {
    let mk = |e: Experiment, m: Option<&str>, n: Vec<usize>, reps: usize| {
        let mut c = ExperimentConfig::new(e);
        c.measure = m.map(measure_path);
        c.n = n;
        c.replicates = reps;
        c.burnin = 50;
        c.seed = 10;
        c
    };
    let mut iwa = mk(Experiment::CltRate, Some("sl2_dense.json"), vec![16, 32, 64], 300);
    iwa.cocycle = CocycleKind::Iwasawa;
    let mut cartan = mk(Experiment::Lyapunov, Some("diag3.json"), vec![50, 100], 20);
    cartan.cocycle = CocycleKind::Cartan;
    let mut two = mk(Experiment::FukNagaev, None, vec![64], 5000);
    two.martingale = Some("two_regime".into());
    vec![
        mk(Experiment::Simulate, Some("sl2_dense.json"), vec![50], 4),
        mk(Experiment::Lyapunov, Some("sl2_dense.json"), vec![100, 200], 40),
        cartan,
        mk(Experiment::Sigma, Some("sl2_dense.json"), vec![100], 500),
        mk(Experiment::CltRate, Some("skewed_1d.json"), vec![16, 64, 256], 2000),
        iwa,
        mk(Experiment::Asip, None, vec![256, 1024], 30),
        mk(Experiment::Contraction, Some("sl2_dense.json"), vec![5, 40], 40),
        mk(Experiment::Fiber, Some("gl2_mixed_sign.json"), vec![5000], 6),
        two,
        mk(Experiment::CocycleCheck, Some("sl2_dense.json"), vec![], 500),
    ]
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    v.sort();
    v
}

fn c10_determinism() -> Outcome {
    let mut mismatched = Vec::new();
    let mut files = 0;
    for base in small_configs() {
        let dirs: Vec<tempfile::TempDir> = (0..2).map(|_| tempfile::tempdir().unwrap()).collect();
        for (dir, workers) in dirs.iter().zip([1, 8]) {
            let mut c = base.clone();
            c.workers = Some(workers);
            run(dir.path(), c);
        }
        let (a, b) = (csv_files(dirs[0].path()), csv_files(dirs[1].path()));
        files += a.len();
        if a.is_empty() || a != b {
            mismatched.push(base.experiment.to_string());
        }
    }
    outcome(
        mismatched.is_empty(),
        format!("{files} CSVs from {} runs compared across 1 and 8 workers; mismatched: {mismatched:?}", small_configs().len()),
    )
}

#[test]
fn acceptance() {
    let out = tempfile::tempdir().unwrap();
    let o = out.path();
    let criteria: Vec<(u32, Duration, Box<dyn Fn() -> Outcome + '_>)> = vec![
        (1, Duration::from_secs(10), Box::new(c1_linear_algebra)),
        (2, Duration::from_secs(30), Box::new(c2_cocycle_identity)),
        (3, Duration::from_secs(5), Box::new(c3_covariance_reduction)),
        (4, Duration::from_secs(10), Box::new(c4_oracle_lyapunov)),
        (5, Duration::from_secs(180), Box::new(c5_norm_vs_cartan)),
        (6, Duration::from_secs(600), Box::new(|| c6_w1_rate(o))),
        (7, Duration::from_secs(600), Box::new(|| c7_asip(o))),
        (8, Duration::from_secs(300), Box::new(|| c8_fuk_nagaev(o))),
        (9, Duration::from_secs(60), Box::new(|| c9_fiber(o))),
        (10, Duration::from_secs(600), Box::new(c10_determinism)),
    ];
    let mut failed = Vec::new();
    for (id, budget, f) in &criteria {
        let t = Instant::now();
        let r = f();
        let el = t.elapsed();
        let pass = r.pass && el <= *budget;
        println!(
            "criterion {id:>2}: {} | {} | {:.1}s (budget {}s)",
            if pass { "PASS" } else { "FAIL" },
            r.detail,
            el.as_secs_f64(),
            budget.as_secs()
        );
        if !pass {
            failed.push(*id);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
