use std::path::Path;

use randwalk::cocycles::CocycleKind;
use randwalk::contraction::{contraction_index, coupling_coefficient_at, proximality_decay};
use randwalk::estimators::{lyapunov, LyapunovMethod};
use randwalk::martcouple::{
    asip_deviation, block_scheme, couple_blocks, simulate_driven, CouplingLaw, DrivenMartingale, Mode,
};
use randwalk::matgroup::{Flag, ProjPoint};
use randwalk::measures::{walk, AtomicMeasure, Side};
use randwalk::normal;
use randwalk::stats::{ks_critical_1pct, ks_statistic, ks_two_sample, ks_two_sample_critical_1pct};

fn bundled(name: &str) -> AtomicMeasure {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../measures").join(name);
    AtomicMeasure::parse(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn left_and_right_walks_share_marginal_law() {
    let mu = bundled("gl2_mixed_sign.json");
    let n = 12;
    let count = 10_000u64;
    let top = |seed: u64, side: Side| {
        let w = walk(&mu, n, seed, side).unwrap();
        let p = w.products.last().unwrap();
        p.log_scale + p.mat.op_norm().ln()
    };
    let a: Vec<f64> = (0..count).map(|s| top(s, Side::Left)).collect();
    let b: Vec<f64> = (count..2 * count).map(|s| top(s, Side::Right)).collect();
    let d = ks_two_sample(&a, &b);
    assert!(d < ks_two_sample_critical_1pct(a.len(), b.len()), "KS {d}");
}

fn pooled_blocks(mart: &DrivenMartingale, paths: u64) -> Vec<(u32, usize, f64, f64, f64)> {
    let n = 4096;
    let scheme = block_scheme(n, 3.0, Mode::L1).unwrap();
    let law = CouplingLaw::exact(mart, &scheme).unwrap();
    let sigma = law.sigma();
    let mut out = Vec::new();
    for seed in 0..paths {
        let path = simulate_driven(mart, n, seed).unwrap();
        let c = couple_blocks(&path, &law, &scheme, seed + 1000).unwrap();
        for b in &c.blocks {
            let len = scheme.levels[b.level as usize].block_len() as f64;
            out.push((b.level, b.k, b.u / (sigma * len.sqrt()), b.v / (sigma * len.sqrt()), len));
        }
    }
    out
}

#[test]
fn coupled_gaussian_blocks_are_standard_normal() {
    for mart in [DrivenMartingale::rademacher(), DrivenMartingale::two_regime()] {
        let blocks = pooled_blocks(&mart, 250);
        assert!(blocks.len() >= 10_000, "{}", blocks.len());
        let v: Vec<f64> = blocks.iter().map(|b| b.3).collect();
        let d = ks_statistic(&v, normal::cdf);
        assert!(d < ks_critical_1pct(v.len()), "KS {d} over {}", v.len());
    }
}

#[test]
fn gaussian_blocks_independent_of_previous_block() {
    let blocks = pooled_blocks(&DrivenMartingale::two_regime(), 250);
    // V_{k,L} against U_{k−1,L} within the same path
    let mut xs = Vec::new();
    for w in blocks.windows(2) {
        if w[0].0 == w[1].0 && w[1].1 == w[0].1 + 1 {
            xs.push((w[1].3, w[0].2));
        }
    }
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().map(|p| p.0).sum::<f64>() / n, xs.iter().map(|p| p.1).sum::<f64>() / n);
    let cov: f64 = xs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / n;
    let vx: f64 = xs.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>() / n;
    let vy: f64 = xs.iter().map(|p| (p.1 - my).powi(2)).sum::<f64>() / n;
    let corr = cov / (vx * vy).sqrt();
    assert!(corr.abs() <= 3.0 / n.sqrt(), "corr {corr} over {n} pairs");
}

#[test]
fn almost_sure_ratio_stays_bounded() {
    let mart = DrivenMartingale::rademacher();
    let max_ratio = |n: usize| {
        let scheme = block_scheme(n, 3.0, Mode::As).unwrap();
        let law = CouplingLaw::exact(&mart, &scheme).unwrap();
        (0..50u64)
            .map(|s| {
                let path = simulate_driven(&mart, n, s).unwrap();
                let c = couple_blocks(&path, &law, &scheme, s + 77).unwrap();
                asip_deviation(&c, 3.0, 0.05).unwrap().ratio_as
            })
            .fold(0.0, f64::max)
    };
    let (lo, hi) = (max_ratio(1 << 10), max_ratio(1 << 14));
    assert!(hi <= 2.0 * lo, "{lo} -> {hi}");
}

#[test]
fn isometries_do_not_contract() {
    let mu = AtomicMeasure::parse(
        r#"{"dim": 2, "atoms": [{"w": 0.5, "m": [[0.6, -0.8], [0.8, 0.6]]}, {"w": 0.5, "m": [[1, 0], [0, -1]]}]}"#,
    )
    .unwrap();
    let idx = contraction_index::<ProjPoint<f64>>(&mu, 5, 40, 4, 1).unwrap();
    assert!(idx.index_hat.abs() <= 1e-9);
    let x = ProjPoint::basis(2, 0);
    let y = ProjPoint::new(vec![1.0, 1.0]).unwrap();
    let curve = proximality_decay(&mu, &x, &y, 40, 20, 2).unwrap();
    assert!(curve.delta_hat.abs() <= 1e-9);
}

#[test]
fn bundled_measures_contract() {
    for (name, flag) in [("sl2_dense.json", false), ("gl2_mixed_sign.json", true)] {
        let mu = bundled(name);
        let curve = if flag {
            let x = Flag::standard(2);
            let y = Flag::new(randwalk::matgroup::Matrix::from_rows(&[vec![0.6, -0.8], vec![0.8, 0.6]]).unwrap()).unwrap();
            proximality_decay(&mu, &x, &y, 40, 200, 3).unwrap()
        } else {
            let y = ProjPoint::new(vec![1.0, 2.0]).unwrap();
            proximality_decay(&mu, &ProjPoint::basis(2, 1), &y, 40, 200, 3).unwrap()
        };
        assert!(curve.delta_hat > 0.0 && curve.p_value < 0.01, "{name}: {curve:?}");
        // the sup over pairs is monotone, a single pair need not be
        let angles: Vec<ProjPoint<f64>> = (0..16)
            .map(|i| {
                let t = std::f64::consts::PI * i as f64 / 16.0;
                ProjPoint::new(vec![t.cos(), t.sin()]).unwrap()
            })
            .collect();
        let mut sup = vec![(0.0f64, 0.0f64); 6];
        for i in 0..angles.len() {
            for j in i + 1..angles.len() {
                let c = coupling_coefficient_at(&mu, &angles[i], &angles[j], 6, 1.0, 300, 4).unwrap();
                for (s, e) in sup.iter_mut().zip(&c) {
                    if e.estimate > s.0 {
                        *s = (e.estimate, e.stderr);
                    }
                }
            }
        }
        for w in sup.windows(2) {
            assert!(w[1].0 <= w[0].0 + 2.0 * (w[0].1 + w[1].1), "{name}: {sup:?}");
        }
    }
}

#[test]
fn norm_and_cartan_lyapunov_agree() {
    let mu = bundled("sl2_dense.json");
    let a = lyapunov(&mu, CocycleKind::Norm, LyapunovMethod::Endpoint, 500, 200, 200, 11).unwrap();
    let b = lyapunov(&mu, CocycleKind::Cartan, LyapunovMethod::Endpoint, 500, 200, 0, 11).unwrap();
    let joint = (a.stderr[0].powi(2) + b.stderr[0].powi(2)).sqrt();
    assert!((a.lambda_hat[0] - b.lambda_hat[0]).abs() <= 3.0 * joint + 1e-12, "{a:?} {b:?}");
}
