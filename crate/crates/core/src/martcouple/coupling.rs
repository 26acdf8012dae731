use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use super::driven::{DrivenMartingale, MartPath};
use super::scheme::{normalization, BlockScheme, Mode};
use crate::error::{Error, Result};
use crate::normal;
use crate::rng::RngStream;

/// Largest support an exact block-sum law may have.
pub const MAX_EXACT_ATOMS: usize = 10_000_000;

/// Law of a lattice block sum with its two-sided cumulative masses.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockPmf {
    /// Lattice value of `pmf[0]`.
    pub min: i64,
    pub pmf: Vec<f64>,
    below: Vec<f64>,
    above: Vec<f64>,
}

impl BlockPmf {
    fn from_pmf(min: i64, pmf: Vec<f64>) -> Self {
        let n = pmf.len();
        let mut below = vec![0.0; n];
        for i in 1..n {
            below[i] = below[i - 1] + pmf[i - 1];
        }
        let mut above = vec![0.0; n];
        for i in (0..n.saturating_sub(1)).rev() {
            above[i] = above[i + 1] + pmf[i + 1];
        }
        BlockPmf { min, pmf, below, above }
    }

    /// `(value, mass)` pairs with positive mass.
    pub fn atoms(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.pmf
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(move |(i, &p)| (self.min + i as i64, p))
    }

    /// `(P(S < v), P(S = v), P(S > v))`.
    pub fn masses(&self, v: i64) -> (f64, f64, f64) {
        let i = v - self.min;
        if i < 0 {
            return (0.0, 0.0, 1.0);
        }
        let i = i as usize;
        if i >= self.pmf.len() {
            return (1.0, 0.0, 0.0);
        }
        (self.below[i], self.pmf[i], self.above[i])
    }

    /// `P(S ≤ v)`.
    pub fn cdf(&self, v: i64) -> f64 {
        let (b, p, _) = self.masses(v);
        b + p
    }
}

/// Exact conditional laws of block sums of `len` steps given the chain
/// state at the block start, for each `len` in `lens`, by dynamic
/// programming over `(state, running sum)`.
pub fn block_sum_laws(mart: &DrivenMartingale, lens: &[usize]) -> Result<BTreeMap<usize, Vec<BlockPmf>>> {
    mart.validate()?;
    let max_len = lens.iter().copied().max().unwrap_or(0);
    let amin = mart.alphabets.iter().flatten().map(|a| a.value).min().expect("nonempty");
    let amax = mart.alphabets.iter().flatten().map(|a| a.value).max().expect("nonempty");
    let range = (amax - amin) as usize;
    let atoms = max_len.saturating_mul(range).saturating_add(1);
    if atoms > MAX_EXACT_ATOMS {
        return Err(Error::AlphabetTooLarge { atoms, cap: MAX_EXACT_ATOMS });
    }
    let s = mart.states();
    let mut out: BTreeMap<usize, Vec<BlockPmf>> = lens.iter().map(|&l| (l, Vec::with_capacity(s))).collect();
    for start in 0..s {
        let mut f = vec![vec![0.0f64; 1]; s];
        f[start][0] = 1.0;
        for j in 0..max_len {
            let width = (j + 1) * range + 1;
            let mut g = vec![vec![0.0f64; width]; s];
            for (st, row) in f.iter().enumerate() {
                for (idx, &q) in row.iter().enumerate() {
                    if q == 0.0 {
                        continue;
                    }
                    for a in &mart.alphabets[st] {
                        let to = idx + (a.value - amin) as usize;
                        let qa = q * a.prob;
                        for (nxt, &t) in mart.transition[st].iter().enumerate() {
                            if t > 0.0 {
                                g[nxt][to] += qa * t;
                            }
                        }
                    }
                }
            }
            f = g;
            if let Some(tables) = out.get_mut(&(j + 1)) {
                let width = f[0].len();
                let pmf: Vec<f64> = (0..width).map(|i| f.iter().map(|r| r[i]).sum()).collect();
                tables.push(BlockPmf::from_pmf((j as i64 + 1) * amin, pmf));
            }
        }
    }
    Ok(out)
}

/// How a block sum is mapped to its Gaussian partner.
#[derive(Clone, Debug)]
pub enum CouplingLaw {
    /// Exact conditional law of a lattice chain.
    Exact { sigma: f64, tables: BTreeMap<usize, Vec<BlockPmf>> },
    /// Increments are iid `N(0, σ²)`: the quantile map is the identity.
    Gaussian { sigma: f64 },
    /// Empirical conditional law from simulated blocks. Not certified.
    Sampled { sigma: f64, tables: BTreeMap<(usize, usize), Vec<f64>> },
}

impl CouplingLaw {
    /// Exact laws for every block length used by `scheme`.
    pub fn exact(mart: &DrivenMartingale, scheme: &BlockScheme) -> Result<Self> {
        let mut lens: Vec<usize> = scheme.levels.iter().map(|l| l.block_len()).collect();
        lens.dedup();
        Ok(CouplingLaw::Exact { sigma: mart.variance().sqrt(), tables: block_sum_laws(mart, &lens)? })
    }

    /// Empirical laws from `samples` simulated blocks per `(state, len)`.
    pub fn sampled(mart: &DrivenMartingale, scheme: &BlockScheme, samples: usize, seed: u64) -> Result<Self> {
        mart.validate()?;
        let mut tables = BTreeMap::new();
        for level in &scheme.levels {
            let len = level.block_len();
            for state in 0..mart.states() {
                if tables.contains_key(&(state, len)) {
                    continue;
                }
                let mut stream = RngStream::derive(seed, &[0x5a, state as u64, len as u64]);
                let mut v: Vec<f64> = (0..samples).map(|_| block_sum_from(mart, state, len, &mut stream)).collect();
                v.sort_by(f64::total_cmp);
                tables.insert((state, len), v);
            }
        }
        Ok(CouplingLaw::Sampled { sigma: mart.variance().sqrt(), tables })
    }

    pub fn sigma(&self) -> f64 {
        match self {
            CouplingLaw::Exact { sigma, .. } | CouplingLaw::Gaussian { sigma } | CouplingLaw::Sampled { sigma, .. } => *sigma,
        }
    }

    pub fn certified(&self) -> bool {
        !matches!(self, CouplingLaw::Sampled { .. })
    }

    /// Gaussian partner `V` of block sum `sum` (lattice value `lattice`)
    /// started in `state`, using the tie-breaking uniform `jitter`.
    pub fn couple(&self, state: usize, len: usize, sum: f64, lattice: Option<i64>, jitter: f64) -> Result<f64> {
        let sd = self.sigma() * (len as f64).sqrt();
        match self {
            CouplingLaw::Gaussian { .. } => Ok(sum),
            CouplingLaw::Exact { tables, .. } => {
                let v = lattice.ok_or_else(|| Error::Validation("exact coupling needs lattice increments".into()))?;
                let pmf = tables
                    .get(&len)
                    .and_then(|t| t.get(state))
                    .ok_or_else(|| Error::Validation(format!("no block law for length {len}, state {state}")))?;
                let (below, at, above) = pmf.masses(v);
                Ok(gaussian_from_masses(below, at, above, jitter, sd))
            }
            CouplingLaw::Sampled { tables, .. } => {
                let s = tables
                    .get(&(state, len))
                    .ok_or_else(|| Error::Validation(format!("no sampled law for length {len}, state {state}")))?;
                let n = s.len() as f64;
                let below = s.partition_point(|&x| x < sum) as f64;
                let at = s.partition_point(|&x| x <= sum) as f64 - below;
                let pit = (below + jitter * (at + 1.0)) / (n + 1.0);
                Ok(sd * normal::quantile(pit))
            }
        }
    }
}

/// Randomized probability integral transform of an atom followed by the
/// Gaussian quantile, evaluated on whichever tail is smaller.
fn gaussian_from_masses(below: f64, at: f64, above: f64, jitter: f64, sd: f64) -> f64 {
    const TINY: f64 = 1e-300;
    if below <= above {
        sd * normal::quantile((below + jitter * at).max(TINY))
    } else {
        -sd * normal::quantile((above + (1.0 - jitter) * at).max(TINY))
    }
}

fn block_sum_from(mart: &DrivenMartingale, mut state: usize, len: usize, stream: &mut RngStream) -> f64 {
    let mut sum = 0i64;
    for _ in 0..len {
        let alpha = &mart.alphabets[state];
        let u = stream.uniform();
        let mut acc = 0.0;
        let mut v = alpha[alpha.len() - 1].value;
        for a in alpha {
            acc += a.prob;
            if u < acc {
                v = a.value;
                break;
            }
        }
        sum += v;
        let u = stream.uniform();
        let row = &mart.transition[state];
        let mut acc = 0.0;
        let mut next = row.len() - 1;
        for (j, &t) in row.iter().enumerate() {
            acc += t;
            if u < acc {
                next = j;
                break;
            }
        }
        state = next;
    }
    sum as f64 * mart.scale
}

/// iid `N(0, σ²)` increments summing to `v`: draw normals and shift each
/// by the mean defect.
pub fn skorohod_fill(v: f64, len: usize, sigma: f64, stream: &mut RngStream) -> Vec<f64> {
    if len == 1 {
        return vec![v];
    }
    let mut z: Vec<f64> = (0..len).map(|_| sigma * stream.normal()).collect();
    let shift = (v - z.iter().sum::<f64>()) / len as f64;
    for x in z.iter_mut() {
        *x += shift;
    }
    z
}

/// Unit-variance [`skorohod_fill`] on the stream derived from `seed`.
pub fn skorohod_split(v: f64, block_len: usize, seed: u64) -> Vec<f64> {
    let mut stream = RngStream::derive(seed, &[0x5c]);
    skorohod_fill(v, block_len, 1.0, &mut stream)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BlockPair {
    pub level: u32,
    pub k: usize,
    pub state: usize,
    pub u: f64,
    pub v: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LevelDeviation {
    pub level: u32,
    pub m: u32,
    pub d: f64,
    pub d1: f64,
    pub d2: f64,
}

/// Martingale and Gaussian partial sums on `1..=horizon`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoupledPath {
    pub m: Vec<f64>,
    pub t: Vec<f64>,
    pub blocks: Vec<BlockPair>,
    pub levels: Vec<LevelDeviation>,
    pub sup_dev: f64,
    pub certified: bool,
}

/// Couples every block of `scheme` with a Gaussian block sum and fills the
/// per-step Gaussian increments. Step 1 gets an independent normal. Block
/// `(L, k)` draws from the stream `(seed, L, k)`.
pub fn couple_blocks(path: &MartPath, law: &CouplingLaw, scheme: &BlockScheme, seed: u64) -> Result<CoupledPath> {
    let horizon = scheme.horizon();
    if path.len() < horizon {
        return Err(Error::TooShort { needed: horizon, got: path.len() });
    }
    let sigma = law.sigma();
    let jobs: Vec<(usize, u32, usize)> = scheme
        .levels
        .iter()
        .enumerate()
        .flat_map(|(li, lv)| (1..=lv.block_count()).map(move |k| (li, lv.level, k)))
        .collect();
    let coupled: Vec<Result<(BlockPair, Vec<f64>)>> = jobs
        .par_iter()
        .map(|&(li, level, k)| {
            let lv = &scheme.levels[li];
            let (start, end) = lv.interval(k);
            let len = end - start;
            let u: f64 = path.increments[start..end].iter().sum();
            let lattice = path.lattice.as_ref().map(|l| l[start..end].iter().sum::<i64>());
            let state = path.states[start];
            let mut stream = RngStream::derive(seed, &[level as u64, k as u64]);
            let jitter = stream.uniform_open();
            let v = law.couple(state, len, u, lattice, jitter)?;
            let z = skorohod_fill(v, len, sigma, &mut stream);
            Ok((BlockPair { level, k, state, u, v }, z))
        })
        .collect();
    let mut z = vec![0.0; horizon];
    z[0] = sigma * RngStream::derive(seed, &[0x21]).normal();
    let mut blocks = Vec::with_capacity(jobs.len());
    for (job, r) in jobs.iter().zip(coupled) {
        let (pair, incs) = r?;
        let (start, _) = scheme.levels[job.0].interval(job.2);
        z[start..start + incs.len()].copy_from_slice(&incs);
        blocks.push(pair);
    }
    let mut m = Vec::with_capacity(horizon);
    let mut t = Vec::with_capacity(horizon);
    let (mut sm, mut st) = (0.0, 0.0);
    for i in 0..horizon {
        sm += path.increments[i];
        st += z[i];
        m.push(sm);
        t.push(st);
    }
    let diff = |i: usize| if i == 0 { 0.0 } else { m[i - 1] - t[i - 1] };
    let sup_dev = (1..=horizon).map(|i| diff(i).abs()).fold(0.0, f64::max);
    let levels = scheme
        .levels
        .iter()
        .map(|lv| {
            let base = 1usize << lv.level;
            let d0 = diff(base);
            let d = (1..=base).map(|l| (diff(base + l) - d0).abs()).fold(0.0, f64::max);
            let mut d1 = 0.0f64;
            let mut d2 = 0.0f64;
            for k in 1..=lv.block_count() {
                let (s, e) = lv.interval(k);
                d1 = d1.max((diff(e) - d0).abs());
                let ds = diff(s);
                for l in s + 1..=e {
                    d2 = d2.max((diff(l) - ds).abs());
                }
            }
            LevelDeviation { level: lv.level, m: lv.m, d, d1, d2 }
        })
        .collect();
    Ok(CoupledPath { m, t, blocks, levels, sup_dev, certified: law.certified() })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AsipSummary {
    pub n: usize,
    pub sup_dev: f64,
    /// `sup_dev / (n^{1/p} (log n)^{a_p})` with the almost sure exponent.
    pub ratio_as: f64,
    /// Same with the `L¹` exponent.
    pub ratio_l1: f64,
    pub levels: Vec<LevelDeviation>,
    pub certified: bool,
}

impl AsipSummary {
    pub fn ratio(&self, mode: Mode) -> f64 {
        match mode {
            Mode::As => self.ratio_as,
            Mode::L1 => self.ratio_l1,
        }
    }
}

/// Deviation summary with both normalizations; `eps` enters the almost sure
/// exponent only.
pub fn asip_deviation(coupled: &CoupledPath, p: f64, eps: f64) -> Result<AsipSummary> {
    let n = coupled.m.len();
    if n < 2 {
        return Err(Error::TooShort { needed: 2, got: n });
    }
    Ok(AsipSummary {
        n,
        sup_dev: coupled.sup_dev,
        ratio_as: coupled.sup_dev / normalization(n, p, Mode::As, eps)?,
        ratio_l1: coupled.sup_dev / normalization(n, p, Mode::L1, eps)?,
        levels: coupled.levels.clone(),
        certified: coupled.certified,
    })
}

#[cfg(test)]
mod tests {
    use super::super::driven::{simulate_driven, simulate_gaussian, Innovation};
    use super::super::scheme::block_scheme;
    use super::*;

    #[test]
    fn rademacher_pair_law() {
        let laws = block_sum_laws(&DrivenMartingale::rademacher(), &[2]).unwrap();
        let atoms: Vec<(i64, f64)> = laws[&2][0].atoms().collect();
        assert_eq!(atoms, vec![(-2, 0.25), (0, 0.5), (2, 0.25)]);
    }

    #[test]
    fn too_large_alphabet() {
        let mut m = DrivenMartingale::rademacher();
        m.alphabets[0] = vec![Innovation { prob: 0.5, value: -1_000_000 }, Innovation { prob: 0.5, value: 1_000_000 }];
        assert!(matches!(block_sum_laws(&m, &[8]), Err(Error::AlphabetTooLarge { .. })));
    }

    #[test]
    fn gaussian_increments_couple_to_themselves() {
        let scheme = block_scheme(1024, 3.0, Mode::L1).unwrap();
        let path = simulate_gaussian(1.0, 1024, 5);
        let c = couple_blocks(&path, &CouplingLaw::Gaussian { sigma: 1.0 }, &scheme, 5).unwrap();
        for b in &c.blocks {
            assert_eq!(b.u, b.v);
        }
        for lv in &c.levels {
            let (s, e) = (1usize << lv.level, 2usize << lv.level);
            let drift = (c.m[e - 1] - c.t[e - 1]) - (c.m[s - 1] - c.t[s - 1]);
            assert!(drift.abs() < 1e-9);
        }
    }

    #[test]
    fn zero_increments_give_gaussian_noise() {
        let mut m = DrivenMartingale::rademacher();
        m.alphabets[0] = vec![Innovation { prob: 1.0, value: 0 }];
        let scheme = block_scheme(64, 3.0, Mode::As).unwrap();
        let path = simulate_driven(&m, 64, 1).unwrap();
        let law = CouplingLaw::Exact { sigma: 1.0, tables: block_sum_laws(&m, &[1, 2, 4, 8, 16, 32]).unwrap() };
        let c = couple_blocks(&path, &law, &scheme, 2).unwrap();
        assert!(c.blocks.iter().all(|b| b.u == 0.0));
        assert!(c.blocks.iter().any(|b| b.v != 0.0));
    }

    #[test]
    fn split_sums_to_v() {
        assert_eq!(skorohod_split(1.25, 1, 3), vec![1.25]);
        for len in [2, 7, 64, 1000] {
            let z = skorohod_split(-3.5, len, len as u64);
            assert!((z.iter().sum::<f64>() + 3.5).abs() < 1e-10);
        }
    }

    #[test]
    fn deviation_triangle() {
        let mart = DrivenMartingale::two_regime();
        let scheme = block_scheme(4096, 3.0, Mode::As).unwrap();
        let law = CouplingLaw::exact(&mart, &scheme).unwrap();
        let path = simulate_driven(&mart, 4096, 4).unwrap();
        let c = couple_blocks(&path, &law, &scheme, 4).unwrap();
        for lv in &c.levels {
            assert!(lv.d <= lv.d1 + lv.d2 + 1e-12);
        }
        let s = asip_deviation(&c, 3.0, 0.05).unwrap();
        assert!(s.ratio_as > 0.0 && s.ratio_l1 > s.ratio_as);
    }

    #[test]
    fn identical_paths_have_zero_deviation() {
        let c = CoupledPath { m: vec![1.0, 0.0, 1.0], t: vec![1.0, 0.0, 1.0], blocks: vec![], levels: vec![], sup_dev: 0.0, certified: true };
        assert_eq!(asip_deviation(&c, 3.0, 0.05).unwrap().sup_dev, 0.0);
    }
}
