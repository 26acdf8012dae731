//! Wasserstein-1 distances between empirical measures and to the Gaussian.

use crate::error::{Error, Result};
use crate::normal;
use crate::rng::RngStream;

/// Largest dimension accepted by [`w1_exact`].
pub const EXACT_MAX_DIM: usize = 8;
/// Largest point count per side accepted by [`w1_exact`].
pub const EXACT_MAX_POINTS: usize = 512;

/// Equally weighted points in `ℝ^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalMeasure {
    dim: usize,
    data: Vec<f64>,
}

impl EmpiricalMeasure {
    pub fn new(points: &[Vec<f64>]) -> Result<Self> {
        let dim = points.first().map(|p| p.len()).ok_or_else(|| Error::Validation("empty measure".into()))?;
        if dim == 0 {
            return Err(Error::Validation("points must have dimension at least 1".into()));
        }
        let mut data = Vec::with_capacity(dim * points.len());
        for p in points {
            if p.len() != dim {
                return Err(Error::DimMismatch { expected: dim, got: p.len() });
            }
            if p.iter().any(|x| !x.is_finite()) {
                return Err(Error::Validation("non-finite coordinate".into()));
            }
            data.extend_from_slice(p);
        }
        Ok(EmpiricalMeasure { dim, data })
    }

    pub fn from_scalars(xs: &[f64]) -> Result<Self> {
        if xs.is_empty() {
            return Err(Error::Validation("empty measure".into()));
        }
        if xs.iter().any(|x| !x.is_finite()) {
            return Err(Error::Validation("non-finite coordinate".into()));
        }
        Ok(EmpiricalMeasure { dim: 1, data: xs.to_vec() })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    fn project(&self, theta: &[f64]) -> Vec<f64> {
        (0..self.len())
            .map(|i| self.point(i).iter().zip(theta).map(|(a, b)| a * b).sum())
            .collect()
    }
}

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

fn require_1d(a: &EmpiricalMeasure) -> Result<()> {
    if a.dim != 1 {
        return Err(Error::DimMismatch { expected: 1, got: a.dim });
    }
    Ok(())
}

/// Exact `W₁` on the line. Equal sizes use the sorted matching; unequal
/// sizes integrate `|F_a − F_b|` exactly.
pub fn w1_1d(a: &EmpiricalMeasure, b: &EmpiricalMeasure) -> Result<f64> {
    require_1d(a)?;
    require_1d(b)?;
    Ok(w1_sorted(&sorted(&a.data), &sorted(&b.data)))
}

fn w1_sorted(a: &[f64], b: &[f64]) -> f64 {
    if a.len() == b.len() {
        return a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64;
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut total = 0.0;
    let mut x = a[0].min(b[0]);
    while i < a.len() || j < b.len() {
        let next = match (a.get(i), b.get(j)) {
            (Some(&p), Some(&q)) => p.min(q),
            (Some(&p), None) => p,
            (None, Some(&q)) => q,
            (None, None) => unreachable!(),
        };
        total += (i as f64 / na - j as f64 / nb).abs() * (next - x);
        x = next;
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
    }
    total
}

/// `P(a < Z ≤ b)` from the tail that avoids cancellation.
fn normal_mass(a: f64, b: f64) -> f64 {
    if a > 0.0 {
        normal::sf(a) - normal::sf(b)
    } else {
        normal::cdf(b) - normal::cdf(a)
    }
}

/// `∫_a^b (x − σt) φ(t) dt`.
fn signed_piece(x: f64, sigma: f64, a: f64, b: f64) -> f64 {
    x * normal_mass(a, b) + sigma * (normal::pdf(b) - normal::pdf(a))
}

/// `∫₀¹ |Q_a(u) − σΦ⁻¹(u)| du`, exact on each quantile step: with
/// `u = Φ(t)` each step is `∫ |x − σt| φ(t) dt`, which has a closed form.
pub fn w1_1d_gaussian(a: &EmpiricalMeasure, sigma: f64) -> Result<f64> {
    require_1d(a)?;
    if !(sigma >= 0.0) {
        return Err(Error::Validation(format!("sigma must be nonnegative, got {sigma}")));
    }
    let xs = sorted(&a.data);
    let n = xs.len();
    if sigma == 0.0 {
        return Ok(xs.iter().map(|x| x.abs()).sum::<f64>() / n as f64);
    }
    let mut total = 0.0;
    let mut t0 = f64::NEG_INFINITY;
    for (j, &x) in xs.iter().enumerate() {
        let t1 = if j + 1 == n { f64::INFINITY } else { normal::quantile((j + 1) as f64 / n as f64) };
        let c = x / sigma;
        if t0 < c {
            total += signed_piece(x, sigma, t0, c.min(t1));
        }
        if c < t1 {
            total -= signed_piece(x, sigma, c.max(t0), t1);
        }
        t0 = t1;
    }
    Ok(total)
}

/// Exact `W₁` with Euclidean ground cost, solved as a transportation problem
/// (each point of `a` supplies `|b|` units, each point of `b` demands `|a|`)
/// by successive shortest paths with potentials.
pub fn w1_exact(a: &EmpiricalMeasure, b: &EmpiricalMeasure) -> Result<f64> {
    if a.dim != b.dim {
        return Err(Error::DimMismatch { expected: a.dim, got: b.dim });
    }
    if a.dim > EXACT_MAX_DIM || a.len() > EXACT_MAX_POINTS || b.len() > EXACT_MAX_POINTS {
        return Err(Error::TooLarge(format!(
            "exact W1 limited to dim <= {EXACT_MAX_DIM} and <= {EXACT_MAX_POINTS} points (got dim {}, {} and {} points); use w1_sliced",
            a.dim,
            a.len(),
            b.len()
        )));
    }
    let (na, nb) = (a.len(), b.len());
    let g = gcd(na, nb);
    let supply = (nb / g) as i64;
    let demand = (na / g) as i64;
    let cost: Vec<f64> = (0..na)
        .flat_map(|i| {
            (0..nb).map(move |j| a.point(i).iter().zip(b.point(j)).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt())
        })
        .collect();
    let total = transport(na, nb, &cost, supply, demand);
    Ok(total / (supply * na as i64) as f64)
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Minimum cost of shipping `supply` from each source to sinks demanding
/// `demand` each, with dense costs `cost[i*nb + j]`.
fn transport(na: usize, nb: usize, cost: &[f64], supply: i64, demand: i64) -> f64 {
    let nodes = na + nb;
    let mut flow = vec![0i64; na * nb];
    let mut left = vec![supply; na];
    let mut need = vec![demand; nb];
    let mut pot = vec![0.0f64; nodes];
    let mut dist = vec![0.0f64; nodes];
    let mut prev = vec![usize::MAX; nodes];
    let mut done = vec![false; nodes];
    let mut remaining = supply * na as i64;
    while remaining > 0 {
        dist.iter_mut().for_each(|d| *d = f64::INFINITY);
        prev.iter_mut().for_each(|p| *p = usize::MAX);
        done.iter_mut().for_each(|d| *d = false);
        for i in 0..na {
            if left[i] > 0 {
                dist[i] = 0.0;
            }
        }
        loop {
            let mut u = usize::MAX;
            let mut best = f64::INFINITY;
            for v in 0..nodes {
                if !done[v] && dist[v] < best {
                    best = dist[v];
                    u = v;
                }
            }
            if u == usize::MAX {
                break;
            }
            done[u] = true;
            if u < na {
                for j in 0..nb {
                    let v = na + j;
                    if done[v] {
                        continue;
                    }
                    let rc = (cost[u * nb + j] + pot[u] - pot[v]).max(0.0);
                    if dist[u] + rc < dist[v] {
                        dist[v] = dist[u] + rc;
                        prev[v] = u;
                    }
                }
            } else {
                let j = u - na;
                for i in 0..na {
                    if done[i] || flow[i * nb + j] == 0 {
                        continue;
                    }
                    let rc = (pot[u] - cost[i * nb + j] - pot[i]).max(0.0);
                    if dist[u] + rc < dist[i] {
                        dist[i] = dist[u] + rc;
                        prev[i] = u;
                    }
                }
            }
        }
        let sink = (0..nb)
            .filter(|&j| need[j] > 0 && dist[na + j].is_finite())
            .min_by(|&x, &y| dist[na + x].total_cmp(&dist[na + y]))
            .expect("a sink with demand is reachable");
        for v in 0..nodes {
            if dist[v].is_finite() {
                pot[v] += dist[v];
            }
        }
        let mut amount = need[sink];
        let mut v = na + sink;
        while prev[v] != usize::MAX {
            let u = prev[v];
            if u >= na {
                amount = amount.min(flow[v * nb + (u - na)]);
            }
            v = u;
        }
        amount = amount.min(left[v]);
        let source = v;
        let mut v = na + sink;
        while prev[v] != usize::MAX {
            let u = prev[v];
            if u < na {
                flow[u * nb + (v - na)] += amount;
            } else {
                flow[v * nb + (u - na)] -= amount;
            }
            v = u;
        }
        left[source] -= amount;
        need[sink] -= amount;
        remaining -= amount;
    }
    flow.iter().zip(cost).map(|(&f, &c)| f as f64 * c).sum()
}

/// Mean over `slices` random directions of the 1-d distance between the
/// projections. In dimension 1 this is [`w1_1d`].
pub fn w1_sliced(a: &EmpiricalMeasure, b: &EmpiricalMeasure, slices: usize, seed: u64) -> Result<f64> {
    if a.dim != b.dim {
        return Err(Error::DimMismatch { expected: a.dim, got: b.dim });
    }
    if slices == 0 {
        return Err(Error::Validation("need at least one slice".into()));
    }
    if a.dim == 1 {
        return w1_1d(a, b);
    }
    let mut stream = RngStream::derive(seed, &[0x51]);
    let mut total = 0.0;
    for _ in 0..slices {
        let theta = loop {
            let v: Vec<f64> = (0..a.dim).map(|_| stream.normal()).collect();
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n > 1e-12 {
                break v.into_iter().map(|x| x / n).collect::<Vec<_>>();
            }
        };
        total += w1_sorted(&sorted(&a.project(&theta)), &sorted(&b.project(&theta)));
    }
    Ok(total / slices as f64)
}
