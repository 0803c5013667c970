//! Synthetic clustering data, flow initializations, cluster extraction from
//! vertex functions and permutation-invariant accuracy.

use std::f64::consts::PI;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{check_len, mean, Signal};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledPointSet {
    pub points: Vec<[f64; 2]>,
    pub labels: Vec<usize>,
    pub seed: u64,
    pub noise_var: f64,
}

impl LabeledPointSet {
    pub fn n_clusters(&self) -> usize {
        self.labels.iter().max().map_or(0, |m| m + 1)
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n_clusters()];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MoonKind {
    Two,
    Three,
}

/// Arc parameter of the `i`-th of `m` evenly spaced points on a half circle.
fn arc_angle(i: usize, m: usize) -> f64 {
    if m == 1 {
        0.5 * PI
    } else {
        PI * i as f64 / (m - 1) as f64
    }
}

fn moons(kind: MoonKind, n_per_moon: usize, noise_var: f64, seed: u64) -> Result<LabeledPointSet> {
    if n_per_moon == 0 {
        return Err(Error::InvalidParameter("n_per_moon must be at least 1".into()));
    }
    if !(noise_var >= 0.0 && noise_var.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "noise variance must be >= 0, got {noise_var}"
        )));
    }
    let n_moons = match kind {
        MoonKind::Two => 2,
        MoonKind::Three => 3,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, noise_var.sqrt()).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut points = Vec::with_capacity(n_moons * n_per_moon);
    let mut labels = Vec::with_capacity(n_moons * n_per_moon);
    for moon in 0..n_moons {
        for i in 0..n_per_moon {
            let a = arc_angle(i, n_per_moon);
            let (x, y) = match moon {
                // upper arc of the unit circle
                0 => (a.cos(), a.sin()),
                // lower arc, interleaved with the first
                1 => (1.0 - a.cos(), 0.5 - a.sin()),
                // upper arc interleaved with the right end of the second
                _ => (3.0 + a.cos(), a.sin()),
            };
            points.push([x + rng.sample(noise), y + rng.sample(noise)]);
            labels.push(moon);
        }
    }
    Ok(LabeledPointSet {
        points,
        labels,
        seed,
        noise_var,
    })
}

/// Two interleaved half circles of radius 1 with Gaussian noise of variance
/// `noise_var`.
pub fn two_moons(n_per_moon: usize, noise_var: f64, seed: u64) -> Result<LabeledPointSet> {
    moons(MoonKind::Two, n_per_moon, noise_var, seed)
}

/// Two moons plus a third upper half circle shifted right by 3.
pub fn three_moons(n_per_moon: usize, noise_var: f64, seed: u64) -> Result<LabeledPointSet> {
    moons(MoonKind::Three, n_per_moon, noise_var, seed)
}

pub fn generate(kind: MoonKind, n_per_moon: usize, noise_var: f64, seed: u64) -> Result<LabeledPointSet> {
    moons(kind, n_per_moon, noise_var, seed)
}

/// I.i.d. uniform values on `[-1, 1]`.
pub fn random_init(n: usize, seed: u64) -> Signal {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Signal::from_raw((0..n.max(1)).map(|_| rng.random_range(-1.0..=1.0)).collect())
}

/// Value carried by labeled vertices of cluster `c` out of `k`: `+1` and `-1`
/// for two clusters, equispaced in `[-1, 1]` otherwise.
pub fn cluster_value(c: usize, k: usize) -> f64 {
    if k < 2 {
        return 1.0;
    }
    1.0 - 2.0 * c as f64 / (k - 1) as f64
}

/// Marks `ceil(fraction * n_c)` random vertices of every cluster with the
/// cluster value and leaves the rest at zero. The flow null-projects it.
pub fn semi_supervised_init(ps: &LabeledPointSet, fraction: f64, seed: u64) -> Result<Signal> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "fraction must be in (0, 1], got {fraction}"
        )));
    }
    let k = ps.n_clusters();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, &l) in ps.labels.iter().enumerate() {
        members[l].push(i);
    }
    if let Some(c) = members.iter().position(Vec::is_empty) {
        return Err(Error::EmptyCluster(c));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![0.0; ps.labels.len()];
    for (c, idx) in members.iter().enumerate() {
        let count = ((fraction * idx.len() as f64).ceil() as usize).min(idx.len());
        for pick in sample(&mut rng, idx.len(), count) {
            out[idx[pick]] = cluster_value(c, k);
        }
    }
    Ok(Signal::from_raw(out))
}

/// Restarts of the 1D k-means used for more than two clusters.
pub const KMEANS_RESTARTS: usize = 50;
const KMEANS_MAX_ITERS: usize = 200;

/// Cluster labels from a vertex function. Two clusters: sign of the centered
/// values (nonnegative → 0). More: 1D k-means with k-means++ seeding, best of
/// [`KMEANS_RESTARTS`] by within-cluster sum of squares; labels are ordered
/// by increasing center.
pub fn cluster_from_function(f: &[f64], k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::InvalidParameter("need at least two clusters".into()));
    }
    let mut distinct: Vec<f64> = f.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < k {
        return Err(Error::DegenerateClusters {
            distinct: distinct.len(),
            requested: k,
        });
    }
    if k == 2 {
        let m = mean(f);
        return Ok(f.iter().map(|&x| usize::from(x - m < 0.0)).collect());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(f64, Vec<f64>)> = None;
    for _ in 0..KMEANS_RESTARTS {
        let centers = lloyd(f, kmeans_pp(f, k, &mut rng));
        let wcss = within_ss(f, &centers);
        if best.as_ref().is_none_or(|b| wcss < b.0) {
            best = Some((wcss, centers));
        }
    }
    let (_, mut centers) = best.expect("at least one restart");
    centers.sort_by(f64::total_cmp);
    Ok(f.iter().map(|&x| nearest(&centers, x)).collect())
}

fn nearest(centers: &[f64], x: f64) -> usize {
    let mut best = 0;
    for (c, &m) in centers.iter().enumerate() {
        if (x - m).abs() < (x - centers[best]).abs() {
            best = c;
        }
    }
    best
}

fn within_ss(f: &[f64], centers: &[f64]) -> f64 {
    f.iter().map(|&x| (x - centers[nearest(centers, x)]).powi(2)).sum()
}

fn kmeans_pp(f: &[f64], k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut centers = vec![f[rng.random_range(0..f.len())]];
    while centers.len() < k {
        let d2: Vec<f64> = f
            .iter()
            .map(|&x| centers.iter().map(|&c| (x - c).powi(2)).fold(f64::INFINITY, f64::min))
            .collect();
        let total: f64 = d2.iter().sum();
        if total == 0.0 {
            break;
        }
        let mut target = rng.random_range(0.0..total);
        let mut pick = f.len() - 1;
        for (i, &d) in d2.iter().enumerate() {
            if target < d {
                pick = i;
                break;
            }
            target -= d;
        }
        centers.push(f[pick]);
    }
    centers
}

fn lloyd(f: &[f64], mut centers: Vec<f64>) -> Vec<f64> {
    let k = centers.len();
    for _ in 0..KMEANS_MAX_ITERS {
        let mut sums = vec![0.0; k];
        let mut counts = vec![0usize; k];
        for &x in f {
            let c = nearest(&centers, x);
            sums[c] += x;
            counts[c] += 1;
        }
        let next: Vec<f64> = (0..k)
            .map(|c| {
                if counts[c] > 0 {
                    sums[c] / counts[c] as f64
                } else {
                    centers[c]
                }
            })
            .collect();
        if next == centers {
            break;
        }
        centers = next;
    }
    centers
}

/// How far a vertex function is from taking two values: split at the mean,
/// then the largest within-side range relative to the gap between the side
/// means. Zero for an exactly two-valued function.
pub fn two_level_spread(f: &[f64]) -> Result<f64> {
    let m = mean(f);
    let (hi, lo): (Vec<f64>, Vec<f64>) = f.iter().partition(|&&x| x >= m);
    if hi.is_empty() || lo.is_empty() {
        return Err(Error::DegenerateClusters {
            distinct: 1,
            requested: 2,
        });
    }
    let range = |v: &[f64]| {
        let (a, b) = v
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
        b - a
    };
    Ok(range(&hi).max(range(&lo)) / (mean(&hi) - mean(&lo)))
}

/// Best agreement fraction over all matchings of predicted to true labels.
/// Brute force over permutations for up to three labels, Hungarian
/// assignment beyond.
pub fn clustering_accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    check_len(truth.len(), pred.len())?;
    if truth.is_empty() {
        return Err(Error::EmptySignal);
    }
    let k = pred.iter().chain(truth).max().map_or(0, |m| m + 1);
    let mut counts = vec![vec![0usize; k]; k];
    for (&p, &t) in pred.iter().zip(truth) {
        counts[p][t] += 1;
    }
    let matched = if k <= 3 {
        best_permutation(&counts)
    } else {
        hungarian_max(&counts)
    };
    Ok(matched as f64 / truth.len() as f64)
}

fn best_permutation(counts: &[Vec<usize>]) -> usize {
    fn go(counts: &[Vec<usize>], row: usize, used: &mut Vec<bool>) -> usize {
        if row == counts.len() {
            return 0;
        }
        let mut best = 0;
        for col in 0..counts.len() {
            if !used[col] {
                used[col] = true;
                best = best.max(counts[row][col] + go(counts, row + 1, used));
                used[col] = false;
            }
        }
        best
    }
    go(counts, 0, &mut vec![false; counts.len()])
}

/// Maximum-weight perfect matching on a square count matrix
/// (Kuhn-Munkres with potentials, O(k³)).
pub(crate) fn hungarian_max(counts: &[Vec<usize>]) -> usize {
    let k = counts.len();
    let max = counts.iter().flatten().copied().max().unwrap_or(0) as i64;
    // minimize cost = max - count; 1-based arrays with a sentinel column 0
    let cost = |i: usize, j: usize| max - counts[i - 1][j - 1] as i64;
    let mut u = vec![0i64; k + 1];
    let mut v = vec![0i64; k + 1];
    let mut owner = vec![0usize; k + 1];
    let mut way = vec![0usize; k + 1];
    for i in 1..=k {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![i64::MAX; k + 1];
        let mut used = vec![false; k + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = i64::MAX;
            let mut j1 = 0;
            for j in 1..=k {
                if !used[j] {
                    let cur = cost(i0, j) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=k {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    (1..=k).map(|j| counts[owner[j] - 1][j - 1]).sum()
}
