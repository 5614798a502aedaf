//! Lloyd's k-means with k-means++ seeding and best-of-restarts selection.

use ndarray::{Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Result, SaseError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KmeansOptions {
    pub max_iter: usize,
    pub restarts: usize,
    /// Stop when the relative inertia decrease falls below this.
    pub tolerance: f64,
}

impl Default for KmeansOptions {
    fn default() -> Self {
        KmeansOptions {
            max_iter: 50,
            restarts: 10,
            tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct KmeansResult {
    pub assignments: Vec<usize>,
    pub centroids: Array2<f64>,
    pub inertia: f64,
    pub iterations_run: usize,
    /// Inertia after each assignment step of the winning run.
    pub inertia_trace: Vec<f64>,
}

pub fn kmeans(
    points: ArrayView2<'_, f64>,
    clusters: usize,
    seed: u64,
    opts: KmeansOptions,
) -> Result<KmeansResult> {
    let n = points.nrows();
    if n == 0 {
        return Err(SaseError::InvalidParameter("k-means on empty input".into()));
    }
    if clusters == 0 || clusters > n {
        return Err(SaseError::InvalidParameter(format!(
            "cluster count {clusters} outside [1, {n}]"
        )));
    }
    if opts.max_iter == 0 || opts.restarts == 0 {
        return Err(SaseError::InvalidParameter(
            "k-means needs max_iter ≥ 1 and restarts ≥ 1".into(),
        ));
    }

    let mut best: Option<KmeansResult> = None;
    for restart in 0..opts.restarts {
        // Each restart owns its stream so restart r is independent of the total count.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(restart as u64);
        let run = lloyd(points, plus_plus_init(points, clusters, &mut rng), opts);
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    Ok(best.unwrap())
}

/// Four independent accumulators so the loop vectorizes; the summation
/// order is fixed, so results stay deterministic.
fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut lanes = [0.0; 4];
    let (mut xa, mut xb) = (a.chunks_exact(4), b.chunks_exact(4));
    for (x, y) in (&mut xa).zip(&mut xb) {
        for l in 0..4 {
            let d = x[l] - y[l];
            lanes[l] += d * d;
        }
    }
    let tail: f64 = xa
        .remainder()
        .iter()
        .zip(xb.remainder())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]) + tail
}

/// Nearest centroid (lowest index on ties) and the squared distance to it.
/// `centroids` is row-major with rows of `point.len()` entries.
fn nearest(point: &[f64], centroids: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.chunks_exact(point.len()).enumerate() {
        let d = squared_distance(point, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn assign(points: &[f64], dim: usize, centroids: &[f64]) -> Vec<(usize, f64)> {
    points
        .par_chunks_exact(dim)
        .map(|p| nearest(p, centroids))
        .collect()
}

fn plus_plus_init(points: ArrayView2<'_, f64>, clusters: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let (n, dim) = points.dim();
    let standard = points.as_standard_layout();
    let flat = standard.as_slice().expect("standard layout");
    let row = |i: usize| &flat[i * dim..(i + 1) * dim];
    let mut centroids = Array2::<f64>::zeros((clusters, dim));
    let first = rng.random_range(0..n);
    centroids.row_mut(0).assign(&points.row(first));
    let mut closest: Vec<f64> = (0..n).map(|i| squared_distance(row(i), row(first))).collect();

    for c in 1..clusters {
        let total: f64 = closest.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &d) in closest.iter().enumerate() {
                if target < d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centroids.row_mut(c).assign(&points.row(pick));
        let picked = row(pick);
        closest.par_iter_mut().enumerate().for_each(|(i, slot)| {
            let d = squared_distance(row(i), picked);
            if d < *slot {
                *slot = d;
            }
        });
    }
    centroids
}

fn lloyd(points: ArrayView2<'_, f64>, mut centroids: Array2<f64>, opts: KmeansOptions) -> KmeansResult {
    let (n, dim) = points.dim();
    let standard = points.as_standard_layout();
    let flat = standard.as_slice().expect("standard layout");
    let m = centroids.nrows();
    let mut assignments: Vec<usize> = Vec::new();
    let mut trace = Vec::new();
    let mut iterations = 0;

    loop {
        iterations += 1;
        let nearest = assign(flat, dim, centroids.as_slice().expect("owned centroids"));
        let inertia: f64 = nearest.iter().map(|&(_, d)| d).sum();
        let labels: Vec<usize> = nearest.iter().map(|&(c, _)| c).collect();
        let fixpoint = labels == assignments;
        let small_change = trace.last().is_some_and(|&prev: &f64| {
            prev <= 0.0 || (prev - inertia) / prev < opts.tolerance
        });
        assignments = labels;
        trace.push(inertia);
        if fixpoint || small_change || iterations >= opts.max_iter {
            break;
        }

        let mut sums = vec![0.0; m * dim];
        let mut counts = vec![0usize; m];
        for (p, &c) in flat.chunks_exact(dim).zip(&assignments) {
            counts[c] += 1;
            for (s, v) in sums[c * dim..(c + 1) * dim].iter_mut().zip(p) {
                *s += v;
            }
        }
        // Empty clusters take the points currently farthest from their centroid.
        let mut by_distance: Vec<usize> = Vec::new();
        let mut taken = 0;
        for c in 0..m {
            if counts[c] > 0 {
                let scale = counts[c] as f64;
                for (dst, s) in centroids.row_mut(c).iter_mut().zip(&sums[c * dim..(c + 1) * dim]) {
                    *dst = s / scale;
                }
            } else {
                if by_distance.is_empty() {
                    by_distance = (0..n).collect();
                    by_distance.sort_by(|&a, &b| {
                        nearest[b].1.partial_cmp(&nearest[a].1).unwrap().then(a.cmp(&b))
                    });
                }
                let donor = by_distance[taken.min(n - 1)];
                taken += 1;
                centroids.row_mut(c).assign(&points.row(donor));
            }
        }
    }

    let inertia = *trace.last().unwrap();
    KmeansResult {
        assignments,
        centroids,
        inertia,
        iterations_run: iterations,
        inertia_trace: trace,
    }
}
