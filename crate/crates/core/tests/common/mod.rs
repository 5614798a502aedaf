//! Independent test oracles: dense linear algebra and brute-force
//! enumerations that do not share code paths with the library.

#![allow(dead_code)]

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use sase::graph::{CsrAdjacency, GraphBundle};

pub fn to_dense_matrix(a: &Array2<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

pub fn from_dense_matrix(m: &DMatrix<f64>) -> Array2<f64> {
    Array2::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| m[(i, j)])
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || StandardNormal.sample(rng))
}

/// Erdős–Rényi graph with Gaussian features.
pub fn random_graph(n: usize, p: f64, f: usize, seed: u64) -> GraphBundle {
    let mut r = rng(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if r.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    let (adj, _) = CsrAdjacency::from_edges(n, edges).unwrap();
    GraphBundle::new(adj, gaussian_matrix(n, f, &mut r), None).unwrap()
}

/// Dense `D̂^{-1/2}(A+I)D̂^{-1/2}` built straight from the edge list.
pub fn dense_normalized_adjacency(g: &GraphBundle) -> DMatrix<f64> {
    let n = g.node_count();
    let mut a = DMatrix::<f64>::identity(n, n);
    for (u, v) in g.adjacency().edges() {
        a[(u, v)] = 1.0;
        a[(v, u)] = 1.0;
    }
    let deg: Vec<f64> = (0..n).map(|i| a.row(i).sum()).collect();
    DMatrix::from_fn(n, n, |i, j| a[(i, j)] / (deg[i] * deg[j]).sqrt())
}

/// Eigenpairs sorted by descending eigenvalue.
pub fn sorted_eigen(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(eig.eigenvectors.nrows(), order.len(), |i, k| {
        eig.eigenvectors[(i, order[k])]
    });
    (values, vectors)
}

/// Singular values sorted descending, from a dense full SVD.
pub fn dense_singular_values(a: &Array2<f64>) -> Vec<f64> {
    let mut s: Vec<f64> = to_dense_matrix(a).singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    s
}

/// Sine of the largest principal angle between the column spans of two
/// orthonormal bases: ‖(I − UUᵀ)V‖₂.
pub fn max_principal_angle_sine(u: &DMatrix<f64>, v: &DMatrix<f64>) -> f64 {
    let residual = v - u * (u.transpose() * v);
    residual.singular_values().iter().copied().fold(0.0, f64::max)
}

/// Dense kernel-space spectral embedding: forms `W̃ = Z̃Z̃ᵀ` explicitly,
/// eigendecomposes `D̃^{-1/2} W̃ D̃^{-1/2}` and row-normalizes the top `d`
/// eigenvectors. Returns (normalized embedding, raw eigenvectors, eigenvalues).
pub fn dense_kernel_embedding(
    z: &Array2<f64>,
    d: usize,
) -> (Array2<f64>, DMatrix<f64>, Vec<f64>) {
    let zm = to_dense_matrix(z);
    let w = &zm * zm.transpose();
    let n = w.nrows();
    let deg: Vec<f64> = (0..n).map(|i| w.row(i).sum().max(1e-10)).collect();
    let normalized = DMatrix::from_fn(n, n, |i, j| w[(i, j)] / (deg[i] * deg[j]).sqrt());
    let (values, vectors) = sorted_eigen(normalized);
    let top = vectors.columns(0, d).into_owned();
    let mut emb = from_dense_matrix(&top);
    for mut row in emb.rows_mut() {
        let norm = row.dot(&row).sqrt();
        if norm > 0.0 {
            row /= norm;
        }
    }
    (emb, top, values)
}

/// Isotropic Gaussian blobs with centres on scaled coordinate axes.
pub fn blobs(per_blob: usize, k: usize, dim: usize, separation: f64, seed: u64) -> (Array2<f64>, Vec<usize>) {
    let mut r = rng(seed);
    let n = per_blob * k;
    let mut labels = Vec::with_capacity(n);
    let mut x = Array2::<f64>::zeros((n, dim));
    for i in 0..n {
        let c = i / per_blob;
        labels.push(c);
        for j in 0..dim {
            let z: f64 = StandardNormal.sample(&mut r);
            x[[i, j]] = z + if j == c % dim { separation } else { 0.0 };
        }
    }
    (x, labels)
}

/// Two concentric noisy rings in the plane.
pub fn rings(per_ring: usize, radii: (f64, f64), noise: f64, seed: u64) -> (Array2<f64>, Vec<usize>) {
    let mut r = rng(seed);
    let mut x = Array2::<f64>::zeros((2 * per_ring, 2));
    let mut labels = Vec::new();
    for i in 0..2 * per_ring {
        let ring = i / per_ring;
        let radius = if ring == 0 { radii.0 } else { radii.1 };
        let theta = r.random::<f64>() * std::f64::consts::TAU;
        let jitter: f64 = StandardNormal.sample(&mut r);
        x[[i, 0]] = (radius + noise * jitter) * theta.cos();
        x[[i, 1]] = (radius + noise * jitter) * theta.sin();
        labels.push(ring);
    }
    (x, labels)
}

/// Adjusted Rand index by explicit enumeration of all point pairs.
pub fn ari_by_pairs(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len();
    let (mut both, mut only_a, mut only_b, mut total) = (0f64, 0f64, 0f64, 0f64);
    for i in 0..n {
        for j in i + 1..n {
            let sa = a[i] == a[j];
            let sb = b[i] == b[j];
            total += 1.0;
            if sa && sb {
                both += 1.0;
            }
            if sa {
                only_a += 1.0;
            }
            if sb {
                only_b += 1.0;
            }
        }
    }
    let expected = only_a * only_b / total;
    let max = 0.5 * (only_a + only_b);
    (both - expected) / (max - expected)
}

/// Best matched fraction over every injective cluster→class mapping.
pub fn accuracy_by_enumeration(pred: &[usize], truth: &[usize]) -> f64 {
    let kp = pred.iter().max().unwrap() + 1;
    let kt = truth.iter().max().unwrap() + 1;
    let mut best = 0usize;
    let mut mapping = vec![usize::MAX; kp];
    let mut used = vec![false; kt.max(kp)];
    fn rec(
        c: usize,
        kp: usize,
        slots: usize,
        mapping: &mut Vec<usize>,
        used: &mut Vec<bool>,
        pred: &[usize],
        truth: &[usize],
        best: &mut usize,
    ) {
        if c == kp {
            let hits = pred
                .iter()
                .zip(truth)
                .filter(|(p, t)| mapping[**p] == **t)
                .count();
            *best = (*best).max(hits);
            return;
        }
        for t in 0..slots {
            if !used[t] {
                used[t] = true;
                mapping[c] = t;
                rec(c + 1, kp, slots, mapping, used, pred, truth, best);
                used[t] = false;
            }
        }
    }
    // Pad the class side so every cluster can be mapped (to a dummy class if needed).
    let slots = kt.max(kp);
    rec(0, kp, slots, &mut mapping, &mut used, pred, truth, &mut best);
    best as f64 / pred.len() as f64
}

/// Minimum k-means objective over all 2-partitions (brute force).
pub fn best_two_partition_inertia(points: &Array2<f64>) -> f64 {
    let n = points.nrows();
    let mut best = f64::INFINITY;
    for mask in 1..(1u64 << n) - 1 {
        let mut cost = 0.0;
        for side in [true, false] {
            let members: Vec<usize> = (0..n).filter(|&i| ((mask >> i) & 1 == 1) == side).collect();
            let mut mean = vec![0.0; points.ncols()];
            for &i in &members {
                for j in 0..points.ncols() {
                    mean[j] += points[[i, j]] / members.len() as f64;
                }
            }
            for &i in &members {
                for j in 0..points.ncols() {
                    cost += (points[[i, j]] - mean[j]).powi(2);
                }
            }
        }
        best = best.min(cost);
    }
    best
}
