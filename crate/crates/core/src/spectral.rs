//! Spectral clustering on random-feature embeddings without forming the
//! `n × n` affinity matrix, plus a dense classical reference.
//!
//! With `W̃ = Z̃Z̃ᵀ`, degrees are `Z̃(Z̃ᵀ1)` and the top eigenvectors of
//! `D̃^{-1/2} W̃ D̃^{-1/2}` are the top left singular vectors of
//! `D̃^{-1/2} Z̃`, so every step stays linear in `n`.

use nalgebra::SymmetricEigen;
use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::error::{Result, SaseError};
use crate::kernel::gaussian_kernel;
use crate::linalg::{
    from_nalgebra, kmeans, l2_normalize_rows, to_nalgebra, truncated_svd_with, KmeansOptions,
    SvdOptions,
};

pub const DEGREE_FLOOR: f64 = 1e-10;

/// Largest input accepted by [`exact_spectral_cluster`].
pub const EXACT_SC_MAX_NODES: usize = 5000;

#[derive(Debug, Clone)]
pub struct Degrees {
    pub values: Array1<f64>,
    /// Entries raised to [`DEGREE_FLOOR`].
    pub clamped: usize,
}

#[derive(Debug, Clone)]
pub struct SpectralEmbedding {
    /// `n × d`, row-normalized left singular vectors.
    pub vectors: Array2<f64>,
    /// `n × d`, the left singular vectors before row normalization.
    pub singular_vectors: Array2<f64>,
    pub degrees: Array1<f64>,
    pub singular_values: Array1<f64>,
    pub zero_row_count: usize,
    pub clamped_degrees: usize,
}

/// `Z̃ (Z̃ᵀ 1)`, floored at [`DEGREE_FLOOR`].
pub fn implicit_degrees(features: ArrayView2<'_, f64>) -> Degrees {
    let column_sums = features.sum_axis(Axis(0));
    let mut values = features.dot(&column_sums);
    let mut clamped = 0;
    values.mapv_inplace(|v| {
        if v < DEGREE_FLOOR {
            clamped += 1;
            DEGREE_FLOOR
        } else {
            v
        }
    });
    Degrees { values, clamped }
}

pub fn spectral_embed(features: ArrayView2<'_, f64>, dim: usize, seed: u64) -> Result<SpectralEmbedding> {
    spectral_embed_with(features, dim, seed, SvdOptions::default())
}

pub fn spectral_embed_with(
    features: ArrayView2<'_, f64>,
    dim: usize,
    seed: u64,
    svd: SvdOptions,
) -> Result<SpectralEmbedding> {
    let (n, width) = features.dim();
    if dim == 0 || dim > n.min(width) {
        return Err(SaseError::InvalidParameter(format!(
            "embedding dimension {dim} outside [1, {}]",
            n.min(width)
        )));
    }
    let degrees = implicit_degrees(features);
    let mut scaled = features.to_owned();
    for (mut row, &d) in scaled.rows_mut().into_iter().zip(degrees.values.iter()) {
        row /= d.sqrt();
    }
    let svd = truncated_svd_with(scaled.view(), dim, seed, svd)?;
    drop(scaled);
    let (vectors, zero_row_count) = l2_normalize_rows(&svd.left_vectors);
    Ok(SpectralEmbedding {
        vectors,
        singular_vectors: svd.left_vectors,
        degrees: degrees.values,
        singular_values: svd.singular_values,
        zero_row_count,
        clamped_degrees: degrees.clamped,
    })
}

/// Classical spectral clustering with a dense Gaussian affinity matrix.
/// Quadratic in `n`; guarded at [`EXACT_SC_MAX_NODES`].
pub fn exact_spectral_cluster(
    points: ArrayView2<'_, f64>,
    clusters: usize,
    sigma: f64,
    seed: u64,
) -> Result<Vec<usize>> {
    let n = points.nrows();
    if n > EXACT_SC_MAX_NODES {
        return Err(SaseError::InvalidParameter(format!(
            "dense spectral clustering limited to {EXACT_SC_MAX_NODES} nodes, got {n}"
        )));
    }
    if clusters == 0 || clusters > n {
        return Err(SaseError::InvalidParameter(format!(
            "cluster count {clusters} outside [1, {n}]"
        )));
    }
    if clusters == 1 {
        return Ok(vec![0; n]);
    }
    let mut affinity = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        affinity[[i, i]] = 1.0;
        for j in i + 1..n {
            let w = gaussian_kernel(points.row(i), points.row(j), sigma)?;
            affinity[[i, j]] = w;
            affinity[[j, i]] = w;
        }
    }
    let inv_sqrt: Vec<f64> = affinity
        .sum_axis(Axis(1))
        .iter()
        .map(|d| 1.0 / d.max(DEGREE_FLOOR).sqrt())
        .collect();
    for ((i, j), w) in affinity.indexed_iter_mut() {
        *w *= inv_sqrt[i] * inv_sqrt[j];
    }
    let eigen = SymmetricEigen::new(to_nalgebra(&affinity));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eigen.eigenvalues[b].partial_cmp(&eigen.eigenvalues[a]).unwrap());
    let vectors = from_nalgebra(&eigen.eigenvectors);
    let top = Array2::from_shape_fn((n, clusters), |(i, k)| vectors[[i, order[k]]]);
    let (embedding, _) = l2_normalize_rows(&top);
    Ok(kmeans(embedding.view(), clusters, seed, KmeansOptions::default())?.assignments)
}
