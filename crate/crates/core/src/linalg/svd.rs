//! Randomized truncated SVD (Gaussian range finder with power iterations).

use nalgebra::DMatrix;
use ndarray::{s, Array1, Array2, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Result, SaseError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SvdOptions {
    pub oversample: usize,
    pub power_iterations: usize,
}

impl Default for SvdOptions {
    fn default() -> Self {
        SvdOptions {
            oversample: 10,
            power_iterations: 2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TruncatedSvdResult {
    /// `n × r`, orthonormal columns.
    pub left_vectors: Array2<f64>,
    /// Non-increasing, non-negative.
    pub singular_values: Array1<f64>,
    /// `c × r`, orthonormal columns.
    pub right_vectors: Array2<f64>,
    pub rank_requested: usize,
}

impl TruncatedSvdResult {
    /// `U · diag(σ)`, the rank-r projection coordinates of the rows.
    pub fn scaled_left(&self) -> Array2<f64> {
        let mut out = self.left_vectors.clone();
        for (mut col, &sv) in out.columns_mut().into_iter().zip(&self.singular_values) {
            col *= sv;
        }
        out
    }
}

pub fn truncated_svd(m: ArrayView2<'_, f64>, rank: usize, seed: u64) -> Result<TruncatedSvdResult> {
    truncated_svd_with(m, rank, seed, SvdOptions::default())
}

pub fn truncated_svd_with(
    m: ArrayView2<'_, f64>,
    rank: usize,
    seed: u64,
    opts: SvdOptions,
) -> Result<TruncatedSvdResult> {
    let (n, c) = m.dim();
    if rank == 0 || rank > n.min(c) {
        return Err(SaseError::InvalidParameter(format!(
            "rank {rank} outside [1, {}] for a {n}×{c} matrix",
            n.min(c)
        )));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(SaseError::NonFinite("matrix passed to truncated SVD".into()));
    }
    let width = (rank + opts.oversample).min(n.min(c));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let test = Array2::from_shape_simple_fn((c, width), || StandardNormal.sample(&mut rng));

    let mut q = orthonormal_basis(&m.dot(&test));
    for _ in 0..opts.power_iterations {
        let back = orthonormal_basis(&m.t().dot(&q));
        q = orthonormal_basis(&m.dot(&back));
    }

    // Rayleigh–Ritz on the captured range: B = Qᵀ M is width × c.
    let b = q.t().dot(&m);
    let small = to_nalgebra(&b)
        .try_svd(true, true, f64::EPSILON, 0)
        .ok_or_else(|| SaseError::Numerical("SVD of projected matrix did not converge".into()))?;
    let ub = small.u.expect("requested U");
    let vt = small.v_t.expect("requested V^T");

    let mut order: Vec<usize> = (0..small.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        small.singular_values[b]
            .partial_cmp(&small.singular_values[a])
            .unwrap()
            .then(a.cmp(&b))
    });
    order.truncate(rank);

    let mut ub_top = Array2::<f64>::zeros((ub.nrows(), rank));
    let mut right = Array2::<f64>::zeros((c, rank));
    let mut values = Array1::<f64>::zeros(rank);
    for (dst, &src) in order.iter().enumerate() {
        values[dst] = small.singular_values[src].max(0.0);
        for i in 0..ub.nrows() {
            ub_top[[i, dst]] = ub[(i, src)];
        }
        for j in 0..c {
            right[[j, dst]] = vt[(src, j)];
        }
    }
    let mut left = q.dot(&ub_top);

    // Sign convention: the largest-magnitude entry of each left vector is positive.
    for k in 0..rank {
        let col = left.column(k);
        let pivot = col
            .iter()
            .fold(0.0f64, |best, &v| if v.abs() > best.abs() { v } else { best });
        if pivot < 0.0 {
            left.column_mut(k).mapv_inplace(|v| -v);
            right.column_mut(k).mapv_inplace(|v| -v);
        }
    }

    Ok(TruncatedSvdResult {
        left_vectors: left,
        singular_values: values,
        right_vectors: right,
        rank_requested: rank,
    })
}

/// Row-block height for the tall-skinny QR.
const QR_BLOCK_ROWS: usize = 4096;

/// Orthonormal basis for the column span of `a` (rows ≥ cols), same shape
/// as `a`. Tall inputs use a one-level tall-skinny QR: each row block is
/// factored on its own and the stacked `R` factors are factored again, so
/// every Householder sweep stays within a cache-sized block.
fn orthonormal_basis(a: &Array2<f64>) -> Array2<f64> {
    let (rows, cols) = a.dim();
    let block = QR_BLOCK_ROWS.max(2 * cols);
    if rows <= block {
        let q = view_to_nalgebra(a.view()).qr().q();
        return Array2::from_shape_fn((rows, cols.min(rows)), |(i, j)| q[(i, j)]);
    }
    let mut starts: Vec<usize> = (0..rows).step_by(block).collect();
    if rows - starts[starts.len() - 1] < cols {
        starts.pop();
    }
    let bounds: Vec<(usize, usize)> = starts
        .iter()
        .enumerate()
        .map(|(b, &s)| (s, starts.get(b + 1).copied().unwrap_or(rows)))
        .collect();
    let local: Vec<(DMatrix<f64>, DMatrix<f64>)> = bounds
        .par_iter()
        .map(|&(s, e)| {
            let qr = view_to_nalgebra(a.slice(s![s..e, ..])).qr();
            (qr.q(), qr.r())
        })
        .collect();

    let mut stacked = DMatrix::<f64>::zeros(local.len() * cols, cols);
    for (b, (_, r)) in local.iter().enumerate() {
        stacked.view_mut((b * cols, 0), (cols, cols)).copy_from(r);
    }
    let outer = stacked.qr().q();

    let mut out = Array2::<f64>::zeros((rows, cols));
    for (b, ((q, _), &(s, _))) in local.iter().zip(&bounds).enumerate() {
        let combined = q * outer.view((b * cols, 0), (cols, cols));
        for i in 0..combined.nrows() {
            for j in 0..cols {
                out[[s + i, j]] = combined[(i, j)];
            }
        }
    }
    out
}

fn view_to_nalgebra(a: ArrayView2<'_, f64>) -> DMatrix<f64> {
    let (rows, cols) = a.dim();
    DMatrix::from_fn(rows, cols, |i, j| a[[i, j]])
}

pub(crate) fn to_nalgebra(a: &Array2<f64>) -> DMatrix<f64> {
    view_to_nalgebra(a.view())
}

pub(crate) fn from_nalgebra(m: &DMatrix<f64>) -> Array2<f64> {
    Array2::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| m[(i, j)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn orthonormality_error(u: &Array2<f64>) -> f64 {
        let g = u.t().dot(u);
        let mut worst = 0.0f64;
        for ((i, j), v) in g.indexed_iter() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((v - target).abs());
        }
        worst
    }

    #[test]
    fn diagonal_matrix() {
        let m = array![[3.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 1.0]];
        let r = truncated_svd(m.view(), 2, 7).unwrap();
        assert!((r.singular_values[0] - 3.0).abs() < 1e-12);
        assert!((r.singular_values[1] - 2.0).abs() < 1e-12);
        assert!((r.left_vectors[[0, 0]].abs() - 1.0).abs() < 1e-12);
        assert!((r.left_vectors[[1, 1]].abs() - 1.0).abs() < 1e-12);
        assert!(r.left_vectors[[2, 0]].abs() < 1e-12);
        assert!(r.left_vectors[[2, 1]].abs() < 1e-12);
    }

    #[test]
    fn rank_out_of_range() {
        let m = Array2::<f64>::ones((4, 3));
        assert!(truncated_svd(m.view(), 0, 0).is_err());
        assert!(truncated_svd(m.view(), 4, 0).is_err());
    }

    #[test]
    fn non_finite_rejected() {
        let m = array![[1.0, f64::INFINITY], [0.0, 1.0]];
        assert!(matches!(
            truncated_svd(m.view(), 1, 0),
            Err(SaseError::NonFinite(_))
        ));
    }

    #[test]
    fn seed_determinism_and_orthonormality() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = Array2::from_shape_simple_fn((60, 20), || {
            let v: f64 = StandardNormal.sample(&mut rng);
            v
        });
        let a = truncated_svd(m.view(), 6, 11).unwrap();
        let b = truncated_svd(m.view(), 6, 11).unwrap();
        assert_eq!(a.left_vectors, b.left_vectors);
        assert_eq!(a.singular_values, b.singular_values);
        assert!(orthonormality_error(&a.left_vectors) < 1e-8);
        for w in a.singular_values.windows(2) {
            assert!(w[0] >= w[1]);
        }
    }

    #[test]
    fn blocked_basis_spans_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rows = 2 * QR_BLOCK_ROWS + 3;
        let a = Array2::from_shape_simple_fn((rows, 6), || {
            let v: f64 = StandardNormal.sample(&mut rng);
            v
        });
        let q = orthonormal_basis(&a);
        assert_eq!(q.dim(), (rows, 6));
        assert!(orthonormality_error(&q) < 1e-10);
        let residual = &a - &q.dot(&q.t().dot(&a));
        assert!(residual.iter().all(|v| v.abs() < 1e-9));
    }
}
