//! Shared numerical kernels.

mod kmeans;
mod svd;

use ndarray::Array2;

pub use kmeans::{kmeans, KmeansOptions, KmeansResult};
pub use svd::{truncated_svd, truncated_svd_with, SvdOptions, TruncatedSvdResult};
pub(crate) use svd::{from_nalgebra, to_nalgebra};

/// Scales each nonzero row to unit ℓ₂ norm. Returns the normalized matrix
/// and the number of all-zero rows, which are passed through unchanged.
pub fn l2_normalize_rows(m: &Array2<f64>) -> (Array2<f64>, usize) {
    let mut out = m.clone();
    let mut zero_rows = 0;
    for mut row in out.rows_mut() {
        let scale = row.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if scale > 0.0 {
            let norm = scale * row.iter().map(|v| (v / scale).powi(2)).sum::<f64>().sqrt();
            row.mapv_inplace(|v| v / norm);
        } else {
            zero_rows += 1;
        }
    }
    (out, zero_rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn normalize_rows() {
        let (out, zeros) = l2_normalize_rows(&array![[3.0, 4.0], [0.0, 0.0], [1e-200, 0.0]]);
        assert_eq!(out.row(0).to_vec(), vec![0.6, 0.8]);
        assert_eq!(out.row(1).to_vec(), vec![0.0, 0.0]);
        assert_eq!(zeros, 1);
        assert!((out.row(2).dot(&out.row(2)) - 1.0).abs() < 1e-12);
    }
}
