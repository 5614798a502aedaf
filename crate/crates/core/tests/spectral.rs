mod common;

use ndarray::{concatenate, Array2, Axis};
use proptest::prelude::*;

use sase::kernel::{build_projector, median_bandwidth, VarianceMode};
use sase::metrics::ari;
use sase::linalg::SvdOptions;
use sase::spectral::{
    exact_spectral_cluster, implicit_degrees, spectral_embed, spectral_embed_with, DEGREE_FLOOR,
};

fn feature_map(points: &Array2<f64>, half_dim: usize, seed: u64) -> Array2<f64> {
    let sigma = median_bandwidth(points.view(), 1000, seed).unwrap();
    build_projector(points.ncols(), half_dim, sigma, seed, VarianceMode::Dual)
        .unwrap()
        .project(points.view())
        .unwrap()
}

#[test]
fn degrees_match_dense_product() {
    let mut rng = common::rng(12);
    let pts = common::gaussian_matrix(300, 5, &mut rng);
    let z = feature_map(&pts, 50, 1);
    let zm = common::to_dense_matrix(&z);
    let w = &zm * zm.transpose();
    let degrees = implicit_degrees(z.view());
    for i in 0..300 {
        let oracle = w.row(i).sum().max(DEGREE_FLOOR);
        assert!((degrees.values[i] - oracle).abs() < 1e-9);
    }
}

#[test]
fn degree_examples() {
    let z = feature_map(&ndarray::array![[0.3, 0.1], [1.0, 2.0]], 20, 0);
    let single = implicit_degrees(z.slice(ndarray::s![0..1, ..]));
    assert!((single.values[0] - 1.0).abs() < 1e-12);
    let twice = concatenate![Axis(0), z.slice(ndarray::s![0..1, ..]), z.slice(ndarray::s![0..1, ..])];
    let d = implicit_degrees(twice.view());
    assert!((d.values[0] - 2.0).abs() < 1e-12 && (d.values[1] - 2.0).abs() < 1e-12);
}

#[test]
fn embedding_span_matches_dense_laplacian() {
    let mut checked = 0;
    for seed in 0..5u64 {
        let (pts, _) = common::blobs(100, 4, 5, 6.0, 50 + seed);
        let z = feature_map(&pts, 64, seed);
        let d = 4;
        let (_, oracle, eigenvalues) = common::dense_kernel_embedding(&z, d);
        if eigenvalues[d - 1] - eigenvalues[d] <= 1e-3 {
            continue;
        }
        checked += 1;
        let emb = spectral_embed(z.view(), d, seed).unwrap();
        let basis = common::to_dense_matrix(&emb.singular_vectors);
        let sine = common::max_principal_angle_sine(&oracle, &basis);
        assert!(sine.asin() < 1e-6, "seed {seed}: angle {}", sine.asin());

        // The normalized rows equal the oracle's normalized rows up to a rotation.
        let (oracle_rows, _, _) = common::dense_kernel_embedding(&z, d);
        let a = common::to_dense_matrix(&emb.vectors);
        let b = common::to_dense_matrix(&oracle_rows);
        let gram_a = &a * a.transpose();
        let gram_b = &b * b.transpose();
        assert!((gram_a - gram_b).amax() < 1e-6);
    }
    assert!(checked > 0);
}

#[test]
fn embedding_span_matches_dense_laplacian_with_more_power_iterations() {
    let opts = SvdOptions { power_iterations: 4, ..SvdOptions::default() };
    for seed in 0..5u64 {
        let (pts, _) = common::blobs(100, 4, 5, 6.0, 50 + seed);
        let z = feature_map(&pts, 64, seed);
        let (_, oracle, eigenvalues) = common::dense_kernel_embedding(&z, 4);
        assert!(eigenvalues[3] - eigenvalues[4] > 1e-3);
        let emb = spectral_embed_with(z.view(), 4, seed, opts).unwrap();
        let sine = common::max_principal_angle_sine(&oracle, &common::to_dense_matrix(&emb.singular_vectors));
        assert!(sine.asin() < 1e-6, "seed {seed}: angle {}", sine.asin());
    }
}

#[test]
fn single_dimension_gives_unit_scalars() {
    let mut rng = common::rng(3);
    let z = feature_map(&common::gaussian_matrix(80, 3, &mut rng), 30, 2);
    let emb = spectral_embed(z.view(), 1, 0).unwrap();
    for v in emb.vectors.iter() {
        assert!((v.abs() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn duplicated_points_get_identical_rows() {
    let mut rng = common::rng(4);
    let base = common::gaussian_matrix(60, 3, &mut rng);
    let doubled = concatenate![Axis(0), base.view(), base.view()];
    let z = feature_map(&doubled, 40, 5);
    let emb = spectral_embed(z.view(), 3, 1).unwrap();
    for i in 0..60 {
        let diff = (&emb.vectors.row(i) - &emb.vectors.row(i + 60)).mapv(f64::abs);
        assert!(diff.iter().all(|&v| v < 1e-8));
    }
}

#[test]
fn embedding_dimension_checked() {
    let z = Array2::<f64>::ones((5, 4));
    assert!(spectral_embed(z.view(), 0, 0).is_err());
    assert!(spectral_embed(z.view(), 5, 0).is_err());
}

#[test]
fn exact_clustering_separates_blobs() {
    let (pts, labels) = common::blobs(100, 2, 2, 10.0, 8);
    let got = exact_spectral_cluster(pts.view(), 2, 1.0, 0).unwrap();
    assert_eq!(ari(&got, &labels).unwrap(), 1.0);
    assert!(exact_spectral_cluster(pts.view(), 1, 1.0, 0).unwrap().iter().all(|&c| c == 0));
}

#[test]
fn exact_clustering_separates_rings() {
    let (pts, labels) = common::rings(150, (1.0, 4.0), 0.1, 9);
    let got = exact_spectral_cluster(pts.view(), 2, 0.3, 0).unwrap();
    assert_eq!(ari(&got, &labels).unwrap(), 1.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn rows_unit_norm_and_degrees_floored(
        n in 4usize..60,
        d in 1usize..4,
        half_dim in 2usize..20,
        seed in any::<u64>(),
    ) {
        let mut rng = common::rng(seed);
        let pts = common::gaussian_matrix(n, 3, &mut rng);
        let z = feature_map(&pts, half_dim, seed);
        let dim = d.min(n).min(2 * half_dim);
        let emb = spectral_embed(z.view(), dim, seed).unwrap();
        prop_assert!(emb.degrees.iter().all(|&v| v >= DEGREE_FLOOR));
        let mut zeros = 0;
        for row in emb.vectors.rows() {
            let norm = row.dot(&row).sqrt();
            if norm == 0.0 {
                zeros += 1;
            } else {
                prop_assert!((norm - 1.0).abs() < 1e-10);
            }
        }
        prop_assert_eq!(zeros, emb.zero_row_count);
    }
}
