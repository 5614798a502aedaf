mod common;

use std::collections::HashMap;

use proptest::prelude::*;

use sase::metrics::{accuracy, ari, nmi, ClusteringMetrics, ContingencyTable};

/// NMI from raw label pairs with the arithmetic-mean normalizer.
fn nmi_by_counting(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len() as f64;
    let mut joint: HashMap<(usize, usize), f64> = HashMap::new();
    let mut pa: HashMap<usize, f64> = HashMap::new();
    let mut pb: HashMap<usize, f64> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *joint.entry((x, y)).or_default() += 1.0 / n;
        *pa.entry(x).or_default() += 1.0 / n;
        *pb.entry(y).or_default() += 1.0 / n;
    }
    let h = |m: &HashMap<usize, f64>| -m.values().map(|p| p * p.ln()).sum::<f64>();
    let (ha, hb) = (h(&pa), h(&pb));
    if ha == 0.0 && hb == 0.0 {
        return 1.0;
    }
    let mi: f64 = joint.iter().map(|(&(x, y), p)| p * (p / (pa[&x] * pb[&y])).ln()).sum();
    (mi / (0.5 * (ha + hb))).clamp(0.0, 1.0)
}

fn relabel(labels: &[usize], perm: &[usize]) -> Vec<usize> {
    labels.iter().map(|&l| perm[l]).collect()
}

fn labelings(max_k: usize) -> impl Strategy<Value = (Vec<usize>, Vec<usize>)> {
    (1usize..40, 1..=max_k, 1..=max_k).prop_flat_map(|(n, ka, kb)| {
        (prop::collection::vec(0..ka, n), prop::collection::vec(0..kb, n))
    })
}

#[test]
fn examples() {
    assert_eq!(accuracy(&[0, 0, 1, 1], &[1, 1, 0, 0]).unwrap(), 1.0);
    assert_eq!(accuracy(&[0, 0, 0, 0], &[0, 0, 1, 1]).unwrap(), 0.5);
    assert_eq!(nmi(&[0, 0, 1, 1], &[0, 1, 0, 1]).unwrap(), 0.0);
    assert!((ari(&[0, 0, 1, 1], &[0, 1, 0, 1]).unwrap() + 0.5).abs() < 1e-12);
    let m = ClusteringMetrics::compute(&[2, 2, 7, 7], &[0, 0, 1, 1]).unwrap();
    assert_eq!((m.acc, m.nmi, m.ari), (1.0, 1.0, 1.0));
}

#[test]
fn invalid_inputs_rejected() {
    assert!(accuracy(&[0, 1], &[0]).is_err());
    assert!(nmi(&[], &[]).is_err());
    assert!(ari(&[0, 1, 2], &[0, 1]).is_err());
}

#[test]
fn table_has_one_row_per_cluster_and_column_per_class() {
    let t = ContingencyTable::new(&[5, 5, 9, 9, 9], &[1, 3, 3, 3, 1]).unwrap();
    assert_eq!(t.counts(), &[vec![1, 1], vec![1, 2]]);
    assert_eq!(t.total(), 5);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn accuracy_matches_enumerated_matching((a, b) in labelings(6)) {
        let oracle = common::accuracy_by_enumeration(&a, &b) ;
        prop_assert!((accuracy(&a, &b).unwrap() - oracle).abs() < 1e-12);
    }

    #[test]
    fn ari_matches_pair_counting((a, b) in labelings(6)) {
        let oracle = common::ari_by_pairs(&a, &b);
        prop_assume!(oracle.is_finite());
        prop_assert!((ari(&a, &b).unwrap() - oracle).abs() < 1e-10);
    }

    #[test]
    fn nmi_matches_counting_and_is_symmetric((a, b) in labelings(6)) {
        let got = nmi(&a, &b).unwrap();
        prop_assert!((0.0..=1.0).contains(&got));
        prop_assert!((got - nmi_by_counting(&a, &b)).abs() < 1e-10);
        prop_assert!((got - nmi(&b, &a).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn metrics_invariant_under_relabeling(
        (a, b) in labelings(6),
        pa in Just((0..6).collect::<Vec<usize>>()).prop_shuffle(),
        pb in Just((0..6).collect::<Vec<usize>>()).prop_shuffle(),
    ) {
        let base = ClusteringMetrics::compute(&a, &b).unwrap();
        let moved = ClusteringMetrics::compute(&relabel(&a, &pa), &relabel(&b, &pb)).unwrap();
        prop_assert!((base.acc - moved.acc).abs() < 1e-12);
        prop_assert!((base.nmi - moved.nmi).abs() < 1e-12);
        prop_assert!((base.ari - moved.ari).abs() < 1e-12);
    }

    #[test]
    fn identical_labelings_score_perfectly((a, _) in labelings(6)) {
        let m = ClusteringMetrics::compute(&a, &a).unwrap();
        prop_assert_eq!(m.acc, 1.0);
        prop_assert!((m.nmi - 1.0).abs() < 1e-12);
        prop_assert!((m.ari - 1.0).abs() < 1e-12);
    }
}
