//! External clustering quality measures: accuracy under the best
//! cluster-to-class matching, NMI (arithmetic-mean normalization) and ARI.

use pathfinding::kuhn_munkres::kuhn_munkres;
use pathfinding::matrix::Matrix;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SaseError};

/// Co-occurrence counts of predicted clusters (rows) and true classes (columns).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    counts: Vec<Vec<u64>>,
    n: u64,
}

/// Maps arbitrary ids onto `0..k` in ascending id order.
fn compact(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut ids: Vec<usize> = labels.to_vec();
    ids.sort_unstable();
    ids.dedup();
    let mapped = labels
        .iter()
        .map(|l| ids.binary_search(l).unwrap())
        .collect();
    (mapped, ids.len())
}

impl ContingencyTable {
    pub fn new(pred: &[usize], truth: &[usize]) -> Result<Self> {
        if pred.len() != truth.len() {
            return Err(SaseError::DimensionMismatch(format!(
                "{} predictions vs {} labels",
                pred.len(),
                truth.len()
            )));
        }
        if pred.is_empty() {
            return Err(SaseError::InvalidParameter("empty labelings".into()));
        }
        let (p, rows) = compact(pred);
        let (t, cols) = compact(truth);
        let mut counts = vec![vec![0u64; cols]; rows];
        for (&a, &b) in p.iter().zip(&t) {
            counts[a][b] += 1;
        }
        Ok(ContingencyTable {
            counts,
            n: pred.len() as u64,
        })
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.n
    }

    fn row_sums(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    fn col_sums(&self) -> Vec<u64> {
        let cols = self.counts[0].len();
        (0..cols)
            .map(|j| self.counts.iter().map(|r| r[j]).sum())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusteringMetrics {
    pub acc: f64,
    pub nmi: f64,
    pub ari: f64,
}

impl ClusteringMetrics {
    pub fn compute(pred: &[usize], truth: &[usize]) -> Result<Self> {
        let table = ContingencyTable::new(pred, truth)?;
        Ok(ClusteringMetrics {
            acc: accuracy_from_table(&table),
            nmi: nmi_from_table(&table),
            ari: ari_from_table(&table),
        })
    }
}

pub fn accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    Ok(accuracy_from_table(&ContingencyTable::new(pred, truth)?))
}

pub fn nmi(pred: &[usize], truth: &[usize]) -> Result<f64> {
    Ok(nmi_from_table(&ContingencyTable::new(pred, truth)?))
}

pub fn ari(pred: &[usize], truth: &[usize]) -> Result<f64> {
    Ok(ari_from_table(&ContingencyTable::new(pred, truth)?))
}

pub fn accuracy_from_table(table: &ContingencyTable) -> f64 {
    let rows = table.counts.len();
    let cols = table.counts[0].len();
    let size = rows.max(cols);
    let weights = Matrix::from_fn(size, size, |(i, j)| {
        if i < rows && j < cols {
            table.counts[i][j] as i64
        } else {
            0
        }
    });
    let (matched, _) = kuhn_munkres(&weights);
    matched as f64 / table.n as f64
}

fn entropy(sums: &[u64], n: f64) -> f64 {
    sums.iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Returns 1.0 by convention when both labelings consist of a single group.
pub fn nmi_from_table(table: &ContingencyTable) -> f64 {
    let n = table.n as f64;
    let rows = table.row_sums();
    let cols = table.col_sums();
    let h_pred = entropy(&rows, n);
    let h_true = entropy(&cols, n);
    if h_pred == 0.0 && h_true == 0.0 {
        return 1.0;
    }
    let mut mi = 0.0;
    for (i, row) in table.counts.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if c > 0 {
                let c = c as f64;
                mi += c / n * (c * n / (rows[i] as f64 * cols[j] as f64)).ln();
            }
        }
    }
    let denom = 0.5 * (h_pred + h_true);
    (mi / denom).clamp(0.0, 1.0)
}

fn pairs(c: u64) -> f64 {
    let c = c as f64;
    c * (c - 1.0) / 2.0
}

pub fn ari_from_table(table: &ContingencyTable) -> f64 {
    let index: f64 = table.counts.iter().flatten().map(|&c| pairs(c)).sum();
    let sum_rows: f64 = table.row_sums().into_iter().map(pairs).sum();
    let sum_cols: f64 = table.col_sums().into_iter().map(pairs).sum();
    let total = pairs(table.n);
    let expected = sum_rows * sum_cols / total.max(1.0);
    let max_index = 0.5 * (sum_rows + sum_cols);
    let denom = max_index - expected;
    if denom == 0.0 {
        // Both sides all-singletons or both one cluster: identical partitions.
        return if index == max_index { 1.0 } else { 0.0 };
    }
    (index - expected) / denom
}
