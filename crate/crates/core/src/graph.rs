//! Attributed graphs, symmetric normalization with self-loops, and k-order
//! feature propagation.
//!
//! Adjacency is kept in compressed-row form. The normalized operator
//! `S = D̂^{-1/2} (A + I) D̂^{-1/2}` stores its diagonal explicitly so a
//! propagation step is a single pass over the stored entries.

use ndarray::{Array2, ArrayView2, Axis, Zip};
use rayon::prelude::*;

use crate::error::{Result, SaseError};

/// Sparse symmetric binary adjacency in compressed-row form.
///
/// Rows are sorted, free of duplicates and self-loops.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrAdjacency {
    offsets: Vec<usize>,
    indices: Vec<usize>,
}

/// What [`CsrAdjacency::from_edges`] removed while cleaning an edge list.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CleanupReport {
    pub input_edges: usize,
    pub duplicates_dropped: usize,
    pub loops_stripped: usize,
}

impl CsrAdjacency {
    /// Builds a symmetric adjacency from an arbitrary (possibly directed,
    /// duplicated, self-looped) edge list.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<(Self, CleanupReport)>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut report = CleanupReport::default();
        let mut pairs = Vec::new();
        for (u, v) in edges {
            report.input_edges += 1;
            if u >= n || v >= n {
                return Err(SaseError::InvalidParameter(format!(
                    "edge ({u}, {v}) out of range for n = {n}"
                )));
            }
            if u == v {
                report.loops_stripped += 1;
                continue;
            }
            pairs.push((u.min(v), u.max(v)));
        }
        let before = pairs.len();
        pairs.sort_unstable();
        pairs.dedup();
        report.duplicates_dropped = before - pairs.len();

        let mut degree = vec![0usize; n];
        for &(u, v) in &pairs {
            degree[u] += 1;
            degree[v] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut cursor = offsets[..n].to_vec();
        let mut indices = vec![0usize; offsets[n]];
        for &(u, v) in &pairs {
            indices[cursor[u]] = v;
            cursor[u] += 1;
            indices[cursor[v]] = u;
            cursor[v] += 1;
        }
        for i in 0..n {
            indices[offsets[i]..offsets[i + 1]].sort_unstable();
        }
        Ok((CsrAdjacency { offsets, indices }, report))
    }

    /// Wraps raw CSR arrays after checking every structural invariant.
    pub fn from_raw(offsets: Vec<usize>, indices: Vec<usize>) -> Result<Self> {
        let adj = CsrAdjacency { offsets, indices };
        adj.validate()?;
        Ok(adj)
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(SaseError::InvalidParameter(m));
        if self.offsets.is_empty() || self.offsets[0] != 0 {
            return bad("row offsets must start at 0".into());
        }
        let n = self.offsets.len() - 1;
        if *self.offsets.last().unwrap() != self.indices.len() {
            return bad("row offsets do not cover the index array".into());
        }
        for i in 0..n {
            if self.offsets[i] > self.offsets[i + 1] {
                return bad(format!("row offsets decrease at row {i}"));
            }
            let row = self.neighbors(i);
            for (p, &j) in row.iter().enumerate() {
                if j >= n {
                    return bad(format!("column {j} out of range in row {i}"));
                }
                if j == i {
                    return bad(format!("self-loop stored at node {i}"));
                }
                if p > 0 && row[p - 1] >= j {
                    return bad(format!("row {i} unsorted or duplicated"));
                }
                if self.neighbors(j).binary_search(&i).is_err() {
                    return bad(format!("edge ({i}, {j}) has no reverse"));
                }
            }
        }
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        self.indices.len() / 2
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.indices[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    /// Iterates each undirected edge once as `(u, v)` with `u < v`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.node_count()).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .copied()
                .filter(move |&v| v > u)
                .map(move |v| (u, v))
        })
    }
}

/// An attributed graph: adjacency, node features and optional labels.
#[derive(Debug, Clone)]
pub struct GraphBundle {
    adjacency: CsrAdjacency,
    features: Array2<f64>,
    labels: Option<Vec<usize>>,
}

impl GraphBundle {
    pub fn new(
        adjacency: CsrAdjacency,
        features: Array2<f64>,
        labels: Option<Vec<usize>>,
    ) -> Result<Self> {
        let n = adjacency.node_count();
        if n == 0 {
            return Err(SaseError::InvalidParameter("graph has no nodes".into()));
        }
        if features.nrows() != n {
            return Err(SaseError::DimensionMismatch(format!(
                "features have {} rows, graph has {n} nodes",
                features.nrows()
            )));
        }
        if let Some((pos, _)) = features.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            let f = features.ncols().max(1);
            return Err(SaseError::NonFinite(format!(
                "feature ({}, {})",
                pos / f,
                pos % f
            )));
        }
        if let Some(labels) = &labels {
            if labels.len() != n {
                return Err(SaseError::DimensionMismatch(format!(
                    "{} labels for {n} nodes",
                    labels.len()
                )));
            }
        }
        Ok(GraphBundle {
            adjacency,
            features,
            labels,
        })
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.node_count()
    }

    pub fn feature_dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn adjacency(&self) -> &CsrAdjacency {
        &self.adjacency
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    /// Number of distinct label ids, when labels are present.
    pub fn class_count(&self) -> Option<usize> {
        self.labels
            .as_ref()
            .map(|l| l.iter().copied().max().map_or(0, |m| m + 1))
    }
}

/// `S = D̂^{-1/2} (A + I) D̂^{-1/2}` with the diagonal stored in-row.
#[derive(Debug, Clone)]
pub struct NormalizedAdjacency {
    offsets: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl NormalizedAdjacency {
    pub fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Stored `(column, value)` entries of row `i`, ascending by column.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.offsets[i]..self.offsets[i + 1];
        self.indices[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let span = self.offsets[i]..self.offsets[i + 1];
        match self.indices[span.clone()].binary_search(&j) {
            Ok(p) => self.values[span.start + p],
            Err(_) => 0.0,
        }
    }

    /// Dense copy; meant for small graphs and test oracles.
    pub fn to_dense(&self) -> Array2<f64> {
        let n = self.node_count();
        let mut out = Array2::zeros((n, n));
        for i in 0..n {
            for (j, v) in self.row(i) {
                out[[i, j]] = v;
            }
        }
        out
    }
}

pub fn normalize_adjacency(g: &GraphBundle) -> NormalizedAdjacency {
    let adj = g.adjacency();
    let n = adj.node_count();
    let self_looped = |i: usize| (adj.degree(i) + 1) as f64;

    let mut offsets = Vec::with_capacity(n + 1);
    let mut indices = Vec::with_capacity(adj.indices.len() + n);
    let mut values = Vec::with_capacity(adj.indices.len() + n);
    offsets.push(0);
    for i in 0..n {
        let mut diag_done = false;
        for &j in adj.neighbors(i) {
            if !diag_done && j > i {
                indices.push(i);
                values.push(1.0 / self_looped(i));
                diag_done = true;
            }
            indices.push(j);
            values.push(1.0 / (self_looped(i) * self_looped(j)).sqrt());
        }
        if !diag_done {
            indices.push(i);
            values.push(1.0 / self_looped(i));
        }
        offsets.push(indices.len());
    }
    NormalizedAdjacency {
        offsets,
        indices,
        values,
    }
}

/// One propagation step `S · m`.
///
/// Each output row accumulates its terms in ascending column order, so the
/// result is bit-identical for any thread count.
pub fn propagate_once(s: &NormalizedAdjacency, m: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    let n = s.node_count();
    if m.nrows() != n {
        return Err(SaseError::DimensionMismatch(format!(
            "operand has {} rows, operator has {n}",
            m.nrows()
        )));
    }
    let mut out = Array2::<f64>::zeros((n, m.ncols()));
    out.axis_iter_mut(Axis(0))
        .into_par_iter()
        .enumerate()
        .for_each(|(i, mut row)| {
            for (j, w) in s.row(i) {
                Zip::from(&mut row)
                    .and(m.row(j))
                    .for_each(|acc, &x| *acc += w * x);
            }
        });
    Ok(out)
}

/// Smoothed features `X^(k)` together with their order.
#[derive(Debug, Clone)]
pub struct SmoothedFeatures {
    pub order: usize,
    pub matrix: Array2<f64>,
}

/// `S^k X` by `k` successive propagation steps.
pub fn smooth_features(g: &GraphBundle, k: usize) -> Result<SmoothedFeatures> {
    let s = normalize_adjacency(g);
    let mut cache = PropagationCache::new(&s, g.features().view())?;
    cache.advance_to(k)?;
    Ok(SmoothedFeatures {
        order: k,
        matrix: cache.current().to_owned(),
    })
}

/// Holds only the most recent `X^(k)`, so sweeping the order costs one
/// propagation per increment and `O(nf)` extra memory.
pub struct PropagationCache<'a> {
    operator: &'a NormalizedAdjacency,
    base: ArrayView2<'a, f64>,
    order: usize,
    latest: Option<Array2<f64>>,
}

impl<'a> PropagationCache<'a> {
    pub fn new(operator: &'a NormalizedAdjacency, base: ArrayView2<'a, f64>) -> Result<Self> {
        if base.nrows() != operator.node_count() {
            return Err(SaseError::DimensionMismatch(format!(
                "features have {} rows, operator has {}",
                base.nrows(),
                operator.node_count()
            )));
        }
        Ok(PropagationCache {
            operator,
            base,
            order: 0,
            latest: None,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn current(&self) -> ArrayView2<'_, f64> {
        match &self.latest {
            Some(m) => m.view(),
            None => self.base.view(),
        }
    }

    pub fn advance(&mut self) -> Result<()> {
        let next = propagate_once(self.operator, self.current())?;
        self.latest = Some(next);
        self.order += 1;
        Ok(())
    }

    /// Moves forward to order `k`; going backwards restarts from `X`.
    pub fn advance_to(&mut self, k: usize) -> Result<()> {
        if k < self.order {
            self.order = 0;
            self.latest = None;
        }
        while self.order < k {
            self.advance()?;
        }
        Ok(())
    }
}

/// `αX + (1−α)X^(k)`, clamped elementwise to the span of its two inputs.
pub fn fuse_features(
    x: ArrayView2<'_, f64>,
    xk: ArrayView2<'_, f64>,
    alpha: f64,
) -> Result<Array2<f64>> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(SaseError::InvalidParameter(format!(
            "alpha = {alpha} outside [0, 1]"
        )));
    }
    if x.dim() != xk.dim() {
        return Err(SaseError::DimensionMismatch(format!(
            "{:?} vs {:?}",
            x.dim(),
            xk.dim()
        )));
    }
    let beta = 1.0 - alpha;
    Ok(Zip::from(&x).and(&xk).par_map_collect(|&a, &b| {
        let v = alpha * a + beta * b;
        v.clamp(a.min(b), a.max(b))
    }))
}

/// Scales every row to unit ℓ₁ norm; all-zero rows are left alone.
pub fn l1_normalize_rows(m: &mut Array2<f64>) {
    for mut row in m.rows_mut() {
        let norm: f64 = row.iter().map(|v| v.abs()).sum();
        if norm > 0.0 {
            row.mapv_inplace(|v| v / norm);
        }
    }
}
