//! Order selection: the centroid-distance-ratio criterion and the
//! incremental stopping rule over convolution orders.

use std::fmt::Write as _;
use std::time::Instant;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::config::{OrderMode, SaseConfig};
use crate::error::{Result, SaseError};
use crate::graph::GraphBundle;
use crate::metrics::ClusteringMetrics;
use crate::pipeline::{ClusterResult, Pipeline};

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionScore {
    /// Mean of `a(i) / b(i)`; lower is better.
    pub value: f64,
    pub per_node_ratios: Vec<f64>,
}

/// `s = mean_i ‖uᵢ − p_{cᵢ}‖ / min_{j≠cᵢ} ‖uᵢ − p_j‖`.
pub fn criterion_score(
    embedding: ArrayView2<'_, f64>,
    assignments: &[usize],
    centroids: ArrayView2<'_, f64>,
) -> Result<CriterionScore> {
    let (n, dim) = embedding.dim();
    let m = centroids.nrows();
    if m < 2 {
        return Err(SaseError::InvalidParameter(
            "criterion needs at least two centroids".into(),
        ));
    }
    if assignments.len() != n {
        return Err(SaseError::DimensionMismatch(format!(
            "{} assignments for {n} rows",
            assignments.len()
        )));
    }
    if centroids.ncols() != dim {
        return Err(SaseError::DimensionMismatch(format!(
            "centroids have {} columns, embedding has {dim}",
            centroids.ncols()
        )));
    }
    if n == 0 {
        return Err(SaseError::InvalidParameter("empty embedding".into()));
    }

    let mut ratios = Vec::with_capacity(n);
    for (i, &own) in assignments.iter().enumerate() {
        if own >= m {
            return Err(SaseError::InvalidParameter(format!(
                "assignment {own} at row {i} exceeds {m} centroids"
            )));
        }
        let row = embedding.row(i);
        let dist = |j: usize| -> f64 {
            row.iter()
                .zip(centroids.row(j).iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        };
        let a = dist(own);
        let b = (0..m)
            .filter(|&j| j != own)
            .map(dist)
            .fold(f64::INFINITY, f64::min);
        let ratio = if b > 0.0 {
            a / b
        } else if a == 0.0 {
            1.0
        } else {
            return Err(SaseError::Degenerate(format!(
                "row {i} sits on a foreign centroid but not on its own"
            )));
        };
        ratios.push(ratio);
    }
    let value = ratios.iter().sum::<f64>() / n as f64;
    Ok(CriterionScore {
        value,
        per_node_ratios: ratios,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// The score rose (`Δ < 0`); the previous order was kept.
    ScoreIncreased,
    /// The order cap was hit; the lowest-score order was kept.
    OrderCap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub order: usize,
    pub score: f64,
    /// `s(k−1) − s(k)`; absent at the first order.
    pub delta: Option<f64>,
    pub metrics: Option<ClusteringMetrics>,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct AdaptiveTrace {
    pub records: Vec<TraceRecord>,
    pub selected_order: usize,
    pub selected_result: ClusterResult,
    pub stop: StopReason,
}

impl AdaptiveTrace {
    pub fn to_csv(&self) -> String {
        records_to_csv(&self.records)
    }
}

pub const TRACE_CSV_HEADER: &str = "k,s,delta,acc,nmi,ari,seconds";

pub fn records_to_csv(records: &[TraceRecord]) -> String {
    let mut out = String::from(TRACE_CSV_HEADER);
    out.push('\n');
    for r in records {
        let delta = r.delta.map(|d| d.to_string()).unwrap_or_default();
        let (acc, nmi, ari) = match r.metrics {
            Some(m) => (m.acc.to_string(), m.nmi.to_string(), m.ari.to_string()),
            None => Default::default(),
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.order, r.score, delta, acc, nmi, ari, r.seconds
        );
    }
    out
}

/// Drives the order loop from `k = 1` upward. `round(k)` must return the
/// clustering at order `k`; it is called with consecutive orders only.
pub fn adaptive_select_with<F>(
    max_order: usize,
    labels: Option<&[usize]>,
    mut round: F,
) -> Result<AdaptiveTrace>
where
    F: FnMut(usize) -> Result<ClusterResult>,
{
    if max_order == 0 {
        return Err(SaseError::InvalidParameter("max_order must be ≥ 1".into()));
    }
    let mut records = Vec::new();
    let mut previous: Option<ClusterResult> = None;
    let mut best: Option<ClusterResult> = None;

    for k in 1..=max_order {
        let start = Instant::now();
        let result = round(k)?;
        let seconds = start.elapsed().as_secs_f64();
        let score = result.score_value().ok_or_else(|| {
            SaseError::InvalidParameter("order selection needs at least two clusters".into())
        })?;
        let delta = previous
            .as_ref()
            .map(|p| p.score_value().unwrap() - score);
        let metrics = labels
            .map(|l| ClusteringMetrics::compute(&result.assignments, l))
            .transpose()?;
        records.push(TraceRecord {
            order: k,
            score,
            delta,
            metrics,
            seconds,
        });

        if delta.is_some_and(|d| d < 0.0) {
            let chosen = previous.unwrap();
            return Ok(AdaptiveTrace {
                records,
                selected_order: chosen.order,
                selected_result: chosen,
                stop: StopReason::ScoreIncreased,
            });
        }
        if best
            .as_ref()
            .is_none_or(|b| score < b.score_value().unwrap())
        {
            best = Some(result.clone());
        }
        previous = Some(result);
    }

    let chosen = best.unwrap();
    Ok(AdaptiveTrace {
        records,
        selected_order: chosen.order,
        selected_result: chosen,
        stop: StopReason::OrderCap,
    })
}

/// Adaptive order selection over `k = 1..=max_order`, one propagation per
/// increment.
pub fn adaptive_select(graph: &GraphBundle, cfg: &SaseConfig) -> Result<AdaptiveTrace> {
    let max_order = match cfg.order {
        OrderMode::Adaptive { max_order } => max_order,
        OrderMode::Fixed { .. } => {
            return Err(SaseError::InvalidParameter(
                "adaptive selection requested with a fixed order".into(),
            ))
        }
    };
    let pipeline = Pipeline::new(graph, cfg)?;
    let mut cache = pipeline.cache()?;
    adaptive_select_with(max_order, graph.labels(), |k| {
        let start = Instant::now();
        cache.advance_to(k)?;
        let propagate = start.elapsed().as_secs_f64();
        pipeline.cluster_at(&cache, cfg, propagate)
    })
}
