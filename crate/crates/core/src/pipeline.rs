//! One full clustering round at a fixed convolution order:
//! smooth → fuse → reduce → project → embed → k-means → score.

use std::borrow::Cow;
use std::time::Instant;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::config::{seed_offset, SaseConfig};
use crate::error::{Result, SaseError};
use crate::graph::{
    fuse_features, l1_normalize_rows, normalize_adjacency, GraphBundle, NormalizedAdjacency,
    PropagationCache,
};
use crate::kernel::{build_projector, median_bandwidth};
use crate::linalg::{kmeans, truncated_svd_with};
use crate::selection::{criterion_score, CriterionScore};
use crate::spectral::spectral_embed_with;

/// Wall-clock seconds per stage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub propagate: f64,
    pub fuse: f64,
    pub reduce: f64,
    pub bandwidth: f64,
    pub project: f64,
    pub embed: f64,
    pub kmeans: f64,
    pub score: f64,
}

impl StageTimings {
    pub fn total(&self) -> f64 {
        self.propagate
            + self.fuse
            + self.reduce
            + self.bandwidth
            + self.project
            + self.embed
            + self.kmeans
            + self.score
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub zero_embedding_rows: usize,
    pub clamped_degrees: usize,
    pub kmeans_iterations: usize,
    pub kmeans_inertia: f64,
}

#[derive(Debug, Clone)]
pub struct ClusterResult {
    pub order: usize,
    pub assignments: Vec<usize>,
    pub centroids: Array2<f64>,
    /// Absent when only one cluster is requested.
    pub score: Option<CriterionScore>,
    /// Bandwidth actually used, after the median heuristic if it ran.
    pub bandwidth: f64,
    pub diagnostics: Diagnostics,
    pub timings: StageTimings,
}

impl ClusterResult {
    pub fn score_value(&self) -> Option<f64> {
        self.score.as_ref().map(|s| s.value)
    }
}

fn seconds_since(start: Instant) -> f64 {
    start.elapsed().as_secs_f64()
}

/// Graph-level state shared by every round: the normalized operator and
/// the (optionally ℓ₁-normalized) base features.
pub struct Pipeline<'a> {
    graph: &'a GraphBundle,
    normalize_features: bool,
    operator: NormalizedAdjacency,
    base: Cow<'a, Array2<f64>>,
}

impl<'a> Pipeline<'a> {
    pub fn new(graph: &'a GraphBundle, cfg: &SaseConfig) -> Result<Self> {
        check_config(graph, cfg)?;
        let base = if cfg.normalize_features {
            let mut x = graph.features().clone();
            l1_normalize_rows(&mut x);
            Cow::Owned(x)
        } else {
            Cow::Borrowed(graph.features())
        };
        Ok(Pipeline {
            graph,
            normalize_features: cfg.normalize_features,
            operator: normalize_adjacency(graph),
            base,
        })
    }

    pub fn cache(&self) -> Result<PropagationCache<'_>> {
        PropagationCache::new(&self.operator, self.base.view())
    }

    /// Runs every stage after propagation on the cache's current order.
    /// `cfg` may differ from the one the pipeline was built with in every
    /// field except the feature-normalization flag.
    pub fn cluster_at(
        &self,
        cache: &PropagationCache<'_>,
        cfg: &SaseConfig,
        propagate_secs: f64,
    ) -> Result<ClusterResult> {
        if cfg.normalize_features != self.normalize_features {
            return Err(SaseError::InvalidParameter(
                "feature normalization differs from the prepared pipeline".into(),
            ));
        }
        check_config(self.graph, cfg)?;
        let mut timings = StageTimings {
            propagate: propagate_secs,
            ..Default::default()
        };
        let start = Instant::now();
        let fused = fuse_features(self.base.view(), cache.current(), cfg.alpha)?;
        timings.fuse = seconds_since(start);

        let start = Instant::now();
        let reduced = truncated_svd_with(
            fused.view(),
            cfg.reduced_dim,
            cfg.stage_seed(seed_offset::FEATURE_SVD),
            cfg.svd_options(),
        )?
        .scaled_left();
        drop(fused);
        timings.reduce = seconds_since(start);

        let start = Instant::now();
        let bandwidth = match cfg.sigma {
            Some(s) => s,
            None => median_bandwidth(
                reduced.view(),
                cfg.bandwidth_sample,
                cfg.stage_seed(seed_offset::BANDWIDTH),
            )?,
        };
        timings.bandwidth = seconds_since(start);

        let start = Instant::now();
        let projector = build_projector(
            cfg.reduced_dim,
            cfg.rff_half_dim,
            bandwidth,
            cfg.stage_seed(seed_offset::RFF),
            cfg.rff_variance,
        )?;
        let projected = projector.project(reduced.view())?;
        drop(reduced);
        timings.project = seconds_since(start);

        let start = Instant::now();
        let embedding = spectral_embed_with(
            projected.view(),
            cfg.embedding_dim(),
            cfg.stage_seed(seed_offset::SPECTRAL_SVD),
            cfg.svd_options(),
        )?;
        drop(projected);
        timings.embed = seconds_since(start);

        let start = Instant::now();
        let km = kmeans(
            embedding.vectors.view(),
            cfg.clusters,
            cfg.stage_seed(seed_offset::KMEANS),
            cfg.kmeans_options(),
        )?;
        timings.kmeans = seconds_since(start);

        let start = Instant::now();
        let score = if cfg.clusters >= 2 {
            Some(criterion_score(
                embedding.vectors.view(),
                &km.assignments,
                km.centroids.view(),
            )?)
        } else {
            None
        };
        timings.score = seconds_since(start);

        Ok(ClusterResult {
            order: cache.order(),
            assignments: km.assignments,
            centroids: km.centroids,
            score,
            bandwidth,
            diagnostics: Diagnostics {
                zero_embedding_rows: embedding.zero_row_count,
                clamped_degrees: embedding.clamped_degrees,
                kmeans_iterations: km.iterations_run,
                kmeans_inertia: km.inertia,
            },
            timings,
        })
    }
}

/// Runs the full pipeline once at convolution order `k`.
pub fn sase_cluster_once(graph: &GraphBundle, cfg: &SaseConfig, k: usize) -> Result<ClusterResult> {
    let pipeline = Pipeline::new(graph, cfg)?;
    let start = Instant::now();
    let mut cache = pipeline.cache()?;
    cache.advance_to(k)?;
    let propagate = seconds_since(start);
    pipeline.cluster_at(&cache, cfg, propagate)
}

fn check_config(graph: &GraphBundle, cfg: &SaseConfig) -> Result<()> {
    cfg.validate()?;
    let n = graph.node_count();
    let f = graph.feature_dim();
    if cfg.reduced_dim > n.min(f) {
        return Err(SaseError::InvalidParameter(format!(
            "reduced dimension {} exceeds min(n, f) = {}",
            cfg.reduced_dim,
            n.min(f)
        )));
    }
    if cfg.embedding_dim() > n.min(2 * cfg.rff_half_dim) {
        return Err(SaseError::InvalidParameter(format!(
            "embedding dimension {} exceeds min(n, 2D) = {}",
            cfg.embedding_dim(),
            n.min(2 * cfg.rff_half_dim)
        )));
    }
    if cfg.clusters > n {
        return Err(SaseError::InvalidParameter(format!(
            "{} clusters requested for {n} nodes",
            cfg.clusters
        )));
    }
    Ok(())
}
