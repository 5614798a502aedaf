use serde::{Deserialize, Serialize};

use crate::error::{Result, SaseError};
use crate::kernel::VarianceMode;
use crate::linalg::{KmeansOptions, SvdOptions};

/// Fixed convolution order, or adaptive selection up to a cap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderMode {
    Fixed { order: usize },
    Adaptive { max_order: usize },
}

/// Offsets added to the master seed for each randomized stage.
pub mod seed_offset {
    pub const FEATURE_SVD: u64 = 0;
    pub const BANDWIDTH: u64 = 1;
    pub const RFF: u64 = 2;
    pub const SPECTRAL_SVD: u64 = 3;
    pub const KMEANS: u64 = 4;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaseConfig {
    pub order: OrderMode,
    pub alpha: f64,
    /// Width of the truncated-SVD feature reduction.
    pub reduced_dim: usize,
    /// Spectral embedding width; `None` reuses `reduced_dim`.
    pub embed_dim: Option<usize>,
    /// `D`; the feature map has `2D` outputs.
    pub rff_half_dim: usize,
    /// Kernel bandwidth; `None` selects the median heuristic.
    pub sigma: Option<f64>,
    pub bandwidth_sample: usize,
    pub rff_variance: VarianceMode,
    pub clusters: usize,
    pub seed: u64,
    pub kmeans_restarts: usize,
    pub kmeans_max_iter: usize,
    pub kmeans_tolerance: f64,
    pub svd_oversample: usize,
    pub svd_power_iterations: usize,
    pub normalize_features: bool,
}

impl Default for SaseConfig {
    fn default() -> Self {
        SaseConfig {
            order: OrderMode::Adaptive { max_order: 50 },
            alpha: 0.2,
            reduced_dim: 32,
            embed_dim: None,
            rff_half_dim: 50,
            sigma: None,
            bandwidth_sample: 1000,
            rff_variance: VarianceMode::Dual,
            clusters: 2,
            seed: 0,
            kmeans_restarts: 10,
            kmeans_max_iter: 50,
            kmeans_tolerance: 1e-6,
            svd_oversample: 10,
            svd_power_iterations: 2,
            normalize_features: false,
        }
    }
}

impl SaseConfig {
    pub fn embedding_dim(&self) -> usize {
        self.embed_dim.unwrap_or(self.reduced_dim)
    }

    pub fn stage_seed(&self, offset: u64) -> u64 {
        self.seed.wrapping_add(offset)
    }

    pub fn kmeans_options(&self) -> KmeansOptions {
        KmeansOptions {
            max_iter: self.kmeans_max_iter,
            restarts: self.kmeans_restarts,
            tolerance: self.kmeans_tolerance,
        }
    }

    pub fn svd_options(&self) -> SvdOptions {
        SvdOptions {
            oversample: self.svd_oversample,
            power_iterations: self.svd_power_iterations,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(SaseError::InvalidParameter(m));
        if !(0.0..=1.0).contains(&self.alpha) {
            return fail(format!("alpha = {} outside [0, 1]", self.alpha));
        }
        if self.reduced_dim == 0 || self.embedding_dim() == 0 {
            return fail("dimensions must be ≥ 1".into());
        }
        if self.rff_half_dim == 0 {
            return fail("rff half dimension must be ≥ 1".into());
        }
        if let Some(s) = self.sigma {
            if !(s > 0.0 && s.is_finite()) {
                return fail(format!("sigma = {s} must be positive and finite"));
            }
        }
        if self.clusters == 0 {
            return fail("cluster count must be ≥ 1".into());
        }
        if self.kmeans_restarts == 0 || self.kmeans_max_iter == 0 {
            return fail("k-means restarts and max_iter must be ≥ 1".into());
        }
        if self.bandwidth_sample < 2 {
            return fail("bandwidth sample must be ≥ 2".into());
        }
        if let OrderMode::Adaptive { max_order } = self.order {
            if max_order == 0 {
                return fail("max_order must be ≥ 1".into());
            }
            if self.clusters < 2 {
                return fail("adaptive order selection needs at least 2 clusters".into());
            }
        }
        Ok(())
    }
}
