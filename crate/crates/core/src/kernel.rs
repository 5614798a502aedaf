//! Gaussian kernel and its random Fourier feature approximation.
//!
//! A projector draws `D` frequencies once and maps each row `z` to
//! `[cos(ωᵢᵀz)…, sin(ωᵢᵀz)…] / √D`, so inner products of projected rows
//! estimate the kernel without forming any `n × n` matrix.

use ndarray::{s, Array2, ArrayView1, ArrayView2};
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SaseError};

/// Lower bound applied to any estimated bandwidth.
pub const BANDWIDTH_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub bandwidth: f64,
    pub kind: KernelKind,
}

impl KernelSpec {
    pub fn gaussian(bandwidth: f64) -> Result<Self> {
        check_bandwidth(bandwidth)?;
        Ok(KernelSpec {
            bandwidth,
            kind: KernelKind::Gaussian,
        })
    }

    pub fn evaluate(&self, x: ArrayView1<'_, f64>, y: ArrayView1<'_, f64>) -> Result<f64> {
        match self.kind {
            KernelKind::Gaussian => gaussian_kernel(x, y, self.bandwidth),
        }
    }
}

/// How the frequency variance relates to the bandwidth σ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarianceMode {
    /// Per-coordinate variance `1/σ`.
    Literal,
    /// Per-coordinate variance `1/σ²`, the Fourier dual of `exp(−‖x−y‖²/2σ²)`.
    #[default]
    Dual,
}

impl VarianceMode {
    pub fn variance(self, bandwidth: f64) -> f64 {
        match self {
            VarianceMode::Literal => 1.0 / bandwidth,
            VarianceMode::Dual => 1.0 / (bandwidth * bandwidth),
        }
    }
}

fn check_bandwidth(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(SaseError::InvalidParameter(format!(
            "bandwidth must be positive and finite, got {sigma}"
        )))
    }
}

/// `exp(−‖x − y‖² / 2σ²)`.
pub fn gaussian_kernel(x: ArrayView1<'_, f64>, y: ArrayView1<'_, f64>, sigma: f64) -> Result<f64> {
    check_bandwidth(sigma)?;
    if x.len() != y.len() {
        return Err(SaseError::DimensionMismatch(format!(
            "kernel arguments of length {} and {}",
            x.len(),
            y.len()
        )));
    }
    let sq: f64 = x.iter().zip(y.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((-sq / (2.0 * sigma * sigma)).exp())
}

/// Median pairwise Euclidean distance over a seeded sample of at most
/// `sample_cap` rows.
pub fn median_bandwidth(points: ArrayView2<'_, f64>, sample_cap: usize, seed: u64) -> Result<f64> {
    let n = points.nrows();
    if n < 2 || sample_cap < 2 {
        return Err(SaseError::Degenerate(
            "median bandwidth needs at least two points".into(),
        ));
    }
    let rows: Vec<usize> = if n <= sample_cap {
        (0..n).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut picked = index::sample(&mut rng, n, sample_cap).into_vec();
        picked.sort_unstable();
        picked
    };

    let mut distances = Vec::with_capacity(rows.len() * (rows.len() - 1) / 2);
    for (a, &i) in rows.iter().enumerate() {
        for &j in &rows[a + 1..] {
            let sq: f64 = points
                .row(i)
                .iter()
                .zip(points.row(j).iter())
                .map(|(x, y)| (x - y) * (x - y))
                .sum();
            distances.push(sq.sqrt());
        }
    }
    if distances.iter().all(|&d| d == 0.0) {
        return Err(SaseError::Degenerate(
            "fewer than two distinct points; all pairwise distances are zero".into(),
        ));
    }
    distances.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mid = distances.len() / 2;
    let median = if distances.len() % 2 == 1 {
        distances[mid]
    } else {
        0.5 * (distances[mid - 1] + distances[mid])
    };
    Ok(median.max(BANDWIDTH_FLOOR))
}

/// Frozen random frequencies defining the feature map.
#[derive(Debug, Clone)]
pub struct RffProjector {
    frequencies: Array2<f64>,
    bandwidth: f64,
    half_dim: usize,
    seed: u64,
    mode: VarianceMode,
}

pub fn build_projector(
    input_dim: usize,
    half_dim: usize,
    bandwidth: f64,
    seed: u64,
    mode: VarianceMode,
) -> Result<RffProjector> {
    if half_dim == 0 {
        return Err(SaseError::InvalidParameter("RFF half dimension must be ≥ 1".into()));
    }
    if input_dim == 0 {
        return Err(SaseError::InvalidParameter("RFF input dimension must be ≥ 1".into()));
    }
    check_bandwidth(bandwidth)?;
    let std_dev = mode.variance(bandwidth).sqrt();
    let normal = Normal::new(0.0, std_dev)
        .map_err(|e| SaseError::InvalidParameter(format!("frequency law: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let frequencies = Array2::from_shape_simple_fn((half_dim, input_dim), || normal.sample(&mut rng));
    Ok(RffProjector {
        frequencies,
        bandwidth,
        half_dim,
        seed,
        mode,
    })
}

impl RffProjector {
    /// `D × d`, one frequency per row.
    pub fn frequencies(&self) -> &Array2<f64> {
        &self.frequencies
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn half_dim(&self) -> usize {
        self.half_dim
    }

    pub fn output_dim(&self) -> usize {
        2 * self.half_dim
    }

    pub fn input_dim(&self) -> usize {
        self.frequencies.ncols()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn mode(&self) -> VarianceMode {
        self.mode
    }

    /// Maps each row of `z` to its `2D`-dimensional feature vector.
    pub fn project(&self, z: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if z.ncols() != self.input_dim() {
            return Err(SaseError::DimensionMismatch(format!(
                "projector expects {} columns, got {}",
                self.input_dim(),
                z.ncols()
            )));
        }
        let phases = z.dot(&self.frequencies.t());
        let scale = 1.0 / (self.half_dim as f64).sqrt();
        let mut out = Array2::<f64>::zeros((z.nrows(), self.output_dim()));
        out.slice_mut(s![.., ..self.half_dim])
            .assign(&phases.mapv(|p| p.cos() * scale));
        out.slice_mut(s![.., self.half_dim..])
            .assign(&phases.mapv(|p| p.sin() * scale));
        Ok(out)
    }
}
