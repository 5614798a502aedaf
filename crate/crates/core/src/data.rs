//! Graph-bundle directories, the synthetic attributed SBM, and result documents.
//!
//! A bundle directory holds `manifest.json`, an edge list (`u v` per line,
//! 0-based, `#` comments), a feature matrix (comma/space separated text or
//! the `SASEFMAT` binary layout) and optionally one label per line.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::config::SaseConfig;
use crate::error::{Result, SaseError};
use crate::graph::{CleanupReport, CsrAdjacency, GraphBundle};
use crate::metrics::ClusteringMetrics;
use crate::pipeline::{ClusterResult, Diagnostics, StageTimings};
use crate::selection::{AdaptiveTrace, StopReason};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const FEATURE_MAGIC: &[u8; 8] = b"SASEFMAT";
pub const FEATURE_FORMAT_VERSION: u8 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Text,
    Binary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphBundleManifest {
    pub n: usize,
    pub f: usize,
    #[serde(default)]
    pub m_true: Option<usize>,
    pub edges: PathBuf,
    pub features: PathBuf,
    pub feature_kind: FeatureKind,
    #[serde(default)]
    pub labels: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub cleanup: CleanupReport,
    pub classes: Option<usize>,
}

fn open(path: &Path) -> Result<fs::File> {
    fs::File::open(path).map_err(|e| SaseError::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| SaseError::io(path, e))
}

/// Non-empty, non-comment lines with their 1-based line numbers.
fn data_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let reader = BufReader::new(open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| SaseError::io(path, e))?;
        let body = line.split('#').next().unwrap_or("").trim();
        if !body.is_empty() {
            out.push((i + 1, body.to_string()));
        }
    }
    Ok(out)
}

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> SaseError {
    SaseError::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

pub fn read_edges(path: &Path, n: usize) -> Result<Vec<(usize, usize)>> {
    let mut edges = Vec::new();
    for (line_no, line) in data_lines(path)? {
        let mut parts = line.split_whitespace();
        let mut next = || -> Result<usize> {
            let tok = parts
                .next()
                .ok_or_else(|| parse_error(path, line_no, "expected two node ids"))?;
            let id: usize = tok
                .parse()
                .map_err(|_| parse_error(path, line_no, format!("bad node id {tok:?}")))?;
            if id >= n {
                return Err(parse_error(
                    path,
                    line_no,
                    format!("node id {id} out of range for n = {n}"),
                ));
            }
            Ok(id)
        };
        let u = next()?;
        let v = next()?;
        edges.push((u, v));
    }
    Ok(edges)
}

pub fn write_edges(path: &Path, adjacency: &CsrAdjacency) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| SaseError::io(path, e);
    for (u, v) in adjacency.edges() {
        writeln!(w, "{u}\t{v}").map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_features_text(path: &Path, n: usize, f: usize) -> Result<Array2<f64>> {
    let lines = data_lines(path)?;
    if lines.len() != n {
        return Err(SaseError::data(
            path,
            format!("expected {n} feature rows, found {}", lines.len()),
        ));
    }
    let mut values = Vec::with_capacity(n * f);
    for (line_no, line) in lines {
        let before = values.len();
        for tok in line.split([',', ' ', '\t']).filter(|t| !t.is_empty()) {
            let v: f64 = tok
                .parse()
                .map_err(|_| parse_error(path, line_no, format!("bad number {tok:?}")))?;
            if !v.is_finite() {
                return Err(parse_error(path, line_no, format!("non-finite value {tok}")));
            }
            values.push(v);
        }
        let cols = values.len() - before;
        if cols != f {
            return Err(parse_error(
                path,
                line_no,
                format!("expected {f} columns, found {cols}"),
            ));
        }
    }
    Ok(Array2::from_shape_vec((n, f), values).expect("shape checked per row"))
}

pub fn write_features_text(path: &Path, features: &Array2<f64>) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| SaseError::io(path, e);
    for row in features.rows() {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{}", line.join(",")).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_features_binary(path: &Path) -> Result<Array2<f64>> {
    let mut bytes = Vec::new();
    open(path)?
        .read_to_end(&mut bytes)
        .map_err(|e| SaseError::io(path, e))?;
    const HEADER: usize = 8 + 1 + 8 + 8;
    if bytes.len() < HEADER || &bytes[..8] != FEATURE_MAGIC {
        return Err(SaseError::data(path, "missing SASEFMAT header"));
    }
    if bytes[8] != FEATURE_FORMAT_VERSION {
        return Err(SaseError::data(
            path,
            format!("unsupported feature format version {}", bytes[8]),
        ));
    }
    let word = |at: usize| u64::from_le_bytes(bytes[at..at + 8].try_into().unwrap()) as usize;
    let (n, f) = (word(9), word(17));
    let expected = n
        .checked_mul(f)
        .and_then(|c| c.checked_mul(8))
        .and_then(|c| c.checked_add(HEADER));
    if expected != Some(bytes.len()) {
        return Err(SaseError::data(
            path,
            format!("header declares {n}×{f} but payload is {} bytes", bytes.len() - HEADER),
        ));
    }
    let values: Vec<f64> = bytes[HEADER..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
        return Err(SaseError::data(
            path,
            format!("non-finite value at row {}, column {}", pos / f.max(1), pos % f.max(1)),
        ));
    }
    Ok(Array2::from_shape_vec((n, f), values).unwrap())
}

pub fn write_features_binary(path: &Path, features: &Array2<f64>) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| SaseError::io(path, e);
    w.write_all(FEATURE_MAGIC).map_err(io)?;
    w.write_all(&[FEATURE_FORMAT_VERSION]).map_err(io)?;
    w.write_all(&(features.nrows() as u64).to_le_bytes()).map_err(io)?;
    w.write_all(&(features.ncols() as u64).to_le_bytes()).map_err(io)?;
    for v in features.iter() {
        w.write_all(&v.to_le_bytes()).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Reads one integer label per line and remaps the ids onto `0..classes`
/// in ascending id order.
pub fn read_labels(path: &Path, n: Option<usize>) -> Result<Vec<usize>> {
    let mut raw = Vec::new();
    for (line_no, line) in data_lines(path)? {
        let v: i64 = line
            .parse()
            .map_err(|_| parse_error(path, line_no, format!("bad label {line:?}")))?;
        raw.push(v);
    }
    if let Some(n) = n {
        if raw.len() != n {
            return Err(SaseError::data(
                path,
                format!("expected {n} labels, found {}", raw.len()),
            ));
        }
    }
    let mut ids = raw.clone();
    ids.sort_unstable();
    ids.dedup();
    Ok(raw.iter().map(|v| ids.binary_search(v).unwrap()).collect())
}

pub fn write_labels(path: &Path, labels: &[usize]) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| SaseError::io(path, e);
    for l in labels {
        writeln!(w, "{l}").map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Accepts a bundle directory or the manifest file itself.
pub fn read_manifest(path: &Path) -> Result<(GraphBundleManifest, PathBuf)> {
    let manifest_path = if path.is_dir() {
        path.join(MANIFEST_FILE)
    } else {
        path.to_path_buf()
    };
    let text = fs::read_to_string(&manifest_path).map_err(|e| SaseError::io(&manifest_path, e))?;
    let manifest: GraphBundleManifest = serde_json::from_str(&text)
        .map_err(|e| parse_error(&manifest_path, e.line(), e.to_string()))?;
    let dir = manifest_path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default();
    Ok((manifest, dir))
}

pub fn load_bundle(path: &Path) -> Result<(GraphBundle, LoadReport)> {
    let (manifest, dir) = read_manifest(path)?;
    let edges_path = dir.join(&manifest.edges);
    let features_path = dir.join(&manifest.features);

    let edges = read_edges(&edges_path, manifest.n)?;
    let (adjacency, cleanup) = CsrAdjacency::from_edges(manifest.n, edges)?;

    let features = match manifest.feature_kind {
        FeatureKind::Text => read_features_text(&features_path, manifest.n, manifest.f)?,
        FeatureKind::Binary => {
            let x = read_features_binary(&features_path)?;
            if x.dim() != (manifest.n, manifest.f) {
                return Err(SaseError::data(
                    &features_path,
                    format!(
                        "matrix is {}×{}, manifest declares {}×{}",
                        x.nrows(),
                        x.ncols(),
                        manifest.n,
                        manifest.f
                    ),
                ));
            }
            x
        }
    };

    let labels = match &manifest.labels {
        Some(p) => {
            let labels_path = dir.join(p);
            let labels = read_labels(&labels_path, Some(manifest.n))?;
            let classes = labels.iter().max().map_or(0, |m| m + 1);
            if let Some(m) = manifest.m_true {
                if m != classes {
                    return Err(SaseError::data(
                        &labels_path,
                        format!("manifest declares {m} classes, labels contain {classes}"),
                    ));
                }
            }
            Some(labels)
        }
        None => None,
    };
    let classes = labels.as_ref().map(|l| l.iter().max().map_or(0, |m| m + 1));
    let bundle = GraphBundle::new(adjacency, features, labels)?;
    Ok((bundle, LoadReport { cleanup, classes }))
}

pub fn save_bundle(graph: &GraphBundle, dir: &Path, kind: FeatureKind) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| SaseError::io(dir, e))?;
    let features = match kind {
        FeatureKind::Text => PathBuf::from("features.csv"),
        FeatureKind::Binary => PathBuf::from("features.bin"),
    };
    let manifest = GraphBundleManifest {
        n: graph.node_count(),
        f: graph.feature_dim(),
        m_true: graph.class_count(),
        edges: PathBuf::from("edges.tsv"),
        features: features.clone(),
        feature_kind: kind,
        labels: graph.labels().map(|_| PathBuf::from("labels.txt")),
    };
    write_edges(&dir.join(&manifest.edges), graph.adjacency())?;
    match kind {
        FeatureKind::Text => write_features_text(&dir.join(&features), graph.features())?,
        FeatureKind::Binary => write_features_binary(&dir.join(&features), graph.features())?,
    }
    if let Some(labels) = graph.labels() {
        write_labels(&dir.join("labels.txt"), labels)?;
    }
    let path = dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, text + "\n").map_err(|e| SaseError::io(&path, e))
}

/// Attributed planted-partition graph description.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SbmSpec {
    pub n: usize,
    pub m: usize,
    pub p_in: f64,
    pub p_out: f64,
    pub f: usize,
    /// Pairwise distance between block centroids.
    pub separation: f64,
    /// Standard deviation of the per-coordinate feature noise.
    pub noise: f64,
    pub seed: u64,
}

impl SbmSpec {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(SaseError::InvalidParameter(m));
        if self.m == 0 || self.m > self.n {
            return fail(format!("block count {} outside [1, {}]", self.m, self.n));
        }
        if !(0.0 <= self.p_out && self.p_out <= self.p_in && self.p_in <= 1.0) {
            return fail(format!(
                "need 0 ≤ p_out ≤ p_in ≤ 1, got p_in = {}, p_out = {}",
                self.p_in, self.p_out
            ));
        }
        if self.f < self.m {
            return fail(format!(
                "feature dimension {} must be ≥ block count {}",
                self.f, self.m
            ));
        }
        if !(self.separation >= 0.0 && self.separation.is_finite())
            || !(self.noise >= 0.0 && self.noise.is_finite())
        {
            return fail("separation and noise must be finite and non-negative".into());
        }
        Ok(())
    }

    /// Block boundaries: the first `n mod m` blocks get one extra node.
    pub fn block_starts(&self) -> Vec<usize> {
        let base = self.n / self.m;
        let extra = self.n % self.m;
        let mut starts = Vec::with_capacity(self.m + 1);
        let mut at = 0;
        for b in 0..self.m {
            starts.push(at);
            at += base + usize::from(b < extra);
        }
        starts.push(at);
        starts
    }

    /// Candidate pairs inside blocks and across blocks.
    pub fn pair_counts(&self) -> (u64, u64) {
        let starts = self.block_starts();
        let mut inside = 0u64;
        for b in 0..self.m {
            let s = (starts[b + 1] - starts[b]) as u64;
            inside += s * s.saturating_sub(1) / 2;
        }
        let n = self.n as u64;
        (inside, n * (n - 1) / 2 - inside)
    }
}

/// Calls `emit` with each index in `0..total` kept independently with
/// probability `p`, using geometric skips.
fn bernoulli_indices(total: u64, p: f64, rng: &mut ChaCha8Rng, mut emit: impl FnMut(u64)) {
    if total == 0 || p <= 0.0 {
        return;
    }
    if p >= 1.0 {
        (0..total).for_each(emit);
        return;
    }
    let log_q = (1.0 - p).ln();
    let mut next: u64 = 0;
    loop {
        let u: f64 = 1.0 - rng.random::<f64>();
        let skip = (u.ln() / log_q).floor();
        if skip >= (total - next) as f64 {
            return;
        }
        next += skip as u64;
        emit(next);
        next += 1;
        if next >= total {
            return;
        }
    }
}

pub fn generate_sbm(spec: &SbmSpec) -> Result<GraphBundle> {
    spec.validate()?;
    let starts = spec.block_starts();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut edges = Vec::new();

    for a in 0..spec.m {
        let (lo, size) = (starts[a], starts[a + 1] - starts[a]);
        // Row-major walk over the upper triangle of block a.
        let total = (size as u64) * (size as u64).saturating_sub(1) / 2;
        let (mut row, mut row_start) = (0usize, 0u64);
        bernoulli_indices(total, spec.p_in, &mut rng, |idx| {
            while idx >= row_start + (size - 1 - row) as u64 {
                row_start += (size - 1 - row) as u64;
                row += 1;
            }
            let col = row + 1 + (idx - row_start) as usize;
            edges.push((lo + row, lo + col));
        });
        for b in a + 1..spec.m {
            let other = starts[b + 1] - starts[b];
            let total = (size * other) as u64;
            bernoulli_indices(total, spec.p_out, &mut rng, |idx| {
                let i = (idx / other as u64) as usize;
                let j = (idx % other as u64) as usize;
                edges.push((lo + i, starts[b] + j));
            });
        }
    }
    let (adjacency, _) = CsrAdjacency::from_edges(spec.n, edges)?;

    let mut labels = vec![0usize; spec.n];
    for b in 0..spec.m {
        labels[starts[b]..starts[b + 1]].fill(b);
    }
    let mut noise_rng = ChaCha8Rng::seed_from_u64(spec.seed);
    noise_rng.set_stream(1);
    let offset = spec.separation / std::f64::consts::SQRT_2;
    let features = Array2::from_shape_fn((spec.n, spec.f), |(i, j)| {
        let centre = if j == labels[i] { offset } else { 0.0 };
        let z: f64 = StandardNormal.sample(&mut noise_rng);
        centre + spec.noise * z
    });
    GraphBundle::new(adjacency, features, Some(labels))
}

/// Serialized outcome of a clustering run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultDocument {
    pub config: SaseConfig,
    /// Bandwidth actually used by the selected run.
    pub bandwidth: f64,
    pub selected_order: usize,
    #[serde(default)]
    pub stop_reason: Option<StopReason>,
    pub score: Option<f64>,
    pub assignments: Vec<usize>,
    pub metrics: Option<ClusteringMetrics>,
    pub diagnostics: Diagnostics,
    pub timings: StageTimings,
    #[serde(default)]
    pub trace_csv: Option<PathBuf>,
}

impl ResultDocument {
    pub fn from_result(cfg: &SaseConfig, result: &ClusterResult, labels: Option<&[usize]>) -> Result<Self> {
        Ok(ResultDocument {
            config: cfg.clone(),
            bandwidth: result.bandwidth,
            selected_order: result.order,
            stop_reason: None,
            score: result.score_value(),
            assignments: result.assignments.clone(),
            metrics: labels
                .map(|l| ClusteringMetrics::compute(&result.assignments, l))
                .transpose()?,
            diagnostics: result.diagnostics,
            timings: result.timings,
            trace_csv: None,
        })
    }

    pub fn from_trace(cfg: &SaseConfig, trace: &AdaptiveTrace, labels: Option<&[usize]>) -> Result<Self> {
        let mut doc = Self::from_result(cfg, &trace.selected_result, labels)?;
        doc.stop_reason = Some(trace.stop);
        Ok(doc)
    }
}

/// `result.json` → `result.trace.csv`.
pub fn trace_sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("trace.csv")
}

/// Writes the JSON document, plus the trace CSV sidecar when a trace is given.
pub fn write_result(doc: &ResultDocument, trace: Option<&AdaptiveTrace>, path: &Path) -> Result<()> {
    let mut doc = doc.clone();
    if let Some(trace) = trace {
        let sidecar = trace_sidecar_path(path);
        fs::write(&sidecar, trace.to_csv()).map_err(|e| SaseError::io(&sidecar, e))?;
        doc.trace_csv = sidecar.file_name().map(PathBuf::from);
    }
    let text = serde_json::to_string_pretty(&doc).expect("result serializes");
    fs::write(path, text + "\n").map_err(|e| SaseError::io(path, e))
}
