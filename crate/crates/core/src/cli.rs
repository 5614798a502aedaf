//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{OrderMode, SaseConfig};
use crate::data::{
    generate_sbm, load_bundle, read_labels, save_bundle, write_result, FeatureKind, ResultDocument,
    SbmSpec,
};
use crate::error::{Result, SaseError};
use crate::graph::GraphBundle;
use crate::kernel::VarianceMode;
use crate::memory::MemoryProbe;
use crate::metrics::ClusteringMetrics;
use crate::pipeline::{sase_cluster_once, Pipeline};
use crate::selection::adaptive_select;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;

/// Environment variable that caps the worker-thread count.
pub const THREADS_ENV: &str = "SASE_THREADS";

#[derive(Debug, Parser)]
#[command(name = "sase", version, about = "Scalable attributed-graph clustering")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cluster a graph bundle at a fixed or adaptively selected order.
    Cluster(ClusterArgs),
    /// Evaluate a grid of alpha and order values, one CSV row per point.
    Sweep(SweepArgs),
    /// Time the pipeline on synthetic graphs of increasing size.
    Bench(BenchArgs),
    /// Compare two label files.
    Eval(EvalArgs),
    /// Write a synthetic attributed SBM as a graph bundle.
    Gen(GenArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum RffVarianceArg {
    Literal,
    Dual,
}

impl From<RffVarianceArg> for VarianceMode {
    fn from(v: RffVarianceArg) -> Self {
        match v {
            RffVarianceArg::Literal => VarianceMode::Literal,
            RffVarianceArg::Dual => VarianceMode::Dual,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct PipelineArgs {
    /// Linear weight of the raw features.
    #[arg(long, default_value_t = 0.2)]
    pub alpha: f64,
    /// Truncated-SVD width (default: min(32, feature count)).
    #[arg(long)]
    pub dim: Option<usize>,
    /// Spectral embedding width (default: same as --dim).
    #[arg(long)]
    pub embed_dim: Option<usize>,
    /// Random-feature output dimension 2D (must be even).
    #[arg(long, default_value_t = 100)]
    pub rff_dim: usize,
    /// Kernel bandwidth (default: median pairwise distance).
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, value_enum, default_value = "dual")]
    pub rff_variance: RffVarianceArg,
    /// Cluster count (default: number of label classes).
    #[arg(long)]
    pub clusters: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10)]
    pub restarts: usize,
    #[arg(long, default_value_t = 50)]
    pub max_iter: usize,
    /// Row-ℓ₁-normalize features before propagation.
    #[arg(long)]
    pub normalize_features: bool,
}

impl PipelineArgs {
    fn resolve(&self, graph: &GraphBundle, order: OrderMode) -> Result<SaseConfig> {
        if self.rff_dim == 0 || self.rff_dim % 2 != 0 {
            return Err(SaseError::InvalidParameter(format!(
                "--rff-dim must be a positive even number, got {}",
                self.rff_dim
            )));
        }
        let clusters = match (self.clusters, graph.class_count()) {
            (Some(m), _) => m,
            (None, Some(m)) => m,
            (None, None) => {
                return Err(SaseError::InvalidParameter(
                    "--clusters is required when the bundle has no labels".into(),
                ))
            }
        };
        let cfg = SaseConfig {
            order,
            alpha: self.alpha,
            reduced_dim: self.dim.unwrap_or_else(|| graph.feature_dim().min(32)),
            embed_dim: self.embed_dim,
            rff_half_dim: self.rff_dim / 2,
            sigma: self.sigma,
            rff_variance: self.rff_variance.into(),
            clusters,
            seed: self.seed,
            kmeans_restarts: self.restarts,
            kmeans_max_iter: self.max_iter,
            normalize_features: self.normalize_features,
            ..SaseConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    /// Bundle directory or manifest file.
    pub bundle: PathBuf,
    /// Result document path (JSON); the trace goes next to it.
    #[arg(long)]
    pub out: PathBuf,
    /// Fixed convolution order.
    #[arg(long, conflicts_with = "adaptive")]
    pub order: Option<usize>,
    /// Select the order adaptively.
    #[arg(long)]
    pub adaptive: bool,
    #[arg(long, default_value_t = 50)]
    pub max_order: usize,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    pub bundle: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Comma-separated alpha values.
    #[arg(long, value_delimiter = ',', default_value = "0.2")]
    pub alphas: Vec<f64>,
    /// Orders as a comma list and/or inclusive ranges, e.g. `1-20` or `0,2,4`.
    #[arg(long, default_value = "1-20")]
    pub orders: String,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Comma-separated node counts.
    #[arg(long, value_delimiter = ',', default_value = "25000,50000,100000")]
    pub sizes: Vec<usize>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 10.0)]
    pub avg_degree: f64,
    /// Share of each node's expected degree that stays inside its block.
    #[arg(long, default_value_t = 0.9)]
    pub intra_fraction: f64,
    #[arg(long, default_value_t = 8)]
    pub blocks: usize,
    #[arg(long, default_value_t = 64)]
    pub features: usize,
    #[arg(long, default_value_t = 4.0)]
    pub separation: f64,
    #[arg(long, default_value_t = 1.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 2)]
    pub order: usize,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    pub pred: PathBuf,
    pub truth: PathBuf,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub p_in: f64,
    #[arg(long)]
    pub p_out: f64,
    #[arg(long, default_value_t = 32)]
    pub f: usize,
    #[arg(long, default_value_t = 4.0)]
    pub separation: f64,
    #[arg(long, default_value_t = 1.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Store features in the binary format.
    #[arg(long)]
    pub binary: bool,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::Cluster(a) => cmd_cluster(&a, out),
        Command::Sweep(a) => cmd_sweep(&a, out),
        Command::Bench(a) => cmd_bench(&a, out),
        Command::Eval(a) => cmd_eval(&a, out),
        Command::Gen(a) => cmd_gen(&a, out),
    }
}

fn stdout_error(e: std::io::Error) -> SaseError {
    SaseError::io("<stdout>", e)
}

fn print_metrics(out: &mut dyn Write, m: &ClusteringMetrics) -> Result<()> {
    writeln!(out, "ACC {:.4}  NMI {:.4}  ARI {:.4}", m.acc, m.nmi, m.ari).map_err(stdout_error)
}

pub fn cmd_cluster(args: &ClusterArgs, out: &mut dyn Write) -> Result<()> {
    let (graph, report) = load_bundle(&args.bundle)?;
    let order = if args.adaptive {
        OrderMode::Adaptive {
            max_order: args.max_order,
        }
    } else {
        OrderMode::Fixed {
            order: args.order.unwrap_or(2),
        }
    };
    let cfg = args.pipeline.resolve(&graph, order)?;
    writeln!(
        out,
        "loaded {} nodes, {} edges ({} duplicates dropped, {} self-loops stripped)",
        graph.node_count(),
        graph.adjacency().edge_count(),
        report.cleanup.duplicates_dropped,
        report.cleanup.loops_stripped
    )
    .map_err(stdout_error)?;

    let doc = match cfg.order {
        OrderMode::Fixed { order } => {
            let result = sase_cluster_once(&graph, &cfg, order)?;
            let doc = ResultDocument::from_result(&cfg, &result, graph.labels())?;
            write_result(&doc, None, &args.out)?;
            doc
        }
        OrderMode::Adaptive { .. } => {
            let trace = adaptive_select(&graph, &cfg)?;
            let doc = ResultDocument::from_trace(&cfg, &trace, graph.labels())?;
            write_result(&doc, Some(&trace), &args.out)?;
            doc
        }
    };
    writeln!(
        out,
        "order {}  score {}  bandwidth {:.6}",
        doc.selected_order,
        doc.score.map_or("-".to_string(), |s| format!("{s:.6}")),
        doc.bandwidth
    )
    .map_err(stdout_error)?;
    if let Some(m) = &doc.metrics {
        print_metrics(out, m)?;
    }
    Ok(())
}

/// Parses `1-5,8,10-12` into a sorted, de-duplicated order list.
pub fn parse_orders(spec: &str) -> Result<Vec<usize>> {
    let bad = || SaseError::InvalidParameter(format!("bad order list {spec:?}"));
    let mut orders = Vec::new();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part.split_once('-') {
            Some((lo, hi)) => {
                let lo: usize = lo.trim().parse().map_err(|_| bad())?;
                let hi: usize = hi.trim().parse().map_err(|_| bad())?;
                if lo > hi {
                    return Err(bad());
                }
                orders.extend(lo..=hi);
            }
            None => orders.push(part.parse().map_err(|_| bad())?),
        }
    }
    if orders.is_empty() {
        return Err(bad());
    }
    orders.sort_unstable();
    orders.dedup();
    Ok(orders)
}

pub const SWEEP_CSV_HEADER: &str = "alpha,k,s,acc,nmi,ari,seconds";

pub fn cmd_sweep(args: &SweepArgs, out: &mut dyn Write) -> Result<()> {
    let (graph, _) = load_bundle(&args.bundle)?;
    let orders = parse_orders(&args.orders)?;
    if args.alphas.is_empty() {
        return Err(SaseError::InvalidParameter("empty alpha grid".into()));
    }
    let base = args.pipeline.resolve(&graph, OrderMode::Fixed { order: orders[0] })?;
    let configs: Vec<SaseConfig> = args
        .alphas
        .iter()
        .map(|&alpha| {
            let cfg = SaseConfig { alpha, ..base.clone() };
            cfg.validate().map(|_| cfg)
        })
        .collect::<Result<_>>()?;

    let pipeline = Pipeline::new(&graph, &base)?;
    let mut cache = pipeline.cache()?;
    let mut csv = String::from(SWEEP_CSV_HEADER);
    csv.push('\n');
    // Orders ascend, so each increment costs one propagation shared by all alphas.
    for &k in &orders {
        let start = Instant::now();
        cache.advance_to(k)?;
        let propagate = start.elapsed().as_secs_f64();
        for cfg in &configs {
            let cfg = SaseConfig {
                order: OrderMode::Fixed { order: k },
                ..cfg.clone()
            };
            let result = pipeline.cluster_at(&cache, &cfg, propagate)?;
            let metrics = graph
                .labels()
                .map(|l| ClusteringMetrics::compute(&result.assignments, l))
                .transpose()?;
            let (acc, nmi, ari) = metrics.map_or_else(Default::default, |m| {
                (m.acc.to_string(), m.nmi.to_string(), m.ari.to_string())
            });
            let score = result.score_value().map(|s| s.to_string()).unwrap_or_default();
            let _ = writeln!(
                csv,
                "{},{},{},{},{},{},{}",
                cfg.alpha,
                k,
                score,
                acc,
                nmi,
                ari,
                result.timings.total()
            );
        }
    }
    std::fs::write(&args.out, csv).map_err(|e| SaseError::io(&args.out, e))?;
    writeln!(
        out,
        "wrote {} grid points to {}",
        orders.len() * configs.len(),
        args.out.display()
    )
    .map_err(stdout_error)
}

pub const BENCH_CSV_HEADER: &str = "n,edges,seconds,propagate,fuse,reduce,bandwidth,project,embed,kmeans,score,peak_bytes,memory_bound_bytes,memory_source,ari";

/// SBM parameters for a target size, keeping the expected degree fixed.
pub fn bench_spec(args: &BenchArgs, n: usize, seed: u64) -> SbmSpec {
    let block = (n / args.blocks).max(2) as f64;
    let p_in = (args.avg_degree * args.intra_fraction / (block - 1.0)).min(1.0);
    let outside = (n as f64 - block).max(1.0);
    let p_out = (args.avg_degree * (1.0 - args.intra_fraction) / outside).min(p_in);
    SbmSpec {
        n,
        m: args.blocks,
        p_in,
        p_out,
        f: args.features,
        separation: args.separation,
        noise: args.noise,
        seed,
    }
}

/// The linear space budget `4·n·(f + d + 2D)` doubles.
pub fn memory_bound_bytes(n: usize, f: usize, d: usize, rff_dim: usize) -> usize {
    4 * n * (f + d + rff_dim) * std::mem::size_of::<f64>()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub n: usize,
    pub edges: usize,
    pub seconds: f64,
    pub timings: crate::pipeline::StageTimings,
    pub peak_bytes: usize,
    pub memory_bound_bytes: usize,
    pub memory_source: crate::memory::MemorySource,
    pub ari: f64,
}

impl BenchRow {
    pub fn to_csv_line(&self) -> String {
        let t = &self.timings;
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.n,
            self.edges,
            self.seconds,
            t.propagate,
            t.fuse,
            t.reduce,
            t.bandwidth,
            t.project,
            t.embed,
            t.kmeans,
            t.score,
            self.peak_bytes,
            self.memory_bound_bytes,
            self.memory_source.label(),
            self.ari
        )
    }
}

pub fn bench_one(args: &BenchArgs, n: usize) -> Result<BenchRow> {
    let spec = bench_spec(args, n, args.pipeline.seed);
    spec.validate()?;
    let graph = generate_sbm(&spec)?;
    let cfg = args
        .pipeline
        .resolve(&graph, OrderMode::Fixed { order: args.order })?;

    let probe = MemoryProbe::start();
    let start = Instant::now();
    let result = sase_cluster_once(&graph, &cfg, args.order)?;
    let seconds = start.elapsed().as_secs_f64();
    let (peak_bytes, memory_source) = probe.finish();

    let ari = crate::metrics::ari(&result.assignments, graph.labels().unwrap())?;
    Ok(BenchRow {
        n,
        edges: graph.adjacency().edge_count(),
        seconds,
        timings: result.timings,
        peak_bytes,
        memory_bound_bytes: memory_bound_bytes(
            n,
            graph.feature_dim(),
            cfg.reduced_dim.max(cfg.embedding_dim()),
            2 * cfg.rff_half_dim,
        ),
        memory_source,
        ari,
    })
}

pub fn cmd_bench(args: &BenchArgs, out: &mut dyn Write) -> Result<()> {
    if args.sizes.is_empty() {
        return Err(SaseError::InvalidParameter("no sizes given".into()));
    }
    let mut csv = String::from(BENCH_CSV_HEADER);
    csv.push('\n');
    for &n in &args.sizes {
        let row = bench_one(args, n)?;
        writeln!(
            out,
            "n = {n}: {:.3} s, peak {:.1} MiB ({}), ARI {:.3}",
            row.seconds,
            row.peak_bytes as f64 / (1 << 20) as f64,
            row.memory_source.label(),
            row.ari
        )
        .map_err(stdout_error)?;
        csv.push_str(&row.to_csv_line());
        csv.push('\n');
    }
    std::fs::write(&args.out, csv).map_err(|e| SaseError::io(&args.out, e))
}

pub fn cmd_eval(args: &EvalArgs, out: &mut dyn Write) -> Result<()> {
    let pred = read_labels(&args.pred, None)?;
    let truth = read_labels(&args.truth, Some(pred.len()))?;
    let m = ClusteringMetrics::compute(&pred, &truth)?;
    print_metrics(out, &m)
}

pub fn cmd_gen(args: &GenArgs, out: &mut dyn Write) -> Result<()> {
    let spec = SbmSpec {
        n: args.n,
        m: args.m,
        p_in: args.p_in,
        p_out: args.p_out,
        f: args.f,
        separation: args.separation,
        noise: args.noise,
        seed: args.seed,
    };
    let graph = generate_sbm(&spec)?;
    let kind = if args.binary {
        FeatureKind::Binary
    } else {
        FeatureKind::Text
    };
    save_bundle(&graph, &args.out, kind)?;
    writeln!(
        out,
        "wrote {} nodes, {} edges to {}",
        graph.node_count(),
        graph.adjacency().edge_count(),
        display(&args.out)
    )
    .map_err(stdout_error)
}

fn display(p: &Path) -> String {
    p.display().to_string()
}
