//! Command-line front end: `flow`, `decompose1d`, `cluster`, `moons` and
//! `verify`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::data::{
    cluster_from_function, clustering_accuracy, generate, random_init, semi_supervised_init, two_level_spread,
    LabeledPointSet, MoonKind,
};
use crate::error::{Error, Result};
use crate::flow::{extract_profile, high_rayleigh_subgradients, run_flow, FlowParams, HighRayleigh, StepControl};
use crate::functional::{Functional, GraphTotalVariation, ProxSettings, TotalVariation1d};
use crate::graph::{build_knn_graph, fiedler_vector, KernelScale, WeightedGraph};
use crate::io::{
    read_artifact, read_graph, read_points_csv, read_signal_csv, write_artifact, write_cluster_csv, write_graph_json,
    write_json, write_points_csv, Artifact, DecompositionArtifact, TraceArtifact,
};
use crate::scheme::{parseval_report, run_scheme, SchemeParams};
use crate::signal::{dist, Signal};
use crate::verify::verify_artifact;

#[derive(Debug, Parser)]
#[command(
    name = "eigenflow",
    version,
    about = "Nonlinear eigenfunctions from gradient-flow extinction profiles"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the implicit gradient flow and extract its extinction profile.
    Flow(FlowCmd),
    /// Decompose a 1D signal into total-variation eigenfunctions.
    Decompose1d(DecomposeCmd),
    /// Cluster a point set with a graph eigenfunction.
    Cluster(ClusterCmd),
    /// Write a synthetic moons dataset.
    Moons(MoonsCmd),
    /// Check the invariants of a stored artifact.
    Verify(VerifyCmd),
}

#[derive(Debug, Clone, Args)]
pub struct FlowOpts {
    /// Time step (default `0.01 ||f|| / sqrt(n)`).
    #[arg(long)]
    pub delta: Option<f64>,
    /// Extinction threshold on `||p_k||` (default `1e-6 max(1, ||p_1||)`).
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long, default_value_t = 100_000)]
    pub max_steps: usize,
    /// Shorten steps so that merge events fall on step boundaries.
    #[arg(long)]
    pub event_aligned: bool,
    /// Relative duality gap of the inner prox solver.
    #[arg(long, default_value_t = ProxSettings::default().gap_tol)]
    pub gap_tol: f64,
    #[arg(long, default_value_t = ProxSettings::default().max_inner_iters)]
    pub max_inner_iters: usize,
    /// Solve 1D proxes with the primal-dual solver instead of the direct one.
    #[arg(long)]
    pub primal_dual: bool,
}

impl FlowOpts {
    pub fn params(&self) -> Result<FlowParams> {
        if !(self.gap_tol > 0.0) {
            return Err(Error::InvalidParameter("--gap-tol must be positive".into()));
        }
        Ok(FlowParams {
            delta: self.delta,
            extinction_threshold: self.threshold,
            max_steps: self.max_steps,
            steps: if self.event_aligned {
                StepControl::EventAligned
            } else {
                StepControl::Uniform
            },
            prox: ProxSettings {
                gap_tol: self.gap_tol,
                max_inner_iters: self.max_inner_iters,
                direct_1d: !self.primal_dual,
                ..ProxSettings::default()
            },
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Dataset {
    Two,
    Three,
}

impl From<Dataset> for MoonKind {
    fn from(d: Dataset) -> MoonKind {
        match d {
            Dataset::Two => MoonKind::Two,
            Dataset::Three => MoonKind::Three,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct GraphOpts {
    /// Neighbors per point in the k-NN graph.
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// Gaussian kernel bandwidth (default: mean k-th neighbor distance).
    #[arg(long)]
    pub kernel_scale: Option<f64>,
}

impl GraphOpts {
    pub fn build(&self, points: &[[f64; 2]]) -> Result<WeightedGraph> {
        let scale = self.kernel_scale.map_or(KernelScale::Auto, KernelScale::Fixed);
        build_knn_graph(points, self.k, scale)
    }
}

#[derive(Debug, Clone, Args)]
pub struct DatasetOpts {
    #[arg(long, default_value_t = 300)]
    pub n_per_moon: usize,
    /// Variance of the Gaussian noise added to each coordinate.
    #[arg(long, default_value_t = 0.015)]
    pub noise_var: f64,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("input").required(true).args(["signal", "graph", "moons"]))]
pub struct FlowCmd {
    /// 1D signal CSV (one value per line).
    #[arg(long)]
    pub signal: Option<PathBuf>,
    /// Graph as JSON or edge-list CSV; requires --init.
    #[arg(long, requires = "init")]
    pub graph: Option<PathBuf>,
    /// Initial vertex values for --graph (signal CSV).
    #[arg(long)]
    pub init: Option<PathBuf>,
    /// Generate a moons dataset and start from a random initialization.
    #[arg(long, value_enum)]
    pub moons: Option<Dataset>,
    #[command(flatten)]
    pub dataset: DatasetOpts,
    #[command(flatten)]
    pub graph_opts: GraphOpts,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub flow: FlowOpts,
    /// Trace artifact (JSON).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DecomposeCmd {
    /// Signal CSV.
    pub input: PathBuf,
    #[arg(long, default_value_t = SchemeParams::default().max_atoms)]
    pub max_atoms: usize,
    #[arg(long, default_value_t = SchemeParams::default().rel_residual_tol)]
    pub rel_residual_tol: f64,
    #[arg(long, default_value_t = SchemeParams::default().orthogonality_tol)]
    pub orthogonality_tol: f64,
    #[command(flatten)]
    pub flow: FlowOpts,
    /// Directory for decomposition.json, atoms.csv, profiles.csv and
    /// reconstructions.csv.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Sign (or 1D k-means) of the Fiedler vector.
    Fiedler,
    /// Extinction profile of the flow from a random initialization.
    ProfileRandom,
    /// Extinction profile of the flow from a few labeled vertices.
    ProfileSemisup,
    /// Best of the flow subgradients with a high Rayleigh quotient.
    HighRayleigh,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("input").required(true).args(["dataset", "points"]))]
pub struct ClusterCmd {
    #[arg(long, value_enum)]
    pub dataset: Option<Dataset>,
    /// Points CSV `x,y[,label]`.
    #[arg(long)]
    pub points: Option<PathBuf>,
    #[command(flatten)]
    pub data: DatasetOpts,
    #[arg(long, value_enum, default_value_t = Method::ProfileRandom)]
    pub method: Method,
    #[command(flatten)]
    pub graph: GraphOpts,
    /// Number of clusters (default: number of true labels, else 2).
    #[arg(long)]
    pub clusters: Option<usize>,
    /// Fraction of labeled vertices per cluster for profile-semisup.
    #[arg(long, default_value_t = 0.05)]
    pub fraction: f64,
    #[arg(long, default_value_t = 0.9)]
    pub rayleigh_threshold: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Run seeds `seed, seed+1, ...` in parallel.
    #[arg(long, default_value_t = 1)]
    pub seeds: u64,
    #[command(flatten)]
    pub flow: FlowOpts,
    /// Directory for per-seed cluster CSVs and summary.json.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MoonsCmd {
    #[arg(long, value_enum, default_value_t = Dataset::Two)]
    pub dataset: Dataset,
    #[command(flatten)]
    pub data: DatasetOpts,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Points CSV `x,y,label`.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the k-NN graph as JSON.
    #[arg(long)]
    pub graph_out: Option<PathBuf>,
    #[command(flatten)]
    pub graph: GraphOpts,
}

#[derive(Debug, Args)]
pub struct VerifyCmd {
    pub artifact: PathBuf,
}

/// Exit status for an error: 2 for bad input, 1 for numerical failure.
pub fn exit_code(e: &Error) -> u8 {
    if e.is_input_error() {
        2
    } else {
        1
    }
}

/// Runs a parsed command, printing to stdout. Returns the exit status.
pub fn run(cli: Cli) -> Result<u8> {
    let mut out = String::new();
    let status = match cli.command {
        Command::Flow(c) => cmd_flow(&c, &mut out)?,
        Command::Decompose1d(c) => cmd_decompose1d(&c, &mut out)?,
        Command::Cluster(c) => cmd_cluster(&c, &mut out)?,
        Command::Moons(c) => cmd_moons(&c, &mut out)?,
        Command::Verify(c) => cmd_verify(&c, &mut out)?,
    };
    print!("{out}");
    Ok(status)
}

fn moons_dataset(kind: Dataset, opts: &DatasetOpts, seed: u64) -> Result<LabeledPointSet> {
    generate(kind.into(), opts.n_per_moon, opts.noise_var, seed)
}

pub fn cmd_flow(c: &FlowCmd, out: &mut String) -> Result<u8> {
    let params = c.flow.params()?;
    let (fun, init): (Box<dyn Functional>, Signal) = if let Some(path) = &c.signal {
        let f = read_signal_csv(path)?;
        (Box::new(TotalVariation1d::new(f.len())?), f)
    } else if let Some(path) = &c.graph {
        let g = read_graph(path)?;
        let init_path = c.init.as_ref().expect("clap enforces --init");
        let f = read_signal_csv(init_path)?;
        if f.len() != g.n() {
            return Err(Error::DimensionMismatch {
                expected: g.n(),
                found: f.len(),
            });
        }
        (Box::new(GraphTotalVariation::new(g)), f)
    } else {
        let kind = c.moons.expect("clap enforces one input");
        let ps = moons_dataset(kind, &c.dataset, c.seed)?;
        let g = c.graph_opts.build(&ps.points)?;
        (
            Box::new(GraphTotalVariation::new(g)),
            random_init(ps.points.len(), c.seed),
        )
    };
    let trace = run_flow(fun.as_ref(), &init, &params)?;
    let profile = match trace.extinct_at {
        Some(0) => None,
        _ => Some(extract_profile(fun.as_ref(), &trace)?),
    };
    writeln!(out, "steps: {}", trace.steps.len()).ok();
    match trace.extinction_time() {
        Some(t) => writeln!(out, "extinction time: {t} (delta {:.6e})", trace.delta).ok(),
        None => writeln!(out, "extinction time: not reached").ok(),
    };
    match &profile {
        Some(p) => writeln!(
            out,
            "profile: step {} rayleigh {:.12} eigenvalue {:.6e}",
            p.source_step, p.rayleigh, p.eigenvalue
        )
        .ok(),
        None => writeln!(out, "profile: none (input lies in the null space)").ok(),
    };
    for w in &trace.warnings {
        writeln!(out, "warning: {w}").ok();
    }
    if let Some(path) = &c.out {
        let artifact = Artifact::FlowTrace(TraceArtifact {
            domain: fun.domain(),
            params,
            trace,
            profile,
        });
        write_artifact(path, &artifact)?;
        writeln!(out, "wrote {}", path.display()).ok();
    }
    Ok(0)
}

pub fn cmd_decompose1d(c: &DecomposeCmd, out: &mut String) -> Result<u8> {
    let f = read_signal_csv(&c.input)?;
    let fun = TotalVariation1d::new(f.len())?;
    let params = SchemeParams {
        max_atoms: c.max_atoms,
        rel_residual_tol: c.rel_residual_tol,
        orthogonality_tol: c.orthogonality_tol,
        flow: c.flow.params()?,
    };
    let dec = run_scheme(&fun, &f, &params)?;
    let ratios = if dec.atoms.is_empty() {
        Vec::new()
    } else {
        parseval_report(&dec.input, &dec)?
    };
    writeln!(out, "atoms: {}  stop: {:?}", dec.atoms.len(), dec.stop).ok();
    writeln!(
        out,
        "{:>5} {:>14} {:>12} {:>14} {:>14} {:>10}",
        "n", "coefficient", "eigenvalue", "||f_n||", "||f_n+1||", "parseval"
    )
    .ok();
    for (i, a) in dec.atoms.iter().enumerate() {
        writeln!(
            out,
            "{:>5} {:>14.6e} {:>12.4e} {:>14.6e} {:>14.6e} {:>10.6}",
            i + 1,
            a.coefficient,
            a.profile.eigenvalue,
            a.residual_norm_before,
            a.residual_norm_after,
            ratios[i]
        )
        .ok();
    }
    let rel = dec.residual.norm() / dec.input_norm.max(f64::MIN_POSITIVE);
    writeln!(out, "relative residual: {rel:.3e}").ok();
    if let Some(ratio) = ratios.last() {
        writeln!(out, "parseval ratio: {ratio:.9}").ok();
    }
    if let Some(dir) = &c.out_dir {
        std::fs::create_dir_all(dir)?;
        write_decomposition_csvs(dir, &dec, &ratios)?;
        let artifact = Artifact::Decomposition(DecompositionArtifact {
            domain: fun.domain(),
            params,
            decomposition: dec,
        });
        write_artifact(&dir.join("decomposition.json"), &artifact)?;
        writeln!(out, "wrote {}", dir.display()).ok();
    }
    Ok(0)
}

fn write_decomposition_csvs(dir: &Path, dec: &crate::scheme::Decomposition, ratios: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_path(dir.join("atoms.csv"))?;
    w.write_record([
        "n",
        "coefficient",
        "rayleigh",
        "eigenvalue",
        "extinction_time",
        "residual_norm_before",
        "residual_norm_after",
        "parseval_ratio",
    ])?;
    for (i, a) in dec.atoms.iter().enumerate() {
        w.write_record([
            (i + 1).to_string(),
            a.coefficient.to_string(),
            a.profile.rayleigh.to_string(),
            a.profile.eigenvalue.to_string(),
            a.extinction_time.to_string(),
            a.residual_norm_before.to_string(),
            a.residual_norm_after.to_string(),
            ratios[i].to_string(),
        ])?;
    }
    w.flush()?;

    let n_atoms = dec.atoms.len();
    let mut profiles = csv::Writer::from_path(dir.join("profiles.csv"))?;
    let mut recon = csv::Writer::from_path(dir.join("reconstructions.csv"))?;
    let mut header = vec!["index".to_string()];
    header.extend((1..=n_atoms).map(|i| format!("p_{i}")));
    profiles.write_record(&header)?;
    let mut header = vec!["index".to_string(), "f".to_string()];
    header.extend((1..=n_atoms).map(|i| format!("partial_{i}")));
    recon.write_record(&header)?;
    let partials: Vec<Signal> = (1..=n_atoms).map(|m| dec.reconstruct(m)).collect::<Result<_>>()?;
    for x in 0..dec.input.len() {
        let mut row = vec![x.to_string()];
        row.extend(dec.atoms.iter().map(|a| a.profile.p_star[x].to_string()));
        profiles.write_record(&row)?;
        let mut row = vec![x.to_string(), dec.input[x].to_string()];
        row.extend(partials.iter().map(|p| p[x].to_string()));
        recon.write_record(&row)?;
    }
    profiles.flush()?;
    recon.flush()?;
    Ok(())
}

/// Everything the clustering pipeline needs besides the data.
#[derive(Debug, Clone, Serialize)]
pub struct ClusterConfig {
    pub method: Method,
    pub k: usize,
    pub kernel_scale: Option<f64>,
    /// Number of clusters; defaults to the number of true labels, else 2.
    pub clusters: Option<usize>,
    pub fraction: f64,
    pub rayleigh_threshold: f64,
    #[serde(skip)]
    pub flow: FlowParams,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        ClusterConfig {
            method: Method::ProfileRandom,
            k: 10,
            kernel_scale: None,
            clusters: None,
            fraction: 0.05,
            rayleigh_threshold: 0.9,
            flow: FlowParams::default(),
        }
    }
}

/// One subgradient offered by the high-Rayleigh method.
#[derive(Debug, Clone, Serialize)]
pub struct Candidate {
    pub step: usize,
    pub rayleigh: f64,
    /// False when the function has too few distinct values.
    pub clusterable: bool,
    pub accuracy: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClusterOutcome {
    pub seed: u64,
    pub n: usize,
    pub clusters: usize,
    pub labels: Vec<usize>,
    /// Vertex function the labels were read from.
    pub values: Vec<f64>,
    pub accuracy: Option<f64>,
    /// Rayleigh quotient of `values` (flow methods).
    pub rayleigh: Option<f64>,
    /// Relative plateau spread of `values` for two clusters.
    pub spread: Option<f64>,
    pub flow_steps: Option<usize>,
    pub extinction_time: Option<f64>,
    pub candidates: Vec<Candidate>,
    /// Relative distance of the last high-Rayleigh candidate to the profile.
    pub last_candidate_to_profile: Option<f64>,
}

/// Builds the k-NN graph and clusters `points` with the configured method.
/// `truth` enables the accuracy report and is required for the
/// semi-supervised initialization.
pub fn run_clustering(
    cfg: &ClusterConfig,
    points: &[[f64; 2]],
    truth: Option<&[usize]>,
    seed: u64,
) -> Result<ClusterOutcome> {
    let k_clusters = cfg
        .clusters
        .or_else(|| truth.map(|t| t.iter().max().map_or(1, |m| m + 1)))
        .unwrap_or(2);
    if k_clusters < 2 {
        return Err(Error::InvalidParameter("need at least two clusters".into()));
    }
    let scale = cfg.kernel_scale.map_or(KernelScale::Auto, KernelScale::Fixed);
    let graph = build_knn_graph(points, cfg.k, scale)?;
    let n = graph.n();
    let mut outcome = ClusterOutcome {
        seed,
        n,
        clusters: k_clusters,
        labels: Vec::new(),
        values: Vec::new(),
        accuracy: None,
        rayleigh: None,
        spread: None,
        flow_steps: None,
        extinction_time: None,
        candidates: Vec::new(),
        last_candidate_to_profile: None,
    };
    let accuracy = |labels: &[usize]| truth.map(|t| clustering_accuracy(labels, t)).transpose();

    if cfg.method == Method::Fiedler {
        let fv = fiedler_vector(&graph)?;
        outcome.values = fv.vector.into_vec();
    } else {
        let fun = GraphTotalVariation::new(graph);
        let init = match cfg.method {
            Method::ProfileSemisup => {
                let labels =
                    truth.ok_or_else(|| Error::InvalidParameter("profile-semisup needs ground-truth labels".into()))?;
                let ps = LabeledPointSet {
                    points: points.to_vec(),
                    labels: labels.to_vec(),
                    seed,
                    noise_var: 0.0,
                };
                semi_supervised_init(&ps, cfg.fraction, seed)?
            }
            _ => random_init(n, seed),
        };
        let trace = run_flow(&fun, &init, &cfg.flow)?;
        let profile = extract_profile(&fun, &trace)?;
        outcome.flow_steps = Some(trace.steps.len());
        outcome.extinction_time = trace.extinction_time();
        outcome.rayleigh = Some(profile.rayleigh);
        outcome.values = profile.p_star.to_vec();
        if cfg.method == Method::HighRayleigh {
            let list = high_rayleigh_subgradients(&fun, &trace, cfg.rayleigh_threshold)?;
            if let Some(last) = list.last() {
                outcome.last_candidate_to_profile = Some(dist(&last.p, &profile.p_star) / profile.p_star.norm());
            }
            outcome.candidates = score_candidates(&list, k_clusters, truth, seed)?;
            if let Some(i) = pick_candidate(&outcome.candidates, truth.is_some()) {
                outcome.values = list[i].p.to_vec();
                outcome.rayleigh = Some(list[i].rayleigh);
            }
        }
    }
    outcome.labels = cluster_from_function(&outcome.values, k_clusters, seed)?;
    outcome.accuracy = accuracy(&outcome.labels)?;
    if k_clusters == 2 {
        outcome.spread = two_level_spread(&outcome.values).ok();
    }
    Ok(outcome)
}

fn score_candidates(
    list: &[HighRayleigh],
    k_clusters: usize,
    truth: Option<&[usize]>,
    seed: u64,
) -> Result<Vec<Candidate>> {
    list.iter()
        .map(|h| {
            let labels = cluster_from_function(&h.p, k_clusters, seed).ok();
            let accuracy = match (&labels, truth) {
                (Some(l), Some(t)) => Some(clustering_accuracy(l, t)?),
                _ => None,
            };
            Ok(Candidate {
                step: h.step,
                rayleigh: h.rayleigh,
                clusterable: labels.is_some(),
                accuracy,
            })
        })
        .collect()
}

/// Best candidate when the truth is known, else the last clusterable one.
fn pick_candidate(candidates: &[Candidate], has_truth: bool) -> Option<usize> {
    if has_truth {
        let mut best: Option<(usize, f64)> = None;
        for (i, c) in candidates.iter().enumerate() {
            if let Some(a) = c.accuracy {
                if best.is_none_or(|b| a > b.1) {
                    best = Some((i, a));
                }
            }
        }
        best.map(|b| b.0)
    } else {
        candidates.iter().rposition(|c| c.clusterable)
    }
}

#[derive(Serialize)]
struct ClusterSummary<'a> {
    method: Method,
    dataset: Option<Dataset>,
    n_per_moon: Option<usize>,
    noise_var: Option<f64>,
    config: &'a ClusterConfig,
    runs: Vec<RunSummary<'a>>,
}

#[derive(Serialize)]
struct RunSummary<'a> {
    seed: u64,
    accuracy: Option<f64>,
    rayleigh: Option<f64>,
    spread: Option<f64>,
    flow_steps: Option<usize>,
    extinction_time: Option<f64>,
    candidates: &'a [Candidate],
    last_candidate_to_profile: Option<f64>,
}

pub fn cmd_cluster(c: &ClusterCmd, out: &mut String) -> Result<u8> {
    if c.seeds == 0 {
        return Err(Error::InvalidParameter("--seeds must be at least 1".into()));
    }
    let cfg = ClusterConfig {
        method: c.method,
        k: c.graph.k,
        kernel_scale: c.graph.kernel_scale,
        clusters: c.clusters,
        fraction: c.fraction,
        rayleigh_threshold: c.rayleigh_threshold,
        flow: c.flow.params()?,
    };
    let fixed = c.points.as_ref().map(|p| read_points_csv(p)).transpose()?;
    let seeds: Vec<u64> = (c.seed..c.seed + c.seeds).collect();
    let results: Vec<Result<SeedRun>> = seeds
        .par_iter()
        .map(|&seed| {
            let (points, truth) = match (&fixed, c.dataset) {
                (Some(pc), _) => (pc.points.clone(), pc.labels.clone()),
                (None, Some(kind)) => {
                    let ps = moons_dataset(kind, &c.data, seed)?;
                    (ps.points, Some(ps.labels))
                }
                (None, None) => unreachable!("clap enforces one input"),
            };
            let o = run_clustering(&cfg, &points, truth.as_deref(), seed)?;
            Ok((points, truth, o))
        })
        .collect();
    let results: Vec<_> = results.into_iter().collect::<Result<_>>()?;

    for (_, _, o) in &results {
        let mut line = format!("seed {}: ", o.seed);
        match o.accuracy {
            Some(a) => write!(line, "accuracy {a:.4}").ok(),
            None => write!(line, "accuracy n/a").ok(),
        };
        if let Some(r) = o.rayleigh {
            write!(line, "  rayleigh {r:.6}").ok();
        }
        if let Some(s) = o.spread {
            write!(line, "  spread {s:.3e}").ok();
        }
        if let Some(n) = o.flow_steps {
            write!(line, "  steps {n}").ok();
        }
        if c.method == Method::HighRayleigh {
            write!(line, "  candidates {}", o.candidates.len()).ok();
            if let Some(d) = o.last_candidate_to_profile {
                write!(line, "  last-to-profile {d:.2e}").ok();
            }
        }
        writeln!(out, "{line}").ok();
    }
    let accs: Vec<f64> = results.iter().filter_map(|r| r.2.accuracy).collect();
    if accs.len() > 1 {
        let mean = accs.iter().sum::<f64>() / accs.len() as f64;
        let min = accs.iter().copied().fold(f64::INFINITY, f64::min);
        writeln!(out, "accuracy over {} seeds: mean {mean:.4}, min {min:.4}", accs.len()).ok();
    }

    if let Some(dir) = &c.out_dir {
        std::fs::create_dir_all(dir)?;
        for (points, truth, o) in &results {
            let path = dir.join(format!("cluster_seed{}.csv", o.seed));
            write_cluster_csv(&path, points, truth.as_deref(), &o.labels, &o.values)?;
        }
        let summary = ClusterSummary {
            method: c.method,
            dataset: c.dataset,
            n_per_moon: c.dataset.map(|_| c.data.n_per_moon),
            noise_var: c.dataset.map(|_| c.data.noise_var),
            config: &cfg,
            runs: results
                .iter()
                .map(|(_, _, o)| RunSummary {
                    seed: o.seed,
                    accuracy: o.accuracy,
                    rayleigh: o.rayleigh,
                    spread: o.spread,
                    flow_steps: o.flow_steps,
                    extinction_time: o.extinction_time,
                    candidates: &o.candidates,
                    last_candidate_to_profile: o.last_candidate_to_profile,
                })
                .collect(),
        };
        write_json(&dir.join("summary.json"), &summary)?;
        writeln!(out, "wrote {}", dir.display()).ok();
    }
    Ok(0)
}

/// Points, optional truth and outcome of one clustering seed.
type SeedRun = (Vec<[f64; 2]>, Option<Vec<usize>>, ClusterOutcome);

pub fn cmd_moons(c: &MoonsCmd, out: &mut String) -> Result<u8> {
    let ps = moons_dataset(c.dataset, &c.data, c.seed)?;
    let graph = match &c.graph_out {
        Some(path) => Some((path, c.graph.build(&ps.points)?)),
        None => None,
    };
    write_points_csv(&c.out, &ps)?;
    writeln!(out, "wrote {} points to {}", ps.points.len(), c.out.display()).ok();
    if let Some((path, g)) = graph {
        write_graph_json(path, &g)?;
        writeln!(out, "wrote graph with {} edges to {}", g.edges().len(), path.display()).ok();
    }
    Ok(0)
}

pub fn cmd_verify(c: &VerifyCmd, out: &mut String) -> Result<u8> {
    let artifact = read_artifact(&c.artifact)?;
    let report = verify_artifact(&artifact)?;
    for check in &report.checks {
        writeln!(
            out,
            "{} {}: {:.3e} (tolerance {:.1e})",
            if check.pass { "PASS" } else { "FAIL" },
            check.name,
            check.value,
            check.tolerance
        )
        .ok();
    }
    let failed = report.checks.iter().filter(|c| !c.pass).count();
    writeln!(out, "{} checks, {failed} failed", report.checks.len()).ok();
    Ok(u8::from(failed > 0))
}
