//! Flag definitions for the `dismet` binary.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

/// Disentanglement metrics over (representation, factor-table) pairs.
#[derive(Parser, Debug)]
#[command(name = "dismet", version, about)]
pub struct Cli {
    /// Worker threads (falls back to DISMET_THREADS, then all cores).
    /// Changes wall time only, never any emitted number.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Evaluate metrics on a dataset and write a JSON report.
    Eval(EvalArgs),
    /// Generate a synthetic scenario, score it, and check the closed-form oracles.
    Scenario(ScenarioArgs),
    /// Tabulate metric curves across latent dimensions (CSV).
    Sweep(SweepArgs),
    /// Per-factor top-k dimension selection and Top-k MED.
    Topk(TopkArgs),
    /// Factor co-occurrence matrix over the selected dimensions (CSV).
    Cooccur(CooccurArgs),
    /// Importance-matrix heatmap, factors × dimensions (CSV).
    Heatmap(HeatmapArgs),
    /// Generate synthetic factor tables and encoded representations.
    Gen(GenArgs),
    /// Diagnostic probes: manipulation variance and downstream accuracy.
    Probe(ProbeArgs),
}

#[derive(Args, Debug, Clone)]
pub struct DatasetInputs {
    /// Factor table CSV (header `name:cardinality` per column).
    #[arg(long)]
    pub factors: PathBuf,
    /// Representation matrix in DREP binary format.
    #[arg(long)]
    pub reps: PathBuf,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[command(flatten)]
    pub inputs: DatasetInputs,
    /// Comma-separated metrics: med, topk-med, mig, sap, dci, betavae,
    /// factorvae, downstream.
    #[arg(long, value_delimiter = ',', required = true)]
    pub metrics: Vec<String>,
    /// Comma-separated evaluation seeds.
    #[arg(long, value_delimiter = ',', default_value = "0,1,2")]
    pub seeds: Vec<u64>,
    /// Histogram bins for MI discretization.
    #[arg(long, default_value_t = 20)]
    pub bins: u32,
    /// Entropy base: natural or base-k.
    #[arg(long, default_value = "natural")]
    pub base: String,
    /// k for topk-med.
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    /// Lasso regularization for dci.
    #[arg(long, default_value_t = 0.01)]
    pub lambda: f64,
    /// Output JSON path.
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Args, Debug)]
pub struct ScenarioArgs {
    /// duplicated, copy-average, or weighted-mix.
    #[arg(long)]
    pub kind: String,
    /// Latent dimensions to evaluate.
    #[arg(long, value_delimiter = ',', default_value = "3,10,100,1000")]
    pub dims: Vec<usize>,
    /// Rows per factor combination.
    #[arg(long, default_value_t = 1)]
    pub replication: usize,
    #[arg(long, default_value_t = 20)]
    pub bins: u32,
    /// Entropy base: natural or base-k. The closed-form oracle holds for
    /// natural; anything else fails the oracle check.
    #[arg(long, default_value = "natural")]
    pub base: String,
    /// Optional CSV output (kind, D, metric, value).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// duplicated, copy-average, or weighted-mix.
    #[arg(long)]
    pub kind: String,
    #[arg(long, value_delimiter = ',', default_value = "3,10,100,1000")]
    pub dims: Vec<usize>,
    /// Comma-separated curve metrics: med, med-analytic, dci-formula, dci-paper.
    #[arg(long, value_delimiter = ',', default_value = "med,dci-formula,dci-paper")]
    pub metrics: Vec<String>,
    #[arg(long, default_value_t = 1)]
    pub replication: usize,
    #[arg(long, default_value_t = 20)]
    pub bins: u32,
    #[arg(long, default_value = "natural")]
    pub base: String,
    /// Output CSV path.
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Args, Debug)]
pub struct TopkArgs {
    #[command(flatten)]
    pub inputs: DatasetInputs,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    /// Optional ablation over additional k values.
    #[arg(long, value_delimiter = ',')]
    pub k_list: Option<Vec<usize>>,
    #[arg(long, default_value_t = 20)]
    pub bins: u32,
    #[arg(long, default_value = "natural")]
    pub base: String,
    /// Output JSON path.
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Args, Debug)]
pub struct CooccurArgs {
    #[command(flatten)]
    pub inputs: DatasetInputs,
    /// Dimensions kept per factor before the cosine.
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    #[arg(long, default_value_t = 20)]
    pub bins: u32,
    #[arg(long, default_value = "natural")]
    pub base: String,
    /// Output CSV path.
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Args, Debug)]
pub struct HeatmapArgs {
    #[command(flatten)]
    pub inputs: DatasetInputs,
    #[arg(long, default_value_t = 20)]
    pub bins: u32,
    #[arg(long, default_value = "natural")]
    pub base: String,
    /// Output CSV path (factors as rows, dimensions as columns).
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Args, Debug)]
pub struct GenArgs {
    /// Built-in dataset layout: dsprites, shapes3d, cars3d, smallnorb, celeba.
    #[arg(long, conflicts_with = "spec")]
    pub dataset: Option<String>,
    /// Custom layout, e.g. "shape:3,scale:6".
    #[arg(long)]
    pub spec: Option<String>,
    /// full (Cartesian product) or sample.
    #[arg(long, default_value = "full")]
    pub mode: String,
    /// Rows to draw in sample mode.
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,
    /// Seed for sampling and seeded encoders.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Encoder chain, e.g. identity, duplicate:2,
    /// random-projection:1000[:tanh][:seed=N], linear-mix:FILE.csv,
    /// with +append-noise:C / +append-constant:C stages.
    #[arg(long, default_value = "identity")]
    pub encoder: String,
    /// Factor CSV output path.
    #[arg(long)]
    pub out_factors: PathBuf,
    /// DREP output path.
    #[arg(long)]
    pub out_reps: PathBuf,
}

#[derive(Args, Debug)]
pub struct ProbeArgs {
    #[command(subcommand)]
    pub probe: ProbeCommand,
}

#[derive(Subcommand, Debug)]
pub enum ProbeCommand {
    /// Per-dimension variance when sweeping one factor on a full grid.
    Variance(VarianceArgs),
    /// Mean logistic-regression accuracy predicting each factor.
    Downstream(DownstreamArgs),
}

#[derive(Args, Debug)]
pub struct VarianceArgs {
    #[command(flatten)]
    pub inputs: DatasetInputs,
    /// Factor to sweep: name or index.
    #[arg(long)]
    pub factor: String,
    /// none, topk:K, or pca:T applied before the variance probe.
    #[arg(long, default_value = "none")]
    pub reduce: String,
    /// Profile a single other-factor assignment instead of averaging.
    #[arg(long)]
    pub assignment: Option<usize>,
    #[arg(long, default_value_t = 20)]
    pub bins: u32,
    #[arg(long, default_value = "natural")]
    pub base: String,
    /// Output CSV path (dim, variance).
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Args, Debug)]
pub struct DownstreamArgs {
    #[command(flatten)]
    pub inputs: DatasetInputs,
    #[arg(long, value_delimiter = ',', default_value = "0,1,2")]
    pub seeds: Vec<u64>,
    /// Output JSON path.
    #[arg(long)]
    pub output: PathBuf,
}
