use std::ops::Range;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sparsecast_predict::ModelKind;

#[derive(Debug, Parser)]
#[command(name = "sparsecast", version, about = "Sparse activity tensors: CP decomposition and latent forecasting")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a seeded synthetic activity tensor and its ground-truth factors.
    Synth(SynthArgs),
    /// Build an activity tensor from a transactions CSV.
    Ingest(IngestArgs),
    /// Fit a CP model with NCG (cpopt), ALS, or both.
    Decompose(DecomposeArgs),
    /// Train a forecaster on the latent series and roll it forward.
    Predict(PredictArgs),
    /// Score predictions against a truth file.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    /// Tensor shape as I,J,K.
    #[arg(long, value_parser = parse_shape, default_value = "200,22,16")]
    pub shape: [usize; 3],
    #[arg(long, default_value_t = 5)]
    pub rank: usize,
    /// Standard deviation of the additive Gaussian noise.
    #[arg(long, default_value_t = 0.1)]
    pub noise: f64,
    /// Fraction of cells zeroed, in [0, 1).
    #[arg(long, default_value_t = 0.8)]
    pub sparsity: f64,
    /// Seasonal period of the time factor, in slices.
    #[arg(long, default_value_t = 4.0)]
    pub period: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct IngestArgs {
    #[arg(long)]
    pub csv: PathBuf,
    /// TOML file naming the columns, labels and month epoch.
    #[arg(long)]
    pub schema: PathBuf,
    /// Number of most active clients kept.
    #[arg(long, default_value_t = 200)]
    pub clients: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverChoice {
    Cpopt,
    Als,
    Both,
}

#[derive(Debug, Args, Serialize)]
pub struct DecomposeArgs {
    /// Tensor in COO text format.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub rank: usize,
    #[arg(long, value_enum, default_value_t = SolverChoice::Cpopt)]
    pub solver: SolverChoice,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Iteration budget; each solver's own default when omitted.
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct PredictArgs {
    /// Kruskal factor file.
    #[arg(long)]
    pub factors: PathBuf,
    #[arg(long, value_parser = parse_model)]
    pub model: ModelKind,
    #[arg(long, default_value_t = 3)]
    pub window: usize,
    /// Training slices, `a..b` (half-open) or `a..=b`.
    #[arg(long, value_parser = parse_range, default_value = "0..12")]
    pub train_slices: Range<usize>,
    #[arg(long, default_value_t = 3)]
    pub horizon: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 200)]
    pub epochs: usize,
    /// Read every lag from the latent series instead of feeding forecasts back.
    #[arg(long)]
    pub open_loop: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct EvaluateArgs {
    /// Prediction CSV written by `predict`.
    #[arg(long)]
    pub predictions: PathBuf,
    /// Kruskal factor file, or a CSV with client,transaction,slice and a
    /// value (or actual) column.
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_shape(s: &str) -> Result<[usize; 3], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [i, j, k] = parts.as_slice() else {
        return Err(format!("expected I,J,K, got {s:?}"));
    };
    let p = |v: &str| v.parse::<usize>().map_err(|e| format!("{v:?}: {e}"));
    Ok([p(i)?, p(j)?, p(k)?])
}

fn parse_range(s: &str) -> Result<Range<usize>, String> {
    let p = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("{v:?}: {e}"));
    if let Some((a, b)) = s.split_once("..=") {
        Ok(p(a)?..p(b)? + 1)
    } else if let Some((a, b)) = s.split_once("..") {
        Ok(p(a)?..p(b)?)
    } else {
        Err(format!("expected a..b or a..=b, got {s:?}"))
    }
}

fn parse_model(s: &str) -> Result<ModelKind, String> {
    s.parse().map_err(|e: sparsecast_core::Error| e.to_string())
}
