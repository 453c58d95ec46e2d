//! Command-line arguments.

use std::net::SocketAddr;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::Preset;

#[derive(Debug, Parser)]
#[command(
    name = "geocell-kit",
    version,
    about = "Semantic geocells, smoothed labels, cluster-retrieval refinement and geolocation metrics"
)]
pub struct Cli {
    /// JSON config file. Keys it omits fall back to the preset.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Parameter preset. street-view: tau 75 km, OPTICS 3 / 0.15, top-5,
    /// temperature 1.6, 1000 km filter. general: tau 65 km, OPTICS 10 / 0.1,
    /// top-40, temperature 0.6, no filter. [default: street-view]
    #[arg(long, global = true, value_enum)]
    pub preset: Option<Preset>,

    /// Seed for captions and fixtures. [default: 0]
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build geocells from samples and admin-2 boundaries.
    Build(BuildArgs),
    /// Export smoothed label vectors and captions.
    Labels(LabelsArgs),
    /// Build the per-cell location-cluster index.
    Index(IndexArgs),
    /// Refine top-K cell predictions into coordinates.
    Refine(RefineArgs),
    /// Score predicted against true coordinates.
    Eval(EvalArgs),
    /// Serve refinement over HTTP.
    Serve(ServeArgs),
    /// Write a synthetic dataset.
    Fixture(FixtureArgs),
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    /// Samples CSV (`id,lat,lon` plus optional lineage and attribute columns).
    #[arg(long)]
    pub samples: Option<PathBuf>,
    /// Admin-2 boundaries as a GeoJSON FeatureCollection.
    #[arg(long)]
    pub admins: Option<PathBuf>,
    /// Use recursive median splitting of rectangles instead of admin units.
    #[arg(long)]
    pub naive: bool,
    /// Smallest cell a split may leave behind. [default: 50]
    #[arg(long)]
    pub min_cell_size: Option<usize>,
    /// Naive builder: split cells larger than this. [default: 200]
    #[arg(long)]
    pub max_cell_size: Option<usize>,
    /// Output directory. [default: geocell-out]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GeocellInput {
    /// Geocell GeoJSON written by `build`.
    #[arg(long)]
    pub geocells: PathBuf,
    /// Assignment sidecar. [default: assignments.csv next to the geocells]
    #[arg(long)]
    pub assignments: Option<PathBuf>,
}

impl GeocellInput {
    pub fn assignments_path(&self) -> PathBuf {
        self.assignments.clone().unwrap_or_else(|| {
            self.geocells
                .parent()
                .map(|p| p.join("assignments.csv"))
                .unwrap_or_else(|| PathBuf::from("assignments.csv"))
        })
    }
}

#[derive(Debug, Args)]
pub struct LabelsArgs {
    /// Samples CSV to label.
    #[arg(long)]
    pub samples: Option<PathBuf>,
    #[command(flatten)]
    pub cells: GeocellInput,
    /// Smoothing temperature in km. [default: 75 street-view, 65 general]
    #[arg(long)]
    pub tau: Option<f64>,
    /// Scale each label to sum to one.
    #[arg(long)]
    pub normalize: bool,
    /// Output directory. [default: geocell-out]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IndexArgs {
    /// Samples CSV whose ids match the embedding sidecar.
    #[arg(long)]
    pub samples: Option<PathBuf>,
    #[command(flatten)]
    pub cells: GeocellInput,
    /// Sample embeddings (`EMBD` matrix with an `.ids` sidecar).
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Output directory. [default: geocell-out]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Cluster,
    Sample,
}

#[derive(Debug, Args)]
pub struct RefineOverrides {
    /// Number of candidate cells. [default: 5 street-view, 40 general]
    #[arg(long)]
    pub top_k: Option<usize>,
    /// Softmax temperature over embedding distances. [default: 1.6 street-view, 0.6 general]
    #[arg(long)]
    pub temperature: Option<f64>,
    /// Drop candidates this far (km) from the top-1 cell. [default: 1000 street-view, none general]
    #[arg(long, conflicts_with = "no_distance_filter")]
    pub max_distance_km: Option<f64>,
    /// Disable the candidate distance filter.
    #[arg(long)]
    pub no_distance_filter: bool,
    /// Candidate per cell: best location cluster or nearest sample. [default: cluster]
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
}

#[derive(Debug, Args)]
pub struct RefineArgs {
    /// Index directory written by `index`.
    #[arg(long)]
    pub index: PathBuf,
    /// Predictions CSV `id,embedding_row,topk`.
    #[arg(long)]
    pub predictions: PathBuf,
    /// Query embeddings referenced by `embedding_row`.
    #[arg(long)]
    pub queries: PathBuf,
    #[command(flatten)]
    pub params: RefineOverrides,
    /// Output directory. [default: geocell-out]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Pairs CSV `id,pred_lat,pred_lon,true_lat,true_lon[,pred_iso,true_iso]`.
    #[arg(long, conflicts_with_all = ["refined", "truth"])]
    pub pairs: Option<PathBuf>,
    /// Refined output of `refine`, joined with `--truth` by id.
    #[arg(long, requires = "truth")]
    pub refined: Option<PathBuf>,
    /// Samples CSV with the true locations.
    #[arg(long, requires = "refined")]
    pub truth: Option<PathBuf>,
    /// Print a CSV header and row instead of JSON.
    #[arg(long)]
    pub csv: bool,
    /// Output directory. [default: geocell-out]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Index directory written by `index`.
    #[arg(long)]
    pub index: PathBuf,
    /// Listen address.
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: SocketAddr,
    #[command(flatten)]
    pub params: RefineOverrides,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FixtureKind {
    /// 12 one-degree units with 60 samples each.
    Toy,
    /// Three countries, 40 units, about 5,000 samples.
    World,
}

#[derive(Debug, Args)]
pub struct FixtureArgs {
    /// Dataset shape.
    #[arg(long, value_enum, default_value = "toy")]
    pub kind: FixtureKind,
    /// Number of held-out queries with predictions.
    #[arg(long, default_value_t = 20)]
    pub queries: usize,
    /// Embedding dimension.
    #[arg(long, default_value_t = 16)]
    pub dim: usize,
    /// Output directory. [default: geocell-out]
    #[arg(long)]
    pub out: Option<PathBuf>,
}
