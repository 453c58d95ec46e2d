//! Subcommand implementations. Each command checks that its inputs exist,
//! writes its outputs into one directory and finishes with a run manifest.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use geocell_core::eval::{evaluate, EvalPair, MetricsReport};
use geocell_core::geocell::{build_naive_geocells, build_semantic_geocells, GeocellSet};
use geocell_core::io;
use geocell_core::labels::{generate_caption, smooth_labels};
use geocell_core::par;
use geocell_core::refine::{build_cluster_index, refine_topk, CandidateMode, RefineParams};
use geocell_core::synth;
use tracing::{info, warn};

use crate::cli::{
    BuildArgs, Cli, Command, EvalArgs, FixtureArgs, FixtureKind, IndexArgs, LabelsArgs, ModeArg, RefineArgs, RefineOverrides,
    ServeArgs,
};
use crate::config::{require_path, PipelineConfig};
use crate::error::{CliError, ErrorKind};
use crate::manifest::write_manifest;

pub const THREADS_ENV: &str = "GEOCELL_KIT_THREADS";

/// Caps the worker pool from `GEOCELL_KIT_THREADS` when set.
pub fn configure_threads() -> Result<Option<usize>> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(None);
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::new(ErrorKind::InvalidConfig, format!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
    #[cfg(feature = "parallel")]
    {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(Some(n))
}

pub fn run(cli: Cli) -> Result<()> {
    let threads = configure_threads()?;
    let mut cfg = PipelineConfig::load(cli.config.as_deref(), cli.preset)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    match cli.command {
        Command::Build(a) => build(cfg, &a),
        Command::Labels(a) => labels(cfg, &a),
        Command::Index(a) => index(cfg, &a),
        Command::Refine(a) => refine(cfg, &a),
        Command::Eval(a) => eval(cfg, &a),
        Command::Serve(a) => serve(cfg, &a, threads),
        Command::Fixture(a) => fixture(cfg, &a),
    }
}

fn check_inputs(paths: &[&Path]) -> Result<()> {
    for p in paths {
        if !p.exists() {
            return Err(CliError::new(ErrorKind::UnresolvedInput, format!("input {} does not exist", p.display())).into());
        }
    }
    Ok(())
}

fn prepare_out(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

pub fn build(mut cfg: PipelineConfig, a: &BuildArgs) -> Result<()> {
    if let Some(n) = a.min_cell_size {
        cfg.builder.min_cell_size = n;
    }
    if let Some(n) = a.max_cell_size {
        cfg.builder.naive_max_cell_size = n;
    }
    cfg.validate()?;
    let samples_path = require_path(a.samples.as_deref(), cfg.paths.samples.as_ref(), "samples")?;
    let mut inputs = vec![samples_path.clone()];
    let admins_path = if a.naive {
        None
    } else {
        Some(require_path(a.admins.as_deref(), cfg.paths.admins.as_ref(), "admin boundaries")?)
    };
    inputs.extend(admins_path.clone());
    check_inputs(&inputs.iter().map(PathBuf::as_path).collect::<Vec<_>>())?;
    let out = cfg.output_dir(a.out.as_deref());

    let samples = io::read_samples(&samples_path)?;
    let set = match &admins_path {
        None => build_naive_geocells(&samples, &cfg.builder)?,
        Some(p) => {
            let admins = io::read_admin_geojson(p)?;
            build_semantic_geocells(&samples, &admins, &cfg.builder)?
        }
    };
    for w in &set.warnings {
        warn!("{w}");
    }
    prepare_out(&out)?;
    let geojson = out.join("geocells.geojson");
    let assignments = out.join("assignments.csv");
    io::write_geocells(&geojson, &assignments, &set)?;
    write_manifest(&out, "build", &cfg, &inputs, &[geojson, assignments])?;
    let remainders = set.cells().iter().filter(|c| c.remainder).count();
    info!(cells = set.len(), remainders, samples = samples.len(), out = %out.display(), "built geocells");
    Ok(())
}

fn read_cells(cells: &crate::cli::GeocellInput) -> Result<(GeocellSet, Vec<PathBuf>)> {
    let assignments = cells.assignments_path();
    check_inputs(&[&cells.geocells, &assignments])?;
    let set = io::read_geocells(&cells.geocells, &assignments)?;
    Ok((set, vec![cells.geocells.clone(), assignments]))
}

pub fn labels(mut cfg: PipelineConfig, a: &LabelsArgs) -> Result<()> {
    if let Some(t) = a.tau {
        cfg.tau_km = t;
    }
    cfg.validate()?;
    let samples_path = require_path(a.samples.as_deref(), cfg.paths.samples.as_ref(), "samples")?;
    check_inputs(&[&samples_path])?;
    let (set, mut inputs) = read_cells(&a.cells)?;
    inputs.insert(0, samples_path.clone());
    let out = cfg.output_dir(a.out.as_deref());

    let samples = io::read_samples(&samples_path)?;
    let batch = smooth_labels(&samples, &set, cfg.tau_km, a.normalize)?;
    if batch.fallback > 0 {
        warn!(samples = batch.fallback, "samples outside every cell were labeled by nearest centroid");
    }
    let data: Vec<f32> = batch.labels.iter().flat_map(|l| l.values.iter().map(|&v| v as f32)).collect();
    let captions = par::try_map(&samples, |s| generate_caption(s, &cfg.captions, cfg.seed))?;
    let mut text = String::new();
    for (s, c) in samples.iter().zip(&captions) {
        writeln!(text, "{}\t{}", s.id, c).expect("writing to a string");
    }

    prepare_out(&out)?;
    let matrix = out.join("labels.smlb");
    let ids = io::ids_path(&matrix);
    let caption_path = out.join("captions.tsv");
    io::write_matrix(&matrix, io::LABEL_MAGIC, samples.len(), set.len(), &data)?;
    io::write_ids(&ids, &samples.iter().map(|s| s.id.clone()).collect::<Vec<_>>())?;
    std::fs::write(&caption_path, text).with_context(|| format!("writing {}", caption_path.display()))?;
    write_manifest(&out, "labels", &cfg, &inputs, &[matrix, ids, caption_path])?;
    info!(samples = samples.len(), cells = set.len(), above_one = batch.above_one, "wrote labels");
    Ok(())
}

pub fn index(cfg: PipelineConfig, a: &IndexArgs) -> Result<()> {
    let samples_path = require_path(a.samples.as_deref(), cfg.paths.samples.as_ref(), "samples")?;
    let emb_path = require_path(a.embeddings.as_deref(), cfg.paths.embeddings.as_ref(), "embeddings")?;
    check_inputs(&[&samples_path, &emb_path])?;
    let (set, mut inputs) = read_cells(&a.cells)?;
    inputs.insert(0, samples_path.clone());
    inputs.push(emb_path.clone());
    inputs.push(io::ids_path(&emb_path));
    let out = cfg.output_dir(a.out.as_deref());

    let samples = io::read_samples(&samples_path)?;
    let embeddings = io::read_embeddings(&emb_path)?;
    let idx = build_cluster_index(&set, &samples, &embeddings, &cfg.index_optics)?;
    prepare_out(&out)?;
    let dir = out.join("index");
    io::save_cluster_index(&dir, &idx)?;
    write_manifest(&out, "index", &cfg, &inputs, &[dir])?;
    let s = idx.summary();
    info!(cells = s.cells, clusters = s.clusters, samples = s.samples, "built cluster index");
    Ok(())
}

pub fn apply_refine_overrides(params: &mut RefineParams, o: &RefineOverrides) {
    if let Some(k) = o.top_k {
        params.top_k = k;
    }
    if let Some(t) = o.temperature {
        params.temperature = t;
    }
    if let Some(d) = o.max_distance_km {
        params.max_distance_km = Some(d);
    }
    if o.no_distance_filter {
        params.max_distance_km = None;
    }
    if let Some(m) = o.mode {
        params.mode = match m {
            ModeArg::Cluster => CandidateMode::Cluster,
            ModeArg::Sample => CandidateMode::Sample,
        };
    }
}

/// Refined CSV text for every prediction row, in input order.
pub fn refine_table(
    index: &geocell_core::refine::ClusterIndex,
    predictions: &[io::PredictionRow],
    queries: &geocell_core::refine::Embeddings,
    params: &RefineParams,
) -> Result<String> {
    let rows = par::try_map(predictions, |p| -> Result<String> {
        if p.embedding_row >= queries.len() {
            return Err(CliError::new(
                ErrorKind::DataContract,
                format!("prediction {} references embedding row {} of {}", p.id, p.embedding_row, queries.len()),
            )
            .into());
        }
        let r = refine_topk(queries.row(p.embedding_row), &p.topk, index, params)
            .with_context(|| format!("refining prediction {}", p.id))?;
        Ok(io::format_refined_row(&p.id, &r))
    })?;
    let mut text = String::with_capacity(rows.len() * 64);
    text.push_str(io::REFINED_HEADER);
    text.push('\n');
    for r in rows {
        text.push_str(&r);
        text.push('\n');
    }
    Ok(text)
}

pub fn refine(mut cfg: PipelineConfig, a: &RefineArgs) -> Result<()> {
    apply_refine_overrides(&mut cfg.refine, &a.params);
    cfg.validate()?;
    check_inputs(&[&a.index, &a.predictions, &a.queries])?;
    let out = cfg.output_dir(a.out.as_deref());
    let idx = io::load_cluster_index(&a.index)?;
    let predictions = io::read_predictions(&a.predictions)?;
    let queries = io::read_embeddings(&a.queries)?;
    let text = refine_table(&idx, &predictions, &queries, &cfg.refine)?;
    prepare_out(&out)?;
    let path = out.join("refined.csv");
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    let inputs = [a.index.clone(), a.predictions.clone(), a.queries.clone(), io::ids_path(&a.queries)];
    write_manifest(&out, "refine", &cfg, &inputs, &[path])?;
    info!(rows = predictions.len(), "refined predictions");
    Ok(())
}

fn joined_pairs(refined: &Path, truth: &Path) -> Result<Vec<EvalPair>> {
    let rows = io::read_refined(refined)?;
    let samples = io::read_samples(truth)?;
    let by_id: HashMap<&str, usize> = samples.iter().enumerate().map(|(i, s)| (s.id.as_str(), i)).collect();
    rows.iter()
        .map(|(id, r)| {
            let s = &samples[*by_id.get(id.as_str()).ok_or_else(|| {
                CliError::new(ErrorKind::DataContract, format!("refined row {id} has no true location"))
            })?];
            let prediction = geocell_core::geo::GeoPoint::new(r.lat, r.lon)
                .map_err(|e| CliError::new(ErrorKind::InvalidInput, format!("refined row {id}: {e}")))?;
            Ok(EvalPair::new(prediction, s.location))
        })
        .collect()
}

pub fn metrics_json(report: &MetricsReport) -> String {
    serde_json::to_string_pretty(report).expect("report serializes") + "\n"
}

pub fn eval(cfg: PipelineConfig, a: &EvalArgs) -> Result<()> {
    let (pairs, inputs) = match (&a.pairs, &a.refined, &a.truth) {
        (Some(p), _, _) => {
            check_inputs(&[p])?;
            (io::read_eval_pairs(p)?, vec![p.clone()])
        }
        (None, Some(r), Some(t)) => {
            check_inputs(&[r, t])?;
            (joined_pairs(r, t)?, vec![r.clone(), t.clone()])
        }
        _ => {
            return Err(CliError::new(ErrorKind::UnresolvedInput, "give --pairs, or --refined with --truth").into());
        }
    };
    let report = evaluate(&pairs)?;
    let json = metrics_json(&report);
    if a.csv {
        println!("{}\n{}", MetricsReport::CSV_HEADER, report.csv_row());
    } else {
        print!("{json}");
    }
    let out = cfg.output_dir(a.out.as_deref());
    prepare_out(&out)?;
    let path = out.join("metrics.json");
    std::fs::write(&path, json).with_context(|| format!("writing {}", path.display()))?;
    write_manifest(&out, "eval", &cfg, &inputs, &[path])?;
    Ok(())
}

pub fn serve(mut cfg: PipelineConfig, a: &ServeArgs, threads: Option<usize>) -> Result<()> {
    apply_refine_overrides(&mut cfg.refine, &a.params);
    cfg.validate()?;
    check_inputs(&[&a.index])?;
    let mut rt = tokio::runtime::Builder::new_multi_thread();
    if let Some(n) = threads {
        rt.worker_threads(n);
    }
    let rt = rt.enable_all().build().context("starting the async runtime")?;
    rt.block_on(crate::service::serve(a.addr, a.index.clone(), cfg.refine))
}

/// Candidate cells listed per synthetic prediction.
const FIXTURE_TOPK: usize = 10;
/// Softmax distance scale of synthetic predictions, km.
const FIXTURE_SCALE_KM: f64 = 150.0;
const FIXTURE_NOISE: f64 = 0.05;

pub fn fixture(cfg: PipelineConfig, a: &FixtureArgs) -> Result<()> {
    let make = |seed: u64| match a.kind {
        FixtureKind::Toy => synth::toy_world(seed),
        FixtureKind::World => synth::three_country_world(seed),
    };
    let world = make(cfg.seed);
    let pool = make(cfg.seed.wrapping_add(1)).samples;
    if a.queries > pool.len() {
        return Err(CliError::new(ErrorKind::InvalidConfig, format!("at most {} queries", pool.len())).into());
    }
    let step = pool.len() / a.queries.max(1);
    let queries: Vec<_> = (0..a.queries)
        .map(|i| {
            let mut q = pool[i * step].clone();
            q.id = format!("q{i:04}");
            q
        })
        .collect();
    if a.dim == 0 {
        return Err(CliError::new(ErrorKind::InvalidConfig, "embedding dimension must be positive").into());
    }
    let embeddings = synth::synthetic_embeddings(&world.samples, a.dim, FIXTURE_NOISE, cfg.seed);
    let query_emb = synth::synthetic_embeddings(&queries, a.dim, FIXTURE_NOISE, cfg.seed);
    let set = build_semantic_geocells(&world.samples, &world.admins, &cfg.builder)?;
    let centroids = set.centroids();
    let predictions: Vec<io::PredictionRow> = queries
        .iter()
        .enumerate()
        .map(|(i, q)| io::PredictionRow {
            id: q.id.clone(),
            embedding_row: i,
            topk: synth::synthetic_topk(q.location, &centroids, FIXTURE_TOPK, FIXTURE_SCALE_KM),
        })
        .collect();

    let out = cfg.output_dir(a.out.as_deref());
    prepare_out(&out)?;
    let files = [
        out.join("samples.csv"),
        out.join("admins.geojson"),
        out.join("embeddings.embd"),
        io::ids_path(&out.join("embeddings.embd")),
        out.join("queries.csv"),
        out.join("queries.embd"),
        io::ids_path(&out.join("queries.embd")),
        out.join("predictions.csv"),
    ];
    io::write_samples(&files[0], &world.samples)?;
    io::write_admin_geojson(&files[1], &world.admins)?;
    io::write_embeddings(&files[2], &embeddings)?;
    io::write_samples(&files[4], &queries)?;
    io::write_embeddings(&files[5], &query_emb)?;
    io::write_predictions(&files[7], &predictions)?;
    write_manifest(&out, "fixture", &cfg, &[], &files)?;
    info!(samples = world.samples.len(), units = world.admins.len(), queries = queries.len(), "wrote fixture");
    Ok(())
}
