//! CSV tables: samples, cell assignments, predictions, evaluation pairs and
//! refined coordinates, plus the embedding matrix with its id sidecar.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::binary::{read_ids, read_matrix, write_ids, write_matrix, EMBEDDING_MAGIC};
use super::{file_err, format_err, IoError};
use crate::eval::EvalPair;
use crate::geo::GeoPoint;
use crate::geocell::{CellId, GeocellSet};
use crate::refine::{CellProb, Embeddings, Refined};
use crate::sample::{AdminLineage, AuxAttributes, DriveSide, Sample};

fn reader(path: &Path) -> Result<csv::Reader<std::fs::File>, IoError> {
    let file = std::fs::File::open(path).map_err(file_err(path))?;
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file))
}

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>, IoError> {
    let file = std::fs::File::create(path).map_err(file_err(path))?;
    Ok(csv::Writer::from_writer(file))
}

fn csv_err(path: &Path, e: csv::Error) -> IoError {
    if e.is_io_error() {
        if let csv::ErrorKind::Io(source) = e.into_kind() {
            return IoError::File {
                path: path.to_path_buf(),
                source,
            };
        }
        unreachable!("checked above");
    }
    format_err(path, e)
}

fn row_err(path: &Path, line: usize, e: impl std::fmt::Display) -> IoError {
    format_err(path, format!("row {line}: {e}"))
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default)]
struct SampleRecord {
    id: String,
    lat: f64,
    lon: f64,
    iso: Option<String>,
    admin1: Option<String>,
    admin2: Option<String>,
    climate_zone: Option<u8>,
    month: Option<u8>,
    bearing_deg: Option<f64>,
    drive_side: Option<DriveSide>,
    elevation_m: Option<f64>,
    population_density: Option<f64>,
    temp_mean_c: Option<f64>,
    temp_range_c: Option<f64>,
    precip_mean_mm: Option<f64>,
    precip_range_mm: Option<f64>,
    region_name: Option<String>,
    country_name: Option<String>,
}

/// Samples from a CSV with `id,lat,lon` and any of the optional lineage
/// (`iso,admin1,admin2`) and auxiliary columns. A lineage is attached only
/// when all three admin columns are non-empty.
pub fn read_samples(path: &Path) -> Result<Vec<Sample>, IoError> {
    let mut rdr = reader(path)?;
    let headers = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
    for required in ["id", "lat", "lon"] {
        if !headers.iter().any(|h| h == required) {
            return Err(format_err(path, format!("missing column {required}")));
        }
    }
    rdr.deserialize::<SampleRecord>()
        .enumerate()
        .map(|(i, rec)| {
            let r = rec.map_err(|e| csv_err(path, e))?;
            if r.id.is_empty() {
                return Err(row_err(path, i + 1, "empty id"));
            }
            let location = GeoPoint::new(r.lat, r.lon).map_err(|e| row_err(path, i + 1, e))?;
            let nonempty = |s: Option<String>| s.filter(|v| !v.is_empty());
            let admin = match (nonempty(r.iso), nonempty(r.admin1), nonempty(r.admin2)) {
                (Some(country), Some(admin1), Some(admin2)) => Some(AdminLineage {
                    country,
                    admin1,
                    admin2,
                }),
                _ => None,
            };
            Ok(Sample {
                id: r.id,
                location,
                admin,
                aux: AuxAttributes {
                    climate_zone: r.climate_zone,
                    month: r.month,
                    bearing_deg: r.bearing_deg,
                    drive_side: r.drive_side,
                    elevation_m: r.elevation_m,
                    population_density: r.population_density,
                    temp_mean_c: r.temp_mean_c,
                    temp_range_c: r.temp_range_c,
                    precip_mean_mm: r.precip_mean_mm,
                    precip_range_mm: r.precip_range_mm,
                    region_name: nonempty(r.region_name),
                    country_name: nonempty(r.country_name),
                },
            })
        })
        .collect()
}

pub fn write_samples(path: &Path, samples: &[Sample]) -> Result<(), IoError> {
    let mut w = writer(path)?;
    for s in samples {
        let admin = s.admin.clone();
        let a = s.aux.clone();
        let rec = SampleRecord {
            id: s.id.clone(),
            lat: s.location.lat(),
            lon: s.location.lon(),
            iso: admin.as_ref().map(|l| l.country.clone()),
            admin1: admin.as_ref().map(|l| l.admin1.clone()),
            admin2: admin.map(|l| l.admin2),
            climate_zone: a.climate_zone,
            month: a.month,
            bearing_deg: a.bearing_deg,
            drive_side: a.drive_side,
            elevation_m: a.elevation_m,
            population_density: a.population_density,
            temp_mean_c: a.temp_mean_c,
            temp_range_c: a.temp_range_c,
            precip_mean_mm: a.precip_mean_mm,
            precip_range_mm: a.precip_range_mm,
            region_name: a.region_name,
            country_name: a.country_name,
        };
        w.serialize(rec).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(file_err(path))
}

#[derive(Debug, Serialize, Deserialize)]
struct AssignmentRecord {
    sample_id: String,
    cell_id: CellId,
}

/// `sample_id,cell_id` rows in cell order, members in dataset order.
pub fn write_assignments(path: &Path, set: &GeocellSet) -> Result<(), IoError> {
    let mut w = writer(path)?;
    if set.is_empty() {
        w.write_record(["sample_id", "cell_id"]).map_err(|e| csv_err(path, e))?;
    }
    for cell in set.cells() {
        for m in &cell.members {
            w.serialize(AssignmentRecord {
                sample_id: m.clone(),
                cell_id: cell.cell_id,
            })
            .map_err(|e| csv_err(path, e))?;
        }
    }
    w.flush().map_err(file_err(path))
}

pub fn read_assignments(path: &Path) -> Result<Vec<(String, CellId)>, IoError> {
    reader(path)?
        .deserialize::<AssignmentRecord>()
        .map(|r| r.map(|r| (r.sample_id, r.cell_id)).map_err(|e| csv_err(path, e)))
        .collect()
}

/// Sidecar path holding one id per matrix row: `<path>.ids`.
pub fn ids_path(path: &Path) -> PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(".ids");
    PathBuf::from(p)
}

pub fn write_embeddings(path: &Path, emb: &Embeddings) -> Result<(), IoError> {
    write_matrix(path, EMBEDDING_MAGIC, emb.len(), emb.dim(), emb.data())?;
    write_ids(&ids_path(path), emb.ids())
}

/// Embedding matrix plus its `.ids` sidecar.
pub fn read_embeddings(path: &Path) -> Result<Embeddings, IoError> {
    let m = read_matrix(path, EMBEDDING_MAGIC)?;
    let sidecar = ids_path(path);
    let ids = read_ids(&sidecar)?;
    if ids.len() != m.rows {
        return Err(format_err(
            &sidecar,
            format!("{} ids for {} embedding rows", ids.len(), m.rows),
        ));
    }
    Embeddings::new(m.cols, ids, m.data).map_err(|e| format_err(path, e))
}

/// One line of a predictions table: the query's row in the embedding file
/// and its top-K cell probabilities, most probable first.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRow {
    pub id: String,
    pub embedding_row: usize,
    pub topk: Vec<CellProb>,
}

#[derive(Debug, Serialize, Deserialize)]
struct PredictionRecord {
    id: String,
    embedding_row: usize,
    topk: String,
}

fn parse_topk(s: &str) -> Result<Vec<CellProb>, String> {
    s.split_whitespace()
        .map(|pair| {
            let (cell, prob) = pair.split_once(':').ok_or_else(|| format!("bad topk entry {pair:?}"))?;
            Ok(CellProb {
                cell_id: cell.parse().map_err(|_| format!("bad cell id in {pair:?}"))?,
                prob: prob.parse().map_err(|_| format!("bad probability in {pair:?}"))?,
            })
        })
        .collect()
}

/// Predictions CSV `id,embedding_row,topk`, where `topk` is a space
/// separated list of `cell_id:prob`.
pub fn read_predictions(path: &Path) -> Result<Vec<PredictionRow>, IoError> {
    reader(path)?
        .deserialize::<PredictionRecord>()
        .enumerate()
        .map(|(i, r)| {
            let r = r.map_err(|e| csv_err(path, e))?;
            Ok(PredictionRow {
                topk: parse_topk(&r.topk).map_err(|e| row_err(path, i + 1, e))?,
                id: r.id,
                embedding_row: r.embedding_row,
            })
        })
        .collect()
}

pub fn write_predictions(path: &Path, rows: &[PredictionRow]) -> Result<(), IoError> {
    let mut w = writer(path)?;
    for r in rows {
        let topk = r
            .topk
            .iter()
            .map(|c| format!("{}:{}", c.cell_id, c.prob))
            .collect::<Vec<_>>()
            .join(" ");
        w.serialize(PredictionRecord {
            id: r.id.clone(),
            embedding_row: r.embedding_row,
            topk,
        })
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(file_err(path))
}

#[derive(Debug, Serialize, Deserialize)]
struct EvalRecord {
    #[serde(default)]
    id: String,
    pred_lat: f64,
    pred_lon: f64,
    true_lat: f64,
    true_lon: f64,
    #[serde(default)]
    pred_iso: Option<String>,
    #[serde(default)]
    true_iso: Option<String>,
}

/// Evaluation CSV `id,pred_lat,pred_lon,true_lat,true_lon` with optional
/// `pred_iso,true_iso` columns.
pub fn read_eval_pairs(path: &Path) -> Result<Vec<EvalPair>, IoError> {
    reader(path)?
        .deserialize::<EvalRecord>()
        .enumerate()
        .map(|(i, r)| {
            let r = r.map_err(|e| csv_err(path, e))?;
            let point = |lat, lon| GeoPoint::new(lat, lon).map_err(|e| row_err(path, i + 1, e));
            Ok(EvalPair {
                prediction: point(r.pred_lat, r.pred_lon)?,
                truth: point(r.true_lat, r.true_lon)?,
                pred_iso: r.pred_iso.filter(|s| !s.is_empty()),
                true_iso: r.true_iso.filter(|s| !s.is_empty()),
            })
        })
        .collect()
}

pub fn write_eval_pairs(path: &Path, ids: &[String], pairs: &[EvalPair]) -> Result<(), IoError> {
    if ids.len() != pairs.len() {
        return Err(format_err(path, format!("{} ids for {} pairs", ids.len(), pairs.len())));
    }
    let mut w = writer(path)?;
    for (id, p) in ids.iter().zip(pairs) {
        w.serialize(EvalRecord {
            id: id.clone(),
            pred_lat: p.prediction.lat(),
            pred_lon: p.prediction.lon(),
            true_lat: p.truth.lat(),
            true_lon: p.truth.lon(),
            pred_iso: p.pred_iso.clone(),
            true_iso: p.true_iso.clone(),
        })
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(file_err(path))
}

pub const REFINED_HEADER: &str = "id,lat,lon,cluster_id,score,sample_id,cell_id,fallback";

/// One output row matching [`REFINED_HEADER`]. Floats use shortest
/// round-trip formatting.
pub fn format_refined_row(id: &str, r: &Refined) -> String {
    let quote = |s: &str| {
        if s.contains([',', '"', '\n']) {
            format!("\"{}\"", s.replace('"', "\"\""))
        } else {
            s.to_string()
        }
    };
    format!(
        "{},{},{},{},{},{},{},{}",
        quote(id),
        r.lat,
        r.lon,
        r.cluster_id,
        r.score,
        quote(&r.sample_id),
        r.cell_id,
        r.fallback
    )
}

#[derive(Debug, Deserialize)]
struct RefinedRecord {
    id: String,
    lat: f64,
    lon: f64,
    cluster_id: u32,
    score: f64,
    sample_id: String,
    cell_id: CellId,
    fallback: bool,
}

/// Rows of a refined-output table, in file order.
pub fn read_refined(path: &Path) -> Result<Vec<(String, Refined)>, IoError> {
    reader(path)?
        .deserialize::<RefinedRecord>()
        .map(|r| {
            let r = r.map_err(|e| csv_err(path, e))?;
            Ok((
                r.id,
                Refined {
                    lat: r.lat,
                    lon: r.lon,
                    cell_id: r.cell_id,
                    cluster_id: r.cluster_id,
                    sample_id: r.sample_id,
                    score: r.score,
                    fallback: r.fallback,
                },
            ))
        })
        .collect()
}
