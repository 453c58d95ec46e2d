//! Cluster index directories.
//!
//! Layout:
//! - `manifest.json`: format version, summary and cell centroids
//! - `clusters.csv`: `cluster_id,cell_id,centroid_lat,centroid_lon,size`
//! - `cluster_means.embd` (+ `.ids`): one mean embedding per cluster
//! - `samples.embd` (+ `.ids`): member embeddings in sample-table order
//! - `samples.csv`: `sample_id,lat,lon,cluster_id` in the same order

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::tables::{ids_path, read_embeddings, write_embeddings};
use super::{file_err, format_err, read_to_string, write_string, IoError};
use crate::geo::GeoPoint;
use crate::geocell::CellId;
use crate::refine::{ClusterIndex, Embeddings, IndexSummary, LocationCluster};

pub const INDEX_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Manifest {
    version: u32,
    summary: IndexSummary,
    cell_centroids: Vec<GeoPoint>,
}

#[derive(Serialize, Deserialize)]
struct ClusterRecord {
    cluster_id: u32,
    cell_id: CellId,
    centroid_lat: f64,
    centroid_lon: f64,
    size: usize,
}

#[derive(Serialize, Deserialize)]
struct MemberRecord {
    sample_id: String,
    lat: f64,
    lon: f64,
    cluster_id: u32,
}

fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<(), IoError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| format_err(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| format_err(path, e))?;
    }
    w.flush().map_err(file_err(path))
}

fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, IoError> {
    let file = std::fs::File::open(path).map_err(file_err(path))?;
    csv::Reader::from_reader(file)
        .deserialize()
        .map(|r| r.map_err(|e| format_err(path, e)))
        .collect()
}

pub fn save_cluster_index(dir: &Path, index: &ClusterIndex) -> Result<(), IoError> {
    std::fs::create_dir_all(dir).map_err(file_err(dir))?;
    let manifest = Manifest {
        version: INDEX_FORMAT_VERSION,
        summary: index.summary(),
        cell_centroids: index.cell_centroids().to_vec(),
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write_string(&dir.join("manifest.json"), &(json + "\n"))?;

    let clusters = index.clusters();
    write_csv(
        &dir.join("clusters.csv"),
        clusters.iter().map(|c| ClusterRecord {
            cluster_id: c.cluster_id,
            cell_id: c.cell_id,
            centroid_lat: c.centroid.lat(),
            centroid_lon: c.centroid.lon(),
            size: c.members.len(),
        }),
    )?;
    let means = Embeddings::new(
        index.dim(),
        clusters.iter().map(|c| c.cluster_id.to_string()).collect(),
        clusters.iter().flat_map(|c| c.mean.iter().copied()).collect(),
    )
    .map_err(|e| format_err(dir, e))?;
    write_embeddings(&dir.join("cluster_means.embd"), &means)?;

    let samples = Embeddings::new(
        index.dim(),
        index.sample_ids().to_vec(),
        index.sample_embeddings().to_vec(),
    )
    .map_err(|e| format_err(dir, e))?;
    write_embeddings(&dir.join("samples.embd"), &samples)?;
    write_csv(
        &dir.join("samples.csv"),
        (0..index.sample_count()).map(|i| MemberRecord {
            sample_id: index.sample_id(i).to_string(),
            lat: index.sample_location(i).lat(),
            lon: index.sample_location(i).lon(),
            cluster_id: index.sample_cluster(i),
        }),
    )
}

/// Loads and validates an index directory written by [`save_cluster_index`].
pub fn load_cluster_index(dir: &Path) -> Result<ClusterIndex, IoError> {
    let manifest_path = dir.join("manifest.json");
    let manifest: Manifest =
        serde_json::from_str(&read_to_string(&manifest_path)?).map_err(|e| format_err(&manifest_path, e))?;
    if manifest.version != INDEX_FORMAT_VERSION {
        return Err(format_err(
            &manifest_path,
            format!("index format {} is not supported (expected {INDEX_FORMAT_VERSION})", manifest.version),
        ));
    }
    let dim = manifest.summary.dim;

    let cluster_path = dir.join("clusters.csv");
    let records: Vec<ClusterRecord> = read_csv(&cluster_path)?;
    let means_path = dir.join("cluster_means.embd");
    let means = read_embeddings(&means_path)?;
    if means.len() != records.len() || (!means.is_empty() && means.dim() != dim) {
        return Err(format_err(&means_path, "cluster means do not match clusters.csv"));
    }

    let samples_path = dir.join("samples.embd");
    let embeddings = read_embeddings(&samples_path)?;
    let members_path = dir.join("samples.csv");
    let members: Vec<MemberRecord> = read_csv(&members_path)?;
    if members.len() != embeddings.len() || members.iter().zip(embeddings.ids()).any(|(m, id)| &m.sample_id != id) {
        return Err(format_err(
            &members_path,
            format!("rows do not match {}", ids_path(&samples_path).display()),
        ));
    }

    let mut member_rows = vec![Vec::new(); records.len()];
    let mut locations = Vec::with_capacity(members.len());
    for (row, m) in members.iter().enumerate() {
        locations.push(GeoPoint::new(m.lat, m.lon).map_err(|e| format_err(&members_path, e))?);
        member_rows
            .get_mut(m.cluster_id as usize)
            .ok_or_else(|| format_err(&members_path, format!("unknown cluster {}", m.cluster_id)))?
            .push(row);
    }
    let clusters = records
        .iter()
        .zip(member_rows)
        .enumerate()
        .map(|(i, (r, rows))| {
            if rows.len() != r.size {
                return Err(format_err(
                    &cluster_path,
                    format!("cluster {} lists size {} but has {} members", r.cluster_id, r.size, rows.len()),
                ));
            }
            Ok(LocationCluster {
                cluster_id: r.cluster_id,
                cell_id: r.cell_id,
                members: rows,
                mean: means.row(i).to_vec(),
                centroid: GeoPoint::new(r.centroid_lat, r.centroid_lon).map_err(|e| format_err(&cluster_path, e))?,
            })
        })
        .collect::<Result<Vec<_>, IoError>>()?;

    let ids = embeddings.ids().to_vec();
    let data = embeddings.data().to_vec();
    let index = ClusterIndex::from_parts(
        dim,
        manifest.summary.optics,
        manifest.cell_centroids,
        clusters,
        ids,
        locations,
        data,
    )
    .map_err(|e| format_err(dir, e))?;
    if index.summary() != manifest.summary {
        return Err(format_err(&manifest_path, "summary does not match the index contents"));
    }
    Ok(index)
}
