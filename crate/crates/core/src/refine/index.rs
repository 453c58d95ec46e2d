//! Embedding tables and the per-cell location-cluster index.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::RefineError;
use crate::clustering::{optics_order, OpticsParams};
use crate::geo::{haversine, GeoPoint};
use crate::geocell::{sample_mean_point, CellId, GeocellSet};
use crate::par;
use crate::sample::Sample;

/// Row-major `f32` embeddings with one id per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Embeddings {
    dim: usize,
    ids: Vec<String>,
    data: Vec<f32>,
}

impl Embeddings {
    pub fn new(dim: usize, ids: Vec<String>, data: Vec<f32>) -> Result<Embeddings, RefineError> {
        if dim == 0 {
            return Err(RefineError::DimensionMismatch { expected: 1, got: 0 });
        }
        if data.len() != dim * ids.len() {
            return Err(RefineError::DimensionMismatch {
                expected: dim * ids.len(),
                got: data.len(),
            });
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(RefineError::NonFinite(format!("embedding row {} holds {}", i / dim, data[i])));
        }
        Ok(Embeddings { dim, ids, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// id → row index. Later duplicates are ignored.
    pub fn id_index(&self) -> HashMap<&str, usize> {
        let mut out = HashMap::with_capacity(self.ids.len());
        for (i, id) in self.ids.iter().enumerate() {
            out.entry(id.as_str()).or_insert(i);
        }
        out
    }
}

/// Euclidean distance, accumulated in `f64`.
pub fn embedding_distance(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = f64::from(x) - f64::from(y);
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocationCluster {
    pub cluster_id: u32,
    pub cell_id: CellId,
    /// Indices into the index's sample table, ascending.
    pub members: Vec<usize>,
    /// Mean of the member embeddings, rounded to `f32`.
    pub mean: Vec<f32>,
    /// Mean member location.
    pub centroid: GeoPoint,
}

/// Index manifest fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexSummary {
    pub dim: usize,
    pub optics: OpticsParams,
    pub cells: usize,
    pub clusters: usize,
    pub samples: usize,
}

/// Immutable cluster index: per-cell location clusters, their mean
/// embeddings, and the member embeddings and locations.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterIndex {
    dim: usize,
    optics: OpticsParams,
    cell_centroids: Vec<GeoPoint>,
    clusters: Vec<LocationCluster>,
    by_cell: Vec<Vec<u32>>,
    sample_ids: Vec<String>,
    sample_locations: Vec<GeoPoint>,
    sample_embeddings: Vec<f32>,
    sample_cluster: Vec<u32>,
}

impl ClusterIndex {
    /// Assembles an index from parts. Cluster ids must be `0..n` in order and
    /// every sample must belong to exactly one cluster.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        dim: usize,
        optics: OpticsParams,
        cell_centroids: Vec<GeoPoint>,
        clusters: Vec<LocationCluster>,
        sample_ids: Vec<String>,
        sample_locations: Vec<GeoPoint>,
        sample_embeddings: Vec<f32>,
    ) -> Result<ClusterIndex, RefineError> {
        let n = sample_ids.len();
        if sample_locations.len() != n || sample_embeddings.len() != n * dim {
            return Err(RefineError::Invariant("sample tables have inconsistent lengths".into()));
        }
        let mut by_cell = vec![Vec::new(); cell_centroids.len()];
        let mut sample_cluster = vec![u32::MAX; n];
        for (i, c) in clusters.iter().enumerate() {
            if c.cluster_id as usize != i {
                return Err(RefineError::Invariant(format!("cluster at position {i} has id {}", c.cluster_id)));
            }
            if c.mean.len() != dim {
                return Err(RefineError::DimensionMismatch {
                    expected: dim,
                    got: c.mean.len(),
                });
            }
            if c.members.is_empty() {
                return Err(RefineError::Invariant(format!("cluster {i} has no members")));
            }
            by_cell
                .get_mut(c.cell_id as usize)
                .ok_or(RefineError::UnknownCell(c.cell_id))?
                .push(c.cluster_id);
            for &m in &c.members {
                let slot = sample_cluster
                    .get_mut(m)
                    .ok_or_else(|| RefineError::Invariant(format!("cluster {i} lists unknown sample row {m}")))?;
                if *slot != u32::MAX {
                    return Err(RefineError::Invariant(format!("sample row {m} is in two clusters")));
                }
                *slot = c.cluster_id;
            }
        }
        if let Some(m) = sample_cluster.iter().position(|&c| c == u32::MAX) {
            return Err(RefineError::Invariant(format!("sample {} is in no cluster", sample_ids[m])));
        }
        Ok(ClusterIndex {
            dim,
            optics,
            cell_centroids,
            clusters,
            by_cell,
            sample_ids,
            sample_locations,
            sample_embeddings,
            sample_cluster,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn optics(&self) -> &OpticsParams {
        &self.optics
    }

    pub fn summary(&self) -> IndexSummary {
        IndexSummary {
            dim: self.dim,
            optics: self.optics,
            cells: self.cell_centroids.len(),
            clusters: self.clusters.len(),
            samples: self.sample_ids.len(),
        }
    }

    pub fn cell_count(&self) -> usize {
        self.cell_centroids.len()
    }

    pub fn cell_centroid(&self, cell: CellId) -> Result<GeoPoint, RefineError> {
        self.cell_centroids
            .get(cell as usize)
            .copied()
            .ok_or(RefineError::UnknownCell(cell))
    }

    pub fn cell_centroids(&self) -> &[GeoPoint] {
        &self.cell_centroids
    }

    pub fn clusters(&self) -> &[LocationCluster] {
        &self.clusters
    }

    pub fn cluster(&self, id: u32) -> Result<&LocationCluster, RefineError> {
        self.clusters.get(id as usize).ok_or(RefineError::UnknownCluster(id))
    }

    /// Cluster ids of `cell`, ascending.
    pub fn cell_clusters(&self, cell: CellId) -> Result<&[u32], RefineError> {
        self.by_cell
            .get(cell as usize)
            .map(Vec::as_slice)
            .ok_or(RefineError::UnknownCell(cell))
    }

    pub fn sample_count(&self) -> usize {
        self.sample_ids.len()
    }

    pub fn sample_id(&self, i: usize) -> &str {
        &self.sample_ids[i]
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
    }

    pub fn sample_location(&self, i: usize) -> GeoPoint {
        self.sample_locations[i]
    }

    pub fn sample_locations(&self) -> &[GeoPoint] {
        &self.sample_locations
    }

    pub fn sample_embedding(&self, i: usize) -> &[f32] {
        &self.sample_embeddings[i * self.dim..(i + 1) * self.dim]
    }

    pub fn sample_embeddings(&self) -> &[f32] {
        &self.sample_embeddings
    }

    pub fn sample_cluster(&self, i: usize) -> u32 {
        self.sample_cluster[i]
    }
}

/// Mean of the given embedding rows, accumulated in `f64`.
pub(crate) fn mean_embedding<'a>(rows: impl Iterator<Item = &'a [f32]>, dim: usize) -> Vec<f32> {
    let mut acc = vec![0.0f64; dim];
    let mut n = 0usize;
    for r in rows {
        for (a, &v) in acc.iter_mut().zip(r) {
            *a += f64::from(v);
        }
        n += 1;
    }
    acc.into_iter().map(|a| (a / n as f64) as f32).collect()
}

/// Clusters every cell's members by location with OPTICS. Noise samples
/// become singleton clusters, so every indexed sample is retrievable.
///
/// Cluster ids run over cells in id order; within a cell, extracted clusters
/// come first (in label order), then singletons in member order.
pub fn build_cluster_index(
    cells: &GeocellSet,
    samples: &[Sample],
    embeddings: &Embeddings,
    params: &OpticsParams,
) -> Result<ClusterIndex, RefineError> {
    params.validate()?;
    let dim = embeddings.dim();
    let emb_index = embeddings.id_index();
    let sample_index: HashMap<&str, usize> = samples.iter().enumerate().map(|(i, s)| (s.id.as_str(), i)).collect();

    // sample table in cell order, members in dataset order
    let mut rows: Vec<(usize, usize)> = Vec::new();
    let mut cell_rows: Vec<Vec<usize>> = Vec::with_capacity(cells.len());
    for c in cells.cells() {
        let mut here = Vec::with_capacity(c.members.len());
        for m in &c.members {
            let s = *sample_index
                .get(m.as_str())
                .ok_or_else(|| RefineError::Invariant(format!("cell member {m} is not in the sample list")))?;
            let e = *emb_index
                .get(m.as_str())
                .ok_or_else(|| RefineError::MissingEmbedding(m.clone()))?;
            here.push(rows.len());
            rows.push((s, e));
        }
        cell_rows.push(here);
    }
    let sample_ids: Vec<String> = rows.iter().map(|&(s, _)| samples[s].id.clone()).collect();
    let sample_locations: Vec<GeoPoint> = rows.iter().map(|&(s, _)| samples[s].location).collect();
    let mut sample_embeddings = Vec::with_capacity(rows.len() * dim);
    for &(_, e) in &rows {
        sample_embeddings.extend_from_slice(embeddings.row(e));
    }

    let groups: Vec<Vec<Vec<usize>>> = par::map(&cell_rows, |members| {
        if members.is_empty() {
            return Vec::new();
        }
        let points: Vec<GeoPoint> = members.iter().map(|&r| sample_locations[r]).collect();
        let result = optics_order(&points, params, |a, b| haversine(*a, *b));
        let mut out: Vec<Vec<usize>> = result
            .flat
            .clusters
            .iter()
            .map(|c| c.iter().map(|&k| members[k]).collect())
            .collect();
        out.extend(result.flat.noise.iter().map(|&k| vec![members[k]]));
        out
    });

    let mut clusters = Vec::new();
    for (cell, group) in groups.into_iter().enumerate() {
        for members in group {
            let mean = mean_embedding(members.iter().map(|&r| &sample_embeddings[r * dim..(r + 1) * dim]), dim);
            let centroid = sample_mean_point(members.iter().map(|&r| sample_locations[r])).expect("non-empty cluster");
            clusters.push(LocationCluster {
                cluster_id: clusters.len() as u32,
                cell_id: cell as CellId,
                members,
                mean,
                centroid,
            });
        }
    }
    ClusterIndex::from_parts(
        dim,
        *params,
        cells.centroids(),
        clusters,
        sample_ids,
        sample_locations,
        sample_embeddings,
    )
}
