//! Location-cluster retrieval and top-K cross-cell refinement.
//!
//! Each candidate cell proposes its best location cluster (smallest distance
//! between the query embedding and the cluster's mean embedding). The
//! candidate distances go through a temperature softmax of `-d/T`, are
//! multiplied with the cell probabilities, and the winning cluster's nearest
//! member gives the final location.

mod index;

use serde::{Deserialize, Serialize};

use crate::clustering::ClusterError;
use crate::geo::{haversine, GeoPoint};
use crate::geocell::CellId;

pub use index::{build_cluster_index, embedding_distance, ClusterIndex, Embeddings, IndexSummary, LocationCluster};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RefineError {
    #[error("embedding dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("no embedding for sample {0}")]
    MissingEmbedding(String),
    #[error("cell {0} has no location clusters")]
    EmptyCell(CellId),
    #[error("unknown cell {0}")]
    UnknownCell(CellId),
    #[error("unknown cluster {0}")]
    UnknownCluster(u32),
    #[error("invalid refinement parameters: {0}")]
    InvalidParams(String),
    #[error("invalid candidate list: {0}")]
    InvalidCandidates(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateMode {
    /// Each cell proposes its best location cluster.
    #[default]
    Cluster,
    /// Each cell proposes its single nearest member sample.
    Sample,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefineParams {
    pub top_k: usize,
    pub temperature: f64,
    /// Candidates whose cluster centroid is farther than this from the top-1
    /// cell's centroid are dropped. `None` disables the filter.
    pub max_distance_km: Option<f64>,
    #[serde(default)]
    pub mode: CandidateMode,
}

impl RefineParams {
    pub fn street_view() -> RefineParams {
        RefineParams {
            top_k: 5,
            temperature: 1.6,
            max_distance_km: Some(1000.0),
            mode: CandidateMode::Cluster,
        }
    }

    pub fn general() -> RefineParams {
        RefineParams {
            top_k: 40,
            temperature: 0.6,
            max_distance_km: None,
            mode: CandidateMode::Cluster,
        }
    }

    pub fn validate(&self) -> Result<(), RefineError> {
        if self.top_k < 1 {
            return Err(RefineError::InvalidParams("top_k must be at least 1".into()));
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(RefineError::InvalidParams(format!("temperature {}", self.temperature)));
        }
        if let Some(d) = self.max_distance_km {
            if !(d >= 0.0) {
                return Err(RefineError::InvalidParams(format!("max_distance_km {d}")));
            }
        }
        Ok(())
    }
}

impl Default for RefineParams {
    fn default() -> Self {
        RefineParams::street_view()
    }
}

/// One geocell candidate from the classifier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellProb {
    pub cell_id: CellId,
    pub prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Refined {
    pub lat: f64,
    pub lon: f64,
    pub cell_id: CellId,
    pub cluster_id: u32,
    pub sample_id: String,
    /// Fused score `r_k·p_k` of the winning candidate.
    pub score: f64,
    /// The distance filter removed every candidate and the top-1 cell was
    /// used unfiltered.
    pub fallback: bool,
}

fn check_query(query: &[f32], index: &ClusterIndex) -> Result<(), RefineError> {
    if query.len() != index.dim() {
        return Err(RefineError::DimensionMismatch {
            expected: index.dim(),
            got: query.len(),
        });
    }
    if query.iter().any(|v| !v.is_finite()) {
        return Err(RefineError::NonFinite("query embedding".into()));
    }
    Ok(())
}

/// Cluster of `cell` whose mean embedding is nearest to `query`; ties go to
/// the lower cluster id.
pub fn select_cluster_in_cell(query: &[f32], cell: CellId, index: &ClusterIndex) -> Result<(u32, f64), RefineError> {
    check_query(query, index)?;
    nearest_cluster(query, cell, index)
}

fn nearest_cluster(query: &[f32], cell: CellId, index: &ClusterIndex) -> Result<(u32, f64), RefineError> {
    let mut best: Option<(u32, f64)> = None;
    for &c in index.cell_clusters(cell)? {
        let d = embedding_distance(query, &index.cluster(c)?.mean);
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((c, d));
        }
    }
    best.ok_or(RefineError::EmptyCell(cell))
}

fn nearest_member<'a>(query: &[f32], members: impl Iterator<Item = &'a usize>, index: &ClusterIndex) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for &m in members {
        let d = embedding_distance(query, index.sample_embedding(m));
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((m, d));
        }
    }
    best
}

/// Member of `cluster` with the smallest embedding distance to `query`
/// (ties to the lower sample row). Returns the sample row and its location.
pub fn refine_within_cluster(query: &[f32], cluster: u32, index: &ClusterIndex) -> Result<(usize, GeoPoint), RefineError> {
    check_query(query, index)?;
    let c = index.cluster(cluster)?;
    let (m, _) = nearest_member(query, c.members.iter(), index).ok_or(RefineError::UnknownCluster(cluster))?;
    Ok((m, index.sample_location(m)))
}

/// `exp(-d_k/T) / Σ exp(-d_j/T)`, shifted by the smallest distance.
pub fn distance_softmax(distances: &[f64], temperature: f64) -> Vec<f64> {
    let dmin = distances.iter().copied().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = distances.iter().map(|d| (-(d - dmin) / temperature).exp()).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

/// The `k` most probable candidates, ties to the lower cell id.
pub fn top_candidates(topk: &[CellProb], k: usize) -> Vec<CellProb> {
    let mut sorted = topk.to_vec();
    sorted.sort_by(|a, b| b.prob.total_cmp(&a.prob).then(a.cell_id.cmp(&b.cell_id)));
    sorted.truncate(k);
    sorted
}

struct Candidate {
    cell_id: CellId,
    prob: f64,
    cluster: u32,
    /// Sample row in per-sample mode.
    sample: Option<usize>,
    distance: f64,
    location: GeoPoint,
}

/// Fuses cell probabilities with embedding-distance refinement.
pub fn refine_topk(query: &[f32], topk: &[CellProb], index: &ClusterIndex, params: &RefineParams) -> Result<Refined, RefineError> {
    params.validate()?;
    check_query(query, index)?;
    if topk.is_empty() {
        return Err(RefineError::InvalidCandidates("empty top-K list".into()));
    }
    for c in topk {
        if !(c.prob >= 0.0 && c.prob.is_finite()) {
            return Err(RefineError::InvalidCandidates(format!("cell {} has probability {}", c.cell_id, c.prob)));
        }
        index.cell_clusters(c.cell_id)?;
    }
    let chosen = top_candidates(topk, params.top_k);
    let candidates = chosen
        .iter()
        .map(|c| -> Result<Candidate, RefineError> {
            match params.mode {
                CandidateMode::Cluster => {
                    let (cluster, distance) = nearest_cluster(query, c.cell_id, index)?;
                    Ok(Candidate {
                        cell_id: c.cell_id,
                        prob: c.prob,
                        cluster,
                        sample: None,
                        distance,
                        location: index.cluster(cluster)?.centroid,
                    })
                }
                CandidateMode::Sample => {
                    let clusters = index.cell_clusters(c.cell_id)?;
                    let mut members = Vec::new();
                    for &k in clusters {
                        members.extend_from_slice(&index.cluster(k)?.members);
                    }
                    members.sort_unstable();
                    let (m, distance) = nearest_member(query, members.iter(), index).ok_or(RefineError::EmptyCell(c.cell_id))?;
                    Ok(Candidate {
                        cell_id: c.cell_id,
                        prob: c.prob,
                        cluster: index.sample_cluster(m),
                        sample: Some(m),
                        distance,
                        location: index.sample_location(m),
                    })
                }
            }
        })
        .collect::<Result<Vec<_>, _>>()?;

    let (mut kept, fallback) = match params.max_distance_km {
        None => (candidates, false),
        Some(limit) => {
            let origin = index.cell_centroid(chosen[0].cell_id)?;
            let keep: Vec<bool> = candidates.iter().map(|c| haversine(origin, c.location) <= limit).collect();
            if keep.contains(&true) {
                let kept = candidates.into_iter().zip(keep).filter_map(|(c, k)| k.then_some(c)).collect();
                (kept, false)
            } else {
                (candidates.into_iter().take(1).collect(), true)
            }
        }
    };

    let distances: Vec<f64> = kept.iter().map(|c| c.distance).collect();
    let r = distance_softmax(&distances, params.temperature);
    let mut best = 0;
    let mut best_score = r[0] * kept[0].prob;
    for k in 1..kept.len() {
        let s = r[k] * kept[k].prob;
        let better = s > best_score
            || (s == best_score
                && (kept[k].prob > kept[best].prob
                    || (kept[k].prob == kept[best].prob && kept[k].cell_id < kept[best].cell_id)));
        if better {
            best = k;
            best_score = s;
        }
    }
    let win = kept.swap_remove(best);
    let row = match win.sample {
        Some(m) => m,
        None => refine_within_cluster(query, win.cluster, index)?.0,
    };
    let loc = index.sample_location(row);
    Ok(Refined {
        lat: loc.lat(),
        lon: loc.lon(),
        cell_id: win.cell_id,
        cluster_id: win.cluster,
        sample_id: index.sample_id(row).to_string(),
        score: best_score,
        fallback,
    })
}
