//! Haversine-smoothed geocell labels, the smoothed classification loss and
//! the multi-task loss combiner.

mod auxiliary;
mod caption;

use serde::{Deserialize, Serialize};

use crate::geo::{haversine, GeoPoint};
use crate::geocell::{CellId, GeocellError, GeocellSet};
use crate::par;
use crate::sample::Sample;

pub use auxiliary::{
    auxiliary_losses, cross_entropy, mean_squared_error, regression_targets, AuxLosses, AuxPredictions, AuxTargets,
    RegressionTarget, CLIMATE_CLASSES, CLIMATE_ZONES, MONTH_CLASSES, MONTH_NAMES,
};
pub use caption::{generate_caption, CaptionCategory, CaptionTemplateSet};

/// Tolerance on the sum of a [`ProbabilityVector`].
pub const PROBABILITY_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LabelError {
    #[error("temperature must be positive and finite, got {0}")]
    InvalidTau(f64),
    #[error("unknown cell {0}")]
    UnknownCell(CellId),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("invalid probability vector: {0}")]
    InvalidProbabilities(String),
    #[error("class {value} out of range for {what}")]
    ClassOutOfRange { what: &'static str, value: i64 },
    #[error("invalid loss weights: {0}")]
    InvalidWeights(String),
    #[error("template error: {0}")]
    Template(String),
    #[error(transparent)]
    Geocell(#[from] GeocellError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothedLabel {
    pub sample_id: String,
    pub true_cell: CellId,
    /// One weight per cell, indexed by cell id.
    pub values: Vec<f64>,
}

impl SmoothedLabel {
    /// Number of cells whose weight exceeds the true cell's weight of 1.
    pub fn count_above_one(&self) -> usize {
        self.values.iter().filter(|&&v| v > 1.0).count()
    }

    /// Copy scaled to sum to one.
    pub fn normalized(&self) -> SmoothedLabel {
        let total: f64 = self.values.iter().sum();
        SmoothedLabel {
            sample_id: self.sample_id.clone(),
            true_cell: self.true_cell,
            values: self.values.iter().map(|v| v / total).collect(),
        }
    }
}

fn check_tau(tau: f64) -> Result<(), LabelError> {
    if tau > 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(LabelError::InvalidTau(tau))
    }
}

/// `exp(-(d_i - d_true) / tau)` over precomputed centroid distances.
///
/// The true entry is exactly 1. Entries may exceed 1 when another centroid is
/// nearer to the sample than the true cell's.
pub fn smooth_from_distances(distances: &[f64], true_index: usize, tau: f64) -> Result<Vec<f64>, LabelError> {
    check_tau(tau)?;
    let d_true = *distances.get(true_index).ok_or(LabelError::UnknownCell(true_index as CellId))?;
    Ok(distances
        .iter()
        .enumerate()
        .map(|(i, &d)| if i == true_index { 1.0 } else { (-(d - d_true) / tau).exp() })
        .collect())
}

/// Smoothed label of `sample` for its true cell, with haversine distances
/// from the sample to every cell centroid.
pub fn smooth_label(sample: &Sample, true_cell: CellId, cells: &GeocellSet, tau: f64) -> Result<SmoothedLabel, LabelError> {
    check_tau(tau)?;
    if cells.get(true_cell).is_none() {
        return Err(LabelError::UnknownCell(true_cell));
    }
    Ok(SmoothedLabel {
        sample_id: sample.id.clone(),
        true_cell,
        values: smooth_at(sample.location, true_cell, &cells.centroids(), tau),
    })
}

fn smooth_at(location: GeoPoint, true_cell: CellId, centroids: &[GeoPoint], tau: f64) -> Vec<f64> {
    let distances: Vec<f64> = centroids.iter().map(|&g| haversine(g, location)).collect();
    smooth_from_distances(&distances, true_cell as usize, tau).expect("validated")
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelBatch {
    pub labels: Vec<SmoothedLabel>,
    /// Total count of entries above 1 across all labels, before normalization.
    pub above_one: usize,
    /// Samples that are not cell members and were placed by nearest centroid.
    pub fallback: usize,
}

/// Labels for many samples. The true cell is the sample's cell membership;
/// samples that belong to no cell are located with
/// [`GeocellSet::assign_cell`].
pub fn smooth_labels(samples: &[Sample], cells: &GeocellSet, tau: f64, normalize: bool) -> Result<LabelBatch, LabelError> {
    check_tau(tau)?;
    let membership = cells.assignments();
    let centroids = cells.centroids();
    let labeled = par::try_map(samples, |s| -> Result<(SmoothedLabel, usize, bool), LabelError> {
        let (cell, fallback) = match membership.get(s.id.as_str()) {
            Some(&c) => (c, false),
            None => {
                let a = cells.assign_cell(s.location)?;
                (a.cell_id, a.fallback)
            }
        };
        let label = SmoothedLabel {
            sample_id: s.id.clone(),
            true_cell: cell,
            values: smooth_at(s.location, cell, &centroids, tau),
        };
        let above = label.count_above_one();
        let label = if normalize { label.normalized() } else { label };
        Ok((label, above, fallback))
    })?;
    let mut batch = LabelBatch {
        labels: Vec::with_capacity(labeled.len()),
        above_one: 0,
        fallback: 0,
    };
    for (label, above, fallback) in labeled {
        batch.labels.push(label);
        batch.above_one += above;
        batch.fallback += usize::from(fallback);
    }
    Ok(batch)
}

/// Non-negative weights over cells that sum to one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbabilityVector(Vec<f64>);

impl ProbabilityVector {
    pub fn new(values: Vec<f64>) -> Result<ProbabilityVector, LabelError> {
        if values.is_empty() {
            return Err(LabelError::InvalidProbabilities("empty".into()));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(LabelError::InvalidProbabilities(format!("entry {v}")));
        }
        let total: f64 = values.iter().sum();
        if (total - 1.0).abs() > PROBABILITY_SUM_TOL {
            return Err(LabelError::InvalidProbabilities(format!("sum {total}")));
        }
        Ok(ProbabilityVector(values))
    }

    /// Softmax of `logits`, computed through [`log_softmax`].
    pub fn from_logits(logits: &[f64]) -> Result<ProbabilityVector, LabelError> {
        ProbabilityVector::new(log_softmax(logits)?.into_iter().map(f64::exp).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// `x_i - logsumexp(x)`, shifted by the maximum for stability.
pub fn log_softmax(logits: &[f64]) -> Result<Vec<f64>, LabelError> {
    if logits.iter().any(|v| !v.is_finite()) {
        return Err(LabelError::NonFinite("logit".into()));
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_sum = logits.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    Ok(logits.iter().map(|v| (v - max) - log_sum).collect())
}

/// `-Σ log(p_i)·y_i`.
///
/// A zero probability under a positive label weight is reported as
/// [`LabelError::NonFinite`]; callers that want clipping must clip first.
pub fn haversine_loss(probs: &ProbabilityVector, label: &[f64]) -> Result<f64, LabelError> {
    if probs.len() != label.len() {
        return Err(LabelError::DimensionMismatch {
            expected: probs.len(),
            got: label.len(),
        });
    }
    let mut loss = 0.0;
    for (i, (&p, &y)) in probs.values().iter().zip(label).enumerate() {
        if !y.is_finite() || y < 0.0 {
            return Err(LabelError::NonFinite(format!("label weight {y} at cell {i}")));
        }
        if y == 0.0 {
            continue;
        }
        if p == 0.0 {
            return Err(LabelError::NonFinite(format!("log(0) at cell {i} with label weight {y}")));
        }
        loss -= p.ln() * y;
    }
    Ok(loss)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightMode {
    /// Use alpha, beta, gamma as given.
    Fixed,
    /// Rescale the weights so the auxiliary terms together equal the
    /// location loss.
    #[default]
    Balanced,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultiTaskLossConfig {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    #[serde(default)]
    pub mode: WeightMode,
}

impl Default for MultiTaskLossConfig {
    fn default() -> Self {
        MultiTaskLossConfig {
            alpha: 1.0,
            beta: 1.0,
            gamma: 1.0,
            mode: WeightMode::Balanced,
        }
    }
}

impl MultiTaskLossConfig {
    pub fn validate(&self) -> Result<(), LabelError> {
        for (name, w) in [("alpha", self.alpha), ("beta", self.beta), ("gamma", self.gamma)] {
            if !w.is_finite() || w < 0.0 {
                return Err(LabelError::InvalidWeights(format!("{name} = {w}")));
            }
        }
        Ok(())
    }

    /// Weights applied to (climate, month, reg) for these component values.
    pub fn effective_weights(&self, loc: f64, climate: f64, month: f64, reg: f64) -> (f64, f64, f64) {
        let (a, b, g) = (self.alpha, self.beta, self.gamma);
        match self.mode {
            WeightMode::Fixed => (a, b, g),
            WeightMode::Balanced => {
                let aux = a * climate + b * month + g * reg;
                if aux > 0.0 {
                    let s = loc / aux;
                    (a * s, b * s, g * s)
                } else {
                    (a, b, g)
                }
            }
        }
    }
}

/// `loc + α·climate + β·month + γ·reg` with the configured weighting mode.
pub fn multitask_loss(
    loc: f64,
    climate: f64,
    month: f64,
    reg: f64,
    config: &MultiTaskLossConfig,
) -> Result<f64, LabelError> {
    config.validate()?;
    for (name, v) in [("loc", loc), ("climate", climate), ("month", month), ("reg", reg)] {
        if !v.is_finite() {
            return Err(LabelError::NonFinite(format!("{name} loss {v}")));
        }
    }
    let (a, b, g) = config.effective_weights(loc, climate, month, reg);
    Ok(loc + a * climate + b * month + g * reg)
}
