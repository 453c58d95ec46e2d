//! Geolocalization metrics.
//!
//! Radius accuracies count an error as a hit when `error <= radius`. The
//! median of an even number of errors is the mean of the two central values.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::geo::{haversine, GeoPoint};
use crate::par;

/// Radii, in km, of the accuracy columns: street, city, region, country,
/// continent.
pub const RADII_KM: [u32; 5] = [1, 25, 200, 750, 2500];

/// Error scale of the score curve, in km.
pub const GEOGUESSR_SCALE_KM: f64 = 1492.7;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("no prediction pairs to evaluate")]
    EmptyInput,
    #[error("error distance must be finite and non-negative, got {0}")]
    InvalidDistance(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalPair {
    pub prediction: GeoPoint,
    pub truth: GeoPoint,
    #[serde(default)]
    pub pred_iso: Option<String>,
    #[serde(default)]
    pub true_iso: Option<String>,
}

impl EvalPair {
    pub fn new(prediction: GeoPoint, truth: GeoPoint) -> EvalPair {
        EvalPair {
            prediction,
            truth,
            pred_iso: None,
            true_iso: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub count: usize,
    pub median_error_km: f64,
    pub mean_error_km: f64,
    /// Percentage of errors within each radius, keyed by radius in km.
    pub pct_at: BTreeMap<u32, f64>,
    /// Percentage of pairs with matching country codes, over pairs that
    /// carry both codes. Absent when no pair does.
    pub country_accuracy: Option<f64>,
    pub geoguessr_score_mean: f64,
}

impl MetricsReport {
    pub const CSV_HEADER: &'static str = "count,median_error_km,mean_error_km,pct_at_1,pct_at_25,pct_at_200,pct_at_750,pct_at_2500,country_accuracy,geoguessr_score_mean";

    /// One flat CSV row matching [`Self::CSV_HEADER`].
    pub fn csv_row(&self) -> String {
        let mut cols = vec![
            self.count.to_string(),
            self.median_error_km.to_string(),
            self.mean_error_km.to_string(),
        ];
        cols.extend(RADII_KM.iter().map(|r| self.pct_at[r].to_string()));
        cols.push(self.country_accuracy.map(|v| v.to_string()).unwrap_or_default());
        cols.push(self.geoguessr_score_mean.to_string());
        cols.join(",")
    }
}

/// `5000·exp(-x / 1492.7)`.
pub fn geoguessr_score(error_km: f64) -> Result<f64, EvalError> {
    if !(error_km >= 0.0) || error_km.is_infinite() {
        return Err(EvalError::InvalidDistance(error_km));
    }
    Ok(5000.0 * (-error_km / GEOGUESSR_SCALE_KM).exp())
}

/// Median with the even-count midpoint rule. `values` must be non-empty.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Metrics over precomputed errors in km.
pub fn evaluate_errors(errors: &[f64]) -> Result<MetricsReport, EvalError> {
    if errors.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let scores = errors.iter().map(|&e| geoguessr_score(e)).collect::<Result<Vec<_>, _>>()?;
    let n = errors.len() as f64;
    let pct_at = RADII_KM
        .iter()
        .map(|&r| {
            let hits = errors.iter().filter(|&&e| e <= f64::from(r)).count();
            (r, 100.0 * hits as f64 / n)
        })
        .collect();
    Ok(MetricsReport {
        count: errors.len(),
        median_error_km: median(errors),
        mean_error_km: errors.iter().sum::<f64>() / n,
        pct_at,
        country_accuracy: None,
        geoguessr_score_mean: scores.iter().sum::<f64>() / n,
    })
}

pub fn evaluate(pairs: &[EvalPair]) -> Result<MetricsReport, EvalError> {
    let errors = par::map(pairs, |p| haversine(p.prediction, p.truth));
    let mut report = evaluate_errors(&errors)?;
    let (mut both, mut hits) = (0usize, 0usize);
    for p in pairs {
        if let (Some(a), Some(b)) = (&p.pred_iso, &p.true_iso) {
            both += 1;
            hits += usize::from(a == b);
        }
    }
    if both > 0 {
        report.country_accuracy = Some(100.0 * hits as f64 / both as f64);
    }
    Ok(report)
}
