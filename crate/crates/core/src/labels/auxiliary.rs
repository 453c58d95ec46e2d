//! Auxiliary climate, month and regression losses.

use serde::{Deserialize, Serialize};

use super::LabelError;
use crate::sample::Sample;

pub const CLIMATE_CLASSES: usize = 28;
pub const MONTH_CLASSES: usize = 12;

/// Köppen-Geiger classes by index: (code, caption name).
pub const CLIMATE_ZONES: [(&str, &str); CLIMATE_CLASSES] = [
    ("Af", "tropical rainforest"),
    ("Am", "tropical monsoon"),
    ("Aw", "tropical savanna"),
    ("BWh", "hot desert"),
    ("BWk", "cold desert"),
    ("BSh", "hot semi-arid"),
    ("BSk", "cold semi-arid"),
    ("Csa", "hot-summer mediterranean"),
    ("Csb", "warm-summer mediterranean"),
    ("Cwa", "monsoon-influenced humid subtropical"),
    ("Cwb", "subtropical highland"),
    ("Cfa", "humid subtropical"),
    ("Cfb", "temperate oceanic"),
    ("Cfc", "subpolar oceanic"),
    ("Dsa", "hot-summer continental mediterranean"),
    ("Dsb", "warm-summer continental mediterranean"),
    ("Dsc", "dry-summer subarctic"),
    ("Dsd", "dry-summer extremely cold subarctic"),
    ("Dwa", "monsoon-influenced hot-summer humid continental"),
    ("Dwb", "monsoon-influenced warm-summer humid continental"),
    ("Dwc", "monsoon-influenced subarctic"),
    ("Dwd", "monsoon-influenced extremely cold subarctic"),
    ("Dfa", "hot-summer humid continental"),
    ("Dfb", "warm-summer humid continental"),
    ("Dfc", "subarctic"),
    ("Dfd", "extremely cold subarctic"),
    ("ET", "tundra"),
    ("EF", "ice cap"),
];

pub const MONTH_NAMES: [&str; MONTH_CLASSES] = [
    "January",
    "February",
    "March",
    "April",
    "May",
    "June",
    "July",
    "August",
    "September",
    "October",
    "November",
    "December",
];

/// Regression heads and the transform applied to each raw attribute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegressionTarget {
    TempMean,
    TempRange,
    PrecipMean,
    PrecipRange,
    /// `sign(e)·ln(1 + |e|)` of elevation in meters.
    LogElevation,
    /// `ln(1 + density)` of people per km².
    LogPopulationDensity,
}

impl RegressionTarget {
    pub const ALL: [RegressionTarget; 6] = [
        RegressionTarget::TempMean,
        RegressionTarget::TempRange,
        RegressionTarget::PrecipMean,
        RegressionTarget::PrecipRange,
        RegressionTarget::LogElevation,
        RegressionTarget::LogPopulationDensity,
    ];

    pub fn value(&self, s: &Sample) -> Option<f64> {
        let a = &s.aux;
        match self {
            RegressionTarget::TempMean => a.temp_mean_c,
            RegressionTarget::TempRange => a.temp_range_c,
            RegressionTarget::PrecipMean => a.precip_mean_mm,
            RegressionTarget::PrecipRange => a.precip_range_mm,
            RegressionTarget::LogElevation => a.elevation_m.map(|e| e.signum() * e.abs().ln_1p()),
            RegressionTarget::LogPopulationDensity => a.population_density.filter(|d| *d >= 0.0).map(f64::ln_1p),
        }
    }
}

/// Transformed regression targets of `s`, or `None` if any is missing.
pub fn regression_targets(s: &Sample, selection: &[RegressionTarget]) -> Option<Vec<f64>> {
    selection.iter().map(|t| t.value(s)).collect()
}

/// Head outputs for one sample. Class heads hold probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuxPredictions {
    pub climate: Vec<f64>,
    pub month: Vec<f64>,
    pub regression: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuxTargets {
    /// Class index in `[0, 28)`.
    pub climate: u8,
    /// Month 1-12.
    pub month: u8,
    pub regression: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuxLosses {
    pub climate: f64,
    pub month: f64,
    pub reg: f64,
}

/// `-ln p[target]` for a probability vector over `classes` classes.
pub fn cross_entropy(probs: &[f64], target: usize, classes: usize, what: &'static str) -> Result<f64, LabelError> {
    if probs.len() != classes {
        return Err(LabelError::DimensionMismatch {
            expected: classes,
            got: probs.len(),
        });
    }
    if target >= classes {
        return Err(LabelError::ClassOutOfRange {
            what,
            value: target as i64,
        });
    }
    let p = probs[target];
    if !(p > 0.0 && p.is_finite()) {
        return Err(LabelError::NonFinite(format!("{what} probability {p} at target")));
    }
    Ok(-p.ln())
}

pub fn mean_squared_error(pred: &[f64], target: &[f64]) -> Result<f64, LabelError> {
    if pred.len() != target.len() {
        return Err(LabelError::DimensionMismatch {
            expected: target.len(),
            got: pred.len(),
        });
    }
    if pred.is_empty() {
        return Ok(0.0);
    }
    if pred.iter().chain(target).any(|v| !v.is_finite()) {
        return Err(LabelError::NonFinite("regression value".into()));
    }
    Ok(pred.iter().zip(target).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / pred.len() as f64)
}

/// Climate and month cross-entropies and the regression MSE averaged over heads.
pub fn auxiliary_losses(pred: &AuxPredictions, target: &AuxTargets) -> Result<AuxLosses, LabelError> {
    if !(1..=12).contains(&target.month) {
        return Err(LabelError::ClassOutOfRange {
            what: "month",
            value: i64::from(target.month),
        });
    }
    Ok(AuxLosses {
        climate: cross_entropy(&pred.climate, usize::from(target.climate), CLIMATE_CLASSES, "climate")?,
        month: cross_entropy(&pred.month, usize::from(target.month - 1), MONTH_CLASSES, "month")?,
        reg: mean_squared_error(&pred.regression, &target.regression)?,
    })
}
