//! Training samples and their auxiliary attributes.

use serde::{Deserialize, Serialize};

use crate::geo::GeoPoint;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DriveSide {
    Left,
    Right,
}

/// Country / admin-1 / admin-2 identifiers a sample falls into.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AdminLineage {
    pub country: String,
    pub admin1: String,
    pub admin2: String,
}

impl AdminLineage {
    /// `iso/admin1/admin2`, unique across the admin table.
    pub fn key(&self) -> String {
        format!("{}/{}/{}", self.country, self.admin1, self.admin2)
    }
}

/// Optional per-sample metadata used for captions and auxiliary losses.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AuxAttributes {
    /// Köppen-Geiger class index in `[0, 28)`.
    pub climate_zone: Option<u8>,
    /// Month, 1-12.
    pub month: Option<u8>,
    /// Camera heading in degrees clockwise from north.
    pub bearing_deg: Option<f64>,
    pub drive_side: Option<DriveSide>,
    pub elevation_m: Option<f64>,
    /// People per km².
    pub population_density: Option<f64>,
    pub temp_mean_c: Option<f64>,
    pub temp_range_c: Option<f64>,
    /// mm/day
    pub precip_mean_mm: Option<f64>,
    pub precip_range_mm: Option<f64>,
    /// Human-readable admin-1 name, e.g. "Gauteng".
    pub region_name: Option<String>,
    /// Human-readable country name, e.g. "South Africa".
    pub country_name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub id: String,
    pub location: GeoPoint,
    pub admin: Option<AdminLineage>,
    #[serde(default)]
    pub aux: AuxAttributes,
}

impl Sample {
    pub fn new(id: impl Into<String>, location: GeoPoint) -> Self {
        Sample {
            id: id.into(),
            location,
            admin: None,
            aux: AuxAttributes::default(),
        }
    }

    pub fn with_admin(mut self, country: &str, admin1: &str, admin2: &str) -> Self {
        self.admin = Some(AdminLineage {
            country: country.to_string(),
            admin1: admin1.to_string(),
            admin2: admin2.to_string(),
        });
        self
    }

    pub fn country(&self) -> Option<&str> {
        self.admin.as_ref().map(|a| a.country.as_str())
    }
}
