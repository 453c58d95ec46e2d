use serde::{Deserialize, Serialize};

use super::GeoError;

/// Mean Earth radius in kilometers.
pub const MEAN_EARTH_RADIUS_KM: f64 = 6371.0;

/// A latitude/longitude position in degrees.
///
/// Latitude lies in `[-90, 90]`; longitude is normalized into `(-180, 180]`
/// on construction. NaN and infinite values are rejected.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPoint", into = "RawPoint")]
pub struct GeoPoint {
    lat: f64,
    lon: f64,
}

#[derive(Serialize, Deserialize)]
struct RawPoint {
    lat: f64,
    lon: f64,
}

impl TryFrom<RawPoint> for GeoPoint {
    type Error = GeoError;

    fn try_from(raw: RawPoint) -> Result<Self, Self::Error> {
        GeoPoint::new(raw.lat, raw.lon)
    }
}

impl From<GeoPoint> for RawPoint {
    fn from(p: GeoPoint) -> Self {
        RawPoint { lat: p.lat, lon: p.lon }
    }
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Result<Self, GeoError> {
        if !lat.is_finite() || !lon.is_finite() {
            return Err(GeoError::InvalidCoordinate { lat, lon });
        }
        if !(-90.0..=90.0).contains(&lat) {
            return Err(GeoError::InvalidCoordinate { lat, lon });
        }
        Ok(GeoPoint {
            lat,
            lon: normalize_lon(lon),
        })
    }

    pub fn lat(&self) -> f64 {
        self.lat
    }

    pub fn lon(&self) -> f64 {
        self.lon
    }
}

/// Maps any finite longitude into `(-180, 180]`. Values already in range are
/// returned untouched so no rounding is introduced.
pub fn normalize_lon(lon: f64) -> f64 {
    if lon > -180.0 && lon <= 180.0 {
        return lon;
    }
    let wrapped = (lon + 180.0).rem_euclid(360.0) - 180.0;
    if wrapped <= -180.0 {
        180.0
    } else {
        wrapped
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EarthModel {
    radius_km: f64,
}

impl Default for EarthModel {
    fn default() -> Self {
        EarthModel {
            radius_km: MEAN_EARTH_RADIUS_KM,
        }
    }
}

impl EarthModel {
    pub fn new(radius_km: f64) -> Result<Self, GeoError> {
        if !(radius_km.is_finite() && radius_km > 0.0) {
            return Err(GeoError::InvalidRadius(radius_km));
        }
        Ok(EarthModel { radius_km })
    }

    pub fn radius_km(&self) -> f64 {
        self.radius_km
    }

    /// Great-circle distance in kilometers.
    pub fn haversine(&self, p1: GeoPoint, p2: GeoPoint) -> f64 {
        let phi1 = p1.lat.to_radians();
        let phi2 = p2.lat.to_radians();
        let dphi = (p2.lat - p1.lat).to_radians();
        let dlambda = (p2.lon - p1.lon).to_radians();
        let a = (dphi / 2.0).sin().powi(2) + phi1.cos() * phi2.cos() * (dlambda / 2.0).sin().powi(2);
        2.0 * self.radius_km * a.sqrt().min(1.0).asin()
    }
}

/// Haversine distance on the mean-radius sphere, in kilometers.
pub fn haversine(p1: GeoPoint, p2: GeoPoint) -> f64 {
    EarthModel::default().haversine(p1, p2)
}
