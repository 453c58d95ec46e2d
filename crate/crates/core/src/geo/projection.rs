use super::{Coord, EarthModel, GeoError, GeoPoint, MultiPolygon, Polygon};

/// Largest latitude or longitude offset from the origin accepted by
/// [`LocalProjection::project`].
pub const PROJECTION_GUARD_DEG: f64 = 10.0;

/// Equirectangular projection about a fixed origin, in kilometers.
///
/// `east = R·cos(φ₀)·Δλ`, `north = R·Δφ` with angles in radians. The mapping
/// is affine in degree space, so area-weighted centroids commute with it.
#[derive(Debug, Clone, Copy)]
pub struct LocalProjection {
    origin: GeoPoint,
    radius_km: f64,
    cos_lat: f64,
}

fn wrapped_dlon(lon: f64, origin_lon: f64) -> f64 {
    let mut d = lon - origin_lon;
    if d > 180.0 {
        d -= 360.0;
    } else if d < -180.0 {
        d += 360.0;
    }
    d
}

impl LocalProjection {
    pub fn new(origin: GeoPoint, earth: EarthModel) -> Self {
        LocalProjection {
            origin,
            radius_km: earth.radius_km(),
            cos_lat: origin.lat().to_radians().cos(),
        }
    }

    pub fn origin(&self) -> GeoPoint {
        self.origin
    }

    pub fn project(&self, p: GeoPoint) -> Result<Coord, GeoError> {
        let dlat = p.lat() - self.origin.lat();
        let dlon = wrapped_dlon(p.lon(), self.origin.lon());
        if dlat.abs() > PROJECTION_GUARD_DEG || dlon.abs() > PROJECTION_GUARD_DEG {
            return Err(GeoError::ProjectionDomain {
                lat: p.lat(),
                lon: p.lon(),
                origin_lat: self.origin.lat(),
                origin_lon: self.origin.lon(),
            });
        }
        Ok(self.forward(dlon, dlat))
    }

    /// Projects a lon/lat coordinate without the distance guard. Longitude is
    /// not wrapped, so shapes keep their planar continuity.
    pub fn project_coord(&self, c: Coord) -> Coord {
        self.forward(c.x - self.origin.lon(), c.y - self.origin.lat())
    }

    fn forward(&self, dlon_deg: f64, dlat_deg: f64) -> Coord {
        Coord::new(
            self.radius_km * self.cos_lat * dlon_deg.to_radians(),
            self.radius_km * dlat_deg.to_radians(),
        )
    }

    /// Inverse of [`Self::project_coord`]: km plane back to lon/lat degrees.
    pub fn unproject_coord(&self, c: Coord) -> Coord {
        let dlat = (c.y / self.radius_km).to_degrees();
        let dlon = (c.x / (self.radius_km * self.cos_lat)).to_degrees();
        Coord::new(self.origin.lon() + dlon, self.origin.lat() + dlat)
    }

    pub fn unproject(&self, c: Coord) -> Result<GeoPoint, GeoError> {
        let ll = self.unproject_coord(c);
        GeoPoint::new(ll.y, ll.x)
    }

    pub fn project_polygon(&self, poly: &Polygon) -> Result<Polygon, GeoError> {
        poly.map(|c| self.project_coord(c))
    }

    pub fn unproject_polygon(&self, poly: &Polygon) -> Result<Polygon, GeoError> {
        poly.map(|c| self.unproject_coord(c))
    }
}

/// Projects `points` about `origin` (km east, km north). Every point must lie
/// within [`PROJECTION_GUARD_DEG`] of the origin on both axes.
pub fn local_project(points: &[GeoPoint], origin: GeoPoint, earth: EarthModel) -> Result<Vec<Coord>, GeoError> {
    let proj = LocalProjection::new(origin, earth);
    points.iter().map(|&p| proj.project(p)).collect()
}

/// Inverse of [`local_project`].
pub fn local_unproject(coords: &[Coord], origin: GeoPoint, earth: EarthModel) -> Result<Vec<GeoPoint>, GeoError> {
    let proj = LocalProjection::new(origin, earth);
    coords.iter().map(|&c| proj.unproject(c)).collect()
}

/// Area-weighted centroid, computed in a local projection about the bounding
/// box center and mapped back to degrees.
pub fn centroid(poly: &MultiPolygon) -> Result<GeoPoint, GeoError> {
    let center = poly.bbox().center();
    let origin = GeoPoint::new(center.y, center.x)?;
    let proj = LocalProjection::new(origin, EarthModel::default());
    let (mut area, mut mx, mut my) = (0.0, 0.0, 0.0);
    for part in poly.parts() {
        let (a, x, y) = proj.project_polygon(part)?.moments();
        area += a;
        mx += x;
        my += y;
    }
    if !(area.abs() > 0.0) || !area.is_finite() {
        return Err(GeoError::DegenerateGeometry("total polygon area is zero".into()));
    }
    proj.unproject(Coord::new(mx / area, my / area))
}
