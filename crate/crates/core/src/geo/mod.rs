//! Spherical distance, planar polygons and local projection.

mod clip;
mod point;
mod polygon;
mod projection;

pub use clip::{clip_half_plane, clip_polygon_convex, clip_ring_convex, split_antimeridian, voronoi_cells};
pub use point::{haversine, normalize_lon, EarthModel, GeoPoint, MEAN_EARTH_RADIUS_KM};
pub use polygon::{
    locate_in_ring, point_in_polygon, signed_area, Coord, MultiPolygon, Polygon, Rect, Ring, RingLocation, BOUNDARY_EPS,
};
pub use projection::{centroid, local_project, local_unproject, LocalProjection, PROJECTION_GUARD_DEG};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeoError {
    #[error("invalid coordinate lat={lat} lon={lon}")]
    InvalidCoordinate { lat: f64, lon: f64 },
    #[error("earth radius must be positive and finite, got {0}")]
    InvalidRadius(f64),
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),
    #[error("point ({lat}, {lon}) is too far from projection origin ({origin_lat}, {origin_lon})")]
    ProjectionDomain {
        lat: f64,
        lon: f64,
        origin_lat: f64,
        origin_lon: f64,
    },
}
