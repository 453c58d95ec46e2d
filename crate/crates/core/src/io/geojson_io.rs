//! Admin boundary input and geocell output as GeoJSON FeatureCollections.

use std::path::Path;

use geojson::{Feature, FeatureCollection, GeoJson, Geometry, JsonObject, PolygonType, Value};
use serde_json::json;

use super::{format_err, read_to_string, write_string, IoError};
use crate::geo::{split_antimeridian, Coord, GeoPoint, MultiPolygon, Polygon, Ring};
use crate::geocell::{AdminLevel, AdminUnit, BuilderConfig, CellId, Geocell, GeocellSet, Provenance};

fn ring_from_positions(path: &Path, positions: &[Vec<f64>]) -> Result<Ring, IoError> {
    let coords = positions
        .iter()
        .map(|p| match p.as_slice() {
            [x, y, ..] if x.is_finite() && y.is_finite() => Ok(Coord::new(*x, *y)),
            _ => Err(format_err(path, format!("bad position {p:?}"))),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ring::new(coords).map_err(|e| format_err(path, e))
}

fn polygon_from(path: &Path, rings: &PolygonType) -> Result<Vec<Polygon>, IoError> {
    let (exterior, holes) = rings
        .split_first()
        .ok_or_else(|| format_err(path, "polygon without rings"))?;
    let poly = Polygon::new(
        ring_from_positions(path, exterior)?,
        holes
            .iter()
            .map(|h| ring_from_positions(path, h))
            .collect::<Result<_, _>>()?,
    );
    split_antimeridian(&poly).map_err(|e| format_err(path, e))
}

fn multipolygon_from(path: &Path, geometry: Option<&Geometry>) -> Result<MultiPolygon, IoError> {
    let geometry = geometry.ok_or_else(|| format_err(path, "feature without geometry"))?;
    let mut parts = Vec::new();
    match &geometry.value {
        Value::Polygon(rings) => parts.extend(polygon_from(path, rings)?),
        Value::MultiPolygon(polys) => {
            for rings in polys {
                parts.extend(polygon_from(path, rings)?);
            }
        }
        other => return Err(format_err(path, format!("unsupported geometry type {}", other.type_name()))),
    }
    MultiPolygon::new(parts).map_err(|e| format_err(path, e))
}

fn positions(ring: &Ring) -> Vec<Vec<f64>> {
    let c = ring.coords();
    c.iter()
        .chain(c.first())
        .map(|p| vec![p.x, p.y])
        .collect()
}

fn geometry_value(g: &MultiPolygon) -> Value {
    let polys: Vec<PolygonType> = g
        .parts()
        .iter()
        .map(|p| std::iter::once(p.exterior()).chain(p.holes()).map(positions).collect())
        .collect();
    if polys.len() == 1 {
        Value::Polygon(polys.into_iter().next().expect("one part"))
    } else {
        Value::MultiPolygon(polys)
    }
}

fn parse_collection(path: &Path, text: &str) -> Result<FeatureCollection, IoError> {
    match text.parse::<GeoJson>().map_err(|e| format_err(path, e))? {
        GeoJson::FeatureCollection(fc) => Ok(fc),
        _ => Err(format_err(path, "expected a FeatureCollection")),
    }
}

fn prop_str(path: &Path, props: &JsonObject, key: &str) -> Result<String, IoError> {
    match props.get(key) {
        Some(serde_json::Value::String(s)) => Ok(s.clone()),
        Some(serde_json::Value::Number(n)) => Ok(n.to_string()),
        Some(serde_json::Value::Null) | None => Ok(String::new()),
        Some(v) => Err(format_err(path, format!("property {key} has unexpected value {v}"))),
    }
}

/// Admin units from a FeatureCollection whose features carry `iso`,
/// `admin1_id`, `admin2_id` and `level` properties. Polygons crossing the
/// antimeridian are split and ring orientation is normalized.
pub fn parse_admin_geojson(path: &Path, text: &str) -> Result<Vec<AdminUnit>, IoError> {
    let fc = parse_collection(path, text)?;
    fc.features
        .iter()
        .map(|f| {
            let empty = JsonObject::new();
            let props = f.properties.as_ref().unwrap_or(&empty);
            let country = prop_str(path, props, "iso")?;
            if country.is_empty() {
                return Err(format_err(path, "feature without an iso code"));
            }
            let admin1 = prop_str(path, props, "admin1_id")?;
            let admin2 = prop_str(path, props, "admin2_id")?;
            let level = match prop_str(path, props, "level")?.as_str() {
                "country" | "0" => AdminLevel::Country,
                "admin1" | "1" => AdminLevel::Admin1,
                "admin2" | "2" => AdminLevel::Admin2,
                "" if !admin2.is_empty() => AdminLevel::Admin2,
                other => return Err(format_err(path, format!("unknown admin level {other:?}"))),
            };
            Ok(AdminUnit {
                level,
                country,
                admin1,
                admin2,
                geometry: multipolygon_from(path, f.geometry.as_ref())?,
            })
        })
        .collect()
}

pub fn read_admin_geojson(path: &Path) -> Result<Vec<AdminUnit>, IoError> {
    parse_admin_geojson(path, &read_to_string(path)?)
}

pub fn write_admin_geojson(path: &Path, units: &[AdminUnit]) -> Result<(), IoError> {
    let features = units
        .iter()
        .map(|u| {
            let level = match u.level {
                AdminLevel::Country => "country",
                AdminLevel::Admin1 => "admin1",
                AdminLevel::Admin2 => "admin2",
            };
            let mut props = JsonObject::new();
            props.insert("iso".into(), json!(u.country));
            props.insert("admin1_id".into(), json!(u.admin1));
            props.insert("admin2_id".into(), json!(u.admin2));
            props.insert("level".into(), json!(level));
            feature(geometry_value(&u.geometry), props)
        })
        .collect();
    let fc = FeatureCollection {
        bbox: None,
        features,
        foreign_members: None,
    };
    write_string(path, &(GeoJson::from(fc).to_string() + "\n"))
}

fn feature(value: Value, properties: JsonObject) -> Feature {
    Feature {
        bbox: None,
        geometry: Some(Geometry::new(value)),
        id: None,
        properties: Some(properties),
        foreign_members: None,
    }
}

/// GeoJSON text for a geocell set. The builder config is kept as a
/// `builder_config` member of the collection.
pub fn geocells_to_geojson(set: &GeocellSet) -> String {
    let features = set
        .cells()
        .iter()
        .map(|c| {
            let mut props = JsonObject::new();
            props.insert("cell_id".into(), json!(c.cell_id));
            props.insert("centroid_lat".into(), json!(c.centroid.lat()));
            props.insert("centroid_lon".into(), json!(c.centroid.lon()));
            props.insert("sample_count".into(), json!(c.members.len()));
            props.insert("country".into(), json!(c.country));
            props.insert("provenance".into(), json!(c.provenance.to_string()));
            props.insert("remainder".into(), json!(c.remainder));
            feature(geometry_value(&c.geometry), props)
        })
        .collect();
    let mut foreign = JsonObject::new();
    foreign.insert(
        "builder_config".into(),
        serde_json::to_value(&set.config).expect("config serializes"),
    );
    let fc = FeatureCollection {
        bbox: None,
        features,
        foreign_members: Some(foreign),
    };
    GeoJson::from(fc).to_string() + "\n"
}

/// Writes the GeoJSON file and the `sample_id,cell_id` sidecar.
pub fn write_geocells(geojson_path: &Path, assignments_path: &Path, set: &GeocellSet) -> Result<(), IoError> {
    write_string(geojson_path, &geocells_to_geojson(set))?;
    super::write_assignments(assignments_path, set)
}

/// Geocells from GeoJSON text plus `(sample_id, cell_id)` rows in member order.
pub fn parse_geocells_geojson(path: &Path, text: &str, assignments: &[(String, CellId)]) -> Result<GeocellSet, IoError> {
    let fc = parse_collection(path, text)?;
    let config: BuilderConfig = match fc.foreign_members.as_ref().and_then(|m| m.get("builder_config")) {
        Some(v) => serde_json::from_value(v.clone()).map_err(|e| format_err(path, format!("builder_config: {e}")))?,
        None => BuilderConfig::default(),
    };
    let mut members: Vec<Vec<String>> = vec![Vec::new(); fc.features.len()];
    for (sample, cell) in assignments {
        members
            .get_mut(*cell as usize)
            .ok_or_else(|| format_err(path, format!("assignment of {sample} to unknown cell {cell}")))?
            .push(sample.clone());
    }
    let cells = fc
        .features
        .iter()
        .zip(members)
        .map(|(f, members)| {
            let props = f
                .properties
                .as_ref()
                .ok_or_else(|| format_err(path, "feature without properties"))?;
            let num = |key: &str| {
                props
                    .get(key)
                    .and_then(serde_json::Value::as_f64)
                    .ok_or_else(|| format_err(path, format!("missing numeric property {key}")))
            };
            let cell_id = props
                .get("cell_id")
                .and_then(serde_json::Value::as_u64)
                .ok_or_else(|| format_err(path, "missing cell_id"))? as CellId;
            let centroid = GeoPoint::new(num("centroid_lat")?, num("centroid_lon")?).map_err(|e| format_err(path, e))?;
            let provenance: Provenance = prop_str(path, props, "provenance")?
                .parse()
                .map_err(|e: String| format_err(path, e))?;
            let remainder = props.get("remainder").and_then(serde_json::Value::as_bool).unwrap_or(false);
            Ok(Geocell::new(
                cell_id,
                multipolygon_from(path, f.geometry.as_ref())?,
                centroid,
                members,
                prop_str(path, props, "country")?,
                provenance,
                remainder,
            ))
        })
        .collect::<Result<Vec<_>, IoError>>()?;
    GeocellSet::new(cells, config).map_err(|e| format_err(path, e))
}

pub fn read_geocells(geojson_path: &Path, assignments_path: &Path) -> Result<GeocellSet, IoError> {
    let assignments = super::read_assignments(assignments_path)?;
    parse_geocells_geojson(geojson_path, &read_to_string(geojson_path)?, &assignments)
}
