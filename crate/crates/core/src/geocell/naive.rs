//! Rectangular geocells from recursive median splits.

use std::collections::BTreeMap;

use super::{check_unique_ids, finalize, BuilderConfig, Draft, GeocellError, GeocellSet, Provenance};
use crate::geo::{Coord, MultiPolygon, Polygon, Rect, MEAN_EARTH_RADIUS_KM};
use crate::sample::Sample;

/// Padding, in degrees, around the sample bounding box.
const PAD_DEG: f64 = 1e-3;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Axis {
    Lon,
    Lat,
}

/// Splits the padded sample bounding box until no cell holds more than
/// `naive_max_cell_size` samples or no split keeps both halves at
/// `min_cell_size` or above.
///
/// A cell is split along its longer side (measured in km) at the member
/// median. The cut sits halfway between the two samples on either side of
/// it, so no sample lies on a cut.
pub fn build_naive_geocells(samples: &[Sample], config: &BuilderConfig) -> Result<GeocellSet, GeocellError> {
    config.validate()?;
    if config.naive_max_cell_size < config.min_cell_size {
        return Err(GeocellError::Config(format!(
            "naive_max_cell_size {} is below min_cell_size {}",
            config.naive_max_cell_size, config.min_cell_size
        )));
    }
    check_unique_ids(samples)?;
    let coords: Vec<Coord> = samples.iter().map(|s| Coord::from_geo(s.location)).collect();
    let bounds = Rect::from_coords(&coords).expect("non-empty").expand(PAD_DEG);
    let mut drafts = Vec::new();
    let all: Vec<usize> = (0..samples.len()).collect();
    split(&coords, bounds, all, String::new(), config, &mut |rect, members, path| {
        drafts.push(Draft {
            geometry: MultiPolygon::single(Polygon::from_coords(rect.to_ring()).expect("padded rectangle")),
            country: majority_country(samples, &members),
            members,
            provenance: Provenance::Naive { path },
            remainder: false,
        });
    });
    let set = finalize(drafts, samples, config)?;
    set.validate(samples, false)?;
    Ok(set)
}

fn majority_country(samples: &[Sample], members: &[usize]) -> String {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for &m in members {
        if let Some(c) = samples[m].country() {
            *counts.entry(c).or_insert(0) += 1;
        }
    }
    // max_by_key keeps the last maximum; iterate in reverse for the smallest code
    counts
        .into_iter()
        .rev()
        .max_by_key(|&(_, n)| n)
        .map(|(c, _)| c.to_string())
        .unwrap_or_default()
}

fn extent_km(r: &Rect) -> (f64, f64) {
    let lat = r.center().y.to_radians();
    let w = MEAN_EARTH_RADIUS_KM * lat.cos() * (r.max.x - r.min.x).to_radians();
    let h = MEAN_EARTH_RADIUS_KM * (r.max.y - r.min.y).to_radians();
    (w, h)
}

fn value(c: &Coord, axis: Axis) -> f64 {
    match axis {
        Axis::Lon => c.x,
        Axis::Lat => c.y,
    }
}

/// Cut position nearest the median that separates distinct values and
/// leaves at least `min` members on each side.
fn cut(coords: &[Coord], members: &mut [usize], axis: Axis, min: usize) -> Option<(usize, f64)> {
    members.sort_by(|&a, &b| value(&coords[a], axis).total_cmp(&value(&coords[b], axis)).then(a.cmp(&b)));
    let n = members.len();
    let half = n as f64 / 2.0;
    (min.max(1)..=n.saturating_sub(min.max(1)))
        .filter(|&k| value(&coords[members[k - 1]], axis) < value(&coords[members[k]], axis))
        .min_by(|&a, &b| (a as f64 - half).abs().total_cmp(&(b as f64 - half).abs()).then(a.cmp(&b)))
        .map(|k| {
            let lo = value(&coords[members[k - 1]], axis);
            let hi = value(&coords[members[k]], axis);
            (k, lo + (hi - lo) / 2.0)
        })
}

fn split(
    coords: &[Coord],
    rect: Rect,
    mut members: Vec<usize>,
    path: String,
    config: &BuilderConfig,
    emit: &mut dyn FnMut(Rect, Vec<usize>, String),
) {
    if members.len() <= config.naive_max_cell_size {
        return emit(rect, members, path);
    }
    let (w, h) = extent_km(&rect);
    let order = if w >= h { [Axis::Lon, Axis::Lat] } else { [Axis::Lat, Axis::Lon] };
    for axis in order {
        if let Some((k, at)) = cut(coords, &mut members, axis, config.min_cell_size) {
            let high = members.split_off(k);
            let (mut lo_rect, mut hi_rect) = (rect, rect);
            match axis {
                Axis::Lon => {
                    lo_rect.max.x = at;
                    hi_rect.min.x = at;
                }
                Axis::Lat => {
                    lo_rect.max.y = at;
                    hi_rect.min.y = at;
                }
            }
            split(coords, lo_rect, members, format!("{path}0"), config, emit);
            split(coords, hi_rect, high, format!("{path}1"), config, emit);
            return;
        }
    }
    emit(rect, members, path);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::GeoPoint;

    fn s(id: &str, lat: f64, lon: f64) -> Sample {
        Sample::new(id, GeoPoint::new(lat, lon).unwrap())
    }

    fn config(min: usize, max: usize) -> BuilderConfig {
        BuilderConfig {
            min_cell_size: min,
            naive_max_cell_size: max,
            ..BuilderConfig::default()
        }
    }

    #[test]
    fn four_corners_give_four_cells() {
        let samples = vec![
            s("a", 10.0, 10.0),
            s("b", 10.0, -10.0),
            s("c", -10.0, 10.0),
            s("d", -10.0, -10.0),
        ];
        let set = build_naive_geocells(&samples, &config(1, 1)).unwrap();
        assert_eq!(set.len(), 4);
        assert!(set.cells().iter().all(|c| c.members.len() == 1));
    }

    #[test]
    fn identical_samples_stay_together() {
        let samples: Vec<Sample> = (0..20).map(|i| s(&format!("s{i}"), 5.0, 5.0)).collect();
        let set = build_naive_geocells(&samples, &config(1, 2)).unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(set.cells()[0].members.len(), 20);
    }

    #[test]
    fn max_below_min_is_rejected() {
        let samples = vec![s("a", 0.0, 0.0)];
        assert!(matches!(
            build_naive_geocells(&samples, &config(10, 5)),
            Err(GeocellError::Config(_))
        ));
    }

    #[test]
    fn majority_country_breaks_ties_by_code() {
        let samples = vec![
            s("a", 0.0, 0.0).with_admin("ZZZ", "1", "1"),
            s("b", 0.0, 1.0).with_admin("AAA", "1", "1"),
            s("c", 0.0, 2.0),
        ];
        assert_eq!(majority_country(&samples, &[0, 1, 2]), "AAA");
        assert_eq!(majority_country(&samples, &[2]), "");
    }
}
