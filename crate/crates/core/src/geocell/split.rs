//! OPTICS-driven splitting of oversized cells along Voronoi regions.
//!
//! The Voronoi tessellation of a cell's distinct sample locations is built
//! once, in a local projection, and clipped to the cell geometry. Every carve
//! then only reassigns per-site pieces: the region of a site within a
//! sub-cell equals its region in the full tessellation, so re-tessellating
//! after each carve would give the same pieces.

use std::collections::HashMap;

use super::{BuilderConfig, Draft, GeocellError, Geocell, Provenance};
use crate::clustering::optics_order;
use crate::geo::{
    clip_polygon_convex, haversine, voronoi_cells, Coord, EarthModel, GeoError, GeoPoint, LocalProjection, MultiPolygon,
    Polygon, Rect, PROJECTION_GUARD_DEG,
};
use crate::sample::Sample;

/// Pieces smaller than this (km²) are treated as clipping noise.
const MIN_PIECE_AREA_KM2: f64 = 1e-9;

struct Part {
    /// Site indices, ascending.
    sites: Vec<usize>,
    /// Positions into the parent's member list, ascending.
    members: Vec<usize>,
    provenance: Provenance,
}

/// Splits one cell with every configured OPTICS round.
///
/// The residual parent comes first, followed by carved cells in carve order.
/// Returned cells are numbered from 0 in that order. A cell that cannot be
/// projected (extent above the projection guard) is returned unchanged.
pub fn split_cell_optics_voronoi(
    cell: &Geocell,
    samples: &[Sample],
    config: &BuilderConfig,
) -> Result<Vec<Geocell>, GeocellError> {
    config.validate_semantic()?;
    let index: HashMap<&str, usize> = samples.iter().enumerate().map(|(i, s)| (s.id.as_str(), i)).collect();
    let members = cell
        .members
        .iter()
        .map(|m| {
            index
                .get(m.as_str())
                .copied()
                .ok_or_else(|| GeocellError::Invariant(format!("cell member {m} is not in the sample list")))
        })
        .collect::<Result<Vec<usize>, _>>()?;
    let draft = Draft {
        geometry: cell.geometry.clone(),
        members,
        country: cell.country.clone(),
        provenance: cell.provenance.clone(),
        remainder: cell.remainder,
    };
    let drafts = match split_draft(&draft, samples, config) {
        Ok(d) => d,
        Err(GeocellError::Geo(GeoError::ProjectionDomain { .. })) => vec![draft],
        Err(e) => return Err(e),
    };
    Ok(super::finalize(drafts, samples, config)?.cells().to_vec())
}

pub(crate) fn split_draft(d: &Draft, samples: &[Sample], config: &BuilderConfig) -> Result<Vec<Draft>, GeocellError> {
    let min = config.min_cell_size;
    if d.members.len() < 2 * min + 2 {
        return Ok(vec![d.clone()]);
    }
    let bbox = d.geometry.bbox();
    let center = bbox.center();
    let origin = GeoPoint::new(center.y, center.x)?;
    if (bbox.max.x - bbox.min.x) / 2.0 > PROJECTION_GUARD_DEG || (bbox.max.y - bbox.min.y) / 2.0 > PROJECTION_GUARD_DEG {
        return Err(GeoError::ProjectionDomain {
            lat: bbox.max.y,
            lon: bbox.max.x,
            origin_lat: origin.lat(),
            origin_lon: origin.lon(),
        }
        .into());
    }
    let proj = LocalProjection::new(origin, EarthModel::default());

    let mut site_key: HashMap<(u64, u64), usize> = HashMap::new();
    let mut site_points: Vec<GeoPoint> = Vec::new();
    let site_of: Vec<usize> = d
        .members
        .iter()
        .map(|&m| {
            let p = samples[m].location;
            *site_key.entry((p.lat().to_bits(), p.lon().to_bits())).or_insert_with(|| {
                site_points.push(p);
                site_points.len() - 1
            })
        })
        .collect();
    let sites: Vec<Coord> = site_points.iter().map(|&p| proj.project(p)).collect::<Result<_, _>>()?;
    let parts: Vec<Polygon> = d
        .geometry
        .parts()
        .iter()
        .map(|p| proj.project_polygon(p))
        .collect::<Result<_, _>>()?;
    let mut bounds = parts.iter().map(Polygon::bbox).reduce(|a, b| a.union(&b)).expect("non-empty");
    if let Some(r) = Rect::from_coords(&sites) {
        bounds = bounds.union(&r);
    }
    let bounds = bounds.expand(1.0);
    let regions = voronoi_cells(&sites, &bounds);
    let pieces: Vec<Vec<Polygon>> = crate::par::map(&regions, |region| {
        parts
            .iter()
            .filter_map(|p| clip_polygon_convex(p, region, MIN_PIECE_AREA_KM2))
            .collect()
    });

    let units = match &d.provenance {
        Provenance::Admin { units } | Provenance::Split { units, .. } => units.clone(),
        Provenance::Naive { .. } => Vec::new(),
    };
    let mut cells = vec![Part {
        sites: (0..sites.len()).collect(),
        members: (0..d.members.len()).collect(),
        provenance: d.provenance.clone(),
    }];
    let mut step = 0;
    for (round, params) in config.optics_rounds.iter().enumerate() {
        let mut i = 0;
        while i < cells.len() {
            while cells[i].members.len() >= 2 * min + 2 {
                let cell = &cells[i];
                let points: Vec<GeoPoint> = cell.members.iter().map(|&k| samples[d.members[k]].location).collect();
                let result = optics_order(&points, params, |a, b| haversine(*a, *b));
                let Some(label) = result.flat.largest() else { break };
                let mut carved_sites = vec![false; sites.len()];
                for &k in &result.flat.clusters[label] {
                    carved_sites[site_of[cell.members[k]]] = true;
                }
                let (taken, kept): (Vec<usize>, Vec<usize>) =
                    cell.members.iter().partition(|&&k| carved_sites[site_of[k]]);
                if taken.len() <= min || kept.len() <= min {
                    break;
                }
                let (taken_sites, kept_sites): (Vec<usize>, Vec<usize>) =
                    cell.sites.iter().partition(|&&s| carved_sites[s]);
                let has_area = |ss: &[usize]| ss.iter().any(|&s| !pieces[s].is_empty());
                if !has_area(&taken_sites) || !has_area(&kept_sites) {
                    // clipping left one side without area; skip this carve
                    break;
                }
                step += 1;
                cells[i].sites = kept_sites;
                cells[i].members = kept;
                cells.push(Part {
                    sites: taken_sites,
                    members: taken,
                    provenance: Provenance::Split {
                        units: units.clone(),
                        round,
                        step,
                    },
                });
            }
            i += 1;
        }
    }
    if cells.len() == 1 {
        return Ok(vec![d.clone()]);
    }
    cells
        .into_iter()
        .map(|c| {
            let polys = c
                .sites
                .iter()
                .flat_map(|&s| pieces[s].iter())
                .map(|p| proj.unproject_polygon(p))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Draft {
                geometry: MultiPolygon::new(polys)?,
                members: c.members.iter().map(|&k| d.members[k]).collect(),
                country: d.country.clone(),
                provenance: c.provenance,
                remainder: false,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::OpticsParams;
    use crate::geo::point_in_polygon;

    fn square(x0: f64, y0: f64, x1: f64, y1: f64) -> MultiPolygon {
        MultiPolygon::single(
            Polygon::from_coords(vec![
                Coord::new(x0, y0),
                Coord::new(x1, y0),
                Coord::new(x1, y1),
                Coord::new(x0, y1),
            ])
            .unwrap(),
        )
    }

    fn grid(out: &mut Vec<Sample>, prefix: &str, lat0: f64, lon0: f64, side: usize, step: f64, count: usize) {
        for k in 0..count {
            let (r, c) = (k / side, k % side);
            let p = GeoPoint::new(lat0 + r as f64 * step, lon0 + c as f64 * step).unwrap();
            out.push(Sample::new(format!("{prefix}{k}"), p));
        }
    }

    fn cell_of(samples: &[Sample], geometry: MultiPolygon) -> Geocell {
        let c = crate::geo::centroid(&geometry).unwrap();
        Geocell::new(
            0,
            geometry,
            c,
            samples.iter().map(|s| s.id.clone()).collect(),
            "AAA".into(),
            Provenance::Admin { units: vec!["AAA/r/a".into()] },
            false,
        )
    }

    fn config(min: usize) -> BuilderConfig {
        BuilderConfig {
            min_cell_size: min,
            optics_rounds: vec![OpticsParams::new(3, 0.15).unwrap()],
            ..BuilderConfig::default()
        }
    }

    #[test]
    fn two_blobs_become_two_cells() {
        let mut samples = Vec::new();
        grid(&mut samples, "a", 0.1, 0.1, 10, 0.01, 100);
        grid(&mut samples, "b", 0.7, 0.7, 10, 0.01, 100);
        let parent = square(0.0, 0.0, 1.0, 1.0);
        let cells = split_cell_optics_voronoi(&cell_of(&samples, parent.clone()), &samples, &config(30)).unwrap();
        assert_eq!(cells.len(), 2);
        for c in &cells {
            assert_eq!(c.members.len(), 100);
            let first = c.members[0].chars().next().unwrap();
            assert!(c.members.iter().all(|m| m.starts_with(first)));
            for m in &c.members {
                let s = samples.iter().find(|s| &s.id == m).unwrap();
                assert!(point_in_polygon(s.location, &c.geometry));
            }
        }
        let total: f64 = cells.iter().map(|c| c.geometry.area()).sum();
        assert!((total - parent.area()).abs() < 1e-9);
    }

    #[test]
    fn largest_cluster_covering_everything_leaves_cell_unchanged() {
        let mut samples = Vec::new();
        grid(&mut samples, "a", 0.1, 0.1, 8, 0.01, 60);
        let cell = cell_of(&samples, square(0.0, 0.0, 1.0, 1.0));
        let cells = split_cell_optics_voronoi(&cell, &samples, &config(30)).unwrap();
        assert_eq!(cells.len(), 1);
        assert_eq!(cells[0].geometry, cell.geometry);
    }

    #[test]
    fn oversized_extent_is_left_whole() {
        let mut samples = Vec::new();
        grid(&mut samples, "a", 0.1, 0.1, 10, 0.01, 100);
        grid(&mut samples, "b", 0.1, 30.0, 10, 0.01, 100);
        let cell = cell_of(&samples, square(0.0, 0.0, 31.0, 1.0));
        let cells = split_cell_optics_voronoi(&cell, &samples, &config(30)).unwrap();
        assert_eq!(cells.len(), 1);
    }

    #[test]
    fn tight_cluster_is_carved_from_diffuse_background() {
        let mut samples = Vec::new();
        grid(&mut samples, "t", 0.425, 0.425, 10, 0.002, 50);
        // 7x7 coarse lattice without its center, where the tight cluster sits
        let lattice = (0..49).filter(|&k| k != 24).map(|k| (0.03 + 0.135 * (k / 7) as f64, 0.03 + 0.135 * (k % 7) as f64));
        let extra = [(0.97, 0.5), (0.5, 0.97)];
        for (k, (lat, lon)) in lattice.chain(extra).enumerate() {
            samples.push(Sample::new(format!("d{k}"), GeoPoint::new(lat, lon).unwrap()));
        }
        let cells = split_cell_optics_voronoi(&cell_of(&samples, square(0.0, 0.0, 1.0, 1.0)), &samples, &config(20)).unwrap();
        let mut counts: Vec<usize> = cells.iter().map(|c| c.members.len()).collect();
        counts.sort();
        assert_eq!(counts, vec![50, 50]);
        let carved = &cells[1];
        assert!(carved.members.iter().all(|m| m.starts_with('t')));
        assert!(matches!(carved.provenance, Provenance::Split { round: 0, step: 1, .. }));
    }
}
