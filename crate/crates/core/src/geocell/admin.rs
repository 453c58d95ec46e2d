//! Administrative units and sample lineage resolution.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::GeocellError;
use crate::geo::{Coord, MultiPolygon, Rect, BOUNDARY_EPS};
use crate::sample::{AdminLineage, Sample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdminLevel {
    Country,
    Admin1,
    Admin2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdminUnit {
    pub level: AdminLevel,
    /// ISO country code.
    pub country: String,
    /// Empty at country level.
    pub admin1: String,
    /// Empty above admin-2 level.
    pub admin2: String,
    pub geometry: MultiPolygon,
}

impl AdminUnit {
    pub fn admin2(country: &str, admin1: &str, admin2: &str, geometry: MultiPolygon) -> AdminUnit {
        AdminUnit {
            level: AdminLevel::Admin2,
            country: country.to_string(),
            admin1: admin1.to_string(),
            admin2: admin2.to_string(),
            geometry,
        }
    }

    pub fn lineage(&self) -> AdminLineage {
        AdminLineage {
            country: self.country.clone(),
            admin1: self.admin1.clone(),
            admin2: self.admin2.clone(),
        }
    }

    pub fn key(&self) -> String {
        format!("{}/{}/{}", self.country, self.admin1, self.admin2)
    }
}

/// Index of admin-2 units with cached bounding boxes.
pub(crate) struct Admin2Index<'a> {
    pub units: Vec<&'a AdminUnit>,
    bboxes: Vec<Rect>,
    by_key: HashMap<String, usize>,
}

impl<'a> Admin2Index<'a> {
    pub fn new(admins: &'a [AdminUnit]) -> Result<Admin2Index<'a>, GeocellError> {
        let units: Vec<&AdminUnit> = admins.iter().filter(|a| a.level == AdminLevel::Admin2).collect();
        let mut by_key = HashMap::with_capacity(units.len());
        for (i, u) in units.iter().enumerate() {
            if by_key.insert(u.key(), i).is_some() {
                return Err(GeocellError::Config(format!("duplicate admin-2 unit {}", u.key())));
            }
        }
        let bboxes = units.iter().map(|u| u.geometry.bbox()).collect();
        Ok(Admin2Index { units, bboxes, by_key })
    }

    pub fn bbox(&self, i: usize) -> &Rect {
        &self.bboxes[i]
    }

    /// Unit index for a sample: its recorded lineage when present, otherwise
    /// the lowest-index unit containing the location.
    pub fn locate(&self, s: &Sample) -> Result<usize, GeocellError> {
        if let Some(l) = &s.admin {
            return self
                .by_key
                .get(&l.key())
                .copied()
                .ok_or_else(|| GeocellError::UnresolvedSample(s.id.clone()));
        }
        let c = Coord::from_geo(s.location);
        (0..self.units.len())
            .find(|&i| self.bboxes[i].contains(&c, BOUNDARY_EPS) && self.units[i].geometry.contains_coord(&c))
            .ok_or_else(|| GeocellError::UnresolvedSample(s.id.clone()))
    }
}

/// Fills in missing admin lineage by point-in-polygon against the admin-2
/// units. Samples with a lineage are checked against the unit table.
pub fn resolve_lineage(samples: &mut [Sample], admins: &[AdminUnit]) -> Result<(), GeocellError> {
    let index = Admin2Index::new(admins)?;
    for s in samples.iter_mut() {
        let i = index.locate(s)?;
        if s.admin.is_none() {
            s.admin = Some(index.units[i].lineage());
        }
    }
    Ok(())
}

fn seg_dist2(p: Coord, a: Coord, b: Coord) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0)
    };
    p.dist2(&Coord::new(a.x + t * dx, a.y + t * dy))
}

fn orient(a: Coord, b: Coord, c: Coord) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

fn segments_within(a: Coord, b: Coord, c: Coord, d: Coord, eps: f64) -> bool {
    let o1 = orient(a, b, c);
    let o2 = orient(a, b, d);
    let o3 = orient(c, d, a);
    let o4 = orient(c, d, b);
    if o1 * o2 < 0.0 && o3 * o4 < 0.0 {
        return true;
    }
    let e2 = eps * eps;
    seg_dist2(a, c, d) <= e2 || seg_dist2(b, c, d) <= e2 || seg_dist2(c, a, b) <= e2 || seg_dist2(d, a, b) <= e2
}

fn edges(g: &MultiPolygon) -> Vec<(Coord, Coord)> {
    let mut out = Vec::with_capacity(g.vertex_count());
    for p in g.parts() {
        for r in std::iter::once(p.exterior()).chain(p.holes()) {
            let c = r.coords();
            for i in 0..c.len() {
                out.push((c[i], c[(i + 1) % c.len()]));
            }
        }
    }
    out
}

/// True when the boundaries of `a` and `b` come within `eps` degrees.
pub(crate) fn touches(a: &MultiPolygon, b: &MultiPolygon, eps: f64) -> bool {
    if !a.bbox().intersects(&b.bbox(), eps) {
        return false;
    }
    let eb = edges(b);
    let bb = b.bbox().expand(eps);
    edges(a).iter().any(|&(p, q)| {
        let r = Rect {
            min: Coord::new(p.x.min(q.x), p.y.min(q.y)),
            max: Coord::new(p.x.max(q.x), p.y.max(q.y)),
        };
        r.intersects(&bb, 0.0)
            && eb.iter().any(|&(s, t)| {
                let rs = Rect {
                    min: Coord::new(s.x.min(t.x), s.y.min(t.y)),
                    max: Coord::new(s.x.max(t.x), s.y.max(t.y)),
                };
                r.intersects(&rs, eps) && segments_within(p, q, s, t, eps)
            })
    })
}
