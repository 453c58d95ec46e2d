//! Planar polygons.
//!
//! The same types carry geographic shapes (`x` = longitude, `y` = latitude,
//! in degrees) and projected shapes (`x` = km east, `y` = km north). Rings
//! are stored open: the first vertex is never repeated at the end.

use serde::{Deserialize, Serialize};

use super::{GeoError, GeoPoint};

/// Tolerance (in the polygon's own units) within which a point counts as
/// lying on a ring edge.
pub const BOUNDARY_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coord {
    pub x: f64,
    pub y: f64,
}

impl Coord {
    pub const fn new(x: f64, y: f64) -> Self {
        Coord { x, y }
    }

    /// Longitude/latitude view of a geographic point.
    pub fn from_geo(p: GeoPoint) -> Self {
        Coord { x: p.lon(), y: p.lat() }
    }

    pub fn dist2(&self, other: &Coord) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }
}

/// Axis-aligned bounding rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: Coord,
    pub max: Coord,
}

impl Rect {
    pub fn from_coords<'a>(coords: impl IntoIterator<Item = &'a Coord>) -> Option<Rect> {
        let mut it = coords.into_iter();
        let first = *it.next()?;
        let mut r = Rect {
            min: first,
            max: first,
        };
        for c in it {
            r.min.x = r.min.x.min(c.x);
            r.min.y = r.min.y.min(c.y);
            r.max.x = r.max.x.max(c.x);
            r.max.y = r.max.y.max(c.y);
        }
        Some(r)
    }

    pub fn union(&self, other: &Rect) -> Rect {
        Rect {
            min: Coord::new(self.min.x.min(other.min.x), self.min.y.min(other.min.y)),
            max: Coord::new(self.max.x.max(other.max.x), self.max.y.max(other.max.y)),
        }
    }

    pub fn center(&self) -> Coord {
        Coord::new((self.min.x + self.max.x) / 2.0, (self.min.y + self.max.y) / 2.0)
    }

    pub fn contains(&self, c: &Coord, eps: f64) -> bool {
        c.x >= self.min.x - eps && c.x <= self.max.x + eps && c.y >= self.min.y - eps && c.y <= self.max.y + eps
    }

    pub fn intersects(&self, other: &Rect, eps: f64) -> bool {
        self.min.x <= other.max.x + eps
            && other.min.x <= self.max.x + eps
            && self.min.y <= other.max.y + eps
            && other.min.y <= self.max.y + eps
    }

    pub fn expand(&self, margin: f64) -> Rect {
        Rect {
            min: Coord::new(self.min.x - margin, self.min.y - margin),
            max: Coord::new(self.max.x + margin, self.max.y + margin),
        }
    }

    /// Counter-clockwise corner ring.
    pub fn to_ring(&self) -> Vec<Coord> {
        vec![
            self.min,
            Coord::new(self.max.x, self.min.y),
            self.max,
            Coord::new(self.min.x, self.max.y),
        ]
    }
}

/// Shoelace signed area; positive for counter-clockwise rings.
pub fn signed_area(ring: &[Coord]) -> f64 {
    let n = ring.len();
    if n < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..n {
        let a = ring[i];
        let b = ring[(i + 1) % n];
        acc += a.x * b.y - b.x * a.y;
    }
    acc / 2.0
}

/// Area-weighted first moments `(A, Σx·A, Σy·A)` of a ring, signed by orientation.
fn ring_moments(ring: &[Coord]) -> (f64, f64, f64) {
    let n = ring.len();
    // shift to the first vertex to keep the cross products well conditioned
    let o = ring[0];
    let (mut a, mut cx, mut cy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let p = Coord::new(ring[i].x - o.x, ring[i].y - o.y);
        let q = Coord::new(ring[(i + 1) % n].x - o.x, ring[(i + 1) % n].y - o.y);
        let cross = p.x * q.y - q.x * p.y;
        a += cross;
        cx += (p.x + q.x) * cross;
        cy += (p.y + q.y) * cross;
    }
    let area = a / 2.0;
    (area, cx / 6.0 + o.x * area, cy / 6.0 + o.y * area)
}

fn distance_to_segment2(p: &Coord, a: &Coord, b: &Coord) -> f64 {
    let abx = b.x - a.x;
    let aby = b.y - a.y;
    let len2 = abx * abx + aby * aby;
    if len2 == 0.0 {
        return p.dist2(a);
    }
    let t = (((p.x - a.x) * abx + (p.y - a.y) * aby) / len2).clamp(0.0, 1.0);
    let proj = Coord::new(a.x + t * abx, a.y + t * aby);
    p.dist2(&proj)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RingLocation {
    Inside,
    Boundary,
    Outside,
}

/// Crossing-number test with an explicit boundary check.
pub fn locate_in_ring(p: &Coord, ring: &[Coord], eps: f64) -> RingLocation {
    let n = ring.len();
    let eps2 = eps * eps;
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let a = &ring[i];
        let b = &ring[j];
        if distance_to_segment2(p, a, b) <= eps2 {
            return RingLocation::Boundary;
        }
        if (a.y > p.y) != (b.y > p.y) {
            let x_cross = (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x;
            if p.x < x_cross {
                inside = !inside;
            }
        }
        j = i;
    }
    if inside {
        RingLocation::Inside
    } else {
        RingLocation::Outside
    }
}

/// A closed ring stored without its repeated closing vertex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Ring(Vec<Coord>);

impl Ring {
    /// Builds a ring, dropping an explicit closing vertex and consecutive
    /// duplicates. Fails when fewer than three distinct vertices remain.
    pub fn new(mut coords: Vec<Coord>) -> Result<Ring, GeoError> {
        if coords.iter().any(|c| !c.x.is_finite() || !c.y.is_finite()) {
            return Err(GeoError::DegenerateGeometry("non-finite ring vertex".into()));
        }
        coords.dedup();
        while coords.len() > 1 && coords.first() == coords.last() {
            coords.pop();
        }
        let mut distinct = coords.clone();
        distinct.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
        distinct.dedup();
        if distinct.len() < 3 {
            return Err(GeoError::DegenerateGeometry(format!(
                "ring has {} distinct vertices, need at least 3",
                distinct.len()
            )));
        }
        Ok(Ring(coords))
    }

    pub fn coords(&self) -> &[Coord] {
        &self.0
    }

    pub fn signed_area(&self) -> f64 {
        signed_area(&self.0)
    }

    pub fn is_ccw(&self) -> bool {
        self.signed_area() > 0.0
    }

    fn oriented(mut self, ccw: bool) -> Ring {
        if self.is_ccw() != ccw {
            self.0.reverse();
        }
        self
    }

    pub fn bbox(&self) -> Rect {
        Rect::from_coords(&self.0).expect("ring is non-empty")
    }

    pub fn map(&self, f: impl Fn(Coord) -> Coord) -> Result<Ring, GeoError> {
        Ring::new(self.0.iter().copied().map(f).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    exterior: Ring,
    holes: Vec<Ring>,
}

impl Polygon {
    /// Orients the exterior counter-clockwise and every hole clockwise.
    pub fn new(exterior: Ring, holes: Vec<Ring>) -> Polygon {
        Polygon {
            exterior: exterior.oriented(true),
            holes: holes.into_iter().map(|h| h.oriented(false)).collect(),
        }
    }

    pub fn from_coords(exterior: Vec<Coord>) -> Result<Polygon, GeoError> {
        Ok(Polygon::new(Ring::new(exterior)?, Vec::new()))
    }

    pub fn exterior(&self) -> &Ring {
        &self.exterior
    }

    pub fn holes(&self) -> &[Ring] {
        &self.holes
    }

    pub fn area(&self) -> f64 {
        self.exterior.signed_area() + self.holes.iter().map(Ring::signed_area).sum::<f64>()
    }

    pub fn bbox(&self) -> Rect {
        self.exterior.bbox()
    }

    pub fn contains(&self, p: &Coord) -> bool {
        self.contains_eps(p, BOUNDARY_EPS)
    }

    /// Boundary-inclusive containment: a point on the exterior or on a hole's
    /// edge counts as inside.
    pub fn contains_eps(&self, p: &Coord, eps: f64) -> bool {
        match locate_in_ring(p, self.exterior.coords(), eps) {
            RingLocation::Outside => false,
            RingLocation::Boundary => true,
            RingLocation::Inside => self
                .holes
                .iter()
                .all(|h| locate_in_ring(p, h.coords(), eps) != RingLocation::Inside),
        }
    }

    /// `(area, Σx·area, Σy·area)` with holes subtracted.
    pub(crate) fn moments(&self) -> (f64, f64, f64) {
        let mut acc = ring_moments(self.exterior.coords());
        for h in &self.holes {
            let m = ring_moments(h.coords());
            acc = (acc.0 + m.0, acc.1 + m.1, acc.2 + m.2);
        }
        acc
    }

    pub fn map(&self, f: impl Fn(Coord) -> Coord + Copy) -> Result<Polygon, GeoError> {
        let exterior = self.exterior.map(f)?;
        let holes = self.holes.iter().map(|h| h.map(f)).collect::<Result<Vec<_>, _>>()?;
        Ok(Polygon::new(exterior, holes))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiPolygon {
    parts: Vec<Polygon>,
}

impl MultiPolygon {
    pub fn new(parts: Vec<Polygon>) -> Result<MultiPolygon, GeoError> {
        if parts.is_empty() {
            return Err(GeoError::DegenerateGeometry("multipolygon has no parts".into()));
        }
        Ok(MultiPolygon { parts })
    }

    pub fn single(poly: Polygon) -> MultiPolygon {
        MultiPolygon { parts: vec![poly] }
    }

    pub fn parts(&self) -> &[Polygon] {
        &self.parts
    }

    pub fn into_parts(self) -> Vec<Polygon> {
        self.parts
    }

    /// Concatenates parts. Callers guarantee the inputs are interior-disjoint.
    pub fn union_disjoint(mut self, other: MultiPolygon) -> MultiPolygon {
        self.parts.extend(other.parts);
        self
    }

    pub fn area(&self) -> f64 {
        self.parts.iter().map(Polygon::area).sum()
    }

    pub fn bbox(&self) -> Rect {
        self.parts
            .iter()
            .map(Polygon::bbox)
            .reduce(|a, b| a.union(&b))
            .expect("multipolygon is non-empty")
    }

    pub fn contains_coord(&self, p: &Coord) -> bool {
        self.parts.iter().any(|poly| poly.bbox().contains(p, BOUNDARY_EPS) && poly.contains(p))
    }

    pub fn vertex_count(&self) -> usize {
        self.parts
            .iter()
            .map(|p| p.exterior.0.len() + p.holes.iter().map(|h| h.0.len()).sum::<usize>())
            .sum()
    }
}

/// True iff `p` lies in some part's exterior and in none of that part's
/// holes. Points on any edge count as inside.
pub fn point_in_polygon(p: GeoPoint, poly: &MultiPolygon) -> bool {
    poly.contains_coord(&Coord::from_geo(p))
}
