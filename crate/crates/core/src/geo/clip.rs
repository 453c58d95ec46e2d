//! Half-plane clipping, convex clipping and bounded Voronoi cells.

use super::polygon::signed_area;
use super::{Coord, GeoError, Polygon, Rect, Ring};
use crate::par;

/// Keeps the part of `ring` where `a·x + b·y <= c` (Sutherland–Hodgman step).
pub fn clip_half_plane(ring: &[Coord], a: f64, b: f64, c: f64) -> Vec<Coord> {
    let n = ring.len();
    if n == 0 {
        return Vec::new();
    }
    let side = |p: &Coord| a * p.x + b * p.y - c;
    let mut out = Vec::with_capacity(n + 2);
    for i in 0..n {
        let cur = ring[i];
        let prev = ring[(i + n - 1) % n];
        let sc = side(&cur);
        let sp = side(&prev);
        if sc <= 0.0 {
            if sp > 0.0 {
                out.push(intersect(prev, cur, sp, sc));
            }
            out.push(cur);
        } else if sp <= 0.0 {
            out.push(intersect(prev, cur, sp, sc));
        }
    }
    out
}

fn intersect(p: Coord, q: Coord, sp: f64, sq: f64) -> Coord {
    let t = sp / (sp - sq);
    Coord::new(p.x + t * (q.x - p.x), p.y + t * (q.y - p.y))
}

/// Clips an arbitrary simple ring against a convex counter-clockwise ring.
pub fn clip_ring_convex(subject: &[Coord], convex: &[Coord]) -> Vec<Coord> {
    let n = convex.len();
    let mut out = subject.to_vec();
    for i in 0..n {
        if out.is_empty() {
            break;
        }
        let p = convex[i];
        let q = convex[(i + 1) % n];
        // inside of a ccw edge is the left side: cross(q - p, x - p) >= 0
        let a = q.y - p.y;
        let b = -(q.x - p.x);
        let c = a * p.x + b * p.y;
        out = clip_half_plane(&out, a, b, c);
    }
    out
}

/// Intersection of a polygon with a convex ccw ring. Returns `None` when the
/// overlap has (numerically) no area.
pub fn clip_polygon_convex(poly: &Polygon, convex: &[Coord], min_area: f64) -> Option<Polygon> {
    let ext = clip_ring_convex(poly.exterior().coords(), convex);
    if signed_area(&ext).abs() <= min_area {
        return None;
    }
    let exterior = Ring::new(ext).ok()?;
    let holes = poly
        .holes()
        .iter()
        .filter_map(|h| {
            let clipped = clip_ring_convex(h.coords(), convex);
            if signed_area(&clipped).abs() <= min_area {
                None
            } else {
                Ring::new(clipped).ok()
            }
        })
        .collect();
    Some(Polygon::new(exterior, holes))
}

/// Voronoi cell of each site, bounded by `bounds`. Cells are convex ccw rings.
///
/// Sites must be pairwise distinct. Each cell starts as the bounding
/// rectangle and is cut by the perpendicular bisector to every other site in
/// order of distance, stopping once no remaining site can reach the cell.
pub fn voronoi_cells(sites: &[Coord], bounds: &Rect) -> Vec<Vec<Coord>> {
    par::map_indexed(sites.len(), |i| voronoi_cell(sites, i, bounds))
}

fn voronoi_cell(sites: &[Coord], i: usize, bounds: &Rect) -> Vec<Coord> {
    let s = sites[i];
    let mut others: Vec<(f64, usize)> = sites
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(j, t)| (s.dist2(t), j))
        .collect();
    others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut cell = bounds.to_ring();
    let mut reach2 = cell.iter().map(|v| s.dist2(v)).fold(0.0, f64::max);
    for (d2, j) in others {
        // a bisector can only cut the cell if the neighbour is within twice
        // the farthest vertex distance
        if d2 > 4.0 * reach2 {
            break;
        }
        let t = sites[j];
        let a = t.x - s.x;
        let b = t.y - s.y;
        let c = (t.x * t.x + t.y * t.y - s.x * s.x - s.y * s.y) / 2.0;
        cell = clip_half_plane(&cell, a, b, c);
        if cell.is_empty() {
            break;
        }
        reach2 = cell.iter().map(|v| s.dist2(v)).fold(0.0, f64::max);
    }
    cell
}

/// Splits a lon/lat polygon that crosses the antimeridian into an eastern
/// part (lon ≤ 180) and a western part shifted back into lon ≥ -180.
///
/// A ring is treated as crossing when consecutive vertices jump by more than
/// 180° of longitude. Non-crossing polygons are returned unchanged.
pub fn split_antimeridian(poly: &Polygon) -> Result<Vec<Polygon>, GeoError> {
    let crosses = |r: &Ring| {
        let c = r.coords();
        (0..c.len()).any(|i| (c[i].x - c[(i + 1) % c.len()].x).abs() > 180.0)
    };
    if !crosses(poly.exterior()) && !poly.holes().iter().any(crosses) {
        return Ok(vec![poly.clone()]);
    }
    let unwrap = |c: Coord| if c.x < 0.0 { Coord::new(c.x + 360.0, c.y) } else { c };
    let shifted = poly.map(unwrap)?;
    let mut out = Vec::new();
    // east of the line: x <= 180
    if let Some(p) = clip_polygon_half(&shifted, 1.0, 180.0) {
        out.push(p);
    }
    // west of the line: x >= 180, shifted back by 360
    if let Some(p) = clip_polygon_half(&shifted, -1.0, -180.0) {
        out.push(p.map(|c| Coord::new(c.x - 360.0, c.y))?);
    }
    if out.is_empty() {
        return Err(GeoError::DegenerateGeometry("antimeridian split produced no parts".into()));
    }
    Ok(out)
}

fn clip_polygon_half(poly: &Polygon, a: f64, c: f64) -> Option<Polygon> {
    let ext = clip_half_plane(poly.exterior().coords(), a, 0.0, c);
    if signed_area(&ext).abs() <= 0.0 {
        return None;
    }
    let exterior = Ring::new(ext).ok()?;
    let holes = poly
        .holes()
        .iter()
        .filter_map(|h| {
            let r = clip_half_plane(h.coords(), a, 0.0, c);
            if signed_area(&r).abs() > 0.0 {
                Ring::new(r).ok()
            } else {
                None
            }
        })
        .collect();
    Some(Polygon::new(exterior, holes))
}
