//! Deterministic synthetic datasets: rectangular admin units, samples with
//! auxiliary attributes, location-correlated embeddings and classifier-like
//! top-K predictions. Used for fixtures, tests and benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::geo::{haversine, Coord, GeoPoint, MultiPolygon, Polygon, Rect};
use crate::geocell::AdminUnit;
use crate::labels::CLIMATE_CLASSES;
use crate::refine::{CellProb, Embeddings};
use crate::sample::{DriveSide, Sample};

/// Admin units plus samples carrying their lineage.
#[derive(Debug, Clone)]
pub struct World {
    pub admins: Vec<AdminUnit>,
    pub samples: Vec<Sample>,
}

struct CountrySpec {
    iso: &'static str,
    name: &'static str,
    origin: (f64, f64),
    cols: usize,
    rows: usize,
    drive: DriveSide,
}

fn rect_unit(iso: &str, admin1: &str, admin2: &str, rect: Rect) -> AdminUnit {
    let poly = Polygon::from_coords(rect.to_ring()).expect("rectangle is a valid ring");
    AdminUnit::admin2(iso, admin1, admin2, MultiPolygon::single(poly))
}

fn rect(lon0: f64, lat0: f64, w: f64, h: f64) -> Rect {
    Rect::from_coords(&[Coord::new(lon0, lat0), Coord::new(lon0 + w, lat0 + h)]).expect("two corners")
}

fn uniform_in(rng: &mut ChaCha8Rng, r: &Rect, margin: f64) -> GeoPoint {
    let lon = rng.random_range(r.min.x + margin..r.max.x - margin);
    let lat = rng.random_range(r.min.y + margin..r.max.y - margin);
    GeoPoint::new(lat, lon).expect("inside a valid rectangle")
}

/// Gaussian blob around `center`, rejection-sampled to stay inside `r`.
fn blob_in(rng: &mut ChaCha8Rng, r: &Rect, center: Coord, sigma: f64, margin: f64) -> GeoPoint {
    let n = Normal::new(0.0, sigma).expect("positive sigma");
    loop {
        let x = center.x + n.sample(rng);
        let y = center.y + n.sample(rng);
        if x > r.min.x + margin && x < r.max.x - margin && y > r.min.y + margin && y < r.max.y - margin {
            return GeoPoint::new(y, x).expect("inside a valid rectangle");
        }
    }
}

fn fill_aux(rng: &mut ChaCha8Rng, s: &mut Sample, country_name: &str, region: &str, drive: DriveSide) {
    let lat = s.location.lat();
    let a = &mut s.aux;
    // climate class drifts with latitude so neighbouring samples tend to agree
    let base = ((lat * 3.0).rem_euclid(CLIMATE_CLASSES as f64)) as u8;
    a.climate_zone = Some((base + rng.random_range(0..2u8)) % CLIMATE_CLASSES as u8);
    a.month = Some(rng.random_range(1..=12));
    a.bearing_deg = Some(rng.random_range(0.0..360.0));
    a.drive_side = Some(drive);
    a.elevation_m = Some(rng.random_range(-20.0..2500.0));
    a.population_density = Some(10f64.powf(rng.random_range(0.0..4.0)));
    a.temp_mean_c = Some(25.0 - 0.4 * lat.abs() + rng.random_range(-2.0..2.0));
    a.temp_range_c = Some(rng.random_range(5.0..30.0));
    a.precip_mean_mm = Some(rng.random_range(0.1..8.0));
    a.precip_range_mm = Some(rng.random_range(0.5..12.0));
    a.region_name = Some(region.to_string());
    a.country_name = Some(country_name.to_string());
}

fn grid_country(
    rng: &mut ChaCha8Rng,
    spec: &CountrySpec,
    counts: &mut dyn FnMut(&mut ChaCha8Rng, usize) -> (usize, usize),
    unit_offset: &mut usize,
    world: &mut World,
) {
    for row in 0..spec.rows {
        let admin1 = format!("{}-R{}", spec.iso, row + 1);
        let region = format!("{} Region {}", spec.name, row + 1);
        for col in 0..spec.cols {
            let admin2 = format!("{}-{}", admin1, col + 1);
            let r = rect(spec.origin.0 + col as f64, spec.origin.1 + row as f64, 1.0, 1.0);
            let (uniform, city) = counts(rng, *unit_offset);
            *unit_offset += 1;
            let center = Coord::new(
                rng.random_range(r.min.x + 0.3..r.max.x - 0.3),
                rng.random_range(r.min.y + 0.3..r.max.y - 0.3),
            );
            for k in 0..uniform + city {
                let p = if k < uniform {
                    uniform_in(rng, &r, 0.01)
                } else {
                    blob_in(rng, &r, center, 0.05, 0.01)
                };
                let id = format!("s{:05}", world.samples.len());
                let mut s = Sample::new(id, p).with_admin(spec.iso, &admin1, &admin2);
                fill_aux(rng, &mut s, spec.name, &region, spec.drive);
                world.samples.push(s);
            }
            world.admins.push(rect_unit(spec.iso, &admin1, &admin2, r));
        }
    }
}

/// Three neighbouring countries with 40 admin-2 units and about 5,000
/// samples. Six units hold a dense city blob; the third country owns a
/// small offshore island with too few samples to form a full cell.
pub fn three_country_world(seed: u64) -> World {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let specs = [
        CountrySpec {
            iso: "ALP",
            name: "Alpina",
            origin: (0.0, 40.0),
            cols: 5,
            rows: 3,
            drive: DriveSide::Right,
        },
        CountrySpec {
            iso: "BRV",
            name: "Bravia",
            origin: (5.0, 40.0),
            cols: 4,
            rows: 3,
            drive: DriveSide::Left,
        },
        CountrySpec {
            iso: "COR",
            name: "Corvia",
            origin: (9.0, 40.0),
            cols: 3,
            rows: 4,
            drive: DriveSide::Right,
        },
    ];
    let mut world = World {
        admins: Vec::new(),
        samples: Vec::new(),
    };
    let mut unit = 0;
    let mut counts = |rng: &mut ChaCha8Rng, unit: usize| {
        let city = if unit % 7 == 3 { 300 } else { 0 };
        (rng.random_range(10..=150), city)
    };
    for spec in &specs {
        grid_country(&mut rng, spec, &mut counts, &mut unit, &mut world);
    }
    let island = rect(13.0, 38.0, 0.5, 0.5);
    for _ in 0..6 {
        let p = uniform_in(&mut rng, &island, 0.01);
        let id = format!("s{:05}", world.samples.len());
        let mut s = Sample::new(id, p).with_admin("COR", "COR-ISL", "COR-ISL-1");
        fill_aux(&mut rng, &mut s, "Corvia", "Corvia Islands", DriveSide::Right);
        world.samples.push(s);
    }
    world.admins.push(rect_unit("COR", "COR-ISL", "COR-ISL-1", island));
    world
}

/// One country of 4 x 3 one-degree units with 60 uniform samples each.
/// With a minimum cell size of 50 every unit becomes its own cell.
pub fn toy_world(seed: u64) -> World {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = CountrySpec {
        iso: "TOY",
        name: "Toyland",
        origin: (0.0, 0.0),
        cols: 4,
        rows: 3,
        drive: DriveSide::Right,
    };
    let mut world = World {
        admins: Vec::new(),
        samples: Vec::new(),
    };
    grid_country(&mut rng, &spec, &mut |_, _| (60, 0), &mut 0, &mut world);
    world
}

/// Embeddings that vary smoothly with location plus Gaussian noise: each
/// dimension is a random planar wave over (lat, lon).
pub fn synthetic_embeddings(samples: &[Sample], dim: usize, noise: f64, seed: u64) -> Embeddings {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let waves: Vec<(f64, f64, f64)> = (0..dim)
        .map(|_| {
            (
                rng.random_range(-1.5..1.5),
                rng.random_range(-1.5..1.5),
                rng.random_range(0.0..std::f64::consts::TAU),
            )
        })
        .collect();
    let n = Normal::new(0.0, noise.max(f64::MIN_POSITIVE)).expect("non-negative noise");
    let mut data = Vec::with_capacity(samples.len() * dim);
    for s in samples {
        let (lat, lon) = (s.location.lat(), s.location.lon());
        for &(a, b, phase) in &waves {
            let v = (a * lat + b * lon + phase).sin() + if noise > 0.0 { n.sample(&mut rng) } else { 0.0 };
            data.push(v as f32);
        }
    }
    Embeddings::new(dim, samples.iter().map(|s| s.id.clone()).collect(), data).expect("consistent shape")
}

/// Classifier-like top-K: a softmax over `-distance / scale_km` to every
/// centroid, truncated to the `k` most probable cells (ties by lower id).
/// Probabilities are those of the full softmax, so they need not sum to 1.
pub fn synthetic_topk(point: GeoPoint, centroids: &[GeoPoint], k: usize, scale_km: f64) -> Vec<CellProb> {
    let logits: Vec<f64> = centroids.iter().map(|&c| -haversine(point, c) / scale_km).collect();
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    let mut probs: Vec<CellProb> = exps
        .iter()
        .enumerate()
        .map(|(i, e)| CellProb {
            cell_id: i as u32,
            prob: e / total,
        })
        .collect();
    probs.sort_by(|a, b| b.prob.total_cmp(&a.prob).then(a.cell_id.cmp(&b.cell_id)));
    probs.truncate(k);
    probs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geocell::{build_semantic_geocells, BuilderConfig};

    #[test]
    fn three_country_world_shape() {
        let w = three_country_world(7);
        assert_eq!(w.admins.len(), 40);
        assert!((4000..6000).contains(&w.samples.len()), "{}", w.samples.len());
        let again = three_country_world(7);
        assert_eq!(w.samples, again.samples);
        for s in &w.samples {
            let key = s.admin.as_ref().unwrap().key();
            let unit = w.admins.iter().find(|a| a.key() == key).unwrap();
            assert!(crate::geo::point_in_polygon(s.location, &unit.geometry));
        }
    }

    #[test]
    fn toy_world_builds_twelve_cells() {
        let w = toy_world(1);
        let set = build_semantic_geocells(&w.samples, &w.admins, &BuilderConfig::default()).unwrap();
        assert_eq!(set.len(), 12);
    }

    #[test]
    fn topk_is_sorted_and_truncated() {
        let c: Vec<GeoPoint> = (0..5).map(|i| GeoPoint::new(0.0, i as f64).unwrap()).collect();
        let t = synthetic_topk(GeoPoint::new(0.0, 3.1).unwrap(), &c, 3, 100.0);
        assert_eq!(t.iter().map(|c| c.cell_id).collect::<Vec<_>>(), vec![3, 4, 2]);
    }

    #[test]
    fn embeddings_are_deterministic() {
        let w = toy_world(1);
        let a = synthetic_embeddings(&w.samples[..10], 8, 0.1, 3);
        assert_eq!(a, synthetic_embeddings(&w.samples[..10], 8, 0.1, 3));
        assert_eq!(a.dim(), 8);
    }
}
