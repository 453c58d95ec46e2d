use std::collections::BTreeMap;

use geocell_core::clustering::{optics_order, OpticsParams};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

type Pt = (f64, f64);

fn euclid(a: &Pt, b: &Pt) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

fn blobs(rng: &mut ChaCha8Rng, centers: &[Pt], per: usize, sigma: f64) -> (Vec<Pt>, Vec<usize>) {
    let noise = Normal::new(0.0, sigma).unwrap();
    let mut pts = Vec::new();
    let mut truth = Vec::new();
    for (c, &(x, y)) in centers.iter().enumerate() {
        for _ in 0..per {
            pts.push((x + noise.sample(rng), y + noise.sample(rng)));
            truth.push(c);
        }
    }
    (pts, truth)
}

type Key = (u64, u64);

fn keyed(points: &[Pt], labels: &[Option<usize>]) -> BTreeMap<Key, Option<usize>> {
    points.iter().zip(labels).map(|(p, l)| ((p.0.to_bits(), p.1.to_bits()), *l)).collect()
}

#[test]
fn labels_partition_input_and_clusters_meet_min_size() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..200 {
        let n = rng.random_range(1..=100);
        let min_samples = rng.random_range(2..=8);
        let xi = rng.random_range(0.01..0.5);
        let pts: Vec<Pt> = (0..n).map(|_| (rng.random_range(0.0..10.0), rng.random_range(0.0..10.0))).collect();
        let r = optics_order(&pts, &OpticsParams::new(min_samples, xi).unwrap(), euclid);
        let flat = &r.flat;
        assert_eq!(flat.labels.len(), n);
        let mut ordering = r.ordering.clone();
        ordering.sort_unstable();
        assert_eq!(ordering, (0..n).collect::<Vec<_>>());
        let mut covered = vec![0usize; n];
        for (l, members) in flat.clusters.iter().enumerate() {
            assert!(members.len() >= min_samples, "cluster of {} < {min_samples}", members.len());
            for &m in members {
                assert_eq!(flat.labels[m], Some(l));
                covered[m] += 1;
            }
        }
        for &m in &flat.noise {
            assert_eq!(flat.labels[m], None);
            covered[m] += 1;
        }
        assert!(covered.iter().all(|&c| c == 1));
        for s in &r.clusters {
            assert!(s.len() >= min_samples && s.end < n);
        }
    }
}

#[test]
fn two_blobs_twenty_sigma_apart_give_two_clusters() {
    let params = OpticsParams::new(10, 0.1).unwrap();
    let mut ok = 0;
    for seed in 0..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (pts, truth) = blobs(&mut rng, &[(0.0, 0.0), (20.0, 0.0)], 50, 1.0);
        let r = optics_order(&pts, &params, euclid);
        let pure = r.flat.clusters.iter().all(|c| c.iter().all(|&i| truth[i] == truth[c[0]]));
        if r.flat.clusters.len() == 2 && pure {
            ok += 1;
        }
    }
    assert!(ok >= 95, "{ok}/100 seeds gave two blob-pure clusters");
}

#[test]
fn two_separated_groups_of_ten() {
    // spacing 1 inside each group, 50 between them
    let mut pts: Vec<Pt> = (0..10).map(|i| (f64::from(i % 5), f64::from(i / 5))).collect();
    pts.extend((0..10).map(|i| (50.0 + f64::from(i % 5), f64::from(i / 5))));
    let r = optics_order(&pts, &OpticsParams::new(3, 0.05).unwrap(), euclid);
    assert_eq!(r.flat.clusters.len(), 2);
    assert!(r.flat.clusters.iter().all(|c| c.iter().all(|&i| (i < 10) == (c[0] < 10))));
}

/// Shuffling keeps the cluster count and never moves a point between
/// clusters. Border points reachable from two sides may flip between a
/// cluster and noise, since equal reachabilities are ordered by input index.
#[test]
fn shuffling_preserves_clusters_up_to_border_points() {
    let params = OpticsParams::new(10, 0.1).unwrap();
    let mut flips = 0;
    let mut clustered = 0;
    for seed in 0..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let per = rng.random_range(10..=25);
        let (pts, _) = blobs(&mut rng, &[(0.0, 0.0), (20.0, 0.0)], per, 1.0);
        let base = optics_order(&pts, &params, euclid);
        let a = keyed(&pts, &base.flat.labels);
        for _ in 0..5 {
            let mut shuffled = pts.clone();
            shuffled.shuffle(&mut rng);
            let r = optics_order(&shuffled, &params, euclid);
            assert_eq!(r.flat.clusters.len(), base.flat.clusters.len(), "seed {seed}");
            let b = keyed(&shuffled, &r.flat.labels);
            let both: Vec<(usize, usize)> = a.iter().filter_map(|(k, &x)| Some((x?, b[k]?))).collect();
            for &(x, u) in &both {
                for &(y, v) in &both {
                    assert_eq!(x == y, u == v, "seed {seed}: a point changed cluster");
                }
            }
            flips += a.iter().filter(|(k, x)| x.is_some() != b[*k].is_some()).count();
            clustered += a.values().filter(|x| x.is_some()).count();
        }
    }
    assert!(flips * 100 <= clustered, "{flips} border flips over {clustered} clustered points");
}

proptest! {
    #[test]
    fn optics_is_deterministic(pts in prop::collection::vec((0.0f64..10.0, 0.0f64..10.0), 1..60), k in 2usize..6) {
        let p = OpticsParams::new(k, 0.1).unwrap();
        prop_assert_eq!(optics_order(&pts, &p, euclid), optics_order(&pts, &p, euclid));
    }

    #[test]
    fn reachability_after_start_is_at_least_core_of_predecessor(pts in prop::collection::vec((0.0f64..10.0, 0.0f64..10.0), 2..60)) {
        let r = optics_order(&pts, &OpticsParams::new(3, 0.1).unwrap(), euclid);
        prop_assert!(r.reachability[0].is_infinite());
        for (pos, &i) in r.ordering.iter().enumerate() {
            if let Some(p) = r.predecessor[pos] {
                let expected = euclid(&pts[p], &pts[i]).max(r.core_distances[p]);
                prop_assert!((r.reachability[pos] - expected).abs() < 1e-12);
            }
        }
    }
}
