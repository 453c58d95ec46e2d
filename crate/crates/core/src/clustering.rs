//! OPTICS ordering with xi-based cluster extraction.
//!
//! The reachability computation follows Ankerst et al.: the core distance of
//! a point is the distance to its `min_samples`-th nearest neighbour (the
//! point itself counts as the first), and the expansion always continues with
//! the unprocessed point of smallest reachability, breaking ties by lower
//! input index. Cluster extraction uses steep down/up areas with the usual
//! corrections to definitions 9 and 11 and predecessor correction.
//! Hierarchical spans are flattened by keeping leaf clusters.
//!
//! The plot is closed with a sentinel equal to its largest finite
//! reachability rather than infinity. A valley running to the end of the
//! plot still closes, but a trailing outlier is not promoted to a steep-up
//! point of the cluster before it, and a uniformly flat plot yields no
//! clusters.

use serde::{Deserialize, Serialize};

use crate::par;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ClusterError {
    #[error("min_samples must be at least 2, got {0}")]
    MinSamples(usize),
    #[error("xi must lie in (0, 1), got {0}")]
    Xi(f64),
    #[error("max_eps must be positive, got {0}")]
    MaxEps(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpticsParams {
    pub min_samples: usize,
    pub xi: f64,
    #[serde(default = "unbounded", with = "eps_serde")]
    pub max_eps: f64,
}

fn unbounded() -> f64 {
    f64::INFINITY
}

// JSON has no infinity; an unbounded radius is written as null.
mod eps_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_some(v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

impl OpticsParams {
    pub fn new(min_samples: usize, xi: f64) -> Result<Self, ClusterError> {
        let p = OpticsParams {
            min_samples,
            xi,
            max_eps: f64::INFINITY,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_max_eps(mut self, max_eps: f64) -> Result<Self, ClusterError> {
        self.max_eps = max_eps;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), ClusterError> {
        if self.min_samples < 2 {
            return Err(ClusterError::MinSamples(self.min_samples));
        }
        if !(self.xi > 0.0 && self.xi < 1.0) {
            return Err(ClusterError::Xi(self.xi));
        }
        if self.max_eps.is_nan() || self.max_eps <= 0.0 {
            return Err(ClusterError::MaxEps(self.max_eps));
        }
        Ok(())
    }
}

/// An inclusive `[start, end]` range of positions in the OPTICS ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, other: &Span) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    pub fn disjoint(&self, other: &Span) -> bool {
        self.end < other.start || other.end < self.start
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OpticsResult {
    /// Input indices in processing order.
    pub ordering: Vec<usize>,
    /// Reachability of `ordering[i]` at position `i`; infinity where undefined.
    pub reachability: Vec<f64>,
    /// Predecessor (input index) of `ordering[i]`.
    pub predecessor: Vec<Option<usize>>,
    /// Core distance per input index.
    pub core_distances: Vec<f64>,
    /// Hierarchical xi clusters, smaller clusters of each upward area first.
    pub clusters: Vec<Span>,
    pub min_samples: usize,
    /// Flattened leaf clustering of `clusters`.
    pub flat: Clustering,
}

/// A partition of the input indices into clusters and noise.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Clustering {
    /// Cluster label per input index, `None` for noise.
    pub labels: Vec<Option<usize>>,
    /// Members (input indices, ascending) of each cluster.
    pub clusters: Vec<Vec<usize>>,
    pub noise: Vec<usize>,
}

impl Clustering {
    fn from_labels(labels: Vec<Option<usize>>, n_clusters: usize) -> Clustering {
        let mut clusters = vec![Vec::new(); n_clusters];
        let mut noise = Vec::new();
        for (i, l) in labels.iter().enumerate() {
            match l {
                Some(c) => clusters[*c].push(i),
                None => noise.push(i),
            }
        }
        Clustering { labels, clusters, noise }
    }

    /// Index of the largest cluster; ties go to the lower label.
    pub fn largest(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, c) in self.clusters.iter().enumerate() {
            if best.is_none_or(|b| c.len() > self.clusters[b].len()) {
                best = Some(i);
            }
        }
        best
    }
}

/// Runs OPTICS over `points` under `metric` and extracts xi clusters with
/// `params.xi`.
pub fn optics_order<P, F>(points: &[P], params: &OpticsParams, metric: F) -> OpticsResult
where
    P: Sync,
    F: Fn(&P, &P) -> f64 + Sync + Send,
{
    let n = points.len();
    let k = params.min_samples;
    let max_eps = params.max_eps;

    let core_distances: Vec<f64> = par::map_indexed(n, |i| {
        if n < k {
            return f64::INFINITY;
        }
        let mut d: Vec<f64> = points.iter().map(|q| metric(&points[i], q)).collect();
        let (_, kth, _) = d.select_nth_unstable_by(k - 1, f64::total_cmp);
        if *kth > max_eps {
            f64::INFINITY
        } else {
            *kth
        }
    });

    let mut reach = vec![f64::INFINITY; n];
    let mut pred: Vec<Option<usize>> = vec![None; n];
    let mut processed = vec![false; n];
    let mut ordering = Vec::with_capacity(n);
    for _ in 0..n {
        let mut point = usize::MAX;
        for i in 0..n {
            if !processed[i] && (point == usize::MAX || reach[i] < reach[point]) {
                point = i;
            }
        }
        processed[point] = true;
        ordering.push(point);
        let core = core_distances[point];
        if core.is_infinite() {
            continue;
        }
        for j in 0..n {
            if processed[j] {
                continue;
            }
            let d = metric(&points[point], &points[j]);
            if d > max_eps {
                continue;
            }
            let rd = d.max(core);
            if rd < reach[j] {
                reach[j] = rd;
                pred[j] = Some(point);
            }
        }
    }

    let reachability: Vec<f64> = ordering.iter().map(|&i| reach[i]).collect();
    let predecessor: Vec<Option<usize>> = ordering.iter().map(|&i| pred[i]).collect();
    let clusters = xi_spans(&reachability, &predecessor, &ordering, params.xi, k, k);
    let flat = flatten_leaves(&ordering, &clusters);
    OpticsResult {
        ordering,
        reachability,
        predecessor,
        core_distances,
        clusters,
        min_samples: k,
        flat,
    }
}

/// Re-extracts a flat clustering from an existing ordering with a different
/// `xi`. Minimum cluster size equals the run's `min_samples`.
pub fn extract_xi_clusters(result: &OpticsResult, xi: f64) -> Clustering {
    let spans = xi_spans(
        &result.reachability,
        &result.predecessor,
        &result.ordering,
        xi,
        result.min_samples,
        result.min_samples,
    );
    flatten_leaves(&result.ordering, &spans)
}

/// Leaf flattening: walk the spans in discovery order and keep a span only
/// if none of its positions has been labeled yet.
pub fn flatten_leaves(ordering: &[usize], spans: &[Span]) -> Clustering {
    let n = ordering.len();
    let mut by_position: Vec<Option<usize>> = vec![None; n];
    let mut label = 0;
    for s in spans {
        if by_position[s.start..=s.end].iter().all(Option::is_none) {
            by_position[s.start..=s.end].iter_mut().for_each(|l| *l = Some(label));
            label += 1;
        }
    }
    let mut labels = vec![None; n];
    for (pos, &idx) in ordering.iter().enumerate() {
        labels[idx] = by_position[pos];
    }
    Clustering::from_labels(labels, label)
}

struct SteepDownArea {
    start: usize,
    end: usize,
    mib: f64,
}

fn extend_region(steep: &[bool], xward: &[bool], start: usize, min_samples: usize) -> usize {
    let mut non_xward = 0;
    let mut end = start;
    let mut index = start;
    while index < steep.len() {
        if steep[index] {
            non_xward = 0;
            end = index;
        } else if !xward[index] {
            // not steep but still heading the same way
            non_xward += 1;
            if non_xward > min_samples {
                break;
            }
        } else {
            return end;
        }
        index += 1;
    }
    end
}

fn update_filter_sdas(sdas: Vec<SteepDownArea>, mib: f64, xi_complement: f64, plot: &[f64]) -> Vec<SteepDownArea> {
    if mib.is_infinite() {
        return Vec::new();
    }
    sdas.into_iter()
        .filter(|d| mib <= plot[d.start] * xi_complement)
        .map(|mut d| {
            d.mib = d.mib.max(mib);
            d
        })
        .collect()
}

fn correct_predecessor(
    plot: &[f64],
    pred: &[Option<usize>],
    ordering: &[usize],
    s: usize,
    mut e: usize,
) -> Option<(usize, usize)> {
    while s < e {
        if plot[s] > plot[e] {
            return Some((s, e));
        }
        if let Some(p_e) = pred[e] {
            if ordering[s..e].contains(&p_e) {
                return Some((s, e));
            }
        }
        e -= 1;
    }
    None
}

/// Hierarchical xi clusters as spans over the reachability plot.
pub fn xi_spans(
    reachability: &[f64],
    predecessor: &[Option<usize>],
    ordering: &[usize],
    xi: f64,
    min_samples: usize,
    min_cluster_size: usize,
) -> Vec<Span> {
    let n = reachability.len();
    let sentinel = reachability
        .iter()
        .copied()
        .filter(|r| r.is_finite())
        .reduce(f64::max)
        .unwrap_or(f64::INFINITY);
    let mut plot = reachability.to_vec();
    plot.push(sentinel);

    let xi_complement = 1.0 - xi;
    let ratio: Vec<f64> = (0..n).map(|i| plot[i] / plot[i + 1]).collect();
    let steep_up: Vec<bool> = ratio.iter().map(|&r| r <= xi_complement).collect();
    let steep_down: Vec<bool> = ratio.iter().map(|&r| r >= 1.0 / xi_complement).collect();
    let downward: Vec<bool> = ratio.iter().map(|&r| r > 1.0).collect();
    let upward: Vec<bool> = ratio.iter().map(|&r| r < 1.0).collect();

    let mut sdas: Vec<SteepDownArea> = Vec::new();
    let mut clusters = Vec::new();
    let mut index = 0usize;
    let mut mib = 0.0f64;

    for steep_index in (0..n).filter(|&i| steep_up[i] || steep_down[i]) {
        if steep_index < index {
            continue;
        }
        mib = plot[index..=steep_index].iter().copied().fold(mib, f64::max);

        if steep_down[steep_index] {
            sdas = update_filter_sdas(sdas, mib, xi_complement, &plot);
            let d_start = steep_index;
            let d_end = extend_region(&steep_down, &upward, d_start, min_samples);
            sdas.push(SteepDownArea {
                start: d_start,
                end: d_end,
                mib: 0.0,
            });
            index = d_end + 1;
            mib = plot[index];
        } else {
            sdas = update_filter_sdas(sdas, mib, xi_complement, &plot);
            let u_start = steep_index;
            let u_end = extend_region(&steep_up, &downward, u_start, min_samples);
            index = u_end + 1;
            mib = plot[index];

            let mut u_clusters = Vec::new();
            for d in &sdas {
                let mut c_start = d.start;
                let mut c_end = u_end;

                if plot[c_end + 1] * xi_complement < d.mib {
                    continue;
                }

                let d_max = plot[d.start];
                if d_max * xi_complement >= plot[c_end + 1] {
                    // first index from the left almost level with the cluster end
                    while plot[c_start + 1] > plot[c_end + 1] && c_start < d.end {
                        c_start += 1;
                    }
                } else if plot[c_end + 1] * xi_complement >= d_max {
                    // first index from the right almost level with the cluster start
                    while c_end > u_start && plot[c_end - 1] > d_max {
                        c_end -= 1;
                    }
                }

                match correct_predecessor(&plot, predecessor, ordering, c_start, c_end) {
                    Some((s, e)) => {
                        c_start = s;
                        c_end = e;
                    }
                    None => continue,
                }

                if c_end - c_start + 1 < min_cluster_size {
                    continue;
                }
                if c_start > d.end {
                    continue;
                }
                if c_end < u_start {
                    continue;
                }
                u_clusters.push(Span {
                    start: c_start,
                    end: c_end,
                });
            }
            u_clusters.reverse();
            clusters.extend(u_clusters);
        }
    }
    clusters
}
