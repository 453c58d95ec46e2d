//! Geocell construction.
//!
//! Two builders are provided. [`build_naive_geocells`] recursively splits the
//! sample bounding box at member medians. [`build_semantic_geocells`] starts
//! from admin-2 units, merges under-populated units inside their country,
//! then carves oversized cells along OPTICS clusters using Voronoi regions of
//! the member samples.

mod admin;
mod merge;
mod naive;
mod split;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::clustering::{ClusterError, OpticsParams};
use crate::geo::{self, haversine, point_in_polygon, Coord, GeoError, GeoPoint, MultiPolygon, Rect, BOUNDARY_EPS};
use crate::par;
use crate::sample::Sample;

pub use admin::{resolve_lineage, AdminLevel, AdminUnit};
pub use merge::merge_admin_cells;
pub use naive::build_naive_geocells;
pub use split::split_cell_optics_voronoi;

pub type CellId = u32;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeocellError {
    #[error("invalid builder config: {0}")]
    Config(String),
    #[error("sample {0} does not fall in any admin-2 unit")]
    UnresolvedSample(String),
    #[error("geocell set is empty")]
    EmptySet,
    #[error("no samples given")]
    NoSamples,
    #[error("duplicate sample id {0}")]
    DuplicateSample(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error(transparent)]
    Geo(#[from] GeoError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CentroidMode {
    /// Area-weighted centroid of the cell polygon.
    #[default]
    Polygon,
    /// Mean position of the member samples.
    SampleMean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuilderConfig {
    /// Minimum number of samples per cell (flagged remainder cells excepted).
    pub min_cell_size: usize,
    /// OPTICS parameters per splitting round.
    pub optics_rounds: Vec<OpticsParams>,
    /// Naive builder: cells above this size are split.
    pub naive_max_cell_size: usize,
    #[serde(default)]
    pub centroid_mode: CentroidMode,
}

impl Default for BuilderConfig {
    fn default() -> Self {
        BuilderConfig {
            min_cell_size: 50,
            optics_rounds: vec![OpticsParams {
                min_samples: 3,
                xi: 0.15,
                max_eps: f64::INFINITY,
            }],
            naive_max_cell_size: 200,
            centroid_mode: CentroidMode::Polygon,
        }
    }
}

impl BuilderConfig {
    pub fn validate(&self) -> Result<(), GeocellError> {
        if self.min_cell_size < 1 {
            return Err(GeocellError::Config("min_cell_size must be at least 1".into()));
        }
        for p in &self.optics_rounds {
            p.validate()?;
        }
        Ok(())
    }

    fn validate_semantic(&self) -> Result<(), GeocellError> {
        self.validate()?;
        if self.optics_rounds.is_empty() {
            return Err(GeocellError::Config("semantic splitting needs at least one OPTICS round".into()));
        }
        Ok(())
    }
}

/// Where a cell came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    /// Union of admin-2 units, listed by `iso/admin1/admin2` key.
    Admin { units: Vec<String> },
    /// Carved out of an admin cell during OPTICS round `round`, as the
    /// `step`-th carve of that cell.
    Split { units: Vec<String>, round: usize, step: usize },
    /// Naive rectangle, addressed by its split path (`0` low side, `1` high side).
    Naive { path: String },
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Admin { units } => write!(f, "admin:{}", units.join("+")),
            Provenance::Split { units, round, step } => write!(f, "split:{}#r{round}s{step}", units.join("+")),
            Provenance::Naive { path } => write!(f, "naive:{path}"),
        }
    }
}

impl std::str::FromStr for Provenance {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let units = |u: &str| u.split('+').filter(|x| !x.is_empty()).map(str::to_string).collect();
        if let Some(rest) = s.strip_prefix("admin:") {
            return Ok(Provenance::Admin { units: units(rest) });
        }
        if let Some(rest) = s.strip_prefix("naive:") {
            return Ok(Provenance::Naive { path: rest.to_string() });
        }
        if let Some(rest) = s.strip_prefix("split:") {
            let (u, tag) = rest.rsplit_once("#r").ok_or_else(|| format!("bad split provenance {s}"))?;
            let (round, step) = tag.split_once('s').ok_or_else(|| format!("bad split provenance {s}"))?;
            return Ok(Provenance::Split {
                units: units(u),
                round: round.parse().map_err(|_| format!("bad round in {s}"))?,
                step: step.parse().map_err(|_| format!("bad step in {s}"))?,
            });
        }
        Err(format!("unknown provenance {s}"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Geocell {
    pub cell_id: CellId,
    pub geometry: MultiPolygon,
    pub centroid: GeoPoint,
    /// Member sample ids in dataset order.
    pub members: Vec<String>,
    /// ISO code of the originating country (empty for naive cells without lineage).
    pub country: String,
    pub provenance: Provenance,
    /// Undersized cell that could not be merged legally.
    pub remainder: bool,
    bbox: Rect,
}

impl Geocell {
    pub fn new(
        cell_id: CellId,
        geometry: MultiPolygon,
        centroid: GeoPoint,
        members: Vec<String>,
        country: String,
        provenance: Provenance,
        remainder: bool,
    ) -> Geocell {
        let bbox = geometry.bbox();
        Geocell {
            cell_id,
            geometry,
            centroid,
            members,
            country,
            provenance,
            remainder,
            bbox,
        }
    }

    pub fn bbox(&self) -> &Rect {
        &self.bbox
    }

    pub fn contains(&self, p: GeoPoint) -> bool {
        self.bbox.contains(&Coord::from_geo(p), BOUNDARY_EPS) && point_in_polygon(p, &self.geometry)
    }
}

/// An immutable partition of a dataset into geocells, ordered by `cell_id`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeocellSet {
    cells: Vec<Geocell>,
    pub config: BuilderConfig,
    /// Non-fatal issues met while building, e.g. cells left unsplit.
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Assignment {
    pub cell_id: CellId,
    /// The point fell in no cell and was given the nearest centroid's cell.
    pub fallback: bool,
}

impl GeocellSet {
    /// Cells must carry ids `0..n` in order.
    pub fn new(cells: Vec<Geocell>, config: BuilderConfig) -> Result<GeocellSet, GeocellError> {
        for (i, c) in cells.iter().enumerate() {
            if c.cell_id as usize != i {
                return Err(GeocellError::Invariant(format!(
                    "cell at position {i} has id {}, ids must be contiguous from 0",
                    c.cell_id
                )));
            }
        }
        Ok(GeocellSet {
            cells,
            config,
            warnings: Vec::new(),
        })
    }

    pub fn cells(&self) -> &[Geocell] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn get(&self, id: CellId) -> Option<&Geocell> {
        self.cells.get(id as usize)
    }

    pub fn centroids(&self) -> Vec<GeoPoint> {
        self.cells.iter().map(|c| c.centroid).collect()
    }

    /// sample id → cell id.
    pub fn assignments(&self) -> HashMap<&str, CellId> {
        let mut out = HashMap::new();
        for c in &self.cells {
            for m in &c.members {
                out.insert(m.as_str(), c.cell_id);
            }
        }
        out
    }

    /// Containing cell (lowest id on shared borders), else the cell with the
    /// nearest centroid, flagged as a fallback.
    pub fn assign_cell(&self, p: GeoPoint) -> Result<Assignment, GeocellError> {
        if self.cells.is_empty() {
            return Err(GeocellError::EmptySet);
        }
        if let Some(c) = self.cells.iter().find(|c| c.contains(p)) {
            return Ok(Assignment {
                cell_id: c.cell_id,
                fallback: false,
            });
        }
        let nearest = self
            .cells
            .iter()
            .map(|c| (haversine(p, c.centroid), c.cell_id))
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
            .expect("non-empty");
        Ok(Assignment {
            cell_id: nearest.1,
            fallback: true,
        })
    }

    /// Checks the partition, containment and country-purity invariants
    /// against `samples`.
    pub fn validate(&self, samples: &[Sample], check_country: bool) -> Result<(), GeocellError> {
        let by_id: HashMap<&str, &Sample> = samples.iter().map(|s| (s.id.as_str(), s)).collect();
        let mut seen: HashMap<&str, CellId> = HashMap::with_capacity(samples.len());
        for c in &self.cells {
            for m in &c.members {
                if let Some(prev) = seen.insert(m.as_str(), c.cell_id) {
                    return Err(GeocellError::Invariant(format!(
                        "sample {m} is in cells {prev} and {}",
                        c.cell_id
                    )));
                }
                let s = by_id
                    .get(m.as_str())
                    .ok_or_else(|| GeocellError::Invariant(format!("cell {} lists unknown sample {m}", c.cell_id)))?;
                if !c.contains(s.location) {
                    return Err(GeocellError::Invariant(format!(
                        "sample {m} lies outside its cell {}",
                        c.cell_id
                    )));
                }
                if check_country && s.country().is_some_and(|iso| iso != c.country) {
                    return Err(GeocellError::Invariant(format!(
                        "cell {} ({}) holds sample {m} from another country",
                        c.cell_id, c.country
                    )));
                }
            }
        }
        if seen.len() != samples.len() {
            return Err(GeocellError::Invariant(format!(
                "{} of {} samples are assigned to a cell",
                seen.len(),
                samples.len()
            )));
        }
        Ok(())
    }
}

/// A cell under construction: geometry plus member indices into the sample slice.
#[derive(Debug, Clone)]
pub(crate) struct Draft {
    pub geometry: MultiPolygon,
    pub members: Vec<usize>,
    pub country: String,
    pub provenance: Provenance,
    pub remainder: bool,
}

/// Mean position on the sphere (normalized mean of unit vectors).
pub fn sample_mean_point(points: impl Iterator<Item = GeoPoint>) -> Option<GeoPoint> {
    let (mut x, mut y, mut z, mut n) = (0.0, 0.0, 0.0, 0usize);
    for p in points {
        let (lat, lon) = (p.lat().to_radians(), p.lon().to_radians());
        x += lat.cos() * lon.cos();
        y += lat.cos() * lon.sin();
        z += lat.sin();
        n += 1;
    }
    if n == 0 {
        return None;
    }
    let h = (x * x + y * y).sqrt();
    GeoPoint::new(z.atan2(h).to_degrees(), y.atan2(x).to_degrees()).ok()
}

/// Turns drafts into numbered cells with centroids. Drafts without members
/// are dropped.
pub(crate) fn finalize(drafts: Vec<Draft>, samples: &[Sample], config: &BuilderConfig) -> Result<GeocellSet, GeocellError> {
    let drafts: Vec<Draft> = drafts.into_iter().filter(|d| !d.members.is_empty()).collect();
    let centroids = par::try_map(&drafts, |d| -> Result<GeoPoint, GeocellError> {
        match config.centroid_mode {
            CentroidMode::Polygon => Ok(geo::centroid(&d.geometry)?),
            CentroidMode::SampleMean => sample_mean_point(d.members.iter().map(|&i| samples[i].location))
                .ok_or_else(|| GeocellError::Invariant("cell without members".into())),
        }
    })?;
    let cells = drafts
        .into_iter()
        .zip(centroids)
        .enumerate()
        .map(|(i, (d, centroid))| {
            let mut members = d.members;
            members.sort_unstable();
            Geocell::new(
                i as CellId,
                d.geometry,
                centroid,
                members.into_iter().map(|m| samples[m].id.clone()).collect(),
                d.country,
                d.provenance,
                d.remainder,
            )
        })
        .collect();
    GeocellSet::new(cells, config.clone())
}

pub(crate) fn check_unique_ids(samples: &[Sample]) -> Result<(), GeocellError> {
    if samples.is_empty() {
        return Err(GeocellError::NoSamples);
    }
    let mut seen = std::collections::HashSet::with_capacity(samples.len());
    for s in samples {
        if !seen.insert(s.id.as_str()) {
            return Err(GeocellError::DuplicateSample(s.id.clone()));
        }
    }
    Ok(())
}

/// Admin merge followed by OPTICS/Voronoi splitting of every cell holding
/// more than twice the minimum size.
pub fn build_semantic_geocells(
    samples: &[Sample],
    admins: &[AdminUnit],
    config: &BuilderConfig,
) -> Result<GeocellSet, GeocellError> {
    config.validate_semantic()?;
    let drafts = merge::merge_drafts(samples, admins, config)?;
    let split: Vec<(Vec<Draft>, Option<String>)> = par::into_map(drafts, |d| {
        if d.members.len() <= 2 * config.min_cell_size {
            return (vec![d], None);
        }
        match split::split_draft(&d, samples, config) {
            Ok(parts) => (parts, None),
            // a cell too large to project, or with degenerate clipping, stays whole
            Err(e) => {
                let msg = format!("{} left unsplit: {e}", d.provenance);
                (vec![d], Some(msg))
            }
        }
    });
    let mut warnings = Vec::new();
    let mut out = Vec::new();
    for (parts, warning) in split {
        out.extend(parts);
        warnings.extend(warning);
    }
    let mut set = finalize(out, samples, config)?;
    set.validate(samples, true)?;
    set.warnings = warnings;
    Ok(set)
}

/// Sample counts per country, for reporting.
pub fn country_counts(set: &GeocellSet) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    for c in set.cells() {
        *out.entry(c.country.clone()).or_insert(0) += c.members.len();
    }
    out
}
