//! Merging of under-populated admin-2 units within each country.

use std::collections::{BTreeMap, BTreeSet};

use super::admin::{touches, Admin2Index};
use super::{check_unique_ids, finalize, AdminUnit, BuilderConfig, Draft, GeocellError, GeocellSet, Provenance};
use crate::par;
use crate::sample::Sample;

/// Boundary buffer, in degrees, for admin adjacency.
pub const ADJACENCY_EPS_DEG: f64 = 1e-6;

struct Work {
    draft: Draft,
    admin1: BTreeSet<String>,
    neighbors: BTreeSet<usize>,
}

/// Merges admin-2 units until every cell holds at least `min_cell_size`
/// samples or has no same-country neighbor left (flagged as remainder).
///
/// Cells are processed smallest first. A cell merges into the neighbor with
/// the fewest samples, preferring neighbors that share an admin-1 unit.
/// Merges never cross country codes. Cells without samples are dropped.
pub fn merge_admin_cells(
    samples: &[Sample],
    admins: &[AdminUnit],
    config: &BuilderConfig,
) -> Result<GeocellSet, GeocellError> {
    config.validate()?;
    let drafts = merge_drafts(samples, admins, config)?;
    let set = finalize(drafts, samples, config)?;
    set.validate(samples, true)?;
    Ok(set)
}

pub(crate) fn merge_drafts(
    samples: &[Sample],
    admins: &[AdminUnit],
    config: &BuilderConfig,
) -> Result<Vec<Draft>, GeocellError> {
    check_unique_ids(samples)?;
    let index = Admin2Index::new(admins)?;
    let located = par::try_map(samples, |s| index.locate(s))?;
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); index.units.len()];
    for (s, u) in located.into_iter().enumerate() {
        members[u].push(s);
    }
    let mut by_country: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, u) in index.units.iter().enumerate() {
        by_country.entry(u.country.as_str()).or_default().push(i);
    }
    let groups: Vec<Vec<usize>> = by_country.into_values().collect();
    let merged = par::map(&groups, |units| merge_country(&index, units, &members, config.min_cell_size));
    Ok(merged.into_iter().flatten().collect())
}

fn merge_country(index: &Admin2Index<'_>, units: &[usize], members: &[Vec<usize>], min: usize) -> Vec<Draft> {
    let n = units.len();
    let mut cells: Vec<Option<Work>> = units
        .iter()
        .map(|&u| {
            let unit = index.units[u];
            Some(Work {
                draft: Draft {
                    geometry: unit.geometry.clone(),
                    members: members[u].clone(),
                    country: unit.country.clone(),
                    provenance: Provenance::Admin { units: vec![unit.key()] },
                    remainder: false,
                },
                admin1: BTreeSet::from([unit.admin1.clone()]),
                neighbors: BTreeSet::new(),
            })
        })
        .collect();
    let pairs: Vec<Vec<usize>> = par::map_indexed(n, |i| {
        ((i + 1)..n)
            .filter(|&j| {
                index.bbox(units[i]).intersects(index.bbox(units[j]), ADJACENCY_EPS_DEG)
                    && touches(
                        &index.units[units[i]].geometry,
                        &index.units[units[j]].geometry,
                        ADJACENCY_EPS_DEG,
                    )
            })
            .collect()
    });
    for (i, js) in pairs.into_iter().enumerate() {
        for j in js {
            cells[i].as_mut().expect("fresh").neighbors.insert(j);
            cells[j].as_mut().expect("fresh").neighbors.insert(i);
        }
    }

    let count = |c: &Option<Work>| c.as_ref().map_or(usize::MAX, |w| w.draft.members.len());
    loop {
        let next = (0..n)
            .filter(|&i| {
                cells[i]
                    .as_ref()
                    .is_some_and(|w| !w.draft.remainder && w.draft.members.len() < min)
            })
            .min_by_key(|&i| (count(&cells[i]), i));
        let Some(i) = next else { break };
        let w = cells[i].as_ref().expect("alive");
        if w.neighbors.is_empty() {
            cells[i].as_mut().expect("alive").draft.remainder = true;
            continue;
        }
        let same_admin1: Vec<usize> = w
            .neighbors
            .iter()
            .copied()
            .filter(|&j| !cells[j].as_ref().expect("alive neighbor").admin1.is_disjoint(&w.admin1))
            .collect();
        let pool = if same_admin1.is_empty() {
            w.neighbors.iter().copied().collect()
        } else {
            same_admin1
        };
        let target = pool.into_iter().min_by_key(|&j| (count(&cells[j]), j)).expect("non-empty");
        let (keep, gone) = (i.min(target), i.max(target));
        let absorbed = cells[gone].take().expect("alive");
        for &k in &absorbed.neighbors {
            if let Some(c) = cells[k].as_mut() {
                c.neighbors.remove(&gone);
                if k != keep {
                    c.neighbors.insert(keep);
                }
            }
        }
        let kept = cells[keep].as_mut().expect("alive");
        kept.neighbors.extend(absorbed.neighbors.into_iter().filter(|&k| k != keep));
        kept.neighbors.remove(&gone);
        kept.admin1.extend(absorbed.admin1);
        kept.draft.members.extend(absorbed.draft.members);
        kept.draft.geometry = kept.draft.geometry.clone().union_disjoint(absorbed.draft.geometry);
        if let (Provenance::Admin { units: a }, Provenance::Admin { units: b }) =
            (&mut kept.draft.provenance, absorbed.draft.provenance)
        {
            a.extend(b);
            a.sort();
        }
    }
    cells.into_iter().flatten().map(|w| w.draft).collect()
}
