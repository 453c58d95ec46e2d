//! Synthetic captions assembled from per-category templates.

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::auxiliary::{CLIMATE_ZONES, MONTH_NAMES};
use super::LabelError;
use crate::sample::{DriveSide, Sample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaptionCategory {
    Location,
    Climate,
    Compass,
    Month,
    Traffic,
}

impl CaptionCategory {
    /// Concatenation order.
    pub const ORDER: [CaptionCategory; 5] = [
        CaptionCategory::Location,
        CaptionCategory::Climate,
        CaptionCategory::Compass,
        CaptionCategory::Month,
        CaptionCategory::Traffic,
    ];

    /// Placeholders a template of this category may use.
    pub fn placeholders(&self) -> &'static [&'static str] {
        match self {
            CaptionCategory::Location => &["region", "country"],
            CaptionCategory::Climate => &["climate"],
            CaptionCategory::Compass => &["direction"],
            CaptionCategory::Month => &["month"],
            CaptionCategory::Traffic => &["side"],
        }
    }

    /// Placeholder values for `s`, or `None` when an attribute is missing.
    fn values(&self, s: &Sample) -> Option<Vec<(&'static str, String)>> {
        let a = &s.aux;
        Some(match self {
            CaptionCategory::Location => vec![
                ("region", a.region_name.clone()?),
                ("country", a.country_name.clone()?),
            ],
            CaptionCategory::Climate => {
                let (_, name) = CLIMATE_ZONES.get(usize::from(a.climate_zone?))?;
                vec![("climate", name.to_string())]
            }
            CaptionCategory::Compass => vec![("direction", cardinal(a.bearing_deg?)?.to_string())],
            CaptionCategory::Month => {
                let m = a.month?;
                vec![("month", MONTH_NAMES.get(usize::from(m).checked_sub(1)?)?.to_string())]
            }
            CaptionCategory::Traffic => vec![(
                "side",
                match a.drive_side? {
                    DriveSide::Left => "left",
                    DriveSide::Right => "right",
                }
                .to_string(),
            )],
        })
    }
}

fn cardinal(bearing: f64) -> Option<&'static str> {
    if !bearing.is_finite() {
        return None;
    }
    let b = bearing.rem_euclid(360.0);
    Some(match ((b + 45.0) / 90.0) as usize % 4 {
        0 => "north",
        1 => "east",
        2 => "south",
        _ => "west",
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaptionTemplateSet {
    pub location: Vec<String>,
    pub climate: Vec<String>,
    pub compass: Vec<String>,
    pub month: Vec<String>,
    pub traffic: Vec<String>,
}

impl Default for CaptionTemplateSet {
    fn default() -> Self {
        let one = |s: &str| vec![s.to_string()];
        CaptionTemplateSet {
            location: one("A photo I took in the region of {region} in {country}."),
            climate: one("This location has a {climate} climate."),
            compass: one("This photo is facing {direction}."),
            month: one("This photo was taken in {month}."),
            traffic: one("In this location, people drive on the {side} side of the road."),
        }
    }
}

fn placeholders(template: &str) -> Result<Vec<&str>, LabelError> {
    let mut out = Vec::new();
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        let after = &rest[open + 1..];
        let close = after
            .find('}')
            .ok_or_else(|| LabelError::Template(format!("unclosed placeholder in {template:?}")))?;
        out.push(&after[..close]);
        rest = &after[close + 1..];
    }
    if rest.contains('}') {
        return Err(LabelError::Template(format!("stray '}}' in {template:?}")));
    }
    Ok(out)
}

impl CaptionTemplateSet {
    pub fn templates(&self, category: CaptionCategory) -> &[String] {
        match category {
            CaptionCategory::Location => &self.location,
            CaptionCategory::Climate => &self.climate,
            CaptionCategory::Compass => &self.compass,
            CaptionCategory::Month => &self.month,
            CaptionCategory::Traffic => &self.traffic,
        }
    }

    /// Every placeholder must belong to its template's category.
    pub fn validate(&self) -> Result<(), LabelError> {
        for cat in CaptionCategory::ORDER {
            for t in self.templates(cat) {
                for p in placeholders(t)? {
                    if !cat.placeholders().contains(&p) {
                        return Err(LabelError::Template(format!("{{{p}}} is not available in {cat:?} templates")));
                    }
                }
            }
        }
        Ok(())
    }
}

fn fnv1a(s: &str) -> u64 {
    s.bytes()
        .fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3))
}

/// One sampled component per category with data, in fixed category order,
/// joined by spaces. The RNG is seeded from `seed` and the sample id, so the
/// caption of a sample does not depend on which other samples are captioned.
pub fn generate_caption(sample: &Sample, templates: &CaptionTemplateSet, seed: u64) -> Result<String, LabelError> {
    templates.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ fnv1a(&sample.id));
    let mut parts = Vec::new();
    for cat in CaptionCategory::ORDER {
        let Some(values) = cat.values(sample) else { continue };
        let Some(template) = templates.templates(cat).choose(&mut rng) else { continue };
        let mut text = template.clone();
        for (name, value) in values {
            text = text.replace(&format!("{{{name}}}"), &value);
        }
        parts.push(text);
    }
    Ok(parts.join(" "))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::GeoPoint;

    fn sample() -> Sample {
        Sample::new("s1", GeoPoint::new(-26.2, 28.0).unwrap())
    }

    #[test]
    fn component_examples() {
        let t = CaptionTemplateSet::default();
        let mut s = sample();
        s.aux.region_name = Some("Gauteng".into());
        s.aux.country_name = Some("South Africa".into());
        assert_eq!(
            generate_caption(&s, &t, 0).unwrap(),
            "A photo I took in the region of Gauteng in South Africa."
        );
        let mut s = sample();
        s.aux.climate_zone = Some(12);
        assert_eq!(generate_caption(&s, &t, 0).unwrap(), "This location has a temperate oceanic climate.");
        let mut s = sample();
        s.aux.drive_side = Some(DriveSide::Left);
        assert_eq!(
            generate_caption(&s, &t, 0).unwrap(),
            "In this location, people drive on the left side of the road."
        );
        let mut s = sample();
        s.aux.bearing_deg = Some(350.0);
        s.aux.month = Some(12);
        assert_eq!(
            generate_caption(&s, &t, 0).unwrap(),
            "This photo is facing north. This photo was taken in December."
        );
    }

    #[test]
    fn missing_data_yields_empty_caption() {
        assert_eq!(generate_caption(&sample(), &CaptionTemplateSet::default(), 7).unwrap(), "");
    }

    #[test]
    fn deterministic_per_seed() {
        let mut t = CaptionTemplateSet::default();
        t.month = (0..10).map(|i| format!("Variant {i}: {{month}}.")).collect();
        let mut s = sample();
        s.aux.month = Some(3);
        let a = generate_caption(&s, &t, 42).unwrap();
        assert_eq!(a, generate_caption(&s, &t, 42).unwrap());
        let distinct: std::collections::BTreeSet<String> =
            (0..50).map(|seed| generate_caption(&s, &t, seed).unwrap()).collect();
        assert!(distinct.len() > 1);
    }

    #[test]
    fn bad_placeholders_are_rejected() {
        let mut t = CaptionTemplateSet::default();
        t.climate = vec!["In {country}.".into()];
        assert!(t.validate().is_err());
        t.climate = vec!["Unclosed {climate".into()];
        assert!(t.validate().is_err());
    }

    #[test]
    fn bearings_to_cardinals() {
        assert_eq!(cardinal(0.0), Some("north"));
        assert_eq!(cardinal(44.9), Some("north"));
        assert_eq!(cardinal(45.0), Some("east"));
        assert_eq!(cardinal(180.0), Some("south"));
        assert_eq!(cardinal(-90.0), Some("west"));
        assert_eq!(cardinal(f64::NAN), None);
    }
}
