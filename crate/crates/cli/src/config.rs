//! Pipeline configuration: a named preset overlaid with an optional JSON file
//! and then with command-line flags.

use std::path::{Path, PathBuf};

use anyhow::Result;
use clap::ValueEnum;
use geocell_core::clustering::OpticsParams;
use geocell_core::geocell::BuilderConfig;
use geocell_core::labels::{CaptionTemplateSet, MultiTaskLossConfig};
use geocell_core::refine::RefineParams;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, ErrorKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// Street-level imagery: tau 75 km, OPTICS 3 / 0.15, top-5, T = 1.6,
    /// 1000 km candidate filter.
    #[default]
    StreetView,
    /// Broad-domain imagery: tau 65 km, OPTICS 10 / 0.1, top-40, T = 0.6,
    /// no candidate filter.
    General,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    pub samples: Option<PathBuf>,
    pub admins: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub preset: Preset,
    /// Seeds captions and synthetic fixtures.
    pub seed: u64,
    /// Label smoothing temperature in km.
    pub tau_km: f64,
    pub builder: BuilderConfig,
    /// OPTICS parameters for location clusters inside each cell.
    pub index_optics: OpticsParams,
    pub refine: RefineParams,
    pub loss: MultiTaskLossConfig,
    pub captions: CaptionTemplateSet,
    pub paths: Paths,
}

impl PipelineConfig {
    pub fn preset(preset: Preset) -> PipelineConfig {
        let (tau_km, optics, refine) = match preset {
            Preset::StreetView => (75.0, (3, 0.15), RefineParams::street_view()),
            Preset::General => (65.0, (10, 0.1), RefineParams::general()),
        };
        let optics = OpticsParams::new(optics.0, optics.1).expect("preset OPTICS parameters are valid");
        PipelineConfig {
            preset,
            seed: 0,
            tau_km,
            builder: BuilderConfig {
                optics_rounds: vec![optics],
                ..BuilderConfig::default()
            },
            index_optics: optics,
            refine,
            loss: MultiTaskLossConfig::default(),
            captions: CaptionTemplateSet::default(),
            paths: Paths::default(),
        }
    }

    /// Preset defaults, overlaid with the JSON file if given. The preset is
    /// taken from `preset` if set, else from the file, else street-view.
    pub fn load(path: Option<&Path>, preset: Option<Preset>) -> Result<PipelineConfig> {
        let user = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| {
                    let kind = if e.kind() == std::io::ErrorKind::NotFound {
                        ErrorKind::UnresolvedInput
                    } else {
                        ErrorKind::InvalidInput
                    };
                    CliError::new(kind, format!("{}: {e}", p.display()))
                })?;
                serde_json::from_str::<Value>(&text)
                    .map_err(|e| CliError::new(ErrorKind::InvalidConfig, format!("{}: {e}", p.display())))?
            }
            None => Value::Object(Default::default()),
        };
        let from_file = match user.get("preset") {
            Some(v) => Some(
                serde_json::from_value::<Preset>(v.clone())
                    .map_err(|e| CliError::new(ErrorKind::InvalidConfig, format!("preset: {e}")))?,
            ),
            None => None,
        };
        let preset = preset.or(from_file).unwrap_or_default();
        let mut merged = serde_json::to_value(PipelineConfig::preset(preset)).expect("config serializes");
        merge(&mut merged, user);
        merged["preset"] = serde_json::to_value(preset).expect("preset serializes");
        let cfg: PipelineConfig = serde_json::from_value(merged)
            .map_err(|e| CliError::new(ErrorKind::InvalidConfig, format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |e: String| CliError::new(ErrorKind::InvalidConfig, e);
        if !(self.tau_km > 0.0 && self.tau_km.is_finite()) {
            return Err(invalid(format!("tau_km must be positive, got {}", self.tau_km)).into());
        }
        self.builder.validate().map_err(|e| invalid(e.to_string()))?;
        self.index_optics.validate().map_err(|e| invalid(e.to_string()))?;
        self.refine.validate().map_err(|e| invalid(e.to_string()))?;
        self.loss.validate().map_err(|e| invalid(e.to_string()))?;
        self.captions.validate().map_err(|e| invalid(e.to_string()))?;
        Ok(())
    }

    /// Output directory: flag, then config, then `geocell-out`.
    pub fn output_dir(&self, flag: Option<&Path>) -> PathBuf {
        flag.map(Path::to_path_buf)
            .or_else(|| self.paths.output_dir.clone())
            .unwrap_or_else(|| PathBuf::from("geocell-out"))
    }
}

/// JSON merge: objects merge key by key, everything else replaces.
fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                merge(b.entry(k).or_insert(Value::Null), v);
            }
        }
        (b, p) => *b = p,
    }
}

/// Path from a flag, else from the config, else a missing-input error.
pub fn require_path(flag: Option<&Path>, config: Option<&PathBuf>, what: &str) -> Result<PathBuf> {
    flag.map(Path::to_path_buf)
        .or_else(|| config.cloned())
        .ok_or_else(|| CliError::new(ErrorKind::UnresolvedInput, format!("no {what} path given")).into())
}
