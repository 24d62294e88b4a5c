//! Run configuration: structured text with explicit units in key names.
//! All paths resolve relative to the config file's directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use plydam_core::error::{Error, Result};
use plydam_core::fem::mesh::PlateSpec;
use plydam_core::fem::model::EdgeSupport;
use plydam_core::pipeline::TransferMode;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Material library path; omit for the bundled library.
    #[serde(default)]
    pub material_library: Option<PathBuf>,
    /// Mesh file, or a plate generator spec.
    #[serde(default)]
    pub mesh: Option<PathBuf>,
    #[serde(default)]
    pub plate: Option<PlateConfig>,
    #[serde(default = "default_supports")]
    pub supports: EdgeSupport,
    #[serde(default)]
    pub spectrum_csv: Option<PathBuf>,
    #[serde(default)]
    pub spectrum_descriptor: Option<PathBuf>,
    #[serde(default)]
    pub stages: Vec<Stage>,
    #[serde(default)]
    pub static_load: Option<StaticLoadConfig>,
    #[serde(default)]
    pub prefatigue: Option<PrefatigueConfig>,
    #[serde(default)]
    pub lvi: Option<LviConfig>,
    #[serde(default)]
    pub fatigue: Option<FatigueConfig>,
    /// 0 applies whole blocks in one shot; 1 is cycle-by-cycle.
    #[serde(default)]
    pub block_max_cycles: f64,
    #[serde(default)]
    pub clamp_snap_back: bool,
    #[serde(default = "default_transfer")]
    pub transfer: TransferMode,
    pub output_dir: PathBuf,
    /// 0 lets the worker pool size itself.
    #[serde(default)]
    pub workers: usize,
}

fn default_supports() -> EdgeSupport {
    EdgeSupport::Clamped
}

fn default_transfer() -> TransferMode {
    TransferMode::PlyMax
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Static,
    Prefatigue,
    Lvi,
    Fatigue,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlateConfig {
    pub stacking: String,
    pub span_x_mm: f64,
    pub span_y_mm: f64,
    pub element_mm: f64,
    #[serde(default = "default_pw")]
    pub pw_material: String,
    #[serde(default = "default_ud")]
    pub ud_material: String,
    #[serde(default = "default_pw_t")]
    pub pw_thickness_mm: f64,
    #[serde(default = "default_ud_t")]
    pub ud_thickness_mm: f64,
}

fn default_pw() -> String {
    "pw_lamina".into()
}
fn default_ud() -> String {
    "ud_lamina".into()
}
fn default_pw_t() -> f64 {
    0.314
}
fn default_ud_t() -> f64 {
    0.166
}

impl PlateConfig {
    pub fn to_spec(&self) -> PlateSpec {
        PlateSpec {
            stacking: self.stacking.clone(),
            span_x_mm: self.span_x_mm,
            span_y_mm: self.span_y_mm,
            element_mm: self.element_mm,
            pw_material: self.pw_material.clone(),
            ud_material: self.ud_material.clone(),
            pw_thickness_mm: self.pw_thickness_mm,
            ud_thickness_mm: self.ud_thickness_mm,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StaticLoadConfig {
    pub node_set: String,
    pub direction: [f64; 3],
    #[serde(rename = "force_N")]
    pub force_n: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrefatigueConfig {
    pub n_spectra: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LviConfig {
    #[serde(rename = "energy_J")]
    pub energy_j: f64,
    #[serde(default = "default_mass")]
    pub impactor_mass_kg: f64,
    #[serde(default = "default_diameter")]
    pub impactor_diameter_mm: f64,
    #[serde(default = "default_friction")]
    pub friction: f64,
    #[serde(default = "default_duration")]
    pub duration_s: f64,
    #[serde(default = "default_ring_down")]
    pub ring_down_s: f64,
    #[serde(default = "default_footprint")]
    pub footprint_threshold: f64,
    #[serde(default)]
    pub frame_every_steps: usize,
    #[serde(default = "default_ledger_every")]
    pub ledger_every_steps: usize,
}

fn default_mass() -> f64 {
    5.61
}
fn default_diameter() -> f64 {
    16.0
}
fn default_friction() -> f64 {
    0.3
}
fn default_duration() -> f64 {
    0.02
}
fn default_ring_down() -> f64 {
    5.0e-4
}
fn default_footprint() -> f64 {
    0.5
}
fn default_ledger_every() -> usize {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FatigueConfig {
    pub max_spectra: usize,
    #[serde(default)]
    pub growth_new_elements: usize,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<(RunConfig, PathBuf)> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut config: RunConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path
            .parent()
            .map(|p| p.to_path_buf())
            .unwrap_or_else(|| PathBuf::from("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&p);
            }
        };
        if let Some(p) = config.material_library.as_mut() {
            resolve(p);
        }
        if let Some(p) = config.mesh.as_mut() {
            resolve(p);
        }
        if let Some(p) = config.spectrum_csv.as_mut() {
            resolve(p);
        }
        if let Some(p) = config.spectrum_descriptor.as_mut() {
            resolve(p);
        }
        resolve(&mut config.output_dir);
        config.validate()?;
        Ok((config, base))
    }

    pub fn validate(&self) -> Result<()> {
        if self.mesh.is_none() && self.plate.is_none() {
            return Err(Error::Config("either 'mesh' or 'plate' is required".into()));
        }
        if self.mesh.is_some() && self.plate.is_some() {
            return Err(Error::Config("'mesh' and 'plate' are exclusive".into()));
        }
        for stage in &self.stages {
            match stage {
                Stage::Static if self.static_load.is_none() => {
                    return Err(Error::Config("static stage needs 'static_load'".into()))
                }
                Stage::Prefatigue if self.prefatigue.is_none() => {
                    return Err(Error::Config("prefatigue stage needs 'prefatigue'".into()))
                }
                Stage::Lvi if self.lvi.is_none() => {
                    return Err(Error::Config("lvi stage needs 'lvi'".into()))
                }
                Stage::Fatigue if self.fatigue.is_none() => {
                    return Err(Error::Config("fatigue stage needs 'fatigue'".into()))
                }
                _ => {}
            }
        }
        let needs_spectrum = self
            .stages
            .iter()
            .any(|s| matches!(s, Stage::Prefatigue | Stage::Fatigue));
        if needs_spectrum && (self.spectrum_csv.is_none() || self.spectrum_descriptor.is_none()) {
            return Err(Error::Config(
                "fatigue stages need 'spectrum_csv' and 'spectrum_descriptor'".into(),
            ));
        }
        for p in [&self.material_library, &self.mesh, &self.spectrum_csv, &self.spectrum_descriptor]
            .into_iter()
            .flatten()
        {
            if !p.exists() {
                return Err(Error::Config(format!("referenced file missing: {}", p.display())));
            }
        }
        Ok(())
    }
}
