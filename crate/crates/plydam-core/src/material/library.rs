//! Material library file: JSON records with unit-annotated keys.
//!
//! The bundled default library carries the PW and UD laminae, the metallic
//! materials and the Nomex core data. Core and metal records are carried as
//! data only; the damage pipeline consumes lamina records.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    FatigueModeParams, FractureToughness, LaminaElastic, LaminaKind, LaminaMaterial,
    LaminaStrength, Mode, G_CM3_TO_T_MM3,
};
use crate::error::{Error, Result};

const DEFAULT_LIBRARY_JSON: &str = include_str!("../../assets/default_materials.json");

#[derive(Debug, Clone, Serialize, Deserialize)]
struct LibraryFile {
    materials: Vec<RecordFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type")]
enum RecordFile {
    #[serde(rename = "lamina")]
    Lamina(LaminaFile),
    #[serde(rename = "isotropic")]
    Isotropic(IsotropicFile),
    #[serde(rename = "orthotropic_core")]
    OrthotropicCore(CoreFile),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct LaminaFile {
    name: String,
    kind: String,
    #[serde(rename = "elastic_MPa")]
    elastic_mpa: ElasticFile,
    poisson: PoissonFile,
    rho_g_cm3: f64,
    #[serde(rename = "strength_MPa")]
    strength_mpa: StrengthFile,
    #[serde(rename = "fracture_energy_kJ_m2")]
    fracture_energy_kj_m2: ToughnessFile,
    fatigue: BTreeMap<String, FatigueFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[allow(non_snake_case)]
struct ElasticFile {
    E11: f64,
    E22: f64,
    E33: f64,
    G12: f64,
    G13: f64,
    G23: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PoissonFile {
    nu12: f64,
    nu13: f64,
    nu23: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[allow(non_snake_case)]
struct StrengthFile {
    X1t: f64,
    X1c: f64,
    X2t: f64,
    X2c: f64,
    X3t: f64,
    X3c: f64,
    X12: f64,
    X13: f64,
    X23: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[allow(non_snake_case)]
struct ToughnessFile {
    G11t: f64,
    G11c: f64,
    G22t: f64,
    G22c: f64,
    G33t: f64,
    G33c: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct FatigueFile {
    pub r0: f64,
    pub C: f64,
    pub p: f64,
    pub q: f64,
    /// Endurance limit. Optional in the file; a missing value defaults to 0
    /// with a warning (no limits are tabulated for the UD lamina).
    #[serde(rename = "S0_MPa", skip_serializing_if = "Option::is_none")]
    pub s0_mpa: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct IsotropicFile {
    name: String,
    #[serde(rename = "E_MPa")]
    e_mpa: f64,
    nu: f64,
    rho_g_cm3: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CoreFile {
    name: String,
    #[serde(rename = "elastic_MPa")]
    elastic_mpa: ElasticFile,
    nu: f64,
    rho_g_cm3: f64,
}

/// Isotropic record (metallic materials), carried as data.
#[derive(Debug, Clone, PartialEq)]
pub struct IsotropicMaterial {
    pub name: String,
    pub e: f64,
    pub nu: f64,
    pub rho: f64,
}

/// Orthotropic elastic-only record (honeycomb core), carried as data.
#[derive(Debug, Clone, PartialEq)]
pub struct CoreMaterial {
    pub name: String,
    pub elastic: LaminaElastic,
}

/// Parsed material library with lamina lookup by name.
#[derive(Debug, Clone, Default)]
pub struct MaterialLibrary {
    laminae: BTreeMap<String, LaminaMaterial>,
    isotropics: BTreeMap<String, IsotropicMaterial>,
    cores: BTreeMap<String, CoreMaterial>,
}

impl MaterialLibrary {
    /// Parses a library from JSON text. Returns the library plus ingestion
    /// warnings (e.g. defaulted endurance limits).
    pub fn from_json(text: &str) -> Result<(Self, Vec<String>)> {
        let file: LibraryFile = serde_json::from_str(text)?;
        let mut lib = MaterialLibrary::default();
        let mut warnings = Vec::new();
        for record in file.materials {
            match record {
                RecordFile::Lamina(lam) => {
                    let mat = lamina_from_file(&lam, &mut warnings)?;
                    mat.validate()?;
                    if lib.laminae.insert(mat.name.clone(), mat).is_some() {
                        return Err(Error::Library(format!("duplicate lamina '{}'", lam.name)));
                    }
                }
                RecordFile::Isotropic(iso) => {
                    lib.isotropics.insert(
                        iso.name.clone(),
                        IsotropicMaterial {
                            name: iso.name,
                            e: iso.e_mpa,
                            nu: iso.nu,
                            rho: iso.rho_g_cm3 * G_CM3_TO_T_MM3,
                        },
                    );
                }
                RecordFile::OrthotropicCore(core) => {
                    lib.cores.insert(
                        core.name.clone(),
                        CoreMaterial {
                            name: core.name,
                            elastic: LaminaElastic {
                                e11: core.elastic_mpa.E11,
                                e22: core.elastic_mpa.E22,
                                e33: core.elastic_mpa.E33,
                                g12: core.elastic_mpa.G12,
                                g13: core.elastic_mpa.G13,
                                g23: core.elastic_mpa.G23,
                                nu12: core.nu,
                                nu13: core.nu,
                                nu23: core.nu,
                                rho: core.rho_g_cm3 * G_CM3_TO_T_MM3,
                            },
                        },
                    );
                }
            }
        }
        Ok((lib, warnings))
    }

    pub fn from_path(path: &Path) -> Result<(Self, Vec<String>)> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    /// The library bundled with the crate (PW/UD laminae, metals, Nomex).
    pub fn bundled() -> (Self, Vec<String>) {
        Self::from_json(DEFAULT_LIBRARY_JSON).expect("bundled library must parse")
    }

    pub fn lamina(&self, name: &str) -> Result<&LaminaMaterial> {
        self.laminae
            .get(name)
            .ok_or_else(|| Error::Library(format!("no lamina named '{name}'")))
    }

    pub fn laminae(&self) -> impl Iterator<Item = &LaminaMaterial> {
        self.laminae.values()
    }

    pub fn isotropic(&self, name: &str) -> Option<&IsotropicMaterial> {
        self.isotropics.get(name)
    }

    pub fn core(&self, name: &str) -> Option<&CoreMaterial> {
        self.cores.get(name)
    }

    pub fn insert_lamina(&mut self, mat: LaminaMaterial) {
        self.laminae.insert(mat.name.clone(), mat);
    }
}

fn lamina_from_file(lam: &LaminaFile, warnings: &mut Vec<String>) -> Result<LaminaMaterial> {
    let kind = match lam.kind.as_str() {
        "PW" => LaminaKind::Pw,
        "UD" => LaminaKind::Ud,
        other => {
            return Err(Error::Library(format!(
                "lamina '{}': kind must be PW or UD, got '{other}'",
                lam.name
            )))
        }
    };
    let elastic = LaminaElastic {
        e11: lam.elastic_mpa.E11,
        e22: lam.elastic_mpa.E22,
        e33: lam.elastic_mpa.E33,
        g12: lam.elastic_mpa.G12,
        g13: lam.elastic_mpa.G13,
        g23: lam.elastic_mpa.G23,
        nu12: lam.poisson.nu12,
        nu13: lam.poisson.nu13,
        nu23: lam.poisson.nu23,
        rho: lam.rho_g_cm3 * G_CM3_TO_T_MM3,
    };
    let strength = LaminaStrength {
        x1t: lam.strength_mpa.X1t,
        x1c: lam.strength_mpa.X1c,
        x2t: lam.strength_mpa.X2t,
        x2c: lam.strength_mpa.X2c,
        x3t: lam.strength_mpa.X3t,
        x3c: lam.strength_mpa.X3c,
        x12: lam.strength_mpa.X12,
        x13: lam.strength_mpa.X13,
        x23: lam.strength_mpa.X23,
    };
    let toughness = FractureToughness {
        g11t: lam.fracture_energy_kj_m2.G11t,
        g11c: lam.fracture_energy_kj_m2.G11c,
        g22t: lam.fracture_energy_kj_m2.G22t,
        g22c: lam.fracture_energy_kj_m2.G22c,
        g33t: lam.fracture_energy_kj_m2.G33t,
        g33c: lam.fracture_energy_kj_m2.G33c,
    };
    let mut fatigue: Vec<FatigueModeParams> = Vec::with_capacity(9);
    for mode in Mode::ALL {
        let entry = lam.fatigue.get(mode.label()).ok_or_else(|| {
            Error::Library(format!(
                "lamina '{}': missing fatigue entry for mode {}",
                lam.name,
                mode.label()
            ))
        })?;
        let s0 = match entry.s0_mpa {
            Some(v) => v,
            None => {
                warnings.push(format!(
                    "lamina '{}': no endurance limit for mode {}; defaulting S0 = 0 \
                     (every nonzero stress will degrade this mode)",
                    lam.name,
                    mode.label()
                ));
                0.0
            }
        };
        fatigue.push(FatigueModeParams {
            mode,
            c: entry.C,
            p: entry.p,
            q: entry.q,
            s0,
            r0: entry.r0,
        });
    }
    Ok(LaminaMaterial {
        name: lam.name.clone(),
        kind,
        elastic,
        strength,
        toughness,
        fatigue: fatigue.try_into().expect("nine modes"),
    })
}

/// Serializes a fitted fatigue-parameter map in the library file syntax, so
/// fit output can be pasted into a material record.
pub fn fatigue_map_to_json(params: &[FatigueModeParams]) -> String {
    let map: BTreeMap<String, FatigueFile> = params
        .iter()
        .map(|p| {
            (
                p.mode.label().to_string(),
                FatigueFile {
                    r0: p.r0,
                    C: p.c,
                    p: p.p,
                    q: p.q,
                    s0_mpa: Some(p.s0),
                },
            )
        })
        .collect();
    serde_json::to_string_pretty(&serde_json::json!({ "fatigue": map }))
        .expect("fatigue map serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn bundled_library_parses_and_carries_tables() {
        let (lib, warnings) = MaterialLibrary::bundled();
        let pw = lib.lamina("pw_lamina").unwrap();
        assert_eq!(pw.kind, LaminaKind::Pw);
        assert_relative_eq!(pw.elastic.e11, 56_970.0);
        assert_relative_eq!(pw.strength.x1t, 691.62);
        assert_relative_eq!(pw.toughness.g11t, 201.0);
        assert_relative_eq!(pw.fatigue(Mode::T1).s0, 501.56);
        assert_relative_eq!(pw.fatigue(Mode::C3).s0, 0.0);

        let ud = lib.lamina("ud_lamina").unwrap();
        assert_eq!(ud.kind, LaminaKind::Ud);
        assert_relative_eq!(ud.elastic.e11, 147_000.0);
        assert_relative_eq!(ud.elastic.rho, 1.6e-9);
        assert_relative_eq!(ud.fatigue(Mode::T1).c, 4.73e12);
        assert_relative_eq!(ud.fatigue(Mode::S23).q, 4.1);
        // The UD sheet tabulates no endurance limits; ingestion warns loudly.
        assert!(
            warnings.iter().filter(|w| w.contains("ud_lamina")).count() >= 9,
            "expected one warning per UD mode, got: {warnings:?}"
        );

        assert!(lib.isotropic("d6ac_steel").is_some());
        assert_relative_eq!(lib.core("nomex_core").unwrap().elastic.e33, 121.86);
    }

    #[test]
    fn missing_mode_is_an_error() {
        let text = r#"{"materials":[{"name":"x","type":"lamina","kind":"UD",
            "elastic_MPa":{"E11":1.0,"E22":1.0,"E33":1.0,"G12":1.0,"G13":1.0,"G23":1.0},
            "poisson":{"nu12":0.1,"nu13":0.1,"nu23":0.1},
            "rho_g_cm3":1.0,
            "strength_MPa":{"X1t":1,"X1c":1,"X2t":1,"X2c":1,"X3t":1,"X3c":1,"X12":1,"X13":1,"X23":1},
            "fracture_energy_kJ_m2":{"G11t":1,"G11c":1,"G22t":1,"G22c":1,"G33t":1,"G33c":1},
            "fatigue":{"1t":{"r0":0.1,"C":1.0,"p":-1.0,"q":1.0,"S0_MPa":0.0}}}]}"#;
        let err = MaterialLibrary::from_json(text).unwrap_err();
        assert!(err.to_string().contains("missing fatigue entry"));
    }

    #[test]
    fn fatigue_map_round_trips_through_json() {
        let (lib, _) = MaterialLibrary::bundled();
        let pw = lib.lamina("pw_lamina").unwrap();
        let text = fatigue_map_to_json(&pw.fatigue);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_relative_eq!(v["fatigue"]["1t"]["C"].as_f64().unwrap(), 7.76e8);
    }
}
