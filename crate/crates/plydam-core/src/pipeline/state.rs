//! Versioned binary container for per-point stage state. Round-trips are
//! bit-exact; a mesh-hash mismatch on load is a hard error.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::fatigue::ResidualStrengthState;
use crate::fem::model::{PointState, StateField};
use crate::impact::LviDamageState;
use crate::material::DamageVector;

const MAGIC: &[u8; 4] = b"PDST";
const VERSION: u32 = 1;

/// Pipeline stage discriminator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageTag {
    PreFatigue,
    Lvi,
    Fatigue,
}

impl StageTag {
    fn to_byte(self) -> u8 {
        match self {
            StageTag::PreFatigue => 1,
            StageTag::Lvi => 2,
            StageTag::Fatigue => 3,
        }
    }

    fn from_byte(b: u8) -> Result<StageTag> {
        Ok(match b {
            1 => StageTag::PreFatigue,
            2 => StageTag::Lvi,
            3 => StageTag::Fatigue,
            other => return Err(Error::StageState(format!("unknown stage tag {other}"))),
        })
    }

    pub fn label(self) -> &'static str {
        match self {
            StageTag::PreFatigue => "prefatigue",
            StageTag::Lvi => "lvi",
            StageTag::Fatigue => "fatigue",
        }
    }
}

/// What has been applied to reach this state.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Provenance {
    /// True when the state comes straight from an untouched model.
    pub pristine: bool,
    /// Spectrum passes applied so far.
    pub spectra_applied: f64,
    /// Impact energy applied (J), when an impact stage has run.
    pub impact_energy_j: f64,
}

impl Provenance {
    pub fn pristine() -> Provenance {
        Provenance {
            pristine: true,
            spectra_applied: 0.0,
            impact_energy_j: 0.0,
        }
    }
}

/// Serialized per-point state plus stage bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct StageState {
    pub stage: StageTag,
    pub provenance: Provenance,
    pub mesh_hash: u64,
    pub field: StateField,
}

impl StageState {
    /// Enforces the stage ordering rule: an impact stage requires
    /// pre-fatigue provenance or an explicit pristine flag.
    pub fn check_ready_for_impact(&self) -> Result<()> {
        if self.stage == StageTag::PreFatigue || self.provenance.pristine {
            Ok(())
        } else {
            Err(Error::StageState(format!(
                "impact stage requires pre-fatigue provenance or a pristine state, got {}",
                self.stage.label()
            )))
        }
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&[self.stage.to_byte(), self.provenance.pristine as u8])?;
        w.write_all(&self.provenance.spectra_applied.to_le_bytes())?;
        w.write_all(&self.provenance.impact_energy_j.to_le_bytes())?;
        w.write_all(&self.mesh_hash.to_le_bytes())?;
        w.write_all(&self.field.version.to_le_bytes())?;
        w.write_all(&(self.field.points.len() as u64).to_le_bytes())?;
        for p in &self.field.points {
            write_point(w, p)?;
        }
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<StageState> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::StageState("bad magic; not a stage-state file".into()));
        }
        let version = read_u32(r)?;
        if version != VERSION {
            return Err(Error::StageState(format!(
                "unsupported stage-state version {version}"
            )));
        }
        let mut two = [0u8; 2];
        r.read_exact(&mut two)?;
        let stage = StageTag::from_byte(two[0])?;
        let pristine = two[1] != 0;
        let spectra_applied = read_f64(r)?;
        let impact_energy_j = read_f64(r)?;
        let mesh_hash = read_u64(r)?;
        let field_version = read_u64(r)?;
        let n = read_u64(r)? as usize;
        let mut points = Vec::with_capacity(n);
        for _ in 0..n {
            points.push(read_point(r)?);
        }
        Ok(StageState {
            stage,
            provenance: Provenance {
                pristine,
                spectra_applied,
                impact_energy_j,
            },
            mesh_hash,
            field: StateField {
                points,
                version: field_version,
            },
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        let mut buf = Vec::new();
        self.write_to(&mut buf)?;
        std::fs::write(path, buf)?;
        Ok(())
    }

    /// Loads and checks the mesh pairing.
    pub fn load(path: &Path, expected_mesh_hash: u64) -> Result<StageState> {
        let data = std::fs::read(path)?;
        let state = Self::read_from(&mut data.as_slice())?;
        if state.mesh_hash != expected_mesh_hash {
            return Err(Error::StageState(format!(
                "mesh hash mismatch: state file carries {:#018x}, model is {:#018x}",
                state.mesh_hash, expected_mesh_hash
            )));
        }
        Ok(state)
    }
}

fn write_point(w: &mut impl Write, p: &PointState) -> Result<()> {
    for v in p.damage.components() {
        w.write_all(&v.to_le_bytes())?;
    }
    for v in p.lvi.d {
        w.write_all(&v.to_le_bytes())?;
    }
    let mut flags = [0u8; 6];
    for (i, &a) in p.lvi.activated.iter().enumerate() {
        flags[i] = a as u8;
    }
    w.write_all(&flags)?;
    for v in p.lvi.max_strain {
        w.write_all(&v.to_le_bytes())?;
    }
    w.write_all(&p.lvi.l_star.to_le_bytes())?;
    let rs = rs_raw(&p.rs);
    for arr in rs {
        for v in arr {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    let mut ff = [0u8; 6];
    for (i, &a) in p.fatigue_flags.iter().enumerate() {
        ff[i] = a as u8;
    }
    w.write_all(&ff)?;
    Ok(())
}

fn read_point(r: &mut impl Read) -> Result<PointState> {
    let mut damage = DamageVector::default();
    let d = read_f64s::<6>(r)?;
    damage.d1t = d[0];
    damage.d1c = d[1];
    damage.d2t = d[2];
    damage.d2c = d[3];
    damage.d3t = d[4];
    damage.d3c = d[5];
    let lvi_d = read_f64s::<6>(r)?;
    let mut flags = [0u8; 6];
    r.read_exact(&mut flags)?;
    let max_strain = read_f64s::<6>(r)?;
    let l_star = read_f64(r)?;
    let mut lvi = LviDamageState::new(l_star);
    lvi.d = lvi_d;
    lvi.max_strain = max_strain;
    for (i, f) in flags.iter().enumerate() {
        lvi.activated[i] = *f != 0;
    }
    let mut raw = [[0.0f64; 9]; 6];
    for arr in raw.iter_mut() {
        *arr = read_f64s::<9>(r)?;
    }
    let rs = rs_from_raw(raw);
    let mut ff = [0u8; 6];
    r.read_exact(&mut ff)?;
    let mut fatigue_flags = [false; 6];
    for (i, f) in ff.iter().enumerate() {
        fatigue_flags[i] = *f != 0;
    }
    Ok(PointState {
        damage,
        lvi,
        rs,
        fatigue_flags,
    })
}

fn rs_raw(rs: &ResidualStrengthState) -> [[f64; 9]; 6] {
    // Field-order serialization through serde_json would lose bit
    // exactness; go through the binary-stable accessor instead.
    rs.raw_parts()
}

fn rs_from_raw(raw: [[f64; 9]; 6]) -> ResidualStrengthState {
    ResidualStrengthState::from_raw_parts(raw)
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

fn read_f64s<const N: usize>(r: &mut impl Read) -> Result<[f64; N]> {
    let mut out = [0.0; N];
    for v in out.iter_mut() {
        *v = read_f64(r)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::mesh::{build_plate, PlateSpec};
    use crate::fem::model::{Assembly, Model, PlyMaterials};
    use crate::material::library::MaterialLibrary;
    use crate::material::Mode;

    fn assembly() -> Assembly {
        let spec = PlateSpec::lam("[(±45)/0/(0/90)/0/(±45)]", 2.0, 2.0, 1.0);
        let mesh = build_plate(&spec).unwrap();
        let (lib, _) = MaterialLibrary::bundled();
        let plies = PlyMaterials::uniform(&mesh, |n| lib.lamina(n).cloned()).unwrap();
        Assembly::new(Model::new(mesh), plies, true).unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let asm = assembly();
        let mut field = StateField::pristine(&asm);
        // Dirty the state with odd values.
        field.points[3].damage.d2t = 0.4567890123456789;
        field.points[3].lvi.d[2] = 0.25;
        field.points[3].lvi.activated[2] = true;
        field.points[3].lvi.max_strain[2] = 1.0e-3 + 1.0e-17;
        field.points[7].fatigue_flags[1] = true;
        // Point 40 sits on the UD ply; degrade it below its strength.
        let ud = MaterialLibrary::bundled().0.lamina("ud_lamina").unwrap().clone();
        crate::fatigue::degrade(
            &mut field.points[40].rs,
            Mode::T1,
            1500.0,
            ud.fatigue(Mode::T1),
            37.0,
        )
        .unwrap();
        field.version = 42;
        let state = StageState {
            stage: StageTag::Lvi,
            provenance: Provenance {
                pristine: false,
                spectra_applied: 48.0,
                impact_energy_j: 22.2,
            },
            mesh_hash: asm.model.mesh.content_hash(),
            field,
        };
        let mut buf = Vec::new();
        state.write_to(&mut buf).unwrap();
        let back = StageState::read_from(&mut buf.as_slice()).unwrap();
        assert_eq!(state, back);
        // Bit-exactness of a representative float.
        assert_eq!(
            state.field.points[40].rs.residual(Mode::T1).to_bits(),
            back.field.points[40].rs.residual(Mode::T1).to_bits()
        );
        // Serialize the round-tripped state again: identical bytes.
        let mut buf2 = Vec::new();
        back.write_to(&mut buf2).unwrap();
        assert_eq!(buf, buf2);
    }

    #[test]
    fn mesh_hash_mismatch_is_fatal() {
        let asm = assembly();
        let state = StageState {
            stage: StageTag::PreFatigue,
            provenance: Provenance::pristine(),
            mesh_hash: 1,
            field: StateField::pristine(&asm),
        };
        let dir = std::env::temp_dir().join("plydam-state-test");
        let path = dir.join("state.pdst");
        state.save(&path).unwrap();
        let err = StageState::load(&path, 2).unwrap_err();
        assert!(err.to_string().contains("mesh hash mismatch"));
        assert!(StageState::load(&path, 1).is_ok());
        let _ = std::fs::remove_dir_all(&dir);
    }

    #[test]
    fn stage_ordering_is_enforced() {
        let asm = assembly();
        let mut state = StageState {
            stage: StageTag::Fatigue,
            provenance: Provenance {
                pristine: false,
                spectra_applied: 10.0,
                impact_energy_j: 5.0,
            },
            mesh_hash: 0,
            field: StateField::pristine(&asm),
        };
        assert!(state.check_ready_for_impact().is_err());
        state.stage = StageTag::PreFatigue;
        assert!(state.check_ready_for_impact().is_ok());
    }
}
