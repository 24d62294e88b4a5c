//! Model definition (mesh + constraints + impactor) and the assembled
//! engine data shared by the static and explicit solvers.

use std::collections::HashMap;

use nalgebra::Matrix6;
use serde::{Deserialize, Serialize};

use super::element::{BMatrix, ElementClass, ElementStiffness};
use super::mesh::Mesh;
use crate::error::{Error, Result};
use crate::fatigue::ResidualStrengthState;
use crate::impact::{LviDamageState, SofteningBounds};
use crate::material::{
    build_stiffness, damaged_stiffness, rotate_stiffness, DamageVector, LaminaMaterial,
    LaminaStrength,
};

/// Analytic rigid sphere impactor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidImpactor {
    pub radius_mm: f64,
    /// Mass in tonnes (kg / 1000).
    pub mass_t: f64,
    /// Velocity (mm/s).
    pub velocity: [f64; 3],
    /// Centre position (mm).
    pub position: [f64; 3],
}

impl RigidImpactor {
    /// Impactor dropped normal to the laminate with the given kinetic
    /// energy; the centre starts just touching `surface_z` at (x, y).
    pub fn normal_impact(
        diameter_mm: f64,
        mass_kg: f64,
        energy_j: f64,
        x: f64,
        y: f64,
        surface_z: f64,
    ) -> Self {
        let mass_t = mass_kg * 1.0e-3;
        let energy_nmm = energy_j * 1.0e3;
        let speed = (2.0 * energy_nmm / mass_t).sqrt();
        RigidImpactor {
            radius_mm: 0.5 * diameter_mm,
            mass_t,
            velocity: [0.0, 0.0, -speed],
            position: [x, y, surface_z + 0.5 * diameter_mm],
        }
    }

    pub fn kinetic_energy(&self) -> f64 {
        let v2 = self.velocity.iter().map(|v| v * v).sum::<f64>();
        0.5 * self.mass_t * v2
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius_mm > 0.0) || !(self.mass_t > 0.0) {
            return Err(Error::Model(
                "impactor radius and mass must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Edge support style for generated plates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeSupport {
    /// All side-face nodes fixed in every direction.
    Clamped,
    /// Side-face nodes held in the normal (z) direction only, plus minimal
    /// in-plane restraints on the bottom corners.
    SimplySupported,
}

/// Mesh plus boundary conditions and optional impactor.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Model {
    pub mesh: Mesh,
    /// Per-dof fixed flags (3 per node).
    pub fixed: Vec<bool>,
    /// Nonzero prescribed displacements (global dof -> value); prescribed
    /// dofs are also fixed.
    pub prescribed: Vec<(usize, f64)>,
    pub impactor: Option<RigidImpactor>,
}

impl Model {
    pub fn new(mesh: Mesh) -> Model {
        let ndof = mesh.nodes.len() * 3;
        Model {
            mesh,
            fixed: vec![false; ndof],
            prescribed: Vec::new(),
            impactor: None,
        }
    }

    pub fn fix_set(&mut self, set: &str, mask: [bool; 3]) -> Result<()> {
        let nodes = self.mesh.node_set(set)?.to_vec();
        for n in nodes {
            for k in 0..3 {
                if mask[k] {
                    self.fixed[3 * n + k] = true;
                }
            }
        }
        Ok(())
    }

    pub fn prescribe(&mut self, node: usize, dof: usize, value: f64) {
        let g = 3 * node + dof;
        self.fixed[g] = true;
        self.prescribed.push((g, value));
    }

    /// Applies the plate edge support.
    pub fn support_edges(&mut self, support: EdgeSupport) -> Result<()> {
        match support {
            EdgeSupport::Clamped => self.fix_set("EDGES", [true, true, true]),
            EdgeSupport::SimplySupported => {
                self.fix_set("EDGES", [false, false, true])?;
                // Minimal in-plane restraint: pin one corner, guide another.
                let x0 = self.mesh.node_set("X0")?.to_vec();
                let y0 = self.mesh.node_set("Y0")?;
                let corner = x0.iter().copied().find(|n| y0.contains(n));
                if let Some(c) = corner {
                    self.fixed[3 * c] = true;
                    self.fixed[3 * c + 1] = true;
                }
                if let Some(&c2) = x0.iter().find(|n| !y0.contains(n)) {
                    self.fixed[3 * c2] = true;
                }
                Ok(())
            }
        }
    }

    pub fn n_dof(&self) -> usize {
        self.mesh.nodes.len() * 3
    }

    /// Count of constrained dofs.
    pub fn n_fixed(&self) -> usize {
        self.fixed.iter().filter(|&&f| f).count()
    }
}

/// Working material data per ply: the active material (strengths may be
/// degraded by damage transfer) and the pristine strengths for reporting.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlyMaterials {
    pub per_ply: Vec<LaminaMaterial>,
    pub pristine_strength: Vec<LaminaStrength>,
}

impl PlyMaterials {
    pub fn uniform(mesh: &Mesh, lookup: impl Fn(&str) -> Result<LaminaMaterial>) -> Result<Self> {
        let nply = mesh.ply_count();
        let mut per_ply = Vec::with_capacity(nply);
        for p in 0..nply {
            let elem = mesh
                .elements
                .iter()
                .find(|e| e.ply == p)
                .ok_or_else(|| Error::Model(format!("no elements on ply {p}")))?;
            per_ply.push(lookup(&elem.material)?);
        }
        let pristine_strength = per_ply.iter().map(|m| m.strength).collect();
        Ok(PlyMaterials {
            per_ply,
            pristine_strength,
        })
    }
}

/// Shared data for all elements with the same geometry class on one ply.
pub struct ElementKit {
    pub ply: usize,
    pub class: u32,
    /// Pristine element stiffness, global frame.
    pub ke: ElementStiffness,
    /// Ply-frame strain-displacement matrices at the 8 Gauss points.
    pub b_ply: Vec<BMatrix>,
    pub b_ply_centroid: BMatrix,
    /// Pristine ply-frame constitutive matrix.
    pub c_ply: Matrix6<f64>,
    /// Softening bounds, or the snap-back message. Only the explicit stage
    /// consumes these; statics run regardless.
    pub softening: std::result::Result<SofteningBounds, String>,
    pub weight: Vec<f64>,
    pub volume: f64,
    pub l_star: f64,
    pub area_xy: f64,
    /// Dilatational wave speed estimate (mm/s).
    pub wave_speed: f64,
    /// Exact element stability limit 2/omega_max (s) from the lumped-mass
    /// eigenvalue; tighter than l*/c for thin plies.
    pub dt_crit: f64,
}

/// Largest eigenvalue of M^-1 K via power iteration on the symmetrized
/// form; returns the critical time step 2/omega_max.
fn element_dt_crit(ke: &ElementStiffness, node_mass: &[f64; 8]) -> f64 {
    let mut inv_sqrt_m = [0.0f64; 24];
    for i in 0..8 {
        let m = node_mass[i].max(1e-300);
        let s = 1.0 / m.sqrt();
        inv_sqrt_m[3 * i] = s;
        inv_sqrt_m[3 * i + 1] = s;
        inv_sqrt_m[3 * i + 2] = s;
    }
    let mut v = [0.0f64; 24];
    let mut n0 = 0.0;
    for (i, x) in v.iter_mut().enumerate() {
        *x = 1.0 + (i as f64) * 0.1;
        n0 += *x * *x;
    }
    n0 = n0.sqrt();
    v.iter_mut().for_each(|x| *x /= n0);
    let mut lambda = 0.0f64;
    for _ in 0..80 {
        // w = D K D v with D = diag(1/sqrt(m))
        let mut dv = [0.0f64; 24];
        for i in 0..24 {
            dv[i] = v[i] * inv_sqrt_m[i];
        }
        let mut kv = [0.0f64; 24];
        for r in 0..24 {
            let mut s = 0.0;
            for c in 0..24 {
                s += ke[(r, c)] * dv[c];
            }
            kv[r] = s;
        }
        let mut w = [0.0f64; 24];
        let mut norm = 0.0;
        for i in 0..24 {
            w[i] = kv[i] * inv_sqrt_m[i];
            norm += w[i] * w[i];
        }
        norm = norm.sqrt();
        if norm == 0.0 {
            break;
        }
        let mut dot = 0.0;
        for i in 0..24 {
            dot += v[i] * w[i];
        }
        lambda = dot.max(lambda);
        for i in 0..24 {
            v[i] = w[i] / norm;
        }
    }
    if lambda <= 0.0 {
        return f64::INFINITY;
    }
    2.0 / lambda.sqrt()
}

/// Assembled, solver-ready model: element kits, lumped mass, dof maps.
pub struct Assembly {
    pub model: Model,
    pub plies: PlyMaterials,
    pub classes: Vec<ElementClass>,
    pub elem_class: Vec<u32>,
    pub kits: Vec<ElementKit>,
    pub elem_kit: Vec<u32>,
    /// Lumped nodal mass (tonne), same for all three dofs.
    pub mass: Vec<f64>,
    /// free_dof[g] = free index or -1 when fixed.
    pub free_dof: Vec<i32>,
    pub n_free: usize,
    pub warnings: Vec<String>,
}

impl Assembly {
    pub fn new(model: Model, plies: PlyMaterials, clamp_snap_back: bool) -> Result<Assembly> {
        model.mesh.validate()?;
        let nply = model.mesh.ply_count();
        if plies.per_ply.len() != nply {
            return Err(Error::Model(format!(
                "{} ply materials supplied for {} plies",
                plies.per_ply.len(),
                nply
            )));
        }
        let mut warnings = Vec::new();

        // Geometry classes.
        let mut classes: Vec<ElementClass> = Vec::new();
        let mut class_map: HashMap<[i64; 21], u32> = HashMap::new();
        let mut elem_class = Vec::with_capacity(model.mesh.elements.len());
        for e in &model.mesh.elements {
            let mut coords = [[0.0; 3]; 8];
            for (i, &n) in e.nodes.iter().enumerate() {
                coords[i] = model.mesh.nodes[n];
            }
            let sig = ElementClass::signature(&coords);
            let id = match class_map.get(&sig) {
                Some(&id) => id,
                None => {
                    let id = classes.len() as u32;
                    classes.push(ElementClass::new(&coords)?);
                    class_map.insert(sig, id);
                    id
                }
            };
            elem_class.push(id);
        }

        // Kits per (class, ply).
        let mut kits: Vec<ElementKit> = Vec::new();
        let mut kit_map: HashMap<(u32, usize), u32> = HashMap::new();
        let mut elem_kit = Vec::with_capacity(model.mesh.elements.len());
        for (e, &cls) in model.mesh.elements.iter().zip(&elem_class) {
            let key = (cls, e.ply);
            let id = match kit_map.get(&key) {
                Some(&id) => id,
                None => {
                    let id = kits.len() as u32;
                    let mat = &plies.per_ply[e.ply];
                    let class = &classes[cls as usize];
                    let c_ply = build_stiffness(&mat.elastic)?;
                    let c_global = rotate_stiffness(&c_ply, e.angle_deg);
                    let softening = match SofteningBounds::new(
                        mat,
                        &mat.strength,
                        class.l_star,
                        clamp_snap_back,
                    ) {
                        Ok((s, warns)) => {
                            for w in warns {
                                warnings.push(format!("ply {}: {w}", e.ply + 1));
                            }
                            Ok(s)
                        }
                        Err(err) => Err(format!("ply {}: {err}", e.ply + 1)),
                    };
                    // Upper bound on the dilatational speed from the
                    // constitutive diagonal.
                    let cmax = (0..3).map(|i| c_global[(i, i)]).fold(0.0, f64::max);
                    let wave_speed = (cmax / mat.elastic.rho).sqrt();
                    let ke = class.stiffness(&c_global);
                    let mut node_mass = [0.0f64; 8];
                    for (i, &ni) in class.node_integral.iter().enumerate() {
                        node_mass[i] = mat.elastic.rho * ni;
                    }
                    let dt_crit = element_dt_crit(&ke, &node_mass);
                    kits.push(ElementKit {
                        ply: e.ply,
                        class: cls,
                        ke,
                        b_ply: class.ply_b(e.angle_deg),
                        b_ply_centroid: class.ply_b_centroid(e.angle_deg),
                        c_ply,
                        softening,
                        weight: class.weight.clone(),
                        volume: class.volume,
                        l_star: class.l_star,
                        area_xy: class.area_xy,
                        wave_speed,
                        dt_crit,
                    });
                    kit_map.insert(key, id);
                    id
                }
            };
            elem_kit.push(id);
        }

        // Lumped mass.
        let mut mass = vec![0.0; model.mesh.nodes.len()];
        for (e, &cls) in model.mesh.elements.iter().zip(&elem_class) {
            let class = &classes[cls as usize];
            let rho = plies.per_ply[e.ply].elastic.rho;
            for (i, &n) in e.nodes.iter().enumerate() {
                mass[n] += rho * class.node_integral[i];
            }
        }

        // Free dof numbering.
        let mut free_dof = vec![-1i32; model.n_dof()];
        let mut n_free = 0usize;
        for (g, &fixed) in model.fixed.iter().enumerate() {
            if !fixed {
                free_dof[g] = n_free as i32;
                n_free += 1;
            }
        }

        Ok(Assembly {
            model,
            plies,
            classes,
            elem_class,
            kits,
            elem_kit,
            mass,
            free_dof,
            n_free,
            warnings,
        })
    }

    pub fn n_elements(&self) -> usize {
        self.model.mesh.elements.len()
    }

    pub fn n_points(&self) -> usize {
        self.n_elements() * 8
    }

    pub fn kit(&self, elem: usize) -> &ElementKit {
        &self.kits[self.elem_kit[elem] as usize]
    }

    pub fn material(&self, elem: usize) -> &LaminaMaterial {
        &self.plies.per_ply[self.model.mesh.elements[elem].ply]
    }

    /// Element stiffness with the current per-point damage, ply frame
    /// throughout (identical to the rotated global assembly).
    pub fn damaged_ke(&self, elem: usize, points: &[PointState]) -> Result<ElementStiffness> {
        let kit = self.kit(elem);
        let mat = self.material(elem);
        let mut k = ElementStiffness::zeros();
        for gp in 0..8 {
            let st = &points[elem * 8 + gp];
            let c = if st.damage.is_zero() {
                kit.c_ply
            } else {
                damaged_stiffness(&mat.elastic, &st.damage, mat.kind)?
            };
            let b = &kit.b_ply[gp];
            let cb = c * b;
            k.gemm_tr(kit.weight[gp], b, &cb, 1.0);
        }
        Ok((k + k.transpose()) * 0.5)
    }

    /// Smallest stable time increment over all kits: 0.9 times the lesser
    /// of the characteristic-length CFL l*/c_dil and the exact lumped-mass
    /// element eigenvalue bound (which governs for thin plies).
    pub fn material_dt(&self) -> f64 {
        let mut dt = f64::INFINITY;
        for kit in &self.kits {
            dt = dt.min(kit.l_star / kit.wave_speed).min(kit.dt_crit);
        }
        0.9 * dt
    }
}

/// Per-integration-point solution state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointState {
    pub damage: DamageVector,
    pub lvi: LviDamageState,
    pub rs: ResidualStrengthState,
    /// Fatigue-stage failure latches per criterion.
    pub fatigue_flags: [bool; 6],
}

/// The per-point state field of one analysis stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateField {
    pub points: Vec<PointState>,
    /// Bumped whenever applied damage changes (stiffness cache key).
    pub version: u64,
}

impl StateField {
    pub fn pristine(assembly: &Assembly) -> StateField {
        let mut points = Vec::with_capacity(assembly.n_points());
        for (e, _) in assembly.model.mesh.elements.iter().enumerate() {
            let kit = assembly.kit(e);
            let mat = assembly.material(e);
            let rs = ResidualStrengthState::pristine(mat);
            for _ in 0..8 {
                points.push(PointState {
                    damage: DamageVector::default(),
                    lvi: LviDamageState::new(kit.l_star),
                    rs: rs.clone(),
                    fatigue_flags: [false; 6],
                });
            }
        }
        StateField { points, version: 0 }
    }

    pub fn point(&self, elem: usize, gp: usize) -> &PointState {
        &self.points[elem * 8 + gp]
    }

    /// Whether any applied damage exists anywhere.
    pub fn any_damage(&self) -> bool {
        self.points.iter().any(|p| !p.damage.is_zero())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::mesh::{build_plate, PlateSpec};
    use crate::material::library::MaterialLibrary;
    use approx::assert_relative_eq;

    fn small_assembly() -> Assembly {
        let spec = PlateSpec::lam("[(±45)/0/(0/90)/0/(±45)]", 4.0, 4.0, 1.0);
        let mesh = build_plate(&spec).unwrap();
        let (lib, _) = MaterialLibrary::bundled();
        let plies = PlyMaterials::uniform(&mesh, |n| lib.lamina(n).cloned()).unwrap();
        let mut model = Model::new(mesh);
        model.support_edges(EdgeSupport::Clamped).unwrap();
        Assembly::new(model, plies, false).unwrap()
    }

    #[test]
    fn kits_are_shared_per_ply() {
        let asm = small_assembly();
        // One geometry class per distinct thickness, one kit per ply.
        assert_eq!(asm.classes.len(), 2);
        assert_eq!(asm.kits.len(), 5);
        assert_eq!(asm.elem_kit.len(), 80);
    }

    #[test]
    fn total_mass_matches_density_times_volume() {
        let asm = small_assembly();
        let total: f64 = asm.mass.iter().sum();
        // 4 x 4 mm plate, thickness 3*0.314 + 2*0.166 = 1.274 mm.
        let volume = 4.0 * 4.0 * 1.274;
        assert_relative_eq!(total, 1.6e-9 * volume, max_relative = 1e-9);
    }

    #[test]
    fn impactor_velocity_from_energy() {
        let imp = RigidImpactor::normal_impact(16.0, 5.61, 22.2, 0.0, 0.0, 1.274);
        let v = imp.velocity[2].abs();
        assert_relative_eq!(v, (2.0 * 22_200.0 / 5.61e-3f64).sqrt(), max_relative = 1e-12);
        // ~2.813 m/s.
        assert_relative_eq!(v / 1000.0, 2.813, max_relative = 1e-3);
        assert_relative_eq!(imp.kinetic_energy(), 22_200.0, max_relative = 1e-12);
    }

    #[test]
    fn stable_dt_is_sane_for_plate() {
        let asm = small_assembly();
        let dt = asm.material_dt();
        // UD ply elements: l* = 0.549 mm, c ~ 9.7e6 mm/s.
        assert!(dt > 1e-8 && dt < 1e-7, "dt = {dt}");
    }

    #[test]
    fn pristine_state_has_no_damage() {
        let asm = small_assembly();
        let state = StateField::pristine(&asm);
        assert_eq!(state.points.len(), asm.n_points());
        assert!(!state.any_damage());
    }
}
