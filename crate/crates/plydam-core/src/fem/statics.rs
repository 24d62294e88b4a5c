//! Implicit linear statics on the assembled model: per-cycle equilibrium
//! solves for the fatigue stages, the patch/cantilever verification path,
//! and ply-frame stress recovery.

use nalgebra::Vector6;
use rayon::prelude::*;

use super::element::gather;
use super::model::{Assembly, PointState, StateField};
use super::sparse::{pcg, Csr, Preconditioner};
use crate::error::{Error, Result};
use crate::material::damaged_stiffness;

/// Relative equilibrium residual the solver enforces.
pub const STATIC_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct StaticSolution {
    /// Full displacement vector (3 per node), prescribed values included.
    pub u: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

/// Cached stiffness and preconditioner, refilled when the damage version
/// changes (the sparsity pattern is fixed by the mesh).
pub struct StaticSolver {
    csr: Csr,
    precon: Option<Preconditioner>,
    rhs_fix: Vec<f64>,
    built_version: Option<u64>,
    max_iter: usize,
}

impl StaticSolver {
    pub fn new(assembly: &Assembly) -> StaticSolver {
        // Free-dof sparsity from node adjacency.
        let n_free = assembly.n_free;
        let mut cols: Vec<Vec<u32>> = vec![Vec::new(); n_free];
        for e in &assembly.model.mesh.elements {
            for &ni in &e.nodes {
                for ki in 0..3 {
                    let gi = 3 * ni + ki;
                    let fi = assembly.free_dof[gi];
                    if fi < 0 {
                        continue;
                    }
                    let row = &mut cols[fi as usize];
                    for &nj in &e.nodes {
                        for kj in 0..3 {
                            let gj = 3 * nj + kj;
                            let fj = assembly.free_dof[gj];
                            if fj >= 0 {
                                row.push(fj as u32);
                            }
                        }
                    }
                }
            }
        }
        for row in &mut cols {
            row.sort_unstable();
            row.dedup();
        }
        StaticSolver {
            csr: Csr::from_pattern(cols),
            precon: None,
            rhs_fix: vec![0.0; assembly.n_free],
            built_version: None,
            max_iter: 200_000,
        }
    }

    /// Refills the stiffness and preconditioner for the current damage
    /// state if needed.
    pub fn ensure_built(&mut self, assembly: &Assembly, state: &StateField) -> Result<()> {
        if self.built_version == Some(state.version) {
            return Ok(());
        }
        let csr = &mut self.csr;
        csr.zero_values();
        self.rhs_fix.iter_mut().for_each(|v| *v = 0.0);

        // Prescribed displacement values by global dof.
        let mut u_presc = vec![0.0; assembly.model.n_dof()];
        for &(g, v) in &assembly.model.prescribed {
            u_presc[g] = v;
        }

        for (e, elem) in assembly.model.mesh.elements.iter().enumerate() {
            let damaged = (0..8).any(|gp| !state.points[e * 8 + gp].damage.is_zero());
            let ke_storage;
            let ke = if damaged {
                ke_storage = assembly.damaged_ke(e, &state.points)?;
                &ke_storage
            } else {
                &assembly.kit(e).ke
            };
            for (li, &ni) in elem.nodes.iter().enumerate() {
                for ki in 0..3 {
                    let gi = 3 * ni + ki;
                    let fi = assembly.free_dof[gi];
                    if fi < 0 {
                        continue;
                    }
                    for (lj, &nj) in elem.nodes.iter().enumerate() {
                        for kj in 0..3 {
                            let gj = 3 * nj + kj;
                            let fj = assembly.free_dof[gj];
                            let kij = ke[(3 * li + ki, 3 * lj + kj)];
                            if fj >= 0 {
                                csr.add(fi as usize, fj as usize, kij);
                            } else if u_presc[gj] != 0.0 {
                                self.rhs_fix[fi as usize] -= kij * u_presc[gj];
                            }
                        }
                    }
                }
            }
        }
        self.precon = Some(Preconditioner::build(&self.csr));
        self.built_version = Some(state.version);
        Ok(())
    }

    /// Solves K u = f for the applied global force vector (length 3n).
    /// `warm` optionally seeds the iteration with a previous full solution.
    pub fn solve(
        &mut self,
        assembly: &Assembly,
        state: &StateField,
        f_global: &[f64],
        warm: Option<&[f64]>,
    ) -> Result<StaticSolution> {
        if assembly.n_free == assembly.model.n_dof() {
            return Err(Error::Singular(
                "tx, ty, tz, rx, ry, rz (no constraints at all)".into(),
            ));
        }
        self.ensure_built(assembly, state)?;
        let csr = &self.csr;
        let precon = self.precon.as_ref().unwrap();

        let mut b = vec![0.0; assembly.n_free];
        for g in 0..assembly.model.n_dof() {
            let fi = assembly.free_dof[g];
            if fi >= 0 {
                b[fi as usize] = f_global[g] + self.rhs_fix[fi as usize];
            }
        }
        let mut x = vec![0.0; assembly.n_free];
        if let Some(w) = warm {
            for g in 0..assembly.model.n_dof() {
                let fi = assembly.free_dof[g];
                if fi >= 0 {
                    x[fi as usize] = w[g];
                }
            }
        }
        let outcome = match pcg(csr, precon, &b, &mut x, STATIC_TOL, self.max_iter) {
            Ok(o) => o,
            Err(Error::Singular(_)) | Err(Error::NoConvergence { .. }) => {
                return Err(self.rigid_body_diagnostic(assembly, csr));
            }
            Err(e) => return Err(e),
        };

        let mut u = vec![0.0; assembly.model.n_dof()];
        for g in 0..assembly.model.n_dof() {
            let fi = assembly.free_dof[g];
            if fi >= 0 {
                u[g] = x[fi as usize];
            }
        }
        for &(g, v) in &assembly.model.prescribed {
            u[g] = v;
        }
        Ok(StaticSolution {
            u,
            iterations: outcome.iterations,
            residual: outcome.residual,
        })
    }

    /// Names the rigid-body modes the constraints fail to suppress.
    fn rigid_body_diagnostic(&self, assembly: &Assembly, csr: &Csr) -> Error {
        let nodes = &assembly.model.mesh.nodes;
        let n = nodes.len();
        let mut centroid = [0.0; 3];
        for p in nodes.iter() {
            for k in 0..3 {
                centroid[k] += p[k];
            }
        }
        for c in centroid.iter_mut() {
            *c /= n as f64;
        }
        let mode_names = ["tx", "ty", "tz", "rx", "ry", "rz"];
        let mut loose = Vec::new();
        let kmax = csr.vals.iter().fold(0.0f64, |a, &v| a.max(v.abs())).max(1e-30);
        for (m, name) in mode_names.iter().enumerate() {
            let mut v = vec![0.0; assembly.n_free];
            for (ni, p) in nodes.iter().enumerate() {
                let rel = [p[0] - centroid[0], p[1] - centroid[1], p[2] - centroid[2]];
                let disp = match m {
                    0 => [1.0, 0.0, 0.0],
                    1 => [0.0, 1.0, 0.0],
                    2 => [0.0, 0.0, 1.0],
                    3 => [0.0, -rel[2], rel[1]],
                    4 => [rel[2], 0.0, -rel[0]],
                    _ => [-rel[1], rel[0], 0.0],
                };
                for k in 0..3 {
                    let fi = assembly.free_dof[3 * ni + k];
                    if fi >= 0 {
                        v[fi as usize] = disp[k];
                    }
                }
            }
            let vmax = v.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
            if vmax == 0.0 {
                continue;
            }
            let mut q = vec![0.0; assembly.n_free];
            csr.mul(&v, &mut q);
            let qmax = q.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
            if qmax <= 1e-8 * kmax * vmax {
                loose.push(*name);
            }
        }
        if loose.is_empty() {
            Error::Singular("system is singular or indefinite; no pure rigid mode isolated".into())
        } else {
            Error::Singular(loose.join(", "))
        }
    }
}

/// Assembles a global force vector from (node set, direction, magnitude)
/// loads; the magnitude is split equally over the set's nodes.
pub fn force_on_sets(
    assembly: &Assembly,
    loads: &[(&str, [f64; 3], f64)],
) -> Result<Vec<f64>> {
    let mut f = vec![0.0; assembly.model.n_dof()];
    for &(set, dir, magnitude) in loads {
        let nodes = assembly.model.mesh.node_set(set)?;
        if nodes.is_empty() {
            return Err(Error::Model(format!("node set '{set}' is empty")));
        }
        let share = magnitude / nodes.len() as f64;
        for &n in nodes {
            for k in 0..3 {
                f[3 * n + k] += share * dir[k];
            }
        }
    }
    Ok(f)
}

/// Ply-frame stresses at the 8 Gauss points of every element for a
/// displacement field, using the damaged secant stiffness per point.
pub fn recover_ply_stresses(
    assembly: &Assembly,
    state: &StateField,
    u: &[f64],
) -> Vec<Vector6<f64>> {
    let nelem = assembly.n_elements();
    let mut out = vec![Vector6::zeros(); nelem * 8];
    out.par_chunks_mut(8).enumerate().for_each(|(e, stresses)| {
        let kit = assembly.kit(e);
        let mat = assembly.material(e);
        let ue = gather(u, &assembly.model.mesh.elements[e].nodes);
        for gp in 0..8 {
            let st: &PointState = &state.points[e * 8 + gp];
            let eps = kit.b_ply[gp] * ue;
            let c = if st.damage.is_zero() {
                kit.c_ply
            } else {
                damaged_stiffness(&mat.elastic, &st.damage, mat.kind)
                    .expect("damaged stiffness stays SPD under the cap")
            };
            stresses[gp] = c * eps;
        }
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::mesh::{build_plate, parse_mesh, write_mesh, Mesh, MeshElement, PlateSpec};
    use crate::fem::model::{EdgeSupport, Model, PlyMaterials};
    use crate::material::library::MaterialLibrary;
    use approx::assert_relative_eq;
    use std::collections::BTreeMap;

    fn single_ud_cube() -> Mesh {
        Mesh {
            nodes: vec![
                [0.0, 0.0, 0.0],
                [1.0, 0.0, 0.0],
                [1.0, 1.0, 0.0],
                [0.0, 1.0, 0.0],
                [0.0, 0.0, 1.0],
                [1.0, 0.0, 1.0],
                [1.0, 1.0, 1.0],
                [0.0, 1.0, 1.0],
            ],
            elements: vec![MeshElement {
                nodes: [0, 1, 2, 3, 4, 5, 6, 7],
                ply: 0,
                material: "ud_lamina".into(),
                angle_deg: 0.0,
            }],
            node_sets: BTreeMap::new(),
            element_sets: BTreeMap::new(),
        }
    }

    fn lib_plies(mesh: &Mesh) -> PlyMaterials {
        let (lib, _) = MaterialLibrary::bundled();
        PlyMaterials::uniform(mesh, |n| lib.lamina(n).cloned()).unwrap()
    }

    /// Patch test: a prescribed linear displacement field reproduces the
    /// uniform stress exactly at every integration point.
    #[test]
    fn patch_test_uniaxial_strain_is_exact() {
        let mesh = single_ud_cube();
        let plies = lib_plies(&mesh);
        let mut model = Model::new(mesh);
        let eps = 1.0e-3;
        for n in 0..8 {
            let x = model.mesh.nodes[n][0];
            model.prescribe(n, 0, eps * x);
            model.prescribe(n, 1, 0.0);
            model.prescribe(n, 2, 0.0);
        }
        let assembly = Assembly::new(model, plies, false).unwrap();
        let state = StateField::pristine(&assembly);
        let mut solver = StaticSolver::new(&assembly);
        let f = vec![0.0; assembly.model.n_dof()];
        let sol = solver.solve(&assembly, &state, &f, None).unwrap();
        let stresses = recover_ply_stresses(&assembly, &state, &sol.u);
        let c = crate::material::build_stiffness(&assembly.plies.per_ply[0].elastic).unwrap();
        for s in &stresses {
            for k in 0..6 {
                let expect = c[(k, 0)] * eps;
                assert_relative_eq!(s[k], expect, epsilon = 1e-9 * c[(0, 0)].abs());
            }
        }
    }

    #[test]
    fn zero_load_gives_zero_displacement() {
        let spec = PlateSpec::lam("[(±45)/0/(0/90)/0/(±45)]", 4.0, 4.0, 2.0);
        let mesh = build_plate(&spec).unwrap();
        let plies = lib_plies(&mesh);
        let mut model = Model::new(mesh);
        model.support_edges(EdgeSupport::Clamped).unwrap();
        let assembly = Assembly::new(model, plies, false).unwrap();
        let state = StateField::pristine(&assembly);
        let mut solver = StaticSolver::new(&assembly);
        let f = vec![0.0; assembly.model.n_dof()];
        let sol = solver.solve(&assembly, &state, &f, None).unwrap();
        assert!(sol.u.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn unconstrained_model_names_rigid_modes() {
        let mesh = single_ud_cube();
        let plies = lib_plies(&mesh);
        let model = Model::new(mesh);
        let assembly = Assembly::new(model, plies, false).unwrap();
        let state = StateField::pristine(&assembly);
        let mut solver = StaticSolver::new(&assembly);
        let f = vec![0.0; assembly.model.n_dof()];
        let err = solver.solve(&assembly, &state, &f, None).unwrap_err();
        assert!(matches!(err, Error::Singular(_)));
        assert!(err.to_string().contains("tx"));
    }

    /// Cantilever strip against Euler-Bernoulli tip deflection: 20 cube
    /// elements along the span, fibres along the beam.
    #[test]
    fn cantilever_matches_beam_theory_within_5_percent() {
        let n = 20usize;
        let mut nodes = Vec::new();
        for k in 0..2 {
            for j in 0..2 {
                for i in 0..=n {
                    nodes.push([i as f64, j as f64, k as f64]);
                }
            }
        }
        let id = |i: usize, j: usize, k: usize| k * 2 * (n + 1) + j * (n + 1) + i;
        let mut elements = Vec::new();
        for i in 0..n {
            elements.push(MeshElement {
                nodes: [
                    id(i, 0, 0),
                    id(i + 1, 0, 0),
                    id(i + 1, 1, 0),
                    id(i, 1, 0),
                    id(i, 0, 1),
                    id(i + 1, 0, 1),
                    id(i + 1, 1, 1),
                    id(i, 1, 1),
                ],
                ply: 0,
                material: "ud_lamina".into(),
                angle_deg: 0.0,
            });
        }
        let mut node_sets = BTreeMap::new();
        node_sets.insert(
            "ROOT".to_string(),
            vec![id(0, 0, 0), id(0, 1, 0), id(0, 0, 1), id(0, 1, 1)],
        );
        node_sets.insert(
            "TIP".to_string(),
            vec![id(n, 0, 0), id(n, 1, 0), id(n, 0, 1), id(n, 1, 1)],
        );
        let mesh = Mesh {
            nodes,
            elements,
            node_sets,
            element_sets: BTreeMap::new(),
        };
        let plies = lib_plies(&mesh);
        let mut model = Model::new(mesh);
        model.fix_set("ROOT", [true, true, true]).unwrap();
        let assembly = Assembly::new(model, plies, false).unwrap();
        let state = StateField::pristine(&assembly);
        let mut solver = StaticSolver::new(&assembly);
        let p = 1.0; // N
        let f = force_on_sets(&assembly, &[("TIP", [0.0, 0.0, -1.0], p)]).unwrap();
        let sol = solver.solve(&assembly, &state, &f, None).unwrap();
        assert!(sol.residual <= STATIC_TOL);
        let tip = assembly.model.mesh.node_set("TIP").unwrap();
        let w: f64 =
            tip.iter().map(|&nid| sol.u[3 * nid + 2]).sum::<f64>() / tip.len() as f64;
        let e = assembly.plies.per_ply[0].elastic.e11;
        let l = n as f64;
        let inertia = 1.0 / 12.0;
        let euler = -p * l.powi(3) / (3.0 * e * inertia);
        let err = ((w - euler) / euler).abs();
        assert!(
            err < 0.05,
            "tip deflection {w} vs Euler-Bernoulli {euler} ({:.2}% off)",
            100.0 * err
        );
    }

    #[test]
    fn mesh_rw_preserves_solution() {
        let spec = PlateSpec::lam("[(±45)/0/(0/90)/0/(±45)]", 4.0, 4.0, 2.0);
        let mesh = build_plate(&spec).unwrap();
        let round = parse_mesh(&write_mesh(&mesh)).unwrap();
        assert_eq!(mesh, round);
    }
}
