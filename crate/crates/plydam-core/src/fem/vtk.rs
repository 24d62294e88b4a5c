//! Legacy-format unstructured-grid visualization output: one ASCII file
//! per frame carrying displacement, ply-frame stress, and the SDV fields.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Vector6;

use super::model::{Assembly, StateField};
use crate::material::{Criterion, Mode};

/// SDV14..SDV22 mode order (in-plane shear, then transverse-through, then
/// longitudinal-through).
pub const SDV_MODES: [Mode; 9] = [
    Mode::T1,
    Mode::C1,
    Mode::T2,
    Mode::C2,
    Mode::T3,
    Mode::C3,
    Mode::S12,
    Mode::S23,
    Mode::S13,
];

/// Element-averaged scalar fields keyed by SDV registry id.
pub fn sdv_cell_fields(assembly: &Assembly, state: &StateField) -> Vec<(String, Vec<f64>)> {
    let nelem = assembly.n_elements();
    let mut fields: Vec<(String, Vec<f64>)> = Vec::new();
    // SDV1..SDV6: failure variable per criterion = damage of its mode
    // (max over the element's integration points).
    for c in Criterion::ALL {
        let mode = c.damage_mode();
        let mut vals = vec![0.0; nelem];
        for (e, v) in vals.iter_mut().enumerate() {
            let mut m = 0.0f64;
            for gp in 0..8 {
                m = m.max(state.points[e * 8 + gp].damage.get(mode));
            }
            *v = m;
        }
        fields.push((format!("SDV{}", c.sdv()), vals));
    }
    // SDV14..SDV22: strength reduction from the pristine strength (max over
    // points).
    for (k, mode) in SDV_MODES.iter().enumerate() {
        let mut vals = vec![0.0; nelem];
        for (e, v) in vals.iter_mut().enumerate() {
            let ply = assembly.model.mesh.elements[e].ply;
            let x0 = assembly.plies.pristine_strength[ply].get(*mode);
            let mut m = 0.0f64;
            for gp in 0..8 {
                let rs = &state.points[e * 8 + gp].rs;
                m = m.max(x0 - rs.residual(*mode));
            }
            *v = m;
        }
        fields.push((format!("SDV{}", 14 + k), vals));
    }
    fields
}

/// Writes one frame. `stress_ply` is optional (8 Gauss values per element,
/// averaged per cell on output).
pub fn write_vtk_frame(
    assembly: &Assembly,
    state: &StateField,
    u: &[f64],
    stress_ply: Option<&[Vector6<f64>]>,
    title: &str,
) -> String {
    let mesh = &assembly.model.mesh;
    let mut out = String::new();
    out.push_str("# vtk DataFile Version 3.0\n");
    let _ = writeln!(out, "{title}");
    out.push_str("ASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(out, "POINTS {} double", mesh.nodes.len());
    for n in &mesh.nodes {
        let _ = writeln!(out, "{} {} {}", n[0], n[1], n[2]);
    }
    let _ = writeln!(out, "CELLS {} {}", mesh.elements.len(), mesh.elements.len() * 9);
    for e in &mesh.elements {
        let _ = writeln!(
            out,
            "8 {} {} {} {} {} {} {} {}",
            e.nodes[0], e.nodes[1], e.nodes[2], e.nodes[3], e.nodes[4], e.nodes[5], e.nodes[6],
            e.nodes[7]
        );
    }
    let _ = writeln!(out, "CELL_TYPES {}", mesh.elements.len());
    for _ in &mesh.elements {
        out.push_str("12\n");
    }
    let _ = writeln!(out, "POINT_DATA {}", mesh.nodes.len());
    out.push_str("VECTORS displacement double\n");
    for n in 0..mesh.nodes.len() {
        let _ = writeln!(out, "{} {} {}", u[3 * n], u[3 * n + 1], u[3 * n + 2]);
    }
    let _ = writeln!(out, "CELL_DATA {}", mesh.elements.len());
    for (name, vals) in sdv_cell_fields(assembly, state) {
        let _ = writeln!(out, "SCALARS {name} double 1");
        out.push_str("LOOKUP_TABLE default\n");
        for v in vals {
            let _ = writeln!(out, "{v}");
        }
    }
    if let Some(sp) = stress_ply {
        let comps = ["S11", "S22", "S33", "S12", "S13", "S23"];
        for (k, comp) in comps.iter().enumerate() {
            let _ = writeln!(out, "SCALARS {comp} double 1");
            out.push_str("LOOKUP_TABLE default\n");
            for e in 0..mesh.elements.len() {
                let mut avg = 0.0;
                for gp in 0..8 {
                    avg += sp[e * 8 + gp][k];
                }
                let _ = writeln!(out, "{}", avg / 8.0);
            }
        }
    }
    out
}

pub fn write_vtk_file(
    path: &Path,
    assembly: &Assembly,
    state: &StateField,
    u: &[f64],
    stress_ply: Option<&[Vector6<f64>]>,
    title: &str,
) -> crate::error::Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, write_vtk_frame(assembly, state, u, stress_ply, title))?;
    Ok(())
}
