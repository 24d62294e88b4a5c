//! Ply-resolved hex meshes: plate generation from a stacking string, plain
//! text mesh files, and named node/element sets.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::material::LaminaKind;

/// One solid element: eight node ids, owning ply, material name, in-plane
/// orientation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshElement {
    pub nodes: [usize; 8],
    pub ply: usize,
    pub material: String,
    pub angle_deg: f64,
}

/// Node coordinates plus elements and named sets. Node and element ids are
/// their indices; mesh files use 1-based ids.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Mesh {
    pub nodes: Vec<[f64; 3]>,
    pub elements: Vec<MeshElement>,
    pub node_sets: BTreeMap<String, Vec<usize>>,
    pub element_sets: BTreeMap<String, Vec<usize>>,
}

impl Mesh {
    pub fn validate(&self) -> Result<()> {
        for (i, e) in self.elements.iter().enumerate() {
            for &n in &e.nodes {
                if n >= self.nodes.len() {
                    return Err(Error::Model(format!(
                        "element {i} references node {n} of {}",
                        self.nodes.len()
                    )));
                }
            }
        }
        for (name, set) in &self.node_sets {
            if set.iter().any(|&n| n >= self.nodes.len()) {
                return Err(Error::Model(format!("node set '{name}' out of range")));
            }
        }
        for (name, set) in &self.element_sets {
            if set.iter().any(|&e| e >= self.elements.len()) {
                return Err(Error::Model(format!("element set '{name}' out of range")));
            }
        }
        Ok(())
    }

    pub fn node_set(&self, name: &str) -> Result<&[usize]> {
        self.node_sets
            .get(name)
            .map(|v| v.as_slice())
            .ok_or_else(|| Error::Model(format!("no node set named '{name}'")))
    }

    /// Number of ply layers (max ply index + 1).
    pub fn ply_count(&self) -> usize {
        self.elements.iter().map(|e| e.ply + 1).max().unwrap_or(0)
    }

    /// Stable content hash used to pair stage-state files with their mesh.
    pub fn content_hash(&self) -> u64 {
        let mut h = 0xcbf2_9ce4_8422_2325u64;
        let mut eat = |bytes: &[u8]| {
            for &b in bytes {
                h ^= b as u64;
                h = h.wrapping_mul(0x1000_0000_01b3);
            }
        };
        for n in &self.nodes {
            for v in n {
                eat(&v.to_le_bytes());
            }
        }
        for e in &self.elements {
            for &n in &e.nodes {
                eat(&(n as u64).to_le_bytes());
            }
            eat(&(e.ply as u64).to_le_bytes());
            eat(e.material.as_bytes());
            eat(&e.angle_deg.to_le_bytes());
        }
        h
    }
}

/// One ply of a parsed stacking sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlySpec {
    pub kind: LaminaKind,
    pub angle_deg: f64,
}

/// Parses a stacking string like `[(±45)/0_2/(0/90)/0_2/(±45)]`.
///
/// Parenthesised entries are plain-weave plies: `(±45)` (or `(+-45)`) lays
/// the fabric at 45 degrees, `(0/90)` at 0. Bare angles are UD plies. A
/// `_n` suffix repeats the ply n times.
pub fn parse_stacking(text: &str) -> Result<Vec<PlySpec>> {
    let inner = text.trim().trim_start_matches('[').trim_end_matches(']');
    let mut tokens: Vec<String> = Vec::new();
    let mut depth = 0usize;
    let mut cur = String::new();
    for ch in inner.chars() {
        match ch {
            '(' => {
                depth += 1;
                cur.push(ch);
            }
            ')' => {
                depth = depth.checked_sub(1).ok_or_else(|| {
                    Error::Model(format!("unbalanced ')' in stacking '{text}'"))
                })?;
                cur.push(ch);
            }
            '/' if depth == 0 => {
                tokens.push(std::mem::take(&mut cur));
            }
            _ => cur.push(ch),
        }
    }
    if depth != 0 {
        return Err(Error::Model(format!("unbalanced '(' in stacking '{text}'")));
    }
    if !cur.is_empty() {
        tokens.push(cur);
    }
    let mut plies = Vec::new();
    for token in tokens {
        let token = token.trim();
        if token.is_empty() {
            return Err(Error::Model(format!("empty ply token in '{text}'")));
        }
        let (base, repeat) = match token.rsplit_once('_') {
            Some((b, r)) if !b.ends_with('(') => {
                let n: usize = r.parse().map_err(|_| {
                    Error::Model(format!("bad repeat count '{r}' in stacking '{text}'"))
                })?;
                (b, n)
            }
            _ => (token, 1),
        };
        let spec = if base.starts_with('(') && base.ends_with(')') {
            let body = &base[1..base.len() - 1];
            if let Some(rest) = body.strip_prefix('±').or_else(|| body.strip_prefix("+-")) {
                let angle: f64 = rest.trim().parse().map_err(|_| {
                    Error::Model(format!("bad fabric angle '{rest}' in '{text}'"))
                })?;
                PlySpec {
                    kind: LaminaKind::Pw,
                    angle_deg: angle,
                }
            } else if let Some((a, _b)) = body.split_once('/') {
                let angle: f64 = a.trim().parse().map_err(|_| {
                    Error::Model(format!("bad fabric token '({body})' in '{text}'"))
                })?;
                PlySpec {
                    kind: LaminaKind::Pw,
                    angle_deg: angle,
                }
            } else {
                return Err(Error::Model(format!(
                    "fabric ply '({body})' must be (±a) or (a/b)"
                )));
            }
        } else {
            let angle: f64 = base.trim().parse().map_err(|_| {
                Error::Model(format!("bad UD angle '{base}' in stacking '{text}'"))
            })?;
            PlySpec {
                kind: LaminaKind::Ud,
                angle_deg: angle,
            }
        };
        for _ in 0..repeat {
            plies.push(spec.clone());
        }
    }
    if plies.is_empty() {
        return Err(Error::Model(format!("stacking '{text}' has no plies")));
    }
    Ok(plies)
}

/// Plate generation parameters. Material names refer to the library; ply
/// thicknesses follow the lamina type.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlateSpec {
    pub stacking: String,
    pub span_x_mm: f64,
    pub span_y_mm: f64,
    pub element_mm: f64,
    pub pw_material: String,
    pub ud_material: String,
    pub pw_thickness_mm: f64,
    pub ud_thickness_mm: f64,
}

impl PlateSpec {
    pub fn lam(stacking: &str, span_x: f64, span_y: f64, element: f64) -> Self {
        PlateSpec {
            stacking: stacking.to_string(),
            span_x_mm: span_x,
            span_y_mm: span_y,
            element_mm: element,
            pw_material: "pw_lamina".into(),
            ud_material: "ud_lamina".into(),
            pw_thickness_mm: 0.314,
            ud_thickness_mm: 0.166,
        }
    }
}

/// Builds a ply-resolved plate: one hex layer per ply, uniform in-plane
/// element size, standard node sets (side faces, top/bottom, centers).
pub fn build_plate(spec: &PlateSpec) -> Result<Mesh> {
    if !(spec.element_mm > 0.0) || !(spec.span_x_mm > 0.0) || !(spec.span_y_mm > 0.0) {
        return Err(Error::Model(
            "plate spans and element size must be positive".into(),
        ));
    }
    let plies = parse_stacking(&spec.stacking)?;
    let nx = (spec.span_x_mm / spec.element_mm).round().max(1.0) as usize;
    let ny = (spec.span_y_mm / spec.element_mm).round().max(1.0) as usize;
    let dx = spec.span_x_mm / nx as f64;
    let dy = spec.span_y_mm / ny as f64;
    let nz = plies.len();
    let mut z_levels = Vec::with_capacity(nz + 1);
    let mut z = 0.0;
    z_levels.push(0.0);
    for p in &plies {
        z += match p.kind {
            LaminaKind::Pw => spec.pw_thickness_mm,
            LaminaKind::Ud => spec.ud_thickness_mm,
        };
        z_levels.push(z);
    }

    let nnx = nx + 1;
    let nny = ny + 1;
    let node_id = |i: usize, j: usize, k: usize| k * nnx * nny + j * nnx + i;
    let mut nodes = Vec::with_capacity(nnx * nny * (nz + 1));
    for k in 0..=nz {
        for j in 0..=ny {
            for i in 0..=nx {
                nodes.push([i as f64 * dx, j as f64 * dy, z_levels[k]]);
            }
        }
    }
    let mut elements = Vec::with_capacity(nx * ny * nz);
    let mut element_sets: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (k, ply) in plies.iter().enumerate() {
        let mut set = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                set.push(elements.len());
                elements.push(MeshElement {
                    nodes: [
                        node_id(i, j, k),
                        node_id(i + 1, j, k),
                        node_id(i + 1, j + 1, k),
                        node_id(i, j + 1, k),
                        node_id(i, j, k + 1),
                        node_id(i + 1, j, k + 1),
                        node_id(i + 1, j + 1, k + 1),
                        node_id(i, j + 1, k + 1),
                    ],
                    ply: k,
                    material: match ply.kind {
                        LaminaKind::Pw => spec.pw_material.clone(),
                        LaminaKind::Ud => spec.ud_material.clone(),
                    },
                    angle_deg: ply.angle_deg,
                });
            }
        }
        element_sets.insert(format!("PLY{}", k + 1), set);
    }

    let mut node_sets: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    let mut x0 = Vec::new();
    let mut x1 = Vec::new();
    let mut y0 = Vec::new();
    let mut y1 = Vec::new();
    let mut top = Vec::new();
    let mut bottom = Vec::new();
    for k in 0..=nz {
        for j in 0..=ny {
            for i in 0..=nx {
                let id = node_id(i, j, k);
                if i == 0 {
                    x0.push(id);
                }
                if i == nx {
                    x1.push(id);
                }
                if j == 0 {
                    y0.push(id);
                }
                if j == ny {
                    y1.push(id);
                }
                if k == nz {
                    top.push(id);
                }
                if k == 0 {
                    bottom.push(id);
                }
            }
        }
    }
    let mut edges: Vec<usize> = x0
        .iter()
        .chain(&x1)
        .chain(&y0)
        .chain(&y1)
        .copied()
        .collect();
    edges.sort_unstable();
    edges.dedup();
    let center_top = node_id(nx / 2, ny / 2, nz);
    node_sets.insert("X0".into(), x0);
    node_sets.insert("X1".into(), x1);
    node_sets.insert("Y0".into(), y0);
    node_sets.insert("Y1".into(), y1);
    node_sets.insert("TOP".into(), top);
    node_sets.insert("BOTTOM".into(), bottom);
    node_sets.insert("EDGES".into(), edges);
    node_sets.insert("CENTER_TOP".into(), vec![center_top]);

    let mesh = Mesh {
        nodes,
        elements,
        node_sets,
        element_sets,
    };
    mesh.validate()?;
    Ok(mesh)
}

/// Writes the plain-text mesh format (1-based ids).
pub fn write_mesh(mesh: &Mesh) -> String {
    let mut out = String::new();
    out.push_str("# plydam mesh v1\n");
    let _ = writeln!(out, "NODES {}", mesh.nodes.len());
    // Default float formatting is the shortest round-trippable form.
    for (i, n) in mesh.nodes.iter().enumerate() {
        let _ = writeln!(out, "{} {} {} {}", i + 1, n[0], n[1], n[2]);
    }
    let _ = writeln!(out, "ELEMENTS {}", mesh.elements.len());
    for (i, e) in mesh.elements.iter().enumerate() {
        let _ = write!(out, "{}", i + 1);
        for &n in &e.nodes {
            let _ = write!(out, " {}", n + 1);
        }
        let _ = writeln!(out, " {} {} {}", e.ply + 1, e.material, e.angle_deg);
    }
    for (name, set) in &mesh.node_sets {
        let _ = writeln!(out, "NSET {} {}", name, set.len());
        for chunk in set.chunks(16) {
            let ids: Vec<String> = chunk.iter().map(|&n| (n + 1).to_string()).collect();
            let _ = writeln!(out, "{}", ids.join(" "));
        }
    }
    for (name, set) in &mesh.element_sets {
        let _ = writeln!(out, "ELSET {} {}", name, set.len());
        for chunk in set.chunks(16) {
            let ids: Vec<String> = chunk.iter().map(|&n| (n + 1).to_string()).collect();
            let _ = writeln!(out, "{}", ids.join(" "));
        }
    }
    out.push_str("END\n");
    out
}

/// Parses the plain-text mesh format.
pub fn parse_mesh(text: &str) -> Result<Mesh> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));
    let mut mesh = Mesh::default();
    let bad = |what: &str, line: &str| Error::Model(format!("mesh file: bad {what}: '{line}'"));
    let mut current = lines.next();
    while let Some(line) = current {
        if line == "END" {
            break;
        }
        let mut parts = line.split_whitespace();
        let keyword = parts.next().unwrap_or_default();
        match keyword {
            "NODES" => {
                let count: usize = parts
                    .next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| bad("NODES header", line))?;
                for _ in 0..count {
                    let l = lines.next().ok_or_else(|| bad("node row", "eof"))?;
                    let f: Vec<&str> = l.split_whitespace().collect();
                    if f.len() != 4 {
                        return Err(bad("node row", l));
                    }
                    let xyz = [
                        f[1].parse().map_err(|_| bad("node x", l))?,
                        f[2].parse().map_err(|_| bad("node y", l))?,
                        f[3].parse().map_err(|_| bad("node z", l))?,
                    ];
                    mesh.nodes.push(xyz);
                }
                current = lines.next();
            }
            "ELEMENTS" => {
                let count: usize = parts
                    .next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| bad("ELEMENTS header", line))?;
                for _ in 0..count {
                    let l = lines.next().ok_or_else(|| bad("element row", "eof"))?;
                    let f: Vec<&str> = l.split_whitespace().collect();
                    if f.len() != 12 {
                        return Err(bad("element row", l));
                    }
                    let mut nodes = [0usize; 8];
                    for (k, n) in nodes.iter_mut().enumerate() {
                        let id: usize = f[k + 1].parse().map_err(|_| bad("element node", l))?;
                        *n = id
                            .checked_sub(1)
                            .ok_or_else(|| bad("element node id", l))?;
                    }
                    let ply: usize = f[9].parse().map_err(|_| bad("element ply", l))?;
                    mesh.elements.push(MeshElement {
                        nodes,
                        ply: ply.checked_sub(1).ok_or_else(|| bad("ply id", l))?,
                        material: f[10].to_string(),
                        angle_deg: f[11].parse().map_err(|_| bad("element angle", l))?,
                    });
                }
                current = lines.next();
            }
            "NSET" | "ELSET" => {
                let name = parts
                    .next()
                    .ok_or_else(|| bad("set name", line))?
                    .to_string();
                let count: usize = parts
                    .next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| bad("set count", line))?;
                let mut ids = Vec::with_capacity(count);
                while ids.len() < count {
                    let l = lines.next().ok_or_else(|| bad("set row", "eof"))?;
                    for tok in l.split_whitespace() {
                        let id: usize = tok.parse().map_err(|_| bad("set id", l))?;
                        ids.push(id.checked_sub(1).ok_or_else(|| bad("set id", l))?);
                    }
                }
                if ids.len() != count {
                    return Err(bad("set count", &name));
                }
                if keyword == "NSET" {
                    mesh.node_sets.insert(name, ids);
                } else {
                    mesh.element_sets.insert(name, ids);
                }
                current = lines.next();
            }
            _ => return Err(bad("section", line)),
        }
    }
    mesh.validate()?;
    Ok(mesh)
}

pub fn read_mesh(path: &Path) -> Result<Mesh> {
    parse_mesh(&std::fs::read_to_string(path)?)
}
