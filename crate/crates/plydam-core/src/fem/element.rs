//! Trilinear hexahedron kernel: shape gradients, strain-displacement
//! matrices, stiffness and lumped mass, with 2x2x2 Gauss integration.
//!
//! Elements with identical node-offset geometry share one `ElementClass`,
//! so a ply-resolved plate mesh stores the B matrices and pristine
//! stiffness once per ply instead of once per element.

use nalgebra::{Matrix6, SMatrix, SVector};

use crate::error::{Error, Result};
use crate::material::strain_rotation;

pub type BMatrix = SMatrix<f64, 6, 24>;
pub type ElementStiffness = SMatrix<f64, 24, 24>;
pub type ElementVector = SVector<f64, 24>;

/// Natural coordinates of the 8 nodes.
const XI: [[f64; 3]; 8] = [
    [-1.0, -1.0, -1.0],
    [1.0, -1.0, -1.0],
    [1.0, 1.0, -1.0],
    [-1.0, 1.0, -1.0],
    [-1.0, -1.0, 1.0],
    [1.0, -1.0, 1.0],
    [1.0, 1.0, 1.0],
    [-1.0, 1.0, 1.0],
];

/// 2x2x2 Gauss abscissa.
const GP: f64 = 0.577_350_269_189_625_8;

/// Shape function derivatives wrt natural coordinates at (xi, eta, zeta).
fn shape_gradients(p: [f64; 3]) -> [[f64; 3]; 8] {
    let mut g = [[0.0; 3]; 8];
    for (i, n) in XI.iter().enumerate() {
        g[i][0] = 0.125 * n[0] * (1.0 + n[1] * p[1]) * (1.0 + n[2] * p[2]);
        g[i][1] = 0.125 * n[1] * (1.0 + n[0] * p[0]) * (1.0 + n[2] * p[2]);
        g[i][2] = 0.125 * n[2] * (1.0 + n[0] * p[0]) * (1.0 + n[1] * p[1]);
    }
    g
}

fn shape_values(p: [f64; 3]) -> [f64; 8] {
    let mut n = [0.0; 8];
    for (i, c) in XI.iter().enumerate() {
        n[i] = 0.125 * (1.0 + c[0] * p[0]) * (1.0 + c[1] * p[1]) * (1.0 + c[2] * p[2]);
    }
    n
}

/// Geometry-derived integration data shared by all elements with the same
/// node-offset signature.
#[derive(Debug, Clone)]
pub struct ElementClass {
    /// Strain-displacement matrix at each Gauss point (global frame).
    pub b: Vec<BMatrix>,
    /// Integration weight (det J * w) at each Gauss point.
    pub weight: Vec<f64>,
    /// B at the element centroid, for screening.
    pub b_centroid: BMatrix,
    pub volume: f64,
    /// Cube root of the volume (characteristic length, mm).
    pub l_star: f64,
    /// Integral of each shape function over the element (lumped mass basis).
    pub node_integral: [f64; 8],
    /// In-plane footprint area (projection on the 1-2 plane).
    pub area_xy: f64,
}

fn b_at(coords: &[[f64; 3]; 8], p: [f64; 3]) -> Result<(BMatrix, f64)> {
    let g = shape_gradients(p);
    // Jacobian J[r][c] = d x_c / d xi_r.
    let mut j = [[0.0; 3]; 3];
    for (i, c) in coords.iter().enumerate() {
        for r in 0..3 {
            for s in 0..3 {
                j[r][s] += g[i][r] * c[s];
            }
        }
    }
    let det = j[0][0] * (j[1][1] * j[2][2] - j[1][2] * j[2][1])
        - j[0][1] * (j[1][0] * j[2][2] - j[1][2] * j[2][0])
        + j[0][2] * (j[1][0] * j[2][1] - j[1][1] * j[2][0]);
    if det <= 0.0 {
        return Err(Error::Model(format!(
            "non-positive Jacobian ({det}) in hex element"
        )));
    }
    let inv = {
        let d = 1.0 / det;
        [
            [
                (j[1][1] * j[2][2] - j[1][2] * j[2][1]) * d,
                (j[0][2] * j[2][1] - j[0][1] * j[2][2]) * d,
                (j[0][1] * j[1][2] - j[0][2] * j[1][1]) * d,
            ],
            [
                (j[1][2] * j[2][0] - j[1][0] * j[2][2]) * d,
                (j[0][0] * j[2][2] - j[0][2] * j[2][0]) * d,
                (j[0][2] * j[1][0] - j[0][0] * j[1][2]) * d,
            ],
            [
                (j[1][0] * j[2][1] - j[1][1] * j[2][0]) * d,
                (j[0][1] * j[2][0] - j[0][0] * j[2][1]) * d,
                (j[0][0] * j[1][1] - j[0][1] * j[1][0]) * d,
            ],
        ]
    };
    let mut b = BMatrix::zeros();
    for i in 0..8 {
        // dN_i/dx_k = inv[k][r] g[i][r]
        let dx = inv[0][0] * g[i][0] + inv[0][1] * g[i][1] + inv[0][2] * g[i][2];
        let dy = inv[1][0] * g[i][0] + inv[1][1] * g[i][1] + inv[1][2] * g[i][2];
        let dz = inv[2][0] * g[i][0] + inv[2][1] * g[i][1] + inv[2][2] * g[i][2];
        let c = 3 * i;
        b[(0, c)] = dx;
        b[(1, c + 1)] = dy;
        b[(2, c + 2)] = dz;
        b[(3, c)] = dy;
        b[(3, c + 1)] = dx;
        b[(4, c)] = dz;
        b[(4, c + 2)] = dx;
        b[(5, c + 1)] = dz;
        b[(5, c + 2)] = dy;
    }
    Ok((b, det))
}

impl ElementClass {
    pub fn new(coords: &[[f64; 3]; 8]) -> Result<Self> {
        let mut b = Vec::with_capacity(8);
        let mut weight = Vec::with_capacity(8);
        let mut volume = 0.0;
        let mut node_integral = [0.0; 8];
        for &gz in &[-GP, GP] {
            for &gy in &[-GP, GP] {
                for &gx in &[-GP, GP] {
                    let p = [gx, gy, gz];
                    let (bm, det) = b_at(coords, p)?;
                    let n = shape_values(p);
                    for i in 0..8 {
                        node_integral[i] += n[i] * det;
                    }
                    volume += det;
                    b.push(bm);
                    weight.push(det);
                }
            }
        }
        let (b_centroid, _) = b_at(coords, [0.0, 0.0, 0.0])?;
        // Footprint on the laminate plane from the bottom-face corner span.
        let ax = (coords[1][0] - coords[0][0]).hypot(coords[1][1] - coords[0][1]);
        let ay = (coords[3][0] - coords[0][0]).hypot(coords[3][1] - coords[0][1]);
        Ok(ElementClass {
            b,
            weight,
            b_centroid,
            volume,
            l_star: volume.cbrt(),
            node_integral,
            area_xy: ax * ay,
        })
    }

    /// Quantized geometry signature for class sharing.
    pub fn signature(coords: &[[f64; 3]; 8]) -> [i64; 21] {
        let mut sig = [0i64; 21];
        let origin = coords[0];
        for i in 1..8 {
            for k in 0..3 {
                let v = coords[i][k] - origin[k];
                sig[(i - 1) * 3 + k] = (v * 1.0e9).round() as i64;
            }
        }
        sig
    }

    /// Element stiffness for a global-frame constitutive matrix.
    pub fn stiffness(&self, c_global: &Matrix6<f64>) -> ElementStiffness {
        let mut k = ElementStiffness::zeros();
        for (bm, &w) in self.b.iter().zip(&self.weight) {
            let cb = c_global * bm;
            k.gemm_tr(w, bm, &cb, 1.0);
        }
        (k + k.transpose()) * 0.5
    }

    /// Ply-frame B matrices for a ply laid at `angle_deg`: eps_ply = B_ply u
    /// and f_int = sum B_ply^T sigma_ply w.
    pub fn ply_b(&self, angle_deg: f64) -> Vec<BMatrix> {
        let t = strain_rotation(angle_deg.to_radians());
        self.b.iter().map(|bm| t * bm).collect()
    }

    pub fn ply_b_centroid(&self, angle_deg: f64) -> BMatrix {
        strain_rotation(angle_deg.to_radians()) * self.b_centroid
    }
}

/// Gathers the element displacement vector from the global field.
#[inline]
pub fn gather(u: &[f64], nodes: &[usize; 8]) -> ElementVector {
    let mut out = ElementVector::zeros();
    for (i, &n) in nodes.iter().enumerate() {
        out[3 * i] = u[3 * n];
        out[3 * i + 1] = u[3 * n + 1];
        out[3 * i + 2] = u[3 * n + 2];
    }
    out
}
