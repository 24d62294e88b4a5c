//! Ply-level material data and orthotropic stiffness, including the sudden
//! and gradual stiffness degradation rules.
//!
//! Stress and strain vectors use Voigt order `[11, 22, 33, 12, 13, 23]` with
//! engineering shear strain. Internal units are mm-N-MPa-tonne; densities are
//! converted from g/cm^3 at ingestion.

pub mod library;

use nalgebra::Matrix6;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Damage value used when forming stiffness from a fully failed mode. The
/// stored damage may reach 1.0; the cap keeps the stiffness invertible.
pub const DAMAGE_CAP: f64 = 0.99;

/// g/cm^3 -> tonne/mm^3.
pub const G_CM3_TO_T_MM3: f64 = 1.0e-9;

/// Lamina type; selects the failure-mode set and the shear damage coupling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LaminaKind {
    /// Plain-weave fabric ply (warp/weft fibre modes).
    Pw,
    /// Unidirectional ply (fibre/matrix modes).
    Ud,
}

/// The nine uniaxial loading modes a ply degrades in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    T1,
    C1,
    T2,
    C2,
    T3,
    C3,
    S12,
    S13,
    S23,
}

impl Mode {
    pub const ALL: [Mode; 9] = [
        Mode::T1,
        Mode::C1,
        Mode::T2,
        Mode::C2,
        Mode::T3,
        Mode::C3,
        Mode::S12,
        Mode::S13,
        Mode::S23,
    ];

    /// Dense index 0..9 in `ALL` order.
    pub fn index(self) -> usize {
        match self {
            Mode::T1 => 0,
            Mode::C1 => 1,
            Mode::T2 => 2,
            Mode::C2 => 3,
            Mode::T3 => 4,
            Mode::C3 => 5,
            Mode::S12 => 6,
            Mode::S13 => 7,
            Mode::S23 => 8,
        }
    }

    pub fn from_index(i: usize) -> Mode {
        Mode::ALL[i]
    }

    /// Short label matching the material-library file keys.
    pub fn label(self) -> &'static str {
        match self {
            Mode::T1 => "1t",
            Mode::C1 => "1c",
            Mode::T2 => "2t",
            Mode::C2 => "2c",
            Mode::T3 => "3t",
            Mode::C3 => "3c",
            Mode::S12 => "12",
            Mode::S13 => "13",
            Mode::S23 => "23",
        }
    }

    pub fn from_label(s: &str) -> Option<Mode> {
        Mode::ALL.iter().copied().find(|m| m.label() == s)
    }

    pub fn is_shear(self) -> bool {
        matches!(self, Mode::S12 | Mode::S13 | Mode::S23)
    }

    pub fn is_tension(self) -> bool {
        matches!(self, Mode::T1 | Mode::T2 | Mode::T3)
    }

    pub fn is_compression(self) -> bool {
        matches!(self, Mode::C1 | Mode::C2 | Mode::C3)
    }

    /// Material axis (0, 1, 2) a normal mode acts along; shear modes return
    /// the Voigt slot of their stress component instead.
    pub fn axis(self) -> usize {
        match self {
            Mode::T1 | Mode::C1 => 0,
            Mode::T2 | Mode::C2 => 1,
            Mode::T3 | Mode::C3 => 2,
            Mode::S12 => 3,
            Mode::S13 => 4,
            Mode::S23 => 5,
        }
    }

    /// Voigt slot of the ply-frame stress component that drives this mode.
    pub fn stress_slot(self) -> usize {
        match self {
            Mode::T1 | Mode::C1 => 0,
            Mode::T2 | Mode::C2 => 1,
            Mode::T3 | Mode::C3 => 2,
            Mode::S12 => 3,
            Mode::S13 => 4,
            Mode::S23 => 5,
        }
    }
}

/// The failure criteria of the damage model, one per solution-dependent
/// state variable SDV1-SDV6. For PW laminae the fibre rows read warp and the
/// matrix rows read weft; delamination rows are shared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Criterion {
    FibreTension,
    FibreCompression,
    MatrixTension,
    MatrixCompression,
    DelamTension,
    DelamCompression,
}

impl Criterion {
    pub const ALL: [Criterion; 6] = [
        Criterion::FibreTension,
        Criterion::FibreCompression,
        Criterion::MatrixTension,
        Criterion::MatrixCompression,
        Criterion::DelamTension,
        Criterion::DelamCompression,
    ];

    pub fn index(self) -> usize {
        match self {
            Criterion::FibreTension => 0,
            Criterion::FibreCompression => 1,
            Criterion::MatrixTension => 2,
            Criterion::MatrixCompression => 3,
            Criterion::DelamTension => 4,
            Criterion::DelamCompression => 5,
        }
    }

    pub fn from_index(i: usize) -> Criterion {
        Criterion::ALL[i]
    }

    /// Registry id of the failure flag (SDV1..SDV6).
    pub fn sdv(self) -> usize {
        self.index() + 1
    }

    /// The damage-vector component this criterion drives on failure.
    pub fn damage_mode(self) -> Mode {
        match self {
            Criterion::FibreTension => Mode::T1,
            Criterion::FibreCompression => Mode::C1,
            Criterion::MatrixTension => Mode::T2,
            Criterion::MatrixCompression => Mode::C2,
            Criterion::DelamTension => Mode::T3,
            Criterion::DelamCompression => Mode::C3,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Criterion::FibreTension => "fibre_tension",
            Criterion::FibreCompression => "fibre_compression",
            Criterion::MatrixTension => "matrix_tension",
            Criterion::MatrixCompression => "matrix_compression",
            Criterion::DelamTension => "delam_tension",
            Criterion::DelamCompression => "delam_compression",
        }
    }

    /// Quadratic-interaction terms of this criterion row: (Voigt stress
    /// slot, strength mode) pairs. The matrix-compression row couples shear
    /// for UD but not for PW.
    pub fn terms(self, kind: LaminaKind) -> &'static [(usize, Mode)] {
        match (self, kind) {
            (Criterion::FibreTension, _) => &[(0, Mode::T1), (3, Mode::S12), (4, Mode::S13)],
            (Criterion::FibreCompression, _) => &[(0, Mode::C1)],
            (Criterion::MatrixTension, _) => &[(1, Mode::T2), (3, Mode::S12), (5, Mode::S23)],
            (Criterion::MatrixCompression, LaminaKind::Pw) => &[(1, Mode::C2)],
            (Criterion::MatrixCompression, LaminaKind::Ud) => {
                &[(1, Mode::C2), (3, Mode::S12), (5, Mode::S23)]
            }
            (Criterion::DelamTension, _) => &[(2, Mode::T3), (5, Mode::S23), (4, Mode::S13)],
            (Criterion::DelamCompression, _) => &[(2, Mode::C3), (5, Mode::S23), (4, Mode::S13)],
        }
    }

    /// Sign gate on the driving normal stress. Tension rows admit zero so
    /// pure shear still registers; compression rows require strictly
    /// negative stress.
    pub fn gate(self, stress: &nalgebra::Vector6<f64>) -> bool {
        match self {
            Criterion::FibreTension => stress[0] >= 0.0,
            Criterion::FibreCompression => stress[0] < 0.0,
            Criterion::MatrixTension => stress[1] >= 0.0,
            Criterion::MatrixCompression => stress[1] < 0.0,
            Criterion::DelamTension => stress[2] >= 0.0,
            Criterion::DelamCompression => stress[2] < 0.0,
        }
    }
}

/// Elastic constants of a ply. Moduli in MPa, density in tonne/mm^3.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaminaElastic {
    pub e11: f64,
    pub e22: f64,
    pub e33: f64,
    pub g12: f64,
    pub g13: f64,
    pub g23: f64,
    pub nu12: f64,
    pub nu13: f64,
    pub nu23: f64,
    pub rho: f64,
}

impl LaminaElastic {
    pub fn modulus(&self, axis: usize) -> f64 {
        [self.e11, self.e22, self.e33][axis]
    }

    /// Validates positivity and thermodynamic admissibility of the implied
    /// compliance, naming the violated constant on failure.
    pub fn validate(&self) -> Result<()> {
        let named = [
            ("E11", self.e11),
            ("E22", self.e22),
            ("E33", self.e33),
            ("G12", self.g12),
            ("G13", self.g13),
            ("G23", self.g23),
            ("rho", self.rho),
        ];
        for (name, v) in named {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Inadmissible(format!("{name} = {v} must be > 0")));
            }
        }
        let checks = [
            ("nu12", self.nu12, self.e11, self.e22, "E11/E22"),
            ("nu13", self.nu13, self.e11, self.e33, "E11/E33"),
            ("nu23", self.nu23, self.e22, self.e33, "E22/E33"),
        ];
        for (name, nu, ei, ej, ratio) in checks {
            if nu * nu * ej / ei >= 1.0 {
                return Err(Error::Inadmissible(format!(
                    "{name} = {nu} violates |{name}| < sqrt({ratio})"
                )));
            }
        }
        // Determinant of the normal-block compliance must stay positive.
        let nu21 = self.nu12 * self.e22 / self.e11;
        let nu31 = self.nu13 * self.e33 / self.e11;
        let nu32 = self.nu23 * self.e33 / self.e22;
        let det = 1.0
            - self.nu12 * nu21
            - self.nu23 * nu32
            - self.nu13 * nu31
            - 2.0 * nu21 * nu32 * self.nu13;
        if det <= 0.0 {
            return Err(Error::Inadmissible(format!(
                "Poisson coupling determinant {det} <= 0 (nu12, nu13, nu23 jointly inadmissible)"
            )));
        }
        Ok(())
    }
}

/// Static strengths, stored as positive magnitudes (MPa).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaminaStrength {
    pub x1t: f64,
    pub x1c: f64,
    pub x2t: f64,
    pub x2c: f64,
    pub x3t: f64,
    pub x3c: f64,
    pub x12: f64,
    pub x13: f64,
    pub x23: f64,
}

impl LaminaStrength {
    pub fn get(&self, mode: Mode) -> f64 {
        match mode {
            Mode::T1 => self.x1t,
            Mode::C1 => self.x1c,
            Mode::T2 => self.x2t,
            Mode::C2 => self.x2c,
            Mode::T3 => self.x3t,
            Mode::C3 => self.x3c,
            Mode::S12 => self.x12,
            Mode::S13 => self.x13,
            Mode::S23 => self.x23,
        }
    }

    pub fn set(&mut self, mode: Mode, value: f64) {
        match mode {
            Mode::T1 => self.x1t = value,
            Mode::C1 => self.x1c = value,
            Mode::T2 => self.x2t = value,
            Mode::C2 => self.x2c = value,
            Mode::T3 => self.x3t = value,
            Mode::C3 => self.x3c = value,
            Mode::S12 => self.x12 = value,
            Mode::S13 => self.x13 = value,
            Mode::S23 => self.x23 = value,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for mode in Mode::ALL {
            let x = self.get(mode);
            if !(x > 0.0) || !x.is_finite() {
                return Err(Error::Inadmissible(format!(
                    "strength X{} = {x} must be > 0",
                    mode.label()
                )));
            }
        }
        Ok(())
    }
}

/// Fracture energies per normal mode (kJ/m^2, numerically equal to N/mm).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FractureToughness {
    pub g11t: f64,
    pub g11c: f64,
    pub g22t: f64,
    pub g22c: f64,
    pub g33t: f64,
    pub g33c: f64,
}

impl FractureToughness {
    /// Toughness for a normal mode; shear modes have no softening law.
    pub fn get(&self, mode: Mode) -> Option<f64> {
        match mode {
            Mode::T1 => Some(self.g11t),
            Mode::C1 => Some(self.g11c),
            Mode::T2 => Some(self.g22t),
            Mode::C2 => Some(self.g22c),
            Mode::T3 => Some(self.g33t),
            Mode::C3 => Some(self.g33c),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("G11t", self.g11t),
            ("G11c", self.g11c),
            ("G22t", self.g22t),
            ("G22c", self.g22c),
            ("G33t", self.g33t),
            ("G33c", self.g33c),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Inadmissible(format!("{name} = {v} must be > 0")));
            }
        }
        Ok(())
    }
}

/// Residual-strength degradation constants for one mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FatigueModeParams {
    pub mode: Mode,
    pub c: f64,
    pub p: f64,
    pub q: f64,
    /// Endurance limit (MPa). No degradation accrues at or below it.
    pub s0: f64,
    /// Reference stress ratio the constants were fitted at.
    pub r0: f64,
}

impl FatigueModeParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0) {
            return Err(Error::Inadmissible(format!(
                "fatigue C{} = {} must be > 0",
                self.mode.label(),
                self.c
            )));
        }
        if !(self.q > 0.0) {
            return Err(Error::Inadmissible(format!(
                "fatigue q{} = {} must be > 0",
                self.mode.label(),
                self.q
            )));
        }
        if !(self.s0 >= 0.0) {
            return Err(Error::Inadmissible(format!(
                "fatigue S0,{} = {} must be >= 0",
                self.mode.label(),
                self.s0
            )));
        }
        Ok(())
    }
}

/// Complete ply material record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaminaMaterial {
    pub name: String,
    pub kind: LaminaKind,
    pub elastic: LaminaElastic,
    pub strength: LaminaStrength,
    pub toughness: FractureToughness,
    /// One entry per `Mode`, in `Mode::ALL` order.
    pub fatigue: [FatigueModeParams; 9],
}

impl LaminaMaterial {
    pub fn fatigue(&self, mode: Mode) -> &FatigueModeParams {
        &self.fatigue[mode.index()]
    }

    pub fn validate(&self) -> Result<()> {
        self.elastic.validate()?;
        self.strength.validate()?;
        self.toughness.validate()?;
        for (i, p) in self.fatigue.iter().enumerate() {
            if p.mode.index() != i {
                return Err(Error::Inadmissible(format!(
                    "fatigue entry {i} carries mode {}",
                    p.mode.label()
                )));
            }
            p.validate()?;
        }
        Ok(())
    }
}

/// Per-point damage variables, one per normal failure mode. Values live in
/// [0, 1]; the cap is applied only when forming stiffness.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DamageVector {
    pub d1t: f64,
    pub d1c: f64,
    pub d2t: f64,
    pub d2c: f64,
    pub d3t: f64,
    pub d3c: f64,
}

impl DamageVector {
    pub fn components(&self) -> [f64; 6] {
        [self.d1t, self.d1c, self.d2t, self.d2c, self.d3t, self.d3c]
    }

    pub fn get(&self, mode: Mode) -> f64 {
        match mode {
            Mode::T1 => self.d1t,
            Mode::C1 => self.d1c,
            Mode::T2 => self.d2t,
            Mode::C2 => self.d2c,
            Mode::T3 => self.d3t,
            Mode::C3 => self.d3c,
            _ => 0.0,
        }
    }

    pub fn set(&mut self, mode: Mode, value: f64) {
        debug_assert!(!mode.is_shear());
        match mode {
            Mode::T1 => self.d1t = value,
            Mode::C1 => self.d1c = value,
            Mode::T2 => self.d2t = value,
            Mode::C2 => self.d2c = value,
            Mode::T3 => self.d3t = value,
            Mode::C3 => self.d3c = value,
            _ => {}
        }
    }

    /// Raises `mode` to at least `value` (damage never decreases).
    pub fn raise(&mut self, mode: Mode, value: f64) {
        let cur = self.get(mode);
        if value > cur {
            self.set(mode, value);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.components().iter().all(|&d| d == 0.0)
    }

    /// Directional damage d_ii = 1 - (1 - d_ii^t)(1 - d_ii^c).
    pub fn directional(&self, axis: usize) -> f64 {
        let (dt, dc) = match axis {
            0 => (self.d1t, self.d1c),
            1 => (self.d2t, self.d2c),
            2 => (self.d3t, self.d3c),
            _ => unreachable!("axis must be 0..3"),
        };
        1.0 - (1.0 - dt) * (1.0 - dc)
    }

    /// Shear damages (d12, d13, d23); the coupling branch depends on the
    /// lamina kind.
    pub fn shear(&self, kind: LaminaKind) -> [f64; 3] {
        let d11 = self.directional(0);
        let d22 = self.directional(1);
        let d33 = self.directional(2);
        match kind {
            LaminaKind::Pw => [d11.max(d22), d11, d22],
            LaminaKind::Ud => [d11, d11, d22.max(d33)],
        }
    }

    pub fn max_component(&self) -> f64 {
        self.components().iter().fold(0.0, |a, &b| a.max(b))
    }
}

/// Orthotropic compliance in Voigt order from engineering constants.
pub fn compliance(elastic: &LaminaElastic) -> Matrix6<f64> {
    let mut s = Matrix6::zeros();
    s[(0, 0)] = 1.0 / elastic.e11;
    s[(1, 1)] = 1.0 / elastic.e22;
    s[(2, 2)] = 1.0 / elastic.e33;
    s[(0, 1)] = -elastic.nu12 / elastic.e11;
    s[(1, 0)] = s[(0, 1)];
    s[(0, 2)] = -elastic.nu13 / elastic.e11;
    s[(2, 0)] = s[(0, 2)];
    s[(1, 2)] = -elastic.nu23 / elastic.e22;
    s[(2, 1)] = s[(1, 2)];
    s[(3, 3)] = 1.0 / elastic.g12;
    s[(4, 4)] = 1.0 / elastic.g13;
    s[(5, 5)] = 1.0 / elastic.g23;
    s
}

/// Material-frame 6x6 stiffness from elastic constants.
///
/// The result is symmetric positive definite; its inverse reproduces the
/// compliance built directly from E, G, nu.
pub fn build_stiffness(elastic: &LaminaElastic) -> Result<Matrix6<f64>> {
    elastic.validate()?;
    let s = compliance(elastic);
    let chol = nalgebra::Cholesky::new(s).ok_or_else(|| {
        Error::Inadmissible("compliance is not positive definite".to_string())
    })?;
    let c = chol.inverse();
    // Symmetrise away inversion round-off.
    Ok((c + c.transpose()) * 0.5)
}

/// Applies the sudden/gradual stiffness degradation rule to the elastic
/// constants: moduli scale by (1 - d) per direction, Poisson ratios follow
/// the moduli, shear moduli use the coupled shear damages.
pub fn damaged_elastic(
    elastic: &LaminaElastic,
    dv: &DamageVector,
    kind: LaminaKind,
    cap: f64,
) -> LaminaElastic {
    let f = |d: f64| 1.0 - d.min(cap).max(0.0);
    let k1 = f(dv.directional(0));
    let k2 = f(dv.directional(1));
    let k3 = f(dv.directional(2));
    let [d12, d13, d23] = dv.shear(kind);
    LaminaElastic {
        e11: k1 * elastic.e11,
        e22: k2 * elastic.e22,
        e33: k3 * elastic.e33,
        g12: f(d12) * elastic.g12,
        g13: f(d13) * elastic.g13,
        g23: f(d23) * elastic.g23,
        nu12: k1 * elastic.nu12,
        nu13: k1 * elastic.nu13,
        nu23: k2 * elastic.nu23,
        rho: elastic.rho,
    }
}

/// Damaged material-frame stiffness with the default cap.
pub fn damaged_stiffness(
    elastic: &LaminaElastic,
    dv: &DamageVector,
    kind: LaminaKind,
) -> Result<Matrix6<f64>> {
    build_stiffness(&damaged_elastic(elastic, dv, kind, DAMAGE_CAP))
}

/// Stress transformation matrix (global -> ply) for a rotation of `theta`
/// radians about the laminate normal (3-axis). Voigt order, tensor stress.
pub fn stress_rotation(theta: f64) -> Matrix6<f64> {
    let (m, n) = (theta.cos(), theta.sin());
    let (m2, n2, mn) = (m * m, n * n, m * n);
    let mut t = Matrix6::zeros();
    t[(0, 0)] = m2;
    t[(0, 1)] = n2;
    t[(0, 3)] = 2.0 * mn;
    t[(1, 0)] = n2;
    t[(1, 1)] = m2;
    t[(1, 3)] = -2.0 * mn;
    t[(2, 2)] = 1.0;
    t[(3, 0)] = -mn;
    t[(3, 1)] = mn;
    t[(3, 3)] = m2 - n2;
    t[(4, 4)] = m;
    t[(4, 5)] = n;
    t[(5, 4)] = -n;
    t[(5, 5)] = m;
    t
}

/// Strain transformation matrix (global -> ply) for engineering shear.
pub fn strain_rotation(theta: f64) -> Matrix6<f64> {
    let (m, n) = (theta.cos(), theta.sin());
    let (m2, n2, mn) = (m * m, n * n, m * n);
    let mut t = Matrix6::zeros();
    t[(0, 0)] = m2;
    t[(0, 1)] = n2;
    t[(0, 3)] = mn;
    t[(1, 0)] = n2;
    t[(1, 1)] = m2;
    t[(1, 3)] = -mn;
    t[(2, 2)] = 1.0;
    t[(3, 0)] = -2.0 * mn;
    t[(3, 1)] = 2.0 * mn;
    t[(3, 3)] = m2 - n2;
    t[(4, 4)] = m;
    t[(4, 5)] = n;
    t[(5, 4)] = -n;
    t[(5, 5)] = m;
    t
}

/// Rotates a material-frame stiffness into the global frame for a ply laid
/// at `angle_deg` about the laminate normal.
///
/// Uses C_global = T_eps(theta)^T C T_eps(theta), which is the orthogonal
/// similarity in the Mandel metric; rotating by theta then -theta restores
/// the input.
pub fn rotate_stiffness(stiffness: &Matrix6<f64>, angle_deg: f64) -> Matrix6<f64> {
    if angle_deg == 0.0 {
        return *stiffness;
    }
    let theta = angle_deg.to_radians();
    let te = strain_rotation(theta);
    let c = te.transpose() * stiffness * te;
    (c + c.transpose()) * 0.5
}

/// Ply-frame stress from global-frame stress for a ply at `angle_deg`.
pub fn stress_to_ply(stress_global: &nalgebra::Vector6<f64>, angle_deg: f64) -> nalgebra::Vector6<f64> {
    stress_rotation(angle_deg.to_radians()) * stress_global
}

/// Global-frame stress from ply-frame stress.
pub fn stress_to_global(stress_ply: &nalgebra::Vector6<f64>, angle_deg: f64) -> nalgebra::Vector6<f64> {
    stress_rotation(-angle_deg.to_radians()) * stress_ply
}

/// Converts a Voigt stiffness to the Mandel form whose eigenvalues (Kelvin
/// moduli) are rotation invariants.
pub fn to_mandel(c: &Matrix6<f64>) -> Matrix6<f64> {
    let r2 = std::f64::consts::SQRT_2;
    let mut m = *c;
    for i in 0..6 {
        for j in 0..6 {
            let mut v = m[(i, j)];
            if i >= 3 {
                v *= r2;
            }
            if j >= 3 {
                v *= r2;
            }
            m[(i, j)] = v;
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::Vector6;
    use proptest::prelude::*;

    fn ud_elastic() -> LaminaElastic {
        LaminaElastic {
            e11: 147_000.0,
            e22: 9_000.0,
            e33: 9_000.0,
            g12: 5_000.0,
            g13: 5_000.0,
            g23: 3_000.0,
            nu12: 0.3,
            nu13: 0.3,
            nu23: 0.42,
            rho: 1.6e-9,
        }
    }

    fn pw_elastic() -> LaminaElastic {
        LaminaElastic {
            e11: 56_970.0,
            e22: 56_970.0,
            e33: 8_710.0,
            g12: 3_250.0,
            g13: 2_710.0,
            g23: 2_710.0,
            nu12: 0.063,
            nu13: 0.3,
            nu23: 0.3,
            rho: 1.6e-9,
        }
    }

    #[test]
    fn isotropic_like_input_gives_lame_pattern() {
        let e = 10_000.0;
        let nu = 0.25;
        let g = e / (2.0 * (1.0 + nu));
        let iso = LaminaElastic {
            e11: e,
            e22: e,
            e33: e,
            g12: g,
            g13: g,
            g23: g,
            nu12: nu,
            nu13: nu,
            nu23: nu,
            rho: 1.0e-9,
        };
        let c = build_stiffness(&iso).unwrap();
        let lambda = e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
        let mu = g;
        for i in 0..3 {
            assert_relative_eq!(c[(i, i)], lambda + 2.0 * mu, max_relative = 1e-10);
            assert_relative_eq!(c[(i + 3, i + 3)], mu, max_relative = 1e-10);
            for j in 0..3 {
                if i != j {
                    assert_relative_eq!(c[(i, j)], lambda, max_relative = 1e-10);
                }
            }
        }
    }

    #[test]
    fn ud_stiffness_inverse_reproduces_compliance() {
        let el = ud_elastic();
        let c = build_stiffness(&el).unwrap();
        let s = c.try_inverse().unwrap();
        assert_relative_eq!(s[(0, 0)], 1.0 / 147_000.0, max_relative = 1e-10);
        assert_relative_eq!(s[(1, 1)], 1.0 / 9_000.0, max_relative = 1e-10);
        assert_relative_eq!(s[(3, 3)], 1.0 / 5_000.0, max_relative = 1e-10);
    }

    #[test]
    fn pw_compliance_top_left_entry() {
        let c = build_stiffness(&pw_elastic()).unwrap();
        let s = c.try_inverse().unwrap();
        assert_relative_eq!(s[(0, 0)], 1.0 / 56_970.0, max_relative = 1e-10);
    }

    #[test]
    fn inadmissible_poisson_is_named() {
        let mut el = ud_elastic();
        el.nu12 = 5.0;
        let err = build_stiffness(&el).unwrap_err();
        assert!(err.to_string().contains("nu12"), "{err}");
    }

    #[test]
    fn zero_damage_is_identity() {
        let el = ud_elastic();
        let dv = DamageVector::default();
        let out = damaged_elastic(&el, &dv, LaminaKind::Ud, DAMAGE_CAP);
        assert_eq!(el, out);
    }

    #[test]
    fn fibre_tension_damage_scales_e11_and_nu12() {
        let el = ud_elastic();
        let dv = DamageVector {
            d1t: 0.99,
            ..Default::default()
        };
        let out = damaged_elastic(&el, &dv, LaminaKind::Ud, DAMAGE_CAP);
        assert_relative_eq!(out.e11, 0.01 * el.e11, max_relative = 1e-12);
        assert_relative_eq!(out.nu12, 0.01 * el.nu12, max_relative = 1e-12);
        assert_relative_eq!(out.e22, el.e22);
    }

    #[test]
    fn shear_coupling_branches() {
        // d11 = 0.5 from d1t, d22 = 0.3 from d2t.
        let dv = DamageVector {
            d1t: 0.5,
            d2t: 0.3,
            ..Default::default()
        };
        let el = pw_elastic();
        let pw = damaged_elastic(&el, &dv, LaminaKind::Pw, DAMAGE_CAP);
        assert_relative_eq!(pw.g12, 0.5 * el.g12, max_relative = 1e-12);
        let eu = ud_elastic();
        let ud = damaged_elastic(&eu, &dv, LaminaKind::Ud, DAMAGE_CAP);
        assert_relative_eq!(ud.g12, 0.5 * eu.g12, max_relative = 1e-12);
        assert_relative_eq!(ud.g23, 0.7 * eu.g23, max_relative = 1e-12);
    }

    #[test]
    fn rotation_zero_is_identity() {
        let c = build_stiffness(&ud_elastic()).unwrap();
        assert_eq!(rotate_stiffness(&c, 0.0), c);
    }

    #[test]
    fn rotation_ninety_swaps_axes() {
        let c = build_stiffness(&ud_elastic()).unwrap();
        let r = rotate_stiffness(&c, 90.0);
        assert_relative_eq!(r[(0, 0)], c[(1, 1)], max_relative = 1e-10);
        assert_relative_eq!(r[(1, 1)], c[(0, 0)], max_relative = 1e-10);
        assert_relative_eq!(r[(4, 4)], c[(5, 5)], max_relative = 1e-10);
        assert_relative_eq!(r[(5, 5)], c[(4, 4)], max_relative = 1e-10);
    }

    #[test]
    fn rotation_round_trip_restores_input() {
        let c = build_stiffness(&pw_elastic()).unwrap();
        let back = rotate_stiffness(&rotate_stiffness(&c, 37.5), -37.5);
        for i in 0..6 {
            for j in 0..6 {
                assert_relative_eq!(back[(i, j)], c[(i, j)], max_relative = 1e-12, epsilon = 1e-9);
            }
        }
    }

    /// Independent oracle: classical transformed-compliance formula for the
    /// effective modulus along x of a ply rotated by theta.
    fn effective_ex_transformed_compliance(el: &LaminaElastic, theta_deg: f64) -> f64 {
        let s11 = 1.0 / el.e11;
        let s22 = 1.0 / el.e22;
        let s12 = -el.nu12 / el.e11;
        let s66 = 1.0 / el.g12;
        let t = theta_deg.to_radians();
        let (m, n) = (t.cos(), t.sin());
        let s11p = s11 * m.powi(4)
            + (2.0 * s12 + s66) * m.powi(2) * n.powi(2)
            + s22 * n.powi(4);
        1.0 / s11p
    }

    #[test]
    fn rotation_45_matches_transformed_compliance_oracle() {
        let el = pw_elastic();
        let c = build_stiffness(&el).unwrap();
        let r = rotate_stiffness(&c, 45.0);
        let s = r.try_inverse().unwrap();
        let ex_rotated = 1.0 / s[(0, 0)];
        let ex_oracle = effective_ex_transformed_compliance(&el, 45.0);
        assert_relative_eq!(ex_rotated, ex_oracle, max_relative = 1e-9);
    }

    #[test]
    fn stress_to_ply_45_splits_sigma_xx() {
        let sx = Vector6::new(100.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        let sp = stress_to_ply(&sx, 45.0);
        assert_relative_eq!(sp[0], 50.0, max_relative = 1e-12);
        assert_relative_eq!(sp[1], 50.0, max_relative = 1e-12);
        assert_relative_eq!(sp[3], -50.0, max_relative = 1e-12);
        let back = stress_to_global(&sp, 45.0);
        for i in 0..6 {
            assert_relative_eq!(back[i], sx[i], epsilon = 1e-10);
        }
    }

    #[test]
    fn directional_damage_composition() {
        let dv = DamageVector {
            d1t: 0.4,
            d1c: 0.0,
            ..Default::default()
        };
        assert_relative_eq!(dv.directional(0), 0.4);
        let dv = DamageVector {
            d1t: 0.0,
            d1c: 0.7,
            ..Default::default()
        };
        assert_relative_eq!(dv.directional(0), 0.7);
    }

    fn damage_strategy() -> impl Strategy<Value = DamageVector> {
        (
            0.0..=1.0f64,
            0.0..=1.0f64,
            0.0..=1.0f64,
            0.0..=1.0f64,
            0.0..=1.0f64,
            0.0..=1.0f64,
        )
            .prop_map(|(a, b, c, d, e, f)| DamageVector {
                d1t: a,
                d1c: b,
                d2t: c,
                d2c: d,
                d3t: e,
                d3c: f,
            })
    }

    proptest! {
        #[test]
        fn damaged_stiffness_stays_spd(dv in damage_strategy()) {
            for (el, kind) in [(ud_elastic(), LaminaKind::Ud), (pw_elastic(), LaminaKind::Pw)] {
                let c = damaged_stiffness(&el, &dv, kind).unwrap();
                prop_assert!(nalgebra::Cholesky::new(c).is_some());
            }
        }

        #[test]
        fn degradation_is_monotone(dv in damage_strategy(), bump in 0usize..6, extra in 0.0..=0.5f64) {
            let el = ud_elastic();
            let base = damaged_elastic(&el, &dv, LaminaKind::Ud, DAMAGE_CAP);
            let mut dv2 = dv;
            let mode = [Mode::T1, Mode::C1, Mode::T2, Mode::C2, Mode::T3, Mode::C3][bump];
            dv2.set(mode, (dv.get(mode) + extra).min(1.0));
            let more = damaged_elastic(&el, &dv2, LaminaKind::Ud, DAMAGE_CAP);
            prop_assert!(more.e11 <= base.e11 + 1e-15);
            prop_assert!(more.e22 <= base.e22 + 1e-15);
            prop_assert!(more.e33 <= base.e33 + 1e-15);
            prop_assert!(more.g12 <= base.g12 + 1e-15);
            prop_assert!(more.g13 <= base.g13 + 1e-15);
            prop_assert!(more.g23 <= base.g23 + 1e-15);
        }

        #[test]
        fn directional_composition_bounds(dt in 0.0..=1.0f64, dc in 0.0..=1.0f64) {
            let dv = DamageVector { d1t: dt, d1c: dc, ..Default::default() };
            let d = dv.directional(0);
            prop_assert!(d >= dt.max(dc) - 1e-15);
            prop_assert!((0.0..=1.0 + 1e-15).contains(&d));
        }

        #[test]
        fn kelvin_moduli_preserved_by_rotation(angle in -180.0..180.0f64) {
            let c = build_stiffness(&ud_elastic()).unwrap();
            let r = rotate_stiffness(&c, angle);
            let mut e0 = to_mandel(&c).symmetric_eigenvalues().as_slice().to_vec();
            let mut e1 = to_mandel(&r).symmetric_eigenvalues().as_slice().to_vec();
            e0.sort_by(|a, b| a.partial_cmp(b).unwrap());
            e1.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for (a, b) in e0.iter().zip(&e1) {
                prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
            }
        }
    }
}
