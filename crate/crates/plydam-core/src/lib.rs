//! Progressive damage analysis of fibre-composite laminates.
//!
//! The crate covers the full pre-fatigue -> low-velocity-impact -> fatigue
//! chain on ply-resolved solid-element plate models:
//!
//! - [`material`]: ply data, orthotropic stiffness, damage-coupled
//!   degradation, material library files
//! - [`fatigue`]: residual-strength degradation recursion, stress-ratio
//!   transform, fatigue failure criteria, parameter fitting
//! - [`impact`]: impact failure criteria and energy-regularized softening
//! - [`spectrum`]: rainflow counting, cycle merging, quasi-static load cases
//! - [`fem`]: hex-element kernel, linear statics, explicit dynamics with
//!   rigid-sphere contact
//! - [`pipeline`]: stage orchestration, damage transfer, life reporting

pub mod error;
pub mod fatigue;
pub mod fem;
pub mod impact;
pub mod material;
pub mod pipeline;
pub mod spectrum;

pub use error::{Error, Result};
pub use material::{
    DamageVector, FatigueModeParams, FractureToughness, LaminaElastic, LaminaKind,
    LaminaMaterial, LaminaStrength, Mode,
};
pub use material::library::MaterialLibrary;
