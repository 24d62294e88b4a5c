//! Ply-resolved solid-element kernel: meshes, models, linear statics and
//! explicit dynamics with rigid-sphere contact.

pub mod element;
pub mod mesh;
pub mod model;
pub mod sparse;
pub mod statics;
pub mod vtk;
pub mod explicit;

pub use mesh::{build_plate, parse_mesh, parse_stacking, read_mesh, write_mesh, Mesh, PlateSpec};
pub use model::{
    Assembly, EdgeSupport, Model, PlyMaterials, PointState, RigidImpactor, StateField,
};
pub use statics::{force_on_sets, recover_ply_stresses, StaticSolver, STATIC_TOL};
pub use explicit::{explicit_run, ledger_to_csv, ExplicitConfig, ExplicitOutcome, LedgerRow};
