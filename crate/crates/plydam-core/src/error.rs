//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Elastic constants violate thermodynamic admissibility.
    #[error("inadmissible elastic constants: {0}")]
    Inadmissible(String),

    /// Material library parse or lookup failure.
    #[error("material library: {0}")]
    Library(String),

    /// Cycle stress ratio falls in the regime opposite to the mode's
    /// reference ratio (tension vs compression).
    #[error("stress-ratio regime mismatch: cycle r = {r}, reference r0 = {r0}")]
    RegimeMismatch { r: f64, r0: f64 },

    /// The Goodman-type transform denominator is non-positive.
    #[error("ill-posed stress-ratio transform: r = {r}, r0 = {r0}, s = {s}")]
    IllPosedTransform { r: f64, r0: f64, s: f64 },

    /// Equivalent stress at or above the static strength; the caller must
    /// treat the point as statically failed instead of degrading it.
    #[error("static overload: equivalent stress {s} >= strength {x}")]
    StaticOverload { s: f64, x: f64 },

    /// Argument outside the admissible domain of a fatigue relation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Parameter fit cannot proceed on the supplied data.
    #[error("fit infeasible: {0}")]
    FitInfeasible(String),

    /// A fatigue check was asked for a stressed mode with no cycle summary.
    #[error("incomplete cycle data for mode {0}")]
    IncompleteCycleData(&'static str),

    /// Softening law would snap back for this element size.
    #[error(
        "snap-back: fracture strain {eps_f} <= initiation strain {eps_o}; \
         maximum admissible characteristic length is {l_max} mm"
    )]
    SnapBack { eps_f: f64, eps_o: f64, l_max: f64 },

    /// Mesh or model input is malformed.
    #[error("model: {0}")]
    Model(String),

    /// Static system is singular; lists unconstrained rigid-body modes.
    #[error("singular static system; unconstrained rigid-body modes: {0}")]
    Singular(String),

    /// Linear solver failed to reach the requested residual.
    #[error("static solve did not converge: residual {residual} after {iterations} iterations")]
    NoConvergence { residual: f64, iterations: usize },

    /// Explicit time increment collapsed below the sanity floor.
    #[error("explicit instability: time increment {dt} s below 1e-12 s")]
    Instability { dt: f64 },

    /// Spectrum input is malformed.
    #[error("spectrum: {0}")]
    Spectrum(String),

    /// Stage-state container is invalid or inconsistent with the model.
    #[error("stage state: {0}")]
    StageState(String),

    /// Block bisection failed to isolate the first failing cycle.
    #[error("cycle-block bisection overflow at depth {0}")]
    BisectionOverflow(usize),

    /// Run configuration is invalid.
    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}
