//! Complex and real planar billiard geometry.
//!
//! The library implements the geometry of reflections in the complex
//! projective plane equipped with the complexified Euclidean form:
//! the complex reflection law with its isotropic degenerations, the three
//! 4-reflective billiard families (line-symmetric, line pencils, confocal
//! conics), triangular line fields with their squared-perimeter first
//! integral, Birkhoff distributions on framed polygons, and the real
//! pseudo-billiard applications: skew/usual reflection laws, the billiard
//! transformation on oriented lines, commuting billiards, and invisibility.
//!
//! Everything is verified numerically at desk scale; see the `suite` module
//! and the `billiards` CLI for the full verification battery.


pub mod birkhoff;
pub mod conics;
pub mod projective;
pub mod real_billiards;
pub mod reflectivity;
pub mod report;
pub mod suite;
pub mod triangular;







pub use num_complex::Complex64;

/// Errors shared across the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("degenerate mirror: isotropic tangent or mirror line")]
    DegenerateMirror,
    #[error("isotropic edge: the complex length degenerates")]
    IsotropicEdge,
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("orbit extension failed at mirror {mirror_index}: {reason}")]
    ExtensionFailure { mirror_index: usize, reason: String },
    #[error("patch rejected: {degenerate} of {total} cells degenerate")]
    PatchRejected { degenerate: usize, total: usize },
    #[error("corner hit on the piecewise boundary")]
    CornerHit,
    #[error("tangential hit")]
    TangentialHit,
    #[error("not a reflection: symmetry residual {0:.3e}")]
    NotAReflection(f64),
    #[error("reflection law undefined: endpoint lies on the mirror line")]
    LawUndefined,
    #[error("singular state: {0}")]
    SingularState(String),
    #[error("no concordant length collection on this component")]
    ComponentAbsent,
    #[error("configuration lies on the Lambda locus: integral plane not unique")]
    OnLambda,
    #[error("mirror mismatch in combination with erasing")]
    MirrorMismatch,
    #[error("bodies are not strictly nested")]
    NotNested,
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
