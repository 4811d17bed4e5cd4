use std::path::PathBuf;

use thiserror::Error;

use crate::grid::GridDomain;

/// Face, edge or vertex storage index `(u, v)`.
pub type Index = (i64, i64);

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain too small: {0}")]
    DomainTooSmall(String),

    #[error("non-convex face {face:?}: F = {value:e}")]
    NonConvexFace { face: Index, value: f64 },

    #[error("co-normal field is not harmonic: max |nu_12| = {max_residual:e} on faces {faces:?}")]
    NotHarmonic {
        max_residual: f64,
        faces: Vec<Index>,
    },

    #[error("domain mismatch: expected {expected}, found {found}")]
    DomainMismatch {
        expected: GridDomain,
        found: GridDomain,
    },

    #[error("non-positive volume on face {face:?}: M = {value:e}")]
    NonPositiveVolume { face: Index, value: f64 },

    #[error("cubic form ill-defined at vertex {vertex:?}: face choices spread by {spread:e}")]
    IllDefined { vertex: Index, spread: f64 },

    #[error("seed determinant {found:e} does not match F^2 = {expected:e}")]
    SeedDeterminantMismatch { expected: f64, found: f64 },

    #[error("incompatible data at face {face:?}: gap {gap:e}")]
    IncompatibleData { face: Index, gap: f64 },

    #[error("surfaces are not affine equivalent: gap {gap:e} at vertex {vertex:?}")]
    NotEquivalent { vertex: Index, gap: f64 },

    #[error("first quadrangle is degenerate (det = {det:e})")]
    DegenerateQuadrangle { det: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed input: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
