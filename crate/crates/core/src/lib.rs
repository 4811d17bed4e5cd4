//! Quad nets in discrete asymptotic coordinates that are critical for the
//! discrete affine area (saddle-type, Berwald–Blaschke metric of signature (1,1)).
//!
//! The library builds quad nets in discrete asymptotic coordinates from
//! harmonic co-normal fields (`ν₁₂ = 0`) by discrete Lelieuvre integration,
//! and provides:
//!
//! * the derived fields of such nets: face volumes `M`, the metric
//!   coefficient `F = √M`, the affine normal `ξ`, and the cubic form `(A, B)`;
//! * certificates for the identities these nets satisfy (asymptotic crosses,
//!   co-normal recovery, duality, structural expansions, compatibility);
//! * reconstruction of a net from `(F, A, B)` and an affine-equivalence check;
//! * the discrete affine area functional, its gradient and a criticality test;
//! * bilinear patch tessellation and OBJ export.
//!
//! Grid quantities at half-integer positions are stored at the floor index;
//! see [`grid`] for the conventions.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certificate;
pub mod compatibility;
pub mod conormal;
mod error;
pub mod forms;
pub mod geometry;
pub mod grid;
pub mod io;
pub mod lelieuvre;
pub mod mesh;
pub mod pipeline;
pub mod variational;

pub use certificate::Certificate;
pub use error::{Error, Index, Result};
pub use grid::{FaceGrid, GridDomain, UEdgeGrid, VEdgeGrid, VertexGrid};

/// Points, edge vectors, co-normals and affine normals.
pub type Vec3 = nalgebra::Vector3<f64>;

/// `[a, b, c] = a · (b × c)`.
#[inline]
pub fn det3(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    a.dot(&b.cross(c))
}

/// Default tolerances of every check. All are relative unless noted.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Tolerances {
    /// Absolute, per component, on `ν₁₂` of externally supplied co-normals.
    pub harmonic: f64,
    /// Lelieuvre edge residuals relative to the longest edge.
    pub integrate: f64,
    /// Duality, co-normal recovery and asymptotic certificates.
    pub dual: f64,
    /// Cubic form well-definedness and the derivative identities.
    pub forms: f64,
    /// Compatibility residuals and two-way reconstruction agreement.
    pub compat: f64,
    /// Affine equivalence gap relative to the surface extent.
    pub equiv: f64,
    /// Seed determinant against `F²`.
    pub seed: f64,
    /// Area gradient relative to the mean of `F`.
    pub crit: f64,
}

impl Tolerances {
    /// Tolerance that internally generated co-normals must meet.
    pub const GENERATED_HARMONIC: f64 = 1e-12;
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            harmonic: 1e-9,
            integrate: 1e-10,
            dual: 1e-9,
            forms: 1e-8,
            compat: 1e-7,
            equiv: 1e-6,
            seed: 1e-9,
            crit: 1e-9,
        }
    }
}
