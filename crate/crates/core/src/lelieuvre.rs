//! Discrete Lelieuvre integration of a co-normal field into an immersion.
//!
//! Edge vectors are `q₁(u+½, v) = ν(u,v) × ν(u+1,v)` and
//! `q₂(u, v+½) = −ν(u,v) × ν(u,v+1)`; harmonicity of `ν` makes them
//! integrable.

use crate::certificate::{Certificate, Tracker};
use crate::conormal::ConormalField;
use crate::grid::{d1, d2, GridDomain, UEdgeGrid, VEdgeGrid, VertexGrid};
use crate::{Error, Index, Result, Vec3};

/// Vertex positions of an asymptotic quad net together with the integration
/// constant that produced them.
#[derive(Clone, Debug)]
pub struct Immersion {
    q: VertexGrid<Vec3>,
    base_vertex: Index,
    base_value: Vec3,
}

impl Immersion {
    /// Wraps positions read from elsewhere; the base is the lower-left vertex.
    pub fn from_grid(q: VertexGrid<Vec3>) -> Self {
        let d = q.domain();
        let base_vertex = (d.u_min, d.v_min);
        let base_value = q.at(d.u_min, d.v_min);
        Self {
            q,
            base_vertex,
            base_value,
        }
    }

    pub fn q(&self) -> &VertexGrid<Vec3> {
        &self.q
    }

    pub fn domain(&self) -> GridDomain {
        self.q.domain()
    }

    pub fn base_vertex(&self) -> Index {
        self.base_vertex
    }

    pub fn base_value(&self) -> Vec3 {
        self.base_value
    }

    pub fn into_grid(self) -> VertexGrid<Vec3> {
        self.q
    }
}

/// Order in which edges are accumulated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IntegrationOrder {
    /// Walk the base row with `q₁` steps, then every column with `q₂` steps.
    RowsThenColumns,
    /// Walk the base column with `q₂` steps, then every row with `q₁` steps.
    ColumnsThenRows,
}

/// `ν(u,v) × ν(u+1,v)` on every `u`-edge.
pub fn lelieuvre_u_edges(nu: &VertexGrid<Vec3>) -> UEdgeGrid<Vec3> {
    UEdgeGrid::from_fn(nu.domain(), |u, v| nu.at(u, v).cross(&nu.at(u + 1, v)))
}

/// `−ν(u,v) × ν(u,v+1)` on every `v`-edge.
pub fn lelieuvre_v_edges(nu: &VertexGrid<Vec3>) -> VEdgeGrid<Vec3> {
    VEdgeGrid::from_fn(nu.domain(), |u, v| -nu.at(u, v).cross(&nu.at(u, v + 1)))
}

/// Raw integration of any vertex field (no harmonicity or sign check).
///
/// For a non-harmonic field the result depends on `order`.
pub fn integrate_grid(
    nu: &VertexGrid<Vec3>,
    base_vertex: Index,
    base_value: Vec3,
    order: IntegrationOrder,
) -> Result<VertexGrid<Vec3>> {
    let d = nu.domain();
    let (bu, bv) = base_vertex;
    if !d.contains_vertex(bu, bv) {
        return Err(Error::InvalidParameter(format!(
            "base vertex {base_vertex:?} outside {d}"
        )));
    }
    let e1 = lelieuvre_u_edges(nu);
    let e2 = lelieuvre_v_edges(nu);
    let mut q = VertexGrid::from_fn(d, |_, _| Vec3::zeros());
    q.set(bu, bv, base_value);

    let walk_u = |q: &mut VertexGrid<Vec3>, v: i64| {
        for u in bu + 1..=d.u_max {
            q.set(u, v, q.at(u - 1, v) + e1.at(u - 1, v));
        }
        for u in (d.u_min..bu).rev() {
            q.set(u, v, q.at(u + 1, v) - e1.at(u, v));
        }
    };
    let walk_v = |q: &mut VertexGrid<Vec3>, u: i64| {
        for v in bv + 1..=d.v_max {
            q.set(u, v, q.at(u, v - 1) + e2.at(u, v - 1));
        }
        for v in (d.v_min..bv).rev() {
            q.set(u, v, q.at(u, v + 1) - e2.at(u, v));
        }
    };

    match order {
        IntegrationOrder::RowsThenColumns => {
            walk_u(&mut q, bv);
            for u in d.u_min..=d.u_max {
                walk_v(&mut q, u);
            }
        }
        IntegrationOrder::ColumnsThenRows => {
            walk_v(&mut q, bu);
            for v in d.v_min..=d.v_max {
                walk_u(&mut q, v);
            }
        }
    }
    Ok(q)
}

/// Integrates `field` with `q(base_vertex) = base_value`, rows first.
pub fn integrate(field: &ConormalField, base_vertex: Index, base_value: Vec3) -> Result<Immersion> {
    let q = integrate_grid(
        field.nu(),
        base_vertex,
        base_value,
        IntegrationOrder::RowsThenColumns,
    )?;
    Ok(Immersion {
        q,
        base_vertex,
        base_value,
    })
}

/// Integrates from the lower-left vertex placed at the origin.
pub fn integrate_default(field: &ConormalField) -> Result<Immersion> {
    let d = field.domain();
    integrate(field, (d.u_min, d.v_min), Vec3::zeros())
}

/// Largest `‖(ν(u+1,v) + ν(u,v+1)) × (ν(u+1,v+1) + ν(u,v))‖∞` over faces,
/// i.e. the failure of `q₁₂ = q₂₁`.
pub fn path_independence_residual(nu: &VertexGrid<Vec3>) -> f64 {
    nu.domain()
        .faces()
        .map(|(u, v)| {
            (nu.at(u + 1, v) + nu.at(u, v + 1))
                .cross(&(nu.at(u + 1, v + 1) + nu.at(u, v)))
                .amax()
        })
        .fold(0.0, f64::max)
}

/// Per-edge residuals `‖q₁ − ν × ν(u+1,·)‖∞` and `‖q₂ + ν × ν(·,v+1)‖∞`,
/// normalized by the longest edge of `q`.
pub fn verify_lelieuvre(q: &Immersion, field: &ConormalField, tol: f64) -> Result<Certificate> {
    lelieuvre_certificate(q.q(), field.nu(), tol)
}

/// Same as [`verify_lelieuvre`] for a co-normal grid that was not validated.
pub fn lelieuvre_certificate(
    q: &VertexGrid<Vec3>,
    nu: &VertexGrid<Vec3>,
    tol: f64,
) -> Result<Certificate> {
    if q.domain() != nu.domain() {
        return Err(Error::DomainMismatch {
            expected: nu.domain(),
            found: q.domain(),
        });
    }
    let q1 = d1(q)?;
    let q2 = d2(q)?;
    let e1 = lelieuvre_u_edges(nu);
    let e2 = lelieuvre_v_edges(nu);
    let scale = q1.max_abs().max(q2.max_abs());
    let mut t = Tracker::new("lelieuvre");
    for ((u, v), x) in q1.iter() {
        t.record_scaled((u, v), (x - e1.at(u, v)).amax(), scale);
    }
    for ((u, v), x) in q2.iter() {
        t.record_scaled((u, v), (x - e2.at(u, v)).amax(), scale);
    }
    Ok(t.finish(tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conormal::{hyperbolic_paraboloid, minimal_cubic, Example};

    fn dom(u0: i64, u1: i64, v0: i64, v1: i64) -> GridDomain {
        GridDomain::new(u0, u1, v0, v1).unwrap()
    }

    #[test]
    fn paraboloid_integrates_to_uv() {
        let field = hyperbolic_paraboloid(dom(-3, 5, -2, 6)).unwrap();
        let q = integrate(&field, (0, 0), Vec3::zeros()).unwrap();
        for (u, v) in field.domain().vertices() {
            let (uf, vf) = (u as f64, v as f64);
            assert_eq!(q.q().at(u, v), Vec3::new(uf, vf, uf * vf));
        }
    }

    #[test]
    fn paraboloid_edges() {
        let field = hyperbolic_paraboloid(dom(0, 4, 0, 4)).unwrap();
        let e1 = lelieuvre_u_edges(field.nu());
        let e2 = lelieuvre_v_edges(field.nu());
        for ((u, v), x) in e1.iter() {
            let _ = u;
            assert_eq!(x, Vec3::new(1.0, 0.0, v as f64));
        }
        for ((u, _), x) in e2.iter() {
            assert_eq!(x, Vec3::new(0.0, 1.0, u as f64));
        }
    }

    #[test]
    fn translation_equivariance() {
        let field = Example::Helicoid { n: 16 }
            .generate(dom(0, 4, 0, 6))
            .unwrap();
        let w = Vec3::new(1.5, -2.0, 0.25);
        let a = integrate(&field, (0, 0), Vec3::zeros()).unwrap();
        let b = integrate(&field, (0, 0), w).unwrap();
        for (u, v) in field.domain().vertices() {
            assert!((b.q().at(u, v) - a.q().at(u, v) - w).amax() < 1e-14);
        }
    }

    #[test]
    fn cubic_first_edge_vanishes_at_origin() {
        // nu(0,0) = 0 so F = 0 on the face (0,0); the raw integration still runs
        let nu = Example::MinimalCubic.separable(dom(0, 2, 0, 2)).sample();
        let q = integrate_grid(
            &nu,
            (0, 0),
            Vec3::zeros(),
            IntegrationOrder::RowsThenColumns,
        )
        .unwrap();
        assert_eq!(q.at(1, 0), Vec3::zeros());
        assert!(minimal_cubic(dom(0, 2, 0, 2)).is_err());
    }

    #[test]
    fn base_vertex_in_the_middle() {
        let field = hyperbolic_paraboloid(dom(-2, 2, -2, 2)).unwrap();
        let q = integrate(&field, (1, -1), Vec3::new(1.0, -1.0, -1.0)).unwrap();
        for (u, v) in field.domain().vertices() {
            let (uf, vf) = (u as f64, v as f64);
            assert_eq!(q.q().at(u, v), Vec3::new(uf, vf, uf * vf));
        }
        assert!(integrate(&field, (3, 0), Vec3::zeros()).is_err());
    }

    #[test]
    fn path_independence() {
        let par = hyperbolic_paraboloid(dom(0, 5, 0, 5)).unwrap();
        assert_eq!(path_independence_residual(par.nu()), 0.0);

        let hel = Example::Helicoid { n: 16 }
            .generate(dom(0, 8, 0, 16))
            .unwrap();
        assert!(path_independence_residual(hel.nu()) <= 1e-12 * 8.0);

        let mut nu = par.nu().clone();
        nu.set(2, 3, nu.at(2, 3) + Vec3::new(0.1, 0.0, 0.0));
        assert!(path_independence_residual(&nu) > 0.0);
    }

    #[test]
    fn verify_round_trip_and_scaled_mismatch() {
        let field = Example::Helicoid { n: 16 }
            .generate(dom(0, 6, 0, 8))
            .unwrap();
        let q = integrate_default(&field).unwrap();
        let c = verify_lelieuvre(&q, &field, 1e-10).unwrap();
        assert!(c.passed);
        assert!(c.max_abs <= 1e-12);

        let scaled = Immersion::from_grid(q.q().map(|x| x * 2.0));
        let c = verify_lelieuvre(&scaled, &field, 1e-10).unwrap();
        assert!(!c.passed);
        // residual of 2q₁ − q₁ is the edge itself
        let longest = d1(q.q())
            .unwrap()
            .max_abs()
            .max(d2(q.q()).unwrap().max_abs());
        assert!((c.max_abs - longest).abs() < 1e-12);
    }

    #[test]
    fn verify_rejects_other_domain() {
        let a = hyperbolic_paraboloid(dom(0, 3, 0, 3)).unwrap();
        let b = hyperbolic_paraboloid(dom(0, 4, 0, 3)).unwrap();
        let q = integrate_default(&a).unwrap();
        assert!(matches!(
            verify_lelieuvre(&q, &b, 1e-10),
            Err(Error::DomainMismatch { .. })
        ));
    }
}
