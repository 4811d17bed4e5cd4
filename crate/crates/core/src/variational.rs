//! The discrete affine area `Σ √M`, its first variation with respect to
//! vertex positions, and the criticality test.

use serde::Serialize;
use twofloat::TwoFloat;

use crate::certificate::{Certificate, Tracker};
use crate::geometry::face_volumes;
use crate::grid::{d1, d2, Extent, GridKind, VertexGrid};
use crate::{Error, GridDomain, Index, Result, Vec3};

/// Sum of `F = √M` over all faces.
pub fn affine_area(q: &VertexGrid<Vec3>) -> Result<f64> {
    Ok(face_volumes(q)?.f().values().iter().sum())
}

/// Gradient of the affine area at interior vertices.
#[derive(Clone, Debug)]
pub struct AreaGradient {
    pub g: VertexGrid<Vec3>,
}

impl AreaGradient {
    pub fn max_norm(&self) -> f64 {
        self.g.max_abs()
    }
}

pub fn interior_extent(domain: GridDomain) -> Extent {
    let e = Extent::full(domain, GridKind::Vertex);
    Extent {
        u_lo: e.u_lo + 1,
        u_hi: e.u_hi - 1,
        v_lo: e.v_lo + 1,
        v_hi: e.v_hi - 1,
    }
}

/// `g = h₁ + h₂ + h₃ + h₄`, one term per face around the vertex:
///
/// * `h₁ =  q₁(u−½,v−1) × q₂(u−1,v−½) / 2F(u−½,v−½)`
/// * `h₂ = −q₁(u+½,v−1) × q₂(u+1,v−½) / 2F(u+½,v−½)`
/// * `h₃ =  q₁(u+½,v+1) × q₂(u+1,v+½) / 2F(u+½,v+½)`
/// * `h₄ = −q₁(u−½,v+1) × q₂(u−1,v+½) / 2F(u−½,v+½)`
pub fn area_gradient(q: &VertexGrid<Vec3>) -> Result<AreaGradient> {
    let vol = face_volumes(q)?;
    let f = vol.f();
    let q1 = d1(q)?;
    let q2 = d2(q)?;
    let g = VertexGrid::from_fn_on(q.domain(), interior_extent(q.domain()), |u, v| {
        let h1 = q1.at(u - 1, v - 1).cross(&q2.at(u - 1, v - 1)) / (2.0 * f.at(u - 1, v - 1));
        let h2 = -q1.at(u, v - 1).cross(&q2.at(u + 1, v - 1)) / (2.0 * f.at(u, v - 1));
        let h3 = q1.at(u, v + 1).cross(&q2.at(u + 1, v)) / (2.0 * f.at(u, v));
        let h4 = -q1.at(u - 1, v + 1).cross(&q2.at(u - 1, v)) / (2.0 * f.at(u - 1, v));
        h1 + h2 + h3 + h4
    });
    Ok(AreaGradient { g })
}

type Tf3 = [TwoFloat; 3];

fn tf3(x: &Vec3) -> Tf3 {
    [x.x.into(), x.y.into(), x.z.into()]
}

fn sub(a: &Tf3, b: &Tf3) -> Tf3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn det(a: &Tf3, b: &Tf3, c: &Tf3) -> TwoFloat {
    a[0] * (b[1] * c[2] - b[2] * c[1])
        + a[1] * (b[2] * c[0] - b[0] * c[2])
        + a[2] * (b[0] * c[1] - b[1] * c[0])
}

/// Affine area of the faces touching `vertex` with that vertex moved to `p`,
/// in double-double arithmetic.
fn local_area(q: &VertexGrid<Vec3>, vertex: Index, p: &Tf3) -> Result<TwoFloat> {
    let d = q.domain();
    let (u, v) = vertex;
    let pos = |a: i64, b: i64| {
        if (a, b) == vertex {
            *p
        } else {
            tf3(&q.at(a, b))
        }
    };
    let mut total = TwoFloat::from(0.0);
    for (fu, fv) in [(u - 1, v - 1), (u, v - 1), (u - 1, v), (u, v)] {
        if !d.contains_face(fu, fv) {
            continue;
        }
        let o = pos(fu, fv);
        let m = det(
            &sub(&pos(fu + 1, fv), &o),
            &sub(&pos(fu, fv + 1), &o),
            &sub(&pos(fu + 1, fv + 1), &o),
        );
        if !(m > TwoFloat::from(0.0)) {
            return Err(Error::NonPositiveVolume {
                face: (fu, fv),
                value: m.hi(),
            });
        }
        total += m.sqrt();
    }
    Ok(total)
}

/// Derivative of `Σ √M` over the faces around `vertex` along `dir`, from the
/// multilinearity of the determinant, in double-double arithmetic.
fn local_derivative(q: &VertexGrid<Vec3>, vertex: Index, dir: &Tf3) -> TwoFloat {
    let d = q.domain();
    let (u, v) = vertex;
    let mut total = TwoFloat::from(0.0);
    for (fu, fv) in [(u - 1, v - 1), (u, v - 1), (u - 1, v), (u, v)] {
        if !d.contains_face(fu, fv) {
            continue;
        }
        let o = tf3(&q.at(fu, fv));
        let a = sub(&tf3(&q.at(fu + 1, fv)), &o);
        let b = sub(&tf3(&q.at(fu, fv + 1)), &o);
        let c = sub(&tf3(&q.at(fu + 1, fv + 1)), &o);
        let dm = match (u - fu, v - fv) {
            (0, 0) => -(det(dir, &b, &c) + det(&a, dir, &c) + det(&a, &b, dir)),
            (1, 0) => det(dir, &b, &c),
            (0, 1) => det(&a, dir, &c),
            _ => det(&a, &b, dir),
        };
        total += dm / (det(&a, &b, &c).sqrt() * 2.0);
    }
    total
}

/// Analytic against central-difference directional derivative.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct FdCheck {
    /// `g(vertex)·direction` from [`area_gradient`].
    pub analytic: f64,
    /// The same derivative evaluated in double-double arithmetic.
    pub reference: f64,
    pub numeric: f64,
    /// `|analytic − numeric|`.
    pub gap: f64,
    /// `|reference − numeric|`, the truncation error of the difference
    /// quotient alone.
    pub truncation: f64,
}

/// `(ℱ(q + hV) − ℱ(q − hV)) / 2h` for `V = direction` at `vertex` only,
/// against `g(vertex)·direction`.
///
/// Only the faces around `vertex` change, so the difference is taken over
/// those faces, with double-double arithmetic so that the truncation error
/// dominates for the usual step sizes.
pub fn fd_gradient_check(
    q: &VertexGrid<Vec3>,
    vertex: Index,
    direction: &Vec3,
    h: f64,
) -> Result<FdCheck> {
    let (u, v) = vertex;
    if !q.domain().is_interior_vertex(u, v) {
        return Err(Error::InvalidParameter(format!(
            "vertex {vertex:?} is not interior to {}",
            q.domain()
        )));
    }
    if !(h > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "step must be positive, got {h}"
        )));
    }
    let grad = area_gradient(q)?;
    let analytic = grad.g.at(u, v).dot(direction);

    let x = tf3(&q.at(u, v));
    let dir = tf3(direction);
    let th = TwoFloat::from(h);
    let plus = [x[0] + th * dir[0], x[1] + th * dir[1], x[2] + th * dir[2]];
    let minus = [x[0] - th * dir[0], x[1] - th * dir[1], x[2] - th * dir[2]];
    let diff = local_area(q, vertex, &plus)? - local_area(q, vertex, &minus)?;
    let quotient = diff / (th * 2.0);
    let reference = local_derivative(q, vertex, &dir);
    let numeric = f64::from(quotient);
    Ok(FdCheck {
        analytic,
        reference: f64::from(reference),
        numeric,
        gap: (analytic - numeric).abs(),
        truncation: f64::from(reference - quotient).abs(),
    })
}

/// Criticality at interior vertices.
#[derive(Clone, Debug, Serialize)]
pub struct CriticalityReport {
    /// `‖g‖∞` per interior vertex relative to the mean of `F`.
    pub certificate: Certificate,
    pub mean_f: f64,
    pub warning: Option<String>,
}

pub fn criticality_certificate(q: &VertexGrid<Vec3>, tol: f64) -> Result<CriticalityReport> {
    let vol = face_volumes(q)?;
    let fs = vol.f().values();
    let mean_f = fs.iter().sum::<f64>() / fs.len() as f64;
    let grad = area_gradient(q)?;
    let mut t = Tracker::new("criticality");
    for (at, g) in grad.g.iter() {
        t.record_scaled(at, g.amax(), mean_f);
    }
    let warning = grad.g.is_empty().then(|| {
        format!(
            "{} has no interior vertex; criticality holds vacuously",
            q.domain()
        )
    });
    Ok(CriticalityReport {
        certificate: t.finish(tol),
        mean_f,
        warning,
    })
}
