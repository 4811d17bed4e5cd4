//! Cubic form coefficients `A`, `B` and the identities that tie them to the
//! immersion, the metric coefficient `F` and the affine normal.

use serde::Serialize;

use crate::certificate::{Certificate, Tracker};
use crate::geometry::{affine_normal, face_volumes, same_domain, FaceVolumes};
use crate::grid::{d1, d11, d2, d22, Extent, FaceGrid, GridKind, UEdgeGrid, VEdgeGrid, VertexGrid};
use crate::{det3, Error, Result, Vec3};

/// Everything derived from an immersion that the form computations need.
#[derive(Clone, Debug)]
pub struct SurfaceData {
    pub q: VertexGrid<Vec3>,
    pub q1: UEdgeGrid<Vec3>,
    pub q2: VEdgeGrid<Vec3>,
    pub volumes: FaceVolumes,
    pub xi: FaceGrid<Vec3>,
}

impl SurfaceData {
    pub fn new(q: VertexGrid<Vec3>) -> Result<Self> {
        let volumes = face_volumes(&q)?;
        let xi = affine_normal(&q, volumes.f())?.into_xi();
        Ok(Self {
            q1: d1(&q)?,
            q2: d2(&q)?,
            q,
            volumes,
            xi,
        })
    }

    pub fn f(&self) -> &FaceGrid<f64> {
        self.volumes.f()
    }
}

/// `A` on `u`-interior vertices and `B` on `v`-interior vertices.
#[derive(Clone, Debug)]
pub struct CubicForm {
    pub a: VertexGrid<f64>,
    pub b: VertexGrid<f64>,
    /// Largest disagreement between face choices of `ξ`, per vertex.
    pub spread_a: VertexGrid<f64>,
    pub spread_b: VertexGrid<f64>,
}

/// Storage extent of `A`: all vertices with `u` strictly inside.
pub fn a_extent(domain: crate::GridDomain) -> Extent {
    let e = Extent::full(domain, GridKind::Vertex);
    Extent {
        u_lo: e.u_lo + 1,
        u_hi: e.u_hi - 1,
        ..e
    }
}

/// Storage extent of `B`: all vertices with `v` strictly inside.
pub fn b_extent(domain: crate::GridDomain) -> Extent {
    let e = Extent::full(domain, GridKind::Vertex);
    Extent {
        v_lo: e.v_lo + 1,
        v_hi: e.v_hi - 1,
        ..e
    }
}

fn adjacent_faces(u: i64, v: i64) -> [(i64, i64); 4] {
    [(u - 1, v - 1), (u, v - 1), (u - 1, v), (u, v)]
}

/// Mean, spread and the largest adjacent `F` of `det(e, g, ξ(face))` over
/// the faces around `(u, v)` present in `xi`.
fn face_choices(
    xi: &FaceGrid<Vec3>,
    f: &FaceGrid<f64>,
    u: i64,
    v: i64,
    e: &Vec3,
    g: &Vec3,
) -> (f64, f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut sum = 0.0;
    let mut n = 0;
    let mut fmax = 0.0_f64;
    for (fu, fv) in adjacent_faces(u, v) {
        if let Some(x) = xi.get(fu, fv) {
            let val = det3(e, g, &x);
            lo = lo.min(val);
            hi = hi.max(val);
            sum += val;
            n += 1;
            fmax = fmax.max(f.at(fu, fv));
        }
    }
    (sum / n as f64, hi - lo, fmax)
}

fn check_stencil(domain: crate::GridDomain) -> Result<()> {
    if domain.nu() < 3 || domain.nv() < 3 {
        return Err(Error::DomainTooSmall(format!(
            "{domain} needs at least 3x3 vertices for the cubic form"
        )));
    }
    Ok(())
}

/// `A(u,v) = [q₁(u−½,v), q₁(u+½,v), ξ]` and `B(u,v) = [q₂(u,v+½), q₂(u,v−½), ξ]`,
/// averaged over the adjacent faces after checking they agree to
/// `tol·(|A| + F)`.
pub fn cubic_coefficients(
    q: &VertexGrid<Vec3>,
    xi: &FaceGrid<Vec3>,
    f: &FaceGrid<f64>,
    tol: f64,
) -> Result<CubicForm> {
    let d = q.domain();
    same_domain(d, xi.domain())?;
    same_domain(d, f.domain())?;
    check_stencil(d)?;
    let q1 = d1(q)?;
    let q2 = d2(q)?;

    let mut worst: Option<((i64, i64), f64, f64)> = None;
    let mut note = |at, spread: f64, scale: f64| {
        let rel = spread / scale;
        if !(rel <= tol) && worst.is_none_or(|w| rel > w.2) {
            worst = Some((at, spread, rel));
        }
    };

    let ea = a_extent(d);
    let mut a = VertexGrid::from_fn_on(d, ea, |_, _| 0.0);
    let mut spread_a = a.clone();
    for (u, v) in ea.indices() {
        let (mean, spread, fmax) = face_choices(xi, f, u, v, &q1.at(u - 1, v), &q1.at(u, v));
        a.set(u, v, mean);
        spread_a.set(u, v, spread);
        note((u, v), spread, mean.abs() + fmax);
    }
    let eb = b_extent(d);
    let mut b = VertexGrid::from_fn_on(d, eb, |_, _| 0.0);
    let mut spread_b = b.clone();
    for (u, v) in eb.indices() {
        let (mean, spread, fmax) = face_choices(xi, f, u, v, &q2.at(u, v), &q2.at(u, v - 1));
        b.set(u, v, mean);
        spread_b.set(u, v, spread);
        note((u, v), spread, mean.abs() + fmax);
    }
    if let Some((vertex, spread, _)) = worst {
        return Err(Error::IllDefined { vertex, spread });
    }
    Ok(CubicForm {
        a,
        b,
        spread_a,
        spread_b,
    })
}

/// `A₂ = d2(A)`, `B₁ = d1(B)` and the staggered differences `F₁ = d1(F)`,
/// `F₂ = d2(F)`.
#[derive(Clone, Debug)]
pub struct FormDerivatives {
    pub a2: VEdgeGrid<f64>,
    pub b1: UEdgeGrid<f64>,
    pub f1: VEdgeGrid<f64>,
    pub f2: UEdgeGrid<f64>,
}

impl FormDerivatives {
    pub fn new(form: &CubicForm, f: &FaceGrid<f64>) -> Result<Self> {
        Ok(Self {
            a2: d2(&form.a)?,
            b1: d1(&form.b)?,
            f1: d1(f)?,
            f2: d2(f)?,
        })
    }
}

/// Residuals of the four expansions of `q₁₁` and the four of `q₂₂` in the
/// frame `q₁, q₂`, relative to `max F · max‖edge‖`.
pub fn structural_residuals(
    q: &VertexGrid<Vec3>,
    f: &FaceGrid<f64>,
    form: &CubicForm,
    tol: f64,
) -> Result<Certificate> {
    let d = q.domain();
    same_domain(d, f.domain())?;
    check_stencil(d)?;
    let q1 = d1(q)?;
    let q2 = d2(q)?;
    let q11 = d11(q)?;
    let q22 = d22(q)?;
    let f1 = d1(f)?;
    let f2 = d2(f)?;
    let scale = f.max_abs() * q1.max_abs().max(q2.max_abs());

    let mut t = Tracker::new("structural");
    for ((u, v), c) in q11.iter() {
        let a = form.a.at(u, v);
        // (face u-index, q₁ index) for the u+½ and u−½ variants
        for (fu, eu) in [(u, u), (u - 1, u - 1)] {
            for fv in [v, v - 1] {
                let (Some(fval), Some(g)) = (f.get(fu, fv), q2.get(u, fv)) else {
                    continue;
                };
                let r = c * fval - (q1.at(eu, v) * f1.at(u, fv) + g * a);
                t.record_scaled((u, v), r.amax(), scale);
            }
        }
    }
    for ((u, v), c) in q22.iter() {
        let b = form.b.at(u, v);
        for fu in [u, u - 1] {
            for (fv, ev) in [(v, v), (v - 1, v - 1)] {
                let (Some(fval), Some(e)) = (f.get(fu, fv), q1.get(fu, v)) else {
                    continue;
                };
                let r = c * fval - (e * b + q2.at(u, ev) * f2.at(fu, v));
                t.record_scaled((u, v), r.amax(), scale);
            }
        }
    }
    Ok(t.finish(tol))
}

/// `A₂` and `B₁` evaluated from `q`, `ξ` and `F` alone.
#[derive(Clone, Debug)]
pub struct ClosedForms {
    pub a2: VEdgeGrid<f64>,
    pub b1: UEdgeGrid<f64>,
}

/// Closed forms
/// `A₂(u,v+½) = −F(u−½,v+½)·[q₁(u+½,v), ξ(u−½,v+½), ξ(u+½,v+½)]` and
/// `B₁(u+½,v) = F(u+½,v−½)·[q₂(u,v+½), ξ(u+½,v−½), ξ(u+½,v+½)]`,
/// compared against the direct differences in `derivs` relative to
/// `max(|F|, |A₂|, |B₁|)`.
pub fn a2_b1_closed_form(
    q: &VertexGrid<Vec3>,
    xi: &FaceGrid<Vec3>,
    f: &FaceGrid<f64>,
    derivs: &FormDerivatives,
    tol: f64,
) -> Result<(ClosedForms, Certificate)> {
    let d = q.domain();
    same_domain(d, xi.domain())?;
    same_domain(d, f.domain())?;
    let q1 = d1(q)?;
    let q2 = d2(q)?;

    let a2 = VEdgeGrid::from_fn_on(d, derivs.a2.extent(), |u, v| {
        -f.at(u - 1, v) * det3(&q1.at(u, v), &xi.at(u - 1, v), &xi.at(u, v))
    });
    let b1 = UEdgeGrid::from_fn_on(d, derivs.b1.extent(), |u, v| {
        f.at(u, v - 1) * det3(&q2.at(u, v), &xi.at(u, v - 1), &xi.at(u, v))
    });

    let scale = f
        .max_abs()
        .max(derivs.a2.max_abs())
        .max(derivs.b1.max_abs());
    let mut t = Tracker::new("a2_b1_closed_form");
    for (at, x) in a2.iter() {
        t.record_scaled(at, (x - derivs.a2.at(at.0, at.1)).abs(), scale);
    }
    for (at, x) in b1.iter() {
        t.record_scaled(at, (x - derivs.b1.at(at.0, at.1)).abs(), scale);
    }
    Ok((ClosedForms { a2, b1 }, t.finish(tol)))
}

/// Residuals of `F(u−½,v+½)F(u+½,v+½)·ξ₁(u,v+½) = A₂·q₂(u,v+½)` and
/// `F(u+½,v−½)F(u+½,v+½)·ξ₂(u+½,v) = B₁·q₁(u+½,v)`, relative to
/// `max F² · max‖ξ‖`.
pub fn normal_derivative_residuals(
    q: &VertexGrid<Vec3>,
    xi: &FaceGrid<Vec3>,
    f: &FaceGrid<f64>,
    a2: &VEdgeGrid<f64>,
    b1: &UEdgeGrid<f64>,
    tol: f64,
) -> Result<Certificate> {
    let d = q.domain();
    same_domain(d, xi.domain())?;
    same_domain(d, f.domain())?;
    let q1 = d1(q)?;
    let q2 = d2(q)?;
    let xi1 = d1(xi)?;
    let xi2 = d2(xi)?;
    let fmax = f.max_abs();
    let scale = fmax * fmax * xi.max_abs();

    let mut t = Tracker::new("normal_derivative");
    for ((u, v), a) in a2.iter() {
        let r = xi1.at(u, v) * (f.at(u - 1, v) * f.at(u, v)) - q2.at(u, v) * a;
        t.record_scaled((u, v), r.amax(), scale);
    }
    for ((u, v), b) in b1.iter() {
        let r = xi2.at(u, v) * (f.at(u, v - 1) * f.at(u, v)) - q1.at(u, v) * b;
        t.record_scaled((u, v), r.amax(), scale);
    }
    Ok(t.finish(tol))
}

/// Two independent tests for an improper affine sphere: constant `ξ`, and
/// `A = A(u)`, `B = B(v)`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SphereVerdict {
    /// Largest component-wise range of `ξ`, relative to `max‖ξ‖`.
    pub normal_spread: f64,
    /// `max(|A₂|, |B₁|)` relative to `max(|A|, |B|, F)`.
    pub form_variation: f64,
    pub constant_normal: bool,
    pub separated_forms: bool,
}

impl SphereVerdict {
    /// Whether both tests agree.
    pub fn consistent(&self) -> bool {
        self.constant_normal == self.separated_forms
    }
}

pub fn improper_sphere_verdict(
    xi: &FaceGrid<Vec3>,
    f: &FaceGrid<f64>,
    form: &CubicForm,
    derivs: &FormDerivatives,
    tol: f64,
) -> SphereVerdict {
    let mut lo = Vec3::repeat(f64::INFINITY);
    let mut hi = Vec3::repeat(f64::NEG_INFINITY);
    for x in xi.values() {
        lo = lo.inf(x);
        hi = hi.sup(x);
    }
    let normal_spread = crate::certificate::relative((hi - lo).max(), xi.max_abs());
    let scale = form.a.max_abs().max(form.b.max_abs()).max(f.max_abs());
    let form_variation =
        crate::certificate::relative(derivs.a2.max_abs().max(derivs.b1.max_abs()), scale);
    SphereVerdict {
        normal_spread,
        form_variation,
        constant_normal: normal_spread <= tol,
        separated_forms: form_variation <= tol,
    }
}
