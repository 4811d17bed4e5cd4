//! Face volumes, affine normals, co-normal recovery and the certificates that
//! an immersion is an asymptotic net dual to its co-normal field.

use serde::Serialize;

use crate::certificate::{relative, Certificate, Tracker};
use crate::grid::{d1, d11, d12, d2, d22, FaceGrid, GridDomain, UEdgeGrid, VEdgeGrid, VertexGrid};
use crate::{det3, Error, Index, Result, Vec3};

/// `M = [q(u+1,v)−q(u,v), q(u,v+1)−q(u,v), q(u+1,v+1)−q(u,v)]` and `F = √M`.
#[derive(Clone, Debug)]
pub struct FaceVolumes {
    m: FaceGrid<f64>,
    f: FaceGrid<f64>,
}

impl FaceVolumes {
    pub fn m(&self) -> &FaceGrid<f64> {
        &self.m
    }

    pub fn f(&self) -> &FaceGrid<f64> {
        &self.f
    }

    pub fn into_f(self) -> FaceGrid<f64> {
        self.f
    }
}

/// Signed face volumes without the positivity check.
pub fn face_volume_grid(q: &VertexGrid<Vec3>) -> FaceGrid<f64> {
    FaceGrid::from_fn(q.domain(), |u, v| {
        let o = q.at(u, v);
        det3(
            &(q.at(u + 1, v) - o),
            &(q.at(u, v + 1) - o),
            &(q.at(u + 1, v + 1) - o),
        )
    })
}

/// Face volumes of a nondegenerate net; the first face with `M ≤ 0` is an error.
pub fn face_volumes(q: &VertexGrid<Vec3>) -> Result<FaceVolumes> {
    let m = face_volume_grid(q);
    if let Some(((u, v), value)) = m.iter().find(|(_, x)| !(*x > 0.0)) {
        return Err(Error::NonPositiveVolume {
            face: (u, v),
            value,
        });
    }
    let f = m.map(f64::sqrt);
    Ok(FaceVolumes { m, f })
}

/// Affine normal `ξ = q₁₂ / F` on faces.
#[derive(Clone, Debug)]
pub struct AffineNormalField {
    xi: FaceGrid<Vec3>,
}

impl AffineNormalField {
    pub fn xi(&self) -> &FaceGrid<Vec3> {
        &self.xi
    }

    pub fn into_xi(self) -> FaceGrid<Vec3> {
        self.xi
    }

    /// Largest `‖ξ(face) − ξ(other)‖∞` over all pairs of faces.
    pub fn variation(&self) -> f64 {
        let vals = self.xi.values();
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for x in vals {
            lo = lo.inf(x);
            hi = hi.sup(x);
        }
        if vals.is_empty() {
            0.0
        } else {
            (hi - lo).max()
        }
    }
}

pub fn affine_normal(q: &VertexGrid<Vec3>, f: &FaceGrid<f64>) -> Result<AffineNormalField> {
    if q.domain() != f.domain() {
        return Err(Error::DomainMismatch {
            expected: q.domain(),
            found: f.domain(),
        });
    }
    let q12 = d12(q)?;
    let xi = FaceGrid::from_fn(q.domain(), |u, v| q12.at(u, v) / f.at(u, v));
    Ok(AffineNormalField { xi })
}

/// Which of the four faces around a vertex a recovery formula uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Quadrant {
    PlusPlus,
    MinusPlus,
    MinusMinus,
    PlusMinus,
}

impl Quadrant {
    /// Counter-clockwise starting from `(+,+)`.
    pub const ALL: [Quadrant; 4] = [
        Quadrant::PlusPlus,
        Quadrant::MinusPlus,
        Quadrant::MinusMinus,
        Quadrant::PlusMinus,
    ];

    /// Unit steps `(du, dv)` towards the face.
    pub fn signs(self) -> (i64, i64) {
        match self {
            Quadrant::PlusPlus => (1, 1),
            Quadrant::MinusPlus => (-1, 1),
            Quadrant::MinusMinus => (-1, -1),
            Quadrant::PlusMinus => (1, -1),
        }
    }

    /// Floor index of the face in this quadrant of vertex `(u, v)`.
    pub fn face(self, u: i64, v: i64) -> Index {
        let (su, sv) = self.signs();
        (
            if su > 0 { u } else { u - 1 },
            if sv > 0 { v } else { v - 1 },
        )
    }
}

/// `ν(u,v) = q₁ × q₂ / F` using the edges of the face in `quadrant`;
/// `None` when that face lies outside the domain.
pub fn corner_conormal(
    q1: &UEdgeGrid<Vec3>,
    q2: &VEdgeGrid<Vec3>,
    f: &FaceGrid<f64>,
    vertex: Index,
    quadrant: Quadrant,
) -> Option<Vec3> {
    let (u, v) = vertex;
    let (fu, fv) = quadrant.face(u, v);
    let fval = f.get(fu, fv)?;
    let a = q1.get(fu, v)?;
    let b = q2.get(u, fv)?;
    Some(a.cross(&b) / fval)
}

/// Co-normal recovered from an immersion.
#[derive(Clone, Debug)]
pub struct RecoveredConormal {
    /// Mean over the available formulas.
    pub nu: VertexGrid<Vec3>,
    /// Largest pairwise `‖·‖∞` difference between the formulas at each vertex.
    pub deviation: VertexGrid<f64>,
}

impl RecoveredConormal {
    pub fn max_deviation(&self) -> f64 {
        self.deviation.max_abs()
    }

    /// Formula disagreement relative to the largest recovered co-normal.
    pub fn certificate(&self, tol: f64) -> Certificate {
        let scale = self.nu.max_abs();
        let mut t = Tracker::new("conormal_recovery");
        for (at, d) in self.deviation.iter() {
            t.record_scaled(at, d, scale);
        }
        t.finish(tol)
    }
}

pub fn recover_conormal(q: &VertexGrid<Vec3>) -> Result<RecoveredConormal> {
    let vol = face_volumes(q)?;
    let q1 = d1(q)?;
    let q2 = d2(q)?;
    let d = q.domain();
    let mut nu = VertexGrid::from_fn(d, |_, _| Vec3::zeros());
    let mut deviation = VertexGrid::from_fn(d, |_, _| 0.0);
    for (u, v) in d.vertices() {
        let cands: Vec<Vec3> = Quadrant::ALL
            .iter()
            .filter_map(|&k| corner_conormal(&q1, &q2, vol.f(), (u, v), k))
            .collect();
        let mean = cands.iter().sum::<Vec3>() / cands.len() as f64;
        let mut dev = 0.0_f64;
        for (i, a) in cands.iter().enumerate() {
            for b in &cands[i + 1..] {
                dev = dev.max((a - b).amax());
            }
        }
        nu.set(u, v, mean);
        deviation.set(u, v, dev);
    }
    Ok(RecoveredConormal { nu, deviation })
}

/// Compares a recovered co-normal with a reference one, relative to the
/// largest reference vector.
pub fn conormal_agreement(
    recovered: &VertexGrid<Vec3>,
    reference: &VertexGrid<Vec3>,
    tol: f64,
) -> Result<Certificate> {
    if recovered.domain() != reference.domain() {
        return Err(Error::DomainMismatch {
            expected: reference.domain(),
            found: recovered.domain(),
        });
    }
    let scale = reference.max_abs();
    let mut t = Tracker::new("conormal_agreement");
    for (at, x) in reference.iter() {
        t.record_scaled(at, (recovered.at(at.0, at.1) - x).amax(), scale);
    }
    Ok(t.finish(tol))
}

/// Residuals of the asymptotic-net identities.
#[derive(Clone, Debug, Serialize)]
pub struct AsymptoticReport {
    /// `[q₁(u±½,v), q₂(u,v±½), q₁₁] = 0` and the same with `q₂₂`, each divided by
    /// `‖q₁‖‖q₂‖·max(‖q₁‖, ‖q₂‖, ‖q₁₁‖)` (resp. `q₂₂`).
    pub coplanar: Certificate,
    /// `[q₁, q₂, q₁₂] = F²` on the four edge pairs of every face, relative to `F²`.
    pub mixed: Certificate,
}

impl AsymptoticReport {
    pub fn passed(&self) -> bool {
        self.coplanar.passed && self.mixed.passed
    }
}

fn coplanar_rel(a: &Vec3, b: &Vec3, c: &Vec3) -> (f64, f64) {
    let abs = det3(a, b, c).abs();
    let scale = a.norm() * b.norm() * a.norm().max(b.norm()).max(c.norm());
    (abs, relative(abs, scale))
}

pub fn asymptotic_certificate(q: &VertexGrid<Vec3>, tol: f64) -> Result<AsymptoticReport> {
    let d = q.domain();
    let q1 = d1(q)?;
    let q2 = d2(q)?;
    let m = face_volume_grid(q);
    let q12 = d12(q)?;

    let mut cop = Tracker::new("asymptotic_coplanar");
    for g in [d11(q).ok(), d22(q).ok()].into_iter().flatten() {
        for ((u, v), c) in g.iter() {
            for du in [-1, 0] {
                for dv in [-1, 0] {
                    if let (Some(a), Some(b)) = (q1.get(u + du, v), q2.get(u, v + dv)) {
                        let (abs, rel) = coplanar_rel(&a, &b, &c);
                        cop.record((u, v), abs, rel);
                    }
                }
            }
        }
    }

    let mut mix = Tracker::new("asymptotic_mixed");
    for (u, v) in d.faces() {
        let target = m.at(u, v);
        let c = q12.at(u, v);
        for j in 0..2 {
            for i in 0..2 {
                let det = det3(&q1.at(u, v + j), &q2.at(u + i, v), &c);
                mix.record_scaled((u, v), (det - target).abs(), target.abs());
            }
        }
    }
    Ok(AsymptoticReport {
        coplanar: cop.finish(tol),
        mixed: mix.finish(tol),
    })
}

/// Planar crosses and the saddle sign pattern at interior vertices.
#[derive(Clone, Debug, Serialize)]
pub struct CrossReport {
    /// `|e·ν| / (‖e‖‖ν‖)` for the four edges at each interior vertex.
    pub planarity: Certificate,
    /// 1 at vertices where the four diagonal heights fail to alternate, else 0.
    pub saddle: Certificate,
}

impl CrossReport {
    pub fn passed(&self) -> bool {
        self.planarity.passed && self.saddle.passed
    }
}

/// `(q(u+s,v+t) − q(u,v))·ν(u,v)` for the quadrants in counter-clockwise order.
pub fn diagonal_heights(q: &VertexGrid<Vec3>, nu: &VertexGrid<Vec3>, u: i64, v: i64) -> [f64; 4] {
    let o = q.at(u, v);
    let n = nu.at(u, v);
    Quadrant::ALL.map(|k| {
        let (su, sv) = k.signs();
        (q.at(u + su, v + sv) - o).dot(&n)
    })
}

pub fn planarity_and_saddle(
    q: &VertexGrid<Vec3>,
    nu: &VertexGrid<Vec3>,
    tol: f64,
) -> Result<CrossReport> {
    let d = q.domain();
    if nu.domain() != d {
        return Err(Error::DomainMismatch {
            expected: d,
            found: nu.domain(),
        });
    }
    if d.interior_vertices().next().is_none() {
        return Err(Error::DomainTooSmall(format!("{d} has no interior vertex")));
    }
    let mut plan = Tracker::new("planar_cross");
    let mut sad = Tracker::new("saddle");
    for (u, v) in d.interior_vertices() {
        let o = q.at(u, v);
        let n = nu.at(u, v);
        for (du, dv) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
            let e = q.at(u + du, v + dv) - o;
            let abs = e.dot(&n).abs();
            plan.record_scaled((u, v), abs, e.norm() * n.norm());
        }
        let h = diagonal_heights(q, nu, u, v);
        let alternates = (0..4).all(|i| h[i] * h[(i + 1) % 4] < 0.0);
        let bad = if alternates { 0.0 } else { 1.0 };
        sad.record((u, v), bad, bad);
    }
    Ok(CrossReport {
        planarity: plan.finish(tol),
        saddle: sad.finish(0.5),
    })
}

/// Residuals of the co-normal / affine-normal duality.
#[derive(Clone, Debug, Serialize)]
pub struct DualityReport {
    /// `ν(corner)·ξ(face) − 1` at the four corners of every face.
    pub pairing: Certificate,
    /// `ν₁ × ν₂ + F ξ` for the four edge pairs of every face, relative to
    /// the largest `F‖ξ‖`.
    pub cross: Certificate,
}

impl DualityReport {
    pub fn passed(&self) -> bool {
        self.pairing.passed && self.cross.passed
    }
}

pub fn duality_certificate(
    nu: &VertexGrid<Vec3>,
    xi: &FaceGrid<Vec3>,
    f: &FaceGrid<f64>,
    tol: f64,
) -> Result<DualityReport> {
    let d = nu.domain();
    for other in [xi.domain(), f.domain()] {
        if other != d {
            return Err(Error::DomainMismatch {
                expected: d,
                found: other,
            });
        }
    }
    let nu1 = d1(nu)?;
    let nu2 = d2(nu)?;
    let scale = d
        .faces()
        .map(|(u, v)| f.at(u, v).abs() * xi.at(u, v).amax())
        .fold(0.0, f64::max);
    let mut pair = Tracker::new("duality_pairing");
    let mut cross = Tracker::new("duality_cross");
    for (u, v) in d.faces() {
        let x = xi.at(u, v);
        for (du, dv) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
            let r = (nu.at(u + du, v + dv).dot(&x) - 1.0).abs();
            pair.record((u, v), r, r);
        }
        let fx = x * f.at(u, v);
        for j in 0..2 {
            for i in 0..2 {
                let r = (nu1.at(u, v + j).cross(&nu2.at(u + i, v)) + fx).amax();
                cross.record_scaled((u, v), r, scale);
            }
        }
    }
    Ok(DualityReport {
        pairing: pair.finish(tol),
        cross: cross.finish(tol),
    })
}

/// Domain of a set of grids, checked for equality.
pub(crate) fn same_domain(expected: GridDomain, found: GridDomain) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DomainMismatch { expected, found })
    }
}
