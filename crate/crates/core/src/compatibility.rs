//! Compatibility equations for `(F, A, B)`, reconstruction of a net from
//! them, and the affine-equivalence test for two nets.

use nalgebra::Matrix3;
use serde::Serialize;

use crate::certificate::{Certificate, Tracker};
use crate::forms::{a_extent, b_extent, cubic_coefficients, SurfaceData};
use crate::geometry::same_domain;
use crate::grid::{d1, d2, FaceGrid, VertexGrid};
use crate::lelieuvre::{integrate_grid, Immersion, IntegrationOrder};
use crate::{Error, GridDomain, Index, Result, Vec3};

/// Metric coefficient and cubic form of a net.
#[derive(Clone, Debug)]
pub struct FundamentalData {
    f: FaceGrid<f64>,
    a: VertexGrid<f64>,
    b: VertexGrid<f64>,
}

impl FundamentalData {
    /// Checks that `A` and `B` live on their stencil extents and that `F > 0`.
    pub fn new(f: FaceGrid<f64>, a: VertexGrid<f64>, b: VertexGrid<f64>) -> Result<Self> {
        let d = f.domain();
        same_domain(d, a.domain())?;
        same_domain(d, b.domain())?;
        if d.nu() < 3 || d.nv() < 3 {
            return Err(Error::DomainTooSmall(format!(
                "{d} needs at least 3x3 vertices"
            )));
        }
        if a.extent() != a_extent(d) || b.extent() != b_extent(d) {
            return Err(Error::Format(
                "A must cover the u-interior vertices and B the v-interior vertices".into(),
            ));
        }
        if let Some((face, value)) = f.iter().find(|(_, x)| !(*x > 0.0)) {
            return Err(Error::NonPositiveVolume { face, value });
        }
        Ok(Self { f, a, b })
    }

    /// `(F, A, B)` of an immersion; `tol_forms` bounds the face-choice spread.
    pub fn extract(q: &VertexGrid<Vec3>, tol_forms: f64) -> Result<Self> {
        let s = SurfaceData::new(q.clone())?;
        let form = cubic_coefficients(&s.q, &s.xi, s.f(), tol_forms)?;
        Self::new(s.volumes.into_f(), form.a, form.b)
    }

    pub fn domain(&self) -> GridDomain {
        self.f.domain()
    }

    pub fn f(&self) -> &FaceGrid<f64> {
        &self.f
    }

    pub fn a(&self) -> &VertexGrid<f64> {
        &self.a
    }

    pub fn b(&self) -> &VertexGrid<f64> {
        &self.b
    }
}

/// Residuals of the three compatibility equations.
#[derive(Clone, Debug, Serialize)]
pub struct CompatibilityReport {
    /// `F(u−½,v+½)F(u+½,v−½) − F(u+½,v+½)F(u−½,v−½) = AB`.
    pub r0: Certificate,
    /// `F(u−½,v−½)B₁(u+½,v) − F(u+½,v−½)B₁(u−½,v) = B·A₂(u,v−½)`.
    pub r1: Certificate,
    /// `F(u−½,v−½)A₂(u,v+½) − F(u−½,v+½)A₂(u,v−½) = A·B₁(u−½,v)`.
    pub r2: Certificate,
}

impl CompatibilityReport {
    pub fn passed(&self) -> bool {
        self.r0.passed && self.r1.passed && self.r2.passed
    }

    /// The worst of the three by relative residual.
    pub fn worst(&self) -> &Certificate {
        [&self.r1, &self.r2]
            .into_iter()
            .fold(&self.r0, |w, c| if c.max_rel > w.max_rel { c } else { w })
    }
}

/// Evaluates each equation at every interior vertex. Each residual is divided
/// by the larger of `max F²` and the largest term of that equation anywhere.
pub fn compatibility_residuals(data: &FundamentalData, tol: f64) -> Result<CompatibilityReport> {
    let d = data.domain();
    let f = &data.f;
    let a = &data.a;
    let b = &data.b;
    let a2 = d2(a)?;
    let b1 = d1(b)?;
    let fmax = f.max_abs();
    let f2max = fmax * fmax;

    // (vertex, lhs terms, rhs)
    let mut rows: [Vec<(Index, [f64; 3])>; 3] = Default::default();
    for (u, v) in d.interior_vertices() {
        let fmm = f.at(u - 1, v - 1);
        let fpm = f.at(u, v - 1);
        let fmp = f.at(u - 1, v);
        let fpp = f.at(u, v);
        rows[0].push(((u, v), [fmp * fpm, fpp * fmm, a.at(u, v) * b.at(u, v)]));
        rows[1].push((
            (u, v),
            [
                fmm * b1.at(u, v),
                fpm * b1.at(u - 1, v),
                b.at(u, v) * a2.at(u, v - 1),
            ],
        ));
        rows[2].push((
            (u, v),
            [
                fmm * a2.at(u, v),
                fmp * a2.at(u, v - 1),
                a.at(u, v) * b1.at(u - 1, v),
            ],
        ));
    }
    let names = ["compat_r0", "compat_r1", "compat_r2"];
    let mut out = names.map(|n| Tracker::new(n).finish(tol));
    for (k, row) in rows.iter().enumerate() {
        let scale = row
            .iter()
            .flat_map(|(_, t)| t.iter().map(|x| x.abs()))
            .fold(f2max, f64::max);
        let mut t = Tracker::new(names[k]);
        for &(at, [x, y, z]) in row {
            t.record_scaled(at, (x - y - z).abs(), scale);
        }
        out[k] = t.finish(tol);
    }
    let [r0, r1, r2] = out;
    Ok(CompatibilityReport { r0, r1, r2 })
}

/// The seed `(0,0,0), (1,0,0), (0,1,0), (1,1,F²)`, whose volume is `F²`.
pub fn canonical_seed(f00: f64) -> Result<[Vec3; 4]> {
    if !(f00 > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "seed needs F > 0, got {f00}"
        )));
    }
    Ok([
        Vec3::zeros(),
        Vec3::new(1.0, 0.0, 0.0),
        Vec3::new(0.0, 1.0, 0.0),
        Vec3::new(1.0, 1.0, f00 * f00),
    ])
}

/// Seed points of an existing net: its lower-left quadrangle in the order
/// `q(0,0), q(1,0), q(0,1), q(1,1)` relative to the domain corner.
pub fn seed_of(q: &VertexGrid<Vec3>) -> [Vec3; 4] {
    let d = q.domain();
    let (u, v) = (d.u_min, d.v_min);
    [
        q.at(u, v),
        q.at(u + 1, v),
        q.at(u, v + 1),
        q.at(u + 1, v + 1),
    ]
}

/// Volume of the quadrangle spanned by a seed.
pub fn seed_volume(seed: &[Vec3; 4]) -> f64 {
    crate::det3(
        &(seed[1] - seed[0]),
        &(seed[2] - seed[0]),
        &(seed[3] - seed[0]),
    )
}

/// Tolerances used by [`reconstruct`].
#[derive(Clone, Copy, Debug)]
pub struct ReconstructTolerances {
    pub seed: f64,
    pub compat: f64,
}

impl Default for ReconstructTolerances {
    fn default() -> Self {
        let t = crate::Tolerances::default();
        Self {
            seed: t.seed,
            compat: t.compat,
        }
    }
}

/// Builds the net with the given `(F, A, B)` whose lower-left quadrangle is
/// `seed`.
///
/// The two bottom rows are extended in `u` with the `q₁₁` expansions and the
/// two left columns in `v` with the `q₂₂` expansions. These strips fix the
/// co-normal along row `v_min` and column `u_min`; it is continued to the
/// whole domain by `ν₁₂ = 0` and integrated. Marching every column in `v`
/// instead amplifies rounding errors geometrically, which is why the interior
/// goes through the co-normal. The result is accepted when its own `F`, `A`
/// and `B` match the data within `tol.compat`.
pub fn reconstruct(
    data: &FundamentalData,
    seed: &[Vec3; 4],
    tol: ReconstructTolerances,
) -> Result<Immersion> {
    let d = data.domain();
    let (u0, v0) = (d.u_min, d.v_min);
    let f = &data.f;
    let a = &data.a;
    let b = &data.b;

    let f00 = f.at(u0, v0);
    let expected = f00 * f00;
    let found = seed_volume(seed);
    if !((found - expected).abs() <= tol.seed * expected) {
        return Err(Error::SeedDeterminantMismatch { expected, found });
    }

    let report = compatibility_residuals(data, tol.compat)?;
    if !report.passed() {
        let w = report.worst();
        let [u, v] = w.worst.unwrap_or([u0, v0]);
        return Err(Error::IncompatibleData {
            face: (u, v),
            gap: w.max_rel,
        });
    }

    let f1 = d1(f)?;
    let f2 = d2(f)?;
    let mut q = VertexGrid::from_fn(d, |_, _| Vec3::zeros());
    q.set(u0, v0, seed[0]);
    q.set(u0 + 1, v0, seed[1]);
    q.set(u0, v0 + 1, seed[2]);
    q.set(u0 + 1, v0 + 1, seed[3]);

    let (r0, r1) = (v0, v0 + 1);
    for u in u0 + 1..d.u_max {
        let g = q.at(u, r1) - q.at(u, r0);
        let fl = f.at(u - 1, r0);
        let e0 = q.at(u, r0) - q.at(u - 1, r0);
        let q11 = (e0 * f1.at(u, r0) + g * a.at(u, r0)) / fl;
        q.set(u + 1, r0, q.at(u, r0) + e0 + q11);
        let e1 = q.at(u, r1) - q.at(u - 1, r1);
        let q11 = (e1 * f1.at(u, r0) + g * a.at(u, r1)) / fl;
        q.set(u + 1, r1, q.at(u, r1) + e1 + q11);
    }

    let (c0, c1) = (u0, u0 + 1);
    for v in v0 + 1..d.v_max {
        let e = q.at(c1, v) - q.at(c0, v);
        let fb = f.at(c0, v - 1);
        let g0 = q.at(c0, v) - q.at(c0, v - 1);
        let q22 = (e * b.at(c0, v) + g0 * f2.at(c0, v)) / fb;
        let g1 = q.at(c1, v) - q.at(c1, v - 1);
        let q22_1 = (e * b.at(c1, v) + g1 * f2.at(c0, v)) / fb;
        q.set(c0, v + 1, q.at(c0, v) + g0 + q22);
        q.set(c1, v + 1, q.at(c1, v) + g1 + q22_1);
    }

    // ν = q₁ × q₂ / F on the strips, taken from the face inside the strip.
    let corner = |q: &VertexGrid<Vec3>, u: i64, v: i64| {
        let fu = if u < d.u_max { u } else { u - 1 };
        let fv = if v < d.v_max { v } else { v - 1 };
        let e1 = q.at(fu + 1, v) - q.at(fu, v);
        let e2 = q.at(u, fv + 1) - q.at(u, fv);
        e1.cross(&e2) / f.at(fu, fv)
    };
    let row: Vec<Vec3> = (u0..=d.u_max).map(|u| corner(&q, u, v0)).collect();
    let col: Vec<Vec3> = (v0..=d.v_max).map(|v| corner(&q, u0, v)).collect();
    let nu = VertexGrid::from_fn(d, |u, v| {
        row[(u - u0) as usize] + col[(v - v0) as usize] - row[0]
    });
    let q = integrate_grid(&nu, (u0, v0), seed[0], IntegrationOrder::RowsThenColumns)?;

    let own = FundamentalData::extract(&q, f64::INFINITY)?;
    let fmax = f.max_abs();
    let mut worst: Option<(Index, f64)> = None;
    let mut note = |at: Index, gap: f64| {
        if !(gap <= tol.compat) && worst.is_none_or(|w| gap > w.1) {
            worst = Some((at, gap));
        }
    };
    for ((u, v), x) in f.iter() {
        note((u, v), (own.f.at(u, v) - x).abs() / x);
    }
    for ((u, v), x) in a.iter() {
        note((u, v), (own.a.at(u, v) - x).abs() / (x.abs() + fmax));
    }
    for ((u, v), x) in b.iter() {
        note((u, v), (own.b.at(u, v) - x).abs() / (x.abs() + fmax));
    }
    if let Some((at, gap)) = worst {
        return Err(Error::IncompatibleData { face: at, gap });
    }
    Ok(Immersion::from_grid(q))
}

/// `x ↦ linear·x + translation`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AffineMap {
    pub linear: Matrix3<f64>,
    pub translation: Vec3,
}

impl AffineMap {
    pub fn identity() -> Self {
        Self {
            linear: Matrix3::identity(),
            translation: Vec3::zeros(),
        }
    }

    pub fn apply(&self, x: &Vec3) -> Vec3 {
        self.linear * x + self.translation
    }

    pub fn det(&self) -> f64 {
        self.linear.determinant()
    }

    /// Row-major linear part followed by the translation.
    #[rustfmt::skip]
    pub fn coefficients(&self) -> [f64; 12] {
        let l = &self.linear;
        let t = &self.translation;
        [
            l[(0, 0)], l[(0, 1)], l[(0, 2)],
            l[(1, 0)], l[(1, 1)], l[(1, 2)],
            l[(2, 0)], l[(2, 1)], l[(2, 2)],
            t.x, t.y, t.z,
        ]
    }
}

/// Edge frame `[q10−q00, q01−q00, q11−q00]` of a quadrangle as matrix columns.
fn frame(s: &[Vec3; 4]) -> Matrix3<f64> {
    Matrix3::from_columns(&[s[1] - s[0], s[2] - s[0], s[3] - s[0]])
}

/// Largest coordinate range of a point set.
pub fn extent(q: &VertexGrid<Vec3>) -> f64 {
    let mut lo = Vec3::repeat(f64::INFINITY);
    let mut hi = Vec3::repeat(f64::NEG_INFINITY);
    for x in q.values() {
        lo = lo.inf(x);
        hi = hi.sup(x);
    }
    (hi - lo).max()
}

/// The affine map taking the lower-left quadrangle of `qa` onto that of `qb`,
/// accepted when it carries every vertex of `qa` to `qb` within
/// `tol·extent(qb)`.
pub fn affine_equivalence(
    qa: &VertexGrid<Vec3>,
    qb: &VertexGrid<Vec3>,
    tol: f64,
) -> Result<AffineMap> {
    same_domain(qa.domain(), qb.domain())?;
    let sa = seed_of(qa);
    let sb = seed_of(qb);
    let ea = frame(&sa);
    let det = ea.determinant();
    let size = ea.column_iter().map(|c| c.norm()).fold(0.0, f64::max);
    if !(det.abs() > 1e-12 * size.powi(3)) {
        return Err(Error::DegenerateQuadrangle { det });
    }
    let inv = ea
        .try_inverse()
        .ok_or(Error::DegenerateQuadrangle { det })?;
    let linear = frame(&sb) * inv;
    let map = AffineMap {
        linear,
        translation: sb[0] - linear * sa[0],
    };
    let scale = extent(qb);
    let mut worst: Option<(Index, f64)> = None;
    for ((u, v), x) in qa.iter() {
        let gap = crate::certificate::relative((map.apply(&x) - qb.at(u, v)).amax(), scale);
        if !(gap <= tol) && worst.is_none_or(|w| gap > w.1) {
            worst = Some(((u, v), gap));
        }
    }
    match worst {
        Some((vertex, gap)) => Err(Error::NotEquivalent { vertex, gap }),
        None => Ok(map),
    }
}
