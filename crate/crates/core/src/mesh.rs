//! Bilinear patches over the faces of a net, their tessellation and OBJ
//! export.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::geometry::face_volume_grid;
use crate::grid::VertexGrid;
use crate::{det3, Error, Index, Result, Vec3};

/// Triangle soup on a shared vertex array.
#[derive(Clone, Debug, PartialEq)]
pub struct TriangleMesh {
    pub positions: Vec<Vec3>,
    pub triangles: Vec<[usize; 3]>,
    pub normals: Option<Vec<Vec3>>,
}

impl TriangleMesh {
    /// Adds area-weighted vertex normals.
    pub fn with_normals(mut self) -> Self {
        let mut n = vec![Vec3::zeros(); self.positions.len()];
        for t in &self.triangles {
            let [a, b, c] = t.map(|i| self.positions[i]);
            let w = (b - a).cross(&(c - a));
            for &i in t {
                n[i] += w;
            }
        }
        for x in &mut n {
            let len = x.norm();
            if len > 0.0 {
                *x /= len;
            }
        }
        self.normals = Some(n);
        self
    }

    /// Twice the smallest triangle area.
    pub fn min_double_area(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| {
                let [a, b, c] = t.map(|i| self.positions[i]);
                (b - a).cross(&(c - a)).norm()
            })
            .fold(f64::INFINITY, f64::min)
    }
}

fn corners(q: &VertexGrid<Vec3>, face: Index) -> Result<[Vec3; 4]> {
    let (u, v) = face;
    if !q.domain().contains_face(u, v) {
        return Err(Error::InvalidParameter(format!(
            "face {face:?} outside {}",
            q.domain()
        )));
    }
    Ok([
        q.at(u, v),
        q.at(u + 1, v),
        q.at(u, v + 1),
        q.at(u + 1, v + 1),
    ])
}

/// `(1−s)(1−t)q₀₀ + s(1−t)q₁₀ + (1−s)t q₀₁ + st q₁₁`.
///
/// Summed in this order, the value on a shared edge depends only on that
/// edge's corners, bit for bit.
fn bilinear(c: &[Vec3; 4], s: f64, t: f64) -> Vec3 {
    let (ms, mt) = (1.0 - s, 1.0 - t);
    c[0] * (ms * mt) + c[1] * (s * mt) + c[2] * (ms * t) + c[3] * (s * t)
}

fn check_unit(s: f64, t: f64) -> Result<()> {
    if (0.0..=1.0).contains(&s) && (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "patch parameters ({s}, {t}) outside [0,1]^2"
        )))
    }
}

/// The hyperbolic paraboloid through the four corners of `face`, at `(s, t)`.
pub fn patch_point(q: &VertexGrid<Vec3>, face: Index, s: f64, t: f64) -> Result<Vec3> {
    check_unit(s, t)?;
    Ok(bilinear(&corners(q, face)?, s, t))
}

/// `(r_s, r_t, r_st)` of the patch at `(s, t)`.
pub fn patch_derivatives(c: &[Vec3; 4], s: f64, t: f64) -> [Vec3; 3] {
    let r_s = (c[1] - c[0]) * (1.0 - t) + (c[3] - c[2]) * t;
    let r_t = (c[2] - c[0]) * (1.0 - s) + (c[3] - c[1]) * s;
    let r_st = c[3] + c[0] - c[1] - c[2];
    [r_s, r_t, r_st]
}

/// Area element `√[r_s, r_t, r_st]` and affine normal `r_st / element`.
pub fn patch_element(c: &[Vec3; 4], s: f64, t: f64) -> (f64, Vec3) {
    let [r_s, r_t, r_st] = patch_derivatives(c, s, t);
    let e = det3(&r_s, &r_t, &r_st).sqrt();
    (e, r_st / e)
}

/// Midpoint-rule affine area of one patch against `F`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct PatchAreaCheck {
    pub area: f64,
    pub f: f64,
    /// Largest `|element − F|` over the quadrature points.
    pub gap: f64,
    /// Largest `‖r_st/element − ξ‖∞` over the quadrature points.
    pub normal_gap: f64,
}

pub fn patch_area_check(
    q: &VertexGrid<Vec3>,
    face: Index,
    n_quad: usize,
) -> Result<PatchAreaCheck> {
    if n_quad < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 quadrature points per direction, got {n_quad}"
        )));
    }
    let c = corners(q, face)?;
    let m = det3(&(c[1] - c[0]), &(c[2] - c[0]), &(c[3] - c[0]));
    if !(m > 0.0) {
        return Err(Error::NonPositiveVolume { face, value: m });
    }
    let f = m.sqrt();
    let xi = (c[3] + c[0] - c[1] - c[2]) / f;
    let n = n_quad as f64;
    let mut area = 0.0;
    let mut gap = 0.0_f64;
    let mut normal_gap = 0.0_f64;
    for i in 0..n_quad {
        for j in 0..n_quad {
            let (s, t) = ((i as f64 + 0.5) / n, (j as f64 + 0.5) / n);
            let (e, nrm) = patch_element(&c, s, t);
            area += e / (n * n);
            gap = gap.max((e - f).abs());
            normal_gap = normal_gap.max((nrm - xi).amax());
        }
    }
    Ok(PatchAreaCheck {
        area,
        f,
        gap,
        normal_gap,
    })
}

/// Samples every patch on a `(resolution+1)²` grid of `(s, t)` and splits
/// each cell along its `(0,0)–(1,1)` diagonal.
///
/// Samples sit on one global lattice, so neighbouring patches share their
/// boundary vertices.
pub fn tessellate(q: &VertexGrid<Vec3>, resolution: usize) -> Result<TriangleMesh> {
    if resolution == 0 {
        return Err(Error::InvalidParameter(
            "resolution must be at least 1".into(),
        ));
    }
    let d = q.domain();
    let r = resolution as i64;
    let nfu = d.u_max - d.u_min;
    let nfv = d.v_max - d.v_min;
    let (lu, lv) = (nfu * r + 1, nfv * r + 1);
    let index = |a: i64, b: i64| (a * lv + b) as usize;

    let mut positions = Vec::with_capacity((lu * lv) as usize);
    for a in 0..lu {
        let fu = (a / r).min(nfu - 1);
        let s = (a - fu * r) as f64 / r as f64;
        for b in 0..lv {
            let fv = (b / r).min(nfv - 1);
            let t = (b - fv * r) as f64 / r as f64;
            let c = corners(q, (d.u_min + fu, d.v_min + fv))?;
            positions.push(bilinear(&c, s, t));
        }
    }

    let mut triangles = Vec::with_capacity((2 * nfu * nfv * r * r) as usize);
    for fu in 0..nfu {
        for fv in 0..nfv {
            for i in 0..r {
                for j in 0..r {
                    let (a, b) = (fu * r + i, fv * r + j);
                    let p00 = index(a, b);
                    let p10 = index(a + 1, b);
                    let p01 = index(a, b + 1);
                    let p11 = index(a + 1, b + 1);
                    triangles.push([p00, p10, p11]);
                    triangles.push([p00, p11, p01]);
                }
            }
        }
    }
    Ok(TriangleMesh {
        positions,
        triangles,
        normals: None,
    })
}

/// Edge incidence summary of a mesh.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct EdgeReport {
    pub edges: usize,
    /// Edges on exactly one triangle.
    pub boundary: usize,
    /// Edges on more than two triangles.
    pub nonmanifold: usize,
}

pub fn edge_report(mesh: &TriangleMesh) -> EdgeReport {
    let mut edges: Vec<(usize, usize)> = mesh
        .triangles
        .iter()
        .flat_map(|t| [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])])
        .map(|(a, b)| (a.min(b), a.max(b)))
        .collect();
    edges.sort_unstable();
    let mut report = EdgeReport {
        edges: 0,
        boundary: 0,
        nonmanifold: 0,
    };
    for run in edges.chunk_by(|x, y| x == y) {
        report.edges += 1;
        match run.len() {
            1 => report.boundary += 1,
            2 => {}
            _ => report.nonmanifold += 1,
        }
    }
    report
}

/// Wavefront OBJ: `v` lines with 17 significant digits, optional `vn`
/// lines, then 1-based `f` lines.
pub fn write_obj<W: Write>(mesh: &TriangleMesh, mut w: W) -> std::io::Result<()> {
    writeln!(
        w,
        "# {} vertices, {} triangles",
        mesh.positions.len(),
        mesh.triangles.len()
    )?;
    for p in &mesh.positions {
        writeln!(w, "v {:.16e} {:.16e} {:.16e}", p.x, p.y, p.z)?;
    }
    if let Some(ns) = &mesh.normals {
        for n in ns {
            writeln!(w, "vn {:.16e} {:.16e} {:.16e}", n.x, n.y, n.z)?;
        }
        for t in &mesh.triangles {
            let [a, b, c] = t.map(|i| i + 1);
            writeln!(w, "f {a}//{a} {b}//{b} {c}//{c}")?;
        }
    } else {
        for t in &mesh.triangles {
            writeln!(w, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
        }
    }
    w.flush()
}

pub fn export_obj(mesh: &TriangleMesh, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_obj(mesh, BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

/// Tessellates `q` at `resolution` and writes the OBJ file.
pub fn export_surface_obj(
    q: &VertexGrid<Vec3>,
    resolution: usize,
    path: &Path,
) -> Result<TriangleMesh> {
    let volumes = face_volume_grid(q);
    if let Some((face, value)) = volumes.iter().find(|(_, m)| !(*m > 0.0)) {
        return Err(Error::NonPositiveVolume { face, value });
    }
    let mesh = tessellate(q, resolution)?;
    export_obj(&mesh, path)?;
    Ok(mesh)
}
