//! Batteries of checks over a surface file and the end-to-end pipeline used
//! by the command-line tool.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use serde_json::json;

use crate::certificate::{Certificate, Tracker};
use crate::compatibility::{compatibility_residuals, FundamentalData};
use crate::conormal::Example;
use crate::forms::{
    a2_b1_closed_form, cubic_coefficients, normal_derivative_residuals, structural_residuals,
    FormDerivatives, SurfaceData,
};
use crate::geometry::{
    asymptotic_certificate, conormal_agreement, duality_certificate, face_volume_grid,
    planarity_and_saddle, recover_conormal,
};
use crate::grid::VertexGrid;
use crate::io::{file_digest, forms_to_json, grid_to_json, write_text};
use crate::lelieuvre::{integrate, lelieuvre_certificate, Immersion};
use crate::mesh::export_surface_obj;
use crate::variational::criticality_certificate;
use crate::{GridDomain, Result, Tolerances, Vec3};

/// Machine-readable record of one command.
#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub command: Vec<String>,
    /// SHA-256 of every input file, by role.
    pub inputs: BTreeMap<String, String>,
    /// SHA-256 of every file written, by name.
    pub outputs: BTreeMap<String, String>,
    pub checks: Vec<Certificate>,
    pub passed: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl RunReport {
    pub fn new(command: Vec<String>) -> Self {
        Self {
            command,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            checks: Vec::new(),
            passed: true,
            warnings: Vec::new(),
        }
    }

    pub fn add_checks(&mut self, checks: impl IntoIterator<Item = Certificate>) {
        for c in checks {
            self.passed &= c.passed;
            self.checks.push(c);
        }
    }

    pub fn failing(&self) -> impl Iterator<Item = &Certificate> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One line per check.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            s.push_str(&format!(
                "{} {:<22} max_rel {:.3e}  tol {:.1e}{}\n",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.max_rel,
                c.tolerance,
                match c.worst {
                    Some([u, v]) if !c.passed => format!("  worst at ({u}, {v})"),
                    _ => String::new(),
                }
            ));
        }
        s
    }
}

/// `M > 0` on every face, as a certificate (residual 1 where it fails).
pub fn volume_certificate(q: &VertexGrid<Vec3>) -> Certificate {
    let mut t = Tracker::new("face_volume");
    for (at, m) in face_volume_grid(q).iter() {
        t.record(at, m, if m > 0.0 { 0.0 } else { 1.0 });
    }
    t.finish(0.0)
}

/// Face-choice spread of `A` and `B` relative to `|A| + max F`.
fn spread_certificate(data: &SurfaceData, tol: f64) -> Result<Certificate> {
    let form = cubic_coefficients(&data.q, &data.xi, data.f(), f64::INFINITY)?;
    let fmax = data.f().max_abs();
    let mut t = Tracker::new("cubic_form_defined");
    for (at, s) in form.spread_a.iter() {
        t.record_scaled(at, s, form.a.at(at.0, at.1).abs() + fmax);
    }
    for (at, s) in form.spread_b.iter() {
        t.record_scaled(at, s, form.b.at(at.0, at.1).abs() + fmax);
    }
    Ok(t.finish(tol))
}

/// Every certificate that applies to `q`, with `nu` the generating co-normal
/// when known. Checks that need larger domains are skipped with a warning.
pub fn check_surface(
    q: &VertexGrid<Vec3>,
    nu: Option<&VertexGrid<Vec3>>,
    tol: &Tolerances,
) -> Result<(Vec<Certificate>, Vec<String>)> {
    let d = q.domain();
    let mut out = vec![volume_certificate(q)];
    let mut warnings = Vec::new();
    if !out[0].passed {
        warnings.push("non-positive face volumes; remaining checks skipped".into());
        return Ok((out, warnings));
    }
    let data = SurfaceData::new(q.clone())?;

    let asym = asymptotic_certificate(q, tol.dual)?;
    out.push(asym.coplanar);
    out.push(asym.mixed);

    let rec = recover_conormal(q)?;
    out.push(rec.certificate(tol.dual));
    let conormal = match nu {
        Some(n) => {
            out.push(lelieuvre_certificate(q, n, tol.integrate)?);
            out.push(conormal_agreement(&rec.nu, n, tol.dual)?);
            n.clone()
        }
        None => rec.nu.clone(),
    };
    let dual = duality_certificate(&conormal, &data.xi, data.f(), tol.dual)?;
    out.push(dual.pairing);
    out.push(dual.cross);

    if d.interior_vertices().next().is_some() {
        let cross = planarity_and_saddle(q, &conormal, tol.dual)?;
        out.push(cross.planarity);
        out.push(cross.saddle);
    }

    if d.nu() >= 3 && d.nv() >= 3 {
        out.push(spread_certificate(&data, tol.forms)?);
        let form = cubic_coefficients(&data.q, &data.xi, data.f(), f64::INFINITY)?;
        let der = FormDerivatives::new(&form, data.f())?;
        out.push(structural_residuals(q, data.f(), &form, tol.forms)?);
        out.push(a2_b1_closed_form(q, &data.xi, data.f(), &der, tol.forms)?.1);
        out.push(normal_derivative_residuals(
            q,
            &data.xi,
            data.f(),
            &der.a2,
            &der.b1,
            tol.forms,
        )?);
        let fd = FundamentalData::new(data.f().clone(), form.a, form.b)?;
        let compat = compatibility_residuals(&fd, tol.compat)?;
        out.extend([compat.r0, compat.r1, compat.r2]);
    } else {
        warnings.push(format!("{d} is too small for the cubic form checks"));
    }

    let crit = criticality_certificate(q, tol.crit)?;
    warnings.extend(crit.warning);
    out.push(crit.certificate);
    Ok((out, warnings))
}

/// Metadata stored with an integrated surface.
pub fn surface_meta(q: &Immersion) -> serde_json::Value {
    let b = q.base_value();
    json!({
        "role": "surface",
        "base_vertex": [q.base_vertex().0, q.base_vertex().1],
        "base_value": [b.x, b.y, b.z],
    })
}

/// Options of [`run_pipeline`].
#[derive(Clone, Debug)]
pub struct PipelineOptions {
    pub example: Example,
    pub domain: GridDomain,
    pub resolutions: Vec<usize>,
    pub tolerances: Tolerances,
}

/// Generates the example co-normal, integrates it, runs every check, writes
/// the cubic form and meshes at each resolution, and records all of it.
///
/// Files written to `out_dir`: `conormal.json`, `surface.json`, `forms.json`,
/// `check.json`, `mesh_r{R}.obj` and `report.json`.
pub fn run_pipeline(
    opts: &PipelineOptions,
    out_dir: &Path,
    command: Vec<String>,
) -> Result<RunReport> {
    std::fs::create_dir_all(out_dir).map_err(|e| crate::Error::io(out_dir, e))?;
    let mut report = RunReport::new(command);
    let mut written = Vec::new();

    let field = opts.example.generate(opts.domain)?;
    let meta = json!({"role": "conormal", "example": opts.example.name()});
    let path = out_dir.join("conormal.json");
    write_text(&path, &grid_to_json(field.nu(), Some(&meta), 0))?;
    written.push(path);

    let d = opts.domain;
    let q = integrate(&field, (d.u_min, d.v_min), Vec3::zeros())?;
    let path = out_dir.join("surface.json");
    write_text(&path, &grid_to_json(q.q(), Some(&surface_meta(&q)), 0))?;
    written.push(path);

    let (checks, warnings) = check_surface(q.q(), Some(field.nu()), &opts.tolerances)?;
    report.add_checks(checks);
    report.warnings = warnings;
    let path = out_dir.join("check.json");
    write_text(
        &path,
        &serde_json::to_string_pretty(&report.checks).expect("serializes"),
    )?;
    written.push(path);

    if d.nu() >= 3 && d.nv() >= 3 {
        let data = FundamentalData::extract(q.q(), f64::INFINITY)?;
        let path = out_dir.join("forms.json");
        write_text(&path, &forms_to_json(&data))?;
        written.push(path);
    }

    for &r in &opts.resolutions {
        let path = out_dir.join(format!("mesh_r{r}.obj"));
        export_surface_obj(q.q(), r, &path)?;
        written.push(path);
    }

    for p in &written {
        let name = p
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        report.outputs.insert(name, file_digest(p)?);
    }
    write_text(&out_dir.join("report.json"), &report.to_json())?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conormal::hyperbolic_paraboloid;
    use crate::lelieuvre::integrate_default;

    fn dom(u0: i64, u1: i64, v0: i64, v1: i64) -> GridDomain {
        GridDomain::new(u0, u1, v0, v1).unwrap()
    }

    #[test]
    fn paraboloid_passes_every_check() {
        let field = hyperbolic_paraboloid(dom(0, 6, 0, 6)).unwrap();
        let q = integrate_default(&field).unwrap();
        let (checks, warnings) =
            check_surface(q.q(), Some(field.nu()), &Tolerances::default()).unwrap();
        assert!(checks.iter().all(|c| c.passed), "{checks:?}");
        assert!(warnings.is_empty());
        assert!(checks.len() >= 18);
    }

    #[test]
    fn corrupted_surface_fails() {
        let field = Example::Helicoid { n: 16 }
            .generate(dom(0, 6, 0, 6))
            .unwrap();
        let mut q = integrate_default(&field).unwrap().into_grid();
        q.set(3, 3, q.at(3, 3) + Vec3::new(0.05, -0.02, 0.03));
        let (checks, _) = check_surface(&q, None, &Tolerances::default()).unwrap();
        assert!(checks.iter().any(|c| !c.passed));
    }

    #[test]
    fn flat_surface_stops_after_volumes() {
        let q = VertexGrid::from_fn(dom(0, 3, 0, 3), |u, v| Vec3::new(u as f64, v as f64, 0.0));
        let (checks, warnings) = check_surface(&q, None, &Tolerances::default()).unwrap();
        assert_eq!(checks.len(), 1);
        assert!(!checks[0].passed);
        assert_eq!(warnings.len(), 1);
    }

    #[test]
    fn pipeline_is_deterministic() {
        let opts = PipelineOptions {
            example: Example::Helicoid { n: 16 },
            domain: dom(0, 4, 0, 4),
            resolutions: vec![1, 3],
            tolerances: Tolerances::default(),
        };
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let ra = run_pipeline(&opts, a.path(), vec!["x".into()]).unwrap();
        let rb = run_pipeline(&opts, b.path(), vec!["x".into()]).unwrap();
        assert!(ra.passed);
        assert_eq!(ra.outputs, rb.outputs);
        for name in [
            "conormal.json",
            "surface.json",
            "forms.json",
            "check.json",
            "mesh_r1.obj",
            "mesh_r3.obj",
            "report.json",
        ] {
            let x = std::fs::read(a.path().join(name)).unwrap();
            let y = std::fs::read(b.path().join(name)).unwrap();
            assert_eq!(x, y, "{name}");
        }
    }
}
