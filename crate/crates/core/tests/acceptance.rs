//! Acceptance suite: one PASS/FAIL line per criterion.

use std::time::{Duration, Instant};

use affine_minimal::compatibility::{
    affine_equivalence, canonical_seed, compatibility_residuals, extent, reconstruct, seed_of,
    FundamentalData, ReconstructTolerances,
};
use affine_minimal::conormal::Example;
use affine_minimal::forms::{
    a2_b1_closed_form, cubic_coefficients, improper_sphere_verdict, normal_derivative_residuals,
    structural_residuals, FormDerivatives, SurfaceData,
};
use affine_minimal::geometry::{
    asymptotic_certificate, duality_certificate, planarity_and_saddle, recover_conormal,
};
use affine_minimal::lelieuvre::{integrate, Immersion};
use affine_minimal::mesh::{edge_report, patch_area_check, tessellate, write_obj};
use affine_minimal::pipeline::{run_pipeline, PipelineOptions};
use affine_minimal::variational::{criticality_certificate, fd_gradient_check};
use affine_minimal::{Certificate, Error, GridDomain, Tolerances, Vec3, VertexGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

/// The four example surfaces on 20×20 boxes where `F > 0`.
fn examples() -> Vec<(Example, GridDomain)> {
    let d = |u0, v0| GridDomain::new(u0, u0 + 20, v0, v0 + 20).unwrap();
    vec![
        (Example::Helicoid { n: 16 }, d(0, 0)),
        (Example::MinimalCubic, d(1, 1)),
        (Example::HyperbolicParaboloid, d(0, 0)),
        (Example::ImproperSphere, d(21, 0)),
    ]
}

fn surface(ex: Example, d: GridDomain) -> Immersion {
    let field = ex.generate(d).unwrap();
    integrate(&field, (d.u_min, d.v_min), Vec3::zeros()).unwrap()
}

fn require(c: &Certificate, label: &str) -> Result<(), String> {
    if c.passed {
        Ok(())
    } else {
        Err(format!(
            "{label} {}: {:.3e} > {:.1e} at {:?}",
            c.name, c.max_rel, c.tolerance, c.worst
        ))
    }
}

fn paraboloid_exactness() -> Outcome {
    let start = Instant::now();
    let d = GridDomain::new(0, 10, 0, 10).unwrap();
    let q = surface(Example::HyperbolicParaboloid, d);
    let data = SurfaceData::new(q.q().clone()).map_err(|e| e.to_string())?;
    let form = cubic_coefficients(&data.q, &data.xi, data.f(), 1e-12).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();

    let mut err_q = 0.0_f64;
    for ((u, v), x) in q.q().iter() {
        let (u, v) = (u as f64, v as f64);
        err_q = err_q.max((x - Vec3::new(u, v, u * v)).amax());
    }
    let err_f = data
        .f()
        .values()
        .iter()
        .map(|f| (f - 1.0).abs())
        .fold(0.0, f64::max);
    let err_xi = data
        .xi
        .values()
        .iter()
        .map(|x| (x - Vec3::z()).amax())
        .fold(0.0, f64::max);
    let err_ab = form.a.max_abs().max(form.b.max_abs());
    let worst = err_q.max(err_f).max(err_xi).max(err_ab);
    let detail = format!(
        "q {err_q:.1e}, F {err_f:.1e}, xi {err_xi:.1e}, A/B {err_ab:.1e}, {:.1} ms",
        elapsed.as_secs_f64() * 1e3
    );
    if worst > 1e-12 {
        return Err(detail);
    }
    if elapsed > Duration::from_millis(100) {
        return Err(format!("too slow: {detail}"));
    }
    Ok(detail)
}

fn asymptotic_suite() -> Outcome {
    let tol = 1e-9;
    let mut slowest = Duration::ZERO;
    let mut worst = 0.0_f64;
    for (ex, d) in examples() {
        let start = Instant::now();
        let q = surface(ex, d);
        let asym = asymptotic_certificate(q.q(), tol).map_err(|e| e.to_string())?;
        let rec = recover_conormal(q.q()).map_err(|e| e.to_string())?;
        let recovery = rec.certificate(tol);
        let cross = planarity_and_saddle(q.q(), &rec.nu, tol).map_err(|e| e.to_string())?;
        slowest = slowest.max(start.elapsed());
        for c in [
            &asym.coplanar,
            &asym.mixed,
            &recovery,
            &cross.planarity,
            &cross.saddle,
        ] {
            require(c, ex.name())?;
            if c.name != "saddle" {
                worst = worst.max(c.max_rel);
            }
        }
        let interior = d.interior_vertices().count();
        if cross.planarity.samples != 4 * interior || cross.saddle.samples != interior {
            return Err(format!(
                "{}: cross checks did not cover every interior vertex",
                ex.name()
            ));
        }
    }
    let detail = format!(
        "max residual {worst:.1e}, slowest {:.1} ms",
        slowest.as_secs_f64() * 1e3
    );
    if slowest > Duration::from_secs(1) {
        return Err(format!("too slow: {detail}"));
    }
    Ok(detail)
}

fn duality() -> Outcome {
    let mut worst = 0.0_f64;
    for (ex, d) in examples() {
        let field = ex.generate(d).unwrap();
        let q = integrate(&field, (d.u_min, d.v_min), Vec3::zeros()).unwrap();
        let data = SurfaceData::new(q.into_grid()).map_err(|e| e.to_string())?;
        let r =
            duality_certificate(field.nu(), &data.xi, data.f(), 1e-9).map_err(|e| e.to_string())?;
        require(&r.pairing, ex.name())?;
        require(&r.cross, ex.name())?;
        if r.pairing.samples != 4 * d.face_count() || r.cross.samples != 4 * d.face_count() {
            return Err(format!("{}: not every corner was checked", ex.name()));
        }
        worst = worst.max(r.pairing.max_rel).max(r.cross.max_rel);
    }
    Ok(format!("max residual {worst:.1e}"))
}

fn criticality() -> Outcome {
    let mut worst = 0.0_f64;
    let mut notes = Vec::new();
    for (ex, d) in examples() {
        let q = surface(ex, d).into_grid();
        let crit = criticality_certificate(&q, 1e-9).map_err(|e| e.to_string())?;
        require(&crit.certificate, ex.name())?;
        worst = worst.max(crit.certificate.max_rel);

        let vertex = (d.u_min + 7, d.v_min + 11);
        let mut bumped: VertexGrid<Vec3> = q.clone();
        bumped.set(
            vertex.0,
            vertex.1,
            q.at(vertex.0, vertex.1) + Vec3::new(0.0, 0.0, 1e-3),
        );
        let dir = Vec3::z();
        let a = fd_gradient_check(&bumped, vertex, &dir, 1e-5).map_err(|e| e.to_string())?;
        let b = fd_gradient_check(&bumped, vertex, &dir, 5e-6).map_err(|e| e.to_string())?;
        let rel = a.gap / a.analytic.abs();
        let ratio = a.truncation / b.truncation;
        if rel.is_nan() || rel > 1e-6 {
            return Err(format!("{}: FD gap {rel:.2e} relative", ex.name()));
        }
        if !(3.5..=4.5).contains(&ratio) {
            return Err(format!("{}: gap ratio {ratio:.2} when h halves", ex.name()));
        }
        notes.push(format!("{} {rel:.1e}/{ratio:.2}", ex.name()));
    }
    Ok(format!(
        "|g|/mean F {worst:.1e}; FD gap/ratio {}",
        notes.join(", ")
    ))
}

fn structural_identities() -> Outcome {
    let tol = 1e-8;
    let mut worst = 0.0_f64;
    let mut verdicts = Vec::new();
    for (ex, d) in examples() {
        let q = surface(ex, d).into_grid();
        let data = SurfaceData::new(q.clone()).map_err(|e| e.to_string())?;
        let form = cubic_coefficients(&q, &data.xi, data.f(), tol).map_err(|e| e.to_string())?;
        let der = FormDerivatives::new(&form, data.f()).map_err(|e| e.to_string())?;
        let s = structural_residuals(&q, data.f(), &form, tol).map_err(|e| e.to_string())?;
        let (_, closed) =
            a2_b1_closed_form(&q, &data.xi, data.f(), &der, tol).map_err(|e| e.to_string())?;
        let n = normal_derivative_residuals(&q, &data.xi, data.f(), &der.a2, &der.b1, tol)
            .map_err(|e| e.to_string())?;
        for c in [&s, &closed, &n] {
            require(c, ex.name())?;
            worst = worst.max(c.max_rel);
        }
        let v = improper_sphere_verdict(&data.xi, data.f(), &form, &der, 1e-10);
        match ex {
            Example::ImproperSphere if !(v.constant_normal && v.separated_forms) => {
                return Err(format!("sphere not recognized: {v:?}"));
            }
            Example::Helicoid { .. } if v.constant_normal => {
                return Err(format!("helicoid passed the constancy test: {v:?}"));
            }
            _ => {}
        }
        verdicts.push(format!("{} {:.0e}", ex.name(), v.normal_spread));
    }
    Ok(format!(
        "max residual {worst:.1e}; xi spread {}",
        verdicts.join(", ")
    ))
}

fn compatibility_round_trip() -> Outcome {
    let tol = 1e-8;
    let mut worst_r = 0.0_f64;
    let mut worst_own = 0.0_f64;
    let mut worst_det = 0.0_f64;
    for (ex, d) in examples() {
        let q = surface(ex, d).into_grid();
        let data = FundamentalData::extract(&q, tol).map_err(|e| e.to_string())?;
        let r = compatibility_residuals(&data, tol).map_err(|e| e.to_string())?;
        for c in [&r.r0, &r.r1, &r.r2] {
            require(c, ex.name())?;
            worst_r = worst_r.max(c.max_rel);
        }

        let own = reconstruct(&data, &seed_of(&q), ReconstructTolerances::default())
            .map_err(|e| format!("{}: {e}", ex.name()))?;
        let scale = extent(&q);
        let gap = q
            .iter()
            .map(|((u, v), x)| (own.q().at(u, v) - x).amax())
            .fold(0.0, f64::max)
            / scale;
        if gap > tol {
            return Err(format!(
                "{}: own-seed reconstruction off by {gap:.2e}",
                ex.name()
            ));
        }
        worst_own = worst_own.max(gap);

        let canon = canonical_seed(data.f().at(d.u_min, d.v_min)).unwrap();
        let rec = reconstruct(&data, &canon, ReconstructTolerances::default())
            .map_err(|e| format!("{}: {e}", ex.name()))?;
        let map =
            affine_equivalence(rec.q(), &q, 1e-6).map_err(|e| format!("{}: {e}", ex.name()))?;
        let det_gap = (map.det() - 1.0).abs();
        if det_gap > 1e-6 {
            return Err(format!("{}: |det - 1| = {det_gap:.2e}", ex.name()));
        }
        worst_det = worst_det.max(det_gap);

        let mut a = data.a().clone();
        let (u, v) = (d.u_min + 9, d.v_min + 9);
        a.set(u, v, a.at(u, v) + 1e-3 * (1.0 + a.at(u, v).abs()));
        let bad = FundamentalData::new(data.f().clone(), a, data.b().clone()).unwrap();
        match reconstruct(&bad, &seed_of(&q), ReconstructTolerances::default()) {
            Err(Error::IncompatibleData { .. }) => {}
            other => return Err(format!("{}: corrupted A gave {other:?}", ex.name())),
        }
    }
    Ok(format!(
        "residual {worst_r:.1e}, own seed {worst_own:.1e}, |det-1| {worst_det:.1e}"
    ))
}

fn patches_and_export() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let surfaces: Vec<_> = examples()
        .into_iter()
        .map(|(ex, d)| (ex, surface(ex, d).into_grid()))
        .collect();
    let mut worst = 0.0_f64;
    for _ in 0..100 {
        let (ex, q) = &surfaces[rng.random_range(0..surfaces.len())];
        let d = q.domain();
        let face = (
            rng.random_range(d.u_min..d.u_max),
            rng.random_range(d.v_min..d.v_max),
        );
        let c = patch_area_check(q, face, 5).map_err(|e| e.to_string())?;
        let rel = c.gap / c.f;
        if rel > 1e-10 {
            return Err(format!(
                "{} face {face:?}: element off by {rel:.2e}",
                ex.name()
            ));
        }
        worst = worst.max(rel);
    }

    let (_, q) = &surfaces[2];
    let mut worst_z = 0.0_f64;
    for r in [1, 8] {
        let mesh = tessellate(q, r).map_err(|e| e.to_string())?;
        let mut buf = Vec::new();
        write_obj(&mesh, &mut buf).map_err(|e| e.to_string())?;
        for line in String::from_utf8(buf).unwrap().lines() {
            if let Some(rest) = line.strip_prefix("v ") {
                let p: Vec<f64> = rest
                    .split_whitespace()
                    .map(|x| x.parse().unwrap())
                    .collect();
                worst_z = worst_z.max((p[2] - p[0] * p[1]).abs());
            }
        }
    }
    if worst_z > 1e-12 {
        return Err(format!("OBJ |z - xy| = {worst_z:.2e}"));
    }
    Ok(format!(
        "element vs F {worst:.1e}, OBJ |z - xy| {worst_z:.1e}"
    ))
}

fn example_meshes() -> Outcome {
    let resolutions = vec![1, 8];
    let mut counts = Vec::new();
    for (ex, d) in examples() {
        let opts = PipelineOptions {
            example: ex,
            domain: d,
            resolutions: resolutions.clone(),
            tolerances: Tolerances::default(),
        };
        let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
        let cmd = vec!["pipeline".to_string(), ex.name().to_string()];
        let a = run_pipeline(&opts, dirs[0].path(), cmd.clone()).map_err(|e| e.to_string())?;
        let b = run_pipeline(&opts, dirs[1].path(), cmd).map_err(|e| e.to_string())?;
        let saddle = a
            .checks
            .iter()
            .find(|c| c.name == "saddle")
            .ok_or("no saddle certificate")?;
        require(saddle, ex.name())?;
        if !a.passed {
            let names: Vec<_> = a.failing().map(|c| c.name.clone()).collect();
            return Err(format!("{}: failing {}", ex.name(), names.join(", ")));
        }
        if a.outputs != b.outputs {
            return Err(format!("{}: outputs differ between runs", ex.name()));
        }
        for name in a.outputs.keys().chain(["report.json".to_string()].iter()) {
            let x = std::fs::read(dirs[0].path().join(name)).unwrap();
            let y = std::fs::read(dirs[1].path().join(name)).unwrap();
            if x != y {
                return Err(format!("{}: {name} differs between runs", ex.name()));
            }
        }
        let q = surface(ex, d).into_grid();
        for &r in &resolutions {
            if !a.outputs.contains_key(&format!("mesh_r{r}.obj")) {
                return Err(format!("{}: no mesh at resolution {r}", ex.name()));
            }
            let mesh = tessellate(&q, r).map_err(|e| e.to_string())?;
            let e = edge_report(&mesh);
            let rim = 2 * r * (d.nu() - 1 + d.nv() - 1);
            if e.nonmanifold != 0 || e.boundary != rim || mesh.min_double_area() <= 0.0 {
                return Err(format!(
                    "{} r={r}: {e:?}, expected {rim} rim edges",
                    ex.name()
                ));
            }
            counts.push(mesh.triangles.len());
        }
    }
    Ok(format!("{} meshes, triangles {:?}", counts.len(), counts))
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 8] = [
        ("1 paraboloid exactness", paraboloid_exactness),
        ("2 asymptotic certificate suite", asymptotic_suite),
        ("3 duality", duality),
        ("4 criticality and gradient", criticality),
        ("5 structural identities", structural_identities),
        ("6 compatibility round trip", compatibility_round_trip),
        ("7 bilinear patches and OBJ", patches_and_export),
        ("8 example meshes", example_meshes),
    ];
    let mut failed = Vec::new();
    for (name, run) in criteria {
        match run() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                println!("FAIL {name}: {detail}");
                failed.push(name);
            }
        }
    }
    assert!(failed.is_empty(), "failed: {failed:?}");
}
