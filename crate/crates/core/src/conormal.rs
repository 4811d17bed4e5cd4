//! Discrete co-normal fields and the example families.

use std::f64::consts::TAU;

use crate::grid::{d12, FaceGrid, GridDomain, VertexGrid};
use crate::{det3, Error, Index, Result, Tolerances, Vec3};

/// A harmonic co-normal field `ν` with `F > 0` on every face.
///
/// `F(u+½, v+½) = ν(u,v) · (ν(u,v+1) × ν(u+1,v))` is cached on construction.
#[derive(Clone, Debug)]
pub struct ConormalField {
    nu: VertexGrid<Vec3>,
    f: FaceGrid<f64>,
    harmonic_residual: f64,
}

impl ConormalField {
    pub fn nu(&self) -> &VertexGrid<Vec3> {
        &self.nu
    }

    /// `F` on faces.
    pub fn f(&self) -> &FaceGrid<f64> {
        &self.f
    }

    pub fn domain(&self) -> GridDomain {
        self.nu.domain()
    }

    /// Largest `‖ν₁₂‖∞` over faces.
    pub fn harmonic_residual(&self) -> f64 {
        self.harmonic_residual
    }

    pub fn min_f(&self) -> f64 {
        self.f
            .values()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn into_nu(self) -> VertexGrid<Vec3> {
        self.nu
    }
}

/// `ν(u,v) = ν¹(u) + ν²(v)`; `nu1[i]` belongs to `u = u_min + i`, `nu2[j]` to `v = v_min + j`.
#[derive(Clone, Debug, PartialEq)]
pub struct SeparableConormalSpec {
    pub domain: GridDomain,
    pub nu1: Vec<Vec3>,
    pub nu2: Vec<Vec3>,
}

impl SeparableConormalSpec {
    pub fn new(domain: GridDomain, nu1: Vec<Vec3>, nu2: Vec<Vec3>) -> Result<Self> {
        if nu1.len() != domain.nu() || nu2.len() != domain.nv() {
            return Err(Error::InvalidParameter(format!(
                "separable co-normal needs {} u-values and {} v-values, got {} and {}",
                domain.nu(),
                domain.nv(),
                nu1.len(),
                nu2.len()
            )));
        }
        Ok(Self { domain, nu1, nu2 })
    }

    /// Samples the two one-variable functions.
    pub fn from_fns(
        domain: GridDomain,
        nu1: impl Fn(i64) -> Vec3,
        nu2: impl Fn(i64) -> Vec3,
    ) -> Self {
        Self {
            domain,
            nu1: (domain.u_min..=domain.u_max).map(nu1).collect(),
            nu2: (domain.v_min..=domain.v_max).map(nu2).collect(),
        }
    }

    /// The sampled vertex grid, without any validation.
    pub fn sample(&self) -> VertexGrid<Vec3> {
        let d = self.domain;
        VertexGrid::from_fn(d, |u, v| {
            self.nu1[(u - d.u_min) as usize] + self.nu2[(v - d.v_min) as usize]
        })
    }
}

/// `F` of an arbitrary vertex field (no sign check).
pub fn conormal_f(nu: &VertexGrid<Vec3>) -> FaceGrid<f64> {
    FaceGrid::from_fn(nu.domain(), |u, v| {
        det3(&nu.at(u, v), &nu.at(u, v + 1), &nu.at(u + 1, v))
    })
}

fn check_positive(f: &FaceGrid<f64>) -> Result<()> {
    // Reports the first offending face in row-major order.
    match f.iter().find(|&(_, x)| !(x > 0.0)) {
        Some((face, value)) => Err(Error::NonConvexFace { face, value }),
        None => Ok(()),
    }
}

fn harmonic_defects(nu: &VertexGrid<Vec3>, tol: f64) -> (f64, Vec<Index>) {
    let r = d12(nu).expect("a domain always has a face");
    let mut max = 0.0_f64;
    let mut faces = Vec::new();
    for (face, x) in r.iter() {
        let m = x.amax();
        max = max.max(m);
        if !(m <= tol) {
            faces.push(face);
        }
    }
    (max, faces)
}

/// Checks harmonicity (absolute per-component tolerance) and positivity of `F`.
pub fn validate(nu: VertexGrid<Vec3>, tol_harmonic: f64) -> Result<ConormalField> {
    let (harmonic_residual, faces) = harmonic_defects(&nu, tol_harmonic);
    if !faces.is_empty() {
        return Err(Error::NotHarmonic {
            max_residual: harmonic_residual,
            faces,
        });
    }
    let f = conormal_f(&nu);
    check_positive(&f)?;
    Ok(ConormalField {
        nu,
        f,
        harmonic_residual,
    })
}

/// Validates with the default tolerance for external input.
pub fn validate_default(nu: VertexGrid<Vec3>) -> Result<ConormalField> {
    validate(nu, Tolerances::default().harmonic)
}

/// Samples a separable field and validates it. Harmonicity holds to rounding,
/// so the check runs at the tight internal tolerance.
pub fn from_separable(spec: &SeparableConormalSpec) -> Result<ConormalField> {
    let nu = spec.sample();
    let scale = nu.max_abs().max(1.0);
    validate(nu, Tolerances::GENERATED_HARMONIC * scale)
}

/// The four example families.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Example {
    /// `ν = (sin(2πv/N), −cos(2πv/N), u)`.
    Helicoid { n: u32 },
    /// `ν = (u, v, u² + v²)`.
    MinimalCubic,
    /// `ν = (−v, −u, 1)`; integrates to `q = (u, v, uv)`.
    HyperbolicParaboloid,
    /// `ν = ((v² − u²)/4, (u − v)/2, −1)`; `F = (u − v)/4` so it needs `u > v`.
    ImproperSphere,
}

impl Example {
    pub const DEFAULT_HELICOID_N: u32 = 16;

    pub fn name(&self) -> &'static str {
        match self {
            Example::Helicoid { .. } => "helicoid",
            Example::MinimalCubic => "cubic",
            Example::HyperbolicParaboloid => "paraboloid",
            Example::ImproperSphere => "sphere",
        }
    }

    /// Parses a CLI name; `n` only matters for the helicoid.
    pub fn parse(name: &str, n: u32) -> Option<Self> {
        match name {
            "helicoid" => Some(Example::Helicoid { n }),
            "cubic" => Some(Example::MinimalCubic),
            "paraboloid" => Some(Example::HyperbolicParaboloid),
            "sphere" => Some(Example::ImproperSphere),
            _ => None,
        }
    }

    pub fn separable(&self, domain: GridDomain) -> SeparableConormalSpec {
        match *self {
            Example::Helicoid { n } => {
                let n = f64::from(n);
                SeparableConormalSpec::from_fns(
                    domain,
                    |u| Vec3::new(0.0, 0.0, u as f64),
                    move |v| {
                        let theta = TAU * v as f64 / n;
                        Vec3::new(theta.sin(), -theta.cos(), 0.0)
                    },
                )
            }
            Example::MinimalCubic => SeparableConormalSpec::from_fns(
                domain,
                |u| Vec3::new(u as f64, 0.0, (u * u) as f64),
                |v| Vec3::new(0.0, v as f64, (v * v) as f64),
            ),
            Example::HyperbolicParaboloid => SeparableConormalSpec::from_fns(
                domain,
                |u| Vec3::new(0.0, -(u as f64), 1.0),
                |v| Vec3::new(-(v as f64), 0.0, 0.0),
            ),
            Example::ImproperSphere => SeparableConormalSpec::from_fns(
                domain,
                |u| {
                    let u = u as f64;
                    Vec3::new(-u * u / 4.0, u / 2.0, -0.5)
                },
                |v| {
                    let v = v as f64;
                    Vec3::new(v * v / 4.0, -v / 2.0, -0.5)
                },
            ),
        }
    }

    pub fn generate(&self, domain: GridDomain) -> Result<ConormalField> {
        if let Example::Helicoid { n } = self {
            if *n < 3 {
                return Err(Error::InvalidParameter(format!(
                    "helicoid needs N >= 3 for F > 0, got {n}"
                )));
            }
        }
        from_separable(&self.separable(domain))
    }
}

pub fn helicoid(n: u32, domain: GridDomain) -> Result<ConormalField> {
    Example::Helicoid { n }.generate(domain)
}

pub fn minimal_cubic(domain: GridDomain) -> Result<ConormalField> {
    Example::MinimalCubic.generate(domain)
}

pub fn hyperbolic_paraboloid(domain: GridDomain) -> Result<ConormalField> {
    Example::HyperbolicParaboloid.generate(domain)
}

pub fn improper_sphere(domain: GridDomain) -> Result<ConormalField> {
    Example::ImproperSphere.generate(domain)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dom(u0: i64, u1: i64, v0: i64, v1: i64) -> GridDomain {
        GridDomain::new(u0, u1, v0, v1).unwrap()
    }

    #[test]
    fn helicoid_from_separable_parts() {
        let d = dom(-2, 3, 0, 16);
        let spec = SeparableConormalSpec::from_fns(
            d,
            |u| Vec3::new(0.0, 0.0, u as f64),
            |v| {
                let t = TAU * v as f64 / 16.0;
                Vec3::new(t.sin(), -t.cos(), 0.0)
            },
        );
        let field = from_separable(&spec).unwrap();
        for (u, v) in d.vertices() {
            let t = TAU * v as f64 / 16.0;
            let expect = Vec3::new(t.sin(), -t.cos(), u as f64);
            assert!((field.nu().at(u, v) - expect).amax() < 1e-15);
        }
        // F is independent of u and equals sin(2π/N)
        let s = (TAU / 16.0).sin();
        assert!(field.f().values().iter().all(|&f| (f - s).abs() < 1e-14));
    }

    #[test]
    fn example_four_from_separable_parts() {
        let d = dom(5, 8, 0, 3);
        let spec = SeparableConormalSpec::from_fns(
            d,
            |u| {
                let u = u as f64;
                Vec3::new(-u * u / 4.0, u / 2.0, -0.5)
            },
            |v| {
                let v = v as f64;
                Vec3::new(v * v / 4.0, -v / 2.0, -0.5)
            },
        );
        let nu = spec.sample();
        for (u, v) in d.vertices() {
            let (uf, vf) = (u as f64, v as f64);
            let expect = Vec3::new((vf * vf - uf * uf) / 4.0, (uf - vf) / 2.0, -1.0);
            assert_eq!(nu.at(u, v), expect);
        }
        assert!(from_separable(&spec).is_ok());
    }

    #[test]
    fn constant_field_is_degenerate() {
        let d = dom(0, 2, 0, 2);
        let spec = SeparableConormalSpec::from_fns(
            d,
            |_| Vec3::new(1.0, 2.0, 0.0),
            |_| Vec3::new(0.0, 0.0, 3.0),
        );
        assert!(matches!(
            from_separable(&spec),
            Err(Error::NonConvexFace { value, .. }) if value == 0.0
        ));
    }

    #[test]
    fn spec_length_mismatch() {
        let d = dom(0, 2, 0, 2);
        assert!(
            SeparableConormalSpec::new(d, vec![Vec3::zeros(); 2], vec![Vec3::zeros(); 3]).is_err()
        );
    }

    #[test]
    fn paraboloid_field_has_unit_f() {
        let d = dom(-3, 4, -2, 5);
        let nu = VertexGrid::from_fn(d, |u, v| Vec3::new(-(v as f64), -(u as f64), 1.0));
        let field = validate_default(nu).unwrap();
        assert!(field.f().values().iter().all(|&f| f == 1.0));
        assert_eq!(field.harmonic_residual(), 0.0);
    }

    #[test]
    fn cubic_field_validates_on_five_by_five() {
        let d = dom(1, 5, 1, 5);
        let nu = VertexGrid::from_fn(d, |u, v| {
            let (u, v) = (u as f64, v as f64);
            Vec3::new(u, v, u * u + v * v)
        });
        assert!(validate_default(nu).is_ok());
    }

    #[test]
    fn perturbation_names_four_faces() {
        let d = dom(0, 4, 0, 4);
        let mut nu = VertexGrid::from_fn(d, |u, v| Vec3::new(-(v as f64), -(u as f64), 1.0));
        nu.set(2, 2, nu.at(2, 2) + Vec3::new(0.0, 0.0, 1.0));
        match validate_default(nu) {
            Err(Error::NotHarmonic {
                max_residual,
                mut faces,
            }) => {
                assert_eq!(max_residual, 1.0);
                faces.sort();
                assert_eq!(faces, vec![(1, 1), (1, 2), (2, 1), (2, 2)]);
            }
            other => panic!("expected NotHarmonic, got {other:?}"),
        }
    }

    #[test]
    fn generator_values() {
        let par = hyperbolic_paraboloid(dom(0, 3, 0, 3)).unwrap();
        assert_eq!(par.nu().at(1, 2), Vec3::new(-2.0, -1.0, 1.0));

        // the cubic co-normal vanishes at the origin, so F = 0 on the face (0,0)
        let cubic = Example::MinimalCubic.separable(dom(0, 2, 0, 2)).sample();
        assert_eq!(cubic.at(2, 2), Vec3::new(2.0, 2.0, 8.0));
        assert!(matches!(
            minimal_cubic(dom(0, 2, 0, 2)),
            Err(Error::NonConvexFace { face: (0, 0), .. })
        ));
        assert!(minimal_cubic(dom(1, 3, 0, 2)).is_ok());

        let hel = helicoid(4, dom(0, 2, 0, 4)).unwrap();
        assert!((hel.nu().at(0, 1) - Vec3::new(1.0, 0.0, 0.0)).amax() < 1e-15);
    }

    #[test]
    fn sphere_needs_u_greater_than_v() {
        assert!(improper_sphere(dom(10, 14, 0, 10)).is_ok());
        // F = (u - v)/4 vanishes on the face (5,5)
        assert!(matches!(
            improper_sphere(dom(5, 8, 3, 7)),
            Err(Error::NonConvexFace { .. })
        ));
        let f = improper_sphere(dom(10, 14, 0, 4)).unwrap();
        for ((u, v), x) in f.f().iter() {
            assert_eq!(x, (u - v) as f64 / 4.0);
        }
    }

    #[test]
    fn helicoid_needs_three_samples_per_turn() {
        assert!(helicoid(2, dom(0, 2, 0, 2)).is_err());
    }
}
