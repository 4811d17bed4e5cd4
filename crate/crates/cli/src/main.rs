//! `affmin`: generate, integrate, check, reconstruct and export discrete
//! affine minimal surfaces.
//!
//! Exit codes: 0 success, 1 a check failed, 2 usage or I/O error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use affine_minimal::compatibility::{
    affine_equivalence, canonical_seed, reconstruct, FundamentalData, ReconstructTolerances,
};
use affine_minimal::conormal::{validate, Example};
use affine_minimal::grid::Vertex;
use affine_minimal::io::{
    file_digest, read_forms, read_grid, read_seed, write_forms, write_grid, write_text,
};
use affine_minimal::lelieuvre::integrate;
use affine_minimal::mesh::export_surface_obj;
use affine_minimal::pipeline::{
    check_surface, run_pipeline, surface_meta, PipelineOptions, RunReport,
};
use affine_minimal::variational::{affine_area, area_gradient, criticality_certificate};
use affine_minimal::{Error, GridDomain, Tolerances, Vec3, VertexGrid};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "affmin",
    version,
    about = "Build, verify, rebuild and export asymptotic quad nets of affine minimal saddle surfaces"
)]
struct Cli {
    #[command(flatten)]
    tol: TolArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct TolArgs {
    /// Harmonicity of supplied co-normals (absolute, per component)
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol_harmonic: f64,
    /// Lelieuvre edge residuals
    #[arg(long, global = true, default_value_t = 1e-10)]
    tol_integrate: f64,
    /// Duality, co-normal recovery and asymptotic checks
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol_dual: f64,
    /// Cubic form and derivative identities
    #[arg(long, global = true, default_value_t = 1e-8)]
    tol_forms: f64,
    /// Compatibility residuals and reconstruction agreement
    #[arg(long, global = true, default_value_t = 1e-7)]
    tol_compat: f64,
    /// Affine equivalence gap relative to the surface extent
    #[arg(long, global = true, default_value_t = 1e-6)]
    tol_equiv: f64,
    /// Seed determinant against F² (relative)
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol_seed: f64,
    /// Area gradient relative to the mean of F
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol_crit: f64,
}

impl TolArgs {
    fn tolerances(&self) -> Tolerances {
        Tolerances {
            harmonic: self.tol_harmonic,
            integrate: self.tol_integrate,
            dual: self.tol_dual,
            forms: self.tol_forms,
            compat: self.tol_compat,
            equiv: self.tol_equiv,
            seed: self.tol_seed,
            crit: self.tol_crit,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ExampleName {
    Helicoid,
    Cubic,
    Paraboloid,
    Sphere,
}

impl ExampleName {
    fn example(self, n: u32) -> Example {
        match self {
            ExampleName::Helicoid => Example::Helicoid { n },
            ExampleName::Cubic => Example::MinimalCubic,
            ExampleName::Paraboloid => Example::HyperbolicParaboloid,
            ExampleName::Sphere => Example::ImproperSphere,
        }
    }

    /// A 20×20 box on which `F > 0`.
    fn default_box(self) -> [i64; 4] {
        match self {
            ExampleName::Helicoid | ExampleName::Paraboloid => [0, 20, 0, 20],
            ExampleName::Cubic => [1, 21, 1, 21],
            ExampleName::Sphere => [21, 41, 0, 20],
        }
    }
}

#[derive(Args)]
struct ExampleArgs {
    #[arg(long, value_enum)]
    example: ExampleName,
    /// Vertex box; defaults to a 20×20 box where the example is regular
    #[arg(long = "box", num_args = 4, value_names = ["U0", "U1", "V0", "V1"], allow_negative_numbers = true)]
    bounds: Option<Vec<i64>>,
    /// Helicoid period
    #[arg(long, default_value_t = Example::DEFAULT_HELICOID_N)]
    n: u32,
}

impl ExampleArgs {
    fn example(&self) -> Example {
        self.example.example(self.n)
    }

    fn domain(&self) -> affine_minimal::Result<GridDomain> {
        let b = match &self.bounds {
            Some(b) => [b[0], b[1], b[2], b[3]],
            None => self.example.default_box(),
        };
        GridDomain::new(b[0], b[1], b[2], b[3])
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write the co-normal field of an example
    Generate {
        #[command(flatten)]
        ex: ExampleArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Integrate a harmonic co-normal field into a surface
    Integrate {
        #[arg(long)]
        conormal: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Base vertex and its position
        #[arg(long, num_args = 5, value_names = ["U", "V", "X", "Y", "Z"], allow_negative_numbers = true)]
        base: Option<Vec<f64>>,
    },
    /// Run every certificate on a surface
    Check {
        #[arg(long)]
        surface: PathBuf,
        /// Generating co-normal, compared with the recovered one
        #[arg(long)]
        conormal: Option<PathBuf>,
        #[arg(long)]
        report: PathBuf,
    },
    /// Extract F, A and B from a surface
    Forms {
        #[arg(long)]
        surface: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rebuild a surface from F, A and B
    Reconstruct {
        #[arg(long)]
        forms: PathBuf,
        /// First quadrangle; the canonical seed when absent
        #[arg(long, alias = "seed-file")]
        seed: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Find the affine map between two surfaces
    Compare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        report: PathBuf,
    },
    /// Print the affine area
    Area {
        #[arg(long)]
        surface: PathBuf,
    },
    /// Write the area gradient at interior vertices
    Gradient {
        #[arg(long)]
        surface: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Test that the area gradient vanishes
    Critical {
        #[arg(long)]
        surface: PathBuf,
        /// Overrides --tol-crit
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Tessellate bilinear patches into an OBJ mesh
    Export {
        #[arg(long)]
        surface: PathBuf,
        #[arg(long, default_value_t = 4)]
        resolution: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate, integrate, check and export an example
    Pipeline {
        #[command(flatten)]
        ex: ExampleArgs,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
        #[arg(long, num_args = 1.., default_values_t = [1usize, 8])]
        resolutions: Vec<usize>,
    },
}

enum Failure {
    Check(String),
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io { .. }
            | Error::Format(_)
            | Error::InvalidParameter(_)
            | Error::DomainTooSmall(_) => Failure::Usage(e.to_string()),
            _ => Failure::Check(e.to_string()),
        }
    }
}

type Outcome = Result<(), Failure>;

fn read_surface(path: &Path) -> affine_minimal::Result<VertexGrid<Vec3>> {
    Ok(read_grid::<Vec3, Vertex>(path)?.0)
}

fn argv() -> Vec<String> {
    std::env::args().collect()
}

fn finish(report: &RunReport, path: &Path, started: Instant) -> Outcome {
    write_text(path, &report.to_json())?;
    print!("{}", report.summary());
    for w in &report.warnings {
        println!("warning: {w}");
    }
    println!("wall time {:.3} s", started.elapsed().as_secs_f64());
    if report.passed {
        Ok(())
    } else {
        let names: Vec<&str> = report.failing().map(|c| c.name.as_str()).collect();
        Err(Failure::Check(format!("failing: {}", names.join(", "))))
    }
}

fn run(cli: Cli) -> Outcome {
    let tol = cli.tol.tolerances();
    let started = Instant::now();
    match cli.command {
        Command::Generate { ex, out } => {
            let field = ex.example().generate(ex.domain()?)?;
            let meta = json!({"role": "conormal", "example": ex.example().name()});
            write_grid(&out, field.nu(), Some(&meta))?;
            println!(
                "{} on {} -> {}",
                ex.example().name(),
                field.domain(),
                out.display()
            );
        }
        Command::Integrate {
            conormal,
            out,
            base,
        } => {
            let (nu, _) = read_grid::<Vec3, Vertex>(&conormal)?;
            let d = nu.domain();
            let field = validate(nu, tol.harmonic)?;
            let (vertex, value) = match base {
                Some(b) => {
                    if b[0].fract() != 0.0 || b[1].fract() != 0.0 {
                        return Err(Failure::Usage("--base U V must be integers".into()));
                    }
                    ((b[0] as i64, b[1] as i64), Vec3::new(b[2], b[3], b[4]))
                }
                None => ((d.u_min, d.v_min), Vec3::zeros()),
            };
            let q = integrate(&field, vertex, value)?;
            write_grid(&out, q.q(), Some(&surface_meta(&q)))?;
            println!("surface on {d} -> {}", out.display());
        }
        Command::Check {
            surface,
            conormal,
            report,
        } => {
            let q = read_surface(&surface)?;
            let nu = match &conormal {
                Some(p) => Some(read_grid::<Vec3, Vertex>(p)?.0),
                None => None,
            };
            let mut r = RunReport::new(argv());
            r.inputs.insert("surface".into(), file_digest(&surface)?);
            if let Some(p) = &conormal {
                r.inputs.insert("conormal".into(), file_digest(p)?);
            }
            let (checks, warnings) = check_surface(&q, nu.as_ref(), &tol)?;
            r.add_checks(checks);
            r.warnings = warnings;
            return finish(&r, &report, started);
        }
        Command::Forms { surface, out } => {
            let q = read_surface(&surface)?;
            let data = FundamentalData::extract(&q, tol.forms)?;
            write_forms(&out, &data)?;
            println!("F, A, B on {} -> {}", data.domain(), out.display());
        }
        Command::Reconstruct { forms, seed, out } => {
            let data = read_forms(&forms)?;
            let d = data.domain();
            let seed = match &seed {
                Some(p) => read_seed(p)?,
                None => canonical_seed(data.f().at(d.u_min, d.v_min))?,
            };
            let rt = ReconstructTolerances {
                seed: tol.seed,
                compat: tol.compat,
            };
            let q = reconstruct(&data, &seed, rt)?;
            write_grid(&out, q.q(), Some(&surface_meta(&q)))?;
            println!("surface on {d} -> {}", out.display());
        }
        Command::Compare { a, b, report } => {
            let qa = read_surface(&a)?;
            let qb = read_surface(&b)?;
            let inputs = json!({"a": file_digest(&a)?, "b": file_digest(&b)?});
            let (body, outcome) = match affine_equivalence(&qa, &qb, tol.equiv) {
                Ok(map) => {
                    println!("equivalent, det {:.12}", map.det());
                    let body = json!({
                        "command": argv(),
                        "inputs": inputs,
                        "equivalent": true,
                        "coefficients": map.coefficients(),
                        "det": map.det(),
                        "tolerance": tol.equiv,
                    });
                    (body, Ok(()))
                }
                Err(e @ (Error::NotEquivalent { .. } | Error::DegenerateQuadrangle { .. })) => {
                    let body = json!({
                        "command": argv(),
                        "inputs": inputs,
                        "equivalent": false,
                        "error": e.to_string(),
                        "tolerance": tol.equiv,
                    });
                    (body, Err(Failure::from(e)))
                }
                Err(e) => return Err(e.into()),
            };
            write_text(
                &report,
                &serde_json::to_string_pretty(&body).expect("serializes"),
            )?;
            return outcome;
        }
        Command::Area { surface } => {
            let q = read_surface(&surface)?;
            println!("{:.16e}", affine_area(&q)?);
        }
        Command::Gradient { surface, out } => {
            let q = read_surface(&surface)?;
            let g = area_gradient(&q)?;
            write_grid(&out, &g.g, Some(&json!({"role": "area_gradient"})))?;
            println!("max |g| {:.3e} -> {}", g.max_norm(), out.display());
        }
        Command::Critical {
            surface,
            tol: t,
            report,
        } => {
            let q = read_surface(&surface)?;
            let crit = criticality_certificate(&q, t.unwrap_or(tol.crit))?;
            let mut r = RunReport::new(argv());
            r.inputs.insert("surface".into(), file_digest(&surface)?);
            r.warnings.extend(crit.warning);
            r.add_checks([crit.certificate]);
            match report {
                Some(p) => return finish(&r, &p, started),
                None => {
                    print!("{}", r.summary());
                    if !r.passed {
                        return Err(Failure::Check("area gradient does not vanish".into()));
                    }
                }
            }
        }
        Command::Export {
            surface,
            resolution,
            out,
        } => {
            let q = read_surface(&surface)?;
            let mesh = export_surface_obj(&q, resolution, &out)?;
            println!(
                "{} vertices, {} triangles -> {}",
                mesh.positions.len(),
                mesh.triangles.len(),
                out.display()
            );
        }
        Command::Pipeline {
            ex,
            out_dir,
            resolutions,
        } => {
            let opts = PipelineOptions {
                example: ex.example(),
                domain: ex.domain()?,
                resolutions,
                tolerances: tol,
            };
            let r = run_pipeline(&opts, &out_dir, argv())?;
            print!("{}", r.summary());
            for w in &r.warnings {
                println!("warning: {w}");
            }
            println!("artifacts in {}", out_dir.display());
            println!("wall time {:.3} s", started.elapsed().as_secs_f64());
            if !r.passed {
                return Err(Failure::Check("pipeline checks failed".into()));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(m)) => {
            eprintln!("check failed: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
