//! JSON files for grids, cubic-form bundles and seeds.
//!
//! A grid file looks like
//!
//! ```json
//! {
//!   "kind": "vertex",
//!   "domain": [0, 6, 0, 6],
//!   "components": 3,
//!   "values": [ ... ]
//! }
//! ```
//!
//! `values` lists the whole layer of the domain in row-major order (`v`
//! fastest), `components` numbers per position, with `null` where a grid
//! does not store a value. An optional `meta` object is carried along.
//! Numbers are written with 17 significant digits, so files round-trip
//! exactly and repeated runs are byte-identical.

use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::compatibility::FundamentalData;
use crate::grid::{Extent, Grid, GridKind, GridValue, Layout};
use crate::{Error, GridDomain, Result, Vec3};

#[derive(Deserialize)]
struct RawGrid {
    kind: GridKind,
    domain: [i64; 4],
    components: usize,
    values: Vec<Option<f64>>,
    #[serde(default)]
    meta: Option<Value>,
}

fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".to_string()
    }
}

/// Serializes `grid` as a grid file body (indented by `indent` spaces).
pub fn grid_to_json<T: GridValue, K: Layout>(
    grid: &Grid<T, K>,
    meta: Option<&Value>,
    indent: usize,
) -> String {
    let pad = " ".repeat(indent);
    let d = grid.domain();
    let [a, b, c, e] = d.as_array();
    let mut s = String::new();
    s.push_str("{\n");
    let _ = writeln!(s, "{pad}  \"kind\": \"{}\",", K::KIND.name());
    let _ = writeln!(s, "{pad}  \"domain\": [{a}, {b}, {c}, {e}],");
    let _ = writeln!(s, "{pad}  \"components\": {},", T::COMPONENTS);
    if let Some(m) = meta {
        let _ = writeln!(s, "{pad}  \"meta\": {},", m);
    }
    let _ = writeln!(s, "{pad}  \"values\": [");
    let full = Extent::full(d, K::KIND);
    let n = full.len();
    for (k, (u, v)) in full.indices().enumerate() {
        let entries: Vec<String> = match grid.get(u, v) {
            Some(x) => x.components().into_iter().map(num).collect(),
            None => vec!["null".to_string(); T::COMPONENTS],
        };
        let sep = if k + 1 == n { "" } else { "," };
        let _ = writeln!(s, "{pad}    {}{sep}", entries.join(", "));
    }
    let _ = writeln!(s, "{pad}  ]");
    let _ = write!(s, "{pad}}}");
    s
}

fn convert<T: GridValue, K: Layout>(raw: RawGrid) -> Result<(Grid<T, K>, Option<Value>)> {
    if raw.kind != K::KIND {
        return Err(Error::Format(format!(
            "expected a {} grid, found {}",
            K::KIND.name(),
            raw.kind.name()
        )));
    }
    if raw.components != T::COMPONENTS {
        return Err(Error::Format(format!(
            "expected {} components, found {}",
            T::COMPONENTS,
            raw.components
        )));
    }
    let [a, b, c, e] = raw.domain;
    let domain = GridDomain::new(a, b, c, e)?;
    let full = Extent::full(domain, K::KIND);
    let k = T::COMPONENTS;
    if raw.values.len() != full.len() * k {
        return Err(Error::Format(format!(
            "{} grid on {domain} needs {} numbers, got {}",
            K::KIND.name(),
            full.len() * k,
            raw.values.len()
        )));
    }

    let mut present: Vec<(i64, i64, T)> = Vec::new();
    for ((u, v), chunk) in full.indices().zip(raw.values.chunks(k)) {
        match chunk.iter().copied().collect::<Option<Vec<f64>>>() {
            Some(cs) => present.push((u, v, T::from_components(&cs))),
            None if chunk.iter().all(Option::is_none) => {}
            None => return Err(Error::Format(format!("partially null entry at ({u}, {v})"))),
        }
    }
    if present.is_empty() {
        return Err(Error::Format("grid has no values".into()));
    }
    let extent = Extent {
        u_lo: present.iter().map(|p| p.0).min().unwrap_or(0),
        u_hi: present.iter().map(|p| p.0).max().unwrap_or(0),
        v_lo: present.iter().map(|p| p.1).min().unwrap_or(0),
        v_hi: present.iter().map(|p| p.1).max().unwrap_or(0),
    };
    if present.len() != extent.len() {
        return Err(Error::Format(format!(
            "stored values of the {} grid do not fill a box",
            K::KIND.name()
        )));
    }
    let values = present.into_iter().map(|p| p.2).collect();
    Ok((Grid::from_values(domain, extent, values)?, raw.meta))
}

pub fn grid_from_json<T: GridValue, K: Layout>(text: &str) -> Result<(Grid<T, K>, Option<Value>)> {
    let raw: RawGrid = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
    convert(raw)
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Writes `text` followed by a newline.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, format!("{text}\n")).map_err(|e| Error::io(path, e))
}

pub fn read_grid<T: GridValue, K: Layout>(path: &Path) -> Result<(Grid<T, K>, Option<Value>)> {
    grid_from_json(&read_text(path)?).map_err(|e| match e {
        Error::Format(m) => Error::Format(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn write_grid<T: GridValue, K: Layout>(
    path: &Path,
    grid: &Grid<T, K>,
    meta: Option<&Value>,
) -> Result<()> {
    write_text(path, &grid_to_json(grid, meta, 0))
}

#[derive(Deserialize)]
struct RawForms {
    #[serde(rename = "F")]
    f: RawGrid,
    #[serde(rename = "A")]
    a: RawGrid,
    #[serde(rename = "B")]
    b: RawGrid,
}

/// `{"F": face grid, "A": vertex grid, "B": vertex grid}`; `A` and `B` are
/// null outside their stencils.
pub fn forms_to_json(data: &FundamentalData) -> String {
    format!(
        "{{\n  \"F\": {},\n  \"A\": {},\n  \"B\": {}\n}}",
        grid_to_json(data.f(), None, 2),
        grid_to_json(data.a(), None, 2),
        grid_to_json(data.b(), None, 2)
    )
}

pub fn forms_from_json(text: &str) -> Result<FundamentalData> {
    let raw: RawForms = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
    let (f, _) = convert(raw.f)?;
    let (a, _) = convert(raw.a)?;
    let (b, _) = convert(raw.b)?;
    FundamentalData::new(f, a, b)
}

pub fn read_forms(path: &Path) -> Result<FundamentalData> {
    forms_from_json(&read_text(path)?)
}

pub fn write_forms(path: &Path, data: &FundamentalData) -> Result<()> {
    write_text(path, &forms_to_json(data))
}

#[derive(Deserialize)]
struct RawSeed {
    points: [[f64; 3]; 4],
}

/// `{"points": [[x, y, z], ...]}` with the corners `q(0,0), q(1,0), q(0,1), q(1,1)`.
pub fn seed_to_json(seed: &[Vec3; 4]) -> String {
    let pts: Vec<String> = seed
        .iter()
        .map(|p| format!("    [{}, {}, {}]", num(p.x), num(p.y), num(p.z)))
        .collect();
    format!("{{\n  \"points\": [\n{}\n  ]\n}}", pts.join(",\n"))
}

pub fn seed_from_json(text: &str) -> Result<[Vec3; 4]> {
    let raw: RawSeed = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
    Ok(raw.points.map(|p| Vec3::new(p[0], p[1], p[2])))
}

pub fn read_seed(path: &Path) -> Result<[Vec3; 4]> {
    seed_from_json(&read_text(path)?)
}

/// Lower-case hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_digest(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(&bytes))
}
