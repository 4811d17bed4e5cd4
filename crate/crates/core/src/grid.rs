//! Staggered grids over rectangular index boxes and the discrete difference
//! operators acting on them.
//!
//! A [`GridDomain`] is the inclusive box of *vertex* indices. Quantities that
//! live at half-integer positions are stored at the floor index:
//!
//! | layout   | position          | stored at |
//! |----------|-------------------|-----------|
//! | `Vertex` | `(u, v)`          | `(u, v)`  |
//! | `UEdge`  | `(u + ½, v)`      | `(u, v)`  |
//! | `VEdge`  | `(u, v + ½)`      | `(u, v)`  |
//! | `Face`   | `(u + ½, v + ½)`  | `(u, v)`  |
//!
//! A grid may cover only part of its layer (for example second differences
//! live on interior vertices only); its [`Extent`] records which storage
//! indices are present.

use std::fmt;
use std::marker::PhantomData;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::{Error, Result, Vec3};

/// Inclusive box of vertex indices. At least one face always exists.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridDomain {
    pub u_min: i64,
    pub u_max: i64,
    pub v_min: i64,
    pub v_max: i64,
}

impl GridDomain {
    pub fn new(u_min: i64, u_max: i64, v_min: i64, v_max: i64) -> Result<Self> {
        if u_max < u_min + 1 || v_max < v_min + 1 {
            return Err(Error::DomainTooSmall(format!(
                "[{u_min},{u_max}]x[{v_min},{v_max}] has no face"
            )));
        }
        Ok(Self {
            u_min,
            u_max,
            v_min,
            v_max,
        })
    }

    /// Number of vertex columns (distinct `u` values).
    pub fn nu(&self) -> usize {
        (self.u_max - self.u_min + 1) as usize
    }

    /// Number of vertex rows (distinct `v` values).
    pub fn nv(&self) -> usize {
        (self.v_max - self.v_min + 1) as usize
    }

    pub fn face_count(&self) -> usize {
        (self.nu() - 1) * (self.nv() - 1)
    }

    pub fn contains_vertex(&self, u: i64, v: i64) -> bool {
        (self.u_min..=self.u_max).contains(&u) && (self.v_min..=self.v_max).contains(&v)
    }

    pub fn contains_face(&self, u: i64, v: i64) -> bool {
        (self.u_min..self.u_max).contains(&u) && (self.v_min..self.v_max).contains(&v)
    }

    pub fn is_interior_vertex(&self, u: i64, v: i64) -> bool {
        u > self.u_min && u < self.u_max && v > self.v_min && v < self.v_max
    }

    pub fn as_array(&self) -> [i64; 4] {
        [self.u_min, self.u_max, self.v_min, self.v_max]
    }

    /// Storage indices of faces in row-major `(u, v)` order.
    pub fn faces(&self) -> impl Iterator<Item = (i64, i64)> {
        Extent::full(*self, GridKind::Face).indices()
    }

    pub fn vertices(&self) -> impl Iterator<Item = (i64, i64)> {
        Extent::full(*self, GridKind::Vertex).indices()
    }

    /// Vertices with all four neighbours present.
    pub fn interior_vertices(&self) -> impl Iterator<Item = (i64, i64)> {
        Extent {
            u_lo: self.u_min + 1,
            u_hi: self.u_max - 1,
            v_lo: self.v_min + 1,
            v_hi: self.v_max - 1,
        }
        .indices()
    }
}

impl fmt::Display for GridDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{},{}]x[{},{}]",
            self.u_min, self.u_max, self.v_min, self.v_max
        )
    }
}

/// Inclusive box of storage indices. May be empty (`u_hi < u_lo`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Extent {
    pub u_lo: i64,
    pub u_hi: i64,
    pub v_lo: i64,
    pub v_hi: i64,
}

impl Extent {
    pub fn full(domain: GridDomain, kind: GridKind) -> Self {
        let du = i64::from(kind.u_half());
        let dv = i64::from(kind.v_half());
        Self {
            u_lo: domain.u_min,
            u_hi: domain.u_max - du,
            v_lo: domain.v_min,
            v_hi: domain.v_max - dv,
        }
    }

    pub fn nu(&self) -> usize {
        (self.u_hi - self.u_lo + 1).max(0) as usize
    }

    pub fn nv(&self) -> usize {
        (self.v_hi - self.v_lo + 1).max(0) as usize
    }

    pub fn len(&self) -> usize {
        self.nu() * self.nv()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, u: i64, v: i64) -> bool {
        u >= self.u_lo && u <= self.u_hi && v >= self.v_lo && v <= self.v_hi
    }

    pub fn contains_extent(&self, other: &Extent) -> bool {
        other.is_empty()
            || (self.contains(other.u_lo, other.v_lo) && self.contains(other.u_hi, other.v_hi))
    }

    /// Row-major `(u, v)` iteration, `v` fastest.
    pub fn indices(self) -> impl Iterator<Item = (i64, i64)> {
        (self.u_lo..=self.u_hi).flat_map(move |u| (self.v_lo..=self.v_hi).map(move |v| (u, v)))
    }

    fn offset(&self, u: i64, v: i64) -> usize {
        (u - self.u_lo) as usize * self.nv() + (v - self.v_lo) as usize
    }
}

/// Runtime tag of a staggered layout.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridKind {
    Vertex,
    #[serde(rename = "uedge")]
    UEdge,
    #[serde(rename = "vedge")]
    VEdge,
    Face,
}

impl GridKind {
    pub fn u_half(self) -> bool {
        matches!(self, GridKind::UEdge | GridKind::Face)
    }

    pub fn v_half(self) -> bool {
        matches!(self, GridKind::VEdge | GridKind::Face)
    }

    pub fn name(self) -> &'static str {
        match self {
            GridKind::Vertex => "vertex",
            GridKind::UEdge => "uedge",
            GridKind::VEdge => "vedge",
            GridKind::Face => "face",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "vertex" => Some(GridKind::Vertex),
            "uedge" => Some(GridKind::UEdge),
            "vedge" => Some(GridKind::VEdge),
            "face" => Some(GridKind::Face),
            _ => None,
        }
    }
}

/// Compile-time staggered layout marker.
pub trait Layout: Copy + Default + fmt::Debug + Send + Sync + 'static {
    const KIND: GridKind;
}

/// Layout obtained by differencing in `u`.
pub trait DiffU: Layout {
    type Out: Layout;
}

/// Layout obtained by differencing in `v`.
pub trait DiffV: Layout {
    type Out: Layout;
}

macro_rules! layouts {
    ($($name:ident => $kind:ident, u: $u:ident, v: $v:ident;)*) => {
        $(
            #[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
            pub struct $name;
            impl Layout for $name {
                const KIND: GridKind = GridKind::$kind;
            }
            impl DiffU for $name {
                type Out = $u;
            }
            impl DiffV for $name {
                type Out = $v;
            }
        )*
    };
}

layouts! {
    Vertex => Vertex, u: UEdge, v: VEdge;
    UEdge => UEdge, u: Vertex, v: Face;
    VEdge => VEdge, u: Face, v: Vertex;
    Face => Face, u: VEdge, v: UEdge;
}

/// Values that can be stored on a grid and differenced.
pub trait GridValue:
    Copy
    + fmt::Debug
    + PartialEq
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Neg<Output = Self>
    + Mul<f64, Output = Self>
{
    const COMPONENTS: usize;
    fn zero() -> Self;
    /// Max-norm of the value.
    fn max_abs(&self) -> f64;
    fn components(&self) -> Vec<f64>;
    fn from_components(c: &[f64]) -> Self;
}

impl GridValue for f64 {
    const COMPONENTS: usize = 1;
    fn zero() -> Self {
        0.0
    }
    fn max_abs(&self) -> f64 {
        self.abs()
    }
    fn components(&self) -> Vec<f64> {
        vec![*self]
    }
    fn from_components(c: &[f64]) -> Self {
        c[0]
    }
}

impl GridValue for Vec3 {
    const COMPONENTS: usize = 3;
    fn zero() -> Self {
        Vec3::zeros()
    }
    fn max_abs(&self) -> f64 {
        self.amax()
    }
    fn components(&self) -> Vec<f64> {
        vec![self.x, self.y, self.z]
    }
    fn from_components(c: &[f64]) -> Self {
        Vec3::new(c[0], c[1], c[2])
    }
}

/// Dense values of one staggered layout over a sub-box of its layer.
#[derive(Clone, PartialEq)]
pub struct Grid<T, K: Layout> {
    domain: GridDomain,
    extent: Extent,
    values: Vec<T>,
    _layout: PhantomData<K>,
}

/// Values at vertices `(u, v)`.
pub type VertexGrid<T> = Grid<T, Vertex>;
/// Values at `u`-edges; `at(u, v)` is the value at `(u + ½, v)`.
pub type UEdgeGrid<T> = Grid<T, UEdge>;
/// Values at `v`-edges; `at(u, v)` is the value at `(u, v + ½)`.
pub type VEdgeGrid<T> = Grid<T, VEdge>;
/// Values at faces; `at(u, v)` is the value at `(u + ½, v + ½)`.
pub type FaceGrid<T> = Grid<T, Face>;

impl<T: fmt::Debug, K: Layout> fmt::Debug for Grid<T, K> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("kind", &K::KIND)
            .field("domain", &self.domain)
            .field("extent", &self.extent)
            .field("values", &self.values)
            .finish()
    }
}

impl<T: Copy, K: Layout> Grid<T, K> {
    /// Grid covering the whole layer of `domain`.
    pub fn from_fn(domain: GridDomain, f: impl FnMut(i64, i64) -> T) -> Self {
        Self::from_fn_on(domain, Extent::full(domain, K::KIND), f)
    }

    /// Grid covering `extent`, which must lie inside the layer of `domain`.
    pub fn from_fn_on(
        domain: GridDomain,
        extent: Extent,
        mut f: impl FnMut(i64, i64) -> T,
    ) -> Self {
        assert!(
            Extent::full(domain, K::KIND).contains_extent(&extent),
            "{extent:?} outside the {} layer of {domain}",
            K::KIND.name()
        );
        let values = extent.indices().map(|(u, v)| f(u, v)).collect();
        Self {
            domain,
            extent,
            values,
            _layout: PhantomData,
        }
    }

    pub fn try_from_fn_on<E>(
        domain: GridDomain,
        extent: Extent,
        mut f: impl FnMut(i64, i64) -> std::result::Result<T, E>,
    ) -> std::result::Result<Self, E> {
        assert!(Extent::full(domain, K::KIND).contains_extent(&extent));
        let values = extent
            .indices()
            .map(|(u, v)| f(u, v))
            .collect::<std::result::Result<Vec<_>, E>>()?;
        Ok(Self {
            domain,
            extent,
            values,
            _layout: PhantomData,
        })
    }

    /// Wraps row-major values; fails if the length does not match `extent`.
    pub fn from_values(domain: GridDomain, extent: Extent, values: Vec<T>) -> Result<Self> {
        if !Extent::full(domain, K::KIND).contains_extent(&extent) {
            return Err(Error::Format(format!(
                "{} extent {extent:?} outside domain {domain}",
                K::KIND.name()
            )));
        }
        if values.len() != extent.len() {
            return Err(Error::Format(format!(
                "{} grid over {extent:?} needs {} values, got {}",
                K::KIND.name(),
                extent.len(),
                values.len()
            )));
        }
        Ok(Self {
            domain,
            extent,
            values,
            _layout: PhantomData,
        })
    }

    pub fn domain(&self) -> GridDomain {
        self.domain
    }

    pub fn extent(&self) -> Extent {
        self.extent
    }

    pub fn kind(&self) -> GridKind {
        K::KIND
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn contains(&self, u: i64, v: i64) -> bool {
        self.extent.contains(u, v)
    }

    /// Value stored at `(u, v)`.
    ///
    /// Panics when `(u, v)` is outside the grid's extent.
    #[track_caller]
    pub fn at(&self, u: i64, v: i64) -> T {
        match self.get(u, v) {
            Some(x) => x,
            None => panic!(
                "index ({u},{v}) outside {} grid extent {:?}",
                K::KIND.name(),
                self.extent
            ),
        }
    }

    pub fn get(&self, u: i64, v: i64) -> Option<T> {
        self.extent
            .contains(u, v)
            .then(|| self.values[self.extent.offset(u, v)])
    }

    #[track_caller]
    pub fn set(&mut self, u: i64, v: i64, value: T) {
        assert!(
            self.extent.contains(u, v),
            "index ({u},{v}) outside {:?}",
            self.extent
        );
        let i = self.extent.offset(u, v);
        self.values[i] = value;
    }

    pub fn iter(&self) -> impl Iterator<Item = ((i64, i64), T)> + '_ {
        self.extent.indices().zip(self.values.iter().copied())
    }

    pub fn map<S: Copy>(&self, mut f: impl FnMut(T) -> S) -> Grid<S, K> {
        Grid {
            domain: self.domain,
            extent: self.extent,
            values: self.values.iter().map(|&x| f(x)).collect(),
            _layout: PhantomData,
        }
    }

    /// Restriction to a smaller extent.
    pub fn restrict(&self, extent: Extent) -> Self {
        assert!(self.extent.contains_extent(&extent));
        Self::from_fn_on(self.domain, extent, |u, v| self.at(u, v))
    }
}

impl<T: GridValue, K: Layout> Grid<T, K> {
    pub fn max_abs(&self) -> f64 {
        self.values
            .iter()
            .map(GridValue::max_abs)
            .fold(0.0, f64::max)
    }
}

fn too_small(op: &str, extent: Extent) -> Error {
    Error::DomainTooSmall(format!("{op} needs more indices than {extent:?} provides"))
}

/// Forward difference in `u`: `f₁(u+½, v) = f(u+1, v) − f(u, v)`.
///
/// Applied to a half-integer layout the result lands on integer positions,
/// e.g. a face grid differences into `v`-edges: `F₁(u, v+½) = F(u+½, v+½) − F(u−½, v+½)`.
pub fn d1<T: GridValue, K: DiffU>(g: &Grid<T, K>) -> Result<Grid<T, K::Out>> {
    let e = g.extent();
    if e.nu() < 2 || e.nv() == 0 {
        return Err(too_small("d1", e));
    }
    if K::KIND.u_half() {
        let out = Extent {
            u_lo: e.u_lo + 1,
            ..e
        };
        Ok(Grid::from_fn_on(g.domain(), out, |u, v| {
            g.at(u, v) - g.at(u - 1, v)
        }))
    } else {
        let out = Extent {
            u_hi: e.u_hi - 1,
            ..e
        };
        Ok(Grid::from_fn_on(g.domain(), out, |u, v| {
            g.at(u + 1, v) - g.at(u, v)
        }))
    }
}

/// Forward difference in `v`: `f₂(u, v+½) = f(u, v+1) − f(u, v)`.
pub fn d2<T: GridValue, K: DiffV>(g: &Grid<T, K>) -> Result<Grid<T, K::Out>> {
    let e = g.extent();
    if e.nv() < 2 || e.nu() == 0 {
        return Err(too_small("d2", e));
    }
    if K::KIND.v_half() {
        let out = Extent {
            v_lo: e.v_lo + 1,
            ..e
        };
        Ok(Grid::from_fn_on(g.domain(), out, |u, v| {
            g.at(u, v) - g.at(u, v - 1)
        }))
    } else {
        let out = Extent {
            v_hi: e.v_hi - 1,
            ..e
        };
        Ok(Grid::from_fn_on(g.domain(), out, |u, v| {
            g.at(u, v + 1) - g.at(u, v)
        }))
    }
}

/// `f₁₁(u, v) = f(u+1, v) − 2f(u, v) + f(u−1, v)` on `u`-interior indices.
pub fn d11<T: GridValue, K: Layout>(g: &Grid<T, K>) -> Result<Grid<T, K>> {
    let e = g.extent();
    if e.nu() < 3 || e.nv() == 0 {
        return Err(too_small("d11", e));
    }
    let out = Extent {
        u_lo: e.u_lo + 1,
        u_hi: e.u_hi - 1,
        ..e
    };
    Ok(Grid::from_fn_on(g.domain(), out, |u, v| {
        g.at(u + 1, v) - g.at(u, v) * 2.0 + g.at(u - 1, v)
    }))
}

/// `f₂₂(u, v) = f(u, v+1) − 2f(u, v) + f(u, v−1)` on `v`-interior indices.
pub fn d22<T: GridValue, K: Layout>(g: &Grid<T, K>) -> Result<Grid<T, K>> {
    let e = g.extent();
    if e.nv() < 3 || e.nu() == 0 {
        return Err(too_small("d22", e));
    }
    let out = Extent {
        v_lo: e.v_lo + 1,
        v_hi: e.v_hi - 1,
        ..e
    };
    Ok(Grid::from_fn_on(g.domain(), out, |u, v| {
        g.at(u, v + 1) - g.at(u, v) * 2.0 + g.at(u, v - 1)
    }))
}

/// Mixed difference on faces:
/// `f₁₂(u+½, v+½) = f(u+1, v+1) + f(u, v) − f(u+1, v) − f(u, v+1)`.
pub fn d12<T: GridValue>(g: &VertexGrid<T>) -> Result<FaceGrid<T>> {
    let e = g.extent();
    if e.nu() < 2 || e.nv() < 2 {
        return Err(too_small("d12", e));
    }
    let out = Extent {
        u_hi: e.u_hi - 1,
        v_hi: e.v_hi - 1,
        ..e
    };
    Ok(Grid::from_fn_on(g.domain(), out, |u, v| {
        mixed(
            g.at(u, v),
            g.at(u + 1, v),
            g.at(u, v + 1),
            g.at(u + 1, v + 1),
        )
    }))
}

/// `f(1,1) + f(0,0) − f(1,0) − f(0,1)` for the four corners of a quad.
pub(crate) fn mixed<T: GridValue>(f00: T, f10: T, f01: T, f11: T) -> T {
    f11 + f00 - f10 - f01
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dom(u0: i64, u1: i64, v0: i64, v1: i64) -> GridDomain {
        GridDomain::new(u0, u1, v0, v1).unwrap()
    }

    #[test]
    fn domain_needs_a_face() {
        assert!(matches!(
            GridDomain::new(0, 0, 0, 3),
            Err(Error::DomainTooSmall(_))
        ));
        assert!(GridDomain::new(0, 1, 0, 1).is_ok());
    }

    #[test]
    fn layer_sizes() {
        let d = dom(0, 3, 0, 2);
        assert_eq!(VertexGrid::from_fn(d, |_, _| 0.0).len(), 12);
        assert_eq!(UEdgeGrid::from_fn(d, |_, _| 0.0).len(), 9);
        assert_eq!(VEdgeGrid::from_fn(d, |_, _| 0.0).len(), 8);
        assert_eq!(FaceGrid::from_fn(d, |_, _| 0.0).len(), 6);
    }

    #[test]
    fn d1_of_constant_is_zero() {
        let g = VertexGrid::from_fn(dom(0, 3, 0, 2), |_, _| 7.5);
        assert!(d1(&g).unwrap().values().iter().all(|&x| x == 0.0));
        assert!(d2(&g).unwrap().values().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn d1_of_u_is_one() {
        let g = VertexGrid::from_fn(dom(0, 2, 0, 1), |u, _| u as f64);
        let e = d1(&g).unwrap();
        assert_eq!(e.len(), 4);
        assert!(e.values().iter().all(|&x| x == 1.0));
    }

    #[test]
    fn d1_of_u_squared() {
        let g = VertexGrid::from_fn(dom(0, 2, 0, 1), |u, _| (u * u) as f64);
        let e = d1(&g).unwrap();
        assert_eq!(e.at(0, 0), 1.0);
        assert_eq!(e.at(1, 0), 3.0);
    }

    #[test]
    fn d2_of_v_and_uv() {
        let g = VertexGrid::from_fn(dom(0, 2, 0, 2), |_, v| v as f64);
        assert!(d2(&g).unwrap().values().iter().all(|&x| x == 1.0));
        let g = VertexGrid::from_fn(dom(0, 2, 0, 2), |u, v| (u * v) as f64);
        let e = d2(&g).unwrap();
        assert_eq!(e.at(2, 0), 2.0);
        assert_eq!(e.at(2, 1), 2.0);
    }

    #[test]
    fn second_differences() {
        let d = dom(-2, 3, -1, 4);
        let affine = VertexGrid::from_fn(d, |u, v| 2.0 * u as f64 - 3.0 * v as f64 + 0.5);
        for g in [d11(&affine).unwrap(), d22(&affine).unwrap()] {
            assert!(g.values().iter().all(|&x| x == 0.0));
        }
        assert!(d12(&affine).unwrap().values().iter().all(|&x| x == 0.0));

        let uv = VertexGrid::from_fn(d, |u, v| (u * v) as f64);
        assert!(d12(&uv).unwrap().values().iter().all(|&x| x == 1.0));

        let uu = VertexGrid::from_fn(d, |u, _| (u * u) as f64);
        let g = d11(&uu).unwrap();
        assert_eq!(g.extent().u_lo, -1);
        assert_eq!(g.extent().u_hi, 2);
        assert!(g.values().iter().all(|&x| x == 2.0));
    }

    #[test]
    fn degenerate_stencils_error() {
        let g = VertexGrid::from_fn(dom(0, 1, 0, 1), |_, _| 0.0);
        assert!(matches!(d11(&g), Err(Error::DomainTooSmall(_))));
        assert!(matches!(d22(&g), Err(Error::DomainTooSmall(_))));
        let e = d1(&g).unwrap();
        assert!(matches!(d1(&e), Err(Error::DomainTooSmall(_))));
    }

    #[test]
    fn face_differences_land_on_edges() {
        let d = dom(0, 3, 0, 3);
        let f = FaceGrid::from_fn(d, |u, v| (10 * u + v) as f64);
        let f1 = d1(&f).unwrap();
        assert_eq!(f1.kind(), GridKind::VEdge);
        assert_eq!(f1.extent().u_lo, 1);
        assert_eq!(f1.at(1, 0), 10.0);
        let f2 = d2(&f).unwrap();
        assert_eq!(f2.kind(), GridKind::UEdge);
        assert_eq!(f2.at(0, 1), 1.0);
    }

    #[test]
    #[should_panic(expected = "outside")]
    fn out_of_range_access_panics() {
        let g = FaceGrid::from_fn(dom(0, 2, 0, 2), |_, _| 0.0);
        g.at(2, 0);
    }

    #[test]
    fn row_major_order_is_v_fastest() {
        let g = VertexGrid::from_fn(dom(0, 1, 0, 2), |u, v| (10 * u + v) as f64);
        assert_eq!(g.values(), &[0.0, 1.0, 2.0, 10.0, 11.0, 12.0]);
    }
}
