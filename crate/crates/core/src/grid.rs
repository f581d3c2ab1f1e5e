//! Half-step lattice and the family of staggered meshes.
//!
//! Every mesh is a subset of the integer lattice `k ∈ Z^d` with physical
//! position `x = k * h / 2`, `h = 1 / (N + 1)`. Primal points have all
//! coordinates even in `[2, 2N]`; shifting by `±h/2` along an axis flips
//! the parity of that coordinate. A mesh is described per axis by an
//! [`AxisKind`]; the named meshes of the construction are particular
//! combinations (see [`NamedMesh`]).
//!
//! Enumeration is lexicographic in `k` with axis 0 most significant. That
//! order is the index <-> point bijection used everywhere else.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::{Error, Result};

pub const MAX_DIM: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GridSpec {
    dim: usize,
    n: usize,
}

impl GridSpec {
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::UnsupportedDimension(dim));
        }
        if n == 0 {
            return Err(Error::EmptyGrid);
        }
        Ok(Self { dim, n })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Interior points per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Mesh size `1 / (N + 1)`.
    pub fn h(&self) -> f64 {
        1.0 / (self.n + 1) as f64
    }

    /// Half-step coordinate of the far boundary, `2 (N + 1)`.
    pub fn far_edge(&self) -> i64 {
        2 * (self.n as i64 + 1)
    }

    pub fn coordinate(&self, k: i64) -> f64 {
        k as f64 / self.far_edge() as f64
    }

    pub fn check_axis(&self, axis: usize) -> Result<()> {
        if axis < self.dim {
            Ok(())
        } else {
            Err(Error::InvalidAxis { axis, dim: self.dim })
        }
    }

    pub fn primal(&self) -> MeshId {
        MeshId::primal(self.dim)
    }

    /// Number of primal unknowns, `N^d`.
    pub fn primal_len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }
}

/// Coordinate set of a mesh along one axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AxisKind {
    /// Even, `2..=2N` (interior primal nodes).
    Interior,
    /// Even, `0..=2N+2` (interior plus both boundary nodes).
    Closed,
    /// Odd, `1..=2N+1` (the `±h/2` shifts of interior nodes, union).
    Dual,
    /// Odd, `3..=2N-1` (intersection of the two shifts).
    DualPrime,
    /// `{0, 2N+2}`.
    Boundary,
}

impl AxisKind {
    pub(crate) fn range(self, n: usize) -> AxisRange {
        let n = n as i64;
        match self {
            AxisKind::Interior => AxisRange { start: 2, step: 2, count: n as usize },
            AxisKind::Closed => AxisRange { start: 0, step: 2, count: (n + 2) as usize },
            AxisKind::Dual => AxisRange { start: 1, step: 2, count: (n + 1) as usize },
            AxisKind::DualPrime => AxisRange { start: 3, step: 2, count: (n - 1).max(0) as usize },
            AxisKind::Boundary => AxisRange { start: 0, step: 2 * n + 2, count: 2 },
        }
    }

    /// Kind reached after one `±h/2` shift, when both neighbours of every
    /// target point are available.
    pub fn shifted(self) -> Option<AxisKind> {
        match self {
            AxisKind::Closed => Some(AxisKind::Dual),
            AxisKind::Dual => Some(AxisKind::Interior),
            AxisKind::Interior => Some(AxisKind::DualPrime),
            AxisKind::DualPrime | AxisKind::Boundary => None,
        }
    }

    fn label(self) -> &'static str {
        match self {
            AxisKind::Interior => "interior",
            AxisKind::Closed => "closed",
            AxisKind::Dual => "dual",
            AxisKind::DualPrime => "dual'",
            AxisKind::Boundary => "boundary",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct AxisRange {
    pub start: i64,
    pub step: i64,
    pub count: usize,
}

impl AxisRange {
    #[inline]
    pub fn position(&self, k: i64) -> Option<usize> {
        let off = k - self.start;
        if off < 0 || off % self.step != 0 {
            return None;
        }
        let q = (off / self.step) as usize;
        (q < self.count).then_some(q)
    }

    #[inline]
    pub fn coord(&self, q: usize) -> i64 {
        self.start + self.step * q as i64
    }

    fn contains_range(&self, other: &AxisRange) -> bool {
        if other.count == 0 {
            return true;
        }
        let first = other.coord(0);
        let last = other.coord(other.count - 1);
        self.position(first).is_some()
            && self.position(last).is_some()
            && (other.count == 1 || other.step % self.step == 0)
    }
}

/// Mesh identifier: one [`AxisKind`] per axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct MeshId {
    dim: u8,
    axes: [AxisKind; MAX_DIM],
}

/// The meshes named in the construction (axes are 0-based).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NamedMesh {
    /// `W`, interior grid points.
    Primal,
    /// `W*_i = τ_i(W) ∪ τ_-i(W)`.
    DualStar(usize),
    /// `W'_i = τ_i(W) ∩ τ_-i(W)`.
    DualPrime(usize),
    /// `(W*_i)*_j` for `i != j`.
    DoubleDual(usize, usize),
    /// `∂_i W = (W*_i)*_i \ W`.
    BoundaryFace(usize),
    /// `(W*_i)*_i`, the primal mesh closed along axis `i`.
    Closure(usize),
}

impl MeshId {
    fn with(dim: usize, f: impl Fn(usize) -> AxisKind) -> Self {
        let mut axes = [AxisKind::Interior; MAX_DIM];
        for (a, slot) in axes.iter_mut().enumerate().take(dim) {
            *slot = f(a);
        }
        Self { dim: dim as u8, axes }
    }

    fn check(dim: usize, axis: usize) -> Result<()> {
        if axis < dim {
            Ok(())
        } else {
            Err(Error::InvalidAxis { axis, dim })
        }
    }

    pub fn primal(dim: usize) -> Self {
        Self::with(dim, |_| AxisKind::Interior)
    }

    /// Primal mesh closed along every axis (`W` together with `∂W` and the
    /// box corners).
    pub fn closed(dim: usize) -> Self {
        Self::with(dim, |_| AxisKind::Closed)
    }

    pub fn dual_star(dim: usize, i: usize) -> Result<Self> {
        Self::check(dim, i)?;
        Ok(Self::with(dim, |a| if a == i { AxisKind::Dual } else { AxisKind::Interior }))
    }

    pub fn dual_prime(dim: usize, i: usize) -> Result<Self> {
        Self::check(dim, i)?;
        Ok(Self::with(dim, |a| if a == i { AxisKind::DualPrime } else { AxisKind::Interior }))
    }

    /// `(W*_i)*_j`; for `i == j` this is the closure along `i`.
    pub fn double_dual(dim: usize, i: usize, j: usize) -> Result<Self> {
        Self::check(dim, i)?;
        Self::check(dim, j)?;
        if i == j {
            return Self::closure(dim, i);
        }
        Ok(Self::with(dim, |a| if a == i || a == j { AxisKind::Dual } else { AxisKind::Interior }))
    }

    pub fn boundary_face(dim: usize, i: usize) -> Result<Self> {
        Self::check(dim, i)?;
        Ok(Self::with(dim, |a| if a == i { AxisKind::Boundary } else { AxisKind::Interior }))
    }

    pub fn closure(dim: usize, i: usize) -> Result<Self> {
        Self::check(dim, i)?;
        Ok(Self::with(dim, |a| if a == i { AxisKind::Closed } else { AxisKind::Interior }))
    }

    pub fn from_axes(kinds: &[AxisKind]) -> Result<Self> {
        if kinds.is_empty() || kinds.len() > MAX_DIM {
            return Err(Error::UnsupportedDimension(kinds.len()));
        }
        Ok(Self::with(kinds.len(), |a| kinds[a]))
    }

    pub fn from_named(dim: usize, named: NamedMesh) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::UnsupportedDimension(dim));
        }
        match named {
            NamedMesh::Primal => Ok(Self::primal(dim)),
            NamedMesh::DualStar(i) => Self::dual_star(dim, i),
            NamedMesh::DualPrime(i) => Self::dual_prime(dim, i),
            NamedMesh::DoubleDual(i, j) => Self::double_dual(dim, i, j),
            NamedMesh::BoundaryFace(i) => Self::boundary_face(dim, i),
            NamedMesh::Closure(i) => Self::closure(dim, i),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn axes(&self) -> &[AxisKind] {
        &self.axes[..self.dim()]
    }

    pub fn axis(&self, i: usize) -> AxisKind {
        self.axes[i]
    }

    pub fn with_axis(&self, i: usize, kind: AxisKind) -> MeshId {
        let mut out = *self;
        out.axes[i] = kind;
        out
    }

    pub fn is_primal(&self) -> bool {
        self.axes().iter().all(|&k| k == AxisKind::Interior)
    }

    /// Recognise one of the named meshes.
    pub fn named(&self) -> Option<NamedMesh> {
        let special: Vec<(usize, AxisKind)> = self
            .axes()
            .iter()
            .copied()
            .enumerate()
            .filter(|&(_, k)| k != AxisKind::Interior)
            .collect();
        match special.as_slice() {
            [] => Some(NamedMesh::Primal),
            [(i, AxisKind::Dual)] => Some(NamedMesh::DualStar(*i)),
            [(i, AxisKind::DualPrime)] => Some(NamedMesh::DualPrime(*i)),
            [(i, AxisKind::Boundary)] => Some(NamedMesh::BoundaryFace(*i)),
            [(i, AxisKind::Closed)] => Some(NamedMesh::Closure(*i)),
            [(i, AxisKind::Dual), (j, AxisKind::Dual)] => Some(NamedMesh::DoubleDual(*i, *j)),
            _ => None,
        }
    }

    /// Face axis when this is `∂_i W`.
    pub fn boundary_axis(&self) -> Option<usize> {
        match self.named() {
            Some(NamedMesh::BoundaryFace(i)) => Some(i),
            _ => None,
        }
    }
}

impl fmt::Display for MeshId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.named() {
            Some(NamedMesh::Primal) => write!(f, "W"),
            Some(NamedMesh::DualStar(i)) => write!(f, "W*_{}", i),
            Some(NamedMesh::DualPrime(i)) => write!(f, "W'_{}", i),
            Some(NamedMesh::DoubleDual(i, j)) => write!(f, "W**_{}{}", i, j),
            Some(NamedMesh::BoundaryFace(i)) => write!(f, "dW_{}", i),
            Some(NamedMesh::Closure(i)) => write!(f, "Wbar_{}", i),
            None => {
                write!(f, "[")?;
                for (a, k) in self.axes().iter().enumerate() {
                    if a > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{}", k.label())?;
                }
                write!(f, "]")
            }
        }
    }
}

/// A lattice point in half-step coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MeshPoint {
    k: [i64; MAX_DIM],
    dim: u8,
}

impl MeshPoint {
    pub fn new(k: &[i64]) -> Result<Self> {
        if k.is_empty() || k.len() > MAX_DIM {
            return Err(Error::UnsupportedDimension(k.len()));
        }
        let mut buf = [0; MAX_DIM];
        buf[..k.len()].copy_from_slice(k);
        Ok(Self { k: buf, dim: k.len() as u8 })
    }

    pub fn k(&self) -> &[i64] {
        &self.k[..self.dim as usize]
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    /// `τ_{±i}`: move by `delta` half steps along `axis`.
    pub fn shifted(&self, axis: usize, delta: i64) -> MeshPoint {
        let mut out = *self;
        out.k[axis] += delta;
        out
    }

    pub fn position(&self, grid: &GridSpec) -> [f64; MAX_DIM] {
        let mut x = [0.0; MAX_DIM];
        for (a, xa) in x.iter_mut().enumerate().take(self.dim()) {
            *xa = grid.coordinate(self.k[a]);
        }
        x
    }
}

impl fmt::Display for MeshPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "k=(")?;
        for (a, k) in self.k().iter().enumerate() {
            if a > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", k)?;
        }
        write!(f, ")")
    }
}

/// Index <-> point bijection of one mesh.
#[derive(Clone, Debug)]
pub struct MeshLayout {
    dim: usize,
    ranges: [AxisRange; MAX_DIM],
    strides: [usize; MAX_DIM],
    len: usize,
}

impl MeshLayout {
    pub fn new(grid: &GridSpec, mesh: &MeshId) -> Result<Self> {
        if mesh.dim() != grid.dim() {
            return Err(Error::MeshMismatch {
                expected: format!("a {}-d mesh", grid.dim()),
                found: format!("{} ({}-d)", mesh, mesh.dim()),
            });
        }
        let dim = grid.dim();
        let empty = AxisRange { start: 0, step: 1, count: 1 };
        let mut ranges = [empty; MAX_DIM];
        for (a, r) in ranges.iter_mut().enumerate().take(dim) {
            *r = mesh.axis(a).range(grid.n());
        }
        let mut strides = [0; MAX_DIM];
        let mut len = 1;
        for a in (0..dim).rev() {
            strides[a] = len;
            len *= ranges[a].count;
        }
        Ok(Self { dim, ranges, strides, len })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn index_of_k(&self, k: &[i64]) -> Option<usize> {
        let mut idx = 0;
        for a in 0..self.dim {
            idx += self.ranges[a].position(k[a])? * self.strides[a];
        }
        Some(idx)
    }

    #[inline]
    pub fn index_of(&self, p: &MeshPoint) -> Option<usize> {
        if p.dim() != self.dim {
            return None;
        }
        self.index_of_k(p.k())
    }

    #[inline]
    pub fn point(&self, mut idx: usize) -> MeshPoint {
        let mut k = [0; MAX_DIM];
        for a in 0..self.dim {
            let q = idx / self.strides[a];
            idx %= self.strides[a];
            k[a] = self.ranges[a].coord(q);
        }
        MeshPoint { k, dim: self.dim as u8 }
    }

    pub fn points(&self) -> impl Iterator<Item = MeshPoint> + '_ {
        (0..self.len).map(move |i| self.point(i))
    }

    fn contains_layout(&self, other: &MeshLayout) -> bool {
        (0..self.dim).all(|a| self.ranges[a].contains_range(&other.ranges[a]))
    }
}

/// All points of `mesh`, sorted lexicographically, without duplicates.
pub fn enumerate_mesh(grid: &GridSpec, mesh: &MeshId) -> Result<Vec<MeshPoint>> {
    let layout = MeshLayout::new(grid, mesh)?;
    Ok(layout.points().collect())
}

/// `ν_i(x)` for `x ∈ ∂_i W`: +1 when only the inward neighbour `τ_-i(x)`
/// lies in `W*_i`, -1 when only `τ_i(x)` does, 0 otherwise.
pub fn normal(grid: &GridSpec, axis: usize, x: &MeshPoint) -> Result<i8> {
    grid.check_axis(axis)?;
    let face = MeshLayout::new(grid, &MeshId::boundary_face(grid.dim(), axis)?)?;
    if face.index_of(x).is_none() {
        return Err(Error::PointNotOnMesh(format!("{} (face {})", x, axis)));
    }
    let dual = MeshLayout::new(grid, &MeshId::dual_star(grid.dim(), axis)?)?;
    let minus = dual.index_of(&x.shifted(axis, -1)).is_some();
    let plus = dual.index_of(&x.shifted(axis, 1)).is_some();
    Ok(match (minus, plus) {
        (true, false) => 1,
        (false, true) => -1,
        _ => 0,
    })
}

/// Values of a scalar field on one mesh.
#[derive(Clone, Debug, PartialEq)]
pub struct MeshFunction {
    grid: GridSpec,
    mesh: MeshId,
    values: Vec<f64>,
}

impl MeshFunction {
    pub fn new(grid: GridSpec, mesh: MeshId, values: Vec<f64>) -> Result<Self> {
        let layout = MeshLayout::new(&grid, &mesh)?;
        if layout.len() != values.len() {
            return Err(Error::LengthMismatch { expected: layout.len(), found: values.len() });
        }
        Ok(Self { grid, mesh, values })
    }

    pub fn zeros(grid: GridSpec, mesh: MeshId) -> Result<Self> {
        let layout = MeshLayout::new(&grid, &mesh)?;
        Ok(Self { grid, mesh, values: alloc::vec![0.0; layout.len()] })
    }

    pub fn constant(grid: GridSpec, mesh: MeshId, c: f64) -> Result<Self> {
        let mut u = Self::zeros(grid, mesh)?;
        u.values.iter_mut().for_each(|v| *v = c);
        Ok(u)
    }

    /// Sample `f(x)` at the physical positions of the mesh points.
    pub fn from_fn(grid: GridSpec, mesh: MeshId, mut f: impl FnMut(&[f64]) -> f64) -> Result<Self> {
        let layout = MeshLayout::new(&grid, &mesh)?;
        let d = grid.dim();
        let values = layout.points().map(|p| f(&p.position(&grid)[..d])).collect();
        Ok(Self { grid, mesh, values })
    }

    pub fn from_points(grid: GridSpec, mesh: MeshId, mut f: impl FnMut(&MeshPoint) -> f64) -> Result<Self> {
        let layout = MeshLayout::new(&grid, &mesh)?;
        let values = layout.points().map(|p| f(&p)).collect::<Vec<_>>();
        Ok(Self { grid, mesh, values })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn mesh(&self) -> &MeshId {
        &self.mesh
    }

    pub fn layout(&self) -> MeshLayout {
        MeshLayout::new(&self.grid, &self.mesh).expect("validated on construction")
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn value_at(&self, p: &MeshPoint) -> Option<f64> {
        self.layout().index_of(p).map(|i| self.values[i])
    }

    pub fn points(&self) -> Vec<MeshPoint> {
        self.layout().points().collect()
    }

    pub fn expect_mesh(&self, mesh: &MeshId) -> Result<()> {
        if self.mesh == *mesh {
            Ok(())
        } else {
            Err(Error::MeshMismatch { expected: format!("{}", mesh), found: format!("{}", self.mesh) })
        }
    }

    pub fn same_mesh(&self, other: &MeshFunction) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::MeshMismatch {
                expected: format!("grid N={} d={}", self.grid.n(), self.grid.dim()),
                found: format!("grid N={} d={}", other.grid.n(), other.grid.dim()),
            });
        }
        other.expect_mesh(&self.mesh)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> MeshFunction {
        MeshFunction { grid: self.grid, mesh: self.mesh, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_with(&self, other: &MeshFunction, f: impl Fn(f64, f64) -> f64) -> Result<MeshFunction> {
        self.same_mesh(other)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(MeshFunction { grid: self.grid, mesh: self.mesh, values })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Zero extension to a mesh containing this one.
    pub fn embed(&self, target: MeshId) -> Result<MeshFunction> {
        let src = self.layout();
        let dst = MeshLayout::new(&self.grid, &target)?;
        if !dst.contains_layout(&src) {
            return Err(Error::MeshMismatch { expected: format!("superset of {}", self.mesh), found: format!("{}", target) });
        }
        let mut values = alloc::vec![0.0; dst.len()];
        for (i, p) in src.points().enumerate() {
            let j = dst.index_of(&p).expect("subset checked");
            values[j] = self.values[i];
        }
        Ok(MeshFunction { grid: self.grid, mesh: target, values })
    }

    /// Restriction to a sub-mesh.
    pub fn restrict(&self, target: MeshId) -> Result<MeshFunction> {
        let src = self.layout();
        let dst = MeshLayout::new(&self.grid, &target)?;
        if !src.contains_layout(&dst) {
            return Err(Error::MeshMismatch { expected: format!("subset of {}", self.mesh), found: format!("{}", target) });
        }
        let values = dst
            .points()
            .map(|p| self.values[src.index_of(&p).expect("subset checked")])
            .collect();
        Ok(MeshFunction { grid: self.grid, mesh: target, values })
    }

    /// Dirichlet closure along `axis`: extend by zero to the two boundary
    /// layers. The axis must currently be `Interior`.
    pub fn close(&self, axis: usize) -> Result<MeshFunction> {
        self.grid.check_axis(axis)?;
        if self.mesh.axis(axis) != AxisKind::Interior {
            return Err(Error::NotShiftable { mesh: format!("{}", self.mesh), axis });
        }
        self.embed(self.mesh.with_axis(axis, AxisKind::Closed))
    }

    /// Dirichlet closure along every `Interior` axis.
    pub fn close_all(&self) -> Result<MeshFunction> {
        let mut target = self.mesh;
        for a in 0..self.grid.dim() {
            if target.axis(a) == AxisKind::Interior {
                target = target.with_axis(a, AxisKind::Closed);
            }
        }
        self.embed(target)
    }
}

/// Trace `t_r^i(u)` of a function on `W*_i`, living on `∂_i W`.
pub fn trace(u: &MeshFunction, axis: usize) -> Result<MeshFunction> {
    let grid = *u.grid();
    grid.check_axis(axis)?;
    u.expect_mesh(&MeshId::dual_star(grid.dim(), axis)?)?;
    let face = MeshId::boundary_face(grid.dim(), axis)?;
    let src = u.layout();
    let face_layout = MeshLayout::new(&grid, &face)?;
    let mut values = Vec::with_capacity(face_layout.len());
    for p in face_layout.points() {
        let v = match normal(&grid, axis, &p)? {
            1 => src.index_of(&p.shifted(axis, -1)).map(|i| u.values()[i]).unwrap_or(0.0),
            -1 => src.index_of(&p.shifted(axis, 1)).map(|i| u.values()[i]).unwrap_or(0.0),
            _ => 0.0,
        };
        values.push(v);
    }
    MeshFunction::new(grid, face, values)
}

/// For every point of the shifted mesh, indices of its `-h/2` and `+h/2`
/// neighbours along `axis` in `layout`.
pub(crate) fn shift_stencil(grid: &GridSpec, mesh: &MeshId, axis: usize) -> Result<(MeshId, Vec<[usize; 2]>)> {
    grid.check_axis(axis)?;
    let target_kind = mesh
        .axis(axis)
        .shifted()
        .ok_or_else(|| Error::NotShiftable { mesh: format!("{}", mesh), axis })?;
    let target = mesh.with_axis(axis, target_kind);
    let src = MeshLayout::new(grid, mesh)?;
    let dst = MeshLayout::new(grid, &target)?;
    let mut stencil = Vec::with_capacity(dst.len());
    for p in dst.points() {
        let lo = src.index_of(&p.shifted(axis, -1));
        let hi = src.index_of(&p.shifted(axis, 1));
        match (lo, hi) {
            (Some(lo), Some(hi)) => stencil.push([lo, hi]),
            _ => return Err(Error::NotShiftable { mesh: format!("{}", mesh), axis }),
        }
    }
    Ok((target, stencil))
}

/// Human-readable location of a point, used in error messages.
pub(crate) fn describe_position(x: &[f64]) -> String {
    let mut s = String::from("(");
    for (a, v) in x.iter().enumerate() {
        if a > 0 {
            s.push_str(", ");
        }
        s.push_str(&format!("{:.6}", v));
    }
    s.push(')');
    s
}
