//! Uniform Cartesian discretization of a convex ring and the node fields
//! living on it.
//!
//! Lattice nodes sit at integer multiples of `h`, so node coordinates are
//! exact whenever `h` is a power of two. Boundary treatment is nearest-node
//! Dirichlet: interior nodes are the lattice points strictly inside the ring,
//! `DirichletInner` nodes cover the closed inner set (or the single nearest
//! node to an inner point), and `DirichletOuter` nodes are every remaining
//! node 8-adjacent to an interior node.

use std::fmt;
use std::io::{BufRead, Write};
use std::sync::Arc;

use crate::geometry::{ConvexRing, Location, Vec2};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeClass {
    Interior,
    DirichletOuter,
    DirichletInner,
    Exterior,
}

impl NodeClass {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeClass::Interior => "interior",
            NodeClass::DirichletOuter => "dirichlet_outer",
            NodeClass::DirichletInner => "dirichlet_inner",
            NodeClass::Exterior => "exterior",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "interior" => NodeClass::Interior,
            "dirichlet_outer" => NodeClass::DirichletOuter,
            "dirichlet_inner" => NodeClass::DirichletInner,
            "exterior" => NodeClass::Exterior,
            _ => return None,
        })
    }

    pub fn is_dirichlet(self) -> bool {
        matches!(self, NodeClass::DirichletOuter | NodeClass::DirichletInner)
    }
}

impl fmt::Display for NodeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Collar widths (absolute lengths) excluded from every statistic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Collar {
    pub inner: f64,
    pub outer: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridOptions {
    /// `build_grid` requires `h * resolution_factor < separation`.
    pub resolution_factor: f64,
}

impl Default for GridOptions {
    fn default() -> Self {
        Self {
            resolution_factor: 4.0,
        }
    }
}

pub const NEIGHBORS_4: [(isize, isize); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];
pub const NEIGHBORS_8: [(isize, isize); 8] = [
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
];

#[derive(Debug, Clone)]
pub struct Grid {
    ring: ConvexRing,
    i0: i64,
    j0: i64,
    h: f64,
    nx: usize,
    ny: usize,
    class: Vec<NodeClass>,
}

pub fn build_grid(ring: &ConvexRing, h: f64) -> Result<Arc<Grid>> {
    build_grid_with(ring, h, GridOptions::default())
}

pub fn build_grid_with(ring: &ConvexRing, h: f64, opts: GridOptions) -> Result<Arc<Grid>> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Config(format!("grid spacing must be positive, got {h}")));
    }
    if h * opts.resolution_factor >= ring.separation() {
        return Err(Error::Unresolved(format!(
            "h = {h} is too coarse for separation {} (need h < separation/{})",
            ring.separation(),
            opts.resolution_factor
        )));
    }
    let (lo, hi) = ring.outer().bounding_box();
    let i0 = (lo.x / h).floor() as i64 - 1;
    let j0 = (lo.y / h).floor() as i64 - 1;
    let i1 = (hi.x / h).ceil() as i64 + 1;
    let j1 = (hi.y / h).ceil() as i64 + 1;
    let nx = (i1 - i0 + 1) as usize;
    let ny = (j1 - j0 + 1) as usize;

    let mut grid = Grid {
        ring: ring.clone(),
        i0,
        j0,
        h,
        nx,
        ny,
        class: vec![NodeClass::Exterior; nx * ny],
    };

    let tol = ring.default_tol();
    let mut loc = vec![Location::OutsideOuter; nx * ny];
    for idx in 0..nx * ny {
        let x = grid.pos(idx);
        loc[idx] = ring.contains_tol(x, tol);
        if loc[idx] == Location::InRing {
            grid.class[idx] = NodeClass::Interior;
        }
    }
    // Closed inner set: nodes in it or on its boundary.
    let mut any_inner = false;
    for idx in 0..nx * ny {
        let x = grid.pos(idx);
        let on_inner = match loc[idx] {
            Location::InInner => true,
            Location::OnBoundary => ring.dist_to_inner(x) <= tol,
            _ => false,
        };
        if on_inner {
            grid.class[idx] = NodeClass::DirichletInner;
            any_inner = true;
        }
    }
    if !any_inner {
        let anchor = ring.inner().anchor();
        let i = ((anchor.x / h).round() as i64 - i0) as usize;
        let j = ((anchor.y / h).round() as i64 - j0) as usize;
        let idx = grid.idx(i, j);
        grid.class[idx] = NodeClass::DirichletInner;
    }
    let mut outer = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let idx = grid.idx(i, j);
            if grid.class[idx] != NodeClass::Exterior {
                continue;
            }
            let touches_interior = NEIGHBORS_8.iter().any(|&(di, dj)| {
                grid.neighbor(i, j, di, dj)
                    .is_some_and(|n| grid.class[n] == NodeClass::Interior)
            });
            if touches_interior {
                outer.push(idx);
            }
        }
    }
    for idx in outer {
        grid.class[idx] = NodeClass::DirichletOuter;
    }
    grid.check_resolved()?;
    Ok(Arc::new(grid))
}

impl Grid {
    fn check_resolved(&self) -> Result<()> {
        if self.count(NodeClass::Interior) == 0 {
            return Err(Error::Unresolved("no interior nodes".into()));
        }
        for j in 0..self.ny {
            for i in 0..self.nx {
                if self.class_ij(i, j) != NodeClass::DirichletInner {
                    continue;
                }
                for (di, dj) in NEIGHBORS_8 {
                    if let Some(n) = self.neighbor(i, j, di, dj) {
                        if matches!(self.class[n], NodeClass::DirichletOuter | NodeClass::Exterior) {
                            return Err(Error::Unresolved(
                                "inner Dirichlet node touches the outer layer".into(),
                            ));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn ring(&self) -> &ConvexRing {
        &self.ring
    }
    pub fn h(&self) -> f64 {
        self.h
    }
    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
    pub fn origin(&self) -> Vec2 {
        Vec2::new(self.i0 as f64 * self.h, self.j0 as f64 * self.h)
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }
    #[inline]
    pub fn ij(&self, idx: usize) -> (usize, usize) {
        (idx % self.nx, idx / self.nx)
    }
    #[inline]
    pub fn pos_ij(&self, i: usize, j: usize) -> Vec2 {
        Vec2::new(
            (self.i0 + i as i64) as f64 * self.h,
            (self.j0 + j as i64) as f64 * self.h,
        )
    }
    #[inline]
    pub fn pos(&self, idx: usize) -> Vec2 {
        let (i, j) = self.ij(idx);
        self.pos_ij(i, j)
    }
    #[inline]
    pub fn class(&self, idx: usize) -> NodeClass {
        self.class[idx]
    }
    #[inline]
    pub fn class_ij(&self, i: usize, j: usize) -> NodeClass {
        self.class[self.idx(i, j)]
    }
    pub fn classes(&self) -> &[NodeClass] {
        &self.class
    }

    #[inline]
    pub fn neighbor(&self, i: usize, j: usize, di: isize, dj: isize) -> Option<usize> {
        let ii = i as isize + di;
        let jj = j as isize + dj;
        (ii >= 0 && jj >= 0 && (ii as usize) < self.nx && (jj as usize) < self.ny)
            .then(|| self.idx(ii as usize, jj as usize))
    }

    pub fn count(&self, c: NodeClass) -> usize {
        self.class.iter().filter(|k| **k == c).count()
    }

    pub fn nodes_of(&self, c: NodeClass) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&k| self.class[k] == c)
    }

    /// Node nearest to `x` (clamped to the lattice).
    pub fn nearest_node(&self, x: Vec2) -> usize {
        let i = ((x.x / self.h).round() as i64 - self.i0).clamp(0, self.nx as i64 - 1) as usize;
        let j = ((x.y / self.h).round() as i64 - self.j0).clamp(0, self.ny as i64 - 1) as usize;
        self.idx(i, j)
    }

    /// Continuous lattice coordinates of `x`.
    #[inline]
    pub fn lattice_coords(&self, x: Vec2) -> (f64, f64) {
        (x.x / self.h - self.i0 as f64, x.y / self.h - self.j0 as f64)
    }

    pub fn default_collar(&self) -> Collar {
        Collar {
            inner: 4.0 * self.h,
            outer: 2.0 * self.h,
        }
    }

    pub fn mask(&self, collar: Collar) -> Mask {
        let keep = (0..self.len())
            .map(|k| self.class[k] == NodeClass::Interior && point_unmasked(&self.ring, collar, self.pos(k)))
            .collect();
        Mask { keep, collar }
    }

    pub fn default_mask(&self) -> Mask {
        self.mask(self.default_collar())
    }
}

fn point_unmasked(ring: &ConvexRing, collar: Collar, x: Vec2) -> bool {
    ring.contains(x) == Location::InRing
        && ring.dist_to_inner(x) > collar.inner
        && ring.dist_to_outer(x).is_ok_and(|d| d > collar.outer)
}

/// Nodes (and points) away from both Dirichlet collars.
#[derive(Debug, Clone)]
pub struct Mask {
    keep: Vec<bool>,
    collar: Collar,
}

impl Mask {
    #[inline]
    pub fn is_unmasked(&self, idx: usize) -> bool {
        self.keep[idx]
    }
    pub fn collar(&self) -> Collar {
        self.collar
    }
    pub fn nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.keep.iter().enumerate().filter(|(_, k)| **k).map(|(i, _)| i)
    }
    pub fn count(&self) -> usize {
        self.keep.iter().filter(|k| **k).count()
    }
    pub fn contains_point(&self, ring: &ConvexRing, x: Vec2) -> bool {
        point_unmasked(ring, self.collar, x)
    }
    /// Radius of the largest ball at `x` inside the unmasked region (negative when masked).
    pub fn room(&self, ring: &ConvexRing, x: Vec2) -> f64 {
        let outer = ring.dist_to_outer(x).unwrap_or(f64::NEG_INFINITY) - self.collar.outer;
        outer.min(ring.dist_to_inner(x) - self.collar.inner)
    }

    /// `B(z, r)` lies inside the unmasked region.
    pub fn contains_ball(&self, ring: &ConvexRing, z: Vec2, r: f64) -> bool {
        ring.contains(z) == Location::InRing
            && ring.dist_to_inner(z) - r > self.collar.inner
            && ring.dist_to_outer(z).is_ok_and(|d| d - r > self.collar.outer)
    }
}

/// Symmetric 2x2 matrix.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Sym2 {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl Sym2 {
    pub fn trace(&self) -> f64 {
        self.xx + self.yy
    }
    pub fn det(&self) -> f64 {
        self.xx * self.yy - self.xy * self.xy
    }
    pub fn frobenius2(&self) -> f64 {
        self.xx * self.xx + 2.0 * self.xy * self.xy + self.yy * self.yy
    }
    pub fn frobenius(&self) -> f64 {
        self.frobenius2().sqrt()
    }
    pub fn apply(&self, v: Vec2) -> Vec2 {
        Vec2::new(self.xx * v.x + self.xy * v.y, self.xy * v.x + self.yy * v.y)
    }
    pub fn quad(&self, v: Vec2) -> f64 {
        self.apply(v).dot(v)
    }
    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let m = 0.5 * self.trace();
        let d = (0.25 * (self.xx - self.yy).powi(2) + self.xy * self.xy).sqrt();
        (m - d, m + d)
    }
}

/// Node values on a grid with a per-node definedness flag.
#[derive(Debug, Clone)]
pub struct NodeField<T> {
    grid: Arc<Grid>,
    values: Vec<T>,
    defined: Vec<bool>,
}

pub type ScalarField = NodeField<f64>;
pub type VectorField = NodeField<Vec2>;
pub type MatrixField = NodeField<Sym2>;

impl<T: Copy + Default> NodeField<T> {
    pub fn new(grid: Arc<Grid>, values: Vec<T>, defined: Vec<bool>) -> Self {
        assert_eq!(values.len(), grid.len());
        assert_eq!(defined.len(), grid.len());
        Self { grid, values, defined }
    }

    pub fn undefined(grid: Arc<Grid>) -> Self {
        let n = grid.len();
        Self::new(grid, vec![T::default(); n], vec![false; n])
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }
    pub fn values(&self) -> &[T] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }
    #[inline]
    pub fn is_defined(&self, idx: usize) -> bool {
        self.defined[idx]
    }
    #[inline]
    pub fn get(&self, idx: usize) -> Option<T> {
        self.defined[idx].then(|| self.values[idx])
    }
    #[inline]
    pub fn value(&self, idx: usize) -> T {
        self.values[idx]
    }
    pub fn set(&mut self, idx: usize, v: T) {
        self.values[idx] = v;
        self.defined[idx] = true;
    }
    pub fn unset(&mut self, idx: usize) {
        self.values[idx] = T::default();
        self.defined[idx] = false;
    }
    pub fn defined_count(&self) -> usize {
        self.defined.iter().filter(|d| **d).count()
    }
    pub fn defined_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.defined.iter().enumerate().filter(|(_, d)| **d).map(|(k, _)| k)
    }

    /// Applies `f` at every defined node.
    pub fn map<U: Copy + Default>(&self, f: impl Fn(T) -> U) -> NodeField<U> {
        let values = self
            .values
            .iter()
            .zip(&self.defined)
            .map(|(v, d)| if *d { f(*v) } else { U::default() })
            .collect();
        NodeField::new(self.grid.clone(), values, self.defined.clone())
    }

    /// Bilinear weights of the cell containing `x`; errors if any corner is undefined.
    fn cell(&self, x: Vec2) -> Result<([usize; 4], [f64; 4])> {
        let g = &*self.grid;
        let (fx, fy) = g.lattice_coords(x);
        let undefined = || Error::Undefined { x: x.x, y: x.y };
        if !(fx >= 0.0 && fy >= 0.0 && fx <= (g.nx - 1) as f64 && fy <= (g.ny - 1) as f64) {
            return Err(undefined());
        }
        let i = (fx.floor() as usize).min(g.nx - 2);
        let j = (fy.floor() as usize).min(g.ny - 2);
        let tx = fx - i as f64;
        let ty = fy - j as f64;
        let c = [g.idx(i, j), g.idx(i + 1, j), g.idx(i, j + 1), g.idx(i + 1, j + 1)];
        if c.iter().any(|&k| !self.defined[k]) {
            return Err(undefined());
        }
        let w = [(1.0 - tx) * (1.0 - ty), tx * (1.0 - ty), (1.0 - tx) * ty, tx * ty];
        Ok((c, w))
    }
}

impl ScalarField {
    /// `f` sampled at every non-exterior node.
    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(Vec2) -> f64) -> Self {
        let n = grid.len();
        let mut values = vec![0.0; n];
        let mut defined = vec![false; n];
        for k in 0..n {
            if grid.class(k) != NodeClass::Exterior {
                values[k] = f(grid.pos(k));
                defined[k] = true;
            }
        }
        Self::new(grid, values, defined)
    }

    /// `f` at interior nodes with the potential's exact Dirichlet data (0 on the
    /// outer layer, 1 on the inner set).
    pub fn potential_from_fn(grid: Arc<Grid>, f: impl Fn(Vec2) -> f64) -> Self {
        let mut field = Self::from_fn(grid.clone(), f);
        field.apply_dirichlet();
        field
    }

    pub fn apply_dirichlet(&mut self) {
        for k in 0..self.grid.len() {
            match self.grid.class(k) {
                NodeClass::DirichletOuter => self.set(k, 0.0),
                NodeClass::DirichletInner => self.set(k, 1.0),
                _ => {}
            }
        }
    }

    pub fn interpolate(&self, x: Vec2) -> Result<f64> {
        let (c, w) = self.cell(x)?;
        Ok(w[0] * self.values[c[0]] + w[1] * self.values[c[1]] + w[2] * self.values[c[2]] + w[3] * self.values[c[3]])
    }

    /// Largest |a - b| over nodes defined in both fields, restricted by `filter`.
    pub fn sup_diff(&self, other: &ScalarField, filter: impl Fn(usize) -> bool) -> f64 {
        (0..self.grid.len())
            .filter(|&k| self.defined[k] && other.defined[k] && filter(k))
            .map(|k| (self.values[k] - other.values[k]).abs())
            .fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "i,j,x,y,class,value")?;
        let g = &*self.grid;
        for j in 0..g.ny {
            for i in 0..g.nx {
                let k = g.idx(i, j);
                let p = g.pos(k);
                let v = if self.defined[k] { self.values[k] } else { f64::NAN };
                writeln!(
                    w,
                    "{i},{j},{},{},{},{}",
                    fmt17(p.x),
                    fmt17(p.y),
                    g.class(k),
                    fmt17(v)
                )?;
            }
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("write to memory");
        String::from_utf8(buf).expect("ascii csv")
    }

    /// Reads a dump produced by [`ScalarField::write_csv`] for the same grid.
    pub fn read_csv<R: BufRead>(grid: Arc<Grid>, r: R) -> Result<Self> {
        let mut field = Self::undefined(grid.clone());
        let mut lines = r.lines();
        let header = lines.next().transpose()?.unwrap_or_default();
        if header.trim() != "i,j,x,y,class,value" {
            return Err(Error::Parse(format!("unexpected header {header:?}")));
        }
        let mut seen = 0usize;
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let bad = |what: &str| Error::Parse(format!("line {}: {what}", lineno + 2));
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 6 {
                return Err(bad("expected 6 columns"));
            }
            let i: usize = cols[0].parse().map_err(|_| bad("bad i"))?;
            let j: usize = cols[1].parse().map_err(|_| bad("bad j"))?;
            if i >= grid.nx || j >= grid.ny {
                return Err(bad("node outside grid"));
            }
            let class = NodeClass::parse(cols[4]).ok_or_else(|| bad("bad class"))?;
            if class != grid.class_ij(i, j) {
                return Err(bad("class does not match grid"));
            }
            let v: f64 = cols[5].parse().map_err(|_| bad("bad value"))?;
            if !v.is_nan() {
                field.set(grid.idx(i, j), v);
            }
            seen += 1;
        }
        if seen != grid.len() {
            return Err(Error::Parse(format!("expected {} rows, got {seen}", grid.len())));
        }
        Ok(field)
    }
}

impl VectorField {
    pub fn interpolate(&self, x: Vec2) -> Result<Vec2> {
        let (c, w) = self.cell(x)?;
        let mut out = Vec2::ZERO;
        for q in 0..4 {
            out = out + self.values[c[q]] * w[q];
        }
        Ok(out)
    }

    pub fn component(&self, axis: usize) -> ScalarField {
        self.map(|v| if axis == 0 { v.x } else { v.y })
    }

    pub fn norm(&self) -> ScalarField {
        self.map(|v| v.norm())
    }
}

/// 17 significant digits in scientific notation (bit-exact round trip).
pub fn fmt17(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v:.16e}")
    }
}

/// Central differences at interior nodes whose four neighbours are defined.
pub fn gradient(field: &ScalarField) -> VectorField {
    let g = field.grid().clone();
    let mut out = VectorField::undefined(g.clone());
    let inv2h = 1.0 / (2.0 * g.h());
    for j in 1..g.ny() - 1 {
        for i in 1..g.nx() - 1 {
            let k = g.idx(i, j);
            if g.class(k) != NodeClass::Interior || !field.is_defined(k) {
                continue;
            }
            let (e, w, n, s) = (k + 1, k - 1, k + g.nx(), k - g.nx());
            if [e, w, n, s].iter().all(|&q| field.is_defined(q)) {
                let v = field.values();
                out.set(k, Vec2::new((v[e] - v[w]) * inv2h, (v[n] - v[s]) * inv2h));
            }
        }
    }
    out
}

/// Second differences; the cross term uses the four-corner stencil.
pub fn hessian(field: &ScalarField) -> MatrixField {
    let g = field.grid().clone();
    let mut out = MatrixField::undefined(g.clone());
    let h2 = g.h() * g.h();
    let nx = g.nx();
    for j in 1..g.ny() - 1 {
        for i in 1..nx - 1 {
            let k = g.idx(i, j);
            if g.class(k) != NodeClass::Interior || !field.is_defined(k) {
                continue;
            }
            let nb = [k + 1, k - 1, k + nx, k - nx, k + nx + 1, k + nx - 1, k - nx + 1, k - nx - 1];
            if !nb.iter().all(|&q| field.is_defined(q)) {
                continue;
            }
            let v = field.values();
            let c = v[k];
            out.set(
                k,
                Sym2 {
                    xx: (v[k + 1] - 2.0 * c + v[k - 1]) / h2,
                    yy: (v[k + nx] - 2.0 * c + v[k - nx]) / h2,
                    xy: (v[k + nx + 1] - v[k - nx + 1] - v[k + nx - 1] + v[k - nx - 1]) / (4.0 * h2),
                },
            );
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ConvexShape;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn unit_square_center() -> ConvexRing {
        ConvexRing::new(
            ConvexShape::rect(0.0, 0.0, 1.0, 1.0).unwrap(),
            ConvexShape::point(Vec2::new(0.5, 0.5)),
        )
        .unwrap()
    }

    fn disk_point() -> ConvexRing {
        ConvexRing::new(
            ConvexShape::disk(Vec2::ZERO, 1.0).unwrap(),
            ConvexShape::point(Vec2::ZERO),
        )
        .unwrap()
    }

    #[test]
    fn square_lattice_enumeration() {
        // 5x5 closed-square lattice plus one exterior layer.
        let grid = build_grid_with(&unit_square_center(), 0.25, GridOptions { resolution_factor: 1.0 }).unwrap();
        assert_eq!((grid.nx(), grid.ny()), (7, 7));
        assert_eq!(grid.count(NodeClass::DirichletOuter), 16);
        assert_eq!(grid.count(NodeClass::DirichletInner), 1);
        assert_eq!(grid.count(NodeClass::Interior), 8);
        assert_eq!(grid.count(NodeClass::Exterior), 24);
        let c = grid.nearest_node(Vec2::new(0.5, 0.5));
        assert_eq!(grid.class(c), NodeClass::DirichletInner);
        // Default resolution policy rejects this spacing.
        assert!(matches!(build_grid(&unit_square_center(), 0.25), Err(Error::Unresolved(_))));
    }

    #[test]
    fn coarse_disk_is_rejected() {
        assert!(matches!(build_grid(&disk_point(), 0.5), Err(Error::Unresolved(_))));
    }

    #[test]
    fn inner_disk_nodes_are_pinned() {
        let ring = ConvexRing::new(
            ConvexShape::disk(Vec2::ZERO, 1.0).unwrap(),
            ConvexShape::disk(Vec2::ZERO, 0.25).unwrap(),
        )
        .unwrap();
        let grid = build_grid(&ring, 0.05).unwrap();
        for k in 0..grid.len() {
            if grid.pos(k).norm() < 0.25 - 1e-12 {
                assert_eq!(grid.class(k), NodeClass::DirichletInner);
            }
        }
    }

    #[test]
    fn classification_invariants() {
        let grid = build_grid(&disk_point(), 1.0 / 32.0).unwrap();
        assert_eq!(grid.count(NodeClass::DirichletInner), 1);
        for j in 1..grid.ny() - 1 {
            for i in 1..grid.nx() - 1 {
                if grid.class_ij(i, j) != NodeClass::Interior {
                    continue;
                }
                for (di, dj) in NEIGHBORS_8 {
                    let n = grid.neighbor(i, j, di, dj).unwrap();
                    assert_ne!(grid.class(n), NodeClass::Exterior);
                }
            }
        }
        // First and last rows/columns are exterior.
        for i in 0..grid.nx() {
            assert_eq!(grid.class_ij(i, 0), NodeClass::Exterior);
            assert_eq!(grid.class_ij(i, grid.ny() - 1), NodeClass::Exterior);
        }
    }

    #[test]
    fn interpolation_reproduces_affine_and_nodes() {
        let grid = build_grid(&unit_square_center(), 1.0 / 16.0).unwrap();
        let f = ScalarField::from_fn(grid.clone(), |p| p.x);
        assert_abs_diff_eq!(f.interpolate(Vec2::new(0.3, 0.7)).unwrap(), 0.3, epsilon = 1e-15);
        let one = ScalarField::from_fn(grid.clone(), |_| 1.0);
        assert_abs_diff_eq!(one.interpolate(Vec2::new(0.41, 0.13)).unwrap(), 1.0, epsilon = 1e-15);
        let wavy = ScalarField::from_fn(grid.clone(), |p| (7.0 * p.x).sin() * p.y.exp());
        for k in wavy.defined_nodes() {
            let (i, j) = grid.ij(k);
            if i + 1 < grid.nx() && j + 1 < grid.ny() && wavy.is_defined(k + 1) && wavy.is_defined(k + grid.nx()) && wavy.is_defined(k + grid.nx() + 1) {
                assert_eq!(wavy.interpolate(grid.pos(k)).unwrap(), wavy.value(k));
            }
        }
        // Cells touching exterior nodes are undefined.
        assert!(f.interpolate(Vec2::new(-0.1, 0.5)).is_err());
    }

    #[test]
    fn cone_interpolation_and_derivatives() {
        let grid = build_grid(&disk_point(), 1.0 / 128.0).unwrap();
        let cone = ScalarField::from_fn(grid.clone(), |p| 1.0 - p.norm());
        assert_abs_diff_eq!(cone.interpolate(Vec2::new(0.5, 0.0)).unwrap(), 0.5, epsilon = 1e-3);
        let k = grid.nearest_node(Vec2::new(0.5, 0.0));
        let gr = gradient(&cone).get(k).unwrap();
        assert!((gr - Vec2::new(-1.0, 0.0)).norm() < 5e-3);
        let hs = hessian(&cone).get(k).unwrap();
        let (lo, hi) = hs.eigenvalues();
        assert!((lo + 2.0).abs() < 0.1 && hi.abs() < 0.1, "eigenvalues {lo} {hi}");
    }

    #[test]
    fn exact_on_polynomials() {
        let grid = build_grid(&unit_square_center(), 1.0 / 16.0).unwrap();
        let lin = ScalarField::from_fn(grid.clone(), |p| p.x);
        for k in gradient(&lin).defined_nodes() {
            let v = gradient(&lin).value(k);
            assert_abs_diff_eq!(v.x, 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(v.y, 0.0, epsilon = 1e-12);
        }
        let sq = ScalarField::from_fn(grid.clone(), |p| p.x * p.x);
        let gs = gradient(&sq);
        for k in gs.defined_nodes() {
            assert_abs_diff_eq!(gs.value(k).x, 2.0 * grid.pos(k).x, epsilon = 1e-12);
        }
        let hx = hessian(&sq);
        let xy = hessian(&ScalarField::from_fn(grid.clone(), |p| p.x * p.y));
        assert!(hx.defined_count() > 0);
        for k in hx.defined_nodes() {
            let m = hx.value(k);
            assert_abs_diff_eq!(m.xx, 2.0, epsilon = 1e-9);
            assert_abs_diff_eq!(m.yy, 0.0, epsilon = 1e-9);
            assert_abs_diff_eq!(m.xy, 0.0, epsilon = 1e-9);
            assert_abs_diff_eq!(xy.value(k).xy, 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn gradient_error_roughly_quarters_under_refinement() {
        // Exclusion radius fixed in absolute terms so the comparison is on the same set.
        let r0 = 4.0 / 32.0;
        let err = |h: f64| {
            let grid = build_grid(&disk_point(), h).unwrap();
            let cone = ScalarField::from_fn(grid.clone(), |p| 1.0 - p.norm());
            let gr = gradient(&cone);
            gr.defined_nodes()
                .filter(|&k| grid.pos(k).norm() > r0)
                .map(|k| (gr.value(k) + grid.pos(k).normalized()).norm())
                .fold(0.0, f64::max)
        };
        let ratio = err(1.0 / 64.0) / err(1.0 / 32.0);
        assert!((0.2..=0.8).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let grid = build_grid(&disk_point(), 1.0 / 16.0).unwrap();
        let f = ScalarField::from_fn(grid.clone(), |p| (p.x * 3.1).sin() / 7.0 + p.y.powi(3) * 1e-7);
        let text = f.to_csv();
        assert!(text.starts_with("i,j,x,y,class,value\n"));
        let g = ScalarField::read_csv(grid.clone(), text.as_bytes()).unwrap();
        for k in 0..grid.len() {
            assert_eq!(f.is_defined(k), g.is_defined(k));
            if f.is_defined(k) {
                assert_eq!(f.value(k).to_bits(), g.value(k).to_bits());
            }
        }
    }

    #[test]
    fn mask_excludes_collars() {
        let grid = build_grid(&disk_point(), 1.0 / 32.0).unwrap();
        let mask = grid.default_mask();
        for k in mask.nodes() {
            let r = grid.pos(k).norm();
            assert!(r > 4.0 / 32.0 && r < 1.0 - 2.0 / 32.0);
        }
        assert!(mask.count() > 0);
    }

    proptest! {
        #[test]
        fn fmt17_round_trips(v in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
            let s = fmt17(v);
            let back: f64 = s.parse().unwrap();
            prop_assert_eq!(back.to_bits(), v.to_bits());
        }
    }
}
