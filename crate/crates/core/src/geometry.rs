//! Planar convex ring domains `outer \ closure(inner)`.
//!
//! Shapes are disks, strictly convex polygons (stored counter-clockwise) and,
//! for the inner set only, a single point. Every metric query has a closed
//! form, and all tolerances scale with the outer diameter.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::report::CheckReport;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
    #[inline]
    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }
    #[inline]
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }
    #[inline]
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }
    #[inline]
    pub fn norm2(self) -> f64 {
        self.dot(self)
    }
    #[inline]
    pub fn dist(self, o: Vec2) -> f64 {
        (self - o).norm()
    }
    /// Counter-clockwise perpendicular.
    #[inline]
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }
    pub fn normalized(self) -> Vec2 {
        let n = self.norm();
        Vec2::new(self.x / n, self.y / n)
    }
    pub fn from_angle(theta: f64) -> Vec2 {
        Vec2::new(theta.cos(), theta.sin())
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    #[inline]
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}
impl Sub for Vec2 {
    type Output = Vec2;
    #[inline]
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}
impl Mul<f64> for Vec2 {
    type Output = Vec2;
    #[inline]
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}
impl Neg for Vec2 {
    type Output = Vec2;
    #[inline]
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}
impl From<[f64; 2]> for Vec2 {
    fn from(a: [f64; 2]) -> Self {
        Vec2::new(a[0], a[1])
    }
}
impl From<Vec2> for [f64; 2] {
    fn from(v: Vec2) -> Self {
        [v.x, v.y]
    }
}

/// Distance from `p` to the segment `[a, b]`.
pub fn segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let len2 = ab.norm2();
    let t = if len2 > 0.0 {
        ((p - a).dot(ab) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    p.dist(a + ab * t)
}

/// Strictly convex polygon, counter-clockwise.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexPolygon {
    vertices: Vec<Vec2>,
}

impl ConvexPolygon {
    /// Accepts either orientation; rejects repeated vertices, collinear or reflex corners.
    pub fn new(vertices: Vec<Vec2>) -> Result<Self> {
        if let Some(msg) = polygon_defect(&vertices) {
            return Err(Error::InvalidShape(msg));
        }
        let mut vertices = vertices;
        if signed_area(&vertices) < 0.0 {
            vertices.reverse();
        }
        Ok(Self { vertices })
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn edges(&self) -> impl Iterator<Item = (Vec2, Vec2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// Signed distance to the boundary lines; negative inside. Exact inside,
    /// a lower bound of the true distance outside (sign always correct).
    pub fn line_signed_distance(&self, p: Vec2) -> f64 {
        self.edges()
            .map(|(a, b)| {
                let e = b - a;
                let outward = Vec2::new(e.y, -e.x) * (1.0 / e.norm());
                (p - a).dot(outward)
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn boundary_distance(&self, p: Vec2) -> f64 {
        self.edges()
            .map(|(a, b)| segment_distance(p, a, b))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }
}

/// Shoelace signed area (positive for counter-clockwise).
pub fn signed_area(pts: &[Vec2]) -> f64 {
    let n = pts.len();
    if n < 3 {
        return 0.0;
    }
    0.5 * (0..n).map(|i| pts[i].cross(pts[(i + 1) % n])).sum::<f64>()
}

fn polygon_defect(v: &[Vec2]) -> Option<String> {
    let n = v.len();
    if n < 3 {
        return Some(format!("polygon needs at least 3 vertices, got {n}"));
    }
    if v.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
        return Some("non-finite polygon vertex".into());
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if v[i] == v[j] {
                return Some(format!("repeated vertex {i} and {j}"));
            }
        }
    }
    let scale = v.iter().map(|p| p.norm()).fold(1.0, f64::max);
    let mut sign = 0.0;
    for i in 0..n {
        let a = v[i];
        let b = v[(i + 1) % n];
        let c = v[(i + 2) % n];
        let cr = (b - a).cross(c - b);
        if cr.abs() <= 1e-14 * scale * scale {
            return Some(format!("collinear corner at vertex {}", (i + 1) % n));
        }
        if sign == 0.0 {
            sign = cr.signum();
        } else if cr.signum() != sign {
            return Some(format!("reflex corner at vertex {}", (i + 1) % n));
        }
    }
    // Consistent turning can still wind more than once.
    let total: f64 = (0..n)
        .map(|i| {
            let a = v[(i + 1) % n] - v[i];
            let b = v[(i + 2) % n] - v[(i + 1) % n];
            a.cross(b).atan2(a.dot(b))
        })
        .sum();
    if (total.abs() - std::f64::consts::TAU).abs() > 1e-6 {
        return Some("polygon winds more than once".into());
    }
    None
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConvexShape {
    Disk { center: Vec2, radius: f64 },
    Polygon(ConvexPolygon),
    Point(Vec2),
}

impl ConvexShape {
    pub fn disk(center: Vec2, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidShape(format!("disk radius must be > 0, got {radius}")));
        }
        Ok(ConvexShape::Disk { center, radius })
    }

    pub fn polygon(vertices: Vec<Vec2>) -> Result<Self> {
        Ok(ConvexShape::Polygon(ConvexPolygon::new(vertices)?))
    }

    /// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
    pub fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self> {
        Self::polygon(vec![
            Vec2::new(x0, y0),
            Vec2::new(x1, y0),
            Vec2::new(x1, y1),
            Vec2::new(x0, y1),
        ])
    }

    pub fn point(p: Vec2) -> Self {
        ConvexShape::Point(p)
    }

    pub fn is_point(&self) -> bool {
        matches!(self, ConvexShape::Point(_))
    }

    /// Signed distance (negative inside). For polygons the outside value is a
    /// lower bound; for a point it is the distance.
    pub fn signed_distance(&self, p: Vec2) -> f64 {
        match self {
            ConvexShape::Disk { center, radius } => p.dist(*center) - radius,
            ConvexShape::Polygon(poly) => poly.line_signed_distance(p),
            ConvexShape::Point(q) => p.dist(*q),
        }
    }

    /// Euclidean distance from `p` to the closed set (0 inside).
    pub fn distance(&self, p: Vec2) -> f64 {
        match self {
            ConvexShape::Disk { center, radius } => (p.dist(*center) - radius).max(0.0),
            ConvexShape::Polygon(poly) => {
                if poly.line_signed_distance(p) <= 0.0 {
                    0.0
                } else {
                    poly.boundary_distance(p)
                }
            }
            ConvexShape::Point(q) => p.dist(*q),
        }
    }

    pub fn bounding_box(&self) -> (Vec2, Vec2) {
        match self {
            ConvexShape::Disk { center, radius } => (
                Vec2::new(center.x - radius, center.y - radius),
                Vec2::new(center.x + radius, center.y + radius),
            ),
            ConvexShape::Polygon(poly) => {
                let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
                let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
                for v in poly.vertices() {
                    lo = Vec2::new(lo.x.min(v.x), lo.y.min(v.y));
                    hi = Vec2::new(hi.x.max(v.x), hi.y.max(v.y));
                }
                (lo, hi)
            }
            ConvexShape::Point(p) => (*p, *p),
        }
    }

    /// A point guaranteed to lie in the (closed) shape.
    pub fn anchor(&self) -> Vec2 {
        match self {
            ConvexShape::Disk { center, .. } => *center,
            ConvexShape::Polygon(poly) => {
                let v = poly.vertices();
                v.iter().fold(Vec2::ZERO, |a, b| a + *b) * (1.0 / v.len() as f64)
            }
            ConvexShape::Point(p) => *p,
        }
    }

    pub fn to_spec(&self) -> ShapeSpec {
        match self {
            ConvexShape::Disk { center, radius } => ShapeSpec::Disk {
                center: (*center).into(),
                radius: *radius,
            },
            ConvexShape::Polygon(poly) => {
                ShapeSpec::Polygon(poly.vertices().iter().map(|v| (*v).into()).collect())
            }
            ConvexShape::Point(p) => ShapeSpec::Point((*p).into()),
        }
    }
}

/// Maximum pairwise distance of a disk or polygon.
pub fn diameter(shape: &ConvexShape) -> Result<f64> {
    match shape {
        ConvexShape::Disk { radius, .. } => Ok(2.0 * radius),
        ConvexShape::Polygon(poly) => {
            let v = poly.vertices();
            let mut d: f64 = 0.0;
            for i in 0..v.len() {
                for j in (i + 1)..v.len() {
                    d = d.max(v[i].dist(v[j]));
                }
            }
            Ok(d)
        }
        ConvexShape::Point(_) => Err(Error::InvalidShape("a point has no diameter".into())),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    InRing,
    InInner,
    OutsideOuter,
    OnBoundary,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayHit {
    pub length: f64,
    pub hit_point: Vec2,
}

/// Validated convex ring.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexRing {
    outer: ConvexShape,
    inner: ConvexShape,
    diam: f64,
    separation: f64,
}

impl ConvexRing {
    pub fn new(outer: ConvexShape, inner: ConvexShape) -> Result<Self> {
        let report = validate_shapes(&outer, &inner);
        if !report.pass {
            let failed: Vec<String> = report
                .parts
                .iter()
                .filter(|p| !p.pass)
                .map(|p| p.note.clone().unwrap_or_else(|| p.name.clone()))
                .collect();
            return Err(Error::InvalidRing(failed.join("; ")));
        }
        let diam = diameter(&outer)?;
        let separation = separation(&outer, &inner);
        Ok(Self {
            outer,
            inner,
            diam,
            separation,
        })
    }

    pub fn outer(&self) -> &ConvexShape {
        &self.outer
    }
    pub fn inner(&self) -> &ConvexShape {
        &self.inner
    }
    pub fn diam(&self) -> f64 {
        self.diam
    }
    /// Minimum distance between the inner set and the outer boundary.
    pub fn separation(&self) -> f64 {
        self.separation
    }
    pub fn default_tol(&self) -> f64 {
        1e-12 * self.diam
    }
    pub fn inner_is_point(&self) -> bool {
        self.inner.is_point()
    }

    pub fn contains(&self, x: Vec2) -> Location {
        self.contains_tol(x, self.default_tol())
    }

    pub fn contains_tol(&self, x: Vec2, tol: f64) -> Location {
        let so = self.outer.signed_distance(x);
        if so > tol {
            return Location::OutsideOuter;
        }
        if so >= -tol {
            return Location::OnBoundary;
        }
        let si = self.inner.signed_distance(x);
        match self.inner {
            ConvexShape::Point(_) => {
                if si <= tol {
                    Location::InInner
                } else {
                    Location::InRing
                }
            }
            _ => {
                if si < -tol {
                    Location::InInner
                } else if si <= tol {
                    Location::OnBoundary
                } else {
                    Location::InRing
                }
            }
        }
    }

    pub fn dist_to_outer(&self, x: Vec2) -> Result<f64> {
        let so = self.outer.signed_distance(x);
        if so > self.default_tol() {
            return Err(Error::OutsideDomain { x: x.x, y: x.y });
        }
        Ok(match &self.outer {
            ConvexShape::Disk { center, radius } => (radius - x.dist(*center)).max(0.0),
            ConvexShape::Polygon(poly) => poly.boundary_distance(x),
            ConvexShape::Point(_) => unreachable!("validated ring has no point outer"),
        })
    }

    /// Distance to the closed inner set (0 inside it).
    pub fn dist_to_inner(&self, x: Vec2) -> f64 {
        self.inner.distance(x)
    }

    /// Distance to the ring boundary `∂Ω = ∂Ω₀ ∪ ∂Ω₁` from a point of the ring.
    pub fn dist_to_boundary(&self, x: Vec2) -> Result<f64> {
        Ok(self.dist_to_outer(x)?.min(self.dist_to_inner(x)))
    }

    pub fn ray_to_outer(&self, x: Vec2, nu: Vec2) -> Result<RayHit> {
        let n = nu.norm();
        if (n - 1.0).abs() > 1e-12 {
            return Err(Error::NotUnit(n));
        }
        if self.outer.signed_distance(x) >= 0.0 {
            return Err(Error::OutsideDomain { x: x.x, y: x.y });
        }
        let length = match &self.outer {
            ConvexShape::Disk { center, radius } => {
                let d = x - *center;
                let b = nu.dot(d);
                let c = d.norm2() - radius * radius;
                -b + (b * b - c).sqrt()
            }
            ConvexShape::Polygon(poly) => poly
                .edges()
                .filter_map(|(a, b)| {
                    let e = b - a;
                    let outward = Vec2::new(e.y, -e.x) * (1.0 / e.norm());
                    let rate = nu.dot(outward);
                    (rate > 0.0).then(|| (a - x).dot(outward) / rate)
                })
                .fold(f64::INFINITY, f64::min),
            ConvexShape::Point(_) => unreachable!("validated ring has no point outer"),
        };
        Ok(RayHit {
            length,
            hit_point: x + nu * length,
        })
    }

    pub fn validate(&self) -> CheckReport {
        validate_shapes(&self.outer, &self.inner)
    }

    pub fn to_spec(&self) -> RingSpec {
        RingSpec {
            outer: self.outer.to_spec(),
            inner: self.inner.to_spec(),
        }
    }
}

/// Minimum of the outer boundary distance over the inner set (negative if
/// the inner set pokes out).
fn separation(outer: &ConvexShape, inner: &ConvexShape) -> f64 {
    // Inside the outer shape the boundary distance equals minus the signed
    // line distance, which is concave; its minimum over a convex inner set is
    // attained at a vertex (polygon) or expressible in closed form (disk).
    let depth = |p: Vec2| -outer.signed_distance(p);
    match inner {
        ConvexShape::Point(p) => depth(*p),
        ConvexShape::Disk { center, radius } => depth(*center) - radius,
        ConvexShape::Polygon(poly) => poly
            .vertices()
            .iter()
            .map(|v| depth(*v))
            .fold(f64::INFINITY, f64::min),
    }
}

fn shape_report(label: &str, shape: &ConvexShape) -> CheckReport {
    match shape {
        ConvexShape::Polygon(poly) => {
            let defect = polygon_defect(poly.vertices());
            let mut r = CheckReport::condition(format!("{label}_convex"), defect.is_none(), 0.0);
            if let Some(d) = defect {
                r = r.with_note(format!("{label}: {d}"));
            }
            r
        }
        ConvexShape::Disk { radius, .. } => {
            let ok = *radius > 0.0 && radius.is_finite();
            let r = CheckReport::condition(format!("{label}_convex"), ok, *radius);
            if ok {
                r
            } else {
                r.with_note(format!("{label}: disk radius must be positive"))
            }
        }
        ConvexShape::Point(_) => CheckReport::condition(format!("{label}_convex"), true, 0.0),
    }
}

/// Reports convexity of both shapes, compact containment with the measured
/// separation, and nonemptiness. Never errors.
pub fn validate_shapes(outer: &ConvexShape, inner: &ConvexShape) -> CheckReport {
    let mut parts = vec![shape_report("outer", outer), shape_report("inner", inner)];
    let outer_kind = if outer.is_point() {
        CheckReport::condition("outer_kind", false, 0.0).with_note("outer shape cannot be a point")
    } else {
        CheckReport::condition("outer_kind", true, 0.0)
    };
    parts.push(outer_kind);
    let shapes_ok = parts.iter().all(|p| p.pass);
    let sep = if shapes_ok { separation(outer, inner) } else { f64::NAN };
    let mut contain = CheckReport::condition("compact_containment", sep > 0.0, sep);
    contain.stat("separation", sep);
    if !(sep > 0.0) {
        contain = contain.with_note(format!("inner set not compactly contained (separation {sep})"));
    }
    parts.push(contain);
    let area_of = |s: &ConvexShape| match s {
        ConvexShape::Disk { radius, .. } => std::f64::consts::PI * radius * radius,
        ConvexShape::Polygon(p) => p.area(),
        ConvexShape::Point(_) => 0.0,
    };
    let area = area_of(outer) - area_of(inner);
    let mut nonempty = CheckReport::condition("nonempty", area > 0.0, area);
    nonempty.stat("area", area);
    parts.push(nonempty);
    let mut report = CheckReport::all_of("ring_validation", parts);
    report.stat("separation", sep);
    report
}

/// Serialized shape description, field names `disk`/`polygon`/`point`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeSpec {
    Disk { center: [f64; 2], radius: f64 },
    Polygon(Vec<[f64; 2]>),
    Point([f64; 2]),
}

impl ShapeSpec {
    /// Converts without the convexity check so that `validate` can report it.
    fn to_shape_lenient(&self) -> ConvexShape {
        match self {
            ShapeSpec::Disk { center, radius } => ConvexShape::Disk {
                center: (*center).into(),
                radius: *radius,
            },
            ShapeSpec::Polygon(v) => {
                let mut vertices: Vec<Vec2> = v.iter().map(|p| Vec2::from(*p)).collect();
                if signed_area(&vertices) < 0.0 {
                    vertices.reverse();
                }
                ConvexShape::Polygon(ConvexPolygon { vertices })
            }
            ShapeSpec::Point(p) => ConvexShape::Point((*p).into()),
        }
    }

    pub fn to_shape(&self) -> Result<ConvexShape> {
        match self {
            ShapeSpec::Disk { center, radius } => ConvexShape::disk((*center).into(), *radius),
            ShapeSpec::Polygon(v) => ConvexShape::polygon(v.iter().map(|p| Vec2::from(*p)).collect()),
            ShapeSpec::Point(p) => Ok(ConvexShape::Point((*p).into())),
        }
    }
}

/// Shape description file: `{"outer": ..., "inner": ...}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RingSpec {
    pub outer: ShapeSpec,
    pub inner: ShapeSpec,
}

impl RingSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("ring serialization")
    }

    pub fn validate(&self) -> CheckReport {
        validate_shapes(&self.outer.to_shape_lenient(), &self.inner.to_shape_lenient())
    }

    pub fn build(&self) -> Result<ConvexRing> {
        ConvexRing::new(self.outer.to_shape()?, self.inner.to_shape()?)
    }
}

/// Convex hull by Andrew's monotone chain, counter-clockwise, without
/// collinear points.
pub fn convex_hull(points: &[Vec2]) -> Vec<Vec2> {
    let mut pts: Vec<Vec2> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<Vec2> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Vec2>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2 {
                let a = hull[hull.len() - 2];
                let b = hull[hull.len() - 1];
                if (b - a).cross(p - b) <= 0.0 {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

/// Signed distance to a counter-clockwise convex polygon's edge lines
/// (negative inside).
pub fn hull_signed_distance(hull: &[Vec2], p: Vec2) -> f64 {
    let n = hull.len();
    if n < 3 {
        return hull
            .iter()
            .map(|q| q.dist(p))
            .fold(f64::INFINITY, f64::min);
    }
    (0..n)
        .map(|i| {
            let a = hull[i];
            let e = hull[(i + 1) % n] - a;
            (p - a).dot(Vec2::new(e.y, -e.x)) / e.norm()
        })
        .fold(f64::NEG_INFINITY, f64::max)
}
