//! Level-set metamorphosis: contours `S_t = {u = t}`, nested families and the
//! lofted surface `{(x, z) : u(x) = z}`.
//!
//! Contours come from marching squares with linear edge interpolation. Saddle
//! cells are resolved by comparing the cell average with the level.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::geometry::{convex_hull, hull_signed_distance, segment_distance, signed_area, Vec2};
use crate::grid::{build_grid, fmt17, NodeClass, ScalarField};
use crate::report::CheckReport;
use crate::{ConvexRing, Error, Result, SolverChoice};

/// Vertex count of every resampled contour in [`stacked_surface`].
pub const LOFT_VERTICES: usize = 256;
/// Largest hull deficiency accepted by the convexity diagnostic.
pub const MAX_HULL_DEFICIENCY: f64 = 0.01;

/// Nine significant digits, printed in shortest form.
pub fn fmt9(v: f64) -> String {
    let rounded: f64 = format!("{v:.8e}").parse().unwrap_or(v);
    format!("{rounded}")
}

/// One closed level curve. `points` repeats its first point at the end and
/// runs counter-clockwise.
#[derive(Debug, Clone, PartialEq)]
pub struct Contour {
    pub level: f64,
    pub points: Vec<Vec2>,
    pub length: f64,
    /// `(area(hull) - area) / area(hull)`.
    pub hull_deficiency: f64,
    pub simple: bool,
    /// Further components found at the same level (grid defects).
    pub extra_components: usize,
}

impl Contour {
    /// Builds a contour from a closed or open ring of points.
    pub fn from_points(level: f64, mut points: Vec<Vec2>) -> Result<Self> {
        points.dedup_by(|a, b| a.dist(*b) <= 1e-14);
        if points.len() > 1 && points[0].dist(points[points.len() - 1]) <= 1e-14 {
            points.pop();
        }
        if points.len() < 3 {
            return Err(Error::Precondition(format!("contour at level {level} has fewer than three points")));
        }
        if signed_area(&points) < 0.0 {
            points.reverse();
        }
        let area = signed_area(&points);
        let hull = convex_hull(&points);
        let hull_area = signed_area(&hull);
        let simple = is_simple(&points);
        points.push(points[0]);
        let length = points.windows(2).map(|w| w[0].dist(w[1])).sum();
        Ok(Self {
            level,
            length,
            hull_deficiency: if hull_area > 0.0 { ((hull_area - area) / hull_area).max(0.0) } else { 0.0 },
            simple,
            extra_components: 0,
            points,
        })
    }

    /// Distinct vertices (without the closing repeat).
    pub fn vertices(&self) -> &[Vec2] {
        &self.points[..self.points.len() - 1]
    }

    pub fn area(&self) -> f64 {
        signed_area(self.vertices())
    }

    pub fn centroid(&self) -> Vec2 {
        let v = self.vertices();
        let n = v.len();
        let (mut c, mut a) = (Vec2::new(0.0, 0.0), 0.0);
        for i in 0..n {
            let (p, q) = (v[i], v[(i + 1) % n]);
            let w = p.cross(q);
            a += w;
            c = c + (p + q) * w;
        }
        c * (1.0 / (3.0 * a))
    }

    pub fn distance(&self, x: Vec2) -> f64 {
        self.points
            .windows(2)
            .map(|w| segment_distance(x, w[0], w[1]))
            .fold(f64::INFINITY, f64::min)
    }

    /// `n` points equally spaced in arclength, starting where the ray from
    /// `center` in the direction `+x` meets the contour.
    pub fn resample(&self, n: usize, center: Vec2) -> Vec<Vec2> {
        let pts = &self.points;
        let mut start = (0usize, 0.0f64, f64::NEG_INFINITY);
        for (i, w) in pts.windows(2).enumerate() {
            let (a, b) = (w[0] - center, w[1] - center);
            if (a.y <= 0.0 && b.y > 0.0) || (a.y > 0.0 && b.y <= 0.0) {
                let s = a.y / (a.y - b.y);
                let x = a.x + s * (b.x - a.x);
                if x > start.2 {
                    start = (i, s, x);
                }
            }
        }
        let (i0, s0, _) = start;
        let m = pts.len() - 1;
        let first = pts[i0] + (pts[i0 + 1] - pts[i0]) * s0;
        let mut ring = vec![first];
        ring.extend((1..=m).map(|k| pts[(i0 + k) % m]));
        ring.push(first);
        let mut cum = vec![0.0];
        for w in ring.windows(2) {
            cum.push(cum[cum.len() - 1] + w[0].dist(w[1]));
        }
        let total = cum[cum.len() - 1];
        let mut out = Vec::with_capacity(n);
        let mut seg = 0;
        for k in 0..n {
            let s = total * k as f64 / n as f64;
            while seg + 2 < cum.len() && cum[seg + 1] < s {
                seg += 1;
            }
            let len = cum[seg + 1] - cum[seg];
            let f = if len > 0.0 { (s - cum[seg]) / len } else { 0.0 };
            out.push(ring[seg] + (ring[seg + 1] - ring[seg]) * f);
        }
        out
    }
}

fn orient(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    (b - a).cross(c - a)
}

fn on_segment(a: Vec2, b: Vec2, p: Vec2) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

fn segments_meet(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> bool {
    if a.x.max(b.x) < c.x.min(d.x) || c.x.max(d.x) < a.x.min(b.x) || a.y.max(b.y) < c.y.min(d.y) || c.y.max(d.y) < a.y.min(b.y) {
        return false;
    }
    let (d1, d2) = (orient(c, d, a), orient(c, d, b));
    let (d3, d4) = (orient(a, b, c), orient(a, b, d));
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

/// No two non-adjacent edges of the closed ring `v` meet.
fn is_simple(v: &[Vec2]) -> bool {
    let n = v.len();
    for i in 0..n {
        let (a, b) = (v[i], v[(i + 1) % n]);
        for j in i + 2..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            if segments_meet(a, b, v[j], v[(j + 1) % n]) {
                return false;
            }
        }
    }
    true
}

/// Marching squares for `{u = t}`. The longest closed component is returned;
/// further components are counted in `extra_components`.
pub fn extract_level_set(field: &ScalarField, t: f64) -> Result<Contour> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::Precondition(format!("level must lie strictly between 0 and 1, got {t}")));
    }
    let grid = field.grid();
    let interior = field.defined_nodes().filter(|&k| grid.class(k) == NodeClass::Interior);
    let (lo, hi) = interior.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), k| {
        let v = field.value(k);
        (lo.min(v), hi.max(v))
    });
    if !(lo < t && hi > t) {
        return Err(Error::LevelNotAttained(t));
    }
    let (nx, ny) = (grid.nx(), grid.ny());
    let mut points: BTreeMap<usize, Vec2> = BTreeMap::new();
    let mut adj: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut link = |a: usize, b: usize| {
        adj.entry(a).or_default().push(b);
        adj.entry(b).or_default().push(a);
    };
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
            let mut v = [0.0; 4];
            let mut ok = true;
            for (c, &(ci, cj)) in corners.iter().enumerate() {
                match field.get(grid.idx(ci, cj)) {
                    Some(x) => v[c] = x,
                    None => ok = false,
                }
            }
            if !ok {
                continue;
            }
            let above: Vec<bool> = v.iter().map(|&x| x > t).collect();
            let keys = [2 * grid.idx(i, j), 2 * grid.idx(i + 1, j) + 1, 2 * grid.idx(i, j + 1), 2 * grid.idx(i, j) + 1];
            let mut crossed = Vec::with_capacity(4);
            for e in 0..4 {
                let (a, b) = (e, (e + 1) % 4);
                if above[a] != above[b] {
                    let pa = grid.pos_ij(corners[a].0, corners[a].1);
                    let pb = grid.pos_ij(corners[b].0, corners[b].1);
                    let f = (t - v[a]) / (v[b] - v[a]);
                    points.entry(keys[e]).or_insert(pa + (pb - pa) * f);
                    crossed.push(e);
                }
            }
            match crossed.len() {
                2 => link(keys[crossed[0]], keys[crossed[1]]),
                4 => {
                    let joined = v.iter().sum::<f64>() / 4.0 > t;
                    let pairs = if above[0] != joined {
                        [(3, 0), (1, 2)]
                    } else {
                        [(0, 1), (2, 3)]
                    };
                    for (a, b) in pairs {
                        link(keys[a], keys[b]);
                    }
                }
                _ => {}
            }
        }
    }
    let mut seen = BTreeSet::new();
    let mut loops: Vec<(bool, Vec<Vec2>)> = Vec::new();
    for &start in adj.keys() {
        if seen.contains(&start) {
            continue;
        }
        let mut chain = vec![start];
        seen.insert(start);
        let closed: bool;
        let (mut prev, mut cur) = (usize::MAX, start);
        loop {
            let next = adj[&cur].iter().copied().find(|&n| n != prev && !seen.contains(&n));
            match next {
                Some(n) => {
                    seen.insert(n);
                    chain.push(n);
                    prev = cur;
                    cur = n;
                }
                None => {
                    closed = chain.len() > 2 && adj[&cur].contains(&start);
                    break;
                }
            }
        }
        if !closed {
            let mut back = Vec::new();
            let (mut prev, mut cur) = (chain.get(1).copied().unwrap_or(usize::MAX), start);
            while let Some(n) = adj[&cur].iter().copied().find(|&n| n != prev && !seen.contains(&n)) {
                seen.insert(n);
                back.push(n);
                prev = cur;
                cur = n;
            }
            back.reverse();
            back.extend(chain);
            chain = back;
        }
        loops.push((closed, chain.iter().map(|k| points[k]).collect()));
    }
    let total = loops.len();
    let length = |pts: &[Vec2]| pts.windows(2).map(|w| w[0].dist(w[1])).sum::<f64>();
    let best = loops
        .into_iter()
        .filter(|(closed, _)| *closed)
        .max_by(|a, b| length(&a.1).total_cmp(&length(&b.1)))
        .ok_or_else(|| Error::Precondition(format!("level {t} has no closed component")))?;
    let mut contour = Contour::from_points(t, best.1)?;
    contour.extra_components = total - 1;
    Ok(contour)
}

/// Contours of one solved potential at increasing levels.
#[derive(Debug, Clone, PartialEq)]
pub struct MorphFamily {
    pub contours: Vec<Contour>,
    pub solver: SolverChoice,
    pub h: f64,
}

/// `t_k = k / (n + 1)`, `k = 1..=n`.
pub fn uniform_levels(n: usize) -> Vec<f64> {
    (1..=n).map(|k| k as f64 / (n + 1) as f64).collect()
}

pub fn validate_levels(levels: &[f64]) -> Result<()> {
    if levels.is_empty() {
        return Err(Error::Config("at least one level is required".into()));
    }
    if let Some(t) = levels.iter().find(|t| !(**t > 0.0 && **t < 1.0)) {
        return Err(Error::Config(format!("levels must lie strictly between 0 and 1, got {t}")));
    }
    if levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("levels must be strictly increasing".into()));
    }
    Ok(())
}

impl MorphFamily {
    /// Extracts every level of an already solved field.
    pub fn from_field(field: &ScalarField, solver: SolverChoice, levels: &[f64]) -> Result<Self> {
        validate_levels(levels)?;
        let contours = levels.iter().map(|&t| extract_level_set(field, t)).collect::<Result<_>>()?;
        Ok(Self { contours, solver, h: field.grid().h() })
    }

    /// Every vertex of each higher contour lies within `2h` of the hull of the
    /// contour below it.
    pub fn nesting_check(&self) -> CheckReport {
        let band = 2.0 * self.h;
        let margins: Vec<f64> = self
            .contours
            .windows(2)
            .flat_map(|w| {
                let hull = convex_hull(w[0].vertices());
                w[1].vertices().iter().map(move |&v| band - hull_signed_distance(&hull, v)).collect::<Vec<_>>()
            })
            .collect();
        let mut r = CheckReport::from_margins("nesting", &margins, 1.0);
        r.stat("band", band);
        r
    }

    /// Hull deficiency at most 1% for every contour.
    pub fn convexity_check(&self) -> CheckReport {
        let parts = self
            .contours
            .iter()
            .map(|c| {
                let mut r = CheckReport::condition(
                    format!("level_{}", c.level),
                    c.hull_deficiency <= MAX_HULL_DEFICIENCY,
                    MAX_HULL_DEFICIENCY - c.hull_deficiency,
                );
                r.stat("level", c.level).stat("deficiency", c.hull_deficiency).stat("length", c.length);
                r
            })
            .collect();
        CheckReport::all_of("convexity", parts)
    }

    pub fn simplicity_check(&self) -> CheckReport {
        let parts = self
            .contours
            .iter()
            .map(|c| {
                let mut r = CheckReport::condition(format!("level_{}", c.level), c.simple, if c.simple { 1.0 } else { -1.0 });
                r.stat("extra_components", c.extra_components as f64);
                r
            })
            .collect();
        CheckReport::all_of("simplicity", parts)
    }

    pub fn diagnostics(&self) -> CheckReport {
        CheckReport::all_of("metamorphosis", vec![self.nesting_check(), self.convexity_check(), self.simplicity_check()])
    }

    /// Rows `level,k,x,y`, one per stored contour point.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "level,k,x,y")?;
        for c in &self.contours {
            for (k, p) in c.points.iter().enumerate() {
                writeln!(w, "{},{},{},{}", fmt17(c.level), k, fmt17(p.x), fmt17(p.y))?;
            }
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut out = Vec::new();
        self.write_csv(&mut out).expect("write to memory");
        String::from_utf8(out).expect("ascii csv")
    }

    /// One `<path id="level-t">` per contour, `y` pointing up.
    pub fn write_svg<W: Write>(&self, mut w: W) -> Result<()> {
        let all = self.contours.iter().flat_map(|c| c.points.iter());
        let (mut lo, mut hi) = (Vec2::new(f64::INFINITY, f64::INFINITY), Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
        for p in all {
            lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        if !lo.x.is_finite() {
            lo = Vec2::new(0.0, 0.0);
            hi = Vec2::new(1.0, 1.0);
        }
        let pad = 0.05 * (hi.x - lo.x).max(hi.y - lo.y);
        let (x0, y0) = (lo.x - pad, -(hi.y + pad));
        let (wd, ht) = (hi.x - lo.x + 2.0 * pad, hi.y - lo.y + 2.0 * pad);
        writeln!(w, r#"<?xml version="1.0" encoding="UTF-8"?>"#)?;
        writeln!(
            w,
            r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{} {} {} {}" width="512" height="{}">"#,
            fmt9(x0),
            fmt9(y0),
            fmt9(wd),
            fmt9(ht),
            fmt9(512.0 * ht / wd)
        )?;
        writeln!(w, r#"<g transform="scale(1,-1)" fill="none" stroke="black" stroke-width="{}">"#, fmt9(wd / 400.0))?;
        for c in &self.contours {
            let mut d = String::new();
            for (k, p) in c.vertices().iter().enumerate() {
                d.push_str(if k == 0 { "M" } else { " L" });
                d.push_str(&format!("{} {}", fmt9(p.x), fmt9(p.y)));
            }
            d.push_str(" Z");
            writeln!(w, r#"<path id="level-{}" d="{}"/>"#, c.level, d)?;
        }
        writeln!(w, "</g>")?;
        writeln!(w, "</svg>")?;
        Ok(())
    }

    pub fn to_svg(&self) -> String {
        let mut out = Vec::new();
        self.write_svg(&mut out).expect("write to memory");
        String::from_utf8(out).expect("utf8 svg")
    }
}

/// Solves once on a grid of spacing `h` and extracts every level.
pub fn metamorphosis(ring: &ConvexRing, solver: SolverChoice, levels: &[f64], h: f64) -> Result<MorphFamily> {
    validate_levels(levels)?;
    let grid = build_grid(ring, h)?;
    let (u, _) = solver.solve(&grid)?;
    MorphFamily::from_field(&u, solver, levels)
}

/// Reads contours written by [`MorphFamily::write_csv`].
pub fn read_contours_csv<R: BufRead>(r: R) -> Result<Vec<Contour>> {
    let mut groups: Vec<(f64, Vec<Vec2>)> = Vec::new();
    for (n, line) in r.lines().enumerate() {
        let line = line?;
        if n == 0 || line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        let parse = |s: &str| s.trim().parse::<f64>().map_err(|_| Error::Parse(format!("line {}: bad number '{s}'", n + 1)));
        if cols.len() != 4 {
            return Err(Error::Parse(format!("line {}: expected 4 columns", n + 1)));
        }
        let (t, x, y) = (parse(cols[0])?, parse(cols[2])?, parse(cols[3])?);
        match groups.last_mut() {
            Some((level, pts)) if *level == t => pts.push(Vec2::new(x, y)),
            _ => groups.push((t, vec![Vec2::new(x, y)])),
        }
    }
    groups.into_iter().map(|(t, pts)| Contour::from_points(t, pts)).collect()
}

/// Symmetric Hausdorff distance between two polylines, measured from the
/// vertices of each to the segments of the other.
pub fn hausdorff_distance(a: &Contour, b: &Contour) -> f64 {
    let one = |p: &Contour, q: &Contour| p.points.iter().map(|&x| q.distance(x)).fold(0.0, f64::max);
    one(a, b).max(one(b, a))
}

/// A triangle mesh in ℝ³.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mesh {
    pub vertices: Vec<[f64; 3]>,
    pub faces: Vec<[usize; 3]>,
}

impl Mesh {
    pub fn triangle_area(&self, f: [usize; 3]) -> f64 {
        let [a, b, c] = f.map(|i| self.vertices[i]);
        let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
        let v = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
        let n = [u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]];
        0.5 * (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt()
    }

    pub fn area(&self) -> f64 {
        self.faces.iter().map(|&f| self.triangle_area(f)).sum()
    }

    /// ASCII OBJ with 1-based face indices.
    pub fn write_obj<W: Write>(&self, mut w: W) -> Result<()> {
        for v in &self.vertices {
            writeln!(w, "v {} {} {}", fmt9(v[0]), fmt9(v[1]), fmt9(v[2]))?;
        }
        for f in &self.faces {
            writeln!(w, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1)?;
        }
        Ok(())
    }

    pub fn to_obj(&self) -> String {
        let mut out = Vec::new();
        self.write_obj(&mut out).expect("write to memory");
        String::from_utf8(out).expect("ascii obj")
    }
}

/// Lofts consecutive contours into a band of triangles at heights `z = t`.
/// Each contour is resampled to [`LOFT_VERTICES`] points by arclength, all
/// starting on the ray `+x` from the centroid of the lowest contour.
pub fn stacked_surface(family: &MorphFamily) -> Result<Mesh> {
    if family.contours.len() < 2 {
        return Err(Error::Precondition("lofting needs at least two contours".into()));
    }
    if let Some(c) = family.contours.iter().find(|c| !c.simple) {
        return Err(Error::NonSimpleContour(c.level));
    }
    let nesting = family.nesting_check();
    if !nesting.pass {
        return Err(Error::Precondition(format!(
            "contours are not nested (worst margin {})",
            nesting.worst_margin
        )));
    }
    let n = LOFT_VERTICES;
    let center = family.contours[0].centroid();
    let mut mesh = Mesh { vertices: Vec::new(), faces: Vec::new() };
    for c in &family.contours {
        mesh.vertices.extend(c.resample(n, center).into_iter().map(|p| [p.x, p.y, c.level]));
    }
    for l in 0..family.contours.len() - 1 {
        let (a, b) = (l * n, (l + 1) * n);
        for k in 0..n {
            let k1 = (k + 1) % n;
            mesh.faces.push([a + k, a + k1, b + k1]);
            mesh.faces.push([a + k, b + k1, b + k]);
        }
    }
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks;
    use crate::grid::build_grid;
    use std::f64::consts::PI;

    fn cone(h: f64) -> ScalarField {
        let grid = build_grid(&benchmarks::punctured_disk(), h).unwrap();
        ScalarField::potential_from_fn(grid, |p| 1.0 - p.norm())
    }

    fn circle(level: f64, r: f64, n: usize) -> Contour {
        let pts = (0..n).map(|k| Vec2::from_angle(k as f64 * 2.0 * PI / n as f64) * r).collect();
        Contour::from_points(level, pts).unwrap()
    }

    #[test]
    fn cone_level_sets_are_circles() {
        let u = cone(1.0 / 128.0);
        for (t, r) in [(0.5, 0.5), (0.25, 0.75)] {
            let c = extract_level_set(&u, t).unwrap();
            assert!((c.length / (2.0 * PI * r) - 1.0).abs() <= 0.02, "{t}: {}", c.length);
            assert!(c.vertices().iter().all(|p| (p.norm() - r).abs() < 1e-3));
            assert!(c.simple);
            assert_eq!(c.extra_components, 0);
            assert_eq!(c.points[0], c.points[c.points.len() - 1]);
            assert!(c.hull_deficiency < 1e-3);
            assert!(c.area() > 0.0);
        }
    }

    #[test]
    fn unattained_and_out_of_range_levels_are_rejected() {
        let u = cone(1.0 / 32.0);
        assert!(matches!(extract_level_set(&u, 0.999), Err(Error::LevelNotAttained(_))));
        assert!(extract_level_set(&u, 0.0).is_err());
        assert!(extract_level_set(&u, 1.0).is_err());
        assert!(validate_levels(&[0.5, 0.25]).is_err());
        assert!(validate_levels(&[]).is_err());
        assert_eq!(uniform_levels(3), vec![0.25, 0.5, 0.75]);
    }

    #[test]
    fn saddles_follow_the_cell_average() {
        let grid = build_grid(&benchmarks::square_point(), 1.0 / 16.0).unwrap();
        let h = grid.h();
        let n = 16.0;
        let u = ScalarField::from_fn(grid.clone(), |p| {
            let parity = ((p.x * n).round() + (p.y * n).round()) as i64 % 2;
            if parity == 0 { 0.6 } else { 0.4 }
        });
        for (t, isolated) in [(0.55, 0.6), (0.45, 0.4)] {
            let c = extract_level_set(&u, t).unwrap();
            let node = grid.nearest_node(c.centroid());
            assert!(grid.pos(node).dist(c.centroid()) < 1e-9);
            assert_eq!(u.value(node), isolated);
            assert!((c.length - 2f64.sqrt() * h).abs() < 1e-9, "{}", c.length);
            assert!(c.extra_components > 10);
        }
    }

    #[test]
    fn contour_length_is_stable_under_refinement() {
        let a = extract_level_set(&cone(1.0 / 64.0), 0.5).unwrap();
        let b = extract_level_set(&cone(1.0 / 128.0), 0.5).unwrap();
        assert!((a.length - b.length).abs() / b.length <= 0.02);
        assert!(hausdorff_distance(&a, &b) <= 1.0 / 64.0);
    }

    #[test]
    fn cone_family_is_nested_and_lofts_to_the_frustum() {
        let u = cone(1.0 / 128.0);
        let fam = MorphFamily::from_field(&u, SolverChoice::Inf, &[0.25, 0.5, 0.75]).unwrap();
        assert!(fam.diagnostics().pass);
        let mesh = stacked_surface(&fam).unwrap();
        assert_eq!(mesh.vertices.len(), 3 * LOFT_VERTICES);
        assert_eq!(mesh.faces.len(), 4 * LOFT_VERTICES);
        let exact = 2f64.sqrt() * PI * 0.5;
        assert!((mesh.area() / exact - 1.0).abs() <= 0.05, "{}", mesh.area());
    }

    #[test]
    fn equal_circles_loft_to_a_cylinder_band() {
        let (r, dz) = (0.4, 0.01);
        let fam = MorphFamily {
            contours: vec![circle(0.5, r, 400), circle(0.5 + dz, r, 400)],
            solver: SolverChoice::Inf,
            h: 0.01,
        };
        let area = stacked_surface(&fam).unwrap().area();
        assert!((area / (2.0 * PI * r * dz) - 1.0).abs() < 1e-3, "{area}");
    }

    #[test]
    fn non_simple_contours_do_not_loft() {
        let bow = Contour::from_points(
            0.5,
            vec![Vec2::new(0.0, 0.0), Vec2::new(1.0, 1.0), Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)],
        )
        .unwrap();
        assert!(!bow.simple);
        let fam = MorphFamily { contours: vec![circle(0.25, 2.0, 64), bow], solver: SolverChoice::Inf, h: 0.01 };
        assert!(matches!(stacked_surface(&fam), Err(Error::NonSimpleContour(t)) if t == 0.5));
    }

    #[test]
    fn outputs_round_trip_and_use_the_pinned_digits() {
        let fam = MorphFamily::from_field(&cone(1.0 / 32.0), SolverChoice::P(4.0), &[0.25, 0.75]).unwrap();
        let back = read_contours_csv(fam.to_csv().as_bytes()).unwrap();
        assert_eq!(back.len(), 2);
        for (a, b) in back.iter().zip(&fam.contours) {
            assert_eq!(a.points, b.points);
        }
        let svg = fam.to_svg();
        assert_eq!(svg.matches("<path ").count(), 2);
        assert!(svg.contains(r#"id="level-0.25""#) && svg.contains(r#"id="level-0.75""#));
        let obj = stacked_surface(&fam).unwrap().to_obj();
        assert!(obj.lines().filter(|l| l.starts_with("f ")).count() == 2 * LOFT_VERTICES);
        assert_eq!(fmt9(0.1234567891234), "0.123456789");
        assert_eq!(fmt9(0.75), "0.75");
    }
}
