//! Reference rings and their closed-form potentials.

use crate::geometry::{ConvexRing, ConvexShape, Vec2};
use crate::grid::{NodeClass, ScalarField};
use crate::report::CheckReport;

/// Unit disk minus its center.
pub fn punctured_disk() -> ConvexRing {
    let outer = ConvexShape::disk(Vec2::new(0.0, 0.0), 1.0).expect("unit disk");
    ConvexRing::new(outer, ConvexShape::point(Vec2::new(0.0, 0.0))).expect("punctured disk")
}

/// `B(0, 1) \ B̄(0, 0.5)`.
pub fn annulus() -> ConvexRing {
    let outer = ConvexShape::disk(Vec2::new(0.0, 0.0), 1.0).expect("unit disk");
    let inner = ConvexShape::disk(Vec2::new(0.0, 0.0), 0.5).expect("half disk");
    ConvexRing::new(outer, inner).expect("annulus")
}

/// `[0, 1]²` minus its center.
pub fn square_point() -> ConvexRing {
    let outer = ConvexShape::rect(0.0, 0.0, 1.0, 1.0).expect("unit square");
    ConvexRing::new(outer, ConvexShape::point(Vec2::new(0.5, 0.5))).expect("square ring")
}

/// The radial potential of a concentric disk ring: `B(c, R)` minus a point
/// `c` (`r = 0`) or a disk `B̄(c, r)`.
///
/// With `a = (p - 2)/(p - 1)` (and `a = 1` for `p = ∞`) it is
/// `(ρ^a - R^a) / (r^a - R^a)`, `ρ = |x - c|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialPotential {
    pub center: Vec2,
    pub r_inner: f64,
    pub r_outer: f64,
    pub exponent: f64,
}

impl RadialPotential {
    /// `None` unless the ring is a disk with a concentric point or disk.
    /// `p = None` selects the ∞-harmonic potential.
    pub fn for_ring(ring: &ConvexRing, p: Option<f64>) -> Option<Self> {
        let ConvexShape::Disk { center, radius } = *ring.outer() else {
            return None;
        };
        let tol = 1e-12 * radius;
        let r_inner = match *ring.inner() {
            ConvexShape::Point(q) if q.dist(center) <= tol => 0.0,
            ConvexShape::Disk { center: q, radius: r } if q.dist(center) <= tol => r,
            _ => return None,
        };
        let exponent = p.map_or(1.0, |p| (p - 2.0) / (p - 1.0));
        if !(exponent > 0.0) {
            return None;
        }
        Some(Self { center, r_inner, r_outer: radius, exponent })
    }

    pub fn value(&self, x: Vec2) -> f64 {
        let a = self.exponent;
        let rho = x.dist(self.center).clamp(self.r_inner, self.r_outer);
        (rho.powf(a) - self.r_outer.powf(a)) / (self.r_inner.powf(a) - self.r_outer.powf(a))
    }
}

/// `sup |u - exact|` over the interior nodes accepted by `keep`.
pub fn sup_error(field: &ScalarField, exact: &RadialPotential, keep: impl Fn(usize) -> bool) -> f64 {
    let grid = field.grid();
    field
        .defined_nodes()
        .filter(|&k| grid.class(k) == NodeClass::Interior && keep(k))
        .map(|k| (field.value(k) - exact.value(grid.pos(k))).abs())
        .fold(0.0, f64::max)
}

/// Which nodes a closed-form comparison covers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Region {
    /// The default mask.
    Unmasked,
    /// Every interior node.
    Interior,
    /// Interior nodes farther than the given distance from the inner set.
    BeyondInner(f64),
}

/// Passes when `sup |u - exact| <= tol` over `region`.
pub fn closed_form_check(name: &str, field: &ScalarField, exact: &RadialPotential, tol: f64, region: Region) -> CheckReport {
    let grid = field.grid();
    let ring = grid.ring();
    let err = match region {
        Region::Unmasked => {
            let mask = grid.default_mask();
            sup_error(field, exact, |k| mask.is_unmasked(k))
        }
        Region::Interior => sup_error(field, exact, |_| true),
        Region::BeyondInner(d) => sup_error(field, exact, |k| ring.dist_to_inner(grid.pos(k)) > d),
    };
    let mut r = CheckReport::condition(name, err <= tol, tol - err);
    r.stat("sup_error", err).stat("tol", tol);
    r
}
