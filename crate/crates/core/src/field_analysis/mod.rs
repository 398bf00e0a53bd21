//! Derived fields of a potential and the pointwise inequalities they obey.
//!
//! Every statistic is taken over the unmasked nodes of the grid (outside a
//! `4h` collar around the inner set and a `2h` collar inside the outer
//! boundary). Inequalities carry an additive slack proportional to `h`,
//! scaled by a typical magnitude of the quantity being compared.

pub mod analytic;

use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use analytic::{AnalyticFunction, Profile};

use crate::geometry::{ConvexRing, ConvexShape, Vec2};
use crate::grid::{gradient, hessian, MatrixField, ScalarField, Sym2, VectorField};
use crate::report::{median, BoundReport, CheckReport};
use crate::{Error, Result};

/// What a structural check is evaluated on.
#[derive(Debug, Clone, Copy)]
pub enum Subject<'a> {
    Field(&'a ScalarField),
    Analytic(&'a AnalyticFunction),
}

/// Sample count and seed. Field subjects draw unmasked nodes (all of them
/// when `count` exceeds the supply); analytic subjects draw points with
/// `|x| ∈ (0.1, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sampling {
    pub count: usize,
    pub seed: u64,
}

impl Sampling {
    pub fn new(count: usize, seed: u64) -> Self {
        Self { count, seed }
    }
}

const ANALYTIC_SLACK: f64 = 1e-9;
const MIN_GRADIENT: f64 = 1e-12;

/// `|Du|^α` at nodes where the gradient is defined, `ln |Du|` for `α = 0`.
/// Nodes with `|Du| < 1e-12` are left undefined.
pub fn grad_alpha(field: &ScalarField, alpha: f64) -> ScalarField {
    let g = gradient(field).norm();
    let mut out = ScalarField::undefined(field.grid().clone());
    for k in g.defined_nodes() {
        let m = g.value(k);
        if m >= MIN_GRADIENT {
            out.set(k, if alpha == 0.0 { m.ln() } else { m.powf(alpha) });
        }
    }
    out
}

/// Midpoint quadrature `h² Σ f` over defined nodes of the open ball `B(z, r)`.
pub fn ball_integral(field: &ScalarField, z: Vec2, r: f64) -> f64 {
    let grid = field.grid();
    let h = grid.h();
    field
        .defined_nodes()
        .filter(|&k| grid.pos(k).dist(z) < r)
        .map(|k| field.value(k))
        .sum::<f64>()
        * h
        * h
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SobolevEstimate {
    /// `∫_{B(z,r/2)} |D(|Du|^α)|²`.
    pub lhs: f64,
    /// `r⁻² ∫_{B(z,r)} |Du|^{2α}`.
    pub rhs: f64,
    pub ratio: f64,
}

/// Both sides of the Caccioppoli-type estimate for `|Du|^α` on `B(z, r)`.
pub fn sobolev_seminorm(field: &ScalarField, z: Vec2, r: f64, alpha: f64) -> Result<SobolevEstimate> {
    let grid = field.grid();
    let h = grid.h();
    if r < 8.0 * h {
        return Err(Error::Precondition(format!("window radius {r} is below 8h")));
    }
    if !grid.default_mask().contains_ball(grid.ring(), z, 2.0 * r) {
        return Err(Error::Precondition(format!(
            "B(({}, {}), {}) leaves the unmasked region",
            z.x,
            z.y,
            2.0 * r
        )));
    }
    let ga = grad_alpha(field, alpha);
    let dga = gradient(&ga).map(|v| v.norm2());
    let lhs = ball_integral(&dga, z, 0.5 * r);
    let g2a = ga.map(|v| if alpha == 0.0 { 1.0 } else { v * v });
    let rhs = ball_integral(&g2a, z, r) / (r * r);
    Ok(SobolevEstimate {
        lhs,
        rhs,
        ratio: lhs / rhs,
    })
}

/// Normalized ∞-Laplacian `D²u Du·Du / |Du|²` from the discrete derivatives.
pub fn eic_residual(field: &ScalarField) -> ScalarField {
    let g = gradient(field);
    let hs = hessian(field);
    let mut out = ScalarField::undefined(field.grid().clone());
    for k in g.defined_nodes() {
        let (Some(gk), Some(hk)) = (g.get(k), hs.get(k)) else { continue };
        let n2 = gk.norm2();
        if n2.sqrt() >= MIN_GRADIENT {
            out.set(k, hk.quad(gk) / n2);
        }
    }
    out
}

fn masked_values(field: &ScalarField) -> Vec<f64> {
    let mask = field.grid().default_mask();
    mask.nodes().filter_map(|k| field.get(k)).collect()
}

/// Median `|Δ_∞^N u|` over unmasked nodes.
pub fn median_abs_eic(field: &ScalarField) -> f64 {
    let r: Vec<f64> = masked_values(&eic_residual(field)).into_iter().map(f64::abs).collect();
    median(&r)
}

/// Ratio of median `|Δ_∞^N u_p|` at two exponents, checked against `bounds`.
pub fn eic_scaling_check(low_p: &ScalarField, high_p: &ScalarField, bounds: (f64, f64)) -> CheckReport {
    let (a, b) = (median_abs_eic(low_p), median_abs_eic(high_p));
    let ratio = a / b;
    let ok = ratio >= bounds.0 && ratio <= bounds.1;
    let mut r = CheckReport::condition("eic_scaling", ok, (ratio - bounds.0).min(bounds.1 - ratio));
    r.stat("median_low_p", a).stat("median_high_p", b).stat("ratio", ratio);
    r
}

/// Median `|Δ_∞^N u| <= factor · h · median |D²u|_F` over unmasked nodes.
pub fn eic_limit_check(field: &ScalarField, factor: f64) -> CheckReport {
    let grid = field.grid();
    let med = median_abs_eic(field);
    let scale = median(&masked_values(&hessian(field).map(|m| m.frobenius())));
    let bound = factor * grid.h() * scale;
    let mut r = CheckReport::condition("eic_limit", med <= bound, bound - med);
    r.stat("median_abs_eic", med).stat("bound", bound).stat("scale", scale);
    r
}

fn sample_indices(len: usize, count: usize, seed: u64) -> Vec<usize> {
    if count >= len {
        return (0..len).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = index::sample(&mut rng, len, count).into_vec();
    v.sort_unstable();
    v
}

fn to_dense(g: Vec2, h: Sym2) -> (DVector<f64>, DMatrix<f64>) {
    (
        DVector::from_row_slice(&[g.x, g.y]),
        DMatrix::from_row_slice(2, 2, &[h.xx, h.xy, h.xy, h.yy]),
    )
}

/// Unmasked nodes where both discrete derivatives exist and `|Du| > 0`.
fn derivative_nodes(g: &VectorField, hs: &MatrixField) -> Vec<usize> {
    let mask = g.grid().default_mask();
    mask.nodes()
        .filter(|&k| hs.is_defined(k) && g.get(k).is_some_and(|v| v.norm() >= MIN_GRADIENT))
        .collect()
}

/// `2[|D²v Dv|² - Δv Δ_∞v] >= |Dv|²[|D²v|² - (Δv)²]` at sampled points.
///
/// Analytic subjects use slack `1e-9`; in the plane the two sides agree
/// identically and the report also requires `max |LHS - RHS| <= 1e-9`.
/// Field subjects use slack `h · median(|Du|² |D²u|²)`.
pub fn structural_inequality_check(subject: Subject, sampling: Sampling) -> BoundReport {
    let (pairs, slack, planar_analytic) = match subject {
        Subject::Analytic(f) => {
            let pts = analytic::sample_shell(f.n, sampling.count, 0.1, 1.0, sampling.seed);
            let pairs: Vec<(f64, f64)> = pts
                .iter()
                .map(|x| analytic::structural_sides(&f.gradient(x), &f.hessian(x)))
                .collect();
            (pairs, ANALYTIC_SLACK, f.n == 2)
        }
        Subject::Field(field) => {
            let g = gradient(field);
            let hs = hessian(field);
            let nodes = derivative_nodes(&g, &hs);
            let picked: Vec<usize> = sample_indices(nodes.len(), sampling.count, sampling.seed)
                .into_iter()
                .map(|i| nodes[i])
                .collect();
            let scale = median(
                &picked
                    .iter()
                    .map(|&k| g.value(k).norm2() * hs.value(k).frobenius2())
                    .collect::<Vec<_>>(),
            );
            let pairs = picked
                .iter()
                .map(|&k| {
                    let (gv, hm) = to_dense(g.value(k), hs.value(k));
                    analytic::structural_sides(&gv, &hm)
                })
                .collect();
            (pairs, field.grid().h() * scale, false)
        }
    };
    let margins: Vec<f64> = pairs.iter().map(|(l, r)| l - r + slack).collect();
    let gap = pairs.iter().map(|(l, r)| (l - r).abs()).fold(0.0, f64::max);
    let mut main = CheckReport::from_margins("inequality", &margins, 0.99);
    main.stat("slack", slack).stat("max_abs_gap", gap);
    let mut r = if planar_analytic {
        let mut eq = CheckReport::condition("planar_equality", gap <= ANALYTIC_SLACK, ANALYTIC_SLACK - gap);
        eq.stat("max_abs_gap", gap);
        CheckReport::all_of("structural_inequality", vec![main, eq])
    } else {
        let mut r = main;
        r.name = "structural_inequality".into();
        r
    };
    r.stat("max_abs_gap", gap);
    r.with_seed(sampling.seed)
}

/// Flux `|Du|⁻²(Δu Du - D²u Du)` from the discrete derivatives.
pub fn divergence_flux(field: &ScalarField) -> VectorField {
    let g = gradient(field);
    let hs = hessian(field);
    let mut out = VectorField::undefined(field.grid().clone());
    for k in g.defined_nodes() {
        let (Some(gk), Some(hk)) = (g.get(k), hs.get(k)) else { continue };
        let n2 = gk.norm2();
        if n2.sqrt() >= MIN_GRADIENT {
            out.set(k, (gk * hk.trace() - hk.apply(gk)) * (1.0 / n2));
        }
    }
    out
}

/// `div(|Dv|⁻²(Δv Dv - D²v Dv)) >= 0`.
///
/// Analytic subjects use closed-form third derivatives, slack `1e-9`, and
/// must pass at every point. Field subjects difference the discrete flux
/// and pass at ≥ 95% of nodes with slack `h · median(|∂₁F₁| + |∂₂F₂|)`.
pub fn divergence_formula_check(subject: Subject, sampling: Sampling) -> BoundReport {
    match subject {
        Subject::Analytic(f) => {
            let pts = analytic::sample_shell(f.n, sampling.count, 0.1, 1.0, sampling.seed);
            let margins: Vec<f64> = pts
                .iter()
                .map(|x| analytic::flux_divergence(&f.gradient(x), &f.hessian(x), &f.third(x)) + ANALYTIC_SLACK)
                .collect();
            let mut r = CheckReport::from_margins("divergence_formula", &margins, 1.0);
            r.stat("slack", ANALYTIC_SLACK);
            r.with_seed(sampling.seed)
        }
        Subject::Field(field) => {
            let grid = field.grid();
            let flux = divergence_flux(field);
            let mask = grid.default_mask();
            let nx = grid.nx();
            let inv2h = 0.5 / grid.h();
            let mut terms = Vec::new();
            for k in mask.nodes() {
                let nb = [k + 1, k - 1, k + nx, k - nx];
                if !flux.is_defined(k) || !nb.iter().all(|&q| flux.is_defined(q)) {
                    continue;
                }
                let dx = (flux.value(k + 1).x - flux.value(k - 1).x) * inv2h;
                let dy = (flux.value(k + nx).y - flux.value(k - nx).y) * inv2h;
                terms.push((dx + dy, dx.abs() + dy.abs()));
            }
            let picked: Vec<(f64, f64)> = sample_indices(terms.len(), sampling.count, sampling.seed)
                .into_iter()
                .map(|i| terms[i])
                .collect();
            let scale = median(&picked.iter().map(|t| t.1).collect::<Vec<_>>());
            let slack = grid.h() * scale;
            let margins: Vec<f64> = picked.iter().map(|t| t.0 + slack).collect();
            let mut r = CheckReport::from_margins("divergence_formula", &margins, 0.95);
            r.stat("slack", slack);
            r.with_seed(sampling.seed)
        }
    }
}

/// The four gradient bounds at every unmasked node, slack `h`:
///
/// * `lower_diameter`: `|Du| >= u / diam(Ω₀)`,
/// * `lower_ray`: `|Du| >= (u(x) - u(x + rν)) / r`, `ν = -Du/|Du|`, `r = ½ dist(x, ∂Ω₀)`,
/// * `upper_ball`: `|Du| <= 1 / dist(x, ∂Ω)`,
/// * `upper_point` (point inner set only): `|Du| <= 1 / dist(x, ∂Ω₀)`.
pub fn gradient_bounds_check(field: &ScalarField) -> BoundReport {
    let grid = field.grid();
    let ring = grid.ring();
    let h = grid.h();
    let diam = ring.diam();
    let g = gradient(field);
    let mask = grid.default_mask();
    let (mut low_d, mut low_r, mut up_b, mut up_p) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for k in mask.nodes() {
        let Some(du) = g.get(k) else { continue };
        let x = grid.pos(k);
        let u = field.value(k);
        let m = du.norm();
        let d_outer = ring.dist_to_outer(x).unwrap_or(0.0);
        low_d.push(m - u / diam + h);
        if m >= MIN_GRADIENT {
            let r = 0.5 * d_outer;
            let y = x + du * (-r / m);
            if let Ok(uy) = field.interpolate(y) {
                low_r.push(m - (u - uy) / r + h);
            }
        }
        let d_ring = d_outer.min(ring.dist_to_inner(x));
        up_b.push(1.0 / d_ring + h - m);
        if ring.inner_is_point() {
            up_p.push(1.0 / d_outer + h - m);
        }
    }
    let mut parts = vec![
        CheckReport::from_margins("lower_diameter", &low_d, 0.99),
        CheckReport::from_margins("lower_ray", &low_r, 0.99),
        CheckReport::from_margins("upper_ball", &up_b, 0.99),
    ];
    if ring.inner_is_point() {
        parts.push(CheckReport::from_margins("upper_point", &up_p, 0.99));
    }
    let mut r = CheckReport::all_of("gradient_bounds", parts);
    r.stat("slack", h);
    r
}

fn inner_reach(shape: &ConvexShape, center: Vec2) -> f64 {
    match shape {
        ConvexShape::Point(_) => 0.0,
        ConvexShape::Disk { center: c, radius } => c.dist(center) + radius,
        ConvexShape::Polygon(poly) => poly.vertices().iter().map(|v| v.dist(center)).fold(0.0, f64::max),
    }
}

/// A ball `(z, r)` of radius `0.2 s` centred `s/2` beyond the inner set in
/// the `-x` direction, `s` the separation. On the square/point ring this is
/// `B((¼, ½), 0.1)`.
pub fn hessian_window(ring: &ConvexRing) -> (Vec2, f64) {
    let center = ring.inner().anchor();
    let s = ring.separation();
    let reach = inner_reach(ring.inner(), center);
    (center - Vec2::new(reach + 0.5 * s, 0.0), 0.2 * s)
}

/// `∫_{B(z, r/2)} |D²u|_F`.
pub fn hessian_window_l1(field: &ScalarField, z: Vec2, r: f64) -> f64 {
    ball_integral(&hessian(field).map(|m| m.frobenius()), z, 0.5 * r)
}

/// `|D²u|_F <= 2|Δu| + 2|D|Du||` at ≥ 99% of unmasked nodes, slack
/// `10 h · median |D²u|_F`; the windowed L¹ norms are attached as statistics.
pub fn hessian_budget_check(field: &ScalarField, windows: &[(Vec2, f64)]) -> BoundReport {
    let grid = field.grid();
    let hs = hessian(field);
    let dgn = gradient(&gradient(field).norm());
    let mask = grid.default_mask();
    let nodes: Vec<usize> = mask.nodes().filter(|&k| hs.is_defined(k) && dgn.is_defined(k)).collect();
    let scale = median(&nodes.iter().map(|&k| hs.value(k).frobenius()).collect::<Vec<_>>());
    let slack = 10.0 * grid.h() * scale;
    let margins: Vec<f64> = nodes
        .iter()
        .map(|&k| {
            let m = hs.value(k);
            2.0 * m.trace().abs() + 2.0 * dgn.value(k).norm() + slack - m.frobenius()
        })
        .collect();
    let mut r = CheckReport::from_margins("hessian_budget", &margins, 0.99);
    r.stat("slack", slack);
    for (i, &(z, rad)) in windows.iter().enumerate() {
        r.stat(&format!("window_{i}_l1"), hessian_window_l1(field, z, rad));
    }
    r
}

/// Passes when `max / min <= factor` over the supplied `(p, value)` pairs.
pub fn cross_p_stability_check(name: &str, values: &[(f64, f64)], factor: f64) -> CheckReport {
    let hi = values.iter().map(|v| v.1).fold(f64::NEG_INFINITY, f64::max);
    let lo = values.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
    let ratio = hi / lo;
    let ok = lo > 0.0 && ratio.is_finite() && ratio <= factor;
    let mut r = CheckReport::condition(name, ok, factor - ratio);
    for (p, v) in values {
        r.stat(&format!("p_{p}"), *v);
    }
    r.stat("ratio", ratio);
    r
}

/// Extremes of `|Du|`, `∂₁u`, `∂₂u` over random balls inside the unmasked
/// region must be attained on the boundary circle (256 interpolated samples)
/// up to `4h · max_B |Du|`. Every ball must pass.
pub fn monotonicity_check(field: &ScalarField, balls: usize, seed: u64) -> BoundReport {
    let grid = field.grid();
    let ring = grid.ring();
    let h = grid.h();
    let g = gradient(field);
    let mask = grid.default_mask();
    let centers: Vec<usize> = mask
        .nodes()
        .filter(|&k| mask.room(ring, grid.pos(k)) > 6.0 * h)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut margins = Vec::with_capacity(balls);
    const SAMPLES: usize = 256;
    let quantities = |v: Vec2| [v.norm(), v.x, v.y];
    for _ in 0..balls {
        if centers.is_empty() {
            break;
        }
        let z = grid.pos(centers[rng.gen_range(0..centers.len())]);
        let room = mask.room(ring, z) - 1.5 * h;
        let r = rng.gen_range(4.0 * h..room.max(4.0 * h + 1e-12));
        let mut inner = [(f64::INFINITY, f64::NEG_INFINITY); 3];
        let mut outer = [(f64::INFINITY, f64::NEG_INFINITY); 3];
        let mut scale: f64 = 0.0;
        let fold = |acc: &mut [(f64, f64); 3], v: Vec2| {
            for (a, q) in acc.iter_mut().zip(quantities(v)) {
                a.0 = a.0.min(q);
                a.1 = a.1.max(q);
            }
        };
        for k in g.defined_nodes() {
            if grid.pos(k).dist(z) < r {
                let v = g.value(k);
                scale = scale.max(v.norm());
                fold(&mut inner, v);
            }
        }
        let mut complete = true;
        for q in 0..SAMPLES {
            let y = z + Vec2::from_angle(std::f64::consts::TAU * q as f64 / SAMPLES as f64) * r;
            match g.interpolate(y) {
                Ok(v) => {
                    scale = scale.max(v.norm());
                    fold(&mut outer, v);
                }
                Err(_) => complete = false,
            }
        }
        if !complete {
            continue;
        }
        let slack = 4.0 * h * scale;
        let excess = (0..3)
            .map(|i| (inner[i].1 - outer[i].1).max(outer[i].0 - inner[i].0))
            .fold(f64::NEG_INFINITY, f64::max);
        margins.push(slack - excess);
    }
    CheckReport::from_margins("monotonicity", &margins, 1.0).with_seed(seed)
}

/// Midpoint concavity `u((a+b)/2) >= ½(u(a) + u(b)) - 4h` on random segments
/// whose endpoints and midpoint are unmasked. Passes at ≥ 99% of trials.
pub fn concavity_check(field: &ScalarField, trials: usize, seed: u64) -> CheckReport {
    let grid = field.grid();
    let ring = grid.ring();
    let h = grid.h();
    let mask = grid.default_mask();
    let (lo, hi) = ring.outer().bounding_box();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| loop {
        let x = Vec2::new(rng.gen_range(lo.x..hi.x), rng.gen_range(lo.y..hi.y));
        if mask.contains_point(ring, x) {
            break x;
        }
    };
    let mut margins = Vec::with_capacity(trials);
    let mut attempts = 0usize;
    while margins.len() < trials && attempts < 100 * trials.max(1) {
        attempts += 1;
        let a = draw(&mut rng);
        let b = draw(&mut rng);
        let m = (a + b) * 0.5;
        if !mask.contains_point(ring, m) {
            continue;
        }
        let (Ok(ua), Ok(ub), Ok(um)) = (field.interpolate(a), field.interpolate(b), field.interpolate(m)) else {
            continue;
        };
        margins.push(um - 0.5 * (ua + ub) + 4.0 * h);
    }
    let mut r = CheckReport::from_margins("concavity", &margins, 0.99).with_seed(seed);
    r.stat("slack", 4.0 * h);
    r
}

/// Annulus `r_min <= |x - center| <= r_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnularWindow {
    pub center: Vec2,
    pub r_min: f64,
    pub r_max: f64,
}

impl AnnularWindow {
    /// The annulus around the inner set's anchor between `0.2 s` and `0.7 s`
    /// beyond the inner set, `s` the ring's separation. On the square/point
    /// ring this is `0.1 <= |x - (½, ½)| <= 0.35`.
    pub fn around_inner(ring: &ConvexRing) -> Self {
        let center = ring.inner().anchor();
        let reach = inner_reach(ring.inner(), center);
        let s = ring.separation();
        Self { center, r_min: reach + 0.2 * s, r_max: reach + 0.7 * s }
    }

    pub fn contains(&self, x: Vec2) -> bool {
        let d = x.dist(self.center);
        d >= self.r_min && d <= self.r_max
    }
}

/// `sup_W |Du_p - Du_∞|` along increasing `p` must be nonincreasing within
/// 5%, and the last value at most `0.05 · max_W |Du_∞|`.
pub fn c1_trend_check(u_inf: &ScalarField, u_p: &[(f64, &ScalarField)], window: AnnularWindow) -> CheckReport {
    let grid = u_inf.grid();
    let mask = grid.default_mask();
    let g_inf = gradient(u_inf);
    let nodes: Vec<usize> = mask
        .nodes()
        .filter(|&k| g_inf.is_defined(k) && window.contains(grid.pos(k)))
        .collect();
    let peak = nodes.iter().map(|&k| g_inf.value(k).norm()).fold(0.0, f64::max);
    let sups: Vec<(f64, f64)> = u_p
        .iter()
        .map(|(p, f)| {
            let g = gradient(f);
            let s = nodes
                .iter()
                .filter_map(|&k| g.get(k).map(|v| (v - g_inf.value(k)).norm()))
                .fold(0.0, f64::max);
            (*p, s)
        })
        .collect();
    let mut parts: Vec<CheckReport> = sups
        .windows(2)
        .map(|w| {
            let bound = 1.05 * w[0].1;
            CheckReport::condition(format!("nonincreasing_{}_{}", w[0].0, w[1].0), w[1].1 <= bound, bound - w[1].1)
        })
        .collect();
    if let Some(&(p, last)) = sups.last() {
        let bound = 0.05 * peak;
        parts.push(CheckReport::condition(format!("final_p_{p}"), last <= bound, bound - last));
    }
    let mut r = CheckReport::all_of("c1_trend", parts);
    for (p, s) in &sups {
        r.stat(&format!("sup_p_{p}"), *s);
    }
    r.stat("max_grad_inf", peak).stat("window_nodes", nodes.len() as f64);
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks;
    use crate::grid::{build_grid, NodeClass};
    use crate::p_solver::{solve_p, PSolverConfig};

    fn cone_disk(n: f64) -> ScalarField {
        let grid = build_grid(&benchmarks::punctured_disk(), 1.0 / n).unwrap();
        ScalarField::potential_from_fn(grid, |p| 1.0 - p.norm())
    }

    fn annulus_cone(n: f64) -> ScalarField {
        let grid = build_grid(&benchmarks::annulus(), 1.0 / n).unwrap();
        ScalarField::potential_from_fn(grid, |p| 2.0 * (1.0 - p.norm()))
    }

    #[test]
    fn grad_alpha_of_cones() {
        let cone = cone_disk(64.0);
        let mask = cone.grid().default_mask();
        for alpha in [0.0, 1.0, -2.0] {
            let ga = grad_alpha(&cone, alpha);
            let expect = if alpha == 0.0 { 0.0 } else { 1.0 };
            for k in mask.nodes().filter(|&k| cone.grid().pos(k).norm() >= 0.25) {
                assert!((ga.value(k) - expect).abs() < 5e-3, "alpha {alpha}: {} at {:?}", ga.value(k), cone.grid().pos(k));
            }
        }
        let ann = annulus_cone(64.0);
        let ga = grad_alpha(&ann, 2.0);
        for k in ann.grid().default_mask().nodes() {
            assert!((ga.value(k) - 4.0).abs() < 1e-2);
        }
    }

    #[test]
    fn grad_alpha_reciprocity() {
        let grid = build_grid(&benchmarks::square_point(), 1.0 / 32.0).unwrap();
        let f = ScalarField::from_fn(grid, |p| (p.x * 3.0).sin() + p.y * p.y);
        let (a, b) = (grad_alpha(&f, 1.7), grad_alpha(&f, -1.7));
        for k in a.defined_nodes() {
            assert!((a.value(k) * b.value(k) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sobolev_of_cone_is_zero() {
        let cone = cone_disk(128.0);
        let est = sobolev_seminorm(&cone, Vec2::new(0.5, 0.0), 0.15, 2.0).unwrap();
        assert!(est.lhs < 1e-6 && est.ratio < 1e-6, "{est:?}");
        assert!(sobolev_seminorm(&cone, Vec2::new(0.5, 0.0), 0.01, 2.0).is_err());
        assert!(sobolev_seminorm(&cone, Vec2::new(0.8, 0.0), 0.15, 2.0).is_err());
    }

    #[test]
    fn sobolev_of_bowl_matches_quadrature_oracle() {
        let grid = build_grid(&benchmarks::punctured_disk(), 1.0 / 128.0).unwrap();
        let bowl = ScalarField::from_fn(grid.clone(), |p| p.norm2());
        let (z, r) = (Vec2::new(0.5, 0.0), 0.15);
        let est = sobolev_seminorm(&bowl, z, r, 1.0).unwrap();
        let lhs = ball_integral(&ScalarField::from_fn(grid.clone(), |_| 4.0), z, 0.5 * r);
        let rhs = ball_integral(&ScalarField::from_fn(grid.clone(), |p| 4.0 * p.norm2()), z, r) / (r * r);
        assert!((est.lhs / lhs - 1.0).abs() < 1e-3, "{} vs {lhs}", est.lhs);
        assert!((est.rhs / rhs - 1.0).abs() < 1e-3, "{} vs {rhs}", est.rhs);
        assert!((est.ratio / (lhs / rhs) - 1.0).abs() < 2e-3);
    }

    #[test]
    fn eic_of_p_potential_matches_closed_form() {
        let grid = build_grid(&benchmarks::punctured_disk(), 1.0 / 128.0).unwrap();
        let (u, _) = solve_p(&grid, &PSolverConfig::new(4.0)).unwrap();
        let e = eic_residual(&u);
        let k = grid.nearest_node(Vec2::new(0.5, 0.0));
        let beta: f64 = 2.0 / 3.0;
        let exact = beta * (1.0 - beta) * 0.5f64.powf(beta - 2.0);
        assert!((e.value(k).abs() / exact - 1.0).abs() < 0.1, "{} vs {exact}", e.value(k));
        let cone = cone_disk(128.0);
        let ec = eic_residual(&cone);
        let h = cone.grid().h();
        for k in cone.grid().default_mask().nodes() {
            if cone.grid().pos(k).norm() >= 0.2 {
                assert!(ec.value(k).abs() < h, "{}", ec.value(k));
            }
        }
    }

    #[test]
    fn structural_analytic_suite() {
        for n in [2, 3] {
            let f = AnalyticFunction::neg_square(n).unwrap();
            let r = structural_inequality_check(Subject::Analytic(&f), Sampling::new(500, 5));
            assert!(r.pass, "n={n}: {r:?}");
            if n == 2 {
                assert!(r.stats["max_abs_gap"] <= 1e-9);
            } else {
                assert!(r.worst_margin > 0.0);
            }
        }
    }

    #[test]
    fn divergence_analytic_suite() {
        for f in [
            AnalyticFunction::neg_square(2).unwrap(),
            AnalyticFunction::neg_square(3).unwrap(),
            AnalyticFunction::radial("gauss", 3, Profile::Gaussian).unwrap(),
        ] {
            let r = divergence_formula_check(Subject::Analytic(&f), Sampling::new(500, 9));
            assert!(r.pass && r.fraction == 1.0, "{}: {r:?}", f.name);
        }
    }

    #[test]
    fn gradient_bounds_on_cones_and_plateau() {
        assert!(gradient_bounds_check(&cone_disk(64.0)).pass);
        let ann = gradient_bounds_check(&annulus_cone(64.0));
        assert!(ann.pass && ann.part("upper_point").is_none());
        let grid = build_grid(&benchmarks::punctured_disk(), 1.0 / 64.0).unwrap();
        let plateau = ScalarField::potential_from_fn(grid, |p| {
            let r = p.norm();
            if r < 0.75 { 0.5 } else { 2.0 * (1.0 - r) }
        });
        let r = gradient_bounds_check(&plateau);
        assert!(!r.part("lower_diameter").unwrap().pass);
    }

    #[test]
    fn hessian_budget_on_cone_and_saddle() {
        let cone = cone_disk(128.0);
        let r = hessian_budget_check(&cone, &[(Vec2::new(0.5, 0.0), 0.2)]);
        assert!(r.pass);
        assert!(r.stats["window_0_l1"] > 0.0);
        // In the plane the inequality holds for every C² function; the saddle
        // xy satisfies it with |D|Du|| = 1 carrying the bound.
        let grid = cone.grid().clone();
        let saddle = ScalarField::from_fn(grid, |p| p.x * p.y);
        assert!(hessian_budget_check(&saddle, &[]).pass);
    }

    #[test]
    fn stability_ratio() {
        assert!(cross_p_stability_check("s", &[(8.0, 1.0), (16.0, 1.5), (32.0, 1.9)], 2.0).pass);
        assert!(!cross_p_stability_check("s", &[(8.0, 1.0), (16.0, 2.5)], 2.0).pass);
    }

    #[test]
    fn monotonicity_on_cone_and_bowl() {
        let cone = cone_disk(64.0);
        assert!(monotonicity_check(&cone, 20, 4).pass);
        let grid = cone.grid().clone();
        let z0 = Vec2::new(0.4, 0.1);
        let bowl = ScalarField::from_fn(grid, |p| -(p - z0).norm2());
        let r = monotonicity_check(&bowl, 40, 4);
        assert!(!r.pass, "{r:?}");
    }

    #[test]
    fn concavity_of_cone_and_affine() {
        let cone = cone_disk(64.0);
        assert!(concavity_check(&cone, 1000, 2).fraction >= 0.99);
        let grid = build_grid(&benchmarks::square_point(), 1.0 / 64.0).unwrap();
        let affine = ScalarField::from_fn(grid, |p| 0.2 * p.x + 0.1 * p.y);
        assert_eq!(concavity_check(&affine, 1000, 2).fraction, 1.0);
    }

    #[test]
    fn structural_field_reports_planar_gap() {
        let grid = build_grid(&benchmarks::square_point(), 1.0 / 32.0).unwrap();
        let f = ScalarField::from_fn(grid.clone(), |p| -(p - Vec2::new(0.5, 0.5)).norm2());
        let r = structural_inequality_check(Subject::Field(&f), Sampling::new(10_000, 1));
        assert!(r.pass);
        assert!(r.stats["max_abs_gap"] < 1e-9);
        assert!(grid.count(NodeClass::Interior) > 0);
    }
}
