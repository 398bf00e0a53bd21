//! p-harmonic potentials by lagged-diffusivity relaxation.
//!
//! The discrete operator is the variational 5-point scheme
//!
//! ```text
//! (div w Du)(a) ≈ Σ_b w_ab (u_b - u_a) / h²,   w_ab = (|Du|² + ε²)^((p-2)/2)
//! ```
//!
//! with `|Du|` evaluated at the edge midpoint (normal difference across the
//! edge, tangential central differences averaged from both end nodes). Each
//! node is relaxed with the weights frozen at the current iterate. The plain
//! lagged update `Σ w (u_b - u_a) / Σ w` overshoots by a factor `p - 2` along
//! the gradient direction, so the step is divided by the local derivative of
//! the edge fluxes, `Σ w (1 + (p-2) cos²θ)`, and over-relaxed in Gauss-Seidel
//! mode. The fixed point is the same in every mode.

use std::sync::Arc;
use std::time::Instant;

use crate::geometry::Vec2;
use crate::geometry::{convex_hull, ConvexShape};
use crate::grid::{build_grid, hessian, Grid, NodeClass, ScalarField};
use crate::report::CheckReport;
use crate::{Error, Result, SolveStats};

/// Largest accepted exponent; beyond it use the infinity solver.
pub const MAX_P: f64 = 256.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sweep {
    Jacobi,
    GaussSeidel,
}

#[derive(Debug, Clone)]
pub struct PSolverConfig {
    pub p: f64,
    /// Gradient regularization, relative to `1 / diam(outer)`.
    pub eps_reg: f64,
    /// Stopping tolerance on the sup-norm of the lagged-diffusivity update.
    pub tol: f64,
    pub max_iter: usize,
    pub sweep: Sweep,
    /// Over-relaxation factor; `None` picks one from the grid size.
    pub relaxation: Option<f64>,
    /// Warm start; `None` starts from the harmonic (p = 2) solution.
    pub initial: Option<ScalarField>,
}

impl PSolverConfig {
    pub fn new(p: f64) -> Self {
        Self {
            p,
            eps_reg: 1e-8,
            tol: 1e-8,
            max_iter: 1_000_000,
            sweep: Sweep::GaussSeidel,
            relaxation: None,
            initial: None,
        }
    }

    /// Linear (p = 2) mode, used for the harmonic initial iterate and for tests.
    pub fn laplace() -> Self {
        Self::new(2.0)
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_sweep(mut self, sweep: Sweep) -> Self {
        self.sweep = sweep;
        self
    }

    pub fn with_initial(mut self, initial: ScalarField) -> Self {
        self.initial = Some(initial);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p >= 2.0 && self.p <= MAX_P) {
            return Err(Error::Config(format!("p must lie in (2, {MAX_P}], got {}", self.p)));
        }
        if !(self.eps_reg > 0.0) {
            return Err(Error::Config("eps_reg must be positive".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config("tol must be positive".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be positive".into()));
        }
        if let Some(w) = self.relaxation {
            if !(w > 0.0 && w < 2.0) {
                return Err(Error::Config(format!("relaxation must lie in (0, 2), got {w}")));
            }
        }
        Ok(())
    }
}

/// Flux evaluation shared by the solver and the residual audits.
///
/// Edges from an interior node to a Dirichlet node are shortened to the
/// boundary crossing (Shortley-Weller), so curved boundaries are seen at
/// their true position instead of the nearest lattice node.
struct Stencil {
    /// Edge lengths in units of `h`, ordered E, W, N, S.
    theta: Vec<[f64; 4]>,
    interior: Vec<bool>,
    nx: usize,
    inv_h: f64,
    half_pm2: f64,
    eps2: f64,
}

struct NodeFlux {
    /// Σ c w (u_b - u_a), weights scaled so the largest equals 1.
    sum: f64,
    /// Σ c w.
    wsum: f64,
    /// Σ c w (1 + (p-2) cos²θ), the derivative of the flux sum in u_a.
    dsum: f64,
    /// log of the common weight scale.
    log_scale: f64,
}

/// Fraction of the segment `a -> b` travelled before crossing the boundary
/// of the shape whose signed distance changes sign along it.
fn crossing(shape: &ConvexShape, a: Vec2, b: Vec2) -> f64 {
    let f = |t: f64| shape.signed_distance(a + (b - a) * t);
    let fa = f(0.0);
    if f(1.0).signum() == fa.signum() && f(1.0) != 0.0 {
        return 1.0;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if f(mid).signum() == fa.signum() && f(mid) != 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

const MIN_THETA: f64 = 1e-3;

impl Stencil {
    fn new(grid: &Grid, p: f64, eps: f64) -> Self {
        let nx = grid.nx();
        let ring = grid.ring();
        let interior: Vec<bool> = (0..grid.len()).map(|k| grid.class(k) == NodeClass::Interior).collect();
        let theta = (0..grid.len())
            .map(|a| {
                let mut t = [1.0; 4];
                if !interior[a] {
                    return t;
                }
                let pa = grid.pos(a);
                for (q, b) in [a + 1, a - 1, a + nx, a - nx].into_iter().enumerate() {
                    let pb = grid.pos(b);
                    t[q] = match grid.class(b) {
                        NodeClass::DirichletInner if !ring.inner_is_point() => crossing(ring.inner(), pa, pb),
                        NodeClass::DirichletOuter => crossing(ring.outer(), pa, pb),
                        _ => 1.0,
                    }
                    .max(MIN_THETA);
                }
                t
            })
            .collect();
        Self {
            theta,
            interior,
            nx,
            inv_h: 1.0 / grid.h(),
            half_pm2: 0.5 * (p - 2.0),
            eps2: eps * eps,
        }
    }

    /// Derivative at interior node `m` along x (`vertical_edge`) or y.
    #[inline]
    fn tangential(&self, u: &[f64], m: usize, vertical_edge: bool) -> f64 {
        let t = &self.theta[m];
        if vertical_edge {
            (u[m + 1] - u[m - 1]) * self.inv_h / (t[0] + t[1])
        } else {
            (u[m + self.nx] - u[m - self.nx]) * self.inv_h / (t[2] + t[3])
        }
    }

    #[inline]
    fn flux(&self, u: &[f64], a: usize) -> NodeFlux {
        let nx = self.nx;
        // (neighbour, edge is vertical i.e. along y)
        let edges = [(a + 1, false), (a - 1, false), (a + nx, true), (a - nx, true)];
        let th = &self.theta[a];
        let mut logw = [0.0f64; 4];
        let mut diff = [0.0f64; 4];
        let mut frac = [0.0f64; 4];
        let mut top = f64::NEG_INFINITY;
        for (q, &(b, vertical)) in edges.iter().enumerate() {
            let d = u[b] - u[a];
            let gn = d * self.inv_h / th[q];
            let ta = self.tangential(u, a, vertical);
            let gt = if self.interior[b] {
                0.5 * (ta + self.tangential(u, b, vertical))
            } else {
                ta
            };
            let s = gn * gn + gt * gt + self.eps2;
            // Nonuniform second difference: 2 / (θ_q (θ_q + θ_opposite)).
            let c = 2.0 / (th[q] * (th[q] + th[q ^ 1]));
            diff[q] = d;
            frac[q] = gn * gn / s;
            logw[q] = if self.half_pm2 == 0.0 { 0.0 } else { self.half_pm2 * s.ln() };
            logw[q] += c.ln();
            top = top.max(logw[q]);
        }
        let mut out = NodeFlux {
            sum: 0.0,
            wsum: 0.0,
            dsum: 0.0,
            log_scale: top,
        };
        let pm2 = 2.0 * self.half_pm2;
        for q in 0..4 {
            let w = (logw[q] - top).exp();
            out.sum += w * diff[q];
            out.wsum += w;
            out.dsum += w * (1.0 + pm2 * frac[q]);
        }
        out
    }
}

fn interior_nodes(grid: &Grid) -> Vec<usize> {
    grid.nodes_of(NodeClass::Interior).collect()
}

fn auto_relaxation(grid: &Grid) -> f64 {
    let n = grid.nx().max(grid.ny()) as f64;
    2.0 / (1.0 + (std::f64::consts::PI / n).sin() * 1.5)
}

/// Solves `div(|Du|^(p-2) Du) = 0` with `u = 0` on the outer layer and `u = 1`
/// on the inner set.
pub fn solve_p(grid: &Arc<Grid>, config: &PSolverConfig) -> Result<(ScalarField, SolveStats)> {
    config.validate()?;
    let start = Instant::now();
    let mut u: Vec<f64> = match &config.initial {
        Some(init) => {
            if !Arc::ptr_eq(init.grid(), grid) && init.grid().len() != grid.len() {
                return Err(Error::Config("initial field lives on a different grid".into()));
            }
            init.values().to_vec()
        }
        None if config.p > 2.0 => {
            let harmonic = PSolverConfig::laplace().with_tol(config.tol.max(1e-7));
            solve_p(grid, &harmonic)?.0.values().to_vec()
        }
        None => vec![0.0; grid.len()],
    };
    for k in 0..grid.len() {
        match grid.class(k) {
            NodeClass::DirichletOuter | NodeClass::Exterior => u[k] = 0.0,
            NodeClass::DirichletInner => u[k] = 1.0,
            NodeClass::Interior => u[k] = u[k].clamp(0.0, 1.0),
        }
    }

    let eps = config.eps_reg / grid.ring().diam();
    let stencil = Stencil::new(grid, config.p, eps);
    let nodes = interior_nodes(grid);
    let omega = config.relaxation.unwrap_or(match config.sweep {
        Sweep::GaussSeidel => auto_relaxation(grid),
        Sweep::Jacobi => 1.0,
    });

    let mut stats = SolveStats::default();
    let mut scratch = vec![0.0; grid.len()];
    let mut converged = false;
    for iter in 0..config.max_iter {
        let mut max_update: f64 = 0.0;
        match config.sweep {
            Sweep::GaussSeidel => {
                let mut relax = |a: usize, u: &mut Vec<f64>| {
                    let f = stencil.flux(u, a);
                    max_update = max_update.max((f.sum / f.wsum).abs());
                    u[a] = (u[a] + omega * f.sum / f.dsum).clamp(0.0, 1.0);
                };
                if iter % 2 == 0 {
                    for &a in &nodes {
                        relax(a, &mut u);
                    }
                } else {
                    for &a in nodes.iter().rev() {
                        relax(a, &mut u);
                    }
                }
            }
            Sweep::Jacobi => {
                scratch.copy_from_slice(&u);
                for &a in &nodes {
                    let f = stencil.flux(&u, a);
                    max_update = max_update.max((f.sum / f.wsum).abs());
                    scratch[a] = (u[a] + omega * f.sum / f.dsum).clamp(0.0, 1.0);
                }
                std::mem::swap(&mut u, &mut scratch);
            }
        }
        stats.iterations = iter + 1;
        stats.final_update = max_update;
        if !max_update.is_finite() {
            break;
        }
        if max_update < config.tol {
            let audit = nodes
                .iter()
                .map(|&a| {
                    let f = stencil.flux(&u, a);
                    (f.sum / f.wsum).abs()
                })
                .fold(0.0, f64::max);
            stats.final_residual = audit;
            if audit < config.tol {
                converged = true;
                break;
            }
        }
    }
    stats.wall_time_s = start.elapsed().as_secs_f64();
    if !converged {
        return Err(Error::NoConvergence { stats });
    }
    let mut defined = vec![true; grid.len()];
    for (k, d) in defined.iter_mut().enumerate() {
        *d = grid.class(k) != NodeClass::Exterior;
    }
    Ok((ScalarField::new(grid.clone(), u, defined), stats))
}

/// Convenience: build the grid and solve.
pub fn solve_p_on(ring: &crate::ConvexRing, h: f64, config: &PSolverConfig) -> Result<(ScalarField, SolveStats)> {
    let grid = build_grid(ring, h)?;
    solve_p(&grid, config)
}

/// Solves a sequence of exponents, warm-starting each from the previous one.
pub fn solve_p_sequence(grid: &Arc<Grid>, ps: &[f64], base: &PSolverConfig) -> Result<Vec<(ScalarField, SolveStats)>> {
    let mut out: Vec<(ScalarField, SolveStats)> = Vec::with_capacity(ps.len());
    for &p in ps {
        let mut cfg = base.clone();
        cfg.p = p;
        if cfg.initial.is_none() || !out.is_empty() {
            cfg.initial = out.last().map(|(f, _)| f.clone()).or(cfg.initial);
        }
        out.push(solve_p(grid, &cfg)?);
    }
    Ok(out)
}

/// Discrete `div(|Du|^(p-2) Du)` at interior nodes (no regularization).
pub fn residual_p(field: &ScalarField, p: f64) -> ScalarField {
    let grid = field.grid().clone();
    let stencil = Stencil::new(&grid, p, 0.0);
    let u = field.values();
    let h2 = grid.h() * grid.h();
    let mut out = ScalarField::undefined(grid.clone());
    for a in interior_nodes(&grid) {
        let f = stencil.flux(u, a);
        let v = if f.log_scale.is_finite() {
            f.sum * f.log_scale.exp() / h2
        } else {
            0.0
        };
        out.set(a, v);
    }
    out
}

/// Residual in the solver's scaling: the lagged-diffusivity update
/// `Σ w (u_b - u_a) / Σ w` with the solver's regularization.
pub fn weighted_residual_p(field: &ScalarField, p: f64, eps_reg: f64) -> ScalarField {
    let grid = field.grid().clone();
    let stencil = Stencil::new(&grid, p, eps_reg / grid.ring().diam());
    let u = field.values();
    let mut out = ScalarField::undefined(grid.clone());
    for a in interior_nodes(&grid) {
        let f = stencil.flux(u, a);
        out.set(a, f.sum / f.wsum);
    }
    out
}

/// Values in `[0, 1]` everywhere and strictly inside `(0, 1)` at interior nodes.
pub fn max_principle_check(field: &ScalarField) -> CheckReport {
    let grid = field.grid();
    let slack = 1e-12;
    let margins: Vec<f64> = field
        .defined_nodes()
        .map(|k| {
            let v = field.value(k);
            if grid.class(k) == NodeClass::Interior {
                v.min(1.0 - v) - slack
            } else {
                v.min(1.0 - v) + slack
            }
        })
        .collect();
    CheckReport::from_margins("max_principle", &margins, 1.0)
}

/// Superharmonicity: `-Δu >= -h` at ≥ 99% of unmasked nodes.
pub fn laplacian_sign_check(field: &ScalarField) -> CheckReport {
    let grid = field.grid();
    let mask = grid.default_mask();
    let hs = hessian(field);
    let slack = grid.h();
    let margins: Vec<f64> = mask
        .nodes()
        .filter_map(|k| hs.get(k))
        .map(|m| -m.trace() + slack)
        .collect();
    let mut r = CheckReport::from_margins("laplacian_sign", &margins, 0.99);
    r.stat("slack", slack);
    r
}

/// Compares each super-level node set `{u > t} ∪ inner` with its convex hull.
/// Passes when the fraction of hull nodes below the level is ≤ 1% for every `t`.
pub fn quasiconcavity_check(field: &ScalarField, levels: &[f64]) -> CheckReport {
    let limit = 0.01;
    let parts = levels
        .iter()
        .map(|&t| {
            let ratio = hull_deficiency_nodes(field, t);
            let mut r = CheckReport::condition(format!("level_{t}"), ratio <= limit, limit - ratio);
            r.stat("level", t).stat("deficiency", ratio);
            r
        })
        .collect();
    CheckReport::all_of("quasiconcavity", parts)
}

/// Fraction of defined nodes inside the hull of `{u > t} ∪ inner` with `u <= t`.
pub fn hull_deficiency_nodes(field: &ScalarField, t: f64) -> f64 {
    let grid = field.grid();
    let above: Vec<Vec2> = field
        .defined_nodes()
        .filter(|&k| field.value(k) > t || grid.class(k) == NodeClass::DirichletInner)
        .map(|k| grid.pos(k))
        .collect();
    let hull = convex_hull(&above);
    if hull.len() < 3 {
        return 0.0;
    }
    let tol = 1e-12 * grid.ring().diam();
    let (mut inside, mut below) = (0usize, 0usize);
    for k in field.defined_nodes() {
        if crate::geometry::hull_signed_distance(&hull, grid.pos(k)) <= tol {
            inside += 1;
            if field.value(k) <= t && grid.class(k) != NodeClass::DirichletInner {
                below += 1;
            }
        }
    }
    below as f64 / inside.max(1) as f64
}
