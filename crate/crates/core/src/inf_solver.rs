//! ∞-harmonic potentials by the midrange (Oberman) iteration
//! `u(x) <- ½ (max_B u + min_B u)` over a discrete ball `B` of lattice nodes.
//!
//! The ball has radius `k·h`, except that near the boundary it is shrunk to
//! the distance to the boundary. A shrunk ball touches the boundary, where
//! it sees the boundary value exactly, so the scheme stays consistent all the
//! way to the boundary.

use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::Vec2;
use crate::grid::{build_grid, Grid, NodeClass, ScalarField};
use crate::p_solver::{self, PSolverConfig, Sweep};
use crate::report::CheckReport;
use crate::{Error, Result, SolveStats};

#[derive(Debug, Clone)]
pub struct InfSolverConfig {
    pub stencil_radius_cells: usize,
    /// Interpolated samples on each ball's boundary circle.
    pub directions: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub sweep: Sweep,
    /// Warm start; `None` starts from the solution on the grid of spacing
    /// `2h` when that grid resolves the ring, else from the harmonic solution.
    pub initial: Option<ScalarField>,
}

impl Default for InfSolverConfig {
    fn default() -> Self {
        Self {
            stencil_radius_cells: 3,
            directions: 32,
            tol: 1e-9,
            max_iter: 10_000_000,
            sweep: Sweep::GaussSeidel,
            initial: None,
        }
    }
}

impl InfSolverConfig {
    pub fn with_radius(mut self, k: usize) -> Self {
        self.stencil_radius_cells = k;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_sweep(mut self, sweep: Sweep) -> Self {
        self.sweep = sweep;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.stencil_radius_cells == 0 {
            return Err(Error::Config("stencil_radius_cells must be at least 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config("tol must be positive".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be positive".into()));
        }
        Ok(())
    }
}

/// The midrange of a set of stencil values.
pub fn midrange(values: &[f64]) -> f64 {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    0.5 * (lo + hi)
}

/// Samples of one ball, relative to the ball center.
struct Template {
    /// Lattice nodes on the ball's boundary circle.
    shell: Vec<isize>,
    /// Bilinear arc samples at uniform angles: lower-left corner offset and
    /// cell coordinates.
    arc: Vec<(isize, f64, f64)>,
    /// Boundary value attained where a truncated ball touches the boundary.
    touch: Option<f64>,
}

impl Template {
    fn new(rho: f64, shell: Vec<isize>, directions: usize, nx: isize, touch: Option<f64>) -> Self {
        let arc = (0..directions)
            .map(|q| {
                let phi = std::f64::consts::TAU * (q as f64 + 0.5) / directions as f64;
                let (x, y) = (rho * phi.cos(), rho * phi.sin());
                let (fi, fj) = (x.floor(), y.floor());
                (fi as isize + fj as isize * nx, x - fi, y - fj)
            })
            .collect();
        Self { shell, arc, touch }
    }
}

/// Per-node balls `B̄(x, ρ)`: `ρ = k·h` when `dist(x, ∂Ω) ≥ (k + 1.5)·h`,
/// else `ρ = dist(x, ∂Ω)`. Extremes over a ball are taken over the bilinear
/// interpolant on its boundary circle: lattice nodes on the circle and
/// `directions` arc samples. A ball of radius `dist(x, ∂Ω)` touches the
/// boundary, and the boundary value at the touching point joins the samples.
pub struct BallStencil {
    templates: Vec<Template>,
    /// Template index per node (`usize::MAX` for non-interior nodes).
    which: Vec<usize>,
    radius: Vec<f64>,
    nodes: Vec<usize>,
    nx: isize,
}

impl BallStencil {
    pub fn new(grid: &Grid, k: usize, directions: usize) -> Result<Self> {
        if directions < 3 {
            return Err(Error::Config("directions must be at least 3".into()));
        }
        let kk = (k * k) as isize;
        let ki = k as isize;
        let nx = grid.nx() as isize;
        let mut shell = Vec::new();
        for dj in -ki..=ki {
            for di in -ki..=ki {
                if di * di + dj * dj == kk {
                    shell.push(di + dj * nx);
                }
            }
        }
        let full = k as f64;
        let mut templates = vec![Template::new(full, shell, directions, nx, None)];
        let nodes: Vec<usize> = grid.nodes_of(NodeClass::Interior).collect();
        let ring = grid.ring();
        let h = grid.h();
        let mut which = vec![usize::MAX; grid.len()];
        let mut radius = vec![0.0; grid.len()];
        for &a in &nodes {
            let (i, j) = grid.ij(a);
            let x = grid.pos(a);
            let outer = ring.dist_to_outer(x).unwrap_or(0.0) / h;
            let inner = ring.dist_to_inner(x) / h;
            let rho = outer.min(inner).max(1e-3);
            // A circle passing within a cell of the boundary would interpolate
            // Dirichlet nodes that lie outside the domain; touch instead.
            if rho >= full + 1.5 {
                which[a] = 0;
                radius[a] = full;
            } else {
                let touch = if outer <= inner { 0.0 } else { 1.0 };
                which[a] = templates.len();
                radius[a] = rho;
                templates.push(Template::new(rho, Vec::new(), directions, nx, Some(touch)));
            }
            // Every arc cell must lie inside the lattice.
            let reach = radius[a].ceil() as isize + 1;
            if (i as isize) < reach
                || (j as isize) < reach
                || i as isize + reach >= grid.nx() as isize
                || j as isize + reach >= grid.ny() as isize
            {
                return Err(Error::StencilConflict { i, j });
            }
        }
        Ok(Self {
            templates,
            which,
            radius,
            nodes,
            nx,
        })
    }

    pub fn interior_nodes(&self) -> &[usize] {
        &self.nodes
    }

    /// Radius, in units of `h`, of the ball used at interior node `a`.
    pub fn radius(&self, a: usize) -> f64 {
        self.radius[a]
    }

    /// Flat offsets of the lattice nodes on the ball boundary at `a`.
    pub fn shell(&self, a: usize) -> &[isize] {
        &self.templates[self.which[a]].shell
    }

    #[inline]
    fn cell_value(&self, u: &[f64], c: usize, s: f64, r: f64) -> f64 {
        let nx = self.nx as usize;
        let bottom = u[c] + s * (u[c + 1] - u[c]);
        let top = u[c + nx] + s * (u[c + nx + 1] - u[c + nx]);
        bottom + r * (top - bottom)
    }

    #[inline]
    fn arc_value(&self, u: &[f64], a: usize, t: &Template, q: usize) -> f64 {
        let (o, s, r) = t.arc[q];
        self.cell_value(u, (a as isize + o) as usize, s, r)
    }

    /// Minimum and maximum of the interpolant over the ball at interior node `a`.
    #[inline]
    pub fn extremes(&self, u: &[f64], a: usize) -> (f64, f64) {
        let t = &self.templates[self.which[a]];
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for q in 0..t.arc.len() {
            let v = self.arc_value(u, a, t, q);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        let ai = a as isize;
        for &o in &t.shell {
            let v = u[(ai + o) as usize];
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if let Some(g) = t.touch {
            lo = lo.min(g);
            hi = hi.max(g);
        }
        (lo, hi)
    }
}

/// Solves `Δ_∞ u = 0` with `u = 0` on the outer layer and `u = 1` on the inner set.
pub fn solve_inf(grid: &Arc<Grid>, config: &InfSolverConfig) -> Result<(ScalarField, SolveStats)> {
    config.validate()?;
    let start = Instant::now();
    let stencil = BallStencil::new(grid, config.stencil_radius_cells, config.directions)?;
    let mut u: Vec<f64> = match &config.initial {
        Some(init) => {
            if init.grid().len() != grid.len() {
                return Err(Error::Config("initial field lives on a different grid".into()));
            }
            init.values().to_vec()
        }
        None => initial_iterate(grid, config)?,
    };
    for k in 0..grid.len() {
        match grid.class(k) {
            NodeClass::DirichletOuter | NodeClass::Exterior => u[k] = 0.0,
            NodeClass::DirichletInner => u[k] = 1.0,
            NodeClass::Interior => u[k] = u[k].clamp(0.0, 1.0),
        }
    }
    let nodes = stencil.interior_nodes();
    let mut stats = SolveStats::default();
    let mut scratch = u.clone();
    let mut converged = false;
    for iter in 0..config.max_iter {
        let mut max_update: f64 = 0.0;
        match config.sweep {
            Sweep::GaussSeidel => {
                let mut relax = |a: usize, u: &mut [f64]| {
                    let (lo, hi) = stencil.extremes(u, a);
                    let v = 0.5 * (lo + hi);
                    max_update = max_update.max((v - u[a]).abs());
                    u[a] = v;
                };
                if iter % 2 == 0 {
                    for &a in nodes {
                        relax(a, &mut u);
                    }
                } else {
                    for &a in nodes.iter().rev() {
                        relax(a, &mut u);
                    }
                }
            }
            Sweep::Jacobi => {
                for &a in nodes {
                    let (lo, hi) = stencil.extremes(&u, a);
                    let v = 0.5 * (lo + hi);
                    max_update = max_update.max((v - u[a]).abs());
                    scratch[a] = v;
                }
                std::mem::swap(&mut u, &mut scratch);
            }
        }
        stats.iterations = iter + 1;
        stats.final_update = max_update;
        if max_update < config.tol {
            converged = true;
            break;
        }
    }
    stats.final_residual = nodes
        .iter()
        .map(|&a| {
            let (lo, hi) = stencil.extremes(&u, a);
            (0.5 * (lo + hi) - u[a]).abs()
        })
        .fold(0.0, f64::max);
    stats.wall_time_s = start.elapsed().as_secs_f64();
    if !converged {
        return Err(Error::NoConvergence { stats });
    }
    let defined = (0..grid.len()).map(|k| grid.class(k) != NodeClass::Exterior).collect();
    Ok((ScalarField::new(grid.clone(), u, defined), stats))
}

fn initial_iterate(grid: &Arc<Grid>, config: &InfSolverConfig) -> Result<Vec<f64>> {
    let harmonic = PSolverConfig::laplace().with_tol(1e-7);
    let mut u = p_solver::solve_p(grid, &harmonic)?.0.values().to_vec();
    let coarse = match build_grid(grid.ring(), 2.0 * grid.h()) {
        Ok(g) if g.count(NodeClass::Interior) >= 1000 => g,
        _ => return Ok(u),
    };
    let Ok((cu, _)) = solve_inf(&coarse, config) else { return Ok(u) };
    for k in grid.nodes_of(NodeClass::Interior) {
        if let Ok(v) = cu.interpolate(grid.pos(k)) {
            u[k] = v;
        }
    }
    Ok(u)
}

/// One Jacobi midrange sweep applied to `field`; non-interior nodes are copied.
pub fn sweep_once(field: &ScalarField, config: &InfSolverConfig) -> Result<ScalarField> {
    let grid = field.grid();
    let stencil = BallStencil::new(grid, config.stencil_radius_cells, config.directions)?;
    let mut out = field.clone();
    let u = field.values();
    for &a in stencil.interior_nodes() {
        let (lo, hi) = stencil.extremes(u, a);
        out.set(a, 0.5 * (lo + hi));
    }
    Ok(out)
}

/// `[u(x) - ½(max u + min u)] / eps²` over the closed ball `B̄(x, eps)`,
/// sampled on circles of radius `eps` and `eps/2` (512 directions each) and at `x`.
pub fn mvp_residual(field: &ScalarField, x: Vec2, eps: f64) -> Result<f64> {
    let grid = field.grid();
    let h = grid.h();
    if !(eps >= 4.0 * h) {
        return Err(Error::Precondition(format!("eps = {eps} is below 4h = {}", 4.0 * h)));
    }
    let ring = grid.ring();
    let room = ring
        .dist_to_boundary(x)
        .map_err(|_| Error::Precondition(format!("({}, {}) is outside the outer domain", x.x, x.y)))?;
    if ring.contains(x) != crate::geometry::Location::InRing || room < eps + 2.0 * h {
        return Err(Error::Precondition(format!(
            "ball B(({}, {}), {}) is not inside the ring",
            x.x,
            x.y,
            eps + 2.0 * h
        )));
    }
    let center = field.interpolate(x)?;
    let (mut lo, mut hi) = (center, center);
    const DIRECTIONS: usize = 512;
    for r in [eps, 0.5 * eps] {
        for q in 0..DIRECTIONS {
            let theta = std::f64::consts::TAU * q as f64 / DIRECTIONS as f64;
            let v = field.interpolate(x + Vec2::from_angle(theta) * r)?;
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    Ok((center - 0.5 * (lo + hi)) / (eps * eps))
}

/// Residual scaling of the asymptotic mean-value property at random unmasked
/// points: `median |mvp_residual|` at `eps = 8h` must be finite and at most
/// twice the median at `eps = 16h`.
pub fn mean_value_check(field: &ScalarField, samples: usize, seed: u64) -> CheckReport {
    let grid = field.grid();
    let ring = grid.ring();
    let h = grid.h();
    let mask = grid.default_mask();
    let (lo, hi) = ring.outer().bounding_box();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut fine, mut coarse) = (Vec::new(), Vec::new());
    for _ in 0..1000 * samples.max(1) {
        if fine.len() == samples {
            break;
        }
        let x = Vec2::new(rng.gen_range(lo.x..hi.x), rng.gen_range(lo.y..hi.y));
        if !mask.contains_point(ring, x) {
            continue;
        }
        if let (Ok(a), Ok(b)) = (mvp_residual(field, x, 8.0 * h), mvp_residual(field, x, 16.0 * h)) {
            fine.push(a.abs());
            coarse.push(b.abs());
        }
    }
    let (m8, m16) = (crate::report::median(&fine), crate::report::median(&coarse));
    let ok = !fine.is_empty() && m8.is_finite() && m16.is_finite() && m8 <= 2.0 * m16;
    let mut r = CheckReport::condition("mean_value", ok, 2.0 * m16 - m8).with_seed(seed);
    r.samples = fine.len();
    r.stat("median_8h", m8).stat("median_16h", m16);
    r
}

/// Comparison with cones from above and from below on random sub-balls.
///
/// Each trial draws a ball `V = B(z, ρ)` inside the unmasked region and an
/// apex `x₀ ∈ V`, fits the smallest slopes `b` for which the cones
/// `u(x₀) ± b|x - x₀|` bound `u` on `∂V`, and checks the same bounds at every
/// node of `V` with slack `4h`.
pub fn comparison_with_cones_check(field: &ScalarField, trials: usize, seed: u64) -> CheckReport {
    let grid = field.grid();
    let ring = grid.ring();
    let h = grid.h();
    let mask = grid.default_mask();
    let slack = 4.0 * h;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let candidates: Vec<usize> = mask
        .nodes()
        .filter(|&k| mask.room(ring, grid.pos(k)) >= 8.0 * h)
        .collect();
    let mut margins = Vec::with_capacity(trials);
    if candidates.is_empty() {
        return CheckReport::from_margins("comparison_with_cones", &margins, 0.99)
            .with_seed(seed)
            .with_note("no ball of radius 8h fits in the unmasked region");
    }
    const BOUNDARY_SAMPLES: usize = 256;
    for _ in 0..trials {
        let z = grid.pos(candidates[rng.gen_range(0..candidates.len())]);
        let rmax = mask.room(ring, z);
        let rho = rng.gen_range((8.0 * h).min(rmax)..=rmax);
        let apex = z + Vec2::from_angle(rng.gen_range(0.0..std::f64::consts::TAU)) * (rho * rng.gen::<f64>().sqrt());
        let Ok(u0) = field.interpolate(apex) else { continue };
        let (mut b_up, mut b_down) = (0.0f64, 0.0f64);
        let mut ok = true;
        for q in 0..BOUNDARY_SAMPLES {
            let y = z + Vec2::from_angle(std::f64::consts::TAU * q as f64 / BOUNDARY_SAMPLES as f64) * rho;
            let Ok(uy) = field.interpolate(y) else {
                ok = false;
                break;
            };
            let d = y.dist(apex).max(1e-12);
            b_up = b_up.max((uy - u0) / d);
            b_down = b_down.max((u0 - uy) / d);
        }
        if !ok {
            continue;
        }
        let mut worst = f64::INFINITY;
        let (lo, hi) = (z - Vec2::new(rho, rho), z + Vec2::new(rho, rho));
        let (ci0, cj0) = grid.lattice_coords(lo);
        let (ci1, cj1) = grid.lattice_coords(hi);
        for j in cj0.ceil().max(0.0) as usize..=(cj1.floor() as usize).min(grid.ny() - 1) {
            for i in ci0.ceil().max(0.0) as usize..=(ci1.floor() as usize).min(grid.nx() - 1) {
                let k = grid.idx(i, j);
                let x = grid.pos(k);
                if x.dist(z) >= rho || !field.is_defined(k) {
                    continue;
                }
                let v = field.value(k);
                let d = x.dist(apex);
                let above = u0 + b_up * d + slack - v;
                let below = v - (u0 - b_down * d) + slack;
                worst = worst.min(above.min(below));
            }
        }
        margins.push(worst);
    }
    let mut r = CheckReport::from_margins("comparison_with_cones", &margins, 0.99).with_seed(seed);
    r.stat("slack", slack);
    r
}

/// Interior nodes whose value is within `1e-6` of 0 or 1 without touching
/// the matching Dirichlet layer. Empty for a solution obeying the strong
/// maximum principle.
pub fn plateau_nodes(field: &ScalarField) -> Vec<usize> {
    let grid = field.grid();
    let near = |k: usize, class: NodeClass| {
        let (i, j) = grid.ij(k);
        (-1..=1).any(|dj| (-1..=1).any(|di| grid.neighbor(i, j, di, dj).is_some_and(|b| grid.class(b) == class)))
    };
    grid.nodes_of(NodeClass::Interior)
        .filter(|&k| {
            let v = field.value(k);
            (v >= 1.0 - 1e-6 && !near(k, NodeClass::DirichletInner))
                || (v <= 1e-6 && !near(k, NodeClass::DirichletOuter))
        })
        .collect()
}
