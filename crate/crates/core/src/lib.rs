//! Infinity- and p-harmonic potentials on planar convex rings.
//!
//! A convex ring is `Ω = Ω₀ \ Ω̄₁` with `Ω₀` a convex disk or polygon and
//! `Ω̄₁ ⊂ Ω₀` a convex disk, polygon or single point. The potential is 0 on
//! `∂Ω₀` and 1 on `Ω̄₁`. The crate provides
//!
//! * grid solvers for the p-Laplacian ([`p_solver`]) and the ∞-Laplacian
//!   ([`inf_solver`]),
//! * derived fields and pointwise-inequality checks ([`field_analysis`]),
//! * gradient streamlines ([`streamline`]) and level-set metamorphosis
//!   ([`morph`]),
//! * a command-line front end ([`cli`]).
//!
//! ```
//! use ringpot::{benchmarks, build_grid, inf_solver::{solve_inf, InfSolverConfig}};
//!
//! let ring = benchmarks::punctured_disk();
//! let grid = build_grid(&ring, 1.0 / 16.0).unwrap();
//! let (u, stats) = solve_inf(&grid, &InfSolverConfig::default()).unwrap();
//! assert!(stats.iterations > 0);
//! assert!(u.values().iter().all(|v| (0.0..=1.0).contains(v)));
//! ```

pub mod benchmarks;
pub mod cli;
pub mod error;
pub mod field_analysis;
pub mod geometry;
pub mod grid;
pub mod inf_solver;
pub mod morph;
pub mod p_solver;
pub mod report;
pub mod streamline;

use serde::{Deserialize, Serialize};

pub use error::{Error, Result};
pub use geometry::{ConvexPolygon, ConvexRing, ConvexShape, Location, RayHit, RingSpec, ShapeSpec, Vec2};
pub use grid::{build_grid, build_grid_with, Grid, GridOptions, NodeClass, ScalarField, VectorField};
pub use report::{BoundReport, CheckReport};

/// Iteration statistics returned by both solvers.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub iterations: usize,
    /// Sup-norm of the last sweep's update.
    pub final_update: f64,
    /// Sup-norm of the audit sweep's update at the returned field.
    pub final_residual: f64,
    #[serde(skip)]
    pub wall_time_s: f64,
}

/// Which potential to compute: the p-harmonic one for a finite `p > 2`, or
/// the ∞-harmonic one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum SolverChoice {
    P(f64),
    Inf,
}

impl SolverChoice {
    /// Parses `inf` or a real `p > 2`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("inf") || s.eq_ignore_ascii_case("infinity") {
            return Ok(SolverChoice::Inf);
        }
        let p: f64 = s.parse().map_err(|_| Error::Config(format!("p must be a real number or 'inf', got '{s}'")))?;
        if !(p > 2.0 && p.is_finite()) {
            return Err(Error::Config(format!("p must be greater than 2, got {p}")));
        }
        Ok(SolverChoice::P(p))
    }

    /// Solves on `grid` with the default configuration of the chosen solver.
    pub fn solve(&self, grid: &std::sync::Arc<Grid>) -> Result<(ScalarField, SolveStats)> {
        match *self {
            SolverChoice::P(p) => p_solver::solve_p(grid, &p_solver::PSolverConfig::new(p)),
            SolverChoice::Inf => inf_solver::solve_inf(grid, &inf_solver::InfSolverConfig::default()),
        }
    }
}

impl std::fmt::Display for SolverChoice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SolverChoice::P(p) => write!(f, "{p}"),
            SolverChoice::Inf => f.write_str("inf"),
        }
    }
}

impl From<SolverChoice> for String {
    fn from(s: SolverChoice) -> String {
        s.to_string()
    }
}

impl TryFrom<String> for SolverChoice {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        SolverChoice::parse(&s)
    }
}
