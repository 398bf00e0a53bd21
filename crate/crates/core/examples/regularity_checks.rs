//! Runs the pointwise inequality suites on a solved u_8.

use ringpot::benchmarks::square_point;
use ringpot::build_grid;
use ringpot::field_analysis::{
    divergence_formula_check, gradient_bounds_check, hessian_budget_check, hessian_window, median_abs_eic,
    monotonicity_check, structural_inequality_check, Sampling, Subject,
};
use ringpot::p_solver::{solve_p, PSolverConfig};

fn main() -> ringpot::Result<()> {
    let ring = square_point();
    let grid = build_grid(&ring, 1.0 / 64.0)?;
    let (u, _) = solve_p(&grid, &PSolverConfig::new(8.0))?;
    let reports = [
        structural_inequality_check(Subject::Field(&u), Sampling::new(10_000, 1)),
        divergence_formula_check(Subject::Field(&u), Sampling::new(10_000, 1)),
        gradient_bounds_check(&u),
        hessian_budget_check(&u, &[hessian_window(&ring)]),
        monotonicity_check(&u, 20, 1),
    ];
    for r in &reports {
        println!("{:<22} pass={} fraction={:.4} samples={}", r.name, r.pass, r.fraction, r.samples);
    }
    println!("median |normalized inf-Laplacian| = {:.4}", median_abs_eic(&u));
    Ok(())
}
