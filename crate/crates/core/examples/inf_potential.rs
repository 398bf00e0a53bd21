//! Solves the infinity-potential of the annulus and runs the solver audits.

use ringpot::benchmarks::{annulus, closed_form_check, RadialPotential, Region};
use ringpot::{build_grid, Vec2};
use ringpot::inf_solver::{comparison_with_cones_check, mvp_residual, solve_inf, InfSolverConfig};

fn main() -> ringpot::Result<()> {
    let ring = annulus();
    let grid = build_grid(&ring, 1.0 / 64.0)?;
    let (u, stats) = solve_inf(&grid, &InfSolverConfig::default())?;
    println!("{} sweeps, final update {:.2e}", stats.iterations, stats.final_update);
    let exact = RadialPotential::for_ring(&ring, None).expect("radial ring");
    let cf = closed_form_check("cone", &u, &exact, 3.0 * grid.h(), Region::Unmasked);
    println!("sup |u - 2(1 - |x|)| = {:.5} (pass {})", cf.stats["sup_error"], cf.pass);
    let cones = comparison_with_cones_check(&u, 100, 1);
    println!("comparison with cones: fraction {:.3}", cones.fraction);
    for eps in [0.1, 0.0625] {
        let r = mvp_residual(&u, Vec2::new(0.0, 0.75), eps)?;
        println!("mean-value residual at (0, 0.75), eps = {eps}: {r:.2e}");
    }
    Ok(())
}
