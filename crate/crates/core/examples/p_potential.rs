//! Solves the p-potential of the punctured disk and compares it with
//! `1 - |x|^((p-2)/(p-1))`.

use ringpot::benchmarks::{closed_form_check, punctured_disk, RadialPotential, Region};
use ringpot::build_grid;
use ringpot::p_solver::{max_principle_check, solve_p, PSolverConfig};

fn main() -> ringpot::Result<()> {
    let ring = punctured_disk();
    let grid = build_grid(&ring, 1.0 / 64.0)?;
    for p in [4.0, 8.0] {
        let (u, stats) = solve_p(&grid, &PSolverConfig::new(p))?;
        let exact = RadialPotential::for_ring(&ring, Some(p)).expect("radial ring");
        let err = closed_form_check("p", &u, &exact, 5e-2, Region::BeyondInner(8.0 * grid.h()));
        println!(
            "p = {p}: {} iterations, sup error outside 8h = {:.5}, max principle {}",
            stats.iterations,
            err.stats["sup_error"],
            max_principle_check(&u).pass
        );
    }
    Ok(())
}
