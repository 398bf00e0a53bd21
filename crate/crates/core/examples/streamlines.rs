//! Traces gradient streamlines of the square/point infinity-potential.

use ringpot::benchmarks::square_point;
use ringpot::inf_solver::{solve_inf, InfSolverConfig};
use ringpot::streamline::{streamline_properties, streamline_suite, terminal_time_bound, TraceConfig, Tracer};
use ringpot::{build_grid, Vec2};

fn main() -> ringpot::Result<()> {
    let ring = square_point();
    let grid = build_grid(&ring, 1.0 / 64.0)?;
    let (u, _) = solve_inf(&grid, &InfSolverConfig::default())?;
    let tracer = Tracer::new(&u);
    let config = TraceConfig::default();
    for start in [Vec2::new(0.1, 0.1), Vec2::new(0.9, 0.5), Vec2::new(0.3, 0.8)] {
        let s = tracer.trace(start, &config)?;
        let bound = terminal_time_bound(ring.diam(), s.values[0]);
        println!(
            "({:.1}, {:.1}): {} after {} steps, T = {:.4} (bound {:.4}), properties {}",
            start.x,
            start.y,
            s.status.as_str(),
            s.len() - 1,
            s.terminal_time(),
            bound,
            streamline_properties(&s).pass
        );
    }
    let suite = streamline_suite(&u, 50, 1, &config)?;
    for part in &suite.parts {
        println!("{:<14} {:.2}", part.name, part.fraction);
    }
    Ok(())
}
