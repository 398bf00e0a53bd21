//! Discretizes the square/point ring and counts node classes.

use ringpot::benchmarks::square_point;
use ringpot::{build_grid, NodeClass};

fn main() -> ringpot::Result<()> {
    let grid = build_grid(&square_point(), 1.0 / 64.0)?;
    println!("{} x {} nodes, h = {}", grid.nx(), grid.ny(), grid.h());
    for class in [NodeClass::Interior, NodeClass::DirichletInner, NodeClass::DirichletOuter, NodeClass::Exterior] {
        println!("{:<16} {}", class.as_str(), grid.count(class));
    }
    println!("unmasked         {}", grid.default_mask().count());
    Ok(())
}
