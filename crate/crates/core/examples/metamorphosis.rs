//! Writes the level-set family of the square/point ring as SVG and OBJ.

use std::fs::File;
use std::io::BufWriter;

use ringpot::benchmarks::square_point;
use ringpot::morph::{metamorphosis, stacked_surface, uniform_levels};
use ringpot::SolverChoice;

fn main() -> ringpot::Result<()> {
    let family = metamorphosis(&square_point(), SolverChoice::Inf, &uniform_levels(5), 1.0 / 64.0)?;
    for c in &family.contours {
        println!("t = {:.3}: length {:.4}, hull deficiency {:.1e}", c.level, c.length, c.hull_deficiency);
    }
    let diagnostics = family.diagnostics();
    println!("nested, convex and simple: {}", diagnostics.pass);
    let dir = std::env::temp_dir();
    family.write_svg(BufWriter::new(File::create(dir.join("ringpot_levels.svg"))?))?;
    let mesh = stacked_surface(&family)?;
    mesh.write_obj(BufWriter::new(File::create(dir.join("ringpot_surface.obj"))?))?;
    println!("{} vertices, surface area {:.4}, written to {}", mesh.vertices.len(), mesh.area(), dir.display());
    Ok(())
}
