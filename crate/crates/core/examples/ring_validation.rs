//! Builds a few rings and prints their validation reports.

use ringpot::{ConvexShape, RingSpec, Vec2};

fn main() -> ringpot::Result<()> {
    let triangle = ConvexShape::polygon(vec![Vec2::new(0.0, 0.0), Vec2::new(2.0, 0.0), Vec2::new(0.5, 1.5)])?;
    let rings = [
        ("triangle/point", RingSpec { outer: triangle.to_spec(), inner: ConvexShape::point(Vec2::new(0.8, 0.5)).to_spec() }),
        ("touching disks", RingSpec::from_json(
            r#"{"outer": {"disk": {"center": [0, 0], "radius": 1}}, "inner": {"disk": {"center": [0.5, 0], "radius": 0.5}}}"#,
        )?),
    ];
    for (name, spec) in &rings {
        let report = spec.validate();
        println!("{name}: pass={}", report.pass);
        for part in &report.parts {
            println!("  {:<20} pass={} margin={:.4}", part.name, part.pass, part.worst_margin);
        }
        if let Ok(ring) = spec.build() {
            println!("  diam={:.4} separation={:.4}", ring.diam(), ring.separation());
        }
    }
    Ok(())
}
