//! Runs a verification over two rings with the square's concavity marked
//! as an expected failure.

use ringpot::benchmarks::{punctured_disk, square_point};
use ringpot::cli::{verify, VerifyConfig};

fn main() -> ringpot::Result<()> {
    let config = VerifyConfig {
        rings: vec![("disk".into(), punctured_disk().to_spec()), ("square".into(), square_point().to_spec())],
        h: 1.0 / 64.0,
        checks: ["max_principle", "quasiconcavity", "level_sets", "concavity"].map(String::from).to_vec(),
        expected_fail: vec!["square:concavity".into()],
        seed: 1,
    };
    let report = verify(&config)?;
    for ring in &report.rings {
        for (check, entry) in &ring.entries {
            let fraction = entry.report.as_ref().map_or(f64::NAN, |r| r.fraction);
            println!("{:<7} {:<15} {:?} ({fraction:.4})", ring.label, check, entry.outcome);
        }
    }
    println!("overall pass: {}", report.pass);
    Ok(())
}
