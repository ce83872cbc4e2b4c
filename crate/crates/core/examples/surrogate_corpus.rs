//! Draw surrogate traces and report how often each bundled specification
//! is violated.
//!
//! cargo run --release --example surrogate_corpus

use stlclass::stl::{parse_spec_file, robustness};
use stlclass::surrogate::Plant;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let specs = concat!(env!("CARGO_MANIFEST_DIR"), "/../../specs");
    for (file, plant) in [
        ("at1.stl", Plant::At),
        ("at2.stl", Plant::At),
        ("at3.stl", Plant::At),
        ("afc1.stl", Plant::Afc),
    ] {
        let phi = parse_spec_file(format!("{specs}/{file}"))?;
        let draws = 200;
        let mut violated = 0;
        let mut worst = f64::INFINITY;
        for w in plant.traces(1).take(draws) {
            let rho = robustness(&w, &phi)?.value();
            violated += usize::from(rho < 0.0);
            worst = worst.min(rho);
        }
        println!("{file:<9} {violated:>3}/{draws} violate, lowest robustness {worst:.3}");
    }
    Ok(())
}
