//! List the violation classes of a specification for increasing `k`.
//!
//! cargo run --example class_generation -- "G[0,30](speed < 90 && RPM < 4000)"

use stlclass::classes::{violation_classes, KConfig};
use stlclass::stl::parse;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let text = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "G[0,30](speed < 90 && RPM < 4000)".into());
    let phi = parse(&text)?;
    for k in 1..=2 {
        let classes = violation_classes(&phi, &KConfig::uniform(k));
        println!("k = {k}: {} classes", classes.len());
        for c in classes.classes() {
            let mut tags = Vec::new();
            if c.empty {
                tags.push("empty");
            }
            if c.id == classes.identity() {
                tags.push("identity");
            }
            println!(
                "  {:>4}  {}  [{} params] {}",
                c.id.to_string(),
                c.canonical(),
                c.formula.param_dimension(),
                tags.join(", ")
            );
        }
    }
    Ok(())
}
