//! Classify surrogate counterexamples both ways and compare query counts.
//!
//! cargo run --release --example binary_vs_exhaustive

use stlclass::classes::{violation_classes, KConfig, Polarity};
use stlclass::classifier::{classify_binary, classify_exhaustive, ClassifierConfig};
use stlclass::membership::OptimizerConfig;
use stlclass::order::OrderDag;
use stlclass::stl::parse;
use stlclass::surrogate::Plant;
use stlclass::workbench::surrogate_corpus;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let phi = parse("G[0,30](speed < 90 && RPM < 4000)")?;
    let signals = surrogate_corpus(Plant::At, &phi, Polarity::Violation, 1, 30)?;
    let cfg = ClassifierConfig::optimizer(OptimizerConfig::default());
    for k in 1..=3 {
        let classes = violation_classes(&phi, &KConfig::uniform(k));
        let dag = OrderDag::build(&classes)?;
        let ex = classify_exhaustive(&signals, &classes, &cfg)?;
        let bin = classify_binary(&signals, &classes, &dag, &cfg)?;
        println!(
            "k = {k}: {:>3} classes, exhaustive {:>5} queries {:>8.1?}, binary {:>5} queries {:>8.1?}",
            classes.len(),
            ex.total_queries(),
            ex.wall_time(),
            bin.total_queries(),
            bin.wall_time()
        );
    }
    Ok(())
}
