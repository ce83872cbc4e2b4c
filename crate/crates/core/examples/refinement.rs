//! Classify one counterexample with one and two segments per operator and
//! check that the finer result refines the coarser one.
//!
//! cargo run --release --example refinement

use stlclass::classes::{violation_classes, KConfig, Polarity};
use stlclass::classifier::{classify_binary, ClassifierConfig};
use stlclass::membership::OptimizerConfig;
use stlclass::order::OrderDag;
use stlclass::stl::parse;
use stlclass::surrogate::Plant;
use stlclass::workbench::{refinement_check, surrogate_corpus};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let phi = parse("F[0,30](speed > 70 && RPM > 3800)")?;
    let signals = surrogate_corpus(Plant::At, &phi, Polarity::Violation, 1, 1)?;
    let cfg = ClassifierConfig::optimizer(OptimizerConfig::default());
    let mut runs = Vec::new();
    for k in 1..=2 {
        let classes = violation_classes(&phi, &KConfig::uniform(k));
        let dag = OrderDag::build(&classes)?;
        let report = classify_binary(&signals, &classes, &dag, &cfg)?;
        println!("k = {k}, member classes of {}:", signals[0].0);
        for id in report.signals[0].members() {
            println!("  {}", classes.get(id).canonical());
        }
        runs.push((classes, report));
    }
    let (coarse, fine) = (&runs[0], &runs[1]);
    for (row, contradicts) in refinement_check(
        &coarse.0,
        &coarse.1.signals[0],
        &fine.0,
        &fine.1.signals[0],
        2,
    ) {
        println!(
            "{} -> {:?}: member {} / {:?}{}",
            row.coarse,
            row.fine,
            row.coarse_member,
            row.fine_member,
            if contradicts { "  CONTRADICTION" } else { "" }
        );
    }
    Ok(())
}
