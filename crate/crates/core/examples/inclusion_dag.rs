//! Build the inclusion DAG of a class set and print it as Graphviz.
//!
//! cargo run --example inclusion_dag | dot -Tsvg > dag.svg

use stlclass::classes::{violation_classes, KConfig};
use stlclass::order::OrderDag;
use stlclass::stl::parse;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let phi = parse("F[0,30](speed > 70 && RPM > 3800)")?;
    let classes = violation_classes(&phi, &KConfig::uniform(2));
    let dag = OrderDag::build(&classes)?;
    eprintln!(
        "{} classes, {} non-empty, {} covering edges, minimal: {:?}",
        classes.len(),
        dag.len(),
        dag.edges().len(),
        dag.minimal()
    );
    print!("{}", dag.to_dot(&classes));
    Ok(())
}
