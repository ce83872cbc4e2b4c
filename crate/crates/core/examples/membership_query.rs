//! Search for breakpoints that put a signal inside a parametric class, with
//! the optimizer and with the exhaustive lattice scan.
//!
//! cargo run --example membership_query

use stlclass::classes::{violation_classes, KConfig, Polarity};
use stlclass::membership::{exact_member_grid, member_query, OptimizerConfig, Outcome};
use stlclass::signal::{Interpolation, Signal};
use stlclass::stl::parse;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // speed exceeds 70 only between 20 s and 25 s; RPM stays low
    let times: Vec<f64> = (0..=300).map(|i| i as f64 / 10.0).collect();
    let speed = times
        .iter()
        .map(|&t| {
            if (20.0..=25.0).contains(&t) {
                80.0
            } else {
                60.0
            }
        })
        .collect();
    let rpm = vec![3000.0; times.len()];
    let w = Signal::from_columns(
        times,
        &[("speed", speed), ("RPM", rpm)],
        Interpolation::PiecewiseConstant,
    )?;

    let classes = violation_classes(
        &parse("F[0,30](speed > 70 && RPM > 3800)")?,
        &KConfig::uniform(2),
    );
    for c in classes.non_empty() {
        let opt = member_query(
            &w,
            &c.formula,
            Polarity::Violation,
            &OptimizerConfig::default(),
        )?;
        let exact = exact_member_grid(&w, &c.formula, Polarity::Violation, 200)?;
        let shown = match &opt.outcome {
            Outcome::Member {
                witness,
                robustness,
            } => {
                format!(
                    "member, u = {:?}, rho = {robustness:.2}",
                    witness.breakpoints
                )
            }
            Outcome::NotFound {
                best_robustness, ..
            } => {
                format!("not found, best rho = {best_robustness:.2}")
            }
        };
        println!(
            "{:<60} {shown} ({} evals; lattice says {})",
            c.canonical(),
            opt.queries_spent,
            exact.is_member()
        );
    }
    Ok(())
}
