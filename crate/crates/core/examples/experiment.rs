//! Run a full experiment and write report.json, DOT graphs and CSV tables.
//!
//! cargo run --release --example experiment -- /tmp/at2-run

use std::path::PathBuf;

use stlclass::classes::Polarity;
use stlclass::classifier::{ClassifierConfig, Mode};
use stlclass::membership::OptimizerConfig;
use stlclass::surrogate::Plant;
use stlclass::workbench::{run_experiment, Corpus, ExperimentConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("stlclass-experiment"));
    let specs = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../specs");
    let cfg = ExperimentConfig {
        spec: specs.join("at2.stl"),
        kconfig: Some(specs.join("k1.json")),
        k: None,
        mode: Mode::Binary,
        polarity: Polarity::Violation,
        classifier: ClassifierConfig::optimizer(OptimizerConfig::default()),
        corpus: Corpus::Generate {
            plant: Plant::At,
            seed: 1,
            count: 30,
        },
        patterns: None,
        out: out.clone(),
    };
    let run = run_experiment(&cfg)?;
    for row in run.distribution() {
        println!(
            "{}: in {} but not {} -> {} signals",
            row.pattern,
            run.classes.get(row.class_in).canonical(),
            run.classes.get(row.class_out).canonical(),
            row.count
        );
    }
    println!("outputs in {}", out.display());
    Ok(())
}
