use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use stlclass::classes::Polarity;
use stlclass::classifier::{ClassifierConfig, Mode};
use stlclass::membership::OptimizerConfig;
use stlclass::stl::parse_spec_file;
use stlclass::surrogate::Plant;
use stlclass::workbench::{
    compare_modes, run_experiment, surrogate_corpus, write_comparison, Corpus, ExperimentConfig,
    WorkbenchError,
};

#[derive(Parser)]
#[command(
    name = "stlclass",
    version,
    about = "Classify STL counterexamples by violation class"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify a corpus and write report.json, DOT graphs and CSV tables.
    Classify(ClassifyArgs),
    /// Run both modes for several values of k and tabulate cost.
    Compare(CompareArgs),
    /// Write surrogate traces as CSV files.
    Generate(GenerateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum PlantArg {
    At,
    Afc,
}

impl From<PlantArg> for Plant {
    fn from(p: PlantArg) -> Self {
        match p {
            PlantArg::At => Plant::At,
            PlantArg::Afc => Plant::Afc,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Exhaustive,
    Binary,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolarityArg {
    Violation,
    Satisfaction,
}

#[derive(Args)]
struct CommonArgs {
    /// Specification file (one STL formula).
    #[arg(long)]
    spec: PathBuf,
    /// JSON k-config: {"default_k": N, "overrides": {"<path>": N}}.
    #[arg(long)]
    kconfig: Option<PathBuf>,
    /// Override the default number of segments per temporal operator.
    #[arg(long)]
    k: Option<usize>,
    /// Directory of CSV signals.
    #[arg(long, conflicts_with = "gen", required_unless_present = "gen")]
    signals: Option<PathBuf>,
    /// Generate the corpus from a surrogate plant.
    #[arg(long, value_enum)]
    gen: Option<PlantArg>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 30)]
    count: usize,
    #[arg(long, value_enum, default_value = "violation")]
    polarity: PolarityArg,
    /// Optimizer evaluations per membership query.
    #[arg(long, default_value_t = 100)]
    budget: usize,
    #[arg(long, default_value_t = 0)]
    rng_seed: u64,
    /// Answer queries by a lattice scan with N points per parameter.
    #[arg(long, value_name = "N")]
    exact_grid: Option<usize>,
    /// Re-check inferred and unconfirmed statuses with a lattice scan.
    #[arg(long)]
    audit: bool,
    #[arg(long, default_value_t = 21, value_name = "N")]
    audit_grid: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ClassifyArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, value_enum, default_value = "binary")]
    mode: ModeArg,
    /// JSON list of {name, class_in, class_out}.
    #[arg(long)]
    patterns: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Default k values to compare.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    ks: Vec<usize>,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    gen: PlantArg,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 30)]
    count: usize,
    /// Keep only traces violating this specification.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

fn experiment(c: &CommonArgs, mode: Mode, patterns: Option<PathBuf>) -> ExperimentConfig {
    let optimizer = OptimizerConfig {
        budget: c.budget,
        seed: c.rng_seed,
        ..OptimizerConfig::default()
    };
    let mut classifier = match c.exact_grid {
        Some(n) => ClassifierConfig::exact(n),
        None => ClassifierConfig::optimizer(optimizer),
    };
    classifier.audit_grid = c.audit.then_some(c.audit_grid);
    let corpus = match (&c.signals, c.gen) {
        (Some(path), _) => Corpus::Dir { path: path.clone() },
        (None, Some(plant)) => Corpus::Generate {
            plant: plant.into(),
            seed: c.seed,
            count: c.count,
        },
        (None, None) => unreachable!("clap requires one corpus source"),
    };
    ExperimentConfig {
        spec: c.spec.clone(),
        kconfig: c.kconfig.clone(),
        k: c.k,
        mode,
        polarity: match c.polarity {
            PolarityArg::Violation => Polarity::Violation,
            PolarityArg::Satisfaction => Polarity::Satisfaction,
        },
        classifier,
        corpus,
        patterns,
        out: c.out.clone(),
    }
}

fn classify(args: ClassifyArgs) -> Result<(), WorkbenchError> {
    let mode = match args.mode {
        ModeArg::Exhaustive => Mode::Exhaustive,
        ModeArg::Binary => Mode::Binary,
    };
    let out = run_experiment(&experiment(&args.common, mode, args.patterns))?;
    let t = out.timing();
    println!(
        "{} signals, {} classes ({} in DAG), {} queries, {:.1} ms",
        t.signals, t.classes, t.dag_nodes, t.queries, t.elapsed_ms
    );
    for row in out.distribution() {
        println!(
            "{}: {} -> {} : {}",
            row.pattern, row.class_in, row.class_out, row.count
        );
    }
    Ok(())
}

fn compare(args: CompareArgs) -> Result<(), WorkbenchError> {
    let cfg = experiment(&args.common, Mode::Binary, None);
    let exp = cfg.load()?;
    let rows = compare_modes(&exp, &args.ks)?;
    write_comparison(&cfg.out.join("comparison.csv"), &rows)?;
    println!(
        "{:>4} {:>10} {:>8} {:>9} {:>12} {:>7}",
        "k", "mode", "classes", "queries", "ms", "agrees"
    );
    for r in &rows {
        let t = &r.timing;
        let mode = match t.mode {
            Mode::Exhaustive => "exhaustive",
            Mode::Binary => "binary",
        };
        println!(
            "{:>4} {:>10} {:>8} {:>9} {:>12.1} {:>7}",
            t.k, mode, t.classes, t.queries, t.signal_ms, r.agrees
        );
    }
    Ok(())
}

fn generate(args: GenerateArgs) -> Result<(), WorkbenchError> {
    if args.count == 0 {
        return Err(WorkbenchError::Config("count must be at least 1".into()));
    }
    let plant: Plant = args.gen.into();
    let traces: Vec<(String, _)> = match &args.spec {
        Some(path) => {
            let spec = parse_spec_file(path)?;
            surrogate_corpus(plant, &spec, Polarity::Violation, args.seed, args.count)?
        }
        None => plant
            .traces(args.seed)
            .take(args.count)
            .enumerate()
            .map(|(i, w)| (format!("sig{i:04}"), w))
            .collect(),
    };
    std::fs::create_dir_all(&args.out).map_err(|source| WorkbenchError::Io {
        path: args.out.display().to_string(),
        source,
    })?;
    for (name, w) in &traces {
        let path = args.out.join(format!("{name}.csv"));
        w.write_csv(&path)
            .map_err(|source| WorkbenchError::Signal {
                path: path.display().to_string(),
                source,
            })?;
    }
    println!("wrote {} traces to {}", traces.len(), args.out.display());
    Ok(())
}

fn configure_threads() -> Result<(), WorkbenchError> {
    let Ok(value) = std::env::var("STLCLASS_THREADS") else {
        return Ok(());
    };
    let n: usize = value.parse().ok().filter(|&n| n >= 1).ok_or_else(|| {
        WorkbenchError::Config(format!(
            "STLCLASS_THREADS must be a positive integer, got `{value}`"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| WorkbenchError::Config(e.to_string()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Classify(a) => classify(a),
        Command::Compare(a) => compare(a),
        Command::Generate(a) => generate(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
