//! Experiment orchestration: load a specification and a corpus, classify,
//! and emit `report.json`, DOT graphs, `distribution.csv` and `timing.csv`.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classes::{
    canonical_form, generate, refine_uniform, ClassId, ClassSet, ConfigError, KConfig, Polarity,
};
use crate::classifier::{
    classify_binary, classify_exhaustive, Backend, ClassifierConfig, ClassifyError, Mode, Report,
    SignalReport, Status,
};
use crate::order::{OrderDag, OrderError};
use crate::pstl::ParamFormula;
use crate::signal::{Signal, SignalError};
use crate::stl::{parse, parse_spec_file, robustness, Formula, MonitorError, ParseError};
use crate::surrogate::Plant;

#[derive(Debug, Error)]
pub enum WorkbenchError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    KConfig(#[from] ConfigError),
    #[error("specification: {0}")]
    Parse(#[from] ParseError),
    #[error("signal {path}: {source}")]
    Signal { path: String, source: SignalError },
    #[error("pattern file: {0}")]
    Pattern(String),
    #[error("surrogate produced only {found} of {wanted} requested traces")]
    CorpusShort { found: usize, wanted: usize },
    #[error(transparent)]
    Monitor(#[from] MonitorError),
    #[error(transparent)]
    Order(#[from] OrderError),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl WorkbenchError {
    /// Process exit status: 2 when the corpus contains signals that are not
    /// counterexamples, 1 for every other failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            WorkbenchError::Classify(ClassifyError::InputNotCounterexample(_)) => 2,
            _ => 1,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> WorkbenchError + '_ {
    move |source| WorkbenchError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum Corpus {
    /// Every `*.csv` file in the directory, in file-name order.
    Dir { path: PathBuf },
    /// The first `count` surrogate traces with the right robustness sign.
    Generate {
        plant: Plant,
        seed: u64,
        count: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub spec: PathBuf,
    /// Defaults to one segment everywhere.
    pub kconfig: Option<PathBuf>,
    /// Replaces the default `k` of the k-config.
    pub k: Option<usize>,
    pub mode: Mode,
    pub polarity: Polarity,
    pub classifier: ClassifierConfig,
    pub corpus: Corpus,
    /// JSON list of `{name, class_in, class_out}`; defaults to ordered pairs
    /// of minimal classes.
    pub patterns: Option<PathBuf>,
    pub out: PathBuf,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), WorkbenchError> {
        let must_exist = |p: &Path, what: &str| {
            if p.exists() {
                Ok(())
            } else {
                Err(WorkbenchError::Config(format!(
                    "{what} {} does not exist",
                    p.display()
                )))
            }
        };
        must_exist(&self.spec, "spec file")?;
        if let Some(k) = &self.kconfig {
            must_exist(k, "k-config")?;
        }
        if let Some(p) = &self.patterns {
            must_exist(p, "pattern file")?;
        }
        if self.k == Some(0) {
            return Err(WorkbenchError::Config("k must be at least 1".into()));
        }
        match &self.corpus {
            Corpus::Dir { path } => must_exist(path, "signal directory")?,
            Corpus::Generate { count: 0, .. } => {
                return Err(WorkbenchError::Config("count must be at least 1".into()))
            }
            Corpus::Generate { .. } => {}
        }
        validate_classifier(&self.classifier)
    }

    /// Reads every referenced file.
    pub fn load(&self) -> Result<Experiment, WorkbenchError> {
        self.validate()?;
        let spec = parse_spec_file(&self.spec)?;
        let mut kconfig = match &self.kconfig {
            Some(p) => KConfig::read(p)?,
            None => KConfig::default(),
        };
        if let Some(k) = self.k {
            kconfig.default_k = k;
        }
        let signals = match &self.corpus {
            Corpus::Dir { path } => read_signal_dir(path)?,
            Corpus::Generate { plant, seed, count } => {
                surrogate_corpus(*plant, &spec, self.polarity, *seed, *count)?
            }
        };
        let patterns = match &self.patterns {
            Some(p) => {
                let text = fs::read_to_string(p).map_err(io_err(p))?;
                serde_json::from_str(&text).map_err(|e| WorkbenchError::Pattern(e.to_string()))?
            }
            None => Vec::new(),
        };
        Ok(Experiment {
            spec,
            kconfig,
            mode: self.mode,
            polarity: self.polarity,
            classifier: self.classifier.clone(),
            signals,
            patterns,
        })
    }
}

fn validate_classifier(cfg: &ClassifierConfig) -> Result<(), WorkbenchError> {
    match &cfg.backend {
        Backend::Optimizer(o) => o
            .validate()
            .map_err(|e| WorkbenchError::Config(e.to_string()))?,
        Backend::ExactGrid { grid_n } if *grid_n < 2 => {
            return Err(WorkbenchError::Config(
                "exact grid needs at least 2 points".into(),
            ))
        }
        Backend::ExactGrid { .. } => {}
    }
    if matches!(cfg.audit_grid, Some(n) if n < 2) {
        return Err(WorkbenchError::Config(
            "audit grid needs at least 2 points".into(),
        ));
    }
    Ok(())
}

/// Reads `*.csv` files of a directory, named by file stem.
pub fn read_signal_dir(dir: &Path) -> Result<Vec<(String, Signal)>, WorkbenchError> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(WorkbenchError::Config(format!(
            "no .csv files in {}",
            dir.display()
        )));
    }
    paths
        .into_iter()
        .map(|p| {
            let name = p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            Signal::read_csv(&p)
                .map(|w| (name, w))
                .map_err(|source| WorkbenchError::Signal {
                    path: p.display().to_string(),
                    source,
                })
        })
        .collect()
}

/// First `count` surrogate traces that violate (or satisfy, for the
/// satisfaction polarity) `spec` strictly.
pub fn surrogate_corpus(
    plant: Plant,
    spec: &Formula,
    polarity: Polarity,
    seed: u64,
    count: usize,
) -> Result<Vec<(String, Signal)>, WorkbenchError> {
    let max_draws = count.saturating_mul(200).max(1000);
    let mut out = Vec::with_capacity(count);
    for (i, w) in plant.traces(seed).take(max_draws).enumerate() {
        if out.len() == count {
            break;
        }
        let rho = robustness(&w, spec)?.value();
        let keep = match polarity {
            Polarity::Violation => rho < 0.0,
            Polarity::Satisfaction => rho > 0.0,
        };
        if keep {
            out.push((format!("sig{i:04}"), w));
        }
    }
    if out.len() < count {
        return Err(WorkbenchError::CorpusShort {
            found: out.len(),
            wanted: count,
        });
    }
    Ok(out)
}

/// A named pair of classes: signals inside `class_in` but outside
/// `class_out`. Classes are given by id (`c3`), canonical text, or an STL
/// formula without parameters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternSpec {
    pub name: String,
    pub class_in: String,
    pub class_out: String,
}

/// A fully loaded experiment.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub spec: Formula,
    pub kconfig: KConfig,
    pub mode: Mode,
    pub polarity: Polarity,
    pub classifier: ClassifierConfig,
    pub signals: Vec<(String, Signal)>,
    pub patterns: Vec<PatternSpec>,
}

impl Experiment {
    pub fn run(&self) -> Result<RunOutput, WorkbenchError> {
        self.kconfig.validate()?;
        validate_classifier(&self.classifier)?;
        let start = Instant::now();
        let classes = generate(&self.spec, &self.kconfig, self.polarity);
        let dag = OrderDag::build(&classes)?;
        let patterns = resolve_patterns(&self.patterns, &classes, &dag)?;
        let report = match self.mode {
            Mode::Exhaustive => classify_exhaustive(&self.signals, &classes, &self.classifier)?,
            Mode::Binary => classify_binary(&self.signals, &classes, &dag, &self.classifier)?,
        };
        Ok(RunOutput {
            kconfig: self.kconfig.clone(),
            classifier: self.classifier.clone(),
            classes,
            dag,
            patterns,
            report,
            elapsed: start.elapsed(),
        })
    }
}

/// A pattern with both classes resolved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pattern {
    pub name: String,
    pub class_in: ClassId,
    pub class_out: ClassId,
}

fn resolve_class(text: &str, classes: &ClassSet) -> Result<ClassId, WorkbenchError> {
    let text = text.trim();
    if let Some(n) = text.strip_prefix('c').and_then(|n| n.parse::<u32>().ok()) {
        if (n as usize) < classes.len() {
            return Ok(ClassId(n));
        }
    }
    if let Some(id) = classes.find(text) {
        return Ok(id);
    }
    if let Ok(f) = parse(text) {
        if let Some(id) = classes.find(&canonical_form(&ParamFormula::from_formula(&f))) {
            return Ok(id);
        }
    }
    Err(WorkbenchError::Pattern(format!(
        "no class matches `{text}`"
    )))
}

fn resolve_patterns(
    specs: &[PatternSpec],
    classes: &ClassSet,
    dag: &OrderDag,
) -> Result<Vec<Pattern>, WorkbenchError> {
    if specs.is_empty() {
        let minimal = dag.minimal();
        let mut out = Vec::new();
        for &a in &minimal {
            for &b in &minimal {
                if a != b {
                    out.push(Pattern {
                        name: format!("pattern{}", out.len() + 1),
                        class_in: a,
                        class_out: b,
                    });
                }
            }
        }
        return Ok(out);
    }
    specs
        .iter()
        .map(|p| {
            Ok(Pattern {
                name: p.name.clone(),
                class_in: resolve_class(&p.class_in, classes)?,
                class_out: resolve_class(&p.class_out, classes)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistributionRow {
    pub pattern: String,
    pub class_in: ClassId,
    pub class_out: ClassId,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub mode: Mode,
    pub k: usize,
    pub signals: usize,
    pub classes: usize,
    pub dag_nodes: usize,
    pub queries: usize,
    pub evaluations: usize,
    /// Sum of per-signal classification times.
    pub signal_ms: f64,
    pub elapsed_ms: f64,
}

/// Everything produced by one classification run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub kconfig: KConfig,
    pub classifier: ClassifierConfig,
    pub classes: ClassSet,
    pub dag: OrderDag,
    pub patterns: Vec<Pattern>,
    pub report: Report,
    pub elapsed: Duration,
}

#[derive(Debug, Serialize)]
struct ClassEntry {
    id: ClassId,
    formula: String,
    parameters: usize,
    empty: bool,
    identity: bool,
}

#[derive(Debug, Serialize)]
struct DagEntry<'a> {
    nodes: &'a [ClassId],
    edges: &'a [(ClassId, ClassId)],
}

#[derive(Debug, Serialize)]
struct Totals {
    signals: usize,
    queries: usize,
    evaluations: usize,
}

#[derive(Debug, Serialize)]
struct ReportDocument<'a> {
    spec: String,
    polarity: Polarity,
    mode: Mode,
    kconfig: &'a KConfig,
    backend: &'a Backend,
    audit_grid: Option<usize>,
    classes: Vec<ClassEntry>,
    dag: DagEntry<'a>,
    signals: &'a [SignalReport],
    totals: Totals,
}

impl RunOutput {
    /// The `report.json` document. Wall-clock times are left out so that
    /// repeated runs produce identical bytes.
    pub fn report_json(&self) -> Result<String, WorkbenchError> {
        let identity = self.classes.identity();
        let doc = ReportDocument {
            spec: self.classes.source().to_string(),
            polarity: self.report.polarity,
            mode: self.report.mode,
            kconfig: &self.kconfig,
            backend: &self.classifier.backend,
            audit_grid: self.classifier.audit_grid,
            classes: self
                .classes
                .classes()
                .iter()
                .map(|c| ClassEntry {
                    id: c.id,
                    formula: c.canonical(),
                    parameters: c.formula.param_dimension(),
                    empty: c.empty,
                    identity: c.id == identity,
                })
                .collect(),
            dag: DagEntry {
                nodes: self.dag.nodes(),
                edges: self.dag.edges(),
            },
            signals: &self.report.signals,
            totals: Totals {
                signals: self.report.signals.len(),
                queries: self.report.total_queries(),
                evaluations: self.report.signals.iter().map(|s| s.evaluations).sum(),
            },
        };
        let mut text = serde_json::to_string_pretty(&doc)?;
        text.push('\n');
        Ok(text)
    }

    pub fn distribution(&self) -> Vec<DistributionRow> {
        self.patterns
            .iter()
            .map(|p| DistributionRow {
                pattern: p.name.clone(),
                class_in: p.class_in,
                class_out: p.class_out,
                count: self
                    .report
                    .signals
                    .iter()
                    .filter(|s| {
                        let m = s.members();
                        m.contains(&p.class_in) && !m.contains(&p.class_out)
                    })
                    .count(),
            })
            .collect()
    }

    pub fn timing(&self) -> TimingRow {
        TimingRow {
            mode: self.report.mode,
            k: self.kconfig.default_k,
            signals: self.report.signals.len(),
            classes: self.classes.len(),
            dag_nodes: self.dag.len(),
            queries: self.report.total_queries(),
            evaluations: self.report.signals.iter().map(|s| s.evaluations).sum(),
            signal_ms: millis(self.report.wall_time()),
            elapsed_ms: millis(self.elapsed),
        }
    }

    pub fn dag_dot(&self) -> String {
        self.dag.to_dot(&self.classes)
    }

    /// The DAG coloured by one signal's statuses: red for members, blue for
    /// non-members, dashed borders for inferred statuses and dotted ones for
    /// unconfirmed negatives.
    pub fn signal_dot(&self, signal: &SignalReport) -> String {
        self.dag
            .to_dot_styled(&self.classes, |id| match signal.status(id) {
                Some(Status::Member { .. }) => "color=red".into(),
                Some(Status::InferredMember { .. }) => "color=red, style=dashed".into(),
                Some(Status::NonMember { .. }) => "color=blue".into(),
                Some(Status::InferredNonMember { .. }) => "color=blue, style=dashed".into(),
                Some(Status::UnconfirmedNegative { .. }) => "color=blue, style=dotted".into(),
                None => String::new(),
            })
    }

    /// Writes report.json, dag.dot, dot/<signal>.dot, distribution.csv and
    /// timing.csv into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(), WorkbenchError> {
        let dot_dir = dir.join("dot");
        fs::create_dir_all(&dot_dir).map_err(io_err(&dot_dir))?;
        let write = |path: PathBuf, text: String| fs::write(&path, text).map_err(io_err(&path));
        write(dir.join("report.json"), self.report_json()?)?;
        write(dir.join("dag.dot"), self.dag_dot())?;
        for s in &self.report.signals {
            write(
                dot_dir.join(format!("{}.dot", s.signal)),
                self.signal_dot(s),
            )?;
        }
        write_csv(&dir.join("distribution.csv"), &self.distribution())?;
        write_csv(&dir.join("timing.csv"), &[self.timing()])
    }
}

fn millis(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), WorkbenchError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(io_err(path))
}

/// Loads, classifies and writes all outputs into `cfg.out`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutput, WorkbenchError> {
    let out = cfg.load()?.run()?;
    out.write(&cfg.out)?;
    Ok(out)
}

/// One line of a mode comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub timing: TimingRow,
    /// Member sets equal the exhaustive run's for every signal.
    pub agrees: bool,
}

/// Runs both modes for every default `k` in `ks` on the same corpus.
pub fn compare_modes(exp: &Experiment, ks: &[usize]) -> Result<Vec<ComparisonRow>, WorkbenchError> {
    let mut rows = Vec::new();
    for &k in ks {
        let mut e = exp.clone();
        e.kconfig.default_k = k;
        e.mode = Mode::Exhaustive;
        let ex = e.run()?;
        e.mode = Mode::Binary;
        let bin = e.run()?;
        let agrees = member_sets(&ex.report) == member_sets(&bin.report);
        rows.push(ComparisonRow {
            timing: ex.timing(),
            agrees: true,
        });
        rows.push(ComparisonRow {
            timing: bin.timing(),
            agrees,
        });
    }
    Ok(rows)
}

/// Writes a comparison table as CSV.
pub fn write_comparison(path: &Path, rows: &[ComparisonRow]) -> Result<(), WorkbenchError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "mode",
        "k",
        "signals",
        "classes",
        "dag_nodes",
        "queries",
        "evaluations",
        "signal_ms",
        "elapsed_ms",
        "agrees",
    ])?;
    for r in rows {
        let t = &r.timing;
        let mode = match t.mode {
            Mode::Exhaustive => "exhaustive",
            Mode::Binary => "binary",
        };
        w.write_record([
            mode.to_string(),
            t.k.to_string(),
            t.signals.to_string(),
            t.classes.to_string(),
            t.dag_nodes.to_string(),
            t.queries.to_string(),
            t.evaluations.to_string(),
            t.signal_ms.to_string(),
            t.elapsed_ms.to_string(),
            r.agrees.to_string(),
        ])?;
    }
    w.flush().map_err(io_err(path))
}

fn member_sets(report: &Report) -> Vec<BTreeSet<ClassId>> {
    report.signals.iter().map(|s| s.members()).collect()
}

/// A coarse class, its image in the finer class set and the two statuses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinedStatus {
    pub coarse: ClassId,
    pub fine: Option<ClassId>,
    pub coarse_member: bool,
    pub fine_member: Option<bool>,
}

impl RefinedStatus {
    /// A coarse member whose image is classified outside, or the reverse
    /// for a definite coarse non-member.
    pub fn contradicts(&self, coarse_status: &Status) -> bool {
        match self.fine_member {
            Some(fine) if self.coarse_member => !fine,
            Some(fine) => fine && matches!(coarse_status, Status::NonMember { .. }),
            None => false,
        }
    }
}

/// Maps every classified coarse class of one signal into the fine class
/// set with [`refine_uniform`] and pairs up the statuses.
pub fn refinement_check(
    coarse: &ClassSet,
    coarse_signal: &SignalReport,
    fine: &ClassSet,
    fine_signal: &SignalReport,
    k: usize,
) -> Vec<(RefinedStatus, bool)> {
    coarse_signal
        .results
        .iter()
        .map(|r| {
            let image = refine_uniform(&coarse.get(r.class).formula, k)
                .and_then(|f| fine.find(&f.canonical()));
            let row = RefinedStatus {
                coarse: r.class,
                fine: image,
                coarse_member: r.status.is_member(),
                fine_member: image
                    .and_then(|id| fine_signal.status(id))
                    .map(Status::is_member),
            };
            let bad = row.contradicts(&r.status);
            (row, bad)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::membership::OptimizerConfig;

    fn at2() -> Experiment {
        let spec = parse("G[0,30](speed < 90 && RPM < 4000)").unwrap();
        let signals = surrogate_corpus(Plant::At, &spec, Polarity::Violation, 1, 4).unwrap();
        Experiment {
            spec,
            kconfig: KConfig::uniform(1),
            mode: Mode::Binary,
            polarity: Polarity::Violation,
            classifier: ClassifierConfig::optimizer(OptimizerConfig::default()),
            signals,
            patterns: Vec::new(),
        }
    }

    #[test]
    fn default_patterns_pair_minimal_classes() {
        let out = at2().run().unwrap();
        let names: Vec<_> = out
            .patterns
            .iter()
            .map(|p| {
                (
                    out.classes.get(p.class_in).canonical(),
                    out.classes.get(p.class_out).canonical(),
                )
            })
            .collect();
        assert_eq!(
            names,
            vec![
                (
                    "G[0,30](RPM < 4000)".to_string(),
                    "G[0,30](speed < 90)".to_string()
                ),
                (
                    "G[0,30](speed < 90)".to_string(),
                    "G[0,30](RPM < 4000)".to_string()
                ),
            ]
        );
    }

    #[test]
    fn patterns_resolve_by_id_canonical_or_formula() {
        let mut exp = at2();
        let out = exp.run().unwrap();
        let speed = out.classes.find("G[0,30](speed < 90)").unwrap();
        exp.patterns = vec![
            PatternSpec {
                name: "a".into(),
                class_in: speed.to_string(),
                class_out: "G[0, 30] (RPM < 4000)".into(),
            },
            PatternSpec {
                name: "b".into(),
                class_in: "G[0,30](RPM < 4000)".into(),
                class_out: "G[0,30](speed < 90)".into(),
            },
        ];
        let again = exp.run().unwrap();
        assert_eq!(again.patterns[0].class_in, speed);
        assert_eq!(again.patterns[0].class_out, again.patterns[1].class_in);
        exp.patterns[0].class_out = "G[0,30](speed < 1)".into();
        assert!(matches!(exp.run(), Err(WorkbenchError::Pattern(_))));
    }

    #[test]
    fn exit_codes() {
        let e = WorkbenchError::Classify(ClassifyError::InputNotCounterexample(vec!["w".into()]));
        assert_eq!(e.exit_code(), 2);
        assert_eq!(WorkbenchError::Config("x".into()).exit_code(), 1);
    }
}
