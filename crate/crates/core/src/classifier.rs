//! Assigning counterexamples to the classes they belong to.
//!
//! The exhaustive driver queries every non-empty class. The binary driver
//! walks the inclusion DAG: it probes the middle of the longest remaining
//! path, and a positive answer settles every class above the probe while a
//! negative one settles every class below it.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classes::{ClassId, ClassSet, Polarity};
use crate::membership::{
    derive_seed, exact_member_grid, member_query, MembershipError, MembershipVerdict,
    OptimizerConfig, Outcome,
};
use crate::order::{OrderDag, OrderError};
use crate::pstl::Valuation;
use crate::signal::Signal;
use crate::stl::{robustness, MonitorError};

#[derive(Debug, Error, PartialEq)]
pub enum ClassifyError {
    #[error("signals are not counterexamples of the specification: {}", .0.join(", "))]
    InputNotCounterexample(Vec<String>),
    #[error(transparent)]
    Membership(#[from] MembershipError),
    #[error(transparent)]
    Order(#[from] OrderError),
}

impl From<MonitorError> for ClassifyError {
    fn from(e: MonitorError) -> Self {
        ClassifyError::Membership(e.into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Exhaustive,
    Binary,
}

/// How membership queries are answered.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Backend {
    Optimizer(OptimizerConfig),
    /// Lattice scan with this many points per parameter.
    ExactGrid {
        grid_n: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    pub backend: Backend,
    /// When set, inferred and unconfirmed statuses are re-checked with the
    /// lattice oracle at this resolution.
    pub audit_grid: Option<usize>,
}

impl ClassifierConfig {
    pub fn optimizer(cfg: OptimizerConfig) -> Self {
        ClassifierConfig {
            backend: Backend::Optimizer(cfg),
            audit_grid: None,
        }
    }

    pub fn exact(grid_n: usize) -> Self {
        ClassifierConfig {
            backend: Backend::ExactGrid { grid_n },
            audit_grid: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Status {
    Member {
        witness: Valuation,
        robustness: f64,
    },
    /// Definite: the class has no parameters or the lattice oracle was used.
    NonMember {
        best_robustness: f64,
    },
    /// The optimizer ran out of budget; the signal may still belong.
    UnconfirmedNegative {
        best_robustness: f64,
    },
    InferredMember {
        from: ClassId,
    },
    InferredNonMember {
        from: ClassId,
    },
}

impl Status {
    /// Membership as used for partitions and patterns.
    pub fn is_member(&self) -> bool {
        matches!(self, Status::Member { .. } | Status::InferredMember { .. })
    }

    pub fn is_queried(&self) -> bool {
        !matches!(
            self,
            Status::InferredMember { .. } | Status::InferredNonMember { .. }
        )
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Status::Member { .. } => "member",
            Status::NonMember { .. } => "non_member",
            Status::UnconfirmedNegative { .. } => "unconfirmed_negative",
            Status::InferredMember { .. } => "inferred_member",
            Status::InferredNonMember { .. } => "inferred_non_member",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassResult {
    pub class: ClassId,
    #[serde(flatten)]
    pub status: Status,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditFinding {
    pub class: ClassId,
    pub recorded: String,
    pub exact_member: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Audit {
    pub checked: usize,
    /// Classes with more than three parameters, beyond the lattice oracle.
    pub skipped: usize,
    pub discrepancies: Vec<AuditFinding>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalReport {
    pub signal: String,
    /// Robustness of the specification itself on this signal.
    pub spec_robustness: f64,
    /// One entry per non-empty class, ascending by id.
    pub results: Vec<ClassResult>,
    /// Membership queries issued.
    pub queries: usize,
    /// Robustness evaluations spent by those queries.
    pub evaluations: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub audit: Option<Audit>,
    /// Kept out of serialized reports so they stay reproducible.
    #[serde(skip)]
    pub wall_time: Duration,
}

impl SignalReport {
    pub fn status(&self, class: ClassId) -> Option<&Status> {
        self.results
            .binary_search_by_key(&class, |r| r.class)
            .ok()
            .map(|i| &self.results[i].status)
    }

    pub fn members(&self) -> BTreeSet<ClassId> {
        self.results
            .iter()
            .filter(|r| r.status.is_member())
            .map(|r| r.class)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub mode: Mode,
    pub polarity: Polarity,
    pub signals: Vec<SignalReport>,
}

impl Report {
    pub fn wall_time(&self) -> Duration {
        self.signals.iter().map(|s| s.wall_time).sum()
    }

    pub fn total_queries(&self) -> usize {
        self.signals.iter().map(|s| s.queries).sum()
    }
}

/// Membership queries issued per signal.
pub fn query_count(report: &Report) -> Vec<usize> {
    report.signals.iter().map(|s| s.queries).collect()
}

/// Signals whose specification robustness has the wrong sign for the class
/// polarity (a violation class needs a strictly violating signal).
fn audit_inputs(
    signals: &[(String, Signal)],
    classes: &ClassSet,
) -> Result<Vec<f64>, ClassifyError> {
    let mut bad = Vec::new();
    let mut values = Vec::with_capacity(signals.len());
    for (name, w) in signals {
        let rho = robustness(w, classes.source())?.value();
        let ok = match classes.polarity() {
            Polarity::Violation => rho < 0.0,
            Polarity::Satisfaction => rho > 0.0,
        };
        if !ok {
            bad.push(name.clone());
        }
        values.push(rho);
    }
    if bad.is_empty() {
        Ok(values)
    } else {
        Err(ClassifyError::InputNotCounterexample(bad))
    }
}

fn query(
    w: &Signal,
    index: usize,
    classes: &ClassSet,
    id: ClassId,
    cfg: &ClassifierConfig,
) -> Result<MembershipVerdict, MembershipError> {
    let class = classes.get(id);
    match &cfg.backend {
        Backend::Optimizer(o) => {
            let seeded = o.with_seed(derive_seed(o.seed, index, &class.canonical()));
            member_query(w, &class.formula, classes.polarity(), &seeded)
        }
        Backend::ExactGrid { grid_n } => {
            exact_member_grid(w, &class.formula, classes.polarity(), *grid_n)
        }
    }
}

fn status_of(v: &MembershipVerdict) -> Status {
    match &v.outcome {
        Outcome::Member {
            witness,
            robustness,
        } => Status::Member {
            witness: witness.clone(),
            robustness: *robustness,
        },
        Outcome::NotFound {
            best_robustness, ..
        } if v.exhaustive => Status::NonMember {
            best_robustness: *best_robustness,
        },
        Outcome::NotFound {
            best_robustness, ..
        } => Status::UnconfirmedNegative {
            best_robustness: *best_robustness,
        },
    }
}

struct Tally {
    results: Vec<ClassResult>,
    queries: usize,
    evaluations: usize,
}

impl Tally {
    fn new() -> Self {
        Tally {
            results: Vec::new(),
            queries: 0,
            evaluations: 0,
        }
    }

    fn record_query(&mut self, id: ClassId, v: &MembershipVerdict) -> Status {
        self.queries += 1;
        self.evaluations += v.queries_spent;
        let status = status_of(v);
        self.results.push(ClassResult {
            class: id,
            status: status.clone(),
        });
        status
    }
}

/// Queries every non-empty class for every signal.
pub fn classify_exhaustive(
    signals: &[(String, Signal)],
    classes: &ClassSet,
    cfg: &ClassifierConfig,
) -> Result<Report, ClassifyError> {
    let spec_rho = audit_inputs(signals, classes)?;
    let ids: Vec<ClassId> = classes.non_empty().map(|c| c.id).collect();
    let reports = signals
        .par_iter()
        .enumerate()
        .map(|(index, (name, w))| {
            let start = Instant::now();
            let mut tally = Tally::new();
            for &id in &ids {
                let v = query(w, index, classes, id, cfg)?;
                tally.record_query(id, &v);
            }
            finish(name, spec_rho[index], tally, w, classes, cfg, start)
        })
        .collect::<Result<Vec<_>, ClassifyError>>()?;
    Ok(Report {
        mode: Mode::Exhaustive,
        polarity: classes.polarity(),
        signals: reports,
    })
}

/// Binary search over the inclusion DAG.
pub fn classify_binary(
    signals: &[(String, Signal)],
    classes: &ClassSet,
    dag: &OrderDag,
    cfg: &ClassifierConfig,
) -> Result<Report, ClassifyError> {
    let spec_rho = audit_inputs(signals, classes)?;
    let reports = signals
        .par_iter()
        .enumerate()
        .map(|(index, (name, w))| {
            let start = Instant::now();
            let mut tally = Tally::new();
            let mut remaining: BTreeSet<ClassId> = dag.nodes().iter().copied().collect();
            loop {
                let path = dag.longest_path(&remaining);
                if path.is_empty() {
                    break;
                }
                // probe position ceil((1 + l) / 2), 1-based
                let m = path[(path.len() + 1).div_ceil(2) - 1];
                let v = query(w, index, classes, m, cfg)?;
                let member = tally.record_query(m, &v).is_member();
                remaining.remove(&m);
                let (settled, status) = if member {
                    (dag.descendants(m), Status::InferredMember { from: m })
                } else {
                    (dag.ancestors(m), Status::InferredNonMember { from: m })
                };
                for id in settled {
                    if remaining.remove(&id) {
                        tally.results.push(ClassResult {
                            class: id,
                            status: status.clone(),
                        });
                    }
                }
            }
            finish(name, spec_rho[index], tally, w, classes, cfg, start)
        })
        .collect::<Result<Vec<_>, ClassifyError>>()?;
    Ok(Report {
        mode: Mode::Binary,
        polarity: classes.polarity(),
        signals: reports,
    })
}

fn finish(
    name: &str,
    spec_robustness: f64,
    mut tally: Tally,
    w: &Signal,
    classes: &ClassSet,
    cfg: &ClassifierConfig,
    start: Instant,
) -> Result<SignalReport, ClassifyError> {
    tally.results.sort_by_key(|r| r.class);
    let audit = match cfg.audit_grid {
        Some(grid_n) => Some(audit(w, classes, &tally.results, grid_n)?),
        None => None,
    };
    Ok(SignalReport {
        signal: name.to_string(),
        spec_robustness,
        results: tally.results,
        queries: tally.queries,
        evaluations: tally.evaluations,
        audit,
        wall_time: start.elapsed(),
    })
}

/// Re-checks every status that is not backed by a witness or an exhaustive
/// search.
fn audit(
    w: &Signal,
    classes: &ClassSet,
    results: &[ClassResult],
    grid_n: usize,
) -> Result<Audit, ClassifyError> {
    let mut out = Audit::default();
    for r in results {
        let claimed = match r.status {
            Status::InferredMember { .. } => true,
            Status::InferredNonMember { .. } | Status::UnconfirmedNegative { .. } => false,
            Status::Member { .. } | Status::NonMember { .. } => continue,
        };
        let class = classes.get(r.class);
        match exact_member_grid(w, &class.formula, classes.polarity(), grid_n) {
            Ok(v) => {
                out.checked += 1;
                if v.is_member() != claimed {
                    out.discrepancies.push(AuditFinding {
                        class: r.class,
                        recorded: r.status.kind().to_string(),
                        exact_member: v.is_member(),
                    });
                }
            }
            Err(MembershipError::DimensionTooHigh(_)) => out.skipped += 1,
            Err(e) => return Err(e.into()),
        }
    }
    Ok(out)
}
