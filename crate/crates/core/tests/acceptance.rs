//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the test fails if any criterion does.

mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use common::{
    affordable_k, naive_robustness, random_formula, random_instance, random_signal, spec, spec_path,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stlclass::classes::{
    class_count, generate, violation_classes, ClassId, ClassSet, KConfig, Polarity,
};
use stlclass::classifier::{
    classify_binary, classify_exhaustive, query_count, ClassifierConfig, Report,
};
use stlclass::membership::{exact_member_grid, member_query, OptimizerConfig};
use stlclass::order::OrderDag;
use stlclass::pstl::ParamFormula;
use stlclass::signal::{Interpolation, Signal};
use stlclass::stl::{parse, robustness};
use stlclass::surrogate::Plant;
use stlclass::workbench::{refinement_check, surrogate_corpus};

/// Absolute tolerance between the monitor and the naive evaluator.
const MONITOR_TOL: f64 = 1e-9;
const COUNT_LIMIT: Duration = Duration::from_secs(1);
const MONITOR_LIMIT: Duration = Duration::from_secs(60);
const SOUNDNESS_LIMIT: Duration = Duration::from_secs(120);
const ORDER_LIMIT: Duration = Duration::from_secs(600);
const BINARY_K3_LIMIT: Duration = Duration::from_secs(600);
/// Lattice resolution for the exact membership oracle.
const GRID_N: usize = 21;
const CORPUS: usize = 30;

type Outcome = Result<String, String>;

fn check(cond: bool, ok: String, bad: String) -> Outcome {
    if cond {
        Ok(ok)
    } else {
        Err(bad)
    }
}

fn at_corpus(name: &str, seed: u64) -> Vec<(String, Signal)> {
    let plant = if name.starts_with("afc") {
        Plant::Afc
    } else {
        Plant::At
    };
    surrogate_corpus(plant, &spec(name), Polarity::Violation, seed, CORPUS).unwrap()
}

fn class_counts() -> Outcome {
    let start = Instant::now();
    let ex1 = parse("G[0,30](speed < 100) && G[0,30](RPM < 3000)").unwrap();
    let ex2 = parse("G[0,30](x > 0 || y > 0)").unwrap();
    let atom = parse("speed < 100").unwrap();
    let counts = [
        class_count(&ex1, &KConfig::uniform(1), Polarity::Violation),
        class_count(&ex2, &KConfig::uniform(2), Polarity::Satisfaction),
        class_count(&atom, &KConfig::uniform(1), Polarity::Violation),
        class_count(&atom, &KConfig::uniform(1), Polarity::Satisfaction),
    ];
    let took = start.elapsed();
    check(
        counts == [4, 16, 2, 2] && took < COUNT_LIMIT,
        format!("counts {counts:?} in {took:?}"),
        format!("counts {counts:?} (want [4, 16, 2, 2]) in {took:?}"),
    )
}

fn monitor_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut worst, mut untils) = (0.0f64, 0);
    for _ in 0..1000 {
        let f = random_formula(&mut rng, 3, &["x", "y"]);
        untils += usize::from(
            f.subformulas()
                .iter()
                .any(|g| matches!(g, stlclass::stl::Stl::Until(..))),
        );
        let n = rng.random_range(2..=64);
        let w = random_signal(&mut rng, n, &["x", "y"]);
        let fast = robustness(&w, &f).unwrap().value();
        let slow = naive_robustness(&w, &f);
        if fast != slow {
            worst = worst.max((fast - slow).abs());
        }
    }
    let took = start.elapsed();
    check(
        worst <= MONITOR_TOL && untils > 100 && took < MONITOR_LIMIT,
        format!("max deviation {worst:e}, {untils} instances with until, {took:?}"),
        format!("max deviation {worst:e}, {untils} with until, {took:?}"),
    )
}

fn soundness() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut informative, mut violations) = (0, 0);
    for _ in 0..1000 {
        let phi = random_formula(&mut rng, 3, &["x", "y"]);
        let k = affordable_k(&phi, rng.random_range(1..=3), 4000.0) as usize;
        let polarity = if rng.random_bool(0.5) {
            Polarity::Violation
        } else {
            Polarity::Satisfaction
        };
        let classes = generate(&phi, &KConfig::uniform(k), polarity);
        let n = rng.random_range(4..48);
        let w = random_signal(&mut rng, n, &["x", "y"]);
        let class = &classes.classes()[rng.random_range(0..classes.len())];
        let psi = random_instance(&mut rng, &class.formula, &w);
        let rho = robustness(&w, &psi).unwrap().value();
        let rho_phi = robustness(&w, &phi).unwrap().value();
        let (hit, implied) = match polarity {
            Polarity::Violation => (rho < 0.0, rho_phi < 0.0),
            Polarity::Satisfaction => (rho > 0.0, rho_phi > 0.0),
        };
        if hit {
            informative += 1;
            violations += usize::from(!implied);
        }
    }
    let took = start.elapsed();
    check(
        violations == 0 && took < SOUNDNESS_LIMIT,
        format!("0 violations over {informative} informative draws, {took:?}"),
        format!("{violations} violations over {informative} draws, {took:?}"),
    )
}

fn completeness() -> Outcome {
    let mut misses = Vec::new();
    let mut total = 0;
    let opt = OptimizerConfig::default();
    for name in ["at1.stl", "at2.stl", "at3.stl", "afc1.stl"] {
        let signals = at_corpus(name, 1);
        let phi = spec(name);
        let coarse = violation_classes(&phi, &KConfig::uniform(1));
        let dag = OrderDag::build(&coarse).unwrap();
        let report = classify_binary(
            &signals,
            &coarse,
            &dag,
            &ClassifierConfig::optimizer(opt.clone()),
        )
        .unwrap();
        let fine = violation_classes(&phi, &KConfig::uniform(2));
        let split = &fine.get(fine.identity()).formula;
        for (s, (_, w)) in report.signals.iter().zip(&signals) {
            total += 1;
            let coarse_hit = s.status(coarse.identity()).is_some_and(|st| st.is_member());
            let fine_hit = member_query(w, split, Polarity::Violation, &opt)
                .unwrap()
                .is_member();
            if !(coarse_hit && fine_hit) {
                misses.push(format!("{name}/{}", s.signal));
            }
        }
    }
    check(
        misses.is_empty(),
        format!("identity class member for all {total} counterexamples (k = 1 and 2)"),
        format!("misses: {misses:?}"),
    )
}

fn order_soundness() -> Outcome {
    let start = Instant::now();
    let signals: Vec<Signal> = Plant::At.traces(99).take(500).collect();
    let (mut pairs_checked, mut violations) = (0usize, Vec::new());
    for name in ["at1.stl", "at2.stl", "at3.stl"] {
        for k in 1..=2 {
            let classes = violation_classes(&spec(name), &KConfig::uniform(k));
            let pairs: Vec<(ClassId, ClassId)> = classes
                .order_pairs()
                .iter()
                .copied()
                .filter(|&(a, b)| a != b && !classes.get(a).empty && !classes.get(b).empty)
                .collect();
            for (i, w) in signals.iter().enumerate() {
                let member: Vec<Option<bool>> = classes
                    .classes()
                    .iter()
                    .map(|c| {
                        (!c.empty).then(|| {
                            exact_member_grid(w, &c.formula, Polarity::Violation, 101)
                                .unwrap()
                                .is_member()
                        })
                    })
                    .collect();
                for &(a, b) in &pairs {
                    pairs_checked += 1;
                    if member[a.index()] == Some(true) && member[b.index()] != Some(true) {
                        violations.push(format!("{name} k={k} w{i}: {a} -> {b}"));
                    }
                }
            }
        }
    }
    let took = start.elapsed();
    check(
        violations.is_empty() && took < ORDER_LIMIT,
        format!("{pairs_checked} (pair, signal) checks, 0 violations, {took:?}"),
        format!(
            "{} violations, first {:?}, {took:?}",
            violations.len(),
            violations.first()
        ),
    )
}

/// Exact-oracle runs shared by the equivalence and dominance criteria.
struct ExactRuns {
    runs: Vec<(String, Report, Report)>,
}

fn exact_runs() -> ExactRuns {
    let cfg = ClassifierConfig::exact(GRID_N);
    let mut runs = Vec::new();
    for name in ["at1.stl", "at2.stl", "at3.stl"] {
        let signals = at_corpus(name, 1);
        for k in 1..=3 {
            let classes = violation_classes(&spec(name), &KConfig::uniform(k));
            let dag = OrderDag::build(&classes).unwrap();
            let ex = classify_exhaustive(&signals, &classes, &cfg).unwrap();
            let bin = classify_binary(&signals, &classes, &dag, &cfg).unwrap();
            runs.push((format!("{name} k={k}"), ex, bin));
        }
    }
    ExactRuns { runs }
}

fn member_sets(r: &Report) -> Vec<BTreeSet<ClassId>> {
    r.signals.iter().map(|s| s.members()).collect()
}

fn algorithm_equivalence(runs: &ExactRuns) -> Outcome {
    let differing: Vec<&str> = runs
        .runs
        .iter()
        .filter(|(_, ex, bin)| member_sets(ex) != member_sets(bin))
        .map(|(n, _, _)| n.as_str())
        .collect();
    check(
        differing.is_empty(),
        format!(
            "identical partitions on {} configurations x {CORPUS} signals",
            runs.runs.len()
        ),
        format!("partitions differ on {differing:?}"),
    )
}

fn chain() -> (ClassSet, Signal) {
    let formulas: Vec<ParamFormula> = (1..=15)
        .map(|i| ParamFormula::from_formula(&parse(&format!("G[0,{i}](x > 0)")).unwrap()))
        .collect();
    let pairs: Vec<(usize, usize)> = (0..14).map(|i| (i, i + 1)).collect();
    let classes = ClassSet::from_parts(
        parse("G[0,15](x > 0)").unwrap(),
        Polarity::Violation,
        formulas,
        &pairs,
    )
    .unwrap();
    let times: Vec<f64> = (0..=40).map(|i| i as f64 / 2.0).collect();
    let x = times
        .iter()
        .map(|&t| if t < 9.5 { 1.0 } else { -1.0 })
        .collect();
    let w = Signal::from_columns(times, &[("x", x)], Interpolation::PiecewiseConstant).unwrap();
    (classes, w)
}

fn query_dominance(runs: &ExactRuns) -> Outcome {
    let mut worse = Vec::new();
    for (name, ex, bin) in &runs.runs {
        for ((e, b), s) in query_count(ex)
            .into_iter()
            .zip(query_count(bin))
            .zip(&ex.signals)
        {
            if b > e {
                worse.push(format!("{name}/{}", s.signal));
            }
        }
    }
    let (classes, w) = chain();
    let dag = OrderDag::build(&classes).unwrap();
    let signals = vec![("chain".to_string(), w)];
    let cfg = ClassifierConfig::exact(2);
    let ex = classify_exhaustive(&signals, &classes, &cfg).unwrap();
    let bin = classify_binary(&signals, &classes, &dag, &cfg).unwrap();
    let (qe, qb) = (ex.total_queries(), bin.total_queries());
    check(
        worse.is_empty() && qe == 15 && qb <= 5 && member_sets(&ex) == member_sets(&bin),
        format!("binary never above exhaustive; chain {qb} vs {qe} queries"),
        format!("binary above exhaustive on {worse:?}; chain {qb} vs {qe}"),
    )
}

fn efficiency_trend() -> Outcome {
    let signals = at_corpus("at2.stl", 1);
    let cfg = ClassifierConfig::optimizer(OptimizerConfig::default());
    let mut times = Vec::new();
    for k in 1..=3 {
        let classes = violation_classes(&spec("at2.stl"), &KConfig::uniform(k));
        let dag = OrderDag::build(&classes).unwrap();
        // best of three repetitions to damp scheduler noise
        let best = |f: &dyn Fn() -> Report| (0..3).map(|_| f().wall_time()).min().unwrap();
        let ex = best(&|| classify_exhaustive(&signals, &classes, &cfg).unwrap());
        let bin = best(&|| classify_binary(&signals, &classes, &dag, &cfg).unwrap());
        times.push((ex, bin));
    }
    let secs = |d: Duration| d.as_secs_f64();
    let growth: Vec<(f64, f64)> = times
        .windows(2)
        .map(|p| (secs(p[1].0) - secs(p[0].0), secs(p[1].1) - secs(p[0].1)))
        .collect();
    let slower = growth.iter().all(|&(ex, bin)| bin < ex);
    let table: Vec<String> = times
        .iter()
        .enumerate()
        .map(|(i, (e, b))| {
            format!(
                "k={} ex {:.1}ms bin {:.1}ms",
                i + 1,
                secs(*e) * 1e3,
                secs(*b) * 1e3
            )
        })
        .collect();
    check(
        slower && times[2].1 < BINARY_K3_LIMIT,
        table.join(", "),
        format!("growth {growth:?}; {}", table.join(", ")),
    )
}

fn refinement() -> Outcome {
    let phi = spec("at3.stl");
    let signals: Vec<(String, Signal)> = at_corpus("at3.stl", 1).into_iter().take(1).collect();
    let cfg = ClassifierConfig::optimizer(OptimizerConfig::default());
    let run = |k: usize| {
        let classes = violation_classes(&phi, &KConfig::uniform(k));
        let dag = OrderDag::build(&classes).unwrap();
        let report = classify_binary(&signals, &classes, &dag, &cfg).unwrap();
        (classes, report)
    };
    let (coarse, rc) = run(1);
    let (fine, rf) = run(2);
    let rows = refinement_check(&coarse, &rc.signals[0], &fine, &rf.signals[0], 2);
    let unmapped = rows.iter().filter(|(r, _)| r.fine.is_none()).count();
    let contradictions = rows.iter().filter(|(_, bad)| *bad).count();
    let members = rows.iter().filter(|(r, _)| r.coarse_member).count();
    check(
        unmapped == 0 && contradictions == 0,
        format!(
            "{}: {} k=1 classes mapped, {members} members, 0 contradictions; k=2 has {} members",
            signals[0].0,
            rows.len(),
            rf.signals[0].members().len()
        ),
        format!("{unmapped} unmapped, {contradictions} contradictions"),
    )
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let run = |out: &Path| {
        let status = Command::new(env!("CARGO_BIN_EXE_stlclass"))
            .arg("classify")
            .arg("--spec")
            .arg(spec_path("at3.stl"))
            .args([
                "--gen",
                "at",
                "--seed",
                "5",
                "--count",
                "10",
                "--k",
                "2",
                "--rng-seed",
                "9",
            ])
            .arg("--out")
            .arg(out)
            .output()
            .unwrap();
        assert!(status.status.success());
        std::fs::read(out.join("report.json")).unwrap()
    };
    let a = run(&dir.path().join("a"));
    let b = run(&dir.path().join("b"));
    check(
        a == b,
        format!("two runs, {} identical bytes", a.len()),
        "report.json differs between runs".into(),
    )
}

#[test]
fn acceptance() {
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    let mut run = |n: usize, name: &'static str, f: &dyn Fn() -> Outcome| {
        let outcome =
            catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".to_string()));
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        println!("{tag} {n:>2} {name}: {detail}");
        results.push((n, name, outcome));
    };
    run(1, "class counts", &class_counts);
    run(2, "monitor oracle equivalence", &monitor_equivalence);
    run(3, "class soundness", &soundness);
    run(4, "identity completeness", &completeness);
    run(5, "order soundness", &order_soundness);
    let runs = exact_runs();
    run(6, "binary and exhaustive agree", &|| {
        algorithm_equivalence(&runs)
    });
    run(7, "query dominance and chain bound", &|| {
        query_dominance(&runs)
    });
    run(8, "efficiency trend", &efficiency_trend);
    run(9, "refinement consistency", &refinement);
    run(10, "report determinism", &determinism);
    let failed: Vec<usize> = results
        .iter()
        .filter(|r| r.2.is_err())
        .map(|r| r.0)
        .collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
