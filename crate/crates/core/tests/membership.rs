mod common;

use common::{at_signal, random_signal, spec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stlclass::classes::{violation_classes, KConfig, Polarity};
use stlclass::membership::{
    exact_member_grid, member_query, MembershipError, OptimizerConfig, Outcome,
};
use stlclass::pstl::ParamSpace;
use stlclass::stl::robustness;

/// Speed exceeds 70 only on [20, 25]; RPM never exceeds 3800.
fn late_speeding() -> stlclass::signal::Signal {
    at_signal(
        |t| {
            if (20.0..=25.0).contains(&t) {
                80.0
            } else {
                60.0
            }
        },
        |_| 3000.0,
    )
}

fn split_class() -> stlclass::pstl::ParamFormula {
    let classes = violation_classes(&spec("at3.stl"), &KConfig::uniform(2));
    let id = classes
        .find("(F[0,u0_1](speed > 70) || F[u0_1,30](RPM > 3800))")
        .unwrap();
    classes.get(id).formula.clone()
}

#[test]
fn witness_region_matches_dense_oracle() {
    // frozen from tests/oracle/derive.py: on 1000 evenly spaced breakpoints
    // over [0.3, 29.7] the first 670 violate the class and the rest do not
    let w = late_speeding();
    let psi = split_class();
    let space = ParamSpace::for_signal(&psi, &w);
    let negative: Vec<usize> = (0..1000)
        .filter(|&i| {
            let theta = space.unit_to_valuation(&[i as f64 / 999.0]);
            let f = psi.instantiate(&theta, &space).unwrap();
            robustness(&w, &f).unwrap().value() < 0.0
        })
        .collect();
    assert_eq!(negative.len(), 670);
    assert_eq!(negative.first(), Some(&0));
    assert_eq!(negative.last(), Some(&669));
}

#[test]
fn optimizer_and_lattice_find_a_witness_in_the_region() {
    let w = late_speeding();
    let psi = split_class();
    for verdict in [
        member_query(&w, &psi, Polarity::Violation, &OptimizerConfig::default()).unwrap(),
        exact_member_grid(&w, &psi, Polarity::Violation, 1000).unwrap(),
    ] {
        match verdict.outcome {
            Outcome::Member {
                witness,
                robustness,
            } => {
                let u = witness.breakpoints[0][0];
                assert!((0.3..20.0).contains(&u), "witness {u}");
                assert!(robustness < 0.0);
            }
            other => panic!("expected a member, got {other:?}"),
        }
    }
}

#[test]
fn optimizer_never_claims_a_false_member_and_agrees_on_easy_cases() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let phi = stlclass::stl::parse("F[0,8](x > 1 && y < 0)").unwrap();
    let classes = violation_classes(&phi, &KConfig::uniform(2));
    let (mut agree, mut total) = (0, 0);
    for i in 0..40 {
        let n = rng.random_range(20..40);
        let w = random_signal(&mut rng, n, &["x", "y"]);
        for c in classes.non_empty() {
            let exact = exact_member_grid(&w, &c.formula, Polarity::Violation, 200).unwrap();
            let cfg = OptimizerConfig::default().with_seed(i);
            let opt = member_query(&w, &c.formula, Polarity::Violation, &cfg).unwrap();
            if opt.is_member() {
                // a witness is checked by the monitor, so it is always real
                let Outcome::Member { witness, .. } = &opt.outcome else {
                    unreachable!()
                };
                let space = ParamSpace::for_signal(&c.formula, &w);
                let f = c.formula.instantiate(witness, &space).unwrap();
                assert!(robustness(&w, &f).unwrap().value() < 0.0);
            }
            total += 1;
            agree += usize::from(opt.is_member() == exact.is_member());
        }
    }
    assert!(agree * 100 >= total * 95, "agreement {agree}/{total}");
}

#[test]
fn queries_are_deterministic_per_seed() {
    let w = late_speeding();
    let psi = split_class();
    let cfg = OptimizerConfig {
        seed: 5,
        ..OptimizerConfig::default()
    };
    let a = member_query(&w, &psi, Polarity::Violation, &cfg).unwrap();
    let b = member_query(&w, &psi, Polarity::Violation, &cfg).unwrap();
    assert_eq!(a, b);
}

#[test]
fn budget_bounds_evaluations() {
    let w = at_signal(|_| 80.0, |_| 3000.0);
    let psi = split_class();
    for budget in [1, 7, 50] {
        let cfg = OptimizerConfig {
            budget,
            ..OptimizerConfig::default()
        };
        let v = member_query(&w, &psi, Polarity::Violation, &cfg).unwrap();
        assert!(!v.is_member());
        assert!(!v.exhaustive);
        assert!(v.queries_spent <= budget);
    }
}

#[test]
fn rejected_queries() {
    let w = late_speeding();
    let classes = violation_classes(&spec("at3.stl"), &KConfig::uniform(2));
    let empty = classes.classes().iter().find(|c| c.empty).unwrap();
    assert!(matches!(
        member_query(
            &w,
            &empty.formula,
            Polarity::Violation,
            &OptimizerConfig::default()
        ),
        Err(MembershipError::EmptyClassQueried)
    ));
    let fine = violation_classes(&spec("at1.stl"), &KConfig::uniform(5));
    let wide = fine.get(fine.identity());
    assert_eq!(wide.formula.param_dimension(), 4);
    assert!(matches!(
        exact_member_grid(&w, &wide.formula, Polarity::Violation, 5),
        Err(MembershipError::DimensionTooHigh(_))
    ));
    let bad = OptimizerConfig {
        budget: 0,
        ..OptimizerConfig::default()
    };
    assert!(matches!(
        member_query(&w, &split_class(), Polarity::Violation, &bad),
        Err(MembershipError::InvalidConfig(_))
    ));
}
