//! Helpers shared by the integration and acceptance tests.
#![allow(dead_code)]

use std::collections::HashMap;
use std::path::PathBuf;

use rand::Rng;
use stlclass::signal::{Interpolation, Signal};
use stlclass::stl::{parse_spec_file, Atom, Formula, Interval, Stl};

pub fn spec_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../specs")
        .join(name)
}

pub fn spec(name: &str) -> Formula {
    parse_spec_file(spec_path(name)).unwrap()
}

/// Robustness at time `t` by direct transcription of the quantitative
/// semantics. Windows are clipped to the horizon and sup/inf range over the
/// clipped ends plus every sample strictly inside.
pub struct NaiveEvaluator<'a> {
    signal: &'a Signal,
    memo: HashMap<(usize, u64), f64>,
}

impl<'a> NaiveEvaluator<'a> {
    pub fn new(signal: &'a Signal) -> Self {
        NaiveEvaluator {
            signal,
            memo: HashMap::new(),
        }
    }

    fn points(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut p = vec![lo];
        p.extend(
            self.signal
                .times()
                .iter()
                .copied()
                .filter(|&s| lo < s && s < hi),
        );
        if hi > lo {
            p.push(hi);
        }
        p
    }

    fn window(&self, t: f64, i: &Interval) -> (f64, f64) {
        let h = self.signal.horizon();
        ((t + i.lo()).min(h), (t + i.hi()).min(h))
    }

    pub fn eval(&mut self, f: &Formula, t: f64) -> f64 {
        let key = (f as *const Formula as usize, t.to_bits());
        if let Some(&v) = self.memo.get(&key) {
            return v;
        }
        let v = match f {
            Stl::True => f64::INFINITY,
            Stl::False => f64::NEG_INFINITY,
            Stl::Atom(a) => {
                a.constant()
                    + a.terms()
                        .iter()
                        .map(|(x, c)| c * self.signal.value_at(t, x).unwrap())
                        .sum::<f64>()
            }
            Stl::Not(x) => -self.eval(x, t),
            Stl::And(a, b) => self.eval(a, t).min(self.eval(b, t)),
            Stl::Or(a, b) => self.eval(a, t).max(self.eval(b, t)),
            Stl::Always(i, x) => {
                let (lo, hi) = self.window(t, i);
                self.points(lo, hi)
                    .into_iter()
                    .map(|p| self.eval(x, p))
                    .fold(f64::INFINITY, f64::min)
            }
            Stl::Eventually(i, x) => {
                let (lo, hi) = self.window(t, i);
                self.points(lo, hi)
                    .into_iter()
                    .map(|p| self.eval(x, p))
                    .fold(f64::NEG_INFINITY, f64::max)
            }
            Stl::Until(i, a, b) => {
                let (lo, hi) = self.window(t, i);
                let mut best = f64::NEG_INFINITY;
                for p in self.points(lo, hi) {
                    // inf of the left operand over [t, p)
                    let mut left = f64::INFINITY;
                    if p > t {
                        left = self.eval(a, t);
                        for s in self
                            .signal
                            .times()
                            .iter()
                            .copied()
                            .filter(|&s| t < s && s < p)
                        {
                            left = left.min(self.eval(a, s));
                        }
                    }
                    best = best.max(self.eval(b, p).min(left));
                }
                best
            }
        };
        self.memo.insert(key, v);
        v
    }
}

pub fn naive_robustness(signal: &Signal, f: &Formula) -> f64 {
    NaiveEvaluator::new(signal).eval(f, 0.0)
}

/// Signal over `vars` with `n` samples every 0.25 s and values on a 0.5 grid.
pub fn random_signal(rng: &mut impl Rng, n: usize, vars: &[&str]) -> Signal {
    let times: Vec<f64> = (0..n).map(|i| i as f64 / 4.0).collect();
    let columns: Vec<(&str, Vec<f64>)> = vars
        .iter()
        .map(|&v| {
            let col = (0..n)
                .map(|_| rng.random_range(-6i32..=6) as f64 / 2.0)
                .collect();
            (v, col)
        })
        .collect();
    Signal::from_columns(times, &columns, Interpolation::PiecewiseConstant).unwrap()
}

fn random_atom(rng: &mut impl Rng, vars: &[&str]) -> Formula {
    let var = vars[rng.random_range(0..vars.len())];
    let threshold = rng.random_range(-4i32..=4) as f64 / 2.0;
    if rng.random_bool(0.5) {
        Stl::atom(Atom::greater(var, threshold))
    } else {
        Stl::atom(Atom::less(var, threshold))
    }
}

fn random_interval(rng: &mut impl Rng) -> Interval {
    let lo = rng.random_range(0..3) as f64;
    let hi = lo + rng.random_range(1..4) as f64;
    Interval::new(lo, hi).unwrap()
}

/// Random formula of nesting depth at most `depth` with integer interval
/// bounds.
pub fn random_formula(rng: &mut impl Rng, depth: usize, vars: &[&str]) -> Formula {
    if depth == 0 || rng.random_bool(0.2) {
        return random_atom(rng, vars);
    }
    let d = depth - 1;
    match rng.random_range(0..7) {
        0 => random_formula(rng, d, vars).not(),
        1 => random_formula(rng, d, vars).and(random_formula(rng, d, vars)),
        2 => random_formula(rng, d, vars).or(random_formula(rng, d, vars)),
        3 => Stl::always(random_interval(rng), random_formula(rng, d, vars)),
        4 => Stl::eventually(random_interval(rng), random_formula(rng, d, vars)),
        _ => Stl::until(
            random_interval(rng),
            random_formula(rng, d, vars),
            random_formula(rng, d, vars),
        ),
    }
}

/// Signal with `speed` and `RPM` columns sampled every 0.1 s over [0, 30].
pub fn at_signal(speed: impl Fn(f64) -> f64, rpm: impl Fn(f64) -> f64) -> Signal {
    let times: Vec<f64> = (0..=300).map(|i| i as f64 / 10.0).collect();
    let s = times.iter().map(|&t| speed(t)).collect();
    let r = times.iter().map(|&t| rpm(t)).collect();
    Signal::from_columns(
        times,
        &[("speed", s), ("RPM", r)],
        Interpolation::PiecewiseConstant,
    )
    .unwrap()
}

/// Upper bound on the number of classes before deduplication, with `k`
/// segments everywhere.
pub fn class_bound(f: &Formula, k: u32) -> f64 {
    match f {
        Stl::True | Stl::False | Stl::Atom(_) => 2.0,
        Stl::Not(x) => class_bound(x, k),
        Stl::And(a, b) | Stl::Or(a, b) => class_bound(a, k) * class_bound(b, k),
        Stl::Always(_, x) | Stl::Eventually(_, x) => class_bound(x, k).powi(k as i32),
        Stl::Until(_, a, b) => {
            let (ca, cb) = (class_bound(a, k), class_bound(b, k));
            ca.powi(2 * k as i32 - 1) * cb.powi(k as i32)
        }
    }
}

/// Largest `k <= max_k` whose class bound stays under `limit`.
pub fn affordable_k(f: &Formula, max_k: u32, limit: f64) -> u32 {
    (1..=max_k)
        .rev()
        .find(|&k| class_bound(f, k) <= limit)
        .unwrap_or(1)
}

/// A uniformly drawn admissible valuation for `psi` on `signal`.
pub fn random_instance(
    rng: &mut impl Rng,
    psi: &stlclass::pstl::ParamFormula,
    signal: &Signal,
) -> Formula {
    let space = stlclass::pstl::ParamSpace::for_signal(psi, signal);
    let raw: Vec<f64> = (0..space.dimension())
        .map(|_| rng.random::<f64>())
        .collect();
    let theta = space.unit_to_valuation(&raw);
    psi.instantiate(&theta, &space).unwrap()
}
