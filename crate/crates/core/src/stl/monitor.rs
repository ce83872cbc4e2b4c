//! Quantitative robustness over sampled signals.
//!
//! A temporal window `[a, b]` evaluated at absolute time `t` covers
//! `[min(t + a, T), min(t + b, T)]`. The infimum/supremum ranges over the two
//! (interpolated) window endpoints and every sample strictly between them, so
//! a window is never empty. The inner infimum of `U` ranges over `t` and the
//! samples strictly between `t` and the outer point; when the outer point is
//! `t` itself that set is empty and contributes `+inf`.

use std::cmp::Ordering;
use std::fmt;
use std::ops::Neg;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Formula, Stl};
use crate::signal::Signal;

#[derive(Debug, Error, PartialEq)]
pub enum MonitorError {
    #[error("formula references variable `{0}` missing from the signal")]
    UnknownVariable(String),
}

/// Robustness degree: a real number or one of the two infinities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Robustness(f64);

impl Robustness {
    pub const TOP: Robustness = Robustness(f64::INFINITY);
    pub const BOTTOM: Robustness = Robustness(f64::NEG_INFINITY);

    /// Panics on NaN, which no formula can produce from finite samples.
    pub fn new(value: f64) -> Self {
        assert!(!value.is_nan(), "robustness cannot be NaN");
        Robustness(value)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn verdict(self) -> Verdict {
        if self.0 > 0.0 {
            Verdict::Sat
        } else if self.0 < 0.0 {
            Verdict::Viol
        } else {
            Verdict::Boundary
        }
    }

    pub fn min(self, other: Self) -> Self {
        Robustness(self.0.min(other.0))
    }

    pub fn max(self, other: Self) -> Self {
        Robustness(self.0.max(other.0))
    }
}

impl Neg for Robustness {
    type Output = Robustness;
    fn neg(self) -> Robustness {
        Robustness(-self.0)
    }
}

impl Eq for Robustness {}

impl PartialOrd for Robustness {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Robustness {
    fn cmp(&self, other: &Self) -> Ordering {
        // NaN is excluded by construction, so this agrees with `<` on f64
        // except that -0.0 == 0.0.
        self.0
            .partial_cmp(&other.0)
            .expect("robustness is never NaN")
    }
}

impl fmt::Display for Robustness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 == f64::INFINITY {
            write!(f, "+inf")
        } else if self.0 == f64::NEG_INFINITY {
            write!(f, "-inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

/// Qualitative outcome of the sign rule; zero robustness is inconclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Sat,
    Viol,
    Boundary,
}

#[derive(Debug, Clone)]
enum Node {
    Const(f64),
    Atom {
        terms: Vec<(usize, f64)>,
        constant: f64,
    },
    Not(usize),
    And(usize, usize),
    Or(usize, usize),
    Always(f64, f64, usize),
    Eventually(f64, f64, usize),
    Until(f64, f64, usize, usize),
}

/// A formula compiled against a fixed variable layout.
///
/// Compilation resolves variable names to column indices once, so the same
/// monitor can evaluate many signals that share the layout.
#[derive(Debug, Clone)]
pub struct Monitor {
    nodes: Vec<Node>,
    root: usize,
    variables: Vec<String>,
}

impl Monitor {
    pub fn new(formula: &Formula, variables: &[String]) -> Result<Self, MonitorError> {
        let mut nodes = Vec::new();
        let root = compile(formula, variables, &mut nodes)?;
        Ok(Monitor {
            nodes,
            root,
            variables: variables.to_vec(),
        })
    }

    /// Robustness at time 0. The signal must carry the same variable layout
    /// the monitor was compiled for; otherwise variables are re-resolved.
    pub fn robustness(&self, signal: &Signal) -> Result<Robustness, MonitorError> {
        if signal.variables() != self.variables.as_slice() {
            let relinked = Monitor {
                nodes: relink(&self.nodes, &self.variables, signal.variables())?,
                root: self.root,
                variables: signal.variables().to_vec(),
            };
            return Ok(Robustness(relinked.eval(signal, relinked.root, 0.0)));
        }
        Ok(Robustness(self.eval(signal, self.root, 0.0)))
    }

    fn eval(&self, w: &Signal, node: usize, t: f64) -> f64 {
        match &self.nodes[node] {
            Node::Const(c) => *c,
            Node::Atom { terms, constant } => terms
                .iter()
                .fold(*constant, |acc, &(i, c)| acc + c * w.value_at_index(t, i)),
            Node::Not(x) => -self.eval(w, *x, t),
            Node::And(a, b) => self.eval(w, *a, t).min(self.eval(w, *b, t)),
            Node::Or(a, b) => self.eval(w, *a, t).max(self.eval(w, *b, t)),
            Node::Always(a, b, x) => window(w, t, *a, *b)
                .map(|p| self.eval(w, *x, p))
                .fold(f64::INFINITY, f64::min),
            Node::Eventually(a, b, x) => window(w, t, *a, *b)
                .map(|p| self.eval(w, *x, p))
                .fold(f64::NEG_INFINITY, f64::max),
            Node::Until(a, b, left, right) => self.eval_until(w, t, *a, *b, *left, *right),
        }
    }

    fn eval_until(&self, w: &Signal, t: f64, a: f64, b: f64, left: usize, right: usize) -> f64 {
        let times = w.times();
        // candidates for the inner infimum, ascending: t, then samples after t
        let first_after = times.partition_point(|&s| s <= t);
        let mut next_inner = None::<usize>; // None: `t` itself not yet consumed
        let mut inner = f64::INFINITY;
        let mut best = f64::NEG_INFINITY;
        for p in window(w, t, a, b) {
            loop {
                let (q, advance) = match next_inner {
                    None => (t, first_after),
                    Some(i) if i < times.len() => (times[i], i + 1),
                    Some(_) => break,
                };
                if q >= p {
                    break;
                }
                inner = inner.min(self.eval(w, left, q));
                next_inner = Some(advance);
            }
            let candidate = self.eval(w, right, p).min(inner);
            best = best.max(candidate);
        }
        best
    }
}

/// Evaluation points of window `[a, b]` at absolute time `t`.
fn window(w: &Signal, t: f64, a: f64, b: f64) -> impl Iterator<Item = f64> + '_ {
    let horizon = w.horizon();
    let lo = (t + a).min(horizon);
    let hi = (t + b).min(horizon);
    let times = w.times();
    let start = times.partition_point(|&s| s <= lo);
    let end = times.partition_point(|&s| s < hi);
    let inner = times[start..end.max(start)].iter().copied();
    let tail = (hi > lo).then_some(hi);
    std::iter::once(lo).chain(inner).chain(tail)
}

fn compile(f: &Formula, vars: &[String], nodes: &mut Vec<Node>) -> Result<usize, MonitorError> {
    let node = match f {
        Stl::True => Node::Const(f64::INFINITY),
        Stl::False => Node::Const(f64::NEG_INFINITY),
        Stl::Atom(atom) => Node::Atom {
            terms: atom
                .terms()
                .iter()
                .map(|(name, c)| {
                    vars.iter()
                        .position(|v| v == name)
                        .map(|i| (i, *c))
                        .ok_or_else(|| MonitorError::UnknownVariable(name.clone()))
                })
                .collect::<Result<_, _>>()?,
            constant: atom.constant(),
        },
        Stl::Not(x) => Node::Not(compile(x, vars, nodes)?),
        Stl::And(a, b) => Node::And(compile(a, vars, nodes)?, compile(b, vars, nodes)?),
        Stl::Or(a, b) => Node::Or(compile(a, vars, nodes)?, compile(b, vars, nodes)?),
        Stl::Always(i, x) => Node::Always(i.lo(), i.hi(), compile(x, vars, nodes)?),
        Stl::Eventually(i, x) => Node::Eventually(i.lo(), i.hi(), compile(x, vars, nodes)?),
        Stl::Until(i, a, b) => Node::Until(
            i.lo(),
            i.hi(),
            compile(a, vars, nodes)?,
            compile(b, vars, nodes)?,
        ),
    };
    nodes.push(node);
    Ok(nodes.len() - 1)
}

fn relink(nodes: &[Node], from: &[String], to: &[String]) -> Result<Vec<Node>, MonitorError> {
    nodes
        .iter()
        .map(|n| match n {
            Node::Atom { terms, constant } => Ok(Node::Atom {
                terms: terms
                    .iter()
                    .map(|&(i, c)| {
                        to.iter()
                            .position(|v| *v == from[i])
                            .map(|j| (j, c))
                            .ok_or_else(|| MonitorError::UnknownVariable(from[i].clone()))
                    })
                    .collect::<Result<_, _>>()?,
                constant: *constant,
            }),
            other => Ok(other.clone()),
        })
        .collect()
}

/// Robustness of `formula` on `signal` at time 0.
pub fn robustness(signal: &Signal, formula: &Formula) -> Result<Robustness, MonitorError> {
    Monitor::new(formula, signal.variables())?.robustness(signal)
}

pub fn satisfies(signal: &Signal, formula: &Formula) -> Result<Verdict, MonitorError> {
    Ok(robustness(signal, formula)?.verdict())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::Interpolation;
    use crate::stl::parse;

    fn series(var: &str, times: Vec<f64>, values: Vec<f64>) -> Signal {
        Signal::from_columns(times, &[(var, values)], Interpolation::PiecewiseConstant).unwrap()
    }

    fn rho(w: &Signal, text: &str) -> f64 {
        robustness(w, &parse(text).unwrap()).unwrap().value()
    }

    #[test]
    fn constant_speed_always() {
        let times: Vec<f64> = (0..=30).map(f64::from).collect();
        let w = series("speed", times, vec![50.0; 31]);
        assert_eq!(rho(&w, "G[0,30](speed < 100)"), 50.0);
        assert_eq!(
            satisfies(&w, &parse("G[0,30](speed < 100)").unwrap()).unwrap(),
            Verdict::Sat
        );
    }

    #[test]
    fn ramp_violates_at_horizon() {
        let times: Vec<f64> = (0..=30).map(f64::from).collect();
        let speed = times.iter().map(|t| 4.0 * t).collect();
        let w = series("speed", times, speed);
        assert_eq!(rho(&w, "G[0,30](speed < 100)"), -20.0);
        assert_eq!(
            satisfies(&w, &parse("G[0,30](speed < 100)").unwrap()).unwrap(),
            Verdict::Viol
        );
    }

    #[test]
    fn eventually_of_negative_constant() {
        let times: Vec<f64> = (0..=10).map(f64::from).collect();
        let w = series("x", times, vec![-3.0; 11]);
        assert_eq!(rho(&w, "F[0,10](x > 0)"), -3.0);
    }

    #[test]
    fn zero_robustness_is_boundary() {
        let w = series("x", vec![0.0, 1.0], vec![0.0, 0.0]);
        assert_eq!(
            satisfies(&w, &parse("F[0,1](x > 0)").unwrap()).unwrap(),
            Verdict::Boundary
        );
    }

    #[test]
    fn constants_are_infinite() {
        let w = series("x", vec![0.0, 1.0], vec![0.0, 0.0]);
        assert_eq!(rho(&w, "true"), f64::INFINITY);
        assert_eq!(rho(&w, "!true"), f64::NEG_INFINITY);
        // the inner infimum of U at the window start is over an empty set
        assert_eq!(rho(&w, "false U[0,1] true"), f64::INFINITY);
    }

    #[test]
    fn windows_are_clipped_to_horizon() {
        let w = series("x", vec![0.0, 1.0, 2.0], vec![1.0, 2.0, 5.0]);
        assert_eq!(rho(&w, "G[1,10](x > 0)"), 2.0);
        assert_eq!(rho(&w, "F[5,10](x > 0)"), 5.0);
    }

    #[test]
    fn unknown_variable() {
        let w = series("x", vec![0.0, 1.0], vec![0.0, 0.0]);
        assert_eq!(
            robustness(&w, &parse("y > 0").unwrap()),
            Err(MonitorError::UnknownVariable("y".into()))
        );
    }

    #[test]
    fn monitor_relinks_other_layouts() {
        let f = parse("F[0,1](y > x)").unwrap();
        let m = Monitor::new(&f, &["x".into(), "y".into()]).unwrap();
        let w = Signal::from_columns(
            vec![0.0, 1.0],
            &[("y", vec![1.0, 4.0]), ("x", vec![0.0, 0.0])],
            Interpolation::PiecewiseConstant,
        )
        .unwrap();
        assert_eq!(m.robustness(&w).unwrap().value(), 4.0);
    }

    #[test]
    fn robustness_order_and_display() {
        assert!(Robustness::BOTTOM < Robustness::new(-1.0));
        assert!(Robustness::new(3.0) < Robustness::TOP);
        assert_eq!(-Robustness::TOP, Robustness::BOTTOM);
        assert_eq!(Robustness::TOP.to_string(), "+inf");
    }
}
