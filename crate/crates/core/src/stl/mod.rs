//! Signal Temporal Logic: abstract syntax, surface parser and the quantitative
//! robustness monitor.
//!
//! The syntax tree [`Stl`] is generic over the interval type so the same
//! shape carries both concrete formulas ([`Formula`], with numeric bounds) and
//! the timing-parametric formulas built by [`crate::pstl`].

mod monitor;
mod parser;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use monitor::{robustness, satisfies, Monitor, MonitorError, Robustness, Verdict};
pub use parser::{parse, parse_spec_file, ParseError};

/// Closed, non-singular time interval `[lo, hi]` with `0 <= lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

#[derive(Debug, Error, PartialEq)]
#[error("invalid interval [{lo}, {hi}]: bounds must satisfy 0 <= lo < hi")]
pub struct IntervalError {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self, IntervalError> {
        if lo.is_finite() && hi.is_finite() && lo >= 0.0 && lo < hi {
            Ok(Interval { lo, hi })
        } else {
            Err(IntervalError { lo, hi })
        }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.lo, self.hi)
    }
}

/// Affine predicate `c0 + sum(ci * xi) > 0`.
///
/// Terms are kept sorted by variable name with zero coefficients removed, so
/// structurally equal predicates compare equal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    terms: Vec<(String, f64)>,
    constant: f64,
}

impl Atom {
    pub fn new(terms: impl IntoIterator<Item = (String, f64)>, constant: f64) -> Self {
        let mut merged: Vec<(String, f64)> = Vec::new();
        let mut all: Vec<(String, f64)> = terms.into_iter().collect();
        all.sort_by(|a, b| a.0.cmp(&b.0));
        for (name, c) in all {
            match merged.last_mut() {
                Some((last, acc)) if *last == name => *acc += c,
                _ => merged.push((name, c)),
            }
        }
        merged.retain(|(_, c)| *c != 0.0);
        // normalise -0.0 so equal predicates print identically
        Atom {
            terms: merged,
            constant: constant + 0.0,
        }
    }

    /// `var > threshold`
    pub fn greater(var: &str, threshold: f64) -> Self {
        Atom::new([(var.to_string(), 1.0)], -threshold)
    }

    /// `var < threshold`
    pub fn less(var: &str, threshold: f64) -> Self {
        Atom::new([(var.to_string(), -1.0)], threshold)
    }

    pub fn terms(&self) -> &[(String, f64)] {
        &self.terms
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn variables(&self) -> impl Iterator<Item = &str> {
        self.terms.iter().map(|(n, _)| n.as_str())
    }
}

fn write_linear(f: &mut fmt::Formatter<'_>, terms: &[(&str, f64)], constant: f64) -> fmt::Result {
    let mut first = true;
    for &(name, c) in terms {
        let (sign, mag) = if c < 0.0 { ("-", -c) } else { ("+", c) };
        if first {
            if sign == "-" {
                write!(f, "-")?;
            }
        } else {
            write!(f, " {sign} ")?;
        }
        if mag == 1.0 {
            write!(f, "{name}")?;
        } else {
            write!(f, "{mag} * {name}")?;
        }
        first = false;
    }
    if first {
        write!(f, "{}", constant + 0.0)
    } else if constant > 0.0 {
        write!(f, " + {constant}")
    } else if constant < 0.0 {
        write!(f, " - {}", -constant)
    } else {
        Ok(())
    }
}

impl fmt::Display for Atom {
    // `lhs > rhs` with positive-coefficient variables on the left; flipped to
    // `rhs < lhs` when only the right side mentions variables.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pos: Vec<(&str, f64)> = self
            .terms
            .iter()
            .filter(|(_, c)| *c > 0.0)
            .map(|(n, c)| (n.as_str(), *c))
            .collect();
        let neg: Vec<(&str, f64)> = self
            .terms
            .iter()
            .filter(|(_, c)| *c < 0.0)
            .map(|(n, c)| (n.as_str(), -*c))
            .collect();
        if pos.is_empty() && !neg.is_empty() {
            write_linear(f, &neg, 0.0)?;
            write!(f, " < {}", self.constant)
        } else if neg.is_empty() {
            write_linear(f, &pos, 0.0)?;
            write!(f, " > {}", -self.constant + 0.0)
        } else {
            write_linear(f, &pos, 0.0)?;
            write!(f, " > ")?;
            write_linear(f, &neg, -self.constant)
        }
    }
}

/// STL syntax tree, generic over the interval representation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Stl<I> {
    True,
    False,
    Atom(Atom),
    Not(Box<Stl<I>>),
    And(Box<Stl<I>>, Box<Stl<I>>),
    Or(Box<Stl<I>>, Box<Stl<I>>),
    Always(I, Box<Stl<I>>),
    Eventually(I, Box<Stl<I>>),
    Until(I, Box<Stl<I>>, Box<Stl<I>>),
}

/// A concrete STL formula.
pub type Formula = Stl<Interval>;

impl<I> Stl<I> {
    pub fn atom(a: Atom) -> Self {
        Stl::Atom(a)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Self {
        Stl::Not(Box::new(self))
    }

    pub fn and(self, other: Self) -> Self {
        Stl::And(Box::new(self), Box::new(other))
    }

    pub fn or(self, other: Self) -> Self {
        Stl::Or(Box::new(self), Box::new(other))
    }

    pub fn always(interval: I, body: Self) -> Self {
        Stl::Always(interval, Box::new(body))
    }

    pub fn eventually(interval: I, body: Self) -> Self {
        Stl::Eventually(interval, Box::new(body))
    }

    pub fn until(interval: I, left: Self, right: Self) -> Self {
        Stl::Until(interval, Box::new(left), Box::new(right))
    }

    pub fn children(&self) -> Vec<&Stl<I>> {
        match self {
            Stl::True | Stl::False | Stl::Atom(_) => vec![],
            Stl::Not(x) | Stl::Always(_, x) | Stl::Eventually(_, x) => vec![x],
            Stl::And(a, b) | Stl::Or(a, b) | Stl::Until(_, a, b) => vec![a, b],
        }
    }

    pub fn is_temporal(&self) -> bool {
        matches!(self, Stl::Always(..) | Stl::Eventually(..) | Stl::Until(..))
    }

    /// Depth of nested temporal operators.
    pub fn temporal_depth(&self) -> usize {
        let below = self
            .children()
            .into_iter()
            .map(Stl::temporal_depth)
            .max()
            .unwrap_or(0);
        below + usize::from(self.is_temporal())
    }

    /// Variables referenced by atoms, sorted and deduplicated.
    pub fn variables(&self) -> Vec<String> {
        fn walk<I>(f: &Stl<I>, out: &mut Vec<String>) {
            if let Stl::Atom(a) = f {
                out.extend(a.variables().map(str::to_string));
            }
            for c in f.children() {
                walk(c, out);
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out.sort();
        out.dedup();
        out
    }

    /// Rebuilds the tree with every interval mapped through `f`.
    pub fn try_map_intervals<J, E>(
        &self,
        f: &mut impl FnMut(&I) -> Result<J, E>,
    ) -> Result<Stl<J>, E> {
        Ok(match self {
            Stl::True => Stl::True,
            Stl::False => Stl::False,
            Stl::Atom(a) => Stl::Atom(a.clone()),
            Stl::Not(x) => Stl::Not(Box::new(x.try_map_intervals(f)?)),
            Stl::And(a, b) => Stl::And(
                Box::new(a.try_map_intervals(f)?),
                Box::new(b.try_map_intervals(f)?),
            ),
            Stl::Or(a, b) => Stl::Or(
                Box::new(a.try_map_intervals(f)?),
                Box::new(b.try_map_intervals(f)?),
            ),
            Stl::Always(i, x) => Stl::Always(f(i)?, Box::new(x.try_map_intervals(f)?)),
            Stl::Eventually(i, x) => Stl::Eventually(f(i)?, Box::new(x.try_map_intervals(f)?)),
            Stl::Until(i, a, b) => {
                let i = f(i)?;
                Stl::Until(
                    i,
                    Box::new(a.try_map_intervals(f)?),
                    Box::new(b.try_map_intervals(f)?),
                )
            }
        })
    }
}

impl<I: PartialEq> Stl<I> {
    /// The set of sub-formulas, the formula itself first, structurally deduplicated.
    pub fn subformulas(&self) -> Vec<&Stl<I>> {
        fn walk<'a, I: PartialEq>(f: &'a Stl<I>, out: &mut Vec<&'a Stl<I>>) {
            if !out.contains(&f) {
                out.push(f);
            }
            for c in f.children() {
                walk(c, out);
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out
    }
}

impl<I> Stl<I> {
    /// Sub-formulas rooted at a temporal operator, in pre-order, each tagged
    /// with its child-index path (`""` for the root, `"0.1"` for the second
    /// child of the first child).
    pub fn temporal_subformulas(&self) -> Vec<(String, &Stl<I>)> {
        fn walk<'a, I>(f: &'a Stl<I>, path: String, out: &mut Vec<(String, &'a Stl<I>)>) {
            if f.is_temporal() {
                out.push((path.clone(), f));
            }
            for (i, c) in f.children().into_iter().enumerate() {
                walk(c, child_path(&path, i), out);
            }
        }
        let mut out = Vec::new();
        walk(self, String::new(), &mut out);
        out
    }
}

pub(crate) fn child_path(parent: &str, index: usize) -> String {
    if parent.is_empty() {
        index.to_string()
    } else {
        format!("{parent}.{index}")
    }
}

impl<I: fmt::Display> fmt::Display for Stl<I> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stl::True => write!(f, "true"),
            Stl::False => write!(f, "false"),
            Stl::Atom(a) => write!(f, "{a}"),
            Stl::Not(x) => write!(f, "!({x})"),
            Stl::And(a, b) => write!(f, "({a} && {b})"),
            Stl::Or(a, b) => write!(f, "({a} || {b})"),
            Stl::Always(i, x) => write!(f, "G{i}({x})"),
            Stl::Eventually(i, x) => write!(f, "F{i}({x})"),
            Stl::Until(i, a, b) => write!(f, "({a} U{i} {b})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn alpha() -> Formula {
        Stl::atom(Atom::greater("x", 0.0))
    }

    #[test]
    fn subformula_sets() {
        let a = alpha();
        assert_eq!(a.subformulas().len(), 1);
        assert_eq!(a.clone().not().subformulas().len(), 2);
        let conj: Formula =
            Stl::atom(Atom::greater("x", 0.0)).and(Stl::atom(Atom::greater("y", 0.0)));
        assert_eq!(conj.subformulas().len(), 3);
    }

    #[test]
    fn temporal_paths() {
        let at2 = parse("G[0,30](speed < 90 && RPM < 4000)").unwrap();
        let t = at2.temporal_subformulas();
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].0, "");

        let afc1 = parse("F[0,40](G[0,10](AF - AFref < 0.05 && AF - AFref > -0.05))").unwrap();
        let paths: Vec<_> = afc1
            .temporal_subformulas()
            .into_iter()
            .map(|(p, _)| p)
            .collect();
        assert_eq!(paths, vec!["".to_string(), "0".to_string()]);

        assert!(alpha().temporal_subformulas().is_empty());
    }

    #[test]
    fn atom_display_is_readable() {
        assert_eq!(Atom::less("speed", 100.0).to_string(), "speed < 100");
        assert_eq!(Atom::greater("speed", 70.0).to_string(), "speed > 70");
        let a = Atom::new([("AF".into(), -1.0), ("AFref".into(), 1.0)], 0.05);
        assert_eq!(a.to_string(), "AFref > AF - 0.05");
    }

    #[test]
    fn interval_validation() {
        assert!(Interval::new(0.0, 30.0).is_ok());
        assert!(Interval::new(5.0, 5.0).is_err());
        assert!(Interval::new(-1.0, 5.0).is_err());
    }
}
