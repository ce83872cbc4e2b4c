//! Timing-parametric STL.
//!
//! Only interval bounds are parametric. Each k-split of a temporal operator
//! owns a [`SplitGroup`]: the base interval `[a, b]` and the breakpoints
//! `u_1 < ... < u_{k-1}` that tile it into `k` segments. A segment bound is
//! either fixed (`a` or `b`) or a reference to one breakpoint of its group.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::signal::Signal;
use crate::stl::{Formula, Interval, Stl};

#[derive(Debug, Error, PartialEq)]
pub enum PstlError {
    #[error("inadmissible valuation: {0}")]
    InadmissibleValuation(String),
}

/// Interval bound: a constant, or breakpoint `index` (1-based) of `group`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Bound {
    Fixed(f64),
    Break { group: usize, index: usize },
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::Fixed(v) => write!(f, "{v}"),
            Bound::Break { group, index } => write!(f, "u{group}_{index}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamInterval {
    pub lo: Bound,
    pub hi: Bound,
}

impl ParamInterval {
    pub fn fixed(i: Interval) -> Self {
        ParamInterval {
            lo: Bound::Fixed(i.lo()),
            hi: Bound::Fixed(i.hi()),
        }
    }

    /// Segment `i` (1-based) of a `k`-split of `base` owned by `group`.
    pub fn segment(base: Interval, k: usize, group: usize, i: usize) -> Self {
        debug_assert!(1 <= i && i <= k);
        let lo = if i == 1 {
            Bound::Fixed(base.lo())
        } else {
            Bound::Break {
                group,
                index: i - 1,
            }
        };
        let hi = if i == k {
            Bound::Fixed(base.hi())
        } else {
            Bound::Break { group, index: i }
        };
        ParamInterval { lo, hi }
    }

    fn groups(&self) -> impl Iterator<Item = usize> {
        [self.lo, self.hi].into_iter().filter_map(|b| match b {
            Bound::Break { group, .. } => Some(group),
            Bound::Fixed(_) => None,
        })
    }
}

impl fmt::Display for ParamInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.lo, self.hi)
    }
}

/// One split temporal operator: its base interval and segment count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitGroup {
    pub base: Interval,
    pub k: usize,
}

pub type ParamStl = Stl<ParamInterval>;

/// A timing-parametric formula together with its parameter groups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamFormula {
    body: ParamStl,
    groups: Vec<SplitGroup>,
}

impl ParamFormula {
    /// Wraps `body`, renumbering the groups in order of first appearance
    /// (pre-order) and dropping groups that are no longer referenced. Two
    /// structurally identical classes therefore end up with equal values.
    pub fn new(body: ParamStl, groups: &[SplitGroup]) -> Self {
        let mut order: Vec<usize> = Vec::new();
        fn collect(f: &ParamStl, order: &mut Vec<usize>) {
            let interval = match f {
                Stl::Always(i, _) | Stl::Eventually(i, _) | Stl::Until(i, _, _) => Some(i),
                _ => None,
            };
            if let Some(i) = interval {
                for g in i.groups() {
                    if !order.contains(&g) {
                        order.push(g);
                    }
                }
            }
            for c in f.children() {
                collect(c, order);
            }
        }
        collect(&body, &mut order);
        let renumber = |b: Bound| match b {
            Bound::Break { group, index } => Bound::Break {
                group: order.iter().position(|&g| g == group).expect("collected"),
                index,
            },
            fixed => fixed,
        };
        let body = body
            .try_map_intervals(&mut |i: &ParamInterval| {
                Ok::<_, ()>(ParamInterval {
                    lo: renumber(i.lo),
                    hi: renumber(i.hi),
                })
            })
            .expect("infallible");
        let groups = order.iter().map(|&g| groups[g]).collect();
        ParamFormula { body, groups }
    }

    /// A parameter-free formula.
    pub fn from_formula(f: &Formula) -> Self {
        let body = f
            .try_map_intervals(&mut |i: &Interval| Ok::<_, ()>(ParamInterval::fixed(*i)))
            .expect("infallible");
        ParamFormula {
            body,
            groups: vec![],
        }
    }

    pub fn body(&self) -> &ParamStl {
        &self.body
    }

    pub fn groups(&self) -> &[SplitGroup] {
        &self.groups
    }

    /// Total number of breakpoints.
    pub fn param_dimension(&self) -> usize {
        self.groups.iter().map(|g| g.k - 1).sum()
    }

    /// Canonical textual form; equal strings mean equal classes.
    pub fn canonical(&self) -> String {
        self.body.to_string()
    }

    /// Substitutes `theta`, checking it against `space`.
    pub fn instantiate(&self, theta: &Valuation, space: &ParamSpace) -> Result<Formula, PstlError> {
        space.check(theta)?;
        self.substitute(theta)
    }

    fn substitute(&self, theta: &Valuation) -> Result<Formula, PstlError> {
        let value = |b: Bound| match b {
            Bound::Fixed(v) => v,
            Bound::Break { group, index } => theta.breakpoints[group][index - 1],
        };
        self.body.try_map_intervals(&mut |i: &ParamInterval| {
            let (lo, hi) = (value(i.lo), value(i.hi));
            Interval::new(lo, hi).map_err(|e| PstlError::InadmissibleValuation(e.to_string()))
        })
    }
}

impl fmt::Display for ParamFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.body)
    }
}

/// Breakpoints per group, each ascending.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Valuation {
    pub breakpoints: Vec<Vec<f64>>,
}

impl Valuation {
    pub fn is_empty(&self) -> bool {
        self.breakpoints.iter().all(Vec::is_empty)
    }
}

/// The admissible valuations of a [`ParamFormula`]: per group, every segment
/// is at least `delta` wide.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpace {
    groups: Vec<(SplitGroup, f64)>,
}

impl ParamSpace {
    /// Minimum segment width per group is `max(min_width, (b - a) / 100)`,
    /// capped at `(b - a) / k` so the space is never empty.
    pub fn new(psi: &ParamFormula, min_width: f64) -> Self {
        let groups = psi
            .groups
            .iter()
            .map(|g| {
                let len = g.base.width();
                let delta = min_width.max(len / 100.0).min(len / g.k as f64);
                (*g, delta)
            })
            .collect();
        ParamSpace { groups }
    }

    /// Uses the signal's largest sampling gap as the minimum width, so every
    /// segment contains at least one sample.
    pub fn for_signal(psi: &ParamFormula, signal: &Signal) -> Self {
        ParamSpace::new(psi, signal.sampling_period())
    }

    pub fn dimension(&self) -> usize {
        self.groups.iter().map(|(g, _)| g.k - 1).sum()
    }

    pub fn min_widths(&self) -> Vec<f64> {
        self.groups.iter().map(|(_, d)| *d).collect()
    }

    /// Checks group count, breakpoint count, bounds and segment widths. A
    /// relative slack of 1e-9 absorbs rounding in cumulative sums.
    pub fn check(&self, theta: &Valuation) -> Result<(), PstlError> {
        let bad = |m: String| Err(PstlError::InadmissibleValuation(m));
        if theta.breakpoints.len() != self.groups.len() {
            return bad(format!(
                "{} groups expected, {} given",
                self.groups.len(),
                theta.breakpoints.len()
            ));
        }
        for (gi, ((group, delta), us)) in self.groups.iter().zip(&theta.breakpoints).enumerate() {
            if us.len() != group.k - 1 {
                return bad(format!("group {gi}: {} breakpoints expected", group.k - 1));
            }
            let slack = 1e-9 * group.base.width();
            let mut prev = group.base.lo();
            for &u in us.iter().chain(std::iter::once(&group.base.hi())) {
                if !u.is_finite() || u - prev < delta - slack {
                    return bad(format!(
                        "group {gi}: segment [{prev}, {u}] narrower than {delta}"
                    ));
                }
                prev = u;
            }
        }
        Ok(())
    }

    /// Maps a point of the unit cube to an admissible valuation.
    ///
    /// Per group, the `k - 1` raw coordinates are sorted and their gaps
    /// `g_1..g_k` (summing to 1) become segment widths
    /// `delta + g_i * (b - a - k * delta)`. Coordinates outside `[0, 1]` are
    /// clamped. Panics if `raw` has the wrong length.
    pub fn unit_to_valuation(&self, raw: &[f64]) -> Valuation {
        assert_eq!(raw.len(), self.dimension(), "raw point has wrong dimension");
        let mut offset = 0;
        let breakpoints = self
            .groups
            .iter()
            .map(|(group, delta)| {
                let n = group.k - 1;
                let mut cuts: Vec<f64> = raw[offset..offset + n]
                    .iter()
                    .map(|r| r.clamp(0.0, 1.0))
                    .collect();
                offset += n;
                cuts.sort_by(f64::total_cmp);
                let free = group.base.width() - group.k as f64 * delta;
                let mut prev_cut = 0.0;
                let mut u = group.base.lo();
                cuts.iter()
                    .map(|&c| {
                        u += delta + (c - prev_cut) * free;
                        prev_cut = c;
                        u
                    })
                    .collect()
            })
            .collect();
        Valuation { breakpoints }
    }
}
