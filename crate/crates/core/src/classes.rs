//! Satisfaction and violation classes of a formula, and the inclusion pairs
//! identified between them.
//!
//! Every temporal operator is split into `k` parametric segments (configured
//! per AST path through [`KConfig`]) and each segment independently picks a
//! class of the operand. Nested parametric classes get their own breakpoint
//! groups per occurrence. Classes are deduplicated by their canonical text
//! after folding boolean constants; temporal operators over constants are
//! kept as written.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pstl::{Bound, ParamFormula, ParamInterval, ParamStl, SplitGroup};
use crate::stl::{child_path, Formula, Interval, Stl};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("k must be at least 1 (got {k} for `{path}`)")]
    InvalidK { path: String, k: usize },
    #[error("malformed k-config: {0}")]
    Json(#[from] serde_json::Error),
    #[error("cannot read k-config {path}: {message}")]
    Io { path: String, message: String },
}

/// Number of segments per temporal sub-formula, addressed by AST path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KConfig {
    pub default_k: usize,
    #[serde(default)]
    pub overrides: BTreeMap<String, usize>,
}

impl Default for KConfig {
    fn default() -> Self {
        KConfig::uniform(1)
    }
}

impl KConfig {
    pub fn uniform(k: usize) -> Self {
        KConfig {
            default_k: k,
            overrides: BTreeMap::new(),
        }
    }

    pub fn with_override(mut self, path: &str, k: usize) -> Self {
        self.overrides.insert(path.to_string(), k);
        self
    }

    pub fn k_for(&self, path: &str) -> usize {
        self.overrides.get(path).copied().unwrap_or(self.default_k)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.default_k == 0 {
            return Err(ConfigError::InvalidK {
                path: "default".into(),
                k: 0,
            });
        }
        if let Some((path, &k)) = self.overrides.iter().find(|(_, &k)| k == 0) {
            return Err(ConfigError::InvalidK {
                path: path.clone(),
                k,
            });
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: KConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        KConfig::from_json(&text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    Satisfaction,
    Violation,
}

impl Polarity {
    pub fn flip(self) -> Self {
        match self {
            Polarity::Satisfaction => Polarity::Violation,
            Polarity::Violation => Polarity::Satisfaction,
        }
    }

    /// The constant whose class is empty under this polarity.
    fn unit<I>(self) -> Stl<I> {
        match self {
            Polarity::Violation => Stl::True,
            Polarity::Satisfaction => Stl::False,
        }
    }
}

/// Index of a class in generation order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClassId(pub u32);

impl ClassId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "c{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Class {
    pub id: ClassId,
    pub formula: ParamFormula,
    /// No signal can belong to this class: it is constantly true (violation)
    /// or constantly false (satisfaction).
    pub empty: bool,
}

impl Class {
    pub fn canonical(&self) -> String {
        self.formula.canonical()
    }
}

#[derive(Debug, Clone)]
pub struct ClassSet {
    polarity: Polarity,
    source: Formula,
    classes: Vec<Class>,
    pairs: Vec<(ClassId, ClassId)>,
    identity: ClassId,
}

impl ClassSet {
    /// A hand-built class set over `formulas` with the given inclusion
    /// pairs (indices into `formulas`). The identity class is the formula
    /// equal to `source`; returns `None` when there is none.
    pub fn from_parts(
        source: Formula,
        polarity: Polarity,
        formulas: Vec<ParamFormula>,
        pairs: &[(usize, usize)],
    ) -> Option<ClassSet> {
        let target = ParamFormula::from_formula(&source).canonical();
        let identity = formulas.iter().position(|f| f.canonical() == target)?;
        let classes = formulas
            .into_iter()
            .enumerate()
            .map(|(i, formula)| Class {
                id: ClassId(i as u32),
                empty: constant_value(formula.body()) == Some(polarity == Polarity::Violation),
                formula,
            })
            .collect();
        let mut pairs: Vec<(ClassId, ClassId)> = pairs
            .iter()
            .map(|&(a, b)| (ClassId(a as u32), ClassId(b as u32)))
            .collect();
        pairs.sort();
        pairs.dedup();
        Some(ClassSet {
            polarity,
            source,
            classes,
            pairs,
            identity: ClassId(identity as u32),
        })
    }

    pub fn polarity(&self) -> Polarity {
        self.polarity
    }

    pub fn source(&self) -> &Formula {
        &self.source
    }

    pub fn classes(&self) -> &[Class] {
        &self.classes
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn get(&self, id: ClassId) -> &Class {
        &self.classes[id.index()]
    }

    pub fn non_empty(&self) -> impl Iterator<Item = &Class> {
        self.classes.iter().filter(|c| !c.empty)
    }

    pub fn find(&self, canonical: &str) -> Option<ClassId> {
        self.classes
            .iter()
            .find(|c| c.canonical() == canonical)
            .map(|c| c.id)
    }

    /// The class built by choosing the operand itself at every step. For
    /// `k = 1` everywhere it is the source formula; otherwise it is the
    /// source with every interval split, which is equivalent to it.
    pub fn identity(&self) -> ClassId {
        self.identity
    }

    /// Identified inclusion pairs `(psi, sigma)`: the class set of `psi` is
    /// contained in that of `sigma`. Reflexive pairs are included.
    pub fn order_pairs(&self) -> &[(ClassId, ClassId)] {
        &self.pairs
    }
}

pub fn violation_classes(phi: &Formula, cfg: &KConfig) -> ClassSet {
    generate(phi, cfg, Polarity::Violation)
}

pub fn satisfaction_classes(phi: &Formula, cfg: &KConfig) -> ClassSet {
    generate(phi, cfg, Polarity::Satisfaction)
}

pub fn class_count(phi: &Formula, cfg: &KConfig, polarity: Polarity) -> usize {
    generate(phi, cfg, polarity).len()
}

pub fn generate(phi: &Formula, cfg: &KConfig, polarity: Polarity) -> ClassSet {
    let level = gen(phi, "", polarity, cfg);
    let classes: Vec<Class> = level
        .classes
        .into_iter()
        .enumerate()
        .map(|(i, c)| {
            let empty = constant_value(c.formula.body()) == Some(polarity == Polarity::Violation);
            Class {
                id: ClassId(i as u32),
                formula: c.formula,
                empty,
            }
        })
        .collect();
    let identity = level
        .identity
        .map(|i| ClassId(i as u32))
        .expect("the identity class is always generated");
    let mut pairs: Vec<(ClassId, ClassId)> = level
        .pairs
        .into_iter()
        .map(|(a, b)| (ClassId(a as u32), ClassId(b as u32)))
        .collect();
    pairs.sort();
    pairs.dedup();
    ClassSet {
        polarity,
        source: phi.clone(),
        classes,
        pairs,
        identity,
    }
}

/// Canonical text of `f` after constant folding, as used for class identity.
pub fn canonical_form(f: &ParamFormula) -> String {
    ParamFormula::new(fold(f.body()), f.groups()).canonical()
}

struct Gen {
    formula: ParamFormula,
}

/// Classes of one sub-formula with their pairs (indices into `classes`).
struct Level {
    classes: Vec<Gen>,
    pairs: Vec<(usize, usize)>,
    identity: Option<usize>,
}

fn leaf(items: Vec<ParamStl>, pairs: Vec<(usize, usize)>, identity: Option<usize>) -> Level {
    Level {
        classes: items
            .into_iter()
            .map(|b| Gen {
                formula: ParamFormula::new(b, &[]),
            })
            .collect(),
        pairs,
        identity,
    }
}

fn gen(f: &Formula, path: &str, pol: Polarity, cfg: &KConfig) -> Level {
    let unit = || pol.unit::<ParamInterval>();
    match f {
        Stl::Atom(a) => leaf(
            vec![unit(), Stl::Atom(a.clone())],
            vec![(0, 1), (1, 1), (0, 0)],
            Some(1),
        ),
        Stl::True | Stl::False => {
            let c = if matches!(f, Stl::True) {
                Stl::True
            } else {
                Stl::False
            };
            if c == unit() {
                leaf(vec![c], vec![(0, 0)], Some(0))
            } else {
                leaf(vec![unit(), c], vec![(0, 1), (1, 1), (0, 0)], Some(1))
            }
        }
        Stl::Not(x) => {
            let inner = gen(x, &child_path(path, 0), pol.flip(), cfg);
            combine(&[&inner], |parts| mk_not(parts[0].clone()), None)
        }
        Stl::And(a, b) | Stl::Or(a, b) => {
            let left = gen(a, &child_path(path, 0), pol, cfg);
            let right = gen(b, &child_path(path, 1), pol, cfg);
            let is_and = matches!(f, Stl::And(..));
            combine(
                &[&left, &right],
                |p| {
                    if is_and {
                        mk_and(p[0].clone(), p[1].clone())
                    } else {
                        mk_or(p[0].clone(), p[1].clone())
                    }
                },
                None,
            )
        }
        Stl::Always(i, x) | Stl::Eventually(i, x) => {
            let k = cfg.k_for(path);
            let inner = gen(x, &child_path(path, 0), pol, cfg);
            let always = matches!(f, Stl::Always(..));
            let slots: Vec<&Level> = vec![&inner; k];
            let split = Split { base: *i, k };
            combine(
                &slots,
                |p| {
                    let segs = (1..=k).map(|s| {
                        let iv = split.segment(s);
                        if always {
                            Stl::always(iv, p[s - 1].clone())
                        } else {
                            Stl::eventually(iv, p[s - 1].clone())
                        }
                    });
                    if always {
                        segs.reduce(mk_and).expect("k >= 1")
                    } else {
                        segs.reduce(mk_or).expect("k >= 1")
                    }
                },
                split.group(),
            )
        }
        Stl::Until(i, a, b) => {
            let k = cfg.k_for(path);
            let left = gen(a, &child_path(path, 0), pol, cfg);
            let right = gen(b, &child_path(path, 1), pol, cfg);
            // slots: psi_1..psi_k, sigma_1..sigma_k, xi_1..xi_{k-1}
            let mut slots: Vec<&Level> = vec![&left; k];
            slots.extend(std::iter::repeat_n(&right, k));
            slots.extend(std::iter::repeat_n(&left, k - 1));
            let split = Split { base: *i, k };
            combine(
                &slots,
                |p| {
                    (1..=k)
                        .map(|s| {
                            let head = Stl::until(
                                split.segment(s),
                                p[s - 1].clone(),
                                p[k + s - 1].clone(),
                            );
                            (1..s).fold(head, |acc, j| {
                                mk_and(acc, Stl::always(split.segment(j), p[2 * k + j - 1].clone()))
                            })
                        })
                        .reduce(mk_or)
                        .expect("k >= 1")
                },
                split.group(),
            )
        }
    }
}

/// The `k`-split of one temporal operator. Its breakpoint group is given the
/// placeholder id `usize::MAX` and renumbered when the class is assembled.
struct Split {
    base: Interval,
    k: usize,
}

const NEW_GROUP: usize = usize::MAX;

impl Split {
    fn segment(&self, i: usize) -> ParamInterval {
        if self.k == 1 {
            ParamInterval::fixed(self.base)
        } else {
            ParamInterval::segment(self.base, self.k, NEW_GROUP, i)
        }
    }

    fn group(&self) -> Option<SplitGroup> {
        (self.k > 1).then_some(SplitGroup {
            base: self.base,
            k: self.k,
        })
    }
}

/// Builds the product of `slots` through `build`, deduplicating by canonical
/// form and lifting component pairs slot-wise.
///
/// Each slot's components get their breakpoint groups shifted to a private
/// range, so repeated components never share parameters. `new_group`, when
/// present, is the group referenced by `NEW_GROUP` placeholders.
fn combine(
    slots: &[&Level],
    build: impl Fn(&[ParamStl]) -> ParamStl,
    new_group: Option<SplitGroup>,
) -> Level {
    let radix: Vec<usize> = slots.iter().map(|l| l.classes.len()).collect();
    let total: usize = radix.iter().product();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut classes: Vec<Gen> = Vec::new();
    let mut tuple_to_class = Vec::with_capacity(total);
    let mut digits = vec![0usize; slots.len()];
    for _ in 0..total {
        let mut groups: Vec<SplitGroup> = Vec::new();
        let mut parts = Vec::with_capacity(slots.len());
        for (slot, &d) in slots.iter().zip(&digits) {
            let comp = &slot.classes[d].formula;
            parts.push(offset_groups(comp.body(), groups.len()));
            groups.extend_from_slice(comp.groups());
        }
        let mut body = build(&parts);
        if let Some(g) = new_group {
            let id = groups.len();
            groups.push(g);
            body = replace_placeholder(&body, id);
        }
        let formula = ParamFormula::new(body, &groups);
        let key = formula.canonical();
        let next = classes.len();
        let at = *index.entry(key).or_insert(next);
        if at == next {
            classes.push(Gen { formula });
        }
        tuple_to_class.push(at);
        increment(&mut digits, &radix);
    }

    let encode = |tuple: &[usize]| {
        tuple
            .iter()
            .zip(&radix)
            .fold(0, |acc, (&d, &r)| acc * r + d)
    };
    let identity = slots
        .iter()
        .map(|l| l.identity)
        .collect::<Option<Vec<usize>>>()
        .map(|t| tuple_to_class[encode(&t)]);

    let pair_radix: Vec<usize> = slots.iter().map(|l| l.pairs.len()).collect();
    let pair_total: usize = pair_radix.iter().product();
    let mut pairs = Vec::with_capacity(pair_total);
    let mut pdigits = vec![0usize; slots.len()];
    let mut lo = vec![0usize; slots.len()];
    let mut hi = vec![0usize; slots.len()];
    for _ in 0..pair_total {
        for (s, slot) in slots.iter().enumerate() {
            let (a, b) = slot.pairs[pdigits[s]];
            lo[s] = a;
            hi[s] = b;
        }
        pairs.push((tuple_to_class[encode(&lo)], tuple_to_class[encode(&hi)]));
        increment(&mut pdigits, &pair_radix);
    }
    pairs.sort_unstable();
    pairs.dedup();
    Level {
        classes,
        pairs,
        identity,
    }
}

/// Rewrites a parameter-free class into the finer class set obtained with
/// `k` segments everywhere, choosing the same component in every segment.
///
/// This is the class of the `k`-split generation that corresponds to `psi`:
/// it is equivalent to `psi`, so memberships must agree. Returns `None` when
/// `psi` already has parameters.
pub fn refine_uniform(psi: &ParamFormula, k: usize) -> Option<ParamFormula> {
    if psi.param_dimension() > 0 || k == 0 {
        return None;
    }
    let mut groups = Vec::new();
    let body = refine_body(psi.body(), k, &mut groups);
    Some(ParamFormula::new(body, &groups))
}

fn refine_body(f: &ParamStl, k: usize, groups: &mut Vec<SplitGroup>) -> ParamStl {
    let base = |i: &ParamInterval| match (i.lo, i.hi) {
        (Bound::Fixed(lo), Bound::Fixed(hi)) => Interval::new(lo, hi).expect("valid interval"),
        _ => unreachable!("parameter-free class"),
    };
    // one fresh group per operator occurrence, allocated before the operands
    let split = |i: &ParamInterval, groups: &mut Vec<SplitGroup>| {
        let split = Split { base: base(i), k };
        let id = groups.len();
        if let Some(g) = split.group() {
            groups.push(g);
        }
        move |s: usize| {
            let iv = split.segment(s);
            ParamInterval {
                lo: relabel(iv.lo, id),
                hi: relabel(iv.hi, id),
            }
        }
    };
    match f {
        Stl::True | Stl::False | Stl::Atom(_) => f.clone(),
        Stl::Not(x) => mk_not(refine_body(x, k, groups)),
        Stl::And(a, b) => mk_and(refine_body(a, k, groups), refine_body(b, k, groups)),
        Stl::Or(a, b) => mk_or(refine_body(a, k, groups), refine_body(b, k, groups)),
        Stl::Always(i, x) => {
            let seg = split(i, groups);
            (1..=k)
                .map(|s| Stl::always(seg(s), refine_body(x, k, groups)))
                .reduce(mk_and)
                .expect("k >= 1")
        }
        Stl::Eventually(i, x) => {
            let seg = split(i, groups);
            (1..=k)
                .map(|s| Stl::eventually(seg(s), refine_body(x, k, groups)))
                .reduce(mk_or)
                .expect("k >= 1")
        }
        Stl::Until(i, a, b) => {
            let seg = split(i, groups);
            (1..=k)
                .map(|s| {
                    let head =
                        Stl::until(seg(s), refine_body(a, k, groups), refine_body(b, k, groups));
                    (1..s).fold(head, |acc, j| {
                        mk_and(acc, Stl::always(seg(j), refine_body(a, k, groups)))
                    })
                })
                .reduce(mk_or)
                .expect("k >= 1")
        }
    }
}

fn relabel(b: Bound, id: usize) -> Bound {
    match b {
        Bound::Break {
            group: NEW_GROUP,
            index,
        } => Bound::Break { group: id, index },
        other => other,
    }
}

/// Mixed-radix counter, most significant digit first.
fn increment(digits: &mut [usize], radix: &[usize]) {
    for i in (0..digits.len()).rev() {
        digits[i] += 1;
        if digits[i] < radix[i] {
            return;
        }
        digits[i] = 0;
    }
}

fn map_bounds(f: &ParamStl, g: impl Fn(Bound) -> Bound) -> ParamStl {
    f.try_map_intervals(&mut |i: &ParamInterval| {
        Ok::<_, ()>(ParamInterval {
            lo: g(i.lo),
            hi: g(i.hi),
        })
    })
    .expect("infallible")
}

fn offset_groups(f: &ParamStl, by: usize) -> ParamStl {
    if by == 0 {
        return f.clone();
    }
    map_bounds(f, |b| match b {
        Bound::Break { group, index } if group != NEW_GROUP => Bound::Break {
            group: group + by,
            index,
        },
        other => other,
    })
}

fn replace_placeholder(f: &ParamStl, id: usize) -> ParamStl {
    map_bounds(f, |b| match b {
        Bound::Break {
            group: NEW_GROUP,
            index,
        } => Bound::Break { group: id, index },
        other => other,
    })
}

fn mk_not(x: ParamStl) -> ParamStl {
    match x {
        Stl::True => Stl::False,
        Stl::False => Stl::True,
        Stl::Not(inner) => *inner,
        other => other.not(),
    }
}

fn mk_and(a: ParamStl, b: ParamStl) -> ParamStl {
    match (a, b) {
        (Stl::False, _) | (_, Stl::False) => Stl::False,
        (Stl::True, x) | (x, Stl::True) => x,
        (a, b) => a.and(b),
    }
}

fn mk_or(a: ParamStl, b: ParamStl) -> ParamStl {
    match (a, b) {
        (Stl::True, _) | (_, Stl::True) => Stl::True,
        (Stl::False, x) | (x, Stl::False) => x,
        (a, b) => a.or(b),
    }
}

/// Bottom-up boolean constant folding.
fn fold(f: &ParamStl) -> ParamStl {
    match f {
        Stl::True | Stl::False | Stl::Atom(_) => f.clone(),
        Stl::Not(x) => mk_not(fold(x)),
        Stl::And(a, b) => mk_and(fold(a), fold(b)),
        Stl::Or(a, b) => mk_or(fold(a), fold(b)),
        Stl::Always(i, x) => Stl::always(*i, fold(x)),
        Stl::Eventually(i, x) => Stl::eventually(*i, fold(x)),
        Stl::Until(i, a, b) => Stl::until(*i, fold(a), fold(b)),
    }
}

/// Truth value of `f` when it is the same on every signal and valuation.
///
/// Conservative: `None` means "not shown constant". Temporal windows are
/// never empty, so `G`/`F` over a constant is that constant.
pub(crate) fn constant_value<I: IntervalStart>(f: &Stl<I>) -> Option<bool> {
    match f {
        Stl::True => Some(true),
        Stl::False => Some(false),
        Stl::Atom(_) => None,
        Stl::Not(x) => constant_value(x).map(|v| !v),
        Stl::And(a, b) => match (constant_value(a), constant_value(b)) {
            (Some(false), _) | (_, Some(false)) => Some(false),
            (Some(true), Some(true)) => Some(true),
            _ => None,
        },
        Stl::Or(a, b) => match (constant_value(a), constant_value(b)) {
            (Some(true), _) | (_, Some(true)) => Some(true),
            (Some(false), Some(false)) => Some(false),
            _ => None,
        },
        Stl::Always(_, x) | Stl::Eventually(_, x) => constant_value(x),
        Stl::Until(i, a, b) => match (constant_value(a), constant_value(b)) {
            (_, Some(false)) => Some(false),
            // the first window point is the current instant, where the
            // inner infimum is over an empty set
            (_, Some(true)) if i.starts_at_zero() => Some(true),
            (Some(true), Some(true)) => Some(true),
            _ => None,
        },
    }
}

pub(crate) trait IntervalStart {
    fn starts_at_zero(&self) -> bool;
}

impl IntervalStart for Interval {
    fn starts_at_zero(&self) -> bool {
        self.lo() == 0.0
    }
}

impl IntervalStart for ParamInterval {
    fn starts_at_zero(&self) -> bool {
        self.lo == Bound::Fixed(0.0)
    }
}
