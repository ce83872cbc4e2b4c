//! Membership queries: does a signal belong to a class?
//!
//! A signal belongs to a violation class when some admissible valuation makes
//! the instantiated class strictly violated (strictly satisfied for a
//! satisfaction class). [`member_query`] searches the unit cube with a budget
//! of robustness evaluations; a positive answer carries a re-checkable
//! witness, a negative one only means the budget ran out. [`exact_member_grid`]
//! scans a lattice instead and serves as the deterministic reference.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classes::{constant_value, Polarity};
use crate::pstl::{ParamFormula, ParamSpace, Valuation};
use crate::signal::Signal;
use crate::stl::{Monitor, MonitorError};

#[derive(Debug, Error, PartialEq)]
pub enum MembershipError {
    #[error("class references variable `{0}` missing from the signal")]
    UnknownVariable(String),
    #[error("class has no members by construction and must not be queried")]
    EmptyClassQueried,
    #[error("grid oracle supports at most 3 parameters, class has {0}")]
    DimensionTooHigh(usize),
    #[error("invalid optimizer configuration: {0}")]
    InvalidConfig(String),
}

impl From<MonitorError> for MembershipError {
    fn from(e: MonitorError) -> Self {
        match e {
            MonitorError::UnknownVariable(v) => MembershipError::UnknownVariable(v),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    /// Maximum number of robustness evaluations per query.
    pub budget: usize,
    /// Share of the budget spent on Latin hypercube sampling.
    pub init_fraction: f64,
    /// Simplex runs after the first one.
    pub restarts: usize,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            budget: 100,
            init_fraction: 0.5,
            restarts: 2,
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<(), MembershipError> {
        if self.budget == 0 {
            return Err(MembershipError::InvalidConfig(
                "budget must be at least 1".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.init_fraction) {
            return Err(MembershipError::InvalidConfig(
                "init_fraction must lie in [0, 1]".into(),
            ));
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        OptimizerConfig {
            seed,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Outcome {
    Member {
        witness: Valuation,
        robustness: f64,
    },
    NotFound {
        best: Valuation,
        best_robustness: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipVerdict {
    pub outcome: Outcome,
    /// Robustness evaluations performed.
    pub queries_spent: usize,
    /// The search covered the whole space it is defined over (no parameters,
    /// or the full lattice), so `NotFound` is a definite answer.
    pub exhaustive: bool,
}

impl MembershipVerdict {
    pub fn is_member(&self) -> bool {
        matches!(self.outcome, Outcome::Member { .. })
    }
}

/// Decorrelates per-query seeds: the same base seed, signal index and class
/// key always give the same stream regardless of scheduling.
pub fn derive_seed(base: u64, signal: usize, class_key: &str) -> u64 {
    // FNV-1a over the key, then a splitmix64 finaliser
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in class_key.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    let mut z = base ^ h.rotate_left(17) ^ (signal as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Evaluates the signed objective and tracks budget, best point and success.
struct Objective<'a> {
    signal: &'a Signal,
    psi: &'a ParamFormula,
    space: ParamSpace,
    sign: f64,
    budget: usize,
    spent: usize,
    best: Option<(Valuation, f64)>,
    found: Option<(Valuation, f64)>,
}

impl<'a> Objective<'a> {
    fn new(signal: &'a Signal, psi: &'a ParamFormula, polarity: Polarity, budget: usize) -> Self {
        Objective {
            signal,
            psi,
            space: ParamSpace::for_signal(psi, signal),
            sign: match polarity {
                Polarity::Violation => 1.0,
                Polarity::Satisfaction => -1.0,
            },
            budget,
            spent: 0,
            best: None,
            found: None,
        }
    }

    fn done(&self) -> bool {
        self.found.is_some() || self.spent >= self.budget
    }

    /// Signed robustness at a unit-cube point; `+inf` once the search is over.
    fn eval(&mut self, raw: &[f64]) -> Result<f64, MembershipError> {
        if self.done() {
            return Ok(f64::INFINITY);
        }
        let theta = self.space.unit_to_valuation(raw);
        let formula = self
            .psi
            .instantiate(&theta, &self.space)
            .expect("unit_to_valuation yields admissible valuations");
        let rho = Monitor::new(&formula, self.signal.variables())?
            .robustness(self.signal)?
            .value();
        self.spent += 1;
        let value = self.sign * rho;
        if self
            .best
            .as_ref()
            .is_none_or(|(_, b)| value < self.sign * *b)
        {
            self.best = Some((theta.clone(), rho));
        }
        if value < 0.0 {
            self.found = Some((theta, rho));
        }
        Ok(value)
    }

    fn finish(self, exhaustive: bool) -> MembershipVerdict {
        let outcome = match (self.found, self.best) {
            (Some((witness, robustness)), _) => Outcome::Member {
                witness,
                robustness,
            },
            (None, Some((best, best_robustness))) => Outcome::NotFound {
                best,
                best_robustness,
            },
            (None, None) => unreachable!("at least one evaluation is always made"),
        };
        MembershipVerdict {
            outcome,
            queries_spent: self.spent,
            exhaustive,
        }
    }
}

fn check_not_empty(psi: &ParamFormula, polarity: Polarity) -> Result<(), MembershipError> {
    if constant_value(psi.body()) == Some(polarity == Polarity::Violation) {
        return Err(MembershipError::EmptyClassQueried);
    }
    Ok(())
}

/// Budgeted search for a valuation putting `signal` in class `psi`.
///
/// Latin hypercube sampling spends `init_fraction` of the budget, then
/// Nelder-Mead runs from the best samples (clamped to the unit cube) until
/// the budget is used up. Stops at the first strictly negative signed
/// robustness. Parameter-free classes take a single exact evaluation.
pub fn member_query(
    signal: &Signal,
    psi: &ParamFormula,
    polarity: Polarity,
    cfg: &OptimizerConfig,
) -> Result<MembershipVerdict, MembershipError> {
    cfg.validate()?;
    check_not_empty(psi, polarity)?;
    let dim = psi.param_dimension();
    let mut obj = Objective::new(signal, psi, polarity, cfg.budget);
    if dim == 0 {
        obj.eval(&[])?;
        return Ok(obj.finish(true));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let n_init = ((cfg.init_fraction * cfg.budget as f64).ceil() as usize).clamp(1, cfg.budget);
    let mut samples: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n_init);
    for x in latin_hypercube(&mut rng, n_init, dim) {
        let v = obj.eval(&x)?;
        samples.push((x, v));
        if obj.done() {
            return Ok(obj.finish(false));
        }
    }
    samples.sort_by(|a, b| a.1.total_cmp(&b.1));

    let per_run = ((cfg.budget - obj.spent) / (cfg.restarts + 1)).max(dim + 2);
    let mut run = 0;
    while !obj.done() {
        let start = if run <= cfg.restarts && run < samples.len() {
            samples[run].0.clone()
        } else {
            (0..dim).map(|_| rng.random::<f64>()).collect()
        };
        let limit = (obj.spent + per_run).min(cfg.budget);
        nelder_mead(&mut obj, start, limit)?;
        run += 1;
    }
    Ok(obj.finish(false))
}

fn latin_hypercube(rng: &mut impl Rng, n: usize, dim: usize) -> Vec<Vec<f64>> {
    let mut points = vec![vec![0.0; dim]; n];
    for d in 0..dim {
        let mut strata: Vec<usize> = (0..n).collect();
        strata.shuffle(rng);
        for (p, s) in points.iter_mut().zip(strata) {
            p[d] = (s as f64 + rng.random::<f64>()) / n as f64;
        }
    }
    points
}

fn clamp_unit(x: Vec<f64>) -> Vec<f64> {
    x.into_iter().map(|v| v.clamp(0.0, 1.0)).collect()
}

/// Nelder-Mead on the unit cube until `obj` reaches `limit` evaluations,
/// succeeds, or the simplex collapses.
fn nelder_mead(
    obj: &mut Objective<'_>,
    start: Vec<f64>,
    limit: usize,
) -> Result<(), MembershipError> {
    const STEP: f64 = 0.2;
    let dim = start.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    let f0 = obj.eval(&start)?;
    simplex.push((start.clone(), f0));
    for i in 0..dim {
        let mut x = start.clone();
        x[i] = if x[i] + STEP <= 1.0 {
            x[i] + STEP
        } else {
            x[i] - STEP
        };
        let f = obj.eval(&x)?;
        simplex.push((x, f));
    }
    let stop = |obj: &Objective<'_>| obj.done() || obj.spent >= limit;
    while !stop(obj) {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let size = simplex[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if size < 1e-6 {
            break;
        }
        let worst = simplex[dim].clone();
        let centroid: Vec<f64> = (0..dim)
            .map(|i| simplex[..dim].iter().map(|(x, _)| x[i]).sum::<f64>() / dim as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            clamp_unit(
                centroid
                    .iter()
                    .zip(&worst.0)
                    .map(|(c, w)| c + t * (c - w))
                    .collect(),
            )
        };
        let xr = along(1.0);
        let fr = obj.eval(&xr)?;
        if fr < simplex[0].1 {
            let xe = along(2.0);
            let fe = obj.eval(&xe)?;
            simplex[dim] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[dim - 1].1 {
            simplex[dim] = (xr, fr);
        } else {
            let (xc, fc) = if fr < worst.1 {
                let x = along(0.5);
                let f = obj.eval(&x)?;
                (x, f)
            } else {
                let x = along(-0.5);
                let f = obj.eval(&x)?;
                (x, f)
            };
            if fc < worst.1.min(fr) {
                simplex[dim] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for entry in simplex.iter_mut().skip(1) {
                    let x: Vec<f64> = best
                        .iter()
                        .zip(&entry.0)
                        .map(|(b, v)| b + 0.5 * (v - b))
                        .collect();
                    let f = obj.eval(&x)?;
                    *entry = (x, f);
                    if stop(obj) {
                        break;
                    }
                }
            }
        }
    }
    Ok(())
}

/// Deterministic lattice scan with `grid_n` points per parameter.
///
/// Lattice coordinates are `i / (grid_n - 1)` mapped through the same gap
/// encoding as the optimizer; within a group only non-decreasing coordinate
/// tuples are visited since the encoding sorts them anyway.
pub fn exact_member_grid(
    signal: &Signal,
    psi: &ParamFormula,
    polarity: Polarity,
    grid_n: usize,
) -> Result<MembershipVerdict, MembershipError> {
    check_not_empty(psi, polarity)?;
    let dim = psi.param_dimension();
    if dim > 3 {
        return Err(MembershipError::DimensionTooHigh(dim));
    }
    if grid_n == 0 {
        return Err(MembershipError::InvalidConfig(
            "grid resolution must be at least 1".into(),
        ));
    }
    let mut obj = Objective::new(signal, psi, polarity, usize::MAX);
    if dim == 0 {
        obj.eval(&[])?;
        return Ok(obj.finish(true));
    }
    let coord = |i: usize| {
        if grid_n == 1 {
            0.5
        } else {
            i as f64 / (grid_n - 1) as f64
        }
    };
    // group boundaries in the flattened coordinate vector
    let mut same_group_as_prev = Vec::with_capacity(dim);
    for g in psi.groups() {
        for j in 0..g.k - 1 {
            same_group_as_prev.push(j > 0);
        }
    }
    let mut digits = vec![0usize; dim];
    let mut x = vec![0.0; dim];
    'lattice: loop {
        let sorted = (1..dim).all(|i| !same_group_as_prev[i] || digits[i - 1] <= digits[i]);
        if sorted {
            for (xi, &d) in x.iter_mut().zip(&digits) {
                *xi = coord(d);
            }
            obj.eval(&x)?;
            if obj.done() {
                break;
            }
        }
        for i in (0..dim).rev() {
            digits[i] += 1;
            if digits[i] < grid_n {
                continue 'lattice;
            }
            digits[i] = 0;
        }
        break;
    }
    Ok(obj.finish(true))
}
