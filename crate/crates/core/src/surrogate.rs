//! Deterministic trace generators standing in for two automotive benchmark
//! plants: an automatic transmission (`speed`, `RPM`) and an air-fuel ratio
//! controller (`AF`, `AFref`).
//!
//! Both generators are infinite iterators over one seeded random stream, so
//! the first `n` traces of a seed never depend on how many are requested.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::signal::{Interpolation, Signal};
use crate::stl::{robustness, Formula, MonitorError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Plant {
    /// Automatic transmission: 30 s at 0.1 s, variables `speed` and `RPM`.
    At,
    /// Air-fuel control: 50 s at 0.1 s, variables `AF` and `AFref`.
    Afc,
}

impl Plant {
    pub fn traces(self, seed: u64) -> Box<dyn Iterator<Item = Signal> + Send> {
        match self {
            Plant::At => Box::new(AtSurrogate::new(seed)),
            Plant::Afc => Box::new(AfcSurrogate::new(seed)),
        }
    }
}

/// Uniform grid with `per_second` samples per second; `i / per_second`
/// keeps timestamps as close to their decimal values as possible.
fn grid(horizon: f64, per_second: f64) -> Vec<f64> {
    let n = (horizon * per_second).round() as usize;
    (0..=n).map(|i| i as f64 / per_second).collect()
}

const AT_HORIZON: f64 = 30.0;
const AT_DT: f64 = 0.1;
const GEAR_RATIOS: [f64; 4] = [110.0, 70.0, 45.0, 30.0];
const UPSHIFT_SPEEDS: [f64; 3] = [20.0, 45.0, 75.0];

/// Throttle and brake are piecewise constant over 5 s segments. Speed follows
/// a first-order lag towards a throttle-dependent set point. Each trace draws
/// a shift-schedule factor that scales the upshift speeds (early shifts keep
/// engine speed low, late shifts push it up); engine speed is the gear ratio
/// times vehicle speed plus a throttle-dependent slip term, through a short
/// lag.
pub struct AtSurrogate {
    rng: ChaCha8Rng,
}

impl AtSurrogate {
    pub fn new(seed: u64) -> Self {
        AtSurrogate {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

fn gear(speed: f64, schedule: f64) -> usize {
    UPSHIFT_SPEEDS
        .iter()
        .position(|&s| speed < s * schedule)
        .unwrap_or(UPSHIFT_SPEEDS.len())
}

impl Iterator for AtSurrogate {
    type Item = Signal;

    fn next(&mut self) -> Option<Signal> {
        let segments = 6;
        let throttle: Vec<f64> = (0..segments)
            .map(|_| self.rng.random_range(0.0..100.0))
            .collect();
        let brake: Vec<f64> = (0..segments)
            .map(|_| {
                if self.rng.random_bool(0.3) {
                    self.rng.random_range(0.0..325.0)
                } else {
                    0.0
                }
            })
            .collect();
        let schedule = self.rng.random_range(0.8..1.3);
        let times = grid(AT_HORIZON, 1.0 / AT_DT);
        let (tau_v, tau_rpm) = (5.0, 0.5);
        let mut v: f64 = 0.0;
        let mut rpm: f64 = 700.0;
        let mut speed = Vec::with_capacity(times.len());
        let mut engine = Vec::with_capacity(times.len());
        for (i, &t) in times.iter().enumerate() {
            let seg = ((t / 5.0) as usize).min(segments - 1);
            if i > 0 {
                let target = (1.3 * throttle[seg] - 0.3 * brake[seg]).max(0.0);
                v = (v + AT_DT * (target - v) / tau_v).max(0.0);
                let rpm_target = 700.0 + v * GEAR_RATIOS[gear(v, schedule)] + 3.0 * throttle[seg];
                rpm += AT_DT * (rpm_target - rpm) / tau_rpm;
            }
            speed.push(v);
            engine.push(rpm);
        }
        Some(
            Signal::from_columns(
                times,
                &[("speed", speed), ("RPM", engine)],
                Interpolation::PiecewiseConstant,
            )
            .expect("generated signal is well-formed"),
        )
    }
}

const AFC_HORIZON: f64 = 50.0;
const AFC_DT: f64 = 0.1;
const AF_REF: f64 = 14.7;

/// `AF - AFref` is a superposition of damped oscillations triggered by
/// disturbance pulses of random sign and amplitude at random intervals.
pub struct AfcSurrogate {
    rng: ChaCha8Rng,
}

impl AfcSurrogate {
    pub fn new(seed: u64) -> Self {
        AfcSurrogate {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl Iterator for AfcSurrogate {
    type Item = Signal;

    fn next(&mut self) -> Option<Signal> {
        let mut pulses = Vec::new();
        let mut t = self.rng.random_range(0.0..5.0);
        while t < AFC_HORIZON {
            let sign = if self.rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let amplitude = self.rng.random_range(0.1..0.3);
            pulses.push((t, sign * amplitude));
            t += self.rng.random_range(3.0..12.0);
        }
        let (tau, freq) = (3.0, 0.5);
        let times = grid(AFC_HORIZON, 1.0 / AFC_DT);
        let af = times
            .iter()
            .map(|&t| {
                let dev: f64 = pulses
                    .iter()
                    .filter(|(tp, _)| t >= *tp)
                    .map(|(tp, a)| {
                        let s = t - tp;
                        a * (-s / tau).exp() * (std::f64::consts::TAU * freq * s).cos()
                    })
                    .sum();
                AF_REF + dev
            })
            .collect();
        let reference = vec![AF_REF; times.len()];
        Some(
            Signal::from_columns(
                times,
                &[("AF", af), ("AFref", reference)],
                Interpolation::PiecewiseConstant,
            )
            .expect("generated signal is well-formed"),
        )
    }
}

/// First `n` traces of the AT stream.
pub fn gen_at_surrogate(seed: u64, n: usize) -> Vec<Signal> {
    AtSurrogate::new(seed).take(n).collect()
}

/// First `n` traces of the AFC stream.
pub fn gen_afc_surrogate(seed: u64, n: usize) -> Vec<Signal> {
    AfcSurrogate::new(seed).take(n).collect()
}

/// The first `count` traces of the stream that strictly violate `spec`,
/// named after their position in the stream. Gives up after `max_draws`.
pub fn counterexamples(
    plant: Plant,
    spec: &Formula,
    seed: u64,
    count: usize,
    max_draws: usize,
) -> Result<Vec<(String, Signal)>, MonitorError> {
    let mut out = Vec::with_capacity(count);
    for (i, w) in plant.traces(seed).take(max_draws).enumerate() {
        if out.len() == count {
            break;
        }
        if robustness(&w, spec)?.value() < 0.0 {
            out.push((format!("sig{i:04}"), w));
        }
    }
    Ok(out)
}
