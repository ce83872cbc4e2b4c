//! Finite-horizon sampled signals.
//!
//! A [`Signal`] is a strictly increasing sequence of timestamps starting at
//! zero, one row of variable values per timestamp, and an interpolation mode
//! that defines the value between samples. Signals are immutable once built.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SignalError {
    #[error("timestamps must start at 0 and be strictly increasing (index {index})")]
    NonMonotoneTime { index: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite value at row {row}, column {column}")]
    NonFiniteValue { row: usize, column: usize },
    #[error("time {time} is outside the signal horizon [0, {horizon}]")]
    OutOfHorizon { time: f64, horizon: f64 },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("io error: {0}")]
    Io(String),
}

/// How values are reconstructed between samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    /// Holds the last sample at or before the queried time.
    #[default]
    PiecewiseConstant,
    /// Linear between the two bracketing samples.
    PiecewiseLinear,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    times: Vec<f64>,
    rows: Vec<Vec<f64>>,
    variables: Vec<String>,
    interp: Interpolation,
}

impl Signal {
    pub fn from_samples(
        times: Vec<f64>,
        rows: Vec<Vec<f64>>,
        variables: Vec<String>,
        interp: Interpolation,
    ) -> Result<Self, SignalError> {
        if times.is_empty() {
            return Err(SignalError::ShapeMismatch("no samples".into()));
        }
        if times.len() != rows.len() {
            return Err(SignalError::ShapeMismatch(format!(
                "{} timestamps but {} rows",
                times.len(),
                rows.len()
            )));
        }
        if times[0] != 0.0 || !times[0].is_finite() {
            return Err(SignalError::NonMonotoneTime { index: 0 });
        }
        for (i, pair) in times.windows(2).enumerate() {
            // written this way so that NaN is rejected too
            if pair[1].partial_cmp(&pair[0]) != Some(std::cmp::Ordering::Greater)
                || !pair[1].is_finite()
            {
                return Err(SignalError::NonMonotoneTime { index: i + 1 });
            }
        }
        if times.len() < 2 {
            return Err(SignalError::ShapeMismatch(
                "a signal needs a positive horizon (at least two samples)".into(),
            ));
        }
        for (r, row) in rows.iter().enumerate() {
            if row.len() != variables.len() {
                return Err(SignalError::ShapeMismatch(format!(
                    "row {r} has {} values for {} variables",
                    row.len(),
                    variables.len()
                )));
            }
            if let Some(c) = row.iter().position(|v| !v.is_finite()) {
                return Err(SignalError::NonFiniteValue { row: r, column: c });
            }
        }
        Ok(Signal {
            times,
            rows,
            variables,
            interp,
        })
    }

    /// Builds a signal from one column per variable.
    pub fn from_columns(
        times: Vec<f64>,
        columns: &[(&str, Vec<f64>)],
        interp: Interpolation,
    ) -> Result<Self, SignalError> {
        for (name, col) in columns {
            if col.len() != times.len() {
                return Err(SignalError::ShapeMismatch(format!(
                    "column `{name}` has {} values for {} timestamps",
                    col.len(),
                    times.len()
                )));
            }
        }
        let rows = (0..times.len())
            .map(|i| columns.iter().map(|(_, col)| col[i]).collect())
            .collect();
        let variables = columns.iter().map(|(n, _)| n.to_string()).collect();
        Signal::from_samples(times, rows, variables, interp)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn interpolation(&self) -> Interpolation {
        self.interp
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().expect("validated non-empty")
    }

    /// Largest gap between consecutive samples.
    pub fn sampling_period(&self) -> f64 {
        self.times
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }

    pub fn variable_index(&self, var: &str) -> Result<usize, SignalError> {
        self.variables
            .iter()
            .position(|v| v == var)
            .ok_or_else(|| SignalError::UnknownVariable(var.to_string()))
    }

    pub fn column(&self, var: &str) -> Result<Vec<f64>, SignalError> {
        let idx = self.variable_index(var)?;
        Ok(self.rows.iter().map(|r| r[idx]).collect())
    }

    pub fn value_at(&self, t: f64, var: &str) -> Result<f64, SignalError> {
        let idx = self.variable_index(var)?;
        self.check_time(t)?;
        Ok(self.value_at_index(t, idx))
    }

    /// Interpolated value of column `idx` at `t`, with `t` clamped to the horizon.
    pub(crate) fn value_at_index(&self, t: f64, idx: usize) -> f64 {
        // index of the last sample at or before t
        let k = self.times.partition_point(|&s| s <= t).max(1) - 1;
        match self.interp {
            Interpolation::PiecewiseConstant => self.rows[k][idx],
            Interpolation::PiecewiseLinear => {
                if k + 1 >= self.times.len() || self.times[k] == t {
                    return self.rows[k][idx];
                }
                let (t0, t1) = (self.times[k], self.times[k + 1]);
                let (v0, v1) = (self.rows[k][idx], self.rows[k + 1][idx]);
                v0 + (v1 - v0) * (t - t0) / (t1 - t0)
            }
        }
    }

    fn row_at(&self, t: f64) -> Vec<f64> {
        (0..self.variables.len())
            .map(|i| self.value_at_index(t, i))
            .collect()
    }

    fn check_time(&self, t: f64) -> Result<(), SignalError> {
        if !(0.0..=self.horizon()).contains(&t) {
            return Err(SignalError::OutOfHorizon {
                time: t,
                horizon: self.horizon(),
            });
        }
        Ok(())
    }

    /// The `t`-shift of the signal: `shift(t)(x) = self(t + x)` on `[0, T - t]`.
    ///
    /// Samples at or after `t` are kept and re-based to zero; an interpolated
    /// sample is inserted at `t` when it is not already a sample time. Shifting
    /// to the horizon itself yields a single-sample signal, which is only
    /// reachable through this method.
    pub fn shift(&self, t: f64) -> Result<Signal, SignalError> {
        self.check_time(t)?;
        if t == 0.0 {
            return Ok(self.clone());
        }
        let first = self.times.partition_point(|&s| s < t);
        let mut times = Vec::with_capacity(self.times.len() - first + 1);
        let mut rows = Vec::with_capacity(self.times.len() - first + 1);
        if self.times.get(first) != Some(&t) {
            times.push(0.0);
            rows.push(self.row_at(t));
        }
        for i in first..self.times.len() {
            times.push(self.times[i] - t);
            rows.push(self.rows[i].clone());
        }
        times[0] = 0.0;
        Ok(Signal {
            times,
            rows,
            variables: self.variables.clone(),
            interp: self.interp,
        })
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Signal, SignalError> {
        let text =
            std::fs::read_to_string(path.as_ref()).map_err(|e| SignalError::Io(e.to_string()))?;
        Signal::parse_csv(&text)
    }

    /// Parses `time,<var1>,<var2>,...` CSV text; the interpolation mode is the default.
    pub fn parse_csv(text: &str) -> Result<Signal, SignalError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut records = reader.records();
        let header = match records.next() {
            Some(Ok(h)) => h,
            Some(Err(e)) => return Err(csv_error(e, 1)),
            None => {
                return Err(SignalError::Parse {
                    line: 1,
                    message: "empty file".into(),
                })
            }
        };
        if header.get(0) != Some("time") || header.len() < 2 {
            return Err(SignalError::Parse {
                line: 1,
                message: "expected header `time,<var1>,...`".into(),
            });
        }
        let variables: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        let mut times = Vec::new();
        let mut rows = Vec::new();
        for record in records {
            let record = record.map_err(|e| csv_error(e, times.len() + 2))?;
            let line = record
                .position()
                .map(|p| p.line() as usize)
                .unwrap_or(times.len() + 2);
            if record.len() != variables.len() + 1 {
                return Err(SignalError::Parse {
                    line,
                    message: format!("expected {} fields", variables.len() + 1),
                });
            }
            let mut fields = record.iter().map(|f| {
                f.parse::<f64>().map_err(|_| SignalError::Parse {
                    line,
                    message: format!("not a number: `{f}`"),
                })
            });
            times.push(fields.next().expect("length checked")?);
            rows.push(fields.collect::<Result<Vec<_>, _>>()?);
        }
        Signal::from_samples(times, rows, variables, Interpolation::default())
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("time");
        for v in &self.variables {
            out.push(',');
            out.push_str(v);
        }
        out.push('\n');
        for (t, row) in self.times.iter().zip(&self.rows) {
            out.push_str(&t.to_string());
            for v in row {
                out.push(',');
                out.push_str(&v.to_string());
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<(), SignalError> {
        std::fs::write(path, self.to_csv_string()).map_err(|e| SignalError::Io(e.to_string()))
    }

    pub fn with_interpolation(mut self, interp: Interpolation) -> Signal {
        self.interp = interp;
        self
    }
}

fn csv_error(e: csv::Error, fallback_line: usize) -> SignalError {
    let line = e
        .position()
        .map(|p| p.line() as usize)
        .unwrap_or(fallback_line);
    SignalError::Parse {
        line,
        message: e.to_string(),
    }
}

impl fmt::Display for Signal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Signal({} samples over [0, {}], vars = {:?})",
            self.times.len(),
            self.horizon(),
            self.variables
        )
    }
}
