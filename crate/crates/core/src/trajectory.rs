//! Recorded trajectories and their CSV form.
//!
//! Columns, in order: `run_index, seed, t, f_value, grad_norm, min_grad_norm,
//! alpha_t, evals, elapsed_ns`. Floats are written with 17 significant digits
//! so that a file parses back to identical values. `alpha_t` is empty when
//! the step length is not defined.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CSV_COLUMNS: [&str; 9] = [
    "run_index",
    "seed",
    "t",
    "f_value",
    "grad_norm",
    "min_grad_norm",
    "alpha_t",
    "evals",
    "elapsed_ns",
];

/// One row: the state of iterate `t`, before step `t` is taken.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub t: u64,
    pub f_value: f64,
    pub grad_norm: f64,
    /// `min_{s ≤ t} ‖∇f(θˢ)‖₂`, tracked at every step.
    pub min_grad_norm: f64,
    pub alpha_t: Option<f64>,
    /// Oracle calls made before step `t`.
    pub evals: u64,
    pub elapsed_ns: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub run_index: u64,
    pub seed: u64,
    pub solver: String,
    pub objective: String,
    pub schedule: Option<String>,
    pub records: Vec<Record>,
    pub terminal_reason: Option<String>,
}

/// Serde mirror of one CSV row.
#[derive(Debug, Serialize, Deserialize)]
struct Row {
    run_index: u64,
    seed: u64,
    t: u64,
    f_value: String,
    grad_norm: String,
    min_grad_norm: String,
    alpha_t: String,
    evals: u64,
    elapsed_ns: u64,
}

pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_float(field: &str, value: &str) -> Result<f64> {
    value
        .trim()
        .parse::<f64>()
        .map_err(|e| Error::Csv(format!("column {field}: cannot parse `{value}`: {e}")))
}

impl Trajectory {
    pub fn times(&self) -> Vec<u64> {
        self.records.iter().map(|r| r.t).collect()
    }

    pub fn last(&self) -> Option<&Record> {
        self.records.last()
    }

    /// Checks the ordering invariants every recorded trajectory satisfies.
    pub fn validate(&self) -> Result<()> {
        for pair in self.records.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            if b.t <= a.t {
                return Err(Error::InvalidInput(format!(
                    "t not increasing at t = {}",
                    b.t
                )));
            }
            if b.min_grad_norm > a.min_grad_norm {
                return Err(Error::InvalidInput(format!(
                    "min_grad_norm increased at t = {}",
                    b.t
                )));
            }
            if b.evals <= a.evals {
                return Err(Error::InvalidInput(format!(
                    "evals not increasing at t = {}",
                    b.t
                )));
            }
        }
        for r in &self.records {
            if r.min_grad_norm > r.grad_norm {
                return Err(Error::InvalidInput(format!(
                    "min_grad_norm exceeds grad_norm at t = {}",
                    r.t
                )));
            }
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for r in &self.records {
            w.serialize(Row {
                run_index: self.run_index,
                seed: self.seed,
                t: r.t,
                f_value: format_float(r.f_value),
                grad_norm: format_float(r.grad_norm),
                min_grad_norm: format_float(r.min_grad_norm),
                alpha_t: r.alpha_t.map(format_float).unwrap_or_default(),
                evals: r.evals,
                elapsed_ns: r.elapsed_ns,
            })?;
        }
        if self.records.is_empty() {
            w.write_record(CSV_COLUMNS)?;
        }
        w.flush().map_err(|e| Error::Csv(e.to_string()))?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Csv(e.to_string()))
    }

    /// Parses a trajectory file. Descriptor fields not stored in the CSV are
    /// left empty.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.iter().ne(CSV_COLUMNS) {
            return Err(Error::Csv(format!(
                "unexpected header {:?}, expected {:?}",
                headers.iter().collect::<Vec<_>>(),
                CSV_COLUMNS
            )));
        }
        let mut run_index = None;
        let mut seed = None;
        let mut records = Vec::new();
        for row in rdr.deserialize::<Row>() {
            let row = row?;
            if *run_index.get_or_insert(row.run_index) != row.run_index
                || *seed.get_or_insert(row.seed) != row.seed
            {
                return Err(Error::Csv("rows mix several trajectories".into()));
            }
            let alpha_t = if row.alpha_t.trim().is_empty() {
                None
            } else {
                Some(parse_float("alpha_t", &row.alpha_t)?)
            };
            records.push(Record {
                t: row.t,
                f_value: parse_float("f_value", &row.f_value)?,
                grad_norm: parse_float("grad_norm", &row.grad_norm)?,
                min_grad_norm: parse_float("min_grad_norm", &row.min_grad_norm)?,
                alpha_t,
                evals: row.evals,
                elapsed_ns: row.elapsed_ns,
            });
        }
        let traj = Trajectory {
            run_index: run_index.unwrap_or(0),
            seed: seed.unwrap_or(0),
            solver: String::new(),
            objective: String::new(),
            schedule: None,
            records,
            terminal_reason: None,
        };
        traj.validate()?;
        Ok(traj)
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        Self::read_csv(text.as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Trajectory {
        Trajectory {
            run_index: 3,
            seed: 0xdead_beef,
            solver: "stp".into(),
            objective: "sphere_quadratic".into(),
            schedule: Some("power".into()),
            records: vec![
                Record {
                    t: 1,
                    f_value: 0.1,
                    grad_norm: 1.0 / 3.0,
                    min_grad_norm: 1.0 / 3.0,
                    alpha_t: Some(4.0),
                    evals: 1,
                    elapsed_ns: 0,
                },
                Record {
                    t: 100,
                    f_value: -1.234_567_890_123_456_7e-300,
                    grad_norm: 5e-324,
                    min_grad_norm: 5e-324,
                    alpha_t: None,
                    evals: 199,
                    elapsed_ns: 12_345,
                },
            ],
            terminal_reason: None,
        }
    }

    #[test]
    fn csv_round_trip_is_lossless() {
        let traj = sample();
        let text = traj.to_csv_string().unwrap();
        assert!(text.starts_with(&CSV_COLUMNS.join(",")));
        let back = Trajectory::from_csv_str(&text).unwrap();
        assert_eq!(back.records, traj.records);
        assert_eq!(back.run_index, 3);
        assert_eq!(back.seed, 0xdead_beef);
        assert_eq!(back.to_csv_string().unwrap(), text);
    }

    #[test]
    fn empty_alpha_is_written_empty() {
        let text = sample().to_csv_string().unwrap();
        let last = text.lines().last().unwrap();
        assert!(last.contains(",,199,"), "{last}");
    }

    #[test]
    fn rejects_wrong_header() {
        let text = "t,f\n1,2\n";
        assert!(Trajectory::from_csv_str(text).is_err());
    }

    #[test]
    fn validation_catches_broken_order() {
        let mut traj = sample();
        traj.records[1].t = 1;
        assert!(traj.validate().is_err());
        let mut traj = sample();
        traj.records[1].min_grad_norm = 1.0;
        assert!(traj.validate().is_err());
    }
}
