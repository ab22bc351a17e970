//! Common output of every solver: timestamped objective and coefficient
//! samples plus a bag of scalar and vector diagnostics.
//!
//! Floats are written with Rust's shortest round-trip formatting, so traces
//! reload bit-exactly and identical runs produce identical files. Wall-clock
//! times are kept out of the CSV and summary writers for the same reason.

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::metrics::nmse;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sample {
    /// Simulation time for dynamical solvers, iteration count otherwise.
    pub time: f64,
    pub objective: f64,
    pub coeffs: Vec<f64>,
    /// Per-neuron spike counts since the start of the run.
    pub spikes: Option<Vec<u64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveTrace {
    pub solver_id: String,
    pub samples: Vec<Sample>,
    pub diagnostics: BTreeMap<String, f64>,
    pub vectors: BTreeMap<String, Vec<f64>>,
}

impl SolveTrace {
    pub fn new(solver_id: impl Into<String>) -> Self {
        Self {
            solver_id: solver_id.into(),
            samples: Vec::new(),
            diagnostics: BTreeMap::new(),
            vectors: BTreeMap::new(),
        }
    }

    /// Appends a sample, enforcing strictly increasing times and a constant
    /// coefficient length.
    pub fn push(&mut self, sample: Sample) -> Result<()> {
        if let Some(last) = self.samples.last() {
            if !(sample.time > last.time) {
                return Err(Error::InvalidParameter(format!(
                    "sample time {} does not follow {}",
                    sample.time, last.time
                )));
            }
            if sample.coeffs.len() != last.coeffs.len() {
                return Err(Error::DimensionMismatch {
                    what: "trace coefficients",
                    expected: last.coeffs.len(),
                    found: sample.coeffs.len(),
                });
            }
        }
        self.samples.push(sample);
        Ok(())
    }

    pub fn last(&self) -> Option<&Sample> {
        self.samples.last()
    }

    /// Final coefficient estimate.
    pub fn solution(&self) -> &[f64] {
        self.samples.last().map(|s| s.coeffs.as_slice()).unwrap_or(&[])
    }

    pub fn final_objective(&self) -> Option<f64> {
        self.samples.last().map(|s| s.objective)
    }

    pub fn set_diag(&mut self, key: &str, value: f64) {
        self.diagnostics.insert(key.to_string(), value);
    }

    pub fn diag(&self, key: &str) -> Option<f64> {
        self.diagnostics.get(key).copied()
    }

    pub fn set_vector(&mut self, key: &str, value: Vec<f64>) {
        self.vectors.insert(key.to_string(), value);
    }

    pub fn vector(&self, key: &str) -> Option<&[f64]> {
        self.vectors.get(key).map(Vec::as_slice)
    }

    /// `time,objective[,nmse_vs_truth],spikes_total`, one row per sample.
    pub fn write_csv<W: Write>(&self, mut w: W, truth: Option<&[f64]>) -> Result<()> {
        write!(w, "time,objective")?;
        if truth.is_some() {
            write!(w, ",nmse_vs_truth")?;
        }
        writeln!(w, ",spikes_total")?;
        for s in &self.samples {
            write!(w, "{},{}", s.time, s.objective)?;
            if let Some(t) = truth {
                let v = nmse(t, &s.coeffs).unwrap_or(f64::NAN);
                write!(w, ",{v}")?;
            }
            let total: u64 = s.spikes.as_ref().map(|c| c.iter().sum()).unwrap_or(0);
            writeln!(w, ",{total}")?;
        }
        Ok(())
    }

    /// Side file with one row per sample: `time,c0,c1,...`.
    pub fn write_coeffs_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let n = self.samples.first().map(|s| s.coeffs.len()).unwrap_or(0);
        write!(w, "time")?;
        for k in 0..n {
            write!(w, ",c{k}")?;
        }
        writeln!(w)?;
        for s in &self.samples {
            write!(w, "{}", s.time)?;
            for c in &s.coeffs {
                write!(w, ",{c}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    /// Summary object: final objective, sample count, diagnostics and,
    /// if a reference is supplied, the final NMSE against it.
    pub fn summary(&self, truth: Option<&[f64]>) -> Value {
        let mut diag = serde_json::Map::new();
        for (k, v) in &self.diagnostics {
            diag.insert(k.clone(), finite_or_string(*v));
        }
        let last = self.samples.last();
        let mut out = json!({
            "solver_id": self.solver_id,
            "samples": self.samples.len(),
            "final_time": last.map(|s| finite_or_string(s.time)),
            "final_objective": last.map(|s| finite_or_string(s.objective)),
            "diagnostics": Value::Object(diag),
        });
        if let (Some(t), Some(s)) = (truth, last) {
            out["final_nmse_db"] = nmse(t, &s.coeffs)
                .map(finite_or_string)
                .unwrap_or(Value::Null);
        }
        out
    }
}

/// JSON has no infinities; they are written as strings.
pub fn finite_or_string(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        json!(v.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(time: f64, n: usize) -> Sample {
        Sample {
            time,
            objective: 1.0 / (1.0 + time),
            coeffs: vec![time; n],
            spikes: Some(vec![time as u64; n]),
        }
    }

    #[test]
    fn rejects_out_of_order_and_ragged_samples() {
        let mut t = SolveTrace::new("x");
        t.push(sample(1.0, 2)).unwrap();
        assert!(t.push(sample(1.0, 2)).is_err());
        assert!(t.push(sample(2.0, 3)).is_err());
        t.push(sample(2.0, 2)).unwrap();
        assert_eq!(t.solution(), &[2.0, 2.0]);
    }

    #[test]
    fn csv_layout() {
        let mut t = SolveTrace::new("x");
        t.push(sample(1.0, 2)).unwrap();
        t.push(sample(3.0, 2)).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf, Some(&[3.0, 3.0])).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "time,objective,nmse_vs_truth,spikes_total");
        assert_eq!(lines[2], "3,0.25,-inf,6");
        let mut buf = Vec::new();
        t.write_coeffs_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("time,c0,c1\n1,1,1\n"));
    }

    #[test]
    fn summary_handles_infinities() {
        let mut t = SolveTrace::new("x");
        t.push(sample(1.0, 1)).unwrap();
        t.set_diag("weird", f64::INFINITY);
        let s = t.summary(Some(&[1.0]));
        assert_eq!(s["final_nmse_db"], json!("-inf"));
        assert_eq!(s["diagnostics"]["weird"], json!("inf"));
    }
}
