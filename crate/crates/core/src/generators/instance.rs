//! Instance directories: `A.csv` (or `A.bin`), `s.csv`, optional
//! `truth.csv`, and `meta.json` with the problem settings and whatever
//! generator parameters produced it.

use std::path::Path;

use serde_json::{json, Value};

use super::GroundTruth;
use crate::error::{Error, Result};
use crate::matrix::{load_vector, save_vector, DenseMatrix};
use crate::penalty::{Penalty, SignMode};
use crate::problem::SensingProblem;

#[derive(Debug, Clone)]
pub struct Instance {
    pub problem: SensingProblem,
    pub truth: Option<Vec<f64>>,
    pub meta: Value,
}

/// Writes an instance directory. `generator` is stored under
/// `meta.generator` verbatim.
pub fn save_instance(
    dir: impl AsRef<Path>,
    problem: &SensingProblem,
    truth: Option<&GroundTruth>,
    generator: Value,
) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    problem.matrix().save(dir.join("A.csv"))?;
    save_vector(dir.join("s.csv"), problem.observation())?;
    if let Some(t) = truth {
        save_vector(dir.join("truth.csv"), &t.a_true)?;
    }
    let meta = json!({
        "m": problem.m(),
        "n": problem.n(),
        "lambda": problem.lambda(),
        "penalty": problem.penalty(),
        "sign_mode": problem.sign_mode(),
        "noise_sigma": truth.map(|t| t.noise_sigma),
        "seed": truth.map(|t| t.seed),
        "generator": generator,
    });
    let text = serde_json::to_string_pretty(&meta).map_err(|e| Error::Parse(e.to_string()))?;
    std::fs::write(dir.join("meta.json"), text + "\n")?;
    Ok(())
}

pub fn load_instance(dir: impl AsRef<Path>) -> Result<Instance> {
    let dir = dir.as_ref();
    let a_path = if dir.join("A.bin").exists() {
        dir.join("A.bin")
    } else {
        dir.join("A.csv")
    };
    let a = DenseMatrix::load(a_path)?;
    let s = load_vector(dir.join("s.csv"))?;
    let meta_text = std::fs::read_to_string(dir.join("meta.json"))?;
    let meta: Value = serde_json::from_str(&meta_text).map_err(|e| Error::Parse(format!("meta.json: {e}")))?;
    let lambda = meta["lambda"]
        .as_f64()
        .ok_or_else(|| Error::Parse("meta.json has no numeric lambda".into()))?;
    let penalty: Penalty = match meta.get("penalty") {
        Some(v) if !v.is_null() => {
            serde_json::from_value(v.clone()).map_err(|e| Error::Parse(format!("meta.json penalty: {e}")))?
        }
        _ => Penalty::L1,
    };
    let mode: SignMode = match meta.get("sign_mode") {
        Some(v) if !v.is_null() => {
            serde_json::from_value(v.clone()).map_err(|e| Error::Parse(format!("meta.json sign_mode: {e}")))?
        }
        _ => SignMode::Nonneg,
    };
    let truth_path = dir.join("truth.csv");
    let truth = if truth_path.exists() {
        Some(load_vector(truth_path)?)
    } else {
        None
    };
    Ok(Instance {
        problem: SensingProblem::new(a, s, lambda, penalty, mode)?,
        truth,
        meta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{gaussian_problem, GaussianSpec};

    #[test]
    fn roundtrip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let (p, t) = gaussian_problem(&GaussianSpec::default()).unwrap();
        save_instance(dir.path(), &p, Some(&t), json!({"kind": "gaussian"})).unwrap();
        let back = load_instance(dir.path()).unwrap();
        assert_eq!(back.problem, p);
        assert_eq!(back.truth.unwrap(), t.a_true);
        assert_eq!(back.meta["generator"]["kind"], "gaussian");
    }
}
