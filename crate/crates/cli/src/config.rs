//! Run configuration for `slca solve`.
//!
//! Config files are TOML: top-level keys plus `[engine]`, `[prox]`,
//! `[lca]`, `[gain]`, `[penalty]` and `[neuron.<model>]` sections, e.g.
//!
//! ```toml
//! instance = "runs/gauss"
//! solvers = ["fista", "slca-lif"]
//! formats = ["csv", "json", "svg"]
//!
//! [engine]
//! t_max = 200.0
//! dt = 0.01
//! rate_estimator = { kind = "ema", tau = 30.0 }
//!
//! [neuron.lif]
//! t_ref = 0.002
//! ```
//!
//! A `summary.json` written by a previous run is accepted as well; its
//! `config` object is the fully resolved configuration of that run.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use slca::baselines::{LcaOdeConfig, ProxSolverConfig};
use slca::engine::EngineConfig;
use slca::{NeuronModel, Penalty};

use crate::{usage, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GainSettings {
    pub points: usize,
    /// `None` uses the model's default grid end.
    pub i_max: Option<f64>,
    pub sim_time: Option<f64>,
    pub discard_time: Option<f64>,
}

impl Default for GainSettings {
    fn default() -> Self {
        Self {
            points: 256,
            i_max: None,
            sim_time: None,
            discard_time: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub instance: Option<PathBuf>,
    pub solvers: Vec<String>,
    /// Output directory. Not recorded in summaries so a replay into another
    /// directory writes the same bytes.
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,
    pub formats: Vec<Format>,
    /// Overrides the instance's regularization weight.
    pub lambda: Option<f64>,
    /// Overrides the instance's penalty.
    pub penalty: Option<Penalty>,
    pub engine: EngineConfig,
    pub prox: ProxSolverConfig,
    pub lca: LcaOdeConfig,
    pub gain: GainSettings,
    /// Parameter overrides keyed by model id, then parameter name.
    pub neuron: BTreeMap<String, BTreeMap<String, f64>>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            instance: None,
            solvers: Vec::new(),
            out: None,
            formats: vec![Format::Csv, Format::Json],
            lambda: None,
            penalty: None,
            engine: EngineConfig::default(),
            prox: ProxSolverConfig::default(),
            lca: LcaOdeConfig::default(),
            gain: GainSettings::default(),
            neuron: BTreeMap::new(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
        let is_json = path.extension().is_some_and(|e| e == "json");
        if is_json {
            let mut value: serde_json::Value = serde_json::from_str(&text)
                .map_err(|e| usage(format!("{}: {e}", path.display())))?;
            if let Some(inner) = value.get_mut("config") {
                value = inner.take();
            }
            serde_json::from_value(value).map_err(|e| usage(format!("{}: {e}", path.display())))
        } else {
            toml::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
        }
    }

    pub fn model(&self, id: &str) -> CliResult<NeuronModel> {
        let mut model = NeuronModel::preset(id)?;
        if let Some(params) = self.neuron.get(model.id()) {
            for (name, value) in params {
                model.set_param(name, *value)?;
            }
        }
        Ok(model)
    }
}

/// Parses `name=value`.
pub fn parse_param(s: &str) -> Result<(String, f64), String> {
    let (name, value) = s
        .split_once('=')
        .ok_or_else(|| format!("expected name=value, got '{s}'"))?;
    let value: f64 = value
        .trim()
        .parse()
        .map_err(|e| format!("bad value in '{s}': {e}"))?;
    Ok((name.trim().to_string(), value))
}

pub fn apply_params(model: &mut NeuronModel, params: &[(String, f64)]) -> CliResult<()> {
    for (name, value) in params {
        model.set_param(name, *value)?;
    }
    Ok(())
}

/// Parses `kind[:param]`, e.g. `l1`, `elastic-net:0.5`, `log:1`. The
/// log-barrier takes its `γ` as the parameter and binds to `lambda`.
pub fn parse_penalty(spec: &str, lambda: f64) -> CliResult<Penalty> {
    let (kind, param) = match spec.split_once(':') {
        Some((k, p)) => {
            let v: f64 = p
                .parse()
                .map_err(|e| usage(format!("bad penalty parameter in '{spec}': {e}")))?;
            (k, Some(v))
        }
        None => (spec, None),
    };
    let need = |name: &str| param.ok_or_else(|| usage(format!("penalty '{kind}' needs a {name} parameter")));
    let penalty = match kind {
        "l1" => Penalty::L1,
        "elastic-net" => Penalty::ElasticNet { rho: need("rho")? },
        "log-barrier" => Penalty::LogBarrier {
            gamma: need("gamma")?,
            lambda,
        },
        "exp" => Penalty::Exp { gamma: need("gamma")? },
        "log" => Penalty::Log { theta: need("theta")? },
        "atan" => Penalty::Atan { eta: need("eta")? },
        other => return Err(usage(format!("unknown penalty '{other}'"))),
    };
    penalty.validate()?;
    Ok(penalty)
}

/// Directory named by `SLCA_CACHE_DIR`, if set and non-empty.
pub fn cache_dir() -> Option<PathBuf> {
    std::env::var_os("SLCA_CACHE_DIR")
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_sections_fill_nested_configs() {
        let cfg: RunConfig = toml::from_str(
            r#"
            solvers = ["fista", "slca-lif"]
            [engine]
            t_max = 12.5
            rate_estimator = { kind = "ema", tau = 3.0 }
            [penalty]
            kind = "elastic-net"
            rho = 0.5
            [neuron.lif]
            t_ref = 0.01
            "#,
        )
        .unwrap();
        assert_eq!(cfg.engine.t_max, 12.5);
        assert_eq!(cfg.penalty, Some(Penalty::ElasticNet { rho: 0.5 }));
        assert_eq!(cfg.prox, ProxSolverConfig::default());
        let NeuronModel::Lif(p) = cfg.model("lif").unwrap() else {
            panic!("expected a LIF model");
        };
        assert_eq!(p.t_ref, 0.01);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<RunConfig>("solver = [\"fista\"]").is_err());
    }

    #[test]
    fn json_roundtrip_drops_only_the_output_directory() {
        let cfg = RunConfig {
            solvers: vec!["ista".into()],
            out: Some("x".into()),
            ..Default::default()
        };
        let back: RunConfig = serde_json::from_value(serde_json::to_value(&cfg).unwrap()).unwrap();
        assert_eq!(back, RunConfig { out: None, ..cfg });
    }

    #[test]
    fn penalty_specs() {
        assert_eq!(parse_penalty("l1", 1.0).unwrap(), Penalty::L1);
        assert_eq!(
            parse_penalty("log-barrier:2", 0.5).unwrap(),
            Penalty::LogBarrier { gamma: 2.0, lambda: 0.5 }
        );
        assert!(parse_penalty("log", 1.0).is_err());
        assert!(parse_penalty("elastic-net:1.5", 1.0).is_err());
        assert!(parse_penalty("huber:1", 1.0).is_err());
    }
}
