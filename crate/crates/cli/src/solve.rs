use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::Args;
use serde_json::{json, Value};

use slca::baselines::{fista, ista, lca_ode, StepRule};
use slca::engine::{
    merge_split_solution, solve, solve_classic, split_problem, Coupling, InjectionMode, RateEstimator, RateScale,
};
use slca::gain::{cached_gain_table, default_max_current, TabulationSpec};
use slca::generators::load_instance;
use slca::trace::Sample;
use slca::{GainCurve, SensingProblem, SignMode, SolveTrace};

use crate::config::{cache_dir, parse_param, parse_penalty, Format, RunConfig};
use crate::svg::{line_chart, Series};
use crate::{usage, CliResult};

pub const SOLVERS: [&str; 9] = [
    "ista",
    "fista",
    "lca-ode",
    "slca-classic",
    "slca-pif",
    "slca-lif",
    "slca-gif",
    "slca-ml",
    "slca-wb",
];

#[derive(Args)]
pub struct SolveArgs {
    /// TOML config, or a summary.json from an earlier run to replay it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Instance directory written by `slca gen`.
    #[arg(long)]
    instance: Option<PathBuf>,
    /// Solver name; repeatable or comma-separated.
    #[arg(long = "solver", value_delimiter = ',')]
    solvers: Vec<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output formats; repeatable or comma-separated.
    #[arg(long = "format", value_enum, value_delimiter = ',')]
    formats: Vec<Format>,
    #[arg(long, conflicts_with = "lambda_factor")]
    lambda: Option<f64>,
    /// Weight as a fraction of `max |Aᵀs|`.
    #[arg(long)]
    lambda_factor: Option<f64>,
    /// `kind[:param]`, e.g. `elastic-net:0.5` or `log:1`.
    #[arg(long)]
    penalty: Option<String>,
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Initial membrane jitter as a fraction of the reset-to-threshold range.
    #[arg(long)]
    jitter: Option<f64>,
    /// `cumulative[:t0]`, `ema:<tau>` or `window:<width>`.
    #[arg(long)]
    rate: Option<String>,
    /// Fixed coefficient-to-rate scale (default: automatic).
    #[arg(long)]
    kappa: Option<f64>,
    /// `rate` or `events`.
    #[arg(long)]
    coupling: Option<String>,
    /// `explicit` or `implicit`.
    #[arg(long)]
    injection: Option<String>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    /// Fixed proximal step instead of `1/L`.
    #[arg(long)]
    step: Option<f64>,
    /// Neuron parameter override, `model.name=value`; repeatable.
    #[arg(long = "param")]
    params: Vec<String>,
}

fn parse_rate(s: &str) -> CliResult<RateEstimator> {
    let (kind, arg) = match s.split_once(':') {
        Some((k, a)) => (
            k,
            Some(a.parse::<f64>().map_err(|e| usage(format!("bad rate estimator '{s}': {e}")))?),
        ),
        None => (s, None),
    };
    let need = || arg.ok_or_else(|| usage(format!("rate estimator '{kind}' needs a parameter")));
    let est = match kind {
        "cumulative" => RateEstimator::Cumulative { t0: arg.unwrap_or(0.0) },
        "ema" => RateEstimator::Ema { tau: need()? },
        "window" => RateEstimator::Window { width: need()? },
        other => return Err(usage(format!("unknown rate estimator '{other}'"))),
    };
    est.validate()?;
    Ok(est)
}

/// Config file first, then every flag given on the command line.
fn resolve_config(args: &SolveArgs) -> CliResult<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(p) = &args.instance {
        cfg.instance = Some(p.clone());
    }
    if !args.solvers.is_empty() {
        cfg.solvers = args.solvers.clone();
    }
    if let Some(o) = &args.out {
        cfg.out = Some(o.clone());
    }
    if !args.formats.is_empty() {
        cfg.formats = args.formats.clone();
    }
    if let Some(l) = args.lambda {
        cfg.lambda = Some(l);
    }
    let e = &mut cfg.engine;
    if let Some(v) = args.t_max {
        e.t_max = v;
    }
    if let Some(v) = args.dt {
        e.dt = Some(v);
    }
    if let Some(v) = args.seed {
        e.seed = v;
    }
    if let Some(v) = args.jitter {
        e.init_jitter = v;
    }
    if let Some(r) = &args.rate {
        e.rate_estimator = parse_rate(r)?;
    }
    if let Some(k) = args.kappa {
        e.rate_scale = RateScale::Fixed { kappa: k };
    }
    if let Some(c) = &args.coupling {
        e.coupling = match c.as_str() {
            "rate" => Coupling::RateCoupled,
            "events" => Coupling::EventDriven,
            other => return Err(usage(format!("unknown coupling '{other}' (rate or events)"))),
        };
    }
    if let Some(i) = &args.injection {
        e.injection = match i.as_str() {
            "explicit" => InjectionMode::ExplicitThreshold,
            "implicit" => InjectionMode::ImplicitGrad,
            other => return Err(usage(format!("unknown injection '{other}' (explicit or implicit)"))),
        };
    }
    if let Some(v) = args.max_iters {
        cfg.prox.max_iters = v;
    }
    if let Some(v) = args.tol {
        cfg.prox.tol = v;
    }
    if let Some(v) = args.step {
        cfg.prox.step = StepRule::Fixed { value: v };
    }
    for p in &args.params {
        let (key, value) = parse_param(p).map_err(usage)?;
        let (model, name) = key
            .split_once('.')
            .ok_or_else(|| usage(format!("expected model.name=value, got '{p}'")))?;
        let id = slca::NeuronModel::preset(model)?.id().to_string();
        cfg.neuron.entry(id).or_default().insert(name.to_string(), value);
    }
    Ok(cfg)
}

/// Loads the instance and applies the λ and penalty overrides, writing the
/// values actually used back into `cfg`.
fn prepare_problem(args: &SolveArgs, cfg: &mut RunConfig) -> CliResult<(SensingProblem, Option<Vec<f64>>, Value)> {
    let dir = cfg.instance.clone().ok_or_else(|| usage("no instance given (--instance or config key)"))?;
    let inst = load_instance(&dir)?;
    let mut problem = inst.problem;
    if let Some(f) = args.lambda_factor {
        cfg.lambda = Some(f * problem.lambda_max());
    }
    if let Some(l) = cfg.lambda {
        problem = problem.with_lambda(l)?;
    }
    if let Some(spec) = &args.penalty {
        cfg.penalty = Some(parse_penalty(spec, problem.lambda())?);
    }
    if let Some(p) = cfg.penalty {
        problem = problem.with_penalty(p)?;
    }
    cfg.lambda = Some(problem.lambda());
    cfg.penalty = Some(problem.penalty());
    let info = json!({
        "path": dir,
        "m": problem.m(),
        "n": problem.n(),
        "sign_mode": problem.sign_mode(),
        "generator": inst.meta.get("generator").cloned().unwrap_or(Value::Null),
    });
    Ok((problem, inst.truth, info))
}

/// Re-expresses a trace of the split problem in the original unknowns.
fn unsplit(trace: SolveTrace, problem: &SensingProblem) -> CliResult<SolveTrace> {
    let mut out = SolveTrace::new(trace.solver_id.clone());
    for s in trace.samples {
        let coeffs = merge_split_solution(&s.coeffs)?;
        out.push(Sample {
            time: s.time,
            objective: problem.objective(&coeffs)?,
            coeffs,
            spikes: s.spikes,
        })?;
    }
    out.diagnostics = trace.diagnostics;
    out.vectors = trace.vectors;
    out.set_diag("sign_split", 1.0);
    Ok(out)
}

fn with_split(
    problem: &SensingProblem,
    run: impl FnOnce(&SensingProblem) -> slca::Result<SolveTrace>,
) -> CliResult<SolveTrace> {
    if problem.sign_mode() == SignMode::Free {
        let split = split_problem(problem, Some(problem.penalty()))?;
        unsplit(run(&split)?, problem)
    } else {
        Ok(run(problem)?)
    }
}

fn run_solver(name: &str, problem: &SensingProblem, cfg: &RunConfig) -> CliResult<SolveTrace> {
    let trace = match name {
        "ista" => ista(problem, &cfg.prox)?,
        "fista" => fista(problem, &cfg.prox)?,
        "lca-ode" => lca_ode(problem, &cfg.lca)?,
        "slca-classic" => with_split(problem, |p| solve_classic(p, &cfg.engine))?,
        _ => {
            let id = name
                .strip_prefix("slca-")
                .filter(|id| ["pif", "lif", "gif", "ml", "wb"].contains(id))
                .ok_or_else(|| usage(format!("unknown solver '{name}' (expected one of {})", SOLVERS.join(", "))))?;
            let model = cfg.model(id)?;
            let gain = match GainCurve::analytic(&model) {
                Some(g) => g,
                None => {
                    let defaults = TabulationSpec::default_for(&model);
                    let g = &cfg.gain;
                    if g.points < 2 {
                        return Err(usage("gain.points must be at least 2"));
                    }
                    let spec = TabulationSpec::uniform(
                        g.i_max.unwrap_or_else(|| default_max_current(&model)),
                        g.points,
                        g.sim_time.unwrap_or(defaults.sim_time),
                        g.discard_time.unwrap_or(defaults.discard_time),
                        cfg.engine.dt.unwrap_or(defaults.dt),
                    );
                    GainCurve::Table(cached_gain_table(&model, &spec, cache_dir().as_deref())?)
                }
            };
            with_split(problem, |p| solve(p, &model, &gain, &cfg.engine))?
        }
    };
    Ok(trace)
}

fn write_with(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> slca::Result<()>) -> CliResult<()> {
    let mut w = BufWriter::new(File::create(path)?);
    f(&mut w)?;
    w.flush()?;
    Ok(())
}

pub fn objective_series(label: &str, trace: &SolveTrace) -> Series {
    Series {
        label: label.to_string(),
        points: trace.samples.iter().map(|s| (s.time, s.objective)).collect(),
    }
}

pub fn run(args: SolveArgs) -> CliResult<()> {
    let mut cfg = resolve_config(&args)?;
    if cfg.solvers.is_empty() {
        return Err(usage("no solvers given (--solver or config key)"));
    }
    for (i, s) in cfg.solvers.iter().enumerate() {
        if !SOLVERS.contains(&s.as_str()) {
            return Err(usage(format!("unknown solver '{s}' (expected one of {})", SOLVERS.join(", "))));
        }
        if cfg.solvers[..i].contains(s) {
            return Err(usage(format!("solver '{s}' listed twice")));
        }
    }
    let out = cfg.out.clone().ok_or_else(|| usage("no output directory given (--out)"))?;
    let (problem, truth, instance_info) = prepare_problem(&args, &mut cfg)?;
    std::fs::create_dir_all(&out)?;

    let mut summaries = serde_json::Map::new();
    let mut series = Vec::new();
    for name in &cfg.solvers {
        log::info!("running {name}");
        let trace = run_solver(name, &problem, &cfg)?;
        if cfg.formats.contains(&Format::Csv) {
            write_with(&out.join(format!("{name}.trace.csv")), |w| trace.write_csv(w, truth.as_deref()))?;
            write_with(&out.join(format!("{name}.coeffs.csv")), |w| trace.write_coeffs_csv(w))?;
        }
        let summary = trace.summary(truth.as_deref());
        println!(
            "{name}: final objective {} after {} samples",
            summary["final_objective"], summary["samples"]
        );
        summaries.insert(name.clone(), summary);
        series.push(objective_series(name, &trace));
    }

    if cfg.formats.contains(&Format::Json) {
        let doc = json!({
            "config": cfg,
            "instance": instance_info,
            "solvers": Value::Object(summaries),
        });
        let text = serde_json::to_string_pretty(&doc).map_err(|e| usage(e.to_string()))?;
        std::fs::write(out.join("summary.json"), text + "\n")?;
    }
    if cfg.formats.contains(&Format::Svg) {
        let svg = line_chart(&series, "time or iteration", "objective", true);
        std::fs::write(out.join("objective.svg"), svg)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_estimator_specs() {
        assert_eq!(parse_rate("cumulative").unwrap(), RateEstimator::Cumulative { t0: 0.0 });
        assert_eq!(parse_rate("ema:30").unwrap(), RateEstimator::Ema { tau: 30.0 });
        assert_eq!(parse_rate("window:2.5").unwrap(), RateEstimator::Window { width: 2.5 });
        assert!(parse_rate("ema").is_err());
        assert!(parse_rate("ema:-1").is_err());
        assert!(parse_rate("boxcar:1").is_err());
    }

    #[test]
    fn unsplit_recomputes_objective_in_original_unknowns() {
        let a = slca::DenseMatrix::identity(2);
        let p = SensingProblem::new(a, vec![1.0, -2.0], 0.5, slca::Penalty::L1, SignMode::Free).unwrap();
        let mut t = SolveTrace::new("x");
        t.push(Sample {
            time: 1.0,
            objective: 0.0,
            coeffs: vec![0.5, 0.0, 0.0, 1.5],
            spikes: None,
        })
        .unwrap();
        let u = unsplit(t, &p).unwrap();
        assert_eq!(u.samples[0].coeffs, vec![0.5, -1.5]);
        assert_eq!(u.samples[0].objective, p.objective(&[0.5, -1.5]).unwrap());
    }
}
