use std::path::PathBuf;

use clap::{Args, Subcommand};
use serde::Serialize;

use slca::generators::{
    cs_image_problem, gaussian_problem, phantom, ricker_dictionary, ricker_trace, save_instance,
    sinusoid_regression, GaussianSpec, LambdaSpec, RickerSpec, Wavelet,
};
use slca::matrix::{load_vector, save_vector};
use slca::{SensingProblem, SignMode};

use crate::config::parse_penalty;
use crate::{usage, CliResult};

#[derive(Subcommand)]
pub enum GenCommand {
    /// Gaussian sensing matrix with a sparse ground truth.
    Gaussian(GaussianArgs),
    /// Ricker-wavelet dictionary with a sparse reflectivity or a given trace.
    Ricker(RickerArgs),
    /// Compressed sensing of a Shepp-Logan phantom in a wavelet basis.
    Image(ImageArgs),
    /// Sparse regression on sinusoidal features.
    Sinusoid(SinusoidArgs),
}

#[derive(Args, Serialize)]
pub struct LambdaArgs {
    /// Absolute regularization weight.
    #[arg(long, conflicts_with = "lambda_factor")]
    lambda: Option<f64>,
    /// Weight as a fraction of `max |Aᵀs|`.
    #[arg(long)]
    lambda_factor: Option<f64>,
}

impl LambdaArgs {
    fn spec(&self, default_factor: f64) -> LambdaSpec {
        match (self.lambda, self.lambda_factor) {
            (Some(value), _) => LambdaSpec::Absolute { value },
            (None, factor) => LambdaSpec::Relative {
                factor: factor.unwrap_or(default_factor),
            },
        }
    }
}

#[derive(Args, Serialize)]
pub struct GaussianArgs {
    #[arg(long, default_value_t = 32)]
    m: usize,
    #[arg(long, default_value_t = 64)]
    n: usize,
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long, default_value_t = 0.01)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Signed ground truth and a free-sign problem.
    #[arg(long)]
    signed: bool,
    /// Scale the columns of A to unit norm.
    #[arg(long)]
    normalize: bool,
    #[command(flatten)]
    #[serde(flatten)]
    lambda: LambdaArgs,
    #[arg(long)]
    #[serde(skip)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
pub struct RickerArgs {
    #[arg(long, default_value_t = 256)]
    samples: usize,
    /// Sampling interval in seconds.
    #[arg(long, default_value_t = 0.002)]
    dt: f64,
    #[arg(long, default_value_t = 4)]
    freqs: usize,
    #[arg(long, default_value_t = 10.0)]
    freq_lo: f64,
    #[arg(long, default_value_t = 40.0)]
    freq_hi: f64,
    #[arg(long, default_value_t = 64)]
    centers: usize,
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long, default_value_t = 0.01)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Restrict the reflectivity to non-negative values.
    #[arg(long)]
    nonneg: bool,
    /// Single-column CSV used as the observation instead of a synthetic one.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    lambda: LambdaArgs,
    #[arg(long)]
    #[serde(skip)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
pub struct ImageArgs {
    #[arg(long, default_value_t = 32)]
    side: usize,
    /// Measurements per pixel.
    #[arg(long, default_value_t = 0.4)]
    ratio: f64,
    /// haar or db4.
    #[arg(long, default_value = "db4")]
    wavelet: String,
    #[arg(long, default_value_t = 3)]
    levels: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    #[serde(flatten)]
    lambda: LambdaArgs,
    #[arg(long)]
    #[serde(skip)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
pub struct SinusoidArgs {
    #[arg(long, default_value_t = 100)]
    features: usize,
    #[arg(long, default_value_t = 60)]
    train: usize,
    #[arg(long, default_value_t = 40)]
    test: usize,
    #[arg(long, default_value_t = 10)]
    active: usize,
    #[arg(long, default_value_t = 0.1)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// `l1` or `elastic-net:<rho>`.
    #[arg(long, default_value = "l1")]
    penalty: String,
    #[command(flatten)]
    #[serde(flatten)]
    lambda: LambdaArgs,
    #[arg(long)]
    #[serde(skip)]
    out: PathBuf,
}

fn tagged<T: Serialize>(kind: &str, args: &T) -> serde_json::Value {
    let mut v = serde_json::to_value(args).expect("arguments serialize");
    v["kind"] = kind.into();
    v
}

pub fn run(cmd: GenCommand) -> CliResult<()> {
    match cmd {
        GenCommand::Gaussian(args) => {
            let spec = GaussianSpec {
                m: args.m,
                n: args.n,
                k: args.k,
                noise_sigma: args.noise,
                lambda: args.lambda.spec(0.1),
                seed: args.seed,
                nonneg: !args.signed,
                normalize_cols: args.normalize,
            };
            let (p, truth) = gaussian_problem(&spec)?;
            save_instance(&args.out, &p, Some(&truth), tagged("gaussian", &args))?;
            report(&args.out, &p);
        }
        GenCommand::Ricker(args) => {
            let spec = RickerSpec {
                samples: args.samples,
                dt: args.dt,
                freq_count: args.freqs,
                freq_lo: args.freq_lo,
                freq_hi: args.freq_hi,
                center_count: args.centers,
                k: args.k,
                noise_sigma: args.noise,
                lambda: args.lambda.spec(0.05),
                seed: args.seed,
                nonneg: args.nonneg,
            };
            let meta = tagged("ricker", &args);
            match &args.trace {
                Some(path) => {
                    let s = load_vector(path)?;
                    if s.len() != spec.samples {
                        return Err(usage(format!(
                            "trace {} has {} samples but --samples is {}",
                            path.display(),
                            s.len(),
                            spec.samples
                        )));
                    }
                    let a = ricker_dictionary(&spec.sample_times(), &spec.freqs(), &spec.centers())?;
                    let lambda = spec.lambda.resolve(&a, &s)?;
                    let mode = if spec.nonneg { SignMode::Nonneg } else { SignMode::Free };
                    let p = SensingProblem::new(a, s, lambda, slca::Penalty::L1, mode)?;
                    save_instance(&args.out, &p, None, meta)?;
                    report(&args.out, &p);
                }
                None => {
                    let (p, truth) = ricker_trace(&spec)?;
                    save_instance(&args.out, &p, Some(&truth), meta)?;
                    report(&args.out, &p);
                }
            }
        }
        GenCommand::Image(args) => {
            let wavelet: Wavelet = args.wavelet.parse()?;
            let img = phantom(args.side);
            let cs = cs_image_problem(&img, args.ratio, wavelet, args.levels, args.lambda.spec(0.01), args.seed)?;
            save_instance(&args.out, &cs.problem, Some(&cs.truth), tagged("image", &args))?;
            img.save(args.out.join("image.csv"))?;
            report(&args.out, &cs.problem);
        }
        GenCommand::Sinusoid(args) => {
            let task = sinusoid_regression(args.features, args.train, args.test, args.active, args.noise, args.seed)?;
            let lambda = args.lambda.spec(0.1);
            let provisional = task.problem(lambda, slca::Penalty::L1, SignMode::Free)?;
            let penalty = parse_penalty(&args.penalty, provisional.lambda())?;
            let p = provisional.with_penalty(penalty)?;
            save_instance(&args.out, &p, Some(&task.truth), tagged("sinusoid", &args))?;
            task.test_x.save(args.out.join("test_x.csv"))?;
            save_vector(args.out.join("test_y.csv"), &task.test_y)?;
            report(&args.out, &p);
        }
    }
    Ok(())
}

fn report(dir: &std::path::Path, p: &SensingProblem) {
    println!(
        "wrote {}: {} x {}, lambda = {}, penalty = {}",
        dir.display(),
        p.m(),
        p.n(),
        p.lambda(),
        p.penalty().name()
    );
}
