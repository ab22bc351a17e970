use slca::baselines::{fista, ProxSolverConfig};
use slca::generators::{
    cs_image_problem, phantom, ricker_trace, sinusoid_regression, LambdaSpec, RickerSpec, Wavelet,
};
use slca::metrics::{psnr, snr};
use slca::{Penalty, SignMode};

fn tight() -> ProxSolverConfig {
    ProxSolverConfig {
        max_iters: 100_000,
        tol: 1e-12,
        ..Default::default()
    }
}

#[test]
fn ricker_trace_recovery_with_grid_tuned_lambda() {
    let mut best = f64::NEG_INFINITY;
    for factor in [0.003, 0.01, 0.03, 0.1, 0.3] {
        let spec = RickerSpec {
            nonneg: true,
            lambda: LambdaSpec::Relative { factor },
            seed: 2,
            ..Default::default()
        };
        let (p, truth) = ricker_trace(&spec).unwrap();
        let a = fista(&p, &tight()).unwrap();
        let clean = p.matrix().mul_vec(&truth.a_true).unwrap();
        let fitted = p.matrix().mul_vec(a.solution()).unwrap();
        best = best.max(snr(&clean, &fitted).unwrap());
    }
    assert!(best >= 20.0, "best trace SNR {best:.2} dB");
}

#[test]
fn full_measurements_recover_the_phantom() {
    let img = phantom(16);
    let cs = cs_image_problem(&img, 1.0, Wavelet::Haar, 2, LambdaSpec::Absolute { value: 1e-9 }, 4).unwrap();
    let cfg = ProxSolverConfig {
        max_iters: 200_000,
        tol: 1e-15,
        ..Default::default()
    };
    let a = fista(&cs.problem, &cfg).unwrap();
    let value = psnr(img.data(), cs.image(a.solution()).unwrap().data(), 1.0).unwrap();
    assert!(value >= 60.0, "PSNR {value:.1} dB");
}

#[test]
fn sparse_recovery_beats_zero_filling() {
    let img = phantom(32);
    let cs = cs_image_problem(&img, 0.4, Wavelet::Db4, 3, LambdaSpec::Relative { factor: 0.01 }, 0).unwrap();
    let a = fista(&cs.problem, &ProxSolverConfig::default()).unwrap();
    let recovered = psnr(img.data(), cs.image(a.solution()).unwrap().data(), 1.0).unwrap();
    // adjoint of the measurement operator applied to the measurements
    let zero_filled = cs.measurement.tr_mul_vec(cs.problem.observation()).unwrap();
    let baseline = psnr(img.data(), &zero_filled, 1.0).unwrap();
    assert!(recovered > baseline, "{recovered:.2} vs {baseline:.2} dB");
}

#[test]
fn sinusoid_interpolation_limit() {
    let task = sinusoid_regression(8, 40, 10, 3, 0.0, 1).unwrap();
    let p = task
        .problem(LambdaSpec::Absolute { value: 1e-9 }, Penalty::L1, SignMode::Free)
        .unwrap();
    let cfg = ProxSolverConfig {
        max_iters: 500_000,
        tol: 1e-15,
        ..Default::default()
    };
    let a = fista(&p, &cfg).unwrap();
    let r2 = task.train_r2(a.solution()).unwrap();
    assert!(r2 > 1.0 - 1e-6, "train R2 {r2}");
}
