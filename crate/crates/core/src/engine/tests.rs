use super::*;
use approx::assert_abs_diff_eq;

fn identity_problem() -> SensingProblem {
    SensingProblem::new(DenseMatrix::identity(2), vec![1.0, 0.0], 0.5, Penalty::L1, SignMode::Nonneg).unwrap()
}

fn lif() -> (NeuronModel, GainCurve) {
    let model = NeuronModel::preset("lif").unwrap();
    let gain = GainCurve::analytic(&model).unwrap();
    (model, gain)
}

fn ema_config(t_max: f64, tau: f64) -> EngineConfig {
    EngineConfig {
        t_max,
        rate_estimator: RateEstimator::Ema { tau },
        anchor_correction: false,
        ..EngineConfig::default()
    }
}

#[test]
fn identity_problem_decodes_soft_threshold() {
    let (model, gain) = lif();
    let cfg = EngineConfig {
        t_max: 400.0,
        ..EngineConfig::default()
    };
    let tr = solve(&identity_problem(), &model, &gain, &cfg).unwrap();
    let a = tr.solution();
    assert_abs_diff_eq!(a[0], 0.5, epsilon = 0.02);
    assert_eq!(a[1], 0.0);
    assert!(tr.diag("saturation_count") == Some(0.0));
}

#[test]
fn zero_observation_stays_silent() {
    let (model, gain) = lif();
    let p = SensingProblem::new(DenseMatrix::identity(3), vec![0.0; 3], 0.1, Penalty::L1, SignMode::Nonneg).unwrap();
    let tr = solve(&p, &model, &gain, &ema_config(10.0, 2.0)).unwrap();
    assert_eq!(tr.diag("total_spikes"), Some(0.0));
    assert!(tr.solution().iter().all(|&a| a == 0.0));
}

#[test]
fn rescaled_columns_decode_in_problem_units() {
    // A = diag(2, 1/2): solution a_i = max(d_i s_i − λ, 0) / d_i²
    let a = DenseMatrix::new(2, 2, vec![2.0, 0.0, 0.0, 0.5]).unwrap();
    let p = SensingProblem::new(a, vec![1.0, 2.0], 0.4, Penalty::L1, SignMode::Nonneg).unwrap();
    let (model, gain) = lif();
    let tr = solve(&p, &model, &gain, &ema_config(60.0, 20.0)).unwrap();
    let want = [(2.0 - 0.4) / 4.0, (1.0 - 0.4) / 0.25];
    for (got, want) in tr.solution().iter().zip(want) {
        assert_abs_diff_eq!(*got, want, epsilon = 0.05 * want);
    }
    assert_eq!(tr.vector("column_norms").unwrap(), &[2.0, 0.5]);
}

#[test]
fn implicit_injection_reaches_the_same_point() {
    let (model, gain) = lif();
    let cfg = EngineConfig {
        injection: InjectionMode::ImplicitGrad,
        ..ema_config(60.0, 10.0)
    };
    let tr = solve(&identity_problem(), &model, &gain, &cfg).unwrap();
    assert_abs_diff_eq!(tr.solution()[0], 0.5, epsilon = 0.03);
}

#[test]
fn event_driven_coupling_matches_rate_coupling() {
    let a = DenseMatrix::new(2, 2, vec![1.0, 0.6, 0.0, 0.8]).unwrap();
    let p = SensingProblem::new(a, vec![1.0, 0.5], 0.1, Penalty::L1, SignMode::Nonneg).unwrap();
    let (model, gain) = (NeuronModel::preset("pif").unwrap(), GainCurve::Pif { v_th: 1.0, v_reset: 0.0 });
    let base = EngineConfig {
        t_max: 400.0,
        dt: Some(0.01),
        ..EngineConfig::default()
    };
    let rate = solve(&p, &model, &gain, &base).unwrap();
    let event = solve(
        &p,
        &model,
        &gain,
        &EngineConfig {
            coupling: Coupling::EventDriven,
            ..base
        },
    )
    .unwrap();
    for (x, y) in rate.solution().iter().zip(event.solution()) {
        assert_abs_diff_eq!(*x, *y, epsilon = 0.02);
    }
}

#[test]
fn reruns_are_bitwise_identical() {
    let (model, gain) = lif();
    let cfg = EngineConfig {
        init_jitter: 0.5,
        seed: 7,
        ..ema_config(5.0, 1.0)
    };
    let p = identity_problem();
    let x = solve(&p, &model, &gain, &cfg).unwrap();
    let y = solve(&p, &model, &gain, &cfg).unwrap();
    assert_eq!(x, y);
}

#[test]
fn rejects_bad_configurations() {
    let (model, gain) = lif();
    let p = identity_problem();
    let bad_dt = EngineConfig {
        dt: Some(1.5),
        ..EngineConfig::default()
    };
    assert!(solve(&p, &model, &gain, &bad_dt).is_err());
    let bad_kappa = EngineConfig {
        rate_scale: RateScale::Fixed { kappa: 0.0 },
        ..EngineConfig::default()
    };
    assert!(solve(&p, &model, &gain, &bad_kappa).is_err());
    let short = EngineConfig {
        t_max: 0.0005,
        ..EngineConfig::default()
    };
    assert!(solve(&p, &model, &gain, &short).is_err());
    assert!(matches!(
        solve(&p.with_sign_mode(SignMode::Free), &model, &gain, &EngineConfig::default()),
        Err(Error::Unsupported(_))
    ));
}

#[test]
fn saturation_is_clamped_and_counted() {
    let (model, gain) = lif();
    // LIF caps at 1/t_ref = 500; ask for far more
    let p = SensingProblem::new(DenseMatrix::identity(1), vec![2000.0], 0.1, Penalty::L1, SignMode::Nonneg).unwrap();
    let tr = solve(&p, &model, &gain, &ema_config(2.0, 0.5)).unwrap();
    assert!(tr.diag("saturation_count").unwrap() > 0.0);
    assert!(tr.diag("max_rate").unwrap() <= 1.0 / 0.002 + 1e-9);
}

#[test]
fn config_round_trips_through_json() {
    let cfg = EngineConfig {
        rate_scale: RateScale::Fixed { kappa: 0.5 },
        coupling: Coupling::EventDriven,
        ..ema_config(3.0, 1.5)
    };
    let text = serde_json::to_string(&cfg).unwrap();
    assert_eq!(serde_json::from_str::<EngineConfig>(&text).unwrap(), cfg);
    let partial: EngineConfig = serde_json::from_str(r#"{"t_max": 9.0}"#).unwrap();
    assert_eq!(partial.t_max, 9.0);
    assert!(partial.anchor_correction);
}
