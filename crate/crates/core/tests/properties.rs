use proptest::prelude::*;

use slca::baselines::{fista, ista, ProxSolverConfig};
use slca::engine::{solve, Coupling, EngineConfig, RateEstimator};
use slca::generators::{gaussian_problem, GaussianSpec, LambdaSpec};
use slca::{GainCurve, NeuronModel, SensingProblem};

fn small_instance(seed: u64, m: usize, n: usize, k: usize, factor: f64) -> SensingProblem {
    gaussian_problem(&GaussianSpec {
        m,
        n,
        k,
        seed,
        lambda: LambdaSpec::Relative { factor },
        ..Default::default()
    })
    .unwrap()
    .0
}

/// `B + (n − 1) C / (1 − e^{−dt})` in the network's unit-column variables:
/// one spike per step at most, each kicking by at most `C`, kicks decaying
/// with unit time constant.
fn current_bound(p: &SensingProblem, kappa: f64, dt: f64) -> f64 {
    let a = p.matrix();
    let norms = a.column_norms();
    let corr = a.tr_mul_vec(p.observation()).unwrap();
    let drive = corr
        .iter()
        .zip(&norms)
        .map(|(c, d)| (c / d).abs())
        .fold(0.0, f64::max);
    let gram = a.gram();
    let n = p.n();
    let mut coupling = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                coupling = coupling.max((gram.get(i, j) / (norms[i] * norms[j])).abs());
            }
        }
    }
    drive + (n - 1) as f64 * coupling / kappa / -(-dt).exp_m1()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn lif_crossings_respect_refractory_period(
        t_ref in 0.005f64..0.2,
        current in 1.5f64..400.0,
        dt in prop::sample::select(vec![0.001, 0.004, 0.01]),
    ) {
        let mut m = NeuronModel::preset("lif").unwrap();
        m.set_param("t_ref", t_ref).unwrap();
        let s = m.stepper(dt).unwrap();
        let mut st = s.initial_state();
        // refractory_until = crossing time + t_ref, so consecutive values
        // are separated by the exact inter-spike interval
        let mut ends = Vec::new();
        for _ in 0..(5.0 / dt) as usize {
            if s.step(&mut st, current).unwrap() {
                ends.push(st.refractory_until);
            }
        }
        prop_assert!(ends.len() >= 2);
        for w in ends.windows(2) {
            prop_assert!(w[1] - w[0] >= t_ref - 1e-12);
        }
    }

    #[test]
    fn lif_subthreshold_follows_closed_form(current in 0.0f64..0.99, dt in 0.0005f64..0.05) {
        let m = NeuronModel::preset("lif").unwrap();
        let s = m.stepper(dt).unwrap();
        let mut st = s.initial_state();
        for k in 1..=200 {
            prop_assert!(!s.step(&mut st, current).unwrap());
            let t = k as f64 * dt;
            prop_assert!((st.v - current * -(-t).exp_m1()).abs() <= 1e-12);
        }
    }

    #[test]
    fn engine_currents_stay_bounded_and_rates_nonnegative(
        seed in 0u64..1000,
        events in any::<bool>(),
        pif in any::<bool>(),
    ) {
        let p = small_instance(seed, 8, 16, 3, 0.1);
        let model = NeuronModel::preset(if pif { "pif" } else { "lif" }).unwrap();
        let gain = GainCurve::analytic(&model).unwrap();
        let cfg = EngineConfig {
            t_max: 40.0,
            dt: Some(0.01),
            rate_estimator: RateEstimator::Ema { tau: 5.0 },
            coupling: if events { Coupling::EventDriven } else { Coupling::RateCoupled },
            ..Default::default()
        };
        let tr = solve(&p, &model, &gain, &cfg).unwrap();
        let bound = current_bound(&p, tr.diag("kappa").unwrap(), 0.01);
        prop_assert!(tr.diag("max_abs_u").unwrap() <= bound);
        prop_assert!(tr.diag("max_abs_mu").unwrap() <= bound);
        for s in &tr.samples {
            prop_assert!(s.coeffs.iter().all(|&x| x >= 0.0 && x.is_finite()));
        }
    }

    #[test]
    fn ista_and_fista_agree_at_convergence(seed in 0u64..1000, factor in 0.05f64..0.5) {
        let p = small_instance(seed, 10, 20, 3, factor);
        let cfg = ProxSolverConfig { max_iters: 200_000, tol: 1e-14, ..Default::default() };
        let f = fista(&p, &cfg).unwrap().final_objective().unwrap();
        let i = ista(&p, &cfg).unwrap().final_objective().unwrap();
        prop_assert!((f - i).abs() <= 1e-8 * f.abs());
    }

    #[test]
    fn gaussian_generator_is_pure(seed in any::<u64>(), nonneg in any::<bool>(), normalize_cols in any::<bool>()) {
        let spec = GaussianSpec { m: 6, n: 12, k: 2, seed, nonneg, normalize_cols, ..Default::default() };
        let (p, t) = gaussian_problem(&spec).unwrap();
        let (q, u) = gaussian_problem(&spec).unwrap();
        prop_assert_eq!(p.matrix(), q.matrix());
        prop_assert_eq!(p.observation(), q.observation());
        prop_assert_eq!(t, u);
        if normalize_cols {
            for norm in p.matrix().column_norms() {
                prop_assert!((norm - 1.0).abs() <= 1e-12);
            }
        }
    }
}
