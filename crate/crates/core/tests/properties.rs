use corrnoise::infer::{sample_posterior, Prior, SamplerConfig};
use corrnoise::likelihood::{NoiseSpec, ObservationModel};
use corrnoise::noise::{sample_acf, simulate_noise};
use corrnoise::odes::{herg_priors, predict, ConstantModel, HergModel, LogisticModel, Solver, Tolerances, VoltageProtocol};
use corrnoise::seed::derive_seed;
use corrnoise::{NoiseModel, TimeSeries};
use proptest::prelude::*;
use std::sync::Arc;

fn herg_params() -> impl Strategy<Value = Vec<f64>> {
    // log-normal priors widened to +-3 sd on the log scale
    let priors = [(10.5, 1.0), (-2.5, 3.0), (4.5, 1.0), (-3.5, 1.5), (4.0, 0.5), (4.5, 0.5), (3.0, 1.5), (2.0, 0.5), (3.5, 0.5)];
    priors.map(|(m, s): (f64, f64)| (m - 3.0 * s..m + 3.0 * s).prop_map(f64::exp)).to_vec()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn herg_gates_stay_in_unit_interval(p in herg_params()) {
        let herg = HergModel::new(VoltageProtocol::synthetic_staircase());
        let times = TimeSeries::grid(0.0, 6.5, 1301).unwrap().times();
        for (a, r) in herg.exact_gates(&p, &times).unwrap() {
            prop_assert!((0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&r), "a {a} r {r}");
        }
    }

    #[test]
    fn prior_draws_lie_in_support(seed in any::<u64>()) {
        let mut rng = corrnoise::seed::rng_from_seed(seed);
        for prior in herg_priors().into_iter().chain([Prior::gamma(2.5, 0.05), Prior::beta(4.0, 2.0)]) {
            let x = prior.sample(&mut rng);
            let (lo, hi) = prior.support();
            prop_assert!(x > lo && x < hi && prior.log_density(x).is_finite());
        }
    }

    #[test]
    fn time_series_csv_round_trips(values in prop::collection::vec(-1e6f64..1e6, 1..50), dt in 1e-3f64..10.0) {
        let ts = TimeSeries::new(0.0, dt, values).unwrap();
        let mut buf = Vec::new();
        ts.write_csv(&mut buf).unwrap();
        let back = TimeSeries::read_csv(buf.as_slice()).unwrap();
        prop_assert_eq!(back.values(), ts.values());
    }

    #[test]
    fn simulated_ar1_has_expected_lag_one_acf(rho in -0.9f64..0.9, seed in any::<u64>()) {
        let noise = NoiseModel::ar1(1.0, rho).unwrap();
        let series = simulate_noise(&noise, 20_000, seed, 500).unwrap();
        let acf = sample_acf(&series, 1).unwrap();
        prop_assert!((acf[0] - rho).abs() < 0.05, "acf {} rho {rho}", acf[0]);
    }
}

#[test]
fn tightening_tolerances_changes_output_less_than_tolerance() {
    let tol = Tolerances::default();
    let tight = tol.scaled(0.1);
    let grid = TimeSeries::grid(0.0, 20.0, 401).unwrap();
    let herg = HergModel::new(VoltageProtocol::synthetic_staircase());
    let hgrid = TimeSeries::grid(0.0, 6.5, 651).unwrap();
    let hp = [36_000.0, 0.08, 90.0, 0.03, 54.6, 90.0, 20.0, 7.4, 33.0];
    let cases: [(&dyn corrnoise::odes::DynamicalModel, &[f64], &TimeSeries); 2] =
        [(&LogisticModel, &[0.5, 50.0, 1.0], &grid), (&herg, &hp, &hgrid)];
    for (model, p, g) in cases {
        let a = predict(model, p, g, &tol).unwrap();
        let b = predict(model, p, g, &tight).unwrap();
        let scale = b.iter().fold(0.0f64, |s, v| s.max(v.abs()));
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= tol.abs + tol.rel * scale, "{} {x} vs {y}", model.name());
        }
    }
}

#[test]
fn credible_intervals_are_calibrated() {
    let grid = TimeSeries::grid(0.0, 99.0, 100).unwrap();
    let model = ObservationModel::new(Arc::new(ConstantModel), NoiseSpec::ar1()).with_solver(Solver::ClosedForm);
    let priors = [Prior::uniform(-100.0, 100.0), Prior::uniform(0.0, 100.0), Prior::uniform(-1.0, 1.0)];
    let truth = [10.0, 1.0, 0.5];
    let cfg = SamplerConfig { chains: 2, iterations: 3000, ..Default::default() };
    let datasets = 200;
    let covered = (0..datasets as u64)
        .filter(|&k| {
            let data = model.simulate(&grid, &truth, derive_seed(55, &[k])).unwrap();
            let fit = sample_posterior(&model, &data, &priors, &cfg, k).unwrap();
            let (lo, hi) = fit.interval("mu", 0.9).unwrap();
            lo <= truth[0] && truth[0] <= hi
        })
        .count();
    let pct = 100.0 * covered as f64 / datasets as f64;
    println!("90% intervals for mu cover the truth in {pct:.1}% of {datasets} datasets");
    assert!((86.0..=94.0).contains(&pct), "coverage {pct}%");
}
