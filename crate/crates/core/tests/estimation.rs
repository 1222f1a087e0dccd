mod common;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use regimekit::estimate::report::markdown_table;
use regimekit::estimate::{
    aic, fit, initial_points, max_asymmetry, negative_loglik, normalize_labels, numerical_gradient, numerical_hessian,
    FitOptions, FitWarning,
};
use regimekit::filter::loglikelihood;
use regimekit::linalg::ols;
use regimekit::simulate::{simulate, Generator};
use regimekit::spec::param_bounds;
use regimekit::timeseries::Dataset;
use regimekit::{Error, LaggedVar, ModelSpec};

use common::{normal, periods, recovery_dgp};

fn with_regressor(t: usize, seed: u64) -> (Dataset<f64>, ModelSpec) {
    let mut cfg = recovery_dgp(t, seed);
    cfg.spec = ModelSpec::fixed(vec![LaggedVar::new("x", 1)]).unwrap();
    cfg.params.regime[0].betas = vec![-0.8];
    cfg.params.regime[1].betas = vec![0.3];
    cfg.generators = vec![Generator::gaussian("x", 0.0, 1.5)];
    (simulate(&cfg).unwrap().dataset, cfg.spec)
}

#[test]
fn single_regime_standard_errors_match_ols() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 300;
    let x1: Vec<f64> = (0..n).map(|_| normal(&mut rng)).collect();
    let x2: Vec<f64> = (0..n).map(|_| 2.0 * normal(&mut rng)).collect();
    let y: Vec<f64> = (0..n)
        .map(|t| 1.0 + 0.5 * x1[t] - 0.25 * x2[t] + 0.8 * normal(&mut rng))
        .collect();
    let col = |name: &str, v: &Vec<f64>| regimekit::timeseries::Column {
        name: name.into(),
        lag: 1,
        values: v.clone(),
    };
    let ds = Dataset::from_columns("y", y.clone(), vec![col("a", &x1), col("b", &x2)], None, periods(n)).unwrap();
    let spec = ModelSpec::fixed(vec![LaggedVar::new("a", 1), LaggedVar::new("b", 1)]).unwrap();

    // Regime 2 and both alphas pinned so regime 1 is absorbing from t = 1.
    let fixed = vec![(4, 0.0), (5, 0.0), (6, 0.0), (7, 0.0), (8, 50.0), (9, -50.0)];
    let f = fit(&ds, &spec, &FitOptions::default().with_fixed(fixed)).unwrap();

    let design: Vec<Vec<f64>> = (0..n).map(|t| vec![1.0, x1[t], x2[t]]).collect();
    let o = ols(&design, &y).unwrap();
    let sigma2 = o.rss / n as f64;
    let xtx_inv = regimekit::linalg::invert(
        &(0..3)
            .map(|i| (0..3).map(|j| design.iter().map(|r| r[i] * r[j]).sum()).collect())
            .collect::<Vec<Vec<f64>>>(),
    )
    .unwrap();
    for (j, name) in [(1, "a_lag1_1"), (2, "b_lag1_1")] {
        let want = (sigma2 * xtx_inv[j][j]).sqrt();
        let got = f.std_error_of(name).unwrap();
        assert!((got / want - 1.0).abs() < 0.05, "{name}: {got} vs {want}");
        assert!((f.value_of(name).unwrap() - o.coef[j]).abs() < 1e-4);
    }
    for name in ["mu2", "log_var2", "alpha0_1"] {
        assert_eq!(f.std_error_of(name), None);
    }
}

#[test]
fn optimum_passes_gradient_and_symmetry_checks() {
    let (ds, spec) = with_regressor(200, 12);
    let f = fit(&ds, &spec, &FitOptions::default()).unwrap();
    assert!(f.converged());
    let nll = negative_loglik(&ds, &spec);
    let x = f.params.pack();
    let g = numerical_gradient(&nll, &x, nll(&x), &param_bounds::<f64>(&spec));
    let gmax = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(gmax < 1e-3 * (1.0 + f.loglik.abs()), "{gmax}");
    let free: Vec<usize> = (0..x.len()).collect();
    let h = numerical_hessian(&nll, &x, &free);
    let worst = max_asymmetry(&h);
    assert!(worst < 1e-4, "{worst}");
    assert!(f.params.regime[0].mu >= f.params.regime[1].mu);
}

#[test]
fn fit_bookkeeping() {
    let (ds, spec) = with_regressor(150, 4);
    let f = fit(&ds, &spec, &FitOptions::default()).unwrap();
    assert_eq!(f.n_params, 8);
    assert_eq!(f.params.pack().len(), f.n_params);
    assert_eq!(f.std_errors.len(), f.n_params);
    assert_eq!(f.aic, aic(f.loglik, f.n_params, f.n_obs));
    assert_eq!(f.loglik, loglikelihood(&ds, &spec, &f.params).unwrap().loglik);
    assert_eq!(f.convergence.restarts.len(), 20);
    let best = f.convergence.restarts[f.convergence.best_restart].loglik.unwrap();
    assert!(f.convergence.restarts.iter().all(|r| r.loglik.is_none_or(|l| l <= best)));
    assert!((f.loglik - best).abs() < 1e-9);
    let same = fit(&ds, &spec, &FitOptions::default()).unwrap();
    assert_eq!(f, same);
}

#[test]
fn normalisation_is_idempotent_and_loglik_preserving() {
    let (ds, spec) = with_regressor(120, 7);
    let f = fit(&ds, &spec, &FitOptions::default()).unwrap();
    let flipped = f.params.swapped();
    let (once, swapped) = normalize_labels(&flipped);
    assert!(swapped);
    assert_eq!(once, f.params);
    assert_eq!(normalize_labels(&once).0, once);
    let a = loglikelihood(&ds, &spec, &flipped).unwrap().loglik;
    let b = loglikelihood(&ds, &spec, &once).unwrap().loglik;
    assert!((a - b).abs() < 1e-10);
}

#[test]
fn extra_regressor_never_lowers_the_maximum() {
    for seed in 0..3 {
        let (ds, spec) = with_regressor(150, 40 + seed);
        let mut smaller = ds.clone();
        smaller.regressors.clear();
        let big = fit(&ds, &spec, &FitOptions::default()).unwrap();
        let small = fit(&smaller, &ModelSpec::fixed(vec![]).unwrap(), &FitOptions::default()).unwrap();
        assert!(big.loglik >= small.loglik - 1e-4, "{} < {}", big.loglik, small.loglik);
    }
}

#[test]
fn identical_regimes_are_flagged_not_fatal() {
    let mut cfg = recovery_dgp(200, 77);
    cfg.params.regime[1] = cfg.params.regime[0].clone();
    let ds = simulate(&cfg).unwrap().dataset;
    let f = fit(&ds, &cfg.spec, &FitOptions::default()).unwrap();
    let widest = f.std_errors.iter().flatten().fold(0.0f64, |m, &s| m.max(s));
    let flagged = f.warnings.iter().any(|w| {
        matches!(w, FitWarning::StdErrorsUnavailable | FitWarning::RegimeStarved | FitWarning::NotConverged)
    });
    assert!(flagged || widest > 1.0, "{:?} {:?}", f.warnings, f.std_errors);
}

#[test]
fn data_driven_start_is_close_on_the_recovery_design() {
    let spec = ModelSpec::fixed(vec![]).unwrap();
    let close = (0..100)
        .filter(|&i| {
            let ds = simulate(&recovery_dgp(400, 2_000 + i)).unwrap().dataset;
            let p = &initial_points(&ds, &spec, 0, 1)[0];
            (p[0] - 6.0).abs() <= 2.0 && (p[2] - 1.0).abs() <= 2.0
        })
        .count();
    assert!(close >= 80, "{close}/100");
}

#[test]
fn too_few_observations() {
    let (ds, spec) = with_regressor(18, 1);
    assert!(matches!(fit(&ds, &spec, &FitOptions::default()), Err(Error::InsufficientData(_))));
}

#[test]
fn all_restarts_failing_is_an_estimation_error() {
    let n = 40;
    let mut dep = vec![1.0; n];
    dep[5] = 1e200;
    let ds = Dataset::from_columns("y", dep, vec![], None, periods(n)).unwrap();
    let e = fit(&ds, &ModelSpec::fixed(vec![]).unwrap(), &FitOptions::default().with_restarts(3)).unwrap_err();
    assert!(matches!(e, Error::Estimation(_)), "{e}");
}

#[test]
fn single_precision_fit_runs() {
    let sim = simulate(&recovery_dgp(200, 5)).unwrap().dataset;
    let ds32 = Dataset::<f32>::from_columns(
        "pd",
        sim.dep.iter().map(|&v| v as f32).collect(),
        vec![],
        None,
        sim.periods.clone(),
    )
    .unwrap();
    let f = fit(&ds32, &ModelSpec::fixed(vec![]).unwrap(), &FitOptions::default().with_restarts(4)).unwrap();
    assert!((f.params.regime[0].mu - 6.0).abs() < 1.0);
    assert!((f.params.regime[1].mu - 1.0).abs() < 1.0);
}

#[test]
fn markdown_table_layout() {
    let (ds, spec) = with_regressor(120, 2);
    let f = fit(&ds, &spec, &FitOptions::default()).unwrap();
    let md = markdown_table(&[("M", &f)]);
    let lines: Vec<&str> = md.lines().collect();
    assert_eq!(lines[0], "| | M |");
    assert!(md.contains("| *Surge regime* |"));
    assert!(md.contains("| x_{t-1}^1 | "));
    assert!(md.contains("| log(σ_t^2) | "));
    let footer = lines.iter().position(|l| l.starts_with("| AIC |")).unwrap();
    assert!(lines[footer + 1].starts_with("| Loglikelihood |"));
    assert_eq!(lines[footer + 2], format!("| Number of observations | {} |", f.n_obs));
    assert!(md.contains(&format!("{:.3}", f.aic)));
}
