#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use regimekit::scalar::logit;
use regimekit::simulate::{DGPConfig, Generator};
use regimekit::spec::{Params, RegimeParams, TransitionParams};
use regimekit::timeseries::{Column, Dataset, Period};
use regimekit::{LaggedVar, ModelSpec};

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn periods(n: usize) -> Vec<Period> {
    let start: Period = "1998Q1".parse().unwrap();
    (0..n).map(|i| start.offset(i as i64)).collect()
}

/// Random data and parameters of `n` rows with `k` regressors; the
/// dependent values are not drawn from the model.
pub fn random_problem(rng: &mut ChaCha8Rng, n: usize, k: usize, tvtp: bool) -> (Dataset<f64>, ModelSpec, Params<f64>) {
    let regs: Vec<LaggedVar> = (0..k).map(|i| LaggedVar::new(format!("x{i}"), 1 + i)).collect();
    let spec = if tvtp {
        ModelSpec::time_varying(regs.clone(), LaggedVar::new("z", 1)).unwrap()
    } else {
        ModelSpec::fixed(regs.clone()).unwrap()
    };
    let cols: Vec<Column<f64>> = regs
        .iter()
        .map(|r| Column {
            name: r.name.clone(),
            lag: r.lag,
            values: (0..n).map(|_| 1.5 * normal(rng)).collect(),
        })
        .collect();
    let cov = tvtp.then(|| Column {
        name: "z".into(),
        lag: 1,
        values: (0..n).map(|_| 2.0 * normal(rng)).collect(),
    });
    let dep = (0..n).map(|_| 2.0 + 2.5 * normal(rng)).collect();
    let ds = Dataset::from_columns("pd", dep, cols, cov, periods(n)).unwrap();
    let regime = |rng: &mut ChaCha8Rng| RegimeParams {
        mu: 2.0 * normal(rng),
        betas: (0..k).map(|_| 0.5 * normal(rng)).collect(),
        log_var: rng.random_range(-1.0..1.5),
    };
    let regime = [regime(rng), regime(rng)];
    let transition = TransitionParams {
        alpha0: [rng.random_range(-2.0..3.0), rng.random_range(-2.0..3.0)],
        alpha1: tvtp.then(|| [rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)]),
    };
    (ds, spec, Params { regime, transition })
}

pub fn no_regressor_params(mu: [f64; 2], var: [f64; 2], p: [f64; 2], alpha1: Option<[f64; 2]>) -> Params<f64> {
    let r = |s: usize| RegimeParams {
        mu: mu[s],
        betas: vec![],
        log_var: var[s].ln(),
    };
    Params {
        regime: [r(0), r(1)],
        transition: TransitionParams {
            alpha0: [logit(p[0]), logit(p[1])],
            alpha1,
        },
    }
}

/// The well-separated FTP design: means 6 / 1, variances 1.2 / 0.6,
/// staying probabilities 0.7584 / 0.9433.
pub fn recovery_dgp(t: usize, seed: u64) -> DGPConfig<f64> {
    let spec = ModelSpec::fixed(vec![]).unwrap();
    DGPConfig::new(spec, no_regressor_params([6.0, 1.0], [1.2, 0.6], [0.7584, 0.9433], None), t, vec![], seed)
}

/// Same regimes with the steady-regime persistence driven by a lagged
/// covariate: `alpha1 = (0, 0.4)`.
pub fn tvtp_dgp(t: usize, seed: u64) -> DGPConfig<f64> {
    let spec = ModelSpec::time_varying(vec![], LaggedVar::new("fin", 1)).unwrap();
    let params = no_regressor_params([6.0, 1.0], [1.2, 0.6], [0.7584, 0.9433], Some([0.0, 0.4]));
    DGPConfig::new(spec, params, t, vec![Generator::gaussian("fin", 0.0, 2.0)], seed)
}

pub fn max_abs_diff(a: &[[f64; 2]], b: &[[f64; 2]]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| [(x[0] - y[0]).abs(), (x[1] - y[1]).abs()])
        .fold(0.0, f64::max)
}
