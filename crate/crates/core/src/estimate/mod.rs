//! Maximum-likelihood estimation via the Hamilton filter.
//!
//! Every restart runs a box-constrained quasi-Newton search from one of the
//! [`initial_points`]; the best local optimum wins, ties going to the lowest
//! restart index. Labels are then normalised so regime 1 (surge) has the
//! higher intercept, and standard errors come from a numerical Hessian.

mod hessian;
mod init;
mod optimize;
pub mod report;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::{
    classify, durations, loglikelihood, smooth, Classification, Durations, FilterOutput, SmoothOutput,
};
use crate::scalar::Scalar;
use crate::spec::{param_bounds, transition_matrix_at, ModelSpec, Params};
use crate::timeseries::{Dataset, Period};

pub use hessian::{hessian_step, max_asymmetry, negative_loglik, numerical_hessian, standard_errors};
pub use init::{initial_points, ALPHA0_START, JITTER_SCALE};
pub use optimize::{minimize, numerical_gradient, Convergence, MinimizeOptions, Minimum};

/// Expected regime occupancy below which a fit is flagged as starved.
pub const STARVED_REGIME_OBS: f64 = 3.0;

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub restarts: usize,
    pub seed: u64,
    pub tol: f64,
    pub max_iter: usize,
    /// Flat-vector coordinates held at the given value during optimisation.
    pub fixed: Vec<(usize, f64)>,
    /// Skip the Hessian (standard errors all absent).
    pub skip_std_errors: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            restarts: 20,
            seed: 0,
            tol: 1e-6,
            max_iter: 500,
            fixed: Vec::new(),
            skip_std_errors: false,
        }
    }
}

impl FitOptions {
    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_fixed(mut self, fixed: Vec<(usize, f64)>) -> Self {
        self.fixed = fixed;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct RestartDiagnostic<T> {
    pub index: usize,
    /// `None` when the restart never reached a finite likelihood.
    pub loglik: Option<T>,
    pub status: Convergence,
    pub iterations: usize,
    pub grad_max: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitWarning {
    NotConverged,
    StdErrorsUnavailable,
    RegimeStarved,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ConvergenceReport<T> {
    pub status: Convergence,
    pub best_restart: usize,
    pub restarts: Vec<RestartDiagnostic<T>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct FitResult<T> {
    pub spec: ModelSpec,
    pub dependent: String,
    pub param_names: Vec<String>,
    pub params: Params<T>,
    /// Flat-vector order, aligned with `param_names`.
    pub std_errors: Vec<Option<T>>,
    pub loglik: T,
    pub aic: T,
    pub n_obs: usize,
    pub n_params: usize,
    pub periods: Vec<Period>,
    pub dep: Vec<T>,
    pub filter: FilterOutput<T>,
    pub smoothed: SmoothOutput<T>,
    pub classification: Classification,
    pub durations: Durations<T>,
    pub convergence: ConvergenceReport<T>,
    pub warnings: Vec<FitWarning>,
}

impl<T: Scalar> FitResult<T> {
    pub fn std_error_of(&self, name: &str) -> Option<T> {
        let i = self.param_names.iter().position(|n| n == name)?;
        self.std_errors[i]
    }

    pub fn value_of(&self, name: &str) -> Option<T> {
        let i = self.param_names.iter().position(|n| n == name)?;
        Some(self.params.pack()[i])
    }

    pub fn converged(&self) -> bool {
        self.convergence.status == Convergence::Converged
    }
}

/// Per-observation Akaike criterion `(-2 loglik + 2 k) / n`.
pub fn aic<T: Scalar>(loglik: T, n_params: usize, n_obs: usize) -> T {
    (T::lit(-2.0) * loglik + T::lit(2.0) * T::from_count(n_params)) / T::from_count(n_obs)
}

/// Two-sided significance level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Level {
    #[serde(rename = "10")]
    Ten,
    #[serde(rename = "5")]
    Five,
    #[serde(rename = "1")]
    One,
}

impl Level {
    /// Normal critical value for the two-sided test.
    pub fn critical_z(&self) -> f64 {
        match self {
            Level::Ten => 1.645,
            Level::Five => 1.960,
            Level::One => 2.576,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Stars {
    /// No standard error available.
    Unavailable,
    None,
    One,
    Two,
    Three,
}

impl Stars {
    pub fn marker(&self) -> &'static str {
        match self {
            Stars::Unavailable | Stars::None => "",
            Stars::One => "*",
            Stars::Two => "**",
            Stars::Three => "***",
        }
    }

    pub fn significant_at(&self, level: Level) -> bool {
        let need = match level {
            Level::Ten => Stars::One,
            Level::Five => Stars::Two,
            Level::One => Stars::Three,
        };
        *self >= need
    }
}

/// Normal z-test stars: `|z| > 1.645` one, `> 1.960` two, `> 2.576` three.
pub fn stars<T: Scalar>(coef: T, se: Option<T>) -> Stars {
    let Some(se) = se.filter(|s| *s > T::zero() && s.is_finite()) else {
        return Stars::Unavailable;
    };
    let z = (coef / se).abs().to_f64_lossy();
    if z > Level::One.critical_z() {
        Stars::Three
    } else if z > Level::Five.critical_z() {
        Stars::Two
    } else if z > Level::Ten.critical_z() {
        Stars::One
    } else {
        Stars::None
    }
}

/// Flat-vector permutation applied by a regime-label swap: entry `i` of the
/// swapped vector is entry `perm[i]` of the original.
pub fn swap_permutation(spec: &ModelSpec) -> Vec<usize> {
    let block = spec.n_regressors() + 2;
    let mut perm: Vec<usize> = (block..2 * block).chain(0..block).collect();
    let a = 2 * block;
    perm.extend([a + 1, a]);
    if spec.is_tvtp() {
        perm.extend([a + 3, a + 2]);
    }
    perm
}

/// Swaps labels when regime 1 has the lower intercept. Returns the
/// normalised parameters and whether a swap took place.
pub fn normalize_labels<T: Scalar>(p: &Params<T>) -> (Params<T>, bool) {
    if p.regime[0].mu < p.regime[1].mu {
        (p.swapped(), true)
    } else {
        (p.clone(), false)
    }
}

fn best_restart<T: Scalar>(runs: &[(usize, Minimum<T>)]) -> Option<usize> {
    runs.iter()
        .enumerate()
        .filter(|(_, (_, m))| m.value.is_finite())
        .min_by(|(ia, (_, a)), (ib, (_, b))| {
            a.value
                .partial_cmp(&b.value)
                .unwrap()
                .then(ia.cmp(ib))
        })
        .map(|(i, _)| i)
}

/// Fits `spec` to `ds` by multi-start maximum likelihood.
pub fn fit<T: Scalar>(ds: &Dataset<T>, spec: &ModelSpec, options: &FitOptions) -> Result<FitResult<T>> {
    spec.check_dataset(ds)?;
    let k = spec.n_params();
    if ds.n_obs() <= k + 10 {
        return Err(Error::InsufficientData(format!(
            "{} observations for {k} parameters; need more than {}",
            ds.n_obs(),
            k + 10
        )));
    }
    if let Some(&(i, _)) = options.fixed.iter().find(|(i, _)| *i >= k) {
        return Err(Error::InvalidSpec(format!("fixed coordinate {i} out of range")));
    }
    let fixed_idx: Vec<usize> = options.fixed.iter().map(|(i, _)| *i).collect();
    let free: Vec<usize> = (0..k).filter(|i| !fixed_idx.contains(i)).collect();

    let bounds = param_bounds::<T>(spec);
    let free_bounds: Vec<(T, T)> = free.iter().map(|&i| bounds[i]).collect();
    let mut points = initial_points(ds, spec, options.seed, options.restarts.max(1));
    for p in &mut points {
        for &(i, v) in &options.fixed {
            p[i] = T::lit(v);
        }
    }
    let template = points[0].clone();
    let expand = |x: &[T]| {
        let mut full = template.clone();
        for (&i, &v) in free.iter().zip(x) {
            full[i] = v;
        }
        full
    };
    let nll = negative_loglik(ds, spec);
    let objective = |x: &[T]| nll(&expand(x));
    let mopts = MinimizeOptions {
        tol: options.tol,
        max_iter: options.max_iter,
    };

    let runs: Vec<(usize, Minimum<T>)> = points
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let x0: Vec<T> = free.iter().map(|&j| p[j]).collect();
            (i, minimize(objective, &x0, &free_bounds, &mopts))
        })
        .collect();
    let diagnostics: Vec<RestartDiagnostic<T>> = runs
        .iter()
        .map(|(i, m)| RestartDiagnostic {
            index: *i,
            loglik: m.value.is_finite().then(|| -m.value),
            status: m.status,
            iterations: m.iterations,
            grad_max: m.grad_max,
        })
        .collect();
    let Some(best) = best_restart(&runs) else {
        let summary: Vec<String> = diagnostics
            .iter()
            .map(|d| format!("restart {}: {:?}", d.index, d.status))
            .collect();
        return Err(Error::Estimation(format!(
            "no restart reached a finite log-likelihood ({})",
            summary.join(", ")
        )));
    };
    let best_min = &runs[best].1;
    let theta = expand(&best_min.x);

    let se_raw = if options.skip_std_errors {
        vec![None; k]
    } else {
        standard_errors(ds, spec, &theta, &fixed_idx)
    };
    let raw = Params::unpack(&theta, spec)?;
    let (params, swapped) = normalize_labels(&raw);
    let std_errors = if swapped {
        swap_permutation(spec).into_iter().map(|j| se_raw[j]).collect()
    } else {
        se_raw
    };

    let filter = loglikelihood(ds, spec, &params)?;
    let smoothed = smooth(&filter, ds, spec, &params)?;
    let classification = classify(&smoothed, &ds.periods);
    let durations = model_durations(ds, spec, &params, &classification)?;

    let mut warnings = Vec::new();
    if best_min.status != Convergence::Converged {
        warnings.push(FitWarning::NotConverged);
    }
    if !options.skip_std_errors {
        let missing = std_errors
            .iter()
            .enumerate()
            .any(|(i, s)| s.is_none() && !fixed_idx.contains(&i));
        if missing {
            warnings.push(FitWarning::StdErrorsUnavailable);
        }
    }
    if smoothed
        .expected_counts()
        .iter()
        .any(|&c| c < T::lit(STARVED_REGIME_OBS))
    {
        warnings.push(FitWarning::RegimeStarved);
    }

    let loglik = filter.loglik;
    Ok(FitResult {
        spec: spec.clone(),
        dependent: ds.dep_name.clone(),
        param_names: spec.param_names(),
        params,
        std_errors,
        loglik,
        aic: aic(loglik, k, ds.n_obs()),
        n_obs: ds.n_obs(),
        n_params: k,
        periods: ds.periods.clone(),
        dep: ds.dep.clone(),
        filter,
        smoothed,
        classification,
        durations,
        convergence: ConvergenceReport {
            status: best_min.status,
            best_restart: best,
            restarts: diagnostics,
        },
        warnings,
    })
}

/// Model-implied durations use the constant matrix in FTP mode and the
/// matrix at the covariate's sample mean in TVTP mode.
fn model_durations<T: Scalar>(
    ds: &Dataset<T>,
    spec: &ModelSpec,
    p: &Params<T>,
    class: &Classification,
) -> Result<Durations<T>> {
    let at = if spec.is_tvtp() {
        let c = ds.tp_covariate.as_ref().ok_or(Error::MissingCovariate)?;
        Some(c.values.iter().copied().sum::<T>() / T::from_count(c.values.len()))
    } else {
        None
    };
    let tm = transition_matrix_at(&p.transition, at)?;
    let mut d = durations(Some(&tm), Some(class));
    d.evaluated_at = at;
    Ok(d)
}
