use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::spec::{steady_state, transition_matrix_at, InitialDistribution, ModelSpec, Params, TransitionMatrix};
use crate::timeseries::Dataset;

use super::FilterOutput;

/// Largest standardized exponent `r^2 / (2 sigma^2)` a regime density may
/// reach. An observation for which every regime exceeds it is reported as a
/// non-finite density.
pub const DENSITY_EXPONENT_CAP: f64 = 700.0;

pub(crate) fn matrix_at<T: Scalar>(ds: &Dataset<T>, p: &Params<T>, t: usize) -> Result<TransitionMatrix<T>> {
    let z = if p.transition.alpha1.is_some() {
        Some(ds.covariate(t).ok_or(Error::MissingCovariate)?)
    } else {
        None
    };
    transition_matrix_at(&p.transition, z)
}

pub(crate) fn initial_probs<T: Scalar>(
    ds: &Dataset<T>,
    spec: &ModelSpec,
    p: &Params<T>,
) -> Result<[T; 2]> {
    match spec.initial() {
        InitialDistribution::Ergodic => steady_state(&matrix_at(ds, p, 0)?),
        InitialDistribution::Uniform => Ok([T::lit(0.5), T::lit(0.5)]),
    }
}

struct Step<T> {
    filtered: [T; 2],
    loglik: T,
}

#[inline]
fn update<T: Scalar>(ds: &Dataset<T>, p: &Params<T>, t: usize, pred: [T; 2]) -> Result<Step<T>> {
    let half = T::lit(0.5);
    let log_norm = half * (T::lit(2.0) * T::PI()).ln();
    let cap = T::lit(DENSITY_EXPONENT_CAP);
    let y = ds.dep[t];
    let mut logd = [T::zero(); 2];
    let mut capped = 0;
    for (s, r) in p.regime.iter().enumerate() {
        let resid = y - r.mean(ds.row(t));
        let q = half * resid * resid / r.variance();
        if !(q <= cap) {
            capped += 1;
        }
        logd[s] = -log_norm - half * r.log_var - q;
    }
    if capped == 2 || logd.iter().any(|d| d.is_nan()) {
        return Err(Error::NonFiniteDensity { t });
    }
    let m = logd[0].max(logd[1]);
    let w = [pred[0] * (logd[0] - m).exp(), pred[1] * (logd[1] - m).exp()];
    let sum = w[0] + w[1];
    let loglik = m + sum.ln();
    if !(sum > T::zero()) || !loglik.is_finite() {
        return Err(Error::NonFiniteDensity { t });
    }
    Ok(Step {
        filtered: [w[0] / sum, w[1] / sum],
        loglik,
    })
}

/// Hamilton filter. The first predicted row is the initial distribution;
/// row `t > 0` propagates the previous filtered row through the transition
/// matrix evaluated at row `t` (its covariate value in TVTP mode).
pub fn loglikelihood<T: Scalar>(ds: &Dataset<T>, spec: &ModelSpec, p: &Params<T>) -> Result<FilterOutput<T>> {
    spec.check_dataset(ds)?;
    let n = ds.n_obs();
    let mut predicted = Vec::with_capacity(n);
    let mut filtered = Vec::with_capacity(n);
    let mut per_obs_loglik = Vec::with_capacity(n);
    let mut pred = initial_probs(ds, spec, p)?;
    for t in 0..n {
        if t > 0 {
            pred = matrix_at(ds, p, t)?.propagate(filtered[t - 1]);
        }
        let step = update(ds, p, t, pred)?;
        predicted.push(pred);
        filtered.push(step.filtered);
        per_obs_loglik.push(step.loglik);
    }
    Ok(FilterOutput {
        loglik: per_obs_loglik.iter().copied().sum(),
        predicted,
        filtered,
        per_obs_loglik,
    })
}

/// Log-likelihood only, without storing the probability paths. Assumes the
/// dataset was already checked against the spec.
pub fn loglik_value<T: Scalar>(ds: &Dataset<T>, spec: &ModelSpec, p: &Params<T>) -> Result<T> {
    let mut pred = initial_probs(ds, spec, p)?;
    let mut total = T::zero();
    let fixed = if p.transition.alpha1.is_none() {
        Some(matrix_at(ds, p, 0)?)
    } else {
        None
    };
    let mut prev = pred;
    for t in 0..ds.n_obs() {
        if t > 0 {
            let tm = match fixed {
                Some(tm) => tm,
                None => matrix_at(ds, p, t)?,
            };
            pred = tm.propagate(prev);
        }
        let step = update(ds, p, t, pred)?;
        total = total + step.loglik;
        prev = step.filtered;
    }
    Ok(total)
}
