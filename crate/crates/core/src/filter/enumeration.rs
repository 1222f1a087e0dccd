//! Brute-force likelihood and posterior marginals by summing over all `2^T`
//! regime paths. Exponential in `T`; meant as a reference for short samples.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::spec::{steady_state, transition_matrix_at, InitialDistribution, ModelSpec, Params};
use crate::timeseries::Dataset;

/// Upper limit on the sample length accepted by [`enumerate_paths`].
pub const MAX_ENUMERATION_LEN: usize = 20;

#[derive(Debug, Clone)]
pub struct PathPosterior<T> {
    pub loglik: T,
    /// `P(s_t = j | all data)`.
    pub marginals: Vec<[T; 2]>,
}

/// Sums `initial * prod(transition) * prod(density)` over every path.
pub fn enumerate_paths<T: Scalar>(
    ds: &Dataset<T>,
    spec: &ModelSpec,
    p: &Params<T>,
) -> Result<PathPosterior<T>> {
    let n = ds.n_obs();
    if n > MAX_ENUMERATION_LEN {
        return Err(Error::Domain(format!(
            "path enumeration limited to {MAX_ENUMERATION_LEN} observations"
        )));
    }
    let matrices = (0..n)
        .map(|t| {
            let z = if spec.is_tvtp() { ds.covariate(t) } else { None };
            transition_matrix_at(&p.transition, z)
        })
        .collect::<Result<Vec<_>>>()?;
    let init = match spec.initial() {
        InitialDistribution::Ergodic => steady_state(&matrices[0])?,
        InitialDistribution::Uniform => [T::lit(0.5), T::lit(0.5)],
    };
    let two_pi = T::lit(2.0) * T::PI();
    let log_density = |t: usize, s: usize| {
        let r = &p.regime[s];
        let mean = r.betas
            .iter()
            .zip(&ds.regressors)
            .fold(r.mu, |acc, (&b, c)| acc + b * c.values[t]);
        let var = r.log_var.exp();
        let e = ds.dep[t] - mean;
        -(two_pi * var).ln() / T::lit(2.0) - e * e / (T::lit(2.0) * var)
    };
    let dens: Vec<[T; 2]> = (0..n).map(|t| [log_density(t, 0), log_density(t, 1)]).collect();

    let mut path_logs = Vec::with_capacity(1 << n);
    for path in 0u32..(1u32 << n) {
        let state = |t: usize| ((path >> t) & 1) as usize;
        let mut lp = init[state(0)].ln() + dens[0][state(0)];
        for t in 1..n {
            lp = lp + matrices[t].prob(state(t - 1), state(t)).ln() + dens[t][state(t)];
        }
        path_logs.push(lp);
    }
    let m = path_logs.iter().copied().fold(T::neg_infinity(), T::max);
    let weights: Vec<T> = path_logs.iter().map(|&l| (l - m).exp()).collect();
    let total: T = weights.iter().copied().sum();
    let mut marginals = vec![[T::zero(); 2]; n];
    for (path, &w) in weights.iter().enumerate() {
        for (t, row) in marginals.iter_mut().enumerate() {
            let s = (path >> t) & 1;
            row[s] = row[s] + w;
        }
    }
    for row in &mut marginals {
        row[0] = row[0] / total;
        row[1] = row[1] / total;
    }
    Ok(PathPosterior {
        loglik: m + total.ln(),
        marginals,
    })
}
