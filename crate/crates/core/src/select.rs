//! Lag selection for one variable at a time.
//!
//! Control variables take the smallest lag whose coefficient is significant;
//! the financial covariate takes the AIC-minimising lag in the regression,
//! the transition equation, or both.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{fit, stars, FitOptions, FitResult, Level, Stars};
use crate::scalar::Scalar;
use crate::spec::ModelSpec;
use crate::timeseries::{Dataset, Series};

pub const DEFAULT_MAX_LAG: usize = 4;

/// Which regimes must carry a significant coefficient.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegimeRule {
    #[default]
    Either,
    Both,
}

/// Where the searched variable enters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LagTarget {
    Regression,
    Transition,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct TrackedCoef<T> {
    pub name: String,
    pub value: T,
    pub std_error: Option<T>,
    pub stars: Stars,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Candidate<T> {
    pub reg_lag: Option<usize>,
    pub tp_lag: Option<usize>,
    /// `None` when the fit failed; see `error`.
    pub n_obs: Option<usize>,
    pub loglik: Option<T>,
    pub aic: Option<T>,
    pub coefs: Vec<TrackedCoef<T>>,
    pub error: Option<String>,
}

impl<T: Scalar> Candidate<T> {
    fn lags(&self) -> (usize, usize) {
        (self.reg_lag.unwrap_or(0), self.tp_lag.unwrap_or(0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct LagSearch<T> {
    pub variable: String,
    pub candidates: Vec<Candidate<T>>,
    /// Index into `candidates`.
    pub chosen: Option<usize>,
    pub warnings: Vec<String>,
}

impl<T: Scalar> LagSearch<T> {
    pub fn chosen(&self) -> Option<&Candidate<T>> {
        self.chosen.map(|i| &self.candidates[i])
    }

    /// Long-format candidate table: one row per tracked coefficient.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let opt = |v: Option<T>| v.map(|x| x.to_string()).unwrap_or_default();
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "reg_lag", "tp_lag", "n_obs", "loglik", "aic", "param", "coef", "se", "stars", "chosen", "error",
        ])?;
        for (i, c) in self.candidates.iter().enumerate() {
            let lag = |l: Option<usize>| l.map(|v| v.to_string()).unwrap_or_default();
            let head = [
                lag(c.reg_lag),
                lag(c.tp_lag),
                c.n_obs.map(|n| n.to_string()).unwrap_or_default(),
                opt(c.loglik),
                opt(c.aic),
            ];
            let chosen = (self.chosen == Some(i)).to_string();
            let err = c.error.clone().unwrap_or_default();
            if c.coefs.is_empty() {
                let mut rec = head.to_vec();
                rec.extend([String::new(), String::new(), String::new(), String::new(), chosen.clone(), err.clone()]);
                w.write_record(&rec)?;
            }
            for k in &c.coefs {
                let mut rec = head.to_vec();
                rec.extend([
                    k.name.clone(),
                    k.value.to_string(),
                    opt(k.std_error),
                    k.stars.marker().to_string(),
                    chosen.clone(),
                    err.clone(),
                ]);
                w.write_record(&rec)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

fn tracked<T: Scalar>(f: &FitResult<T>, names: &[String]) -> Vec<TrackedCoef<T>> {
    names
        .iter()
        .filter_map(|n| {
            let value = f.value_of(n)?;
            let std_error = f.std_error_of(n);
            Some(TrackedCoef {
                name: n.clone(),
                value,
                std_error,
                stars: stars(value, std_error),
            })
        })
        .collect()
}

fn tracked_names(spec: &ModelSpec, var: &str, reg_lag: Option<usize>) -> Vec<String> {
    let mut names = Vec::new();
    if let Some(l) = reg_lag {
        names.extend((1..=2).map(|s| format!("{var}_lag{l}_{s}")));
    }
    if spec.is_tvtp() {
        names.extend(["alpha1_1".to_string(), "alpha1_2".to_string()]);
    }
    names
}

fn run_candidate<T: Scalar>(
    ds: Result<Dataset<T>>,
    spec: &ModelSpec,
    var: &str,
    reg_lag: Option<usize>,
    tp_lag: Option<usize>,
    options: &FitOptions,
) -> Candidate<T> {
    let failed = |e: Error| Candidate {
        reg_lag,
        tp_lag,
        n_obs: None,
        loglik: None,
        aic: None,
        coefs: Vec::new(),
        error: Some(e.to_string()),
    };
    let ds = match ds {
        Ok(d) => d,
        Err(e) => return failed(e),
    };
    match fit(&ds, spec, options) {
        Ok(f) => Candidate {
            reg_lag,
            tp_lag,
            n_obs: Some(f.n_obs),
            loglik: Some(f.loglik),
            aic: Some(f.aic),
            coefs: tracked(&f, &tracked_names(spec, var, reg_lag)),
            error: None,
        },
        Err(e) => failed(e),
    }
}

fn candidate_warnings<T: Scalar>(var: &str, cands: &[Candidate<T>]) -> Vec<String> {
    cands
        .iter()
        .filter_map(|c| {
            c.error.as_ref().map(|e| {
                let (r, t) = c.lags();
                format!("{var}: candidate (reg lag {r}, tp lag {t}) skipped: {e}")
            })
        })
        .collect()
}

/// Smallest lag in `1..=max_lag` at which `var`, added to `base` as a
/// regressor, has a coefficient significant at `level` under `rule`. Each
/// candidate is fitted on its own aligned sample.
#[allow(clippy::too_many_arguments)]
pub fn min_significant_lag<T: Scalar>(
    series: &[Series<T>],
    dependent: &str,
    base: &ModelSpec,
    var: &str,
    max_lag: usize,
    level: Level,
    rule: RegimeRule,
    options: &FitOptions,
) -> Result<LagSearch<T>> {
    if max_lag == 0 {
        return Err(Error::InvalidSpec("max_lag must be at least 1".into()));
    }
    let candidates: Vec<Candidate<T>> = (1..=max_lag)
        .into_par_iter()
        .map(|l| {
            let spec = base.with_regressor(var, l);
            let ds = spec.build_dataset(series, dependent);
            run_candidate(ds, &spec, var, Some(l), None, options)
        })
        .collect();
    let chosen = candidates.iter().position(|c| {
        let hits: Vec<bool> = c
            .coefs
            .iter()
            .take(2)
            .map(|k| k.stars.significant_at(level))
            .collect();
        match rule {
            RegimeRule::Either => hits.iter().any(|&h| h),
            RegimeRule::Both => hits.len() == 2 && hits.iter().all(|&h| h),
        }
    });
    Ok(LagSearch {
        variable: var.to_string(),
        warnings: candidate_warnings(var, &candidates),
        candidates,
        chosen,
    })
}

/// Lowest AIC, ties going to the lexicographically smaller (regression,
/// transition) lag pair.
fn argmin_aic<T: Scalar>(cands: &[Candidate<T>]) -> Option<usize> {
    cands
        .iter()
        .enumerate()
        .filter_map(|(i, c)| c.aic.filter(|a| a.is_finite()).map(|a| (i, a)))
        .min_by(|(i, a), (j, b)| {
            a.partial_cmp(b)
                .unwrap()
                .then(cands[*i].lags().cmp(&cands[*j].lags()))
        })
        .map(|(i, _)| i)
}

/// AIC-minimising lag of `var` over `1..=max_lag` (pairs for
/// [`LagTarget::Both`]). Every candidate is fitted on the same quarters:
/// the sample starts where the candidate with the largest lag first has
/// data, so the criteria are comparable.
pub fn aic_lag_search<T: Scalar>(
    series: &[Series<T>],
    dependent: &str,
    base: &ModelSpec,
    var: &str,
    target: LagTarget,
    max_lag: usize,
    options: &FitOptions,
) -> Result<LagSearch<T>> {
    if max_lag == 0 {
        return Err(Error::InvalidSpec("max_lag must be at least 1".into()));
    }
    let lags: Vec<(Option<usize>, Option<usize>)> = match target {
        LagTarget::Regression => (1..=max_lag).map(|l| (Some(l), None)).collect(),
        LagTarget::Transition => (1..=max_lag).map(|l| (None, Some(l))).collect(),
        LagTarget::Both => (1..=max_lag)
            .flat_map(|r| (1..=max_lag).map(move |t| (Some(r), Some(t))))
            .collect(),
    };
    let specs: Vec<ModelSpec> = lags
        .iter()
        .map(|&(r, t)| {
            let s = r.map_or(base.clone(), |l| base.with_regressor(var, l));
            t.map_or(s.clone(), |l| s.with_tp_covariate(var, l))
        })
        .collect();
    let datasets: Vec<Result<Dataset<T>>> = specs.iter().map(|s| s.build_dataset(series, dependent)).collect();
    let common_start = datasets
        .iter()
        .filter_map(|d| d.as_ref().ok())
        .map(|d| d.periods[0])
        .max();
    let datasets: Vec<Result<Dataset<T>>> = datasets
        .into_iter()
        .map(|d| {
            let d = d?;
            let skip = d.periods[0].quarters_until(&common_start.expect("some dataset built")) as usize;
            if skip == 0 {
                Ok(d)
            } else {
                d.trim_front(skip)
            }
        })
        .collect();

    let candidates: Vec<Candidate<T>> = datasets
        .into_par_iter()
        .zip(specs.par_iter())
        .zip(lags.par_iter())
        .map(|((ds, spec), &(r, t))| run_candidate(ds, spec, var, r, t, options))
        .collect();
    let chosen = argmin_aic(&candidates);
    if chosen.is_none() {
        let first = candidates.iter().find_map(|c| c.error.clone()).unwrap_or_default();
        return Err(Error::Estimation(format!(
            "every candidate lag of `{var}` failed (first error: {first})"
        )));
    }
    Ok(LagSearch {
        variable: var.to_string(),
        warnings: candidate_warnings(var, &candidates),
        candidates,
        chosen,
    })
}
