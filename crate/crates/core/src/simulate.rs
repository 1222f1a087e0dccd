//! Sampling from the two-regime model, and Monte Carlo parameter recovery.
//!
//! Input streams are i.i.d. Gaussian and shared by name, so a variable used
//! both as a regressor and as the transition covariate is one stream read at
//! two lags. The chain starts at the first aligned row from the initial
//! distribution the filter would use.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{fit, FitOptions};
use crate::filter::Regime;
use crate::scalar::{logistic, Scalar};
use crate::spec::{steady_state, transition_matrix_at, InitialDistribution, ModelSpec, Params};
use crate::timeseries::{Column, Dataset, Period, Series};

fn default_dependent() -> String {
    "pd".into()
}

fn default_start() -> Period {
    Period::new(2000, 1).expect("valid quarter")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
}

impl Generator {
    pub fn gaussian(name: impl Into<String>, mean: f64, sd: f64) -> Self {
        Generator {
            name: name.into(),
            mean,
            sd,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct DGPConfig<T> {
    pub spec: ModelSpec,
    pub params: Params<T>,
    /// Number of aligned observations.
    pub t: usize,
    #[serde(default)]
    pub generators: Vec<Generator>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_dependent")]
    pub dependent: String,
    /// Period of the first raw (pre-lag) row.
    #[serde(default = "default_start")]
    pub start: Period,
}

impl<T: Scalar> DGPConfig<T> {
    pub fn new(spec: ModelSpec, params: Params<T>, t: usize, generators: Vec<Generator>, seed: u64) -> Self {
        DGPConfig {
            spec,
            params,
            t,
            generators,
            seed,
            dependent: default_dependent(),
            start: default_start(),
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        DGPConfig {
            seed,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.t == 0 {
            return Err(Error::InvalidSpec("T must be at least 1".into()));
        }
        let v = self.params.pack();
        if v.len() != self.spec.n_params() {
            return Err(Error::LengthMismatch {
                expected: self.spec.n_params(),
                got: v.len(),
            });
        }
        Params::unpack(&v, &self.spec)?;
        if !self.params.within_bounds() {
            return Err(Error::Domain("parameters outside the box bounds".into()));
        }
        let needed = self
            .spec
            .regressors()
            .iter()
            .chain(self.spec.tp_covariate())
            .map(|v| v.name.as_str());
        for name in needed {
            match self.generators.iter().find(|g| g.name == name) {
                None => return Err(Error::InvalidSpec(format!("no generator for `{name}`"))),
                Some(g) if !(g.sd >= 0.0) || !g.mean.is_finite() || !g.sd.is_finite() => {
                    return Err(Error::Domain(format!("generator `{name}` needs finite mean and sd >= 0")))
                }
                _ => {}
            }
        }
        if self.generators.iter().any(|g| g.name == self.dependent) {
            return Err(Error::InvalidSpec(format!(
                "generator name `{}` clashes with the dependent variable",
                self.dependent
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Simulation<T> {
    pub dataset: Dataset<T>,
    /// True regime of each aligned row.
    pub states: Vec<Regime>,
    /// Raw series over `T + max_lag` quarters, dependent first.
    pub series: Vec<Series<T>>,
}

impl<T: Scalar> Simulation<T> {
    /// Writes `period,state` with state 1 for surge and 2 for steady.
    pub fn write_states_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["period", "state"])?;
        for (p, s) in self.dataset.periods.iter().zip(&self.states) {
            let idx = match s {
                Regime::Surge => "1",
                Regime::Steady => "2",
            };
            w.write_record([p.to_string().as_str(), idx])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn normal<T: Scalar>(rng: &mut ChaCha8Rng) -> T {
    T::lit(rng.sample::<f64, _>(StandardNormal))
}

fn draw<T: Scalar>(rng: &mut ChaCha8Rng, probs: [T; 2]) -> usize {
    let u: f64 = rng.random();
    usize::from(T::lit(u) >= probs[0])
}

/// Draws one sample path. Rows before the first aligned quarter exist only
/// to feed lags; their dependent values are steady-regime draws without
/// regressor contributions.
pub fn simulate<T: Scalar>(cfg: &DGPConfig<T>) -> Result<Simulation<T>> {
    cfg.validate()?;
    let spec = &cfg.spec;
    let p = &cfg.params;
    let burn = spec.max_lag();
    let len = cfg.t + burn;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut streams: Vec<(String, Vec<T>)> = Vec::new();
    for g in &cfg.generators {
        let values = (0..len)
            .map(|_| T::lit(g.mean) + T::lit(g.sd) * normal::<T>(&mut rng))
            .collect();
        streams.push((g.name.clone(), values));
    }
    let stream = |name: &str| &streams.iter().find(|(n, _)| n == name).expect("validated").1;
    let regs: Vec<(&Vec<T>, usize)> = spec.regressors().iter().map(|r| (stream(&r.name), r.lag)).collect();
    let cov = spec.tp_covariate().map(|v| (stream(&v.name), v.lag));

    let mut dep = Vec::with_capacity(len);
    let steady = &p.regime[1];
    for _ in 0..burn {
        dep.push(steady.mu + steady.variance().sqrt() * normal::<T>(&mut rng));
    }
    let mut states = Vec::with_capacity(cfg.t);
    let mut prev = 0;
    for t in 0..cfg.t {
        let row = t + burn;
        let z = cov.map(|(v, l)| v[row - l]);
        let tm = transition_matrix_at(&p.transition, z)?;
        let probs = if t == 0 {
            match spec.initial() {
                InitialDistribution::Ergodic => steady_state(&tm)?,
                InitialDistribution::Uniform => [T::lit(0.5), T::lit(0.5)],
            }
        } else {
            let stay = if prev == 0 { tm.p11 } else { tm.p22 };
            if prev == 0 {
                [stay, T::one() - stay]
            } else {
                [T::one() - stay, stay]
            }
        };
        let s = draw(&mut rng, probs);
        let r = &p.regime[s];
        let mean = r.mean(regs.iter().map(|(v, l)| v[row - l]));
        dep.push(mean + r.variance().sqrt() * normal::<T>(&mut rng));
        states.push(if s == 0 { Regime::Surge } else { Regime::Steady });
        prev = s;
    }

    let mut series = vec![Series::new(cfg.dependent.clone(), cfg.start, dep)?];
    for (name, values) in streams {
        series.push(Series::new(name, cfg.start, values)?);
    }
    let dep_series = &series[0];
    let find = |name: &str| series.iter().find(|s| s.name() == name).expect("generated");
    let reg_series: Vec<(&Series<T>, usize)> = spec.regressors().iter().map(|r| (find(&r.name), r.lag)).collect();
    let cov_series = spec.tp_covariate().map(|v| (find(&v.name), v.lag));
    let dataset = align_exact(dep_series, &reg_series, cov_series, burn)?;
    Ok(Simulation {
        dataset,
        states,
        series,
    })
}

/// Builds the aligned dataset straight from the raw streams; the
/// minimum-length guard applied to real data does not apply here.
fn align_exact<T: Scalar>(
    dep: &Series<T>,
    regs: &[(&Series<T>, usize)],
    cov: Option<(&Series<T>, usize)>,
    burn: usize,
) -> Result<Dataset<T>> {
    let column = |s: &Series<T>, lag: usize| Column {
        name: s.name().to_string(),
        lag,
        values: (burn..dep.len()).map(|i| s.values()[i - lag]).collect(),
    };
    Dataset::from_columns(
        dep.name(),
        dep.values()[burn..].to_vec(),
        regs.iter().map(|&(s, l)| column(s, l)).collect(),
        cov.map(|(s, l)| column(s, l)),
        (burn..dep.len()).map(|i| dep.period(i)).collect(),
    )
}

/// Summary of one parameter across replications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSummary {
    pub name: String,
    pub truth: f64,
    pub mean: f64,
    pub bias: f64,
    pub median_abs_bias: f64,
    pub rmse: f64,
    /// Share of successful replications whose `estimate ± 1.96 se` covers
    /// the truth; a missing standard error counts as a miss.
    pub coverage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRow {
    pub index: usize,
    pub seed: u64,
    pub estimates: Vec<f64>,
    pub std_errors: Vec<Option<f64>>,
    pub loglik: Option<f64>,
    pub converged: bool,
    pub accuracy: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub param_names: Vec<String>,
    pub truth: Vec<f64>,
    pub replications: Vec<ReplicationRow>,
    /// Flat parameters, then `p11` and `p22` mapped through the logistic.
    pub summaries: Vec<ParamSummary>,
    pub median_accuracy: Option<f64>,
    pub failures: usize,
}

impl RecoveryReport {
    pub fn summary(&self, name: &str) -> Option<&ParamSummary> {
        self.summaries.iter().find(|s| s.name == name)
    }

    pub fn write_summary_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["param", "truth", "mean", "bias", "median_abs_bias", "rmse", "coverage"])?;
        for s in &self.summaries {
            w.write_record([
                s.name.clone(),
                s.truth.to_string(),
                s.mean.to_string(),
                s.bias.to_string(),
                s.median_abs_bias.to_string(),
                s.rmse.to_string(),
                s.coverage.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// One row per replication: seed, status, accuracy, then estimate and
    /// standard error of every flat parameter.
    pub fn write_replications_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = ["replication", "seed", "converged", "loglik", "accuracy", "error"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        for n in &self.param_names {
            header.push(n.clone());
            header.push(format!("se_{n}"));
        }
        w.write_record(&header)?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.replications {
            let mut rec = vec![
                r.index.to_string(),
                r.seed.to_string(),
                r.converged.to_string(),
                opt(r.loglik),
                opt(r.accuracy),
                r.error.clone().unwrap_or_default(),
            ];
            for i in 0..self.param_names.len() {
                rec.push(r.estimates.get(i).map(|v| v.to_string()).unwrap_or_default());
                rec.push(opt(r.std_errors.get(i).copied().flatten()));
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

fn summarize_param(name: String, truth: f64, est: &[f64], se: &[Option<f64>]) -> ParamSummary {
    let n = est.len().max(1) as f64;
    let mean = est.iter().sum::<f64>() / n;
    let rmse = (est.iter().map(|e| (e - truth).powi(2)).sum::<f64>() / n).sqrt();
    let covered = est
        .iter()
        .zip(se)
        .filter(|(e, s)| s.is_some_and(|s| (*e - truth).abs() <= 1.96 * s))
        .count();
    ParamSummary {
        name,
        truth,
        mean,
        bias: mean - truth,
        median_abs_bias: median(est.iter().map(|e| (e - truth).abs()).collect()).unwrap_or(f64::NAN),
        rmse,
        coverage: covered as f64 / n,
    }
}

/// Simulates `reps` datasets (seed `cfg.seed + i` for replication `i`),
/// fits each with the DGP's own spec and summarises recovery. A failed
/// replication is recorded in its row and excluded from the summaries.
pub fn recover<T: Scalar>(cfg: &DGPConfig<T>, reps: usize, options: &FitOptions) -> Result<RecoveryReport> {
    if reps == 0 {
        return Err(Error::InvalidSpec("at least one replication is required".into()));
    }
    cfg.validate()?;
    let truth: Vec<f64> = cfg.params.pack().iter().map(|v| v.to_f64_lossy()).collect();
    let replications: Vec<ReplicationRow> = (0..reps)
        .into_par_iter()
        .map(|i| {
            let seed = cfg.seed.wrapping_add(i as u64);
            let outcome = simulate(&cfg.with_seed(seed)).and_then(|sim| {
                let f = fit(&sim.dataset, &cfg.spec, options)?;
                let labels = f.classification.regimes();
                let hits = labels.zip(&sim.states).filter(|(a, b)| a == *b).count();
                Ok((f, hits as f64 / sim.states.len() as f64))
            });
            match outcome {
                Ok((f, acc)) => ReplicationRow {
                    index: i,
                    seed,
                    estimates: f.params.pack().iter().map(|v| v.to_f64_lossy()).collect(),
                    std_errors: f.std_errors.iter().map(|s| s.map(|v| v.to_f64_lossy())).collect(),
                    loglik: Some(f.loglik.to_f64_lossy()),
                    converged: f.converged(),
                    accuracy: Some(acc),
                    error: None,
                },
                Err(e) => ReplicationRow {
                    index: i,
                    seed,
                    estimates: Vec::new(),
                    std_errors: Vec::new(),
                    loglik: None,
                    converged: false,
                    accuracy: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();

    let ok: Vec<&ReplicationRow> = replications.iter().filter(|r| r.error.is_none()).collect();
    let names = cfg.spec.param_names();
    let mut summaries: Vec<ParamSummary> = names
        .iter()
        .enumerate()
        .map(|(j, n)| {
            let est: Vec<f64> = ok.iter().map(|r| r.estimates[j]).collect();
            let se: Vec<Option<f64>> = ok.iter().map(|r| r.std_errors[j]).collect();
            summarize_param(n.clone(), truth[j], &est, &se)
        })
        .collect();
    let a = 2 * (cfg.spec.n_regressors() + 2);
    for (k, label) in ["p11", "p22"].iter().enumerate() {
        let map = |x: f64| logistic(x);
        let est: Vec<f64> = ok.iter().map(|r| map(r.estimates[a + k])).collect();
        // Delta method: dp/da = p (1 - p).
        let se: Vec<Option<f64>> = ok
            .iter()
            .map(|r| {
                let p = map(r.estimates[a + k]);
                r.std_errors[a + k].map(|s| s * p * (1.0 - p))
            })
            .collect();
        summaries.push(summarize_param(label.to_string(), map(truth[a + k]), &est, &se));
    }
    Ok(RecoveryReport {
        param_names: names,
        truth,
        median_accuracy: median(ok.iter().filter_map(|r| r.accuracy).collect()),
        failures: replications.len() - ok.len(),
        replications,
        summaries,
    })
}
