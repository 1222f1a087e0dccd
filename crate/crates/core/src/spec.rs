//! Model specification, flat parameter layout and transition probabilities.
//!
//! Both regimes share the regressor list with regime-specific coefficients.
//! Regime index 0 is the surge regime and index 1 the steady regime; the
//! likelihood cannot tell them apart, so estimation normalises labels
//! afterwards.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{logistic, Scalar};
use crate::timeseries::{align, Dataset, Series};

/// Box bound on the log residual variance.
pub const LOG_VAR_BOUND: f64 = 10.0;
/// Box bound on every transition coefficient.
pub const ALPHA_BOUND: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TransitionMode {
    #[serde(rename = "FTP")]
    Fixed,
    #[serde(rename = "TVTP")]
    TimeVarying,
}

/// Distribution of the first regime fed to the filter.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialDistribution {
    /// Ergodic distribution of the transition matrix at the first row.
    #[default]
    Ergodic,
    /// Fixed 0.5 / 0.5.
    Uniform,
}

impl InitialDistribution {
    fn is_default(&self) -> bool {
        *self == InitialDistribution::Ergodic
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LaggedVar {
    pub name: String,
    pub lag: usize,
}

impl LaggedVar {
    pub fn new(name: impl Into<String>, lag: usize) -> Self {
        LaggedVar {
            name: name.into(),
            lag,
        }
    }
}

#[derive(Deserialize)]
struct RawModelSpec {
    #[serde(default)]
    regressors: Vec<LaggedVar>,
    transition_mode: TransitionMode,
    #[serde(default)]
    tp_covariate: Option<LaggedVar>,
    #[serde(default)]
    initial: InitialDistribution,
}

impl TryFrom<RawModelSpec> for ModelSpec {
    type Error = Error;

    fn try_from(r: RawModelSpec) -> Result<Self> {
        let mut spec = ModelSpec::new(r.regressors, r.transition_mode, r.tp_covariate)?;
        spec.initial = r.initial;
        Ok(spec)
    }
}

/// Declarative description of one two-regime model.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawModelSpec")]
pub struct ModelSpec {
    regressors: Vec<LaggedVar>,
    transition_mode: TransitionMode,
    #[serde(skip_serializing_if = "Option::is_none")]
    tp_covariate: Option<LaggedVar>,
    #[serde(skip_serializing_if = "InitialDistribution::is_default")]
    initial: InitialDistribution,
}

impl ModelSpec {
    pub fn new(
        regressors: Vec<LaggedVar>,
        transition_mode: TransitionMode,
        tp_covariate: Option<LaggedVar>,
    ) -> Result<Self> {
        match (transition_mode, &tp_covariate) {
            (TransitionMode::Fixed, Some(_)) => {
                return Err(Error::InvalidSpec("covariate requires tvtp".into()))
            }
            (TransitionMode::TimeVarying, None) => {
                return Err(Error::InvalidSpec("tvtp requires a transition covariate".into()))
            }
            _ => {}
        }
        let mut seen = HashSet::new();
        if let Some(dup) = regressors.iter().find(|r| !seen.insert(r.name.as_str())) {
            return Err(Error::InvalidSpec(format!(
                "regressor `{}` listed twice",
                dup.name
            )));
        }
        Ok(ModelSpec {
            regressors,
            transition_mode,
            tp_covariate,
            initial: InitialDistribution::Ergodic,
        })
    }

    /// Fixed transition probabilities with the given regressors.
    pub fn fixed(regressors: Vec<LaggedVar>) -> Result<Self> {
        Self::new(regressors, TransitionMode::Fixed, None)
    }

    pub fn time_varying(regressors: Vec<LaggedVar>, covariate: LaggedVar) -> Result<Self> {
        Self::new(regressors, TransitionMode::TimeVarying, Some(covariate))
    }

    pub fn with_initial(mut self, initial: InitialDistribution) -> Self {
        self.initial = initial;
        self
    }

    /// Same spec with `var` at `lag`, replacing an existing entry of that name.
    pub fn with_regressor(&self, var: &str, lag: usize) -> Self {
        let mut out = self.clone();
        match out.regressors.iter_mut().find(|r| r.name == var) {
            Some(r) => r.lag = lag,
            None => out.regressors.push(LaggedVar::new(var, lag)),
        }
        out
    }

    /// Same spec switched to TVTP with the given covariate.
    pub fn with_tp_covariate(&self, var: &str, lag: usize) -> Self {
        let mut out = self.clone();
        out.transition_mode = TransitionMode::TimeVarying;
        out.tp_covariate = Some(LaggedVar::new(var, lag));
        out
    }

    /// Same regressors with fixed transition probabilities.
    pub fn as_fixed(&self) -> Self {
        let mut out = self.clone();
        out.transition_mode = TransitionMode::Fixed;
        out.tp_covariate = None;
        out
    }

    pub fn regressors(&self) -> &[LaggedVar] {
        &self.regressors
    }

    pub fn transition_mode(&self) -> TransitionMode {
        self.transition_mode
    }

    pub fn tp_covariate(&self) -> Option<&LaggedVar> {
        self.tp_covariate.as_ref()
    }

    pub fn initial(&self) -> InitialDistribution {
        self.initial
    }

    pub fn is_tvtp(&self) -> bool {
        self.transition_mode == TransitionMode::TimeVarying
    }

    pub fn n_regressors(&self) -> usize {
        self.regressors.len()
    }

    /// Largest lag over regressors and the transition covariate.
    pub fn max_lag(&self) -> usize {
        self.regressors
            .iter()
            .chain(self.tp_covariate.iter())
            .map(|v| v.lag)
            .max()
            .unwrap_or(0)
    }

    /// Flat parameter vector length: `2 (2 + K) + (2 or 4)`.
    pub fn n_params(&self) -> usize {
        2 * (2 + self.n_regressors()) + if self.is_tvtp() { 4 } else { 2 }
    }

    /// Human-readable name of each flat-vector entry, in layout order.
    pub fn param_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.n_params());
        for s in 1..=2 {
            names.push(format!("mu{s}"));
            names.extend(
                self.regressors
                    .iter()
                    .map(|r| format!("{}_lag{}_{s}", r.name, r.lag)),
            );
            names.push(format!("log_var{s}"));
        }
        names.push("alpha0_1".into());
        names.push("alpha0_2".into());
        if self.is_tvtp() {
            names.push("alpha1_1".into());
            names.push("alpha1_2".into());
        }
        names
    }

    /// Checks that `ds` carries the columns this spec expects, in order. A
    /// fixed-transition spec ignores any covariate column.
    pub fn check_dataset<T: Scalar>(&self, ds: &Dataset<T>) -> Result<()> {
        if ds.regressors.len() != self.regressors.len()
            || ds
                .regressors
                .iter()
                .zip(&self.regressors)
                .any(|(c, r)| c.name != r.name || c.lag != r.lag)
        {
            return Err(Error::InvalidSpec(
                "dataset regressors do not match the model specification".into(),
            ));
        }
        match (&self.tp_covariate, &ds.tp_covariate) {
            (None, _) => Ok(()),
            (Some(v), Some(c)) if v.name == c.name && v.lag == c.lag => Ok(()),
            (Some(_), None) => Err(Error::MissingCovariate),
            _ => Err(Error::InvalidSpec(
                "dataset transition covariate does not match the model specification".into(),
            )),
        }
    }

    /// Aligns the named series into a dataset for this spec.
    pub fn build_dataset<T: Scalar>(&self, series: &[Series<T>], dependent: &str) -> Result<Dataset<T>> {
        let find = |name: &str| {
            series
                .iter()
                .find(|s| s.name() == name)
                .ok_or_else(|| Error::InvalidSpec(format!("unknown variable `{name}`")))
        };
        let dep = find(dependent)?;
        let regs = self
            .regressors
            .iter()
            .map(|r| Ok((find(&r.name)?, r.lag)))
            .collect::<Result<Vec<_>>>()?;
        let cov = match &self.tp_covariate {
            Some(v) => Some((find(&v.name)?, v.lag)),
            None => None,
        };
        align(dep, &regs, cov)
    }
}

/// Regression parameters of one regime.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct RegimeParams<T> {
    pub mu: T,
    pub betas: Vec<T>,
    /// Log of the residual variance.
    pub log_var: T,
}

impl<T: Scalar> RegimeParams<T> {
    pub fn variance(&self) -> T {
        self.log_var.exp()
    }

    /// Conditional mean for the given regressor values.
    pub fn mean(&self, x: impl Iterator<Item = T>) -> T {
        self.betas.iter().zip(x).fold(self.mu, |acc, (&b, v)| acc + b * v)
    }
}

/// Logistic transition coefficients; `alpha1` is present in TVTP mode only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct TransitionParams<T> {
    pub alpha0: [T; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha1: Option<[T; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Params<T> {
    /// `[surge, steady]`.
    pub regime: [RegimeParams<T>; 2],
    pub transition: TransitionParams<T>,
}

impl<T: Scalar> Params<T> {
    /// Flat layout `[mu1, betas1.., logvar1, mu2, betas2.., logvar2,
    /// alpha0_1, alpha0_2, (alpha1_1, alpha1_2)]`.
    pub fn pack(&self) -> Vec<T> {
        let mut v = Vec::new();
        for r in &self.regime {
            v.push(r.mu);
            v.extend_from_slice(&r.betas);
            v.push(r.log_var);
        }
        v.extend_from_slice(&self.transition.alpha0);
        if let Some(a1) = self.transition.alpha1 {
            v.extend_from_slice(&a1);
        }
        v
    }

    pub fn unpack(v: &[T], spec: &ModelSpec) -> Result<Self> {
        let expected = spec.n_params();
        if v.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                got: v.len(),
            });
        }
        let k = spec.n_regressors();
        let regime = |off: usize| RegimeParams {
            mu: v[off],
            betas: v[off + 1..off + 1 + k].to_vec(),
            log_var: v[off + 1 + k],
        };
        let a = 2 * (k + 2);
        Ok(Params {
            regime: [regime(0), regime(k + 2)],
            transition: TransitionParams {
                alpha0: [v[a], v[a + 1]],
                alpha1: spec.is_tvtp().then(|| [v[a + 2], v[a + 3]]),
            },
        })
    }

    /// The same model with regime labels exchanged.
    pub fn swapped(&self) -> Self {
        let [a, b] = self.regime.clone();
        let tp = &self.transition;
        Params {
            regime: [b, a],
            transition: TransitionParams {
                alpha0: [tp.alpha0[1], tp.alpha0[0]],
                alpha1: tp.alpha1.map(|[x, y]| [y, x]),
            },
        }
    }

    /// Whether every bounded coordinate lies inside its box.
    pub fn within_bounds(&self) -> bool {
        let lv = T::lit(LOG_VAR_BOUND);
        let ab = T::lit(ALPHA_BOUND);
        let tp = &self.transition;
        self.regime.iter().all(|r| r.log_var.abs() <= lv)
            && tp.alpha0.iter().chain(tp.alpha1.iter().flatten()).all(|a| a.abs() <= ab)
    }
}

/// Lower and upper bound of every flat-vector coordinate.
pub fn param_bounds<T: Scalar>(spec: &ModelSpec) -> Vec<(T, T)> {
    let k = spec.n_regressors();
    let free = (T::neg_infinity(), T::infinity());
    let lv = (T::lit(-LOG_VAR_BOUND), T::lit(LOG_VAR_BOUND));
    let ab = (T::lit(-ALPHA_BOUND), T::lit(ALPHA_BOUND));
    let mut b = Vec::with_capacity(spec.n_params());
    for _ in 0..2 {
        b.push(free);
        b.extend(std::iter::repeat_n(free, k));
        b.push(lv);
    }
    b.extend(std::iter::repeat_n(ab, spec.n_params() - b.len()));
    b
}

/// Clips a flat vector into its box.
pub fn clip_to_bounds<T: Scalar>(v: &mut [T], bounds: &[(T, T)]) {
    for (x, &(lo, hi)) in v.iter_mut().zip(bounds) {
        *x = x.max(lo).min(hi);
    }
}

/// Two-state transition matrix; `p12 = 1 - p11` and `p21 = 1 - p22`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct TransitionMatrix<T> {
    pub p11: T,
    pub p22: T,
}

impl<T: Scalar> TransitionMatrix<T> {
    pub fn p12(&self) -> T {
        T::one() - self.p11
    }

    pub fn p21(&self) -> T {
        T::one() - self.p22
    }

    /// `P(s_t = to | s_{t-1} = from)`, zero-based regime indices.
    pub fn prob(&self, from: usize, to: usize) -> T {
        match (from, to) {
            (0, 0) => self.p11,
            (0, _) => self.p12(),
            (_, 0) => self.p21(),
            _ => self.p22,
        }
    }

    /// One prediction step: row vector `probs` times the matrix.
    pub fn propagate(&self, probs: [T; 2]) -> [T; 2] {
        [
            probs[0] * self.p11 + probs[1] * self.p21(),
            probs[0] * self.p12() + probs[1] * self.p22,
        ]
    }
}

fn open_unit<T: Scalar>(p: T) -> T {
    p.max(T::epsilon()).min(T::one() - T::epsilon())
}

/// Logistic transition probabilities at covariate value `z`. Probabilities
/// are kept inside `[eps, 1 - eps]` so the chain never becomes reducible.
pub fn transition_matrix_at<T: Scalar>(
    tp: &TransitionParams<T>,
    z: Option<T>,
) -> Result<TransitionMatrix<T>> {
    let [a1, a2] = tp.alpha0;
    let (x1, x2) = match tp.alpha1 {
        None => (a1, a2),
        Some([b1, b2]) => {
            let z = z.ok_or(Error::MissingCovariate)?;
            (a1 + b1 * z, a2 + b2 * z)
        }
    };
    Ok(TransitionMatrix {
        p11: open_unit(logistic(x1)),
        p22: open_unit(logistic(x2)),
    })
}

/// Ergodic distribution `(pi1, pi2)` with `pi1 = (1 - p22) / (2 - p11 - p22)`.
pub fn steady_state<T: Scalar>(tm: &TransitionMatrix<T>) -> Result<[T; 2]> {
    let denom = T::lit(2.0) - tm.p11 - tm.p22;
    if !(denom > T::zero()) {
        return Err(Error::Domain(
            "transition matrix is the identity; no unique steady state".into(),
        ));
    }
    let pi1 = tm.p21() / denom;
    Ok([pi1, T::one() - pi1])
}

/// Expected sojourn `1 / (1 - p_ii)`.
pub fn expected_duration<T: Scalar>(p_stay: T) -> T {
    T::one() / (T::one() - p_stay)
}
