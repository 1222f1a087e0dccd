//! Hamilton filter, Kim smoother, regime classification and an exhaustive
//! path-enumeration reference for small samples.

mod enumeration;
mod hamilton;
mod regimes;
mod smoother;

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

pub use enumeration::{enumerate_paths, PathPosterior};
pub use hamilton::{loglik_value, loglikelihood, DENSITY_EXPONENT_CAP};
pub use regimes::{classify, durations, empirical_durations, write_probabilities_csv, Classification, Durations, Episode, Regime};
pub use smoother::smooth;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct FilterOutput<T> {
    pub loglik: T,
    /// `P(s_t = j | data up to t - 1)`.
    pub predicted: Vec<[T; 2]>,
    /// `P(s_t = j | data up to t)`.
    pub filtered: Vec<[T; 2]>,
    pub per_obs_loglik: Vec<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SmoothOutput<T> {
    /// `P(s_t = j | all data)`.
    pub smoothed: Vec<[T; 2]>,
}

impl<T: Scalar> SmoothOutput<T> {
    pub fn surge_probs(&self) -> impl Iterator<Item = T> + '_ {
        self.smoothed.iter().map(|r| r[0])
    }

    /// Expected number of observations spent in each regime.
    pub fn expected_counts(&self) -> [T; 2] {
        self.smoothed
            .iter()
            .fold([T::zero(), T::zero()], |acc, r| [acc[0] + r[0], acc[1] + r[1]])
    }
}
