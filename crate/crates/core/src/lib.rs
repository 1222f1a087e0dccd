//! Two-regime Markov-switching Gaussian regressions for quarterly data.
//!
//! The dependent variable follows `y_t = mu^s + x_t' beta^s + e_t` with
//! `e_t ~ N(0, sigma^2_s)` and a latent regime `s_t` in {surge, steady}
//! driven by a first-order Markov chain. Regime persistence is either
//! constant (`FTP`) or a logistic function of a lagged covariate (`TVTP`).
//!
//! The numerical core is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix it to `f64`, with `*32` variants for `f32`.

pub mod error;
pub mod estimate;
pub mod filter;
pub mod linalg;
pub mod scalar;
pub mod select;
pub mod simulate;
pub mod spec;
pub mod timeseries;

pub use error::{Error, Result};
pub use scalar::Scalar;
pub use spec::{InitialDistribution, LaggedVar, ModelSpec, TransitionMode};
pub use timeseries::Period;

pub type Series = timeseries::Series<f64>;
pub type Series32 = timeseries::Series<f32>;
pub type Dataset = timeseries::Dataset<f64>;
pub type Dataset32 = timeseries::Dataset<f32>;
pub type Params = spec::Params<f64>;
pub type Params32 = spec::Params<f32>;
pub type FitResult = estimate::FitResult<f64>;
pub type FitResult32 = estimate::FitResult<f32>;
pub type DGPConfig = simulate::DGPConfig<f64>;
