use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::spec::{ModelSpec, Params};
use crate::timeseries::Dataset;

use super::hamilton::matrix_at;
use super::{FilterOutput, SmoothOutput};

/// Kim smoother: backward pass over the filter output. The last row equals
/// the last filtered row exactly.
pub fn smooth<T: Scalar>(
    fo: &FilterOutput<T>,
    ds: &Dataset<T>,
    spec: &ModelSpec,
    p: &Params<T>,
) -> Result<SmoothOutput<T>> {
    spec.check_dataset(ds)?;
    let n = fo.filtered.len();
    if n != ds.n_obs() || fo.predicted.len() != n {
        return Err(Error::Domain(
            "filter output does not belong to this dataset".into(),
        ));
    }
    let mut smoothed = fo.filtered.clone();
    for t in (0..n.saturating_sub(1)).rev() {
        let tm = matrix_at(ds, p, t + 1)?;
        let pred = fo.predicted[t + 1];
        if pred.iter().any(|&q| !(q > T::zero())) {
            return Err(Error::ZeroPredicted { t: t + 1 });
        }
        let ratio = [smoothed[t + 1][0] / pred[0], smoothed[t + 1][1] / pred[1]];
        let mut row = [T::zero(); 2];
        for (i, v) in row.iter_mut().enumerate() {
            let back = tm.prob(i, 0) * ratio[0] + tm.prob(i, 1) * ratio[1];
            *v = fo.filtered[t][i] * back;
        }
        // The row sums to one analytically; dividing out the rounding keeps
        // both entries inside [0, 1].
        let sum = row[0] + row[1];
        smoothed[t] = [row[0] / sum, row[1] / sum];
    }
    Ok(SmoothOutput { smoothed })
}
