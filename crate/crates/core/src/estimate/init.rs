use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg;
use crate::scalar::Scalar;
use crate::spec::{clip_to_bounds, param_bounds, ModelSpec, LOG_VAR_BOUND};
use crate::timeseries::Dataset;

/// Standard deviation of the Gaussian jitter applied to restarts.
pub const JITTER_SCALE: f64 = 0.5;
/// Starting value of both `alpha0` coefficients (`p_ii` about 0.88).
pub const ALPHA0_START: f64 = 2.0;

fn mean<T: Scalar>(v: &[T]) -> T {
    v.iter().copied().sum::<T>() / T::from_count(v.len())
}

fn log_var<T: Scalar>(v: &[T]) -> T {
    let m = mean(v);
    let var = v.iter().map(|&x| (x - m) * (x - m)).sum::<T>() / T::from_count(v.len());
    let lv = var.max(T::lit(1e-8)).ln();
    lv.max(T::lit(-LOG_VAR_BOUND)).min(T::lit(LOG_VAR_BOUND))
}

/// Splits the partial residuals into a high and a low group: first at the
/// median, then refined by one-dimensional two-means so a small high
/// regime is not diluted by half the sample. Returns (high, low).
fn split<T: Scalar>(u: &[T]) -> (Vec<T>, Vec<T>) {
    let mut sorted = u.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    let half = n / 2;
    let mut cut = half.max(1).min(n - 1);
    if n < 4 {
        return (sorted[cut..].to_vec(), sorted[..cut].to_vec());
    }
    for _ in 0..50 {
        let lo = &sorted[..cut];
        let hi = &sorted[cut..];
        let mid = (mean(lo) + mean(hi)) * T::lit(0.5);
        let next = sorted.partition_point(|&x| x <= mid).clamp(2, n - 2);
        if next == cut {
            break;
        }
        cut = next;
    }
    (sorted[cut..].to_vec(), sorted[..cut].to_vec())
}

/// Deterministic starting points. The first is data-driven: common slopes
/// from full-sample least squares, regime intercepts and log variances
/// from the high and low groups of the partial residuals (so the surge
/// intercept starts above the steady one), `alpha0 = (2, 2)` and
/// `alpha1 = 0`. The rest add seeded Gaussian noise of scale 0.5 to every
/// coordinate and are clipped to the parameter box.
pub fn initial_points<T: Scalar>(ds: &Dataset<T>, spec: &ModelSpec, seed: u64, count: usize) -> Vec<Vec<T>> {
    let n = ds.n_obs();
    let k = spec.n_regressors();
    let x: Vec<Vec<T>> = (0..n)
        .map(|t| std::iter::once(T::one()).chain(ds.row(t)).collect())
        .collect();
    let slopes: Vec<T> = match linalg::ols(&x, &ds.dep) {
        Some(fit) if k > 0 => fit.coef[1..].to_vec(),
        _ => vec![T::zero(); k],
    };
    let u: Vec<T> = (0..n)
        .map(|t| ds.dep[t] - ds.row(t).zip(&slopes).map(|(v, &b)| v * b).sum::<T>())
        .collect();
    let (high, low) = if n >= 2 { split(&u) } else { (u.clone(), u.clone()) };

    let mut base = Vec::with_capacity(spec.n_params());
    for group in [&high, &low] {
        base.push(mean(group));
        base.extend_from_slice(&slopes);
        base.push(log_var(group));
    }
    base.push(T::lit(ALPHA0_START));
    base.push(T::lit(ALPHA0_START));
    if spec.is_tvtp() {
        base.push(T::zero());
        base.push(T::zero());
    }

    let bounds = param_bounds::<T>(spec);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = T::lit(JITTER_SCALE);
    let mut points = Vec::with_capacity(count.max(1));
    points.push(base.clone());
    for _ in 1..count {
        let mut p: Vec<T> = base
            .iter()
            .map(|&v| {
                let e: f64 = StandardNormal.sample(&mut rng);
                v + scale * T::lit(e)
            })
            .collect();
        clip_to_bounds(&mut p, &bounds);
        points.push(p);
    }
    points
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timeseries::Period;

    fn ds(dep: Vec<f64>) -> Dataset<f64> {
        let start: Period = "2000Q1".parse().unwrap();
        let n = dep.len();
        Dataset::from_columns("y", dep, vec![], None, (0..n).map(|i| start.offset(i as i64)).collect()).unwrap()
    }

    #[test]
    fn reproducible_and_ordered() {
        let d = ds((0..50).map(|i| ((i * 7) % 11) as f64).collect());
        let spec = ModelSpec::fixed(vec![]).unwrap();
        let a = initial_points(&d, &spec, 9, 5);
        assert_eq!(a, initial_points(&d, &spec, 9, 5));
        assert_ne!(a, initial_points(&d, &spec, 10, 5));
        assert_eq!(a.len(), 5);
        assert!(a[0][0] >= a[0][2]);
        assert_eq!(&a[0][4..], &[2.0, 2.0]);
    }

    #[test]
    fn small_high_group_is_found() {
        let mut dep = vec![1.0; 80];
        for i in (0..80).step_by(5) {
            dep[i] = 6.0;
        }
        for (i, v) in dep.iter_mut().enumerate() {
            *v += 0.01 * (i % 3) as f64;
        }
        let p = &initial_points(&ds(dep), &ModelSpec::fixed(vec![]).unwrap(), 0, 1)[0];
        assert!((p[0] - 6.0).abs() < 0.1 && (p[2] - 1.0).abs() < 0.1, "{p:?}");
    }

    #[test]
    fn constant_data_stays_in_bounds() {
        let p = &initial_points(&ds(vec![2.0; 30]), &ModelSpec::fixed(vec![]).unwrap(), 0, 1)[0];
        assert_eq!(p[0], 2.0);
        assert!(p[1] >= -LOG_VAR_BOUND);
    }
}
