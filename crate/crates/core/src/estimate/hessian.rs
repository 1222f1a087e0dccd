use crate::filter::loglik_value;
use crate::linalg;
use crate::scalar::Scalar;
use crate::spec::{ModelSpec, Params};
use crate::timeseries::Dataset;

/// Hessian step for coordinate value `x`: `max(1e-4, 1e-4 |x|)`.
pub fn hessian_step<T: Scalar>(x: T) -> T {
    T::lit(1e-4) * x.abs().max(T::one())
}

/// Central-difference Hessian of `f` over the coordinates in `free`, built
/// as the Jacobian of the central-difference gradient. Row `a` differences
/// the gradient along `free[a]`, so the result is symmetric only up to
/// truncation and rounding.
pub fn numerical_hessian<T: Scalar, F: Fn(&[T]) -> T>(f: &F, x: &[T], free: &[usize]) -> Vec<Vec<T>> {
    let m = free.len();
    let mut probe = x.to_vec();
    let grad_at = |probe: &mut Vec<T>| -> Vec<T> {
        free.iter()
            .map(|&j| {
                let h = hessian_step(x[j]);
                let base = probe[j];
                probe[j] = base + h;
                let up = f(probe);
                probe[j] = base - h;
                let down = f(probe);
                probe[j] = base;
                (up - down) / (h + h)
            })
            .collect()
    };
    let mut h = vec![vec![T::zero(); m]; m];
    for (a, &i) in free.iter().enumerate() {
        let step = hessian_step(x[i]);
        probe[i] = x[i] + step;
        let gu = grad_at(&mut probe);
        probe[i] = x[i] - step;
        let gd = grad_at(&mut probe);
        probe[i] = x[i];
        for b in 0..m {
            h[a][b] = (gu[b] - gd[b]) / (step + step);
        }
    }
    h
}

/// Largest `|H_ij - H_ji| / (1 + |H_ij|)`.
pub fn max_asymmetry<T: Scalar>(h: &[Vec<T>]) -> T {
    let mut worst = T::zero();
    for i in 0..h.len() {
        for j in 0..i {
            worst = worst.max((h[i][j] - h[j][i]).abs() / (T::one() + h[i][j].abs()));
        }
    }
    worst
}

/// Negative log-likelihood as a function of the flat vector; `+inf` where
/// the filter fails.
pub fn negative_loglik<'a, T: Scalar>(
    ds: &'a Dataset<T>,
    spec: &'a ModelSpec,
) -> impl Fn(&[T]) -> T + 'a {
    move |v: &[T]| match Params::unpack(v, spec).and_then(|p| loglik_value(ds, spec, &p)) {
        Ok(ll) if ll.is_finite() => -ll,
        _ => T::infinity(),
    }
}

/// Standard errors from the inverse of the numerical Hessian of the
/// negative log-likelihood at `p_hat`, in flat-vector order. Coordinates in
/// `fixed` and coordinates whose inverse diagonal is non-positive are
/// `None`; a singular or non-finite Hessian leaves every entry `None`.
pub fn standard_errors<T: Scalar>(
    ds: &Dataset<T>,
    spec: &ModelSpec,
    p_hat: &[T],
    fixed: &[usize],
) -> Vec<Option<T>> {
    let free: Vec<usize> = (0..p_hat.len()).filter(|i| !fixed.contains(i)).collect();
    let mut out = vec![None; p_hat.len()];
    if free.is_empty() {
        return out;
    }
    let f = negative_loglik(ds, spec);
    let h = numerical_hessian(&f, p_hat, &free);
    if h.iter().flatten().any(|v| !v.is_finite()) {
        return out;
    }
    let m = free.len();
    let half = T::lit(0.5);
    let sym: Vec<Vec<T>> = (0..m)
        .map(|i| (0..m).map(|j| half * (h[i][j] + h[j][i])).collect())
        .collect();
    let Some(inv) = linalg::invert(&sym) else {
        return out;
    };
    for (a, &i) in free.iter().enumerate() {
        let v = inv[a][a];
        if v > T::zero() && v.is_finite() {
            out[i] = Some(v.sqrt());
        }
    }
    out
}
