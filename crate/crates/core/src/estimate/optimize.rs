//! Box-constrained quasi-Newton minimisation with central-difference
//! gradients.
//!
//! Steps follow the BFGS direction along the projected path
//! `clip(x + a d)` with Armijo backtracking. Coordinates pinned at a bound
//! with the gradient pushing outward are excluded from the convergence test.

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convergence {
    Converged,
    MaxIter,
    Failed,
}

#[derive(Debug, Clone)]
pub struct Minimum<T> {
    pub x: Vec<T>,
    pub value: T,
    /// Largest projected gradient component at `x`.
    pub grad_max: T,
    pub iterations: usize,
    pub status: Convergence,
}

#[derive(Debug, Clone, Copy)]
pub struct MinimizeOptions {
    /// Relative projected-gradient tolerance: stop when
    /// `max |g_i| <= tol (1 + |f|)`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        MinimizeOptions {
            tol: 1e-6,
            max_iter: 500,
        }
    }
}

fn step_size<T: Scalar>(x: T) -> T {
    T::lit(1e-5) * x.abs().max(T::one())
}

/// Central-difference gradient; falls back to a one-sided difference next
/// to a bound or where the objective is infinite.
pub fn numerical_gradient<T: Scalar, F: Fn(&[T]) -> T>(
    f: &F,
    x: &[T],
    fx: T,
    bounds: &[(T, T)],
) -> Vec<T> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let h = step_size(x[i]);
            let (lo, hi) = bounds[i];
            let up_ok = x[i] + h <= hi;
            let down_ok = x[i] - h >= lo;
            probe[i] = x[i] + h;
            let fu = if up_ok { f(&probe) } else { T::infinity() };
            probe[i] = x[i] - h;
            let fd = if down_ok { f(&probe) } else { T::infinity() };
            probe[i] = x[i];
            match (fu.is_finite(), fd.is_finite()) {
                (true, true) => (fu - fd) / (h + h),
                (true, false) => (fu - fx) / h,
                (false, true) => (fx - fd) / h,
                (false, false) => T::zero(),
            }
        })
        .collect()
}

fn projected_max<T: Scalar>(x: &[T], g: &[T], bounds: &[(T, T)]) -> T {
    x.iter()
        .zip(g)
        .zip(bounds)
        .map(|((&xi, &gi), &(lo, hi))| {
            if (xi <= lo && gi > T::zero()) || (xi >= hi && gi < T::zero()) {
                T::zero()
            } else {
                gi.abs()
            }
        })
        .fold(T::zero(), T::max)
}

fn project<T: Scalar>(x: &mut [T], bounds: &[(T, T)]) {
    for (v, &(lo, hi)) in x.iter_mut().zip(bounds) {
        *v = v.max(lo).min(hi);
    }
}

fn identity<T: Scalar>(n: usize) -> Vec<Vec<T>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { T::one() } else { T::zero() }).collect())
        .collect()
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// Minimises `f` inside `bounds` from `x0`. `f` should return `+inf` where
/// it is undefined.
pub fn minimize<T: Scalar, F: Fn(&[T]) -> T>(
    f: F,
    x0: &[T],
    bounds: &[(T, T)],
    opts: &MinimizeOptions,
) -> Minimum<T> {
    let n = x0.len();
    let tol = T::lit(opts.tol);
    let loose = T::lit(opts.tol.sqrt());
    let mut x = x0.to_vec();
    project(&mut x, bounds);
    let mut fx = f(&x);
    if !fx.is_finite() || n == 0 {
        return Minimum {
            x,
            value: fx,
            grad_max: T::zero(),
            iterations: 0,
            status: if fx.is_finite() {
                Convergence::Converged
            } else {
                Convergence::Failed
            },
        };
    }
    let mut g = numerical_gradient(&f, &x, fx, bounds);
    let mut h_inv = identity::<T>(n);
    let mut fresh = true;
    let c1 = T::lit(1e-4);

    for iter in 0..opts.max_iter {
        let pg = projected_max(&x, &g, bounds);
        if pg <= tol * (T::one() + fx.abs()) {
            return Minimum {
                x,
                value: fx,
                grad_max: pg,
                iterations: iter,
                status: Convergence::Converged,
            };
        }

        let mut d: Vec<T> = (0..n).map(|i| -dot(&h_inv[i], &g)).collect();
        for i in 0..n {
            let (lo, hi) = bounds[i];
            if (x[i] <= lo && d[i] < T::zero()) || (x[i] >= hi && d[i] > T::zero()) {
                d[i] = T::zero();
            }
        }
        if !(dot(&d, &g) < T::zero()) {
            d = g.iter().map(|&v| -v).collect();
            h_inv = identity(n);
            fresh = true;
        }
        // Keep the first trial step from leaping across the parameter space.
        let dmax = d.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        let mut a = if dmax > T::lit(5.0) { T::lit(5.0) / dmax } else { T::one() };

        let mut accepted = None;
        for _ in 0..50 {
            let mut trial: Vec<T> = x.iter().zip(&d).map(|(&xi, &di)| xi + a * di).collect();
            project(&mut trial, bounds);
            let ft = f(&trial);
            let moved: Vec<T> = trial.iter().zip(&x).map(|(&t, &xi)| t - xi).collect();
            if ft.is_finite() && ft <= fx + c1 * dot(&g, &moved) {
                accepted = Some((trial, ft, moved));
                break;
            }
            a = a * T::lit(0.5);
        }

        let Some((x_new, f_new, s)) = accepted else {
            if !fresh {
                h_inv = identity(n);
                fresh = true;
                continue;
            }
            let status = if pg <= loose * (T::one() + fx.abs()) {
                Convergence::Converged
            } else {
                Convergence::Failed
            };
            return Minimum {
                x,
                value: fx,
                grad_max: pg,
                iterations: iter,
                status,
            };
        };

        let g_new = numerical_gradient(&f, &x_new, f_new, bounds);
        let y: Vec<T> = g_new.iter().zip(&g).map(|(&a, &b)| a - b).collect();
        let sy = dot(&s, &y);
        let tiny = T::lit(1e-12) * dot(&s, &s).sqrt() * dot(&y, &y).sqrt();
        if sy > tiny {
            if fresh {
                // Scale the initial inverse Hessian to the observed curvature.
                let scale = sy / dot(&y, &y);
                for (i, row) in h_inv.iter_mut().enumerate() {
                    for (j, v) in row.iter_mut().enumerate() {
                        *v = if i == j { scale } else { T::zero() };
                    }
                }
            }
            let rho = T::one() / sy;
            let hy: Vec<T> = (0..n).map(|i| dot(&h_inv[i], &y)).collect();
            let yhy = dot(&y, &hy);
            for i in 0..n {
                for j in 0..n {
                    h_inv[i][j] = h_inv[i][j] - rho * (hy[i] * s[j] + s[i] * hy[j])
                        + (rho * rho * yhy + rho) * s[i] * s[j];
                }
            }
            fresh = false;
        }
        let small_change = (fx - f_new).abs() <= T::lit(1e-15) * (T::one() + fx.abs());
        x = x_new;
        fx = f_new;
        g = g_new;
        if small_change {
            let pg = projected_max(&x, &g, bounds);
            if pg <= loose * (T::one() + fx.abs()) {
                return Minimum {
                    x,
                    value: fx,
                    grad_max: pg,
                    iterations: iter + 1,
                    status: Convergence::Converged,
                };
            }
        }
    }
    let pg = projected_max(&x, &g, bounds);
    Minimum {
        x,
        value: fx,
        grad_max: pg,
        iterations: opts.max_iter,
        status: if pg <= tol * (T::one() + fx.abs()) {
            Convergence::Converged
        } else {
            Convergence::MaxIter
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn free(n: usize) -> Vec<(f64, f64)> {
        vec![(f64::NEG_INFINITY, f64::INFINITY); n]
    }

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let m = minimize(f, &[-1.2, 1.0], &free(2), &MinimizeOptions::default());
        assert_eq!(m.status, Convergence::Converged);
        assert!((m.x[0] - 1.0).abs() < 1e-4 && (m.x[1] - 1.0).abs() < 1e-4, "{:?}", m.x);
    }

    #[test]
    fn respects_box() {
        let f = |x: &[f64]| (x[0] - 3.0).powi(2) + (x[1] + 1.0).powi(2);
        let m = minimize(f, &[0.0, 0.0], &[(-1.0, 1.0), (-5.0, 5.0)], &MinimizeOptions::default());
        assert_eq!(m.status, Convergence::Converged);
        assert_eq!(m.x[0], 1.0);
        assert!((m.x[1] + 1.0).abs() < 1e-5);
    }

    #[test]
    fn infinite_regions_are_avoided() {
        let f = |x: &[f64]| if x[0] <= 0.0 { f64::INFINITY } else { x[0] - x[0].ln() };
        let m = minimize(f, &[4.0], &free(1), &MinimizeOptions::default());
        assert!((m.x[0] - 1.0).abs() < 1e-4);
    }

    #[test]
    fn infinite_start_fails() {
        let m = minimize(|_: &[f64]| f64::INFINITY, &[0.0], &free(1), &MinimizeOptions::default());
        assert_eq!(m.status, Convergence::Failed);
    }
}
