//! Small dense linear algebra for least squares and Hessian inversion.
//!
//! Matrices are row-major `Vec<Vec<T>>`; dimensions here never exceed a few
//! dozen, so Gauss-Jordan elimination with partial pivoting is adequate.

use crate::scalar::Scalar;

/// Inverts a square matrix. Returns `None` when a pivot falls below
/// `1e-12` relative to the largest absolute entry.
pub fn invert<T: Scalar>(a: &[Vec<T>]) -> Option<Vec<Vec<T>>> {
    let n = a.len();
    if n == 0 || a.iter().any(|r| r.len() != n) {
        return None;
    }
    let scale = a
        .iter()
        .flat_map(|r| r.iter())
        .fold(T::zero(), |m, &x| m.max(x.abs()));
    if !scale.is_finite() || scale == T::zero() {
        return None;
    }
    let tiny = scale * T::lit(1e-12).max(T::epsilon() * T::lit(16.0));

    let mut m: Vec<Vec<T>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { T::one() } else { T::zero() }));
            r
        })
        .collect();

    for col in 0..n {
        let piv = (col..n)
            .max_by(|&x, &y| m[x][col].abs().partial_cmp(&m[y][col].abs()).unwrap())
            .unwrap();
        if m[piv][col].abs() <= tiny {
            return None;
        }
        m.swap(col, piv);
        let d = m[col][col];
        for v in m[col].iter_mut() {
            *v = *v / d;
        }
        for r in 0..n {
            if r != col {
                let f = m[r][col];
                if f != T::zero() {
                    for c in 0..2 * n {
                        let sub = f * m[col][c];
                        m[r][c] = m[r][c] - sub;
                    }
                }
            }
        }
    }
    Some(m.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// Ordinary least squares fit.
#[derive(Debug, Clone)]
pub struct Ols<T> {
    pub coef: Vec<T>,
    pub std_errors: Vec<T>,
    pub rss: T,
    pub n: usize,
}

impl<T: Scalar> Ols<T> {
    pub fn t_stat(&self, i: usize) -> T {
        self.coef[i] / self.std_errors[i]
    }

    /// `n ln(RSS / n) + 2k`.
    pub fn aic(&self) -> T {
        let n = T::from_count(self.n);
        n * (self.rss / n).ln() + T::lit(2.0) * T::from_count(self.coef.len())
    }
}

/// Least squares of `y` on the columns of `x` (rows are observations).
/// Returns `None` for a singular design or too few rows.
pub fn ols<T: Scalar>(x: &[Vec<T>], y: &[T]) -> Option<Ols<T>> {
    let n = y.len();
    let k = x.first().map_or(0, |r| r.len());
    if n != x.len() || k == 0 || n <= k {
        return None;
    }
    let mut xtx = vec![vec![T::zero(); k]; k];
    let mut xty = vec![T::zero(); k];
    for (row, &yi) in x.iter().zip(y) {
        for i in 0..k {
            xty[i] = xty[i] + row[i] * yi;
            for j in i..k {
                xtx[i][j] = xtx[i][j] + row[i] * row[j];
            }
        }
    }
    for i in 0..k {
        for j in 0..i {
            xtx[i][j] = xtx[j][i];
        }
    }
    let inv = invert(&xtx)?;
    let coef: Vec<T> = (0..k)
        .map(|i| (0..k).map(|j| inv[i][j] * xty[j]).sum())
        .collect();
    let rss: T = x
        .iter()
        .zip(y)
        .map(|(row, &yi)| {
            let fit: T = row.iter().zip(&coef).map(|(&a, &b)| a * b).sum();
            (yi - fit) * (yi - fit)
        })
        .sum();
    let sigma2 = rss / T::from_count(n - k);
    let std_errors = (0..k).map(|i| (sigma2 * inv[i][i]).max(T::zero()).sqrt()).collect();
    Some(Ols {
        coef,
        std_errors,
        rss,
        n,
    })
}
