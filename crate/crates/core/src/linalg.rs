use num_complex::Complex64;

use crate::error::{Error, Result};

/// Solves `A·X = B` in place by Gaussian elimination with partial pivoting.
///
/// `a` is `n x n` row-major, `b` is `n x cols` row-major and receives `X`.
pub(crate) fn solve_in_place(a: &mut [Complex64], b: &mut [Complex64], n: usize, cols: usize) -> Result<()> {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n * cols);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i * n + col].norm().total_cmp(&a[j * n + col].norm()))
            .expect("nonempty range");
        let pv = a[pivot * n + col];
        if pv.norm() == 0.0 || !pv.is_finite() {
            return Err(Error::Numerical(format!("singular system at column {col}")));
        }
        if pivot != col {
            for j in 0..n {
                a.swap(pivot * n + j, col * n + j);
            }
            for j in 0..cols {
                b.swap(pivot * cols + j, col * cols + j);
            }
        }
        let inv = pv.inv();
        for row in col + 1..n {
            let f = a[row * n + col] * inv;
            if f == Complex64::new(0.0, 0.0) {
                continue;
            }
            for j in col..n {
                let v = a[col * n + j];
                a[row * n + j] -= f * v;
            }
            for j in 0..cols {
                let v = b[col * cols + j];
                b[row * cols + j] -= f * v;
            }
        }
    }
    for col in (0..n).rev() {
        let inv = a[col * n + col].inv();
        for j in 0..cols {
            let mut acc = b[col * cols + j];
            for k in col + 1..n {
                acc -= a[col * n + k] * b[k * cols + j];
            }
            b[col * cols + j] = acc * inv;
        }
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite solution".into()));
    }
    Ok(())
}

pub(crate) fn dot(w: &[Complex64], y: &[Complex64]) -> Complex64 {
    w.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub(crate) fn norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum()
}
