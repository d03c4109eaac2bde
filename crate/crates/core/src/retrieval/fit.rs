//! Small weighted least-squares helper used to seed the coefficient-space
//! descent from an arbitrary iterate's phase.

/// Solves the dense system `a * x = b` in place by Gaussian elimination with
/// partial pivoting. Returns `None` for (near-)singular systems.
pub(crate) fn solve_dense(a: &mut [Vec<f64>], b: &mut [f64]) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        let mut s = b[col];
        for k in col + 1..n {
            s -= a[col][k] * x[k];
        }
        x[col] = s / a[col][col];
    }
    Some(x)
}

/// Weighted least-squares fit of `y` against the given basis columns:
/// minimizes `sum_i w_i (y_i - sum_k p_k basis_k(i))^2` via the normal
/// equations. Returns `None` when the system is singular (e.g. all weights
/// concentrated on too few samples).
pub(crate) fn weighted_fit(basis: &[Vec<f64>], y: &[f64], w: &[f64]) -> Option<Vec<f64>> {
    let m = basis.len();
    let mut a = vec![vec![0.0; m]; m];
    let mut b = vec![0.0; m];
    for i in 0..y.len() {
        if w[i] <= 0.0 {
            continue;
        }
        for r in 0..m {
            let br = basis[r][i];
            b[r] += w[i] * br * y[i];
            for c in r..m {
                a[r][c] += w[i] * br * basis[c][i];
            }
        }
    }
    for r in 0..m {
        for c in 0..r {
            a[r][c] = a[c][r];
        }
    }
    solve_dense(&mut a, &mut b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_polynomial_coefficients() {
        let x: Vec<f64> = (0..50).map(|i| (i as f64 - 25.0) * 0.1).collect();
        let y: Vec<f64> = x.iter().map(|&t| 1.5 - 0.7 * t + 0.25 * t * t).collect();
        let basis = vec![
            vec![1.0; 50],
            x.clone(),
            x.iter().map(|&t| t * t).collect(),
        ];
        let w = vec![1.0; 50];
        let p = weighted_fit(&basis, &y, &w).unwrap();
        assert!((p[0] - 1.5).abs() < 1e-10);
        assert!((p[1] + 0.7).abs() < 1e-10);
        assert!((p[2] - 0.25).abs() < 1e-10);
    }

    #[test]
    fn zero_weights_are_ignored() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let mut y: Vec<f64> = x.iter().map(|&t| 2.0 * t).collect();
        y[9] = 1.0e9; // outlier carries zero weight
        let basis = vec![vec![1.0; 10], x];
        let mut w = vec![1.0; 10];
        w[9] = 0.0;
        let p = weighted_fit(&basis, &y, &w).unwrap();
        assert!(p[0].abs() < 1e-9);
        assert!((p[1] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn singular_system_returns_none() {
        let basis = vec![vec![1.0; 4], vec![1.0; 4]];
        let y = vec![1.0; 4];
        let w = vec![1.0; 4];
        assert!(weighted_fit(&basis, &y, &w).is_none());
    }
}
