//! Small dense vector/matrix helpers on plain slices.

use alloc::vec;
use alloc::vec::Vec;

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Row-major `n x n` matrix times vector.
pub fn matvec(mat: &[f64], n: usize, v: &[f64]) -> Vec<f64> {
    debug_assert_eq!(mat.len(), n * n);
    mat.chunks_exact(n).map(|row| dot(row, v)).collect()
}

/// Orthogonal factor `Q` of `A = QR` for a square row-major matrix, with the
/// diagonal of `R` positive.
///
/// Uses modified Gram-Schmidt with one re-orthogonalisation pass, which keeps
/// `||QQ^T - I||_max` near machine precision for well-conditioned inputs.
/// Returns `None` when a column is numerically dependent on its predecessors.
pub fn orthogonal_factor(a: &[f64], n: usize) -> Option<Vec<f64>> {
    // columns of A as contiguous vectors
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| (0..n).map(|i| a[i * n + j]).collect()).collect();
    for j in 0..n {
        let (done, rest) = cols.split_at_mut(j);
        let v = &mut rest[0];
        let scale = norm(v);
        for _ in 0..2 {
            for q in done.iter() {
                let r = dot(q, v);
                axpy(-r, q, v);
            }
        }
        let r_jj = norm(v);
        if !(r_jj > 1e-12 * scale.max(f64::MIN_POSITIVE)) {
            return None;
        }
        v.iter_mut().for_each(|x| *x /= r_jj);
    }
    let mut q = vec![0.0; n * n];
    for (j, col) in cols.iter().enumerate() {
        for (i, &x) in col.iter().enumerate() {
            q[i * n + j] = x;
        }
    }
    Some(q)
}

/// `max_ij |(M M^T - I)_ij|` for a row-major square matrix.
pub fn orthogonality_defect(m: &[f64], n: usize) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let v = dot(&m[i * n..(i + 1) * n], &m[j * n..(j + 1) * n]);
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((v - target).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qr_of_triangular_is_identity() {
        // upper-triangular with positive diagonal: Q must be I
        let a = [2.0, 1.0, 3.0, 0.0, 1.5, -1.0, 0.0, 0.0, 4.0];
        let q = orthogonal_factor(&a, 3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((q[i * 3 + j] - e).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn qr_rejects_singular() {
        let a = [1.0, 2.0, 2.0, 4.0];
        assert!(orthogonal_factor(&a, 2).is_none());
    }

    #[test]
    fn q_times_r_reproduces_a() {
        let a = [0.3, -1.2, 0.7, 2.2, 0.1, -0.4, -0.9, 1.1, 0.6];
        let n = 3;
        let q = orthogonal_factor(&a, n).unwrap();
        // R = Q^T A must be upper triangular with positive diagonal
        for i in 0..n {
            for j in 0..n {
                let r_ij: f64 = (0..n).map(|k| q[k * n + i] * a[k * n + j]).sum();
                if i > j {
                    assert!(r_ij.abs() < 1e-14, "R[{i}][{j}] = {r_ij}");
                } else if i == j {
                    assert!(r_ij > 0.0);
                }
            }
        }
        assert!(orthogonality_defect(&q, n) < 1e-15);
    }
}
