//! Householder QR with a nonnegative-diagonal convention for `R`.

use super::Matrix;

/// QR factorization `A = Q R` of a square matrix, with `R[i][i] >= 0`.
///
/// The sign convention makes the factorization unique for full-rank input,
/// which keeps accumulated `log R[i][i]` values well defined across steps of
/// the reorthonormalized product iteration.
pub fn qr(a: &Matrix) -> (Matrix, Matrix) {
    assert!(a.is_square(), "qr expects a square matrix");
    let n = a.rows();
    let mut r = a.clone();
    let mut q = Matrix::identity(n);
    let mut v = vec![0.0; n];

    for k in 0..n.saturating_sub(1) {
        let mut norm = 0.0;
        for i in k..n {
            norm += r.get(i, k) * r.get(i, k);
        }
        norm = norm.sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if r.get(k, k) > 0.0 { -norm } else { norm };
        let mut vnorm2 = 0.0;
        for i in k..n {
            v[i] = r.get(i, k);
            if i == k {
                v[i] -= alpha;
            }
            vnorm2 += v[i] * v[i];
        }
        if vnorm2 == 0.0 {
            continue;
        }
        // Apply H = I - 2 v v^T / (v^T v) from the left to R ...
        for j in k..n {
            let mut dot = 0.0;
            for i in k..n {
                dot += v[i] * r.get(i, j);
            }
            let f = 2.0 * dot / vnorm2;
            for i in k..n {
                let val = r.get(i, j) - f * v[i];
                r.set(i, j, val);
            }
        }
        // ... and from the right to the accumulated Q.
        for i in 0..n {
            let mut dot = 0.0;
            for j in k..n {
                dot += q.get(i, j) * v[j];
            }
            let f = 2.0 * dot / vnorm2;
            for j in k..n {
                let val = q.get(i, j) - f * v[j];
                q.set(i, j, val);
            }
        }
    }

    // Clean the strict lower triangle and enforce nonnegative diagonal.
    for i in 0..n {
        for j in 0..i {
            r.set(i, j, 0.0);
        }
    }
    for i in 0..n {
        if r.get(i, i) < 0.0 {
            for j in i..n {
                let val = -r.get(i, j);
                r.set(i, j, val);
            }
            for row in 0..n {
                let val = -q.get(row, i);
                q.set(row, i, val);
            }
        }
    }
    (q, r)
}
