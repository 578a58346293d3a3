//! Singular value decomposition by one-sided Jacobi rotations, plus a
//! symmetric eigensolver used for canonical orthogonal frames.

use super::Matrix;

const MAX_SWEEPS: usize = 60;
const JACOBI_EPS: f64 = 1e-15;

/// Full SVD `A = U diag(sigma) V^T` with orthonormal `U` (rows x rows) and
/// `V` (cols x cols); singular values sorted in nonincreasing order.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Matrix,
    pub sigma: Vec<f64>,
    pub vt: Matrix,
}

pub fn svd(a: &Matrix) -> Svd {
    if a.rows() < a.cols() {
        let t = svd(&a.transpose());
        return Svd {
            u: t.vt.transpose(),
            sigma: t.sigma,
            vt: t.u.transpose(),
        };
    }
    let m = a.rows();
    let n = a.cols();
    if n == 0 {
        return Svd {
            u: Matrix::identity(m),
            sigma: Vec::new(),
            vt: Matrix::identity(0),
        };
    }

    let mut b = a.clone();
    let mut v = Matrix::identity(n);

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let mut app = 0.0;
                let mut aqq = 0.0;
                let mut apq = 0.0;
                for i in 0..m {
                    let bp = b.get(i, p);
                    let bq = b.get(i, q);
                    app += bp * bp;
                    aqq += bq * bq;
                    apq += bp * bq;
                }
                if apq.abs() <= JACOBI_EPS * (app * aqq).sqrt() || apq == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (aqq - app) / (2.0 * apq);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let bp = b.get(i, p);
                    let bq = b.get(i, q);
                    b.set(i, p, c * bp - s * bq);
                    b.set(i, q, s * bp + c * bq);
                }
                for i in 0..n {
                    let vp = v.get(i, p);
                    let vq = v.get(i, q);
                    v.set(i, p, c * vp - s * vq);
                    v.set(i, q, s * vp + c * vq);
                }
            }
        }
        if !rotated {
            break;
        }
    }

    // Column norms are the singular values; sort descending.
    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = (0..n)
        .map(|j| {
            (0..m)
                .map(|i| b.get(i, j) * b.get(i, j))
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    order.sort_by(|&x, &y| norms[y].partial_cmp(&norms[x]).unwrap());

    let mut sigma = Vec::with_capacity(n);
    let mut u = Matrix::zeros(m, m);
    let mut v_sorted = Matrix::zeros(n, n);
    let mut filled = 0usize;
    for (dst, &src) in order.iter().enumerate() {
        sigma.push(norms[src]);
        for i in 0..n {
            v_sorted.set(i, dst, v.get(i, src));
        }
        if norms[src] > 0.0 {
            for i in 0..m {
                u.set(i, dst, b.get(i, src) / norms[src]);
            }
            filled = dst + 1;
        }
    }
    complete_orthonormal(&mut u, filled);

    Svd {
        u,
        sigma,
        vt: v_sorted.transpose(),
    }
}

/// Fills columns `filled..` of `u` with an orthonormal completion of the
/// leading columns, by Gram-Schmidt over the standard basis.
fn complete_orthonormal(u: &mut Matrix, filled: usize) {
    let m = u.rows();
    let mut have = filled;
    let mut cand = 0usize;
    while have < m && cand < m {
        let mut w = vec![0.0; m];
        w[cand] = 1.0;
        for j in 0..have {
            let dot: f64 = (0..m).map(|i| u.get(i, j) * w[i]).sum();
            for (i, wi) in w.iter_mut().enumerate() {
                *wi -= dot * u.get(i, j);
            }
        }
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.5 {
            for (i, wi) in w.iter().enumerate() {
                u.set(i, have, wi / norm);
            }
            have += 1;
        }
        cand += 1;
    }
    debug_assert_eq!(have, m, "orthonormal completion fell short");
}

/// Eigendecomposition `S = V diag(vals) V^T` of a symmetric matrix by the
/// classical two-sided Jacobi method.
///
/// Eigenvalues are sorted in nonincreasing order and each eigenvector's
/// largest-magnitude component is made positive, so the frame is canonical
/// up to degeneracies.
pub fn symmetric_eigen(s: &Matrix) -> (Vec<f64>, Matrix) {
    assert!(s.is_square(), "symmetric_eigen expects a square matrix");
    let n = s.rows();
    let mut a = s.clone();
    let mut v = Matrix::identity(n);

    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                off += a.get(i, j).abs();
            }
        }
        if off == 0.0 {
            break;
        }
        let mut rotated = false;
        for p in 0..n.saturating_sub(1) {
            for q in p + 1..n {
                let apq = a.get(p, q);
                let scale = (a.get(p, p).abs() + a.get(q, q).abs()).max(1e-300);
                if apq.abs() <= JACOBI_EPS * scale {
                    continue;
                }
                rotated = true;
                let theta = (a.get(q, q) - a.get(p, p)) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (1.0 + theta * theta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let sn = c * t;
                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, c * akp - sn * akq);
                    a.set(k, q, sn * akp + c * akq);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, c * apk - sn * aqk);
                    a.set(q, k, sn * apk + c * aqk);
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - sn * vkq);
                    v.set(k, q, sn * vkp + c * vkq);
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a.get(i, i)).collect();
    order.sort_by(|&x, &y| diag[y].partial_cmp(&diag[x]).unwrap());

    let mut vals = Vec::with_capacity(n);
    let mut vecs = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vals.push(diag[src]);
        let mut top = 0usize;
        for i in 1..n {
            if v.get(i, src).abs() > v.get(top, src).abs() {
                top = i;
            }
        }
        let flip = if v.get(top, src) < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            vecs.set(i, dst, flip * v.get(i, src));
        }
    }
    (vals, vecs)
}
