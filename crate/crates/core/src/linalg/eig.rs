//! Real eigenvalues via Hessenberg reduction and Francis double-shift QR.
//!
//! Eigenvalue computation is only ever needed on small matrices here
//! (placement verification, spectral radii), so the implementation favors
//! clarity over blocked performance: reflectors are applied across the whole
//! active window.

use num_complex::Complex64;

use super::{LinalgError, Matrix};

/// Largest dimension accepted by [`eigenvalues`].
pub const MAX_EIG_DIM: usize = 32;

const MAX_ITERS_PER_BLOCK: usize = 40;

/// Computes the multiset of eigenvalues of a square real matrix.
pub fn eigenvalues(a: &Matrix) -> Result<Vec<Complex64>, LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    let n = a.rows();
    if n > MAX_EIG_DIM {
        return Err(LinalgError::DimensionTooLarge {
            dim: n,
            max: MAX_EIG_DIM,
        });
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    if n == 1 {
        return Ok(vec![Complex64::new(a.get(0, 0), 0.0)]);
    }

    let mut h = hessenberg(a);
    let mut out = Vec::with_capacity(n);
    let mut hi = n - 1;
    let mut iters = 0usize;

    loop {
        if hi == 0 {
            out.push(Complex64::new(h.get(0, 0), 0.0));
            break;
        }
        // Split the active block at negligible subdiagonal entries.
        let mut lo = hi;
        while lo > 0 {
            let s = h.get(lo - 1, lo - 1).abs() + h.get(lo, lo).abs();
            let s = if s == 0.0 { 1.0 } else { s };
            if h.get(lo, lo - 1).abs() <= f64::EPSILON * s {
                h.set(lo, lo - 1, 0.0);
                break;
            }
            lo -= 1;
        }

        if lo == hi {
            out.push(Complex64::new(h.get(hi, hi), 0.0));
            hi -= 1;
            iters = 0;
            continue;
        }
        if lo + 1 == hi {
            let (l1, l2) = eig2x2(h.get(lo, lo), h.get(lo, hi), h.get(hi, lo), h.get(hi, hi));
            out.push(l1);
            out.push(l2);
            if lo == 0 {
                break;
            }
            hi = lo - 1;
            iters = 0;
            continue;
        }

        iters += 1;
        if iters > MAX_ITERS_PER_BLOCK {
            return Err(LinalgError::NoConvergence);
        }
        francis_step(&mut h, lo, hi, iters);
    }

    // Canonical ordering: descending real part, then descending imaginary.
    out.sort_by(|a, b| {
        (b.re, b.im)
            .partial_cmp(&(a.re, a.im))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(out)
}

/// Reduces `a` to upper Hessenberg form by Householder similarity.
fn hessenberg(a: &Matrix) -> Matrix {
    let n = a.rows();
    let mut h = a.clone();
    let mut v = vec![0.0; n];
    for k in 0..n.saturating_sub(2) {
        let mut norm2 = 0.0;
        for i in k + 1..n {
            norm2 += h.get(i, k) * h.get(i, k);
        }
        let norm = norm2.sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if h.get(k + 1, k) > 0.0 { -norm } else { norm };
        let mut vnorm2 = 0.0;
        for i in k + 1..n {
            v[i] = h.get(i, k);
            if i == k + 1 {
                v[i] -= alpha;
            }
            vnorm2 += v[i] * v[i];
        }
        if vnorm2 == 0.0 {
            continue;
        }
        let beta = 2.0 / vnorm2;
        // Left: H <- (I - beta v v^T) H.
        for j in 0..n {
            let mut dot = 0.0;
            for i in k + 1..n {
                dot += v[i] * h.get(i, j);
            }
            let f = beta * dot;
            for i in k + 1..n {
                let val = h.get(i, j) - f * v[i];
                h.set(i, j, val);
            }
        }
        // Right: H <- H (I - beta v v^T).
        for i in 0..n {
            let mut dot = 0.0;
            for j in k + 1..n {
                dot += h.get(i, j) * v[j];
            }
            let f = beta * dot;
            for j in k + 1..n {
                let val = h.get(i, j) - f * v[j];
                h.set(i, j, val);
            }
        }
        for i in k + 2..n {
            h.set(i, k, 0.0);
        }
    }
    h
}

/// One implicit double-shift sweep on the window `[lo..=hi]` (size >= 3).
fn francis_step(h: &mut Matrix, lo: usize, hi: usize, iters: usize) {
    let m = hi - 1;
    let (s, t) = if iters.is_multiple_of(11) {
        // Exceptional shift to break symmetric-cycle stalls.
        let w = h.get(hi, hi - 1).abs() + h.get(hi - 1, hi - 2).abs();
        (1.5 * w, 0.5625 * w * w)
    } else {
        (
            h.get(m, m) + h.get(hi, hi),
            h.get(m, m) * h.get(hi, hi) - h.get(m, hi) * h.get(hi, m),
        )
    };

    let mut x = h.get(lo, lo) * h.get(lo, lo) + h.get(lo, lo + 1) * h.get(lo + 1, lo)
        - s * h.get(lo, lo)
        + t;
    let mut y = h.get(lo + 1, lo) * (h.get(lo, lo) + h.get(lo + 1, lo + 1) - s);
    let mut z = h.get(lo + 1, lo) * h.get(lo + 2, lo + 1);

    let mut k = lo;
    while k + 2 <= hi {
        apply_reflector3(h, lo, hi, k, x, y, z);
        if k > lo {
            // The reflector annihilated these bulge entries exactly.
            h.set(k + 1, k - 1, 0.0);
            h.set(k + 2, k - 1, 0.0);
        }
        if k + 3 <= hi {
            x = h.get(k + 1, k);
            y = h.get(k + 2, k);
            z = h.get(k + 3, k);
        } else {
            x = h.get(k + 1, k);
            y = h.get(k + 2, k);
            z = 0.0;
        }
        k += 1;
        if k + 2 > hi {
            apply_reflector2(h, lo, hi, k, x, y);
            if k > lo {
                h.set(k + 1, k - 1, 0.0);
            }
        }
    }
}

/// Applies a 3-element Householder reflector annihilating `(y, z)` against
/// `x`, acting on rows/columns `k..k+3` within the window.
fn apply_reflector3(h: &mut Matrix, lo: usize, hi: usize, k: usize, x: f64, y: f64, z: f64) {
    let norm = (x * x + y * y + z * z).sqrt();
    if norm == 0.0 {
        return;
    }
    let alpha = if x > 0.0 { -norm } else { norm };
    let v = [x - alpha, y, z];
    let vnorm2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
    if vnorm2 == 0.0 {
        return;
    }
    let beta = 2.0 / vnorm2;
    for j in lo..=hi {
        let dot = v[0] * h.get(k, j) + v[1] * h.get(k + 1, j) + v[2] * h.get(k + 2, j);
        let f = beta * dot;
        for (off, vi) in v.iter().enumerate() {
            let val = h.get(k + off, j) - f * vi;
            h.set(k + off, j, val);
        }
    }
    for i in lo..=hi {
        let dot = v[0] * h.get(i, k) + v[1] * h.get(i, k + 1) + v[2] * h.get(i, k + 2);
        let f = beta * dot;
        for (off, vi) in v.iter().enumerate() {
            let val = h.get(i, k + off) - f * vi;
            h.set(i, k + off, val);
        }
    }
}

/// Final 2-element reflector of a Francis sweep.
fn apply_reflector2(h: &mut Matrix, lo: usize, hi: usize, k: usize, x: f64, y: f64) {
    let norm = (x * x + y * y).sqrt();
    if norm == 0.0 {
        return;
    }
    let alpha = if x > 0.0 { -norm } else { norm };
    let v = [x - alpha, y];
    let vnorm2 = v[0] * v[0] + v[1] * v[1];
    if vnorm2 == 0.0 {
        return;
    }
    let beta = 2.0 / vnorm2;
    for j in lo..=hi {
        let dot = v[0] * h.get(k, j) + v[1] * h.get(k + 1, j);
        let f = beta * dot;
        for (off, vi) in v.iter().enumerate() {
            let val = h.get(k + off, j) - f * vi;
            h.set(k + off, j, val);
        }
    }
    for i in lo..=hi {
        let dot = v[0] * h.get(i, k) + v[1] * h.get(i, k + 1);
        let f = beta * dot;
        for (off, vi) in v.iter().enumerate() {
            let val = h.get(i, k + off) - f * vi;
            h.set(i, k + off, val);
        }
    }
}

fn eig2x2(a: f64, b: f64, c: f64, d: f64) -> (Complex64, Complex64) {
    let p = 0.5 * (a + d);
    let det = a * d - b * c;
    let disc = p * p - det;
    if disc >= 0.0 {
        let sq = disc.sqrt();
        (Complex64::new(p + sq, 0.0), Complex64::new(p - sq, 0.0))
    } else {
        let sq = (-disc).sqrt();
        (Complex64::new(p, sq), Complex64::new(p, -sq))
    }
}
