//! Matrix exponential by scaling and squaring with a Pade(7) core.
//!
//! The argument is scaled down until its norm is at most 0.5 before the
//! rational approximation is applied, then squared back up. The normalized
//! variant keeps the result as `e^{log_scale} * core` with `core` of unit
//! operator norm, so exponentials of any magnitude stay representable.

use super::solve::Lu;
use super::{operator_norm, LinalgError, Matrix};

/// Numerators of the diagonal Pade(7) approximant to exp.
const PADE7: [f64; 8] = [
    17_297_280.0,
    8_648_640.0,
    1_995_840.0,
    277_200.0,
    25_200.0,
    1_512.0,
    56.0,
    1.0,
];

/// Norm threshold at which the reduction switches from squaring to
/// recursive halving of the time argument (which composes normalized
/// factors and therefore cannot underflow).
const SPLIT_NORM: f64 = 32.0;

/// Computes `e^{A t}` as a dense matrix.
///
/// Entries overflow to infinity if the true exponential exceeds the f64
/// range; use [`expm_normalized`] when magnitudes may be extreme.
pub fn expm(a: &Matrix, t: f64) -> Result<Matrix, LinalgError> {
    let (core, log_scale) = expm_normalized(a, t)?;
    Ok(core.scale(log_scale.exp()))
}

/// Computes `e^{A t}` as `(core, log_scale)` with `operator_norm(core) = 1`.
pub fn expm_normalized(a: &Matrix, t: f64) -> Result<(Matrix, f64), LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    if !t.is_finite() {
        return Err(LinalgError::NonFinite(t));
    }
    let n = a.rows();
    if n == 0 {
        return Ok((Matrix::zeros(0, 0), 0.0));
    }

    let eta = a.norm_inf() * t.abs();
    if eta > SPLIT_NORM {
        let (hc, hl) = expm_normalized(a, t / 2.0)?;
        return Ok(scaled_mul(&hc, hl, &hc, hl));
    }

    let squarings = if eta > 0.5 {
        (eta / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let x = a.scale(t / f64::powi(2.0, squarings as i32));
    let p = pade7(&x)?;

    let norm = operator_norm(&p);
    debug_assert!(norm > 0.0, "exponential core cannot vanish");
    let mut core = p.scale(1.0 / norm);
    let mut log_scale = norm.ln();
    for _ in 0..squarings {
        let sq = core.matmul(&core);
        let c = operator_norm(&sq);
        if c == 0.0 || !c.is_finite() {
            return Err(LinalgError::NoConvergence);
        }
        core = sq.scale(1.0 / c);
        log_scale = 2.0 * log_scale + c.ln();
    }
    Ok((core, log_scale))
}

/// Multiplies two normalized pairs, renormalizing the product core.
pub(crate) fn scaled_mul(
    a_core: &Matrix,
    a_log: f64,
    b_core: &Matrix,
    b_log: f64,
) -> (Matrix, f64) {
    let prod = a_core.matmul(b_core);
    let c = operator_norm(&prod);
    if c == 0.0 {
        return (prod, f64::NEG_INFINITY);
    }
    (prod.scale(1.0 / c), a_log + b_log + c.ln())
}

/// Diagonal Pade(7) approximant, valid for small-norm arguments.
fn pade7(x: &Matrix) -> Result<Matrix, LinalgError> {
    let n = x.rows();
    let eye = Matrix::identity(n);
    let x2 = x.matmul(x);
    let x4 = x2.matmul(&x2);
    let x6 = x2.matmul(&x4);

    let odd = x6
        .scale(PADE7[7])
        .add(&x4.scale(PADE7[5]))
        .add(&x2.scale(PADE7[3]))
        .add(&eye.scale(PADE7[1]));
    let u = x.matmul(&odd);
    let v = x6
        .scale(PADE7[6])
        .add(&x4.scale(PADE7[4]))
        .add(&x2.scale(PADE7[2]))
        .add(&eye.scale(PADE7[0]));

    let denom = v.sub(&u);
    let numer = v.add(&u);
    Ok(Lu::new(&denom)?.solve_matrix(&numer))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;

    fn assert_close(a: &Matrix, b: &Matrix, tol: f64) {
        assert_eq!((a.rows(), a.cols()), (b.rows(), b.cols()));
        for i in 0..a.rows() {
            for j in 0..a.cols() {
                assert!(
                    (a.get(i, j) - b.get(i, j)).abs() < tol,
                    "({i},{j}): {} vs {}",
                    a.get(i, j),
                    b.get(i, j)
                );
            }
        }
    }

    #[test]
    fn zero_matrix_gives_identity() {
        let a = Matrix::zeros(2, 2);
        assert_close(&expm(&a, 7.0).unwrap(), &Matrix::identity(2), 1e-15);
    }

    #[test]
    fn nilpotent_shear() {
        let a = Matrix::from_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        let e = expm(&a, 1.0).unwrap();
        assert_close(&e, &Matrix::from_rows(&[&[1.0, 1.0], &[0.0, 1.0]]), 1e-14);
    }

    #[test]
    fn diagonal_exponential() {
        let a = Matrix::from_diag(&[-1.0, 2.0]);
        let e = expm(&a, 0.5).unwrap();
        let expected = Matrix::from_diag(&[(-0.5f64).exp(), 1.0f64.exp()]);
        assert_close(&e, &expected, 1e-14);
    }

    #[test]
    fn group_property_on_random_inputs() {
        let mut rng = Stream::new(31);
        for _ in 0..20 {
            let a = Matrix::from_fn(3, 3, |_, _| 2.0 * rng.next_f64() - 1.0);
            let t = 4.0 * rng.next_f64() - 2.0;
            let s = 4.0 * rng.next_f64() - 2.0;
            let lhs = expm(&a, t).unwrap().matmul(&expm(&a, s).unwrap());
            let rhs = expm(&a, t + s).unwrap();
            let scale = 1.0 + operator_norm(&rhs);
            assert!(operator_norm(&lhs.sub(&rhs)) <= 1e-9 * scale);
        }
    }

    #[test]
    fn liouville_determinant_identity() {
        let mut rng = Stream::new(77);
        for _ in 0..10 {
            let a = Matrix::from_fn(4, 4, |_, _| rng.next_f64() - 0.5);
            let t = 2.0 * rng.next_f64();
            let e = expm(&a, t).unwrap();
            let lhs = crate::linalg::det(&e).unwrap();
            let rhs = (t * a.trace()).exp();
            assert!(
                (lhs - rhs).abs() <= 1e-8 * rhs.abs().max(1e-300),
                "{lhs} vs {rhs}"
            );
        }
    }

    #[test]
    fn normalized_form_handles_huge_arguments() {
        let a = Matrix::from_diag(&[300.0, -250.0]);
        let (core, ls) = expm_normalized(&a, 3.0).unwrap();
        assert!((operator_norm(&core) - 1.0).abs() < 1e-12);
        assert!((ls - 900.0).abs() < 1e-9 * 900.0, "log scale {ls}");
    }

    #[test]
    fn inverse_relation() {
        let a = Matrix::from_rows(&[&[0.3, -1.2], &[0.7, 0.1]]);
        let prod = expm(&a, 1.3).unwrap().matmul(&expm(&a, -1.3).unwrap());
        assert_close(&prod, &Matrix::identity(2), 1e-12);
    }
}
