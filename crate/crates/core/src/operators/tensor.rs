//! The matrix field `B(xi) = I + (p - 2) xi_hat xi_hat^T` and its square root.

use super::sym::SymMatrix;
use crate::error::{Error, Result};
use crate::params::EllipticityParams;

fn unit(xi: &[f64]) -> Result<Vec<f64>> {
    let norm = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::domain(format!(
            "direction field needs a nonzero finite vector, got {xi:?}"
        )));
    }
    Ok(xi.iter().map(|v| v / norm).collect())
}

/// `I + c xi_hat xi_hat^T`.
fn rank_one_update(xi: &[f64], c: f64) -> Result<SymMatrix> {
    let e = unit(xi)?;
    Ok(SymMatrix::from_fn(e.len(), |i, j| {
        let delta = if i == j { 1.0 } else { 0.0 };
        delta + c * e[i] * e[j]
    }))
}

/// Root `q > -1` of `q^2 + 2 q = p - 2`, i.e. `q = sqrt(p - 1) - 1`.
pub fn sqrt_b_coefficient(p: f64) -> f64 {
    (p - 1.0).sqrt() - 1.0
}

/// `I + (p - 2) xi_hat xi_hat^T`; eigenvalues `1` (n - 1 times) and `p - 1`.
pub fn field_b(xi: &[f64], params: &EllipticityParams) -> Result<SymMatrix> {
    rank_one_update(xi, params.p() - 2.0)
}

/// `I + q xi_hat xi_hat^T` with `q = sqrt(p - 1) - 1`, the positive square root of
/// [`field_b`].
pub fn sqrt_b(xi: &[f64], params: &EllipticityParams) -> Result<SymMatrix> {
    rank_one_update(xi, sqrt_b_coefficient(params.p()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_matrices() {
        let p3 = EllipticityParams::new(1.0, 1.0, 3.0, 2).unwrap();
        assert_eq!(field_b(&[1.0, 0.0], &p3).unwrap().to_rows(), vec![vec![2.0, 0.0], vec![0.0, 1.0]]);
        let r = sqrt_b(&[1.0, 0.0], &p3).unwrap();
        assert!((r.get(0, 0) - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(r.get(1, 1), 1.0);
        assert_eq!(r.get(0, 1), 0.0);

        let p2 = EllipticityParams::new(1.0, 1.0, 2.0, 3).unwrap();
        assert_eq!(field_b(&[0.3, -1.0, 2.0], &p2).unwrap(), SymMatrix::identity(3));
        assert_eq!(sqrt_b(&[0.3, -1.0, 2.0], &p2).unwrap(), SymMatrix::identity(3));
    }

    #[test]
    fn zero_direction_is_a_domain_error() {
        let p = EllipticityParams::new(1.0, 1.0, 3.0, 2).unwrap();
        assert!(matches!(field_b(&[0.0, 0.0], &p), Err(Error::Domain(_))));
        assert!(matches!(sqrt_b(&[0.0, 0.0], &p), Err(Error::Domain(_))));
    }

    #[test]
    fn determinant_is_p_minus_one() {
        let p = EllipticityParams::new(1.0, 1.0, 4.5, 2).unwrap();
        let b = field_b(&[0.6, -0.8], &p).unwrap();
        let det = b.get(0, 0) * b.get(1, 1) - b.get(0, 1).powi(2);
        assert!((det - 3.5).abs() < 1e-12);
    }
}
