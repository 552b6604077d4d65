//! Pucci extremal operators.

use super::sym::{eigenvalues_packed, SymMatrix};
use crate::error::Result;
use crate::params::EllipticityParams;

/// Stack buffer size for eigenvalues; larger dimensions allocate.
const STACK_DIM: usize = 4;

#[inline]
pub(crate) fn pucci_from_eigenvalues(eig: &[f64], low: f64, high: f64) -> f64 {
    eig.iter()
        .map(|&e| if e > 0.0 { low * e } else { high * e })
        .sum()
}

/// `(P^-, P^+)` of a packed symmetric matrix.
pub(crate) fn pucci_pair_packed(n: usize, a: &[f64], lambda: f64, big_lambda: f64) -> Result<(f64, f64)> {
    let mut stack = [0.0; STACK_DIM];
    let mut heap;
    let eig: &mut [f64] = if n <= STACK_DIM {
        &mut stack[..n]
    } else {
        heap = vec![0.0; n];
        &mut heap
    };
    eigenvalues_packed(n, a, eig)?;
    Ok((
        pucci_from_eigenvalues(eig, lambda, big_lambda),
        pucci_from_eigenvalues(eig, big_lambda, lambda),
    ))
}

/// `lambda * (sum of positive eigenvalues) + Lambda * (sum of negative eigenvalues)`.
pub fn pucci_minus(m: &SymMatrix, params: &EllipticityParams) -> Result<f64> {
    Ok(pucci_pair_packed(m.dim(), m.packed(), params.lambda(), params.big_lambda())?.0)
}

/// `Lambda * (sum of positive eigenvalues) + lambda * (sum of negative eigenvalues)`.
pub fn pucci_plus(m: &SymMatrix, params: &EllipticityParams) -> Result<f64> {
    Ok(pucci_pair_packed(m.dim(), m.packed(), params.lambda(), params.big_lambda())?.1)
}
