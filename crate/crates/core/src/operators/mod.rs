//! Pucci operators, the degenerate right-hand sides `|Du|^(p-2) F(D^2 u)` and the
//! `B(xi)` tensor algebra.

mod pucci;
mod sym;
mod tensor;

use serde::{Deserialize, Serialize};

pub use pucci::{pucci_minus, pucci_plus};
pub use sym::SymMatrix;
pub use tensor::{field_b, sqrt_b, sqrt_b_coefficient};

pub(crate) use sym::{packed_index, packed_len};

use crate::error::{Error, Result};
use crate::params::EllipticityParams;

/// Which second-order operator `F` sits behind the degenerate factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorKind {
    PucciMinus,
    PucciPlus,
    /// Normalized q-Laplacian `tr((I + (q - 2) xi_hat xi_hat^T) M)`.
    Model { q: f64 },
}

/// Operator choice, ellipticity constants and gradient regularization `delta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorSpec {
    kind: OperatorKind,
    params: EllipticityParams,
    delta: f64,
}

impl OperatorSpec {
    pub fn new(kind: OperatorKind, params: EllipticityParams, delta: f64) -> Result<Self> {
        if let OperatorKind::Model { q } = kind {
            if !(q > 1.0 && q.is_finite()) {
                return Err(Error::invalid(format!(
                    "OperatorSpec: the model operator needs q > 1, got q = {q}"
                )));
            }
        }
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(Error::invalid(format!(
                "OperatorSpec: gradient regularization needs delta >= 0, got {delta}"
            )));
        }
        Ok(Self {
            kind,
            params,
            delta,
        })
    }

    pub fn pucci_minus(params: EllipticityParams, delta: f64) -> Result<Self> {
        Self::new(OperatorKind::PucciMinus, params, delta)
    }

    pub fn pucci_plus(params: EllipticityParams, delta: f64) -> Result<Self> {
        Self::new(OperatorKind::PucciPlus, params, delta)
    }

    pub fn model(q: f64, params: EllipticityParams, delta: f64) -> Result<Self> {
        Self::new(OperatorKind::Model { q }, params, delta)
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn params(&self) -> &EllipticityParams {
        &self.params
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn with_delta(&self, delta: f64) -> Result<Self> {
        Self::new(self.kind, self.params, delta)
    }

    /// Largest eigenvalue of the coefficient matrix the operator can use.
    pub fn max_ellipticity(&self) -> f64 {
        match self.kind {
            OperatorKind::PucciMinus | OperatorKind::PucciPlus => self.params.big_lambda(),
            OperatorKind::Model { q } => (q - 1.0).max(1.0),
        }
    }

    /// `|xi|_delta^(p-2) F(M)` for a packed symmetric `M`.
    pub(crate) fn rhs_packed(&self, xi: &[f64], m: &[f64]) -> Result<f64> {
        let n = xi.len();
        let p = self.params.p();
        let norm2 = xi.iter().map(|v| v * v).sum::<f64>() + self.delta * self.delta;
        if norm2 == 0.0 {
            if p > 2.0 {
                return Ok(0.0);
            }
            if p < 2.0 {
                return Err(Error::domain(
                    "degenerate factor |xi|^(p-2) is singular at xi = 0 for p < 2",
                ));
            }
        }
        let factor = degenerate_factor(norm2.sqrt(), p - 2.0);
        let k = match self.kind {
            OperatorKind::PucciMinus | OperatorKind::PucciPlus => {
                let (lo, hi) =
                    pucci::pucci_pair_packed(n, m, self.params.lambda(), self.params.big_lambda())?;
                if self.kind == OperatorKind::PucciMinus {
                    lo
                } else {
                    hi
                }
            }
            OperatorKind::Model { q } => {
                let trace: f64 = (0..n).map(|i| m[packed_index(n, i, i)]).sum();
                if norm2 == 0.0 {
                    trace
                } else {
                    trace + (q - 2.0) * sym::packed_quadratic_form(n, m, xi) / norm2
                }
            }
        };
        Ok(factor * k)
    }
}

/// `norm^e`, using repeated multiplication for integer `e` so that scaling `norm`
/// by a power of two scales the result exactly.
#[inline]
pub(crate) fn degenerate_factor(norm: f64, e: f64) -> f64 {
    if e == e.trunc() && e.abs() <= 32.0 {
        norm.powi(e as i32)
    } else {
        norm.powf(e)
    }
}

/// `|xi|_delta^(p-2) K(xi, M)` with `|xi|_delta = sqrt(|xi|^2 + delta^2)` and `K`
/// the operator selected by `spec`.
///
/// For `p > 2` a vanishing regularized gradient gives 0 regardless of `M`.
pub fn degenerate_rhs(xi: &[f64], m: &SymMatrix, spec: &OperatorSpec) -> Result<f64> {
    if xi.len() != m.dim() {
        return Err(Error::invalid(format!(
            "gradient has dimension {}, matrix has dimension {}",
            xi.len(),
            m.dim()
        )));
    }
    spec.rhs_packed(xi, m.packed())
}
