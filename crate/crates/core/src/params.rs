use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ellipticity constants `0 < lambda <= Lambda`, the exponent `p` and the spatial
/// dimension `n`.
///
/// Construction accepts any `p > 1`; the contact machinery works in that range,
/// everything involving the degenerate factor `|Du|^(p-2)` in time stepping or in
/// barriers calls [`EllipticityParams::require_degenerate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, try_from = "RawParams", into = "RawParams")]
pub struct EllipticityParams {
    lambda: f64,
    big_lambda: f64,
    p: f64,
    n: usize,
}

impl EllipticityParams {
    pub fn new(lambda: f64, big_lambda: f64, p: f64, n: usize) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::invalid(format!(
                "EllipticityParams: lambda must be positive and finite, got {lambda}"
            )));
        }
        if !(big_lambda.is_finite() && lambda <= big_lambda) {
            return Err(Error::invalid(format!(
                "EllipticityParams: requires 0 < lambda <= Lambda, got lambda = {lambda}, Lambda = {big_lambda}"
            )));
        }
        if !(p.is_finite() && p > 1.0) {
            return Err(Error::invalid(format!(
                "EllipticityParams: requires p > 1, got p = {p}"
            )));
        }
        if n == 0 {
            return Err(Error::invalid("EllipticityParams: requires n >= 1"));
        }
        Ok(Self {
            lambda,
            big_lambda,
            p,
            n,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// The upper ellipticity constant `Lambda`.
    pub fn big_lambda(&self) -> f64 {
        self.big_lambda
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Same constants with a different dimension.
    pub fn with_dim(&self, n: usize) -> Result<Self> {
        Self::new(self.lambda, self.big_lambda, self.p, n)
    }

    /// Errors unless `p > 2`.
    pub fn require_degenerate(&self) -> Result<()> {
        if self.p > 2.0 {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "this operation needs the degenerate range p > 2, got p = {}",
                self.p
            )))
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    lambda: f64,
    #[serde(rename = "Lambda")]
    big_lambda: f64,
    p: f64,
    n: usize,
}

impl TryFrom<RawParams> for EllipticityParams {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        EllipticityParams::new(raw.lambda, raw.big_lambda, raw.p, raw.n)
    }
}

impl From<EllipticityParams> for RawParams {
    fn from(p: EllipticityParams) -> Self {
        RawParams {
            lambda: p.lambda,
            big_lambda: p.big_lambda,
            p: p.p,
            n: p.n,
        }
    }
}
