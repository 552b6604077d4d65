//! Catalog of closed-form entries selectable from configuration, plus affine
//! functions and intrinsic rescalings of any entry.

use serde::{Deserialize, Serialize};

use super::{AnalyticSolution, BarenblattSpec, BarrierSpec, ContactFnSpec, ExampleSpec, Jet};
use crate::error::{Error, Result};
use crate::operators::SymMatrix;
use crate::params::EllipticityParams;
use crate::scaling::time_factor;

/// `u(x, t) = <slope, x> + offset`; solves every equation in this crate.
#[derive(Debug, Clone, PartialEq)]
pub struct Affine {
    pub slope: Vec<f64>,
    pub offset: f64,
}

impl Affine {
    pub fn constant(n: usize, value: f64) -> Self {
        Self {
            slope: vec![0.0; n],
            offset: value,
        }
    }
}

/// Constant functions are the affine functions with zero slope.
pub type Constant = Affine;

impl AnalyticSolution for Affine {
    fn dim(&self) -> usize {
        self.slope.len()
    }

    fn eval(&self, x: &[f64], t: f64) -> Result<Jet> {
        Ok(Jet {
            value: self.value(x, t)?,
            gradient: self.slope.clone(),
            hessian: SymMatrix::zeros(self.dim()),
            time_derivative: 0.0,
            regularity: super::Regularity::Smooth,
        })
    }

    fn value(&self, x: &[f64], _t: f64) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::invalid("affine function: point has the wrong dimension"));
        }
        Ok(self.offset + x.iter().zip(&self.slope).map(|(a, b)| a * b).sum::<f64>())
    }
}

/// `v(x, t) = u(r (x - center), tau (t - t_shift)) / M` with
/// `tau = r^p M^(2-p)`, which maps solutions to solutions.
#[derive(Debug, Clone, PartialEq)]
pub struct Rescaled<S> {
    inner: S,
    center: Vec<f64>,
    t_shift: f64,
    r: f64,
    m: f64,
    tau: f64,
}

impl<S: AnalyticSolution> Rescaled<S> {
    pub fn new(inner: S, center: Vec<f64>, t_shift: f64, r: f64, m: f64, params: &EllipticityParams) -> Result<Self> {
        if !(r > 0.0 && m > 0.0 && r.is_finite() && m.is_finite()) {
            return Err(Error::invalid(format!(
                "rescaling factors must be positive, got r = {r}, M = {m}"
            )));
        }
        if center.len() != inner.dim() {
            return Err(Error::invalid("rescaling center has the wrong dimension"));
        }
        Ok(Self {
            inner,
            center,
            t_shift,
            r,
            m,
            tau: time_factor(r, m, params),
        })
    }

    pub fn inner(&self) -> &S {
        &self.inner
    }

    pub fn time_factor(&self) -> f64 {
        self.tau
    }

    /// Point of the inner solution that `(x, t)` maps to.
    pub fn inner_point(&self, x: &[f64], t: f64) -> (Vec<f64>, f64) {
        (
            x.iter().zip(&self.center).map(|(a, c)| self.r * (a - c)).collect(),
            self.tau * (t - self.t_shift),
        )
    }
}

impl<S: AnalyticSolution> AnalyticSolution for Rescaled<S> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn eval(&self, x: &[f64], t: f64) -> Result<Jet> {
        let (y, s) = self.inner_point(x, t);
        let jet = self.inner.eval(&y, s)?;
        let g = self.r / self.m;
        Ok(Jet {
            value: jet.value / self.m,
            gradient: jet.gradient.iter().map(|v| g * v).collect(),
            hessian: jet.hessian.scale(self.r * self.r / self.m),
            time_derivative: jet.time_derivative * self.tau / self.m,
            regularity: jet.regularity,
        })
    }

    fn value(&self, x: &[f64], t: f64) -> Result<f64> {
        let (y, s) = self.inner_point(x, t);
        Ok(self.inner.value(&y, s)? / self.m)
    }
}

/// Serializable catalog reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Catalog {
    Barenblatt,
    /// Barenblatt profile rescaled and translated, see [`Rescaled`].
    ScaledBarenblatt {
        center: Vec<f64>,
        t_shift: f64,
        r: f64,
        m: f64,
    },
    Barrier {
        q: f64,
        alpha: f64,
    },
    Example {
        c0: f64,
        k: u64,
    },
    ContactFunction {
        y: Vec<f64>,
        s: f64,
        a: f64,
    },
    Affine {
        slope: Vec<f64>,
        offset: f64,
    },
}

impl Catalog {
    pub fn build(&self, params: &EllipticityParams) -> Result<Box<dyn AnalyticSolution>> {
        Ok(match self {
            Catalog::Barenblatt => Box::new(BarenblattSpec::new(*params)?),
            Catalog::ScaledBarenblatt { center, t_shift, r, m } => Box::new(Rescaled::new(
                BarenblattSpec::new(*params)?,
                center.clone(),
                *t_shift,
                *r,
                *m,
                params,
            )?),
            Catalog::Barrier { q, alpha } => Box::new(BarrierSpec::new(*params, *q, *alpha)?),
            Catalog::Example { c0, k } => Box::new(ExampleSpec::new(params, *c0, *k)?),
            Catalog::ContactFunction { y, s, a } => {
                Box::new(ContactFnSpec::new(y.clone(), *s, *a, params)?)
            }
            Catalog::Affine { slope, offset } => {
                if slope.len() != params.n() {
                    return Err(Error::invalid(format!(
                        "affine slope has dimension {}, expected n = {}",
                        slope.len(),
                        params.n()
                    )));
                }
                Box::new(Affine {
                    slope: slope.clone(),
                    offset: *offset,
                })
            }
        })
    }
}
