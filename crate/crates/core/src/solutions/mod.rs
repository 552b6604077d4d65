//! Closed-form solutions, barriers and test functions with exact derivatives.

mod barenblatt;
mod barrier;
mod catalog;
mod contact_fn;
mod example;

use rayon::prelude::*;

pub use barenblatt::BarenblattSpec;
pub use barrier::{BarrierSpec, Profile};
pub use catalog::{Affine, Catalog, Constant, Rescaled};
pub use contact_fn::ContactFnSpec;
pub use example::ExampleSpec;

use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};
use crate::operators::{degenerate_rhs, OperatorSpec, SymMatrix};

/// Whether the returned derivatives are classical at the evaluation point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regularity {
    Smooth,
    /// The point sits on a free boundary, a kink or a singularity of the second
    /// derivatives; the returned derivatives are one-sided limits or zero
    /// placeholders and must not be used in pointwise residuals.
    OneSided,
}

/// Value and exact derivatives at a space-time point.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub hessian: SymMatrix,
    pub time_derivative: f64,
    pub regularity: Regularity,
}

impl Jet {
    pub(crate) fn zero(n: usize) -> Self {
        Self {
            value: 0.0,
            gradient: vec![0.0; n],
            hessian: SymMatrix::zeros(n),
            time_derivative: 0.0,
            regularity: Regularity::Smooth,
        }
    }

    /// Jet of the radial function `x -> f(|x - c|)` given `f, f', f''` at
    /// `r = |x - c|` and the offset `x - c`; `f'(r) / r` is passed separately so
    /// callers can supply its limit at `r = 0`.
    pub(crate) fn radial(offset: &[f64], r: f64, value: f64, fr: f64, frr: f64, fr_over_r: f64, ft: f64) -> Self {
        let n = offset.len();
        let unit: Vec<f64> = if r > 0.0 {
            offset.iter().map(|v| v / r).collect()
        } else {
            vec![0.0; n]
        };
        let gradient = unit.iter().map(|e| fr * e).collect();
        let hessian = SymMatrix::from_fn(n, |i, j| {
            let delta = if i == j { 1.0 } else { 0.0 };
            frr * unit[i] * unit[j] + fr_over_r * (delta - unit[i] * unit[j])
        });
        Self {
            value,
            gradient,
            hessian,
            time_derivative: ft,
            regularity: Regularity::Smooth,
        }
    }

    pub(crate) fn one_sided(mut self) -> Self {
        self.regularity = Regularity::OneSided;
        self
    }
}

/// A closed-form function of `(x, t)` with exact derivatives.
pub trait AnalyticSolution: Send + Sync {
    fn dim(&self) -> usize;

    fn eval(&self, x: &[f64], t: f64) -> Result<Jet>;

    fn value(&self, x: &[f64], t: f64) -> Result<f64> {
        Ok(self.eval(x, t)?.value)
    }

    /// Samples the value at every grid node.
    fn sample(&self, grid: &Grid) -> Result<ScalarField> {
        if grid.dim() != self.dim() {
            return Err(Error::invalid(format!(
                "solution has dimension {}, grid has dimension {}",
                self.dim(),
                grid.dim()
            )));
        }
        let space = grid.space();
        let slices: Vec<Vec<f64>> = (0..grid.n_time())
            .into_par_iter()
            .map(|j| {
                let t = grid.time(j);
                let mut x = vec![0.0; space.dim()];
                (0..space.len())
                    .map(|flat| {
                        space.point_into(flat, &mut x);
                        self.value(&x, t)
                    })
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<_>>()?;
        ScalarField::from_values(grid.clone(), slices.concat())
    }
}

impl<S: AnalyticSolution + ?Sized> AnalyticSolution for Box<S> {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn eval(&self, x: &[f64], t: f64) -> Result<Jet> {
        (**self).eval(x, t)
    }

    fn value(&self, x: &[f64], t: f64) -> Result<f64> {
        (**self).value(x, t)
    }
}

/// `u_t - |Du|^(p-2) F(D^2 u)` evaluated from exact derivatives.
pub fn pointwise_residual<S: AnalyticSolution + ?Sized>(
    sol: &S,
    x: &[f64],
    t: f64,
    spec: &OperatorSpec,
) -> Result<f64> {
    let jet = sol.eval(x, t)?;
    if jet.regularity == Regularity::OneSided {
        return Err(Error::domain(format!(
            "pointwise residual requested at a non-smooth point x = {x:?}, t = {t}"
        )));
    }
    Ok(jet.time_derivative - degenerate_rhs(&jet.gradient, &jet.hessian, spec)?)
}
