//! Explicit finite-difference stepping for `u_t = c(x, t) |Du|_delta^(p-2) F(D^2 u)`,
//! inf-convolution, and discrete supersolution checks.

mod check;
mod convergence;
mod evolve;
mod infconv;
mod stencil;

pub use check::{check_supersolution, SupersolutionReport, Violation};
pub use convergence::{convergence_study, ConvergenceRow, ConvergenceSetup, ConvergenceTable};
pub use evolve::{evolve, Evolution};
pub use infconv::{inf_convolution, lower_envelope};
pub use stencil::{admissible_dt, step};

use crate::error::{Error, Result};
use crate::grid::{ScalarField, SpatialGrid};
use crate::operators::OperatorSpec;
use crate::scaling::{intrinsic_rescale, time_factor};

/// Default fraction of the stability limit used for the time step.
pub const DEFAULT_CFL_SAFETY: f64 = 0.4;

/// What happens at nodes on the edge of the spatial grid.
#[derive(Debug, Clone, PartialEq)]
pub enum Boundary {
    /// Edge nodes keep their previous value.
    ClampLastValue,
    /// Edge nodes take values from a field on the same spatial grid, linearly
    /// interpolated in time.
    DirichletFromField(ScalarField),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    spec: OperatorSpec,
    cfl_safety: f64,
    boundary: Boundary,
    coefficient: Option<ScalarField>,
}

impl SolverConfig {
    /// The gradient regularization is taken from `spec` and must be positive.
    pub fn new(spec: OperatorSpec, cfl_safety: f64, boundary: Boundary) -> Result<Self> {
        spec.params().require_degenerate()?;
        if !(spec.delta() > 0.0) {
            return Err(Error::invalid(
                "time stepping needs a positive gradient regularization delta",
            ));
        }
        if !(cfl_safety > 0.0 && cfl_safety <= 1.0) {
            return Err(Error::invalid(format!(
                "CFL safety factor must lie in (0, 1], got {cfl_safety}"
            )));
        }
        Ok(Self {
            spec,
            cfl_safety,
            boundary,
            coefficient: None,
        })
    }

    /// Multiplies the right-hand side by a nonnegative field on the solver grid,
    /// linearly interpolated in time.
    pub fn with_coefficient(mut self, coefficient: ScalarField) -> Result<Self> {
        if coefficient.min() < 0.0 {
            return Err(Error::invalid("coefficient field must be nonnegative"));
        }
        self.coefficient = Some(coefficient);
        Ok(self)
    }

    pub fn spec(&self) -> &OperatorSpec {
        &self.spec
    }

    pub fn cfl_safety(&self) -> f64 {
        self.cfl_safety
    }

    pub fn boundary(&self) -> &Boundary {
        &self.boundary
    }

    pub fn coefficient(&self) -> Option<&ScalarField> {
        self.coefficient.as_ref()
    }

    /// Configuration for data rescaled by `v(x, t) = u(r x, tau t) / M`: the
    /// gradient regularization becomes `delta r / M` and auxiliary fields are
    /// rescaled alongside, so evolving rescaled data reproduces the rescaled
    /// evolution.
    pub fn rescaled(&self, r: f64, m: f64) -> Result<Self> {
        let params = self.spec.params();
        let spec = self.spec.with_delta(self.spec.delta() * r / m)?;
        let boundary = match &self.boundary {
            Boundary::ClampLastValue => Boundary::ClampLastValue,
            Boundary::DirichletFromField(f) => {
                Boundary::DirichletFromField(intrinsic_rescale(f, r, m, params)?)
            }
        };
        let coefficient = match &self.coefficient {
            None => None,
            Some(c) => {
                // the coefficient keeps its values; only its grid moves
                let tau = time_factor(r, m, params);
                let grid = c.grid().scaled(r, tau);
                Some(ScalarField::from_values(grid, c.values().to_vec())?)
            }
        };
        Ok(Self {
            spec,
            cfl_safety: self.cfl_safety,
            boundary,
            coefficient,
        })
    }

    /// Values of an auxiliary field at time `t` on `grid`, interpolated linearly
    /// between its slices.
    fn field_at(field: &ScalarField, grid: &SpatialGrid, t: f64, out: &mut Vec<f64>, what: &str) -> Result<()> {
        let fg = field.grid();
        if fg.space() != grid {
            return Err(Error::invalid(format!(
                "{what} field must live on the solver's spatial grid"
            )));
        }
        let slack = 1e-9 * fg.dt();
        if t < fg.t_start() - slack || t > fg.t_end() + slack {
            return Err(Error::domain(format!(
                "{what} field covers t in [{}, {}], solver needs t = {t}",
                fg.t_start(),
                fg.t_end()
            )));
        }
        let r = ((t - fg.t_start()) / fg.dt()).clamp(0.0, (fg.n_time() - 1) as f64);
        let j = (r.floor() as usize).min(fg.n_time() - 2);
        let w = r - j as f64;
        out.clear();
        if w == 0.0 {
            out.extend_from_slice(field.slice(j));
        } else {
            out.extend(
                field
                    .slice(j)
                    .iter()
                    .zip(field.slice(j + 1))
                    .map(|(a, b)| (1.0 - w) * a + w * b),
            );
        }
        Ok(())
    }
}

/// Diagnostics of one explicit step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub step: usize,
    /// Time at the start of the step.
    pub t: f64,
    pub dt: f64,
    /// Largest discrete gradient norm over interior nodes.
    pub max_abs_gradient: f64,
    /// Largest `|u_new - u_old| / dt` over interior nodes.
    pub residual_norm: f64,
    pub min_value: f64,
    pub max_value: f64,
}
