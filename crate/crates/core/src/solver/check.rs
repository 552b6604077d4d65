//! Discrete supersolution test `D_t^- u - |D_h u|^(p-2) F(D_h^2 u) >= -tol`.

use super::stencil::rates;
use crate::error::{Error, Result};
use crate::grid::ScalarField;
use crate::operators::OperatorSpec;

/// At most this many violations are listed individually.
const MAX_LISTED: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub x: Vec<f64>,
    pub t: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SupersolutionReport {
    pub checked_nodes: usize,
    pub violation_count: usize,
    /// The first violations in time-major node order.
    pub violations: Vec<Violation>,
    /// Node with the smallest residual, violating or not.
    pub worst: Option<Violation>,
}

impl SupersolutionReport {
    pub fn passed(&self) -> bool {
        self.violation_count == 0
    }
}

/// Evaluates the residual with a backward time difference at every interior node
/// of slices `1..`, and reports nodes where it drops below `-tol`.
pub fn check_supersolution(u: &ScalarField, spec: &OperatorSpec, tol: f64) -> Result<SupersolutionReport> {
    let grid = u.grid();
    if grid.n_time() < 3 {
        return Err(Error::invalid(format!(
            "supersolution check needs at least 3 time slices, got {}",
            grid.n_time()
        )));
    }
    let space = grid.space();
    let len = space.len();
    let dt = grid.dt();
    let mut rhs = vec![0.0; len];
    let mut report = SupersolutionReport {
        checked_nodes: 0,
        violation_count: 0,
        violations: Vec::new(),
        worst: None,
    };
    let mut worst_value = f64::INFINITY;
    let mut worst_at = (0usize, 0usize);
    for j in 1..grid.n_time() {
        let now = u.slice(j);
        let before = u.slice(j - 1);
        rates(space, now, spec, None, &mut rhs)?;
        for flat in 0..len {
            if space.is_boundary(flat) {
                continue;
            }
            report.checked_nodes += 1;
            let residual = (now[flat] - before[flat]) / dt - rhs[flat];
            if residual < worst_value {
                worst_value = residual;
                worst_at = (j, flat);
            }
            if residual < -tol {
                report.violation_count += 1;
                if report.violations.len() < MAX_LISTED {
                    report.violations.push(Violation {
                        x: space.point(flat),
                        t: grid.time(j),
                        residual,
                    });
                }
            }
        }
    }
    if report.checked_nodes > 0 {
        report.worst = Some(Violation {
            x: space.point(worst_at.1),
            t: grid.time(worst_at.0),
            residual: worst_value,
        });
    }
    Ok(report)
}
