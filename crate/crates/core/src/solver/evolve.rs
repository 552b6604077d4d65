//! Time integration to a uniform output grid with checkpoint-restart.

use super::stencil::{admissible_dt, step_in_place, Workspace};
use super::{SolverConfig, StepReport};
use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField, Slice};

/// Substep counts beyond this are treated as a stalled run.
const MAX_SUBSTEPS: usize = 1 << 40;

#[derive(Debug, Clone)]
pub struct Evolution {
    pub field: ScalarField,
    pub reports: Vec<StepReport>,
    /// Substeps per output interval at the end of the run (a power of two).
    pub substeps: usize,
    /// Number of intervals that were restarted after a CFL violation.
    pub restarts: usize,
}

/// Evolves `initial` to `t_end` and stores `n_out` equally spaced slices,
/// including the initial one.
///
/// Each output interval is split into `m` equal substeps with `m` the smallest
/// power of two whose step satisfies the CFL bound of the initial slice. When a
/// later step violates the bound, `m` doubles and the interval restarts from the
/// last stored slice.
pub fn evolve(initial: &Slice, cfg: &SolverConfig, t_end: f64, n_out: usize) -> Result<Evolution> {
    if n_out < 2 {
        return Err(Error::invalid("evolve needs at least 2 output slices"));
    }
    if !(t_end > initial.t) {
        return Err(Error::invalid(format!(
            "evolve needs t_end > t_start, got [{}, {t_end}]",
            initial.t
        )));
    }
    let t0 = initial.t;
    let dt_out = (t_end - t0) / (n_out - 1) as f64;
    let limit = admissible_dt(initial, cfg)?;
    let mut m = 1usize;
    while dt_out / m as f64 > limit * (1.0 + 1e-12) {
        m *= 2;
        if m > MAX_SUBSTEPS {
            return Err(Error::numeric(format!(
                "CFL bound {limit:e} is too small for the output spacing {dt_out:e}"
            )));
        }
    }

    let space = &initial.grid;
    let len = space.len();
    let mut values = Vec::with_capacity(len * n_out);
    values.extend_from_slice(&initial.values);
    let mut current = initial.values.clone();
    let mut reports = Vec::new();
    let mut restarts = 0;
    let mut ws = Workspace::default();

    for j in 0..n_out - 1 {
        let t_j = t0 + j as f64 * dt_out;
        'interval: loop {
            let dt = dt_out / m as f64;
            let mark = reports.len();
            #[allow(clippy::mut_range_bound)]
            for i in 0..m {
                let t = t_j + i as f64 * dt;
                match step_in_place(space, &mut current, t, dt, cfg, &mut ws) {
                    Ok(mut rep) => {
                        rep.step = reports.len();
                        reports.push(rep);
                    }
                    Err(Error::Cfl { .. }) => {
                        // the interval restarts below, so the new `m` takes effect
                        reports.truncate(mark);
                        current.copy_from_slice(&values[j * len..(j + 1) * len]);
                        m *= 2;
                        restarts += 1;
                        if m > MAX_SUBSTEPS {
                            return Err(Error::numeric(format!(
                                "CFL restarts exhausted near t = {t}"
                            )));
                        }
                        continue 'interval;
                    }
                    Err(e) => return Err(e),
                }
            }
            break;
        }
        values.extend_from_slice(&current);
    }

    let grid = Grid::from_counts(space.clone(), t0, dt_out, n_out)?;
    Ok(Evolution {
        field: ScalarField::from_values(grid, values)?,
        reports,
        substeps: m,
        restarts,
    })
}
