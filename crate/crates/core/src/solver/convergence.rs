//! Grid-refinement studies against exact solutions.

use super::{evolve, Boundary, SolverConfig};
use crate::error::{Error, Result};
use crate::grid::{Grid, SpatialGrid};
use crate::operators::OperatorSpec;
use crate::solutions::AnalyticSolution;

/// Nodes where the error is measured, given `(x, t_end)`.
pub type ErrorMask<'a> = &'a (dyn Fn(&[f64], f64) -> bool + Sync);

pub struct ConvergenceSetup<'a> {
    pub exact: &'a dyn AnalyticSolution,
    pub spec: OperatorSpec,
    pub center: Vec<f64>,
    pub half_width: f64,
    pub coarse_dx: f64,
    /// Number of grids; grid `k` has spacing `coarse_dx / 2^k`.
    pub levels: usize,
    pub t_start: f64,
    pub t_end: f64,
    /// Output slices per run; edge values come from the exact solution on
    /// these slices.
    pub n_out: usize,
    pub cfl_safety: f64,
    /// Restricts the error norms; all interior nodes when `None`.
    pub mask: Option<ErrorMask<'a>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub dx: f64,
    pub linf: f64,
    pub l1: f64,
    pub substeps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    /// `(log2(linf_h / linf_h/2), log2(l1_h / l1_h/2))` per consecutive pair.
    pub orders: Vec<(f64, f64)>,
    /// Both norms strictly decrease under every refinement.
    pub monotone: bool,
}

/// Runs the solver from the exact data at `t_start` on each grid and measures
/// the error at `t_end`. Non-monotone errors are reported, not rejected.
pub fn convergence_study(setup: &ConvergenceSetup<'_>) -> Result<ConvergenceTable> {
    if setup.levels < 2 {
        return Err(Error::invalid("a convergence study needs at least 2 grids"));
    }
    if setup.center.len() != setup.exact.dim() {
        return Err(Error::invalid("grid centre and exact solution differ in dimension"));
    }
    let half = vec![setup.half_width; setup.center.len()];
    let mut rows = Vec::with_capacity(setup.levels);
    for level in 0..setup.levels {
        let dx = setup.coarse_dx / f64::powi(2.0, level as i32);
        let space = SpatialGrid::new(&setup.center, &half, dx)?;
        let dt_out = (setup.t_end - setup.t_start) / (setup.n_out - 1) as f64;
        let out_grid = Grid::from_counts(space.clone(), setup.t_start, dt_out, setup.n_out)?;
        let exact = setup.exact.sample(&out_grid)?;
        let cfg = SolverConfig::new(
            setup.spec,
            setup.cfl_safety,
            Boundary::DirichletFromField(exact.clone()),
        )?;
        let run = evolve(&exact.slice_owned(0), &cfg, setup.t_end, setup.n_out)?;
        let last = setup.n_out - 1;
        let t = out_grid.time(last);
        let numeric = run.field.slice(last);
        let truth = exact.slice(last);
        let mut x = vec![0.0; space.dim()];
        let (mut linf, mut l1) = (0.0f64, 0.0);
        for flat in 0..space.len() {
            if space.is_boundary(flat) {
                continue;
            }
            space.point_into(flat, &mut x);
            if let Some(mask) = setup.mask {
                if !mask(&x, t) {
                    continue;
                }
            }
            let e = (numeric[flat] - truth[flat]).abs();
            linf = linf.max(e);
            l1 += e * space.cell_volume();
        }
        rows.push(ConvergenceRow {
            dx,
            linf,
            l1,
            substeps: run.substeps,
        });
    }
    let orders: Vec<(f64, f64)> = rows
        .windows(2)
        .map(|w| ((w[0].linf / w[1].linf).log2(), (w[0].l1 / w[1].l1).log2()))
        .collect();
    let monotone = rows.windows(2).all(|w| w[1].linf < w[0].linf && w[1].l1 < w[0].l1);
    Ok(ConvergenceTable {
        rows,
        orders,
        monotone,
    })
}
