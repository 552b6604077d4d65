//! Propagation of smallness from `(0, 0)` to small balls at earlier times.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::HarnackConfig;
use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};
use crate::params::EllipticityParams;

/// Upper end of the admissible window for `t0` at level `k`: `-1/2` for
/// `k = 1` and `-1 + 32^(-kp)` beyond.
pub fn propagation_window(k: u32, p: f64) -> f64 {
    if k == 1 {
        -0.5
    } else {
        -1.0 + 32f64.powf(-(k as f64) * p)
    }
}

/// Smallest field value over the nodes of `B_radius(x0)` at time `t0`, with
/// its node. Ties go to the lowest flat index.
pub fn ball_min(u: &ScalarField, x0: &[f64], t0: f64, radius: f64) -> Result<(Vec<f64>, f64)> {
    let grid = u.grid();
    let space = grid.space();
    if x0.len() != space.dim() {
        return Err(Error::invalid("ball center has the wrong dimension"));
    }
    if radius < space.dx() {
        return Err(Error::domain(format!(
            "ball of radius {radius} is below the grid spacing dx = {}; refine the grid",
            space.dx()
        )));
    }
    let j = grid
        .time_index(t0)
        .ok_or_else(|| Error::domain(format!("time t0 = {t0} is not a node of the field's grid")))?;
    let lo: Vec<f64> = x0.iter().map(|c| c - radius).collect();
    let hi: Vec<f64> = x0.iter().map(|c| c + radius).collect();
    if !grid.covers(&lo, &hi, t0, t0) {
        return Err(Error::domain(format!(
            "ball B_{radius}({x0:?}) at t = {t0} leaves the field's spatial domain"
        )));
    }
    let ranges = space
        .index_box(&lo, &hi)
        .ok_or_else(|| Error::domain("ball misses the grid"))?;
    let r2 = radius * radius;
    let mut best: Option<(usize, f64)> = None;
    space.for_each_in_box(&ranges, |flat, x| {
        let d2: f64 = x.iter().zip(x0).map(|(a, b)| (a - b) * (a - b)).sum();
        if d2 < r2 {
            let v = u.at(j, flat);
            if best.is_none_or(|(_, b)| v < b) {
                best = Some((flat, v));
            }
        }
    });
    let (flat, v) = best.ok_or_else(|| Error::domain(format!("ball B_{radius}({x0:?}) holds no grid node")))?;
    Ok((space.point(flat), v))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropagationOutcome {
    pub found: bool,
    /// Node of smallest value in the ball.
    pub xbar: Vec<f64>,
    pub value: f64,
    /// `L0^k m0`
    pub threshold: f64,
    /// `32^(-k)`
    pub radius: f64,
}

fn origin_value(u: &ScalarField) -> Result<f64> {
    u.value_at(&vec![0.0; u.grid().dim()], 0.0)
}

/// Searches `B_{32^-k}(x0)` at time `t0` for a node where `u <= L0^k m0`.
pub fn propagation_check(
    u: &ScalarField,
    x0: &[f64],
    t0: f64,
    k: u32,
    cfg: &HarnackConfig,
    params: &EllipticityParams,
) -> Result<PropagationOutcome> {
    cfg.validate()?;
    if k == 0 {
        return Err(Error::invalid("propagation level k must be at least 1"));
    }
    let p = params.p();
    let norm = x0.iter().map(|v| v * v).sum::<f64>().sqrt();
    let t_hi = propagation_window(k, p);
    if !(norm < 4.0 / 3.0 && t0 > -3.0 && t0 <= t_hi) {
        return Err(Error::domain(format!(
            "propagation at level {k} needs x0 in B_4/3 and t0 in (-3, {t_hi}], got |x0| = {norm}, t0 = {t0}"
        )));
    }
    let origin = origin_value(u)?;
    if origin > cfg.m0 {
        return Err(Error::domain(format!(
            "propagation needs u(0, 0) <= m0 = {}, got {origin}",
            cfg.m0
        )));
    }
    let radius = 32f64.powi(-(k as i32));
    let (xbar, value) = ball_min(u, x0, t0, radius)?;
    let threshold = cfg.l0.powi(k as i32) * cfg.m0;
    Ok(PropagationOutcome {
        found: value <= threshold,
        xbar,
        value,
        threshold,
        radius,
    })
}

/// Nodes `(x0, t0)` of `grid` in `B_4/3 x (-3, -1/2]`, taking every
/// `stride`-th node along each axis and every `t_stride`-th time slice.
pub fn propagation_samples(grid: &Grid, stride: usize, t_stride: usize) -> Vec<(Vec<f64>, f64)> {
    let stride = stride.max(1);
    let space = grid.space();
    let mut out = Vec::new();
    for j in (0..grid.n_time()).step_by(t_stride.max(1)) {
        let t = grid.time(j);
        if !(t > -3.0 && t <= -0.5) {
            continue;
        }
        for flat in 0..space.len() {
            let idx = space.multi_index(flat);
            if idx.iter().any(|i| i % stride != 0) {
                continue;
            }
            let x = space.point(flat);
            if x.iter().map(|v| v * v).sum::<f64>() < 16.0 / 9.0 {
                out.push((x, t));
            }
        }
    }
    out
}

/// Geometric grid `lo (hi/lo)^(i/(steps-1))`, `i = 0..steps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogGrid {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl LogGrid {
    pub fn values(&self) -> Result<Vec<f64>> {
        if !(self.lo > 0.0 && self.hi >= self.lo && self.hi.is_finite()) || self.steps == 0 {
            return Err(Error::invalid(format!("invalid logarithmic grid {self:?}")));
        }
        if self.steps == 1 {
            return Ok(vec![self.lo]);
        }
        let ratio = self.hi / self.lo;
        Ok((0..self.steps)
            .map(|i| {
                if i + 1 == self.steps {
                    self.hi
                } else {
                    self.lo * ratio.powf(i as f64 / (self.steps - 1) as f64)
                }
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropagationWitness {
    pub member: usize,
    pub x0: Vec<f64>,
    pub t0: f64,
    /// Smallest value in the ball around `x0`.
    pub ball_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropagationConstants {
    pub m0: f64,
    /// Smallest grid value of `L0` that passes, if any.
    pub l0: Option<f64>,
    /// `max ball_min / m0` over members and samples.
    pub required: f64,
    /// The sample attaining `required`.
    pub witness: PropagationWitness,
}

/// Smallest `L0` on `l0_grid` such that every member has a node with
/// `u <= L0 m0` in `B_radius(x0)` at `t0` for every sample.
///
/// Geometry is passed in rather than fixed to `B_4/3 x (-3, -1/2]` and radius
/// `1/32`, so a rescaled family can be measured with rescaled samples; see
/// [`propagation_samples`] for the standard choice.
pub fn find_propagation_constants(
    family: &[ScalarField],
    m0: f64,
    samples: &[(Vec<f64>, f64)],
    radius: f64,
    l0_grid: &LogGrid,
) -> Result<PropagationConstants> {
    if family.is_empty() || samples.is_empty() {
        return Err(Error::invalid("propagation constants need a nonempty family and sample set"));
    }
    if !(m0 > 0.0) {
        return Err(Error::invalid(format!("m0 must be positive, got {m0}")));
    }
    let grid_values = l0_grid.values()?;
    for (i, u) in family.iter().enumerate() {
        let origin = origin_value(u)?;
        if origin > m0 {
            return Err(Error::domain(format!(
                "family member {i} has u(0, 0) = {origin} above m0 = {m0}"
            )));
        }
    }
    let per_member: Vec<PropagationWitness> = family
        .par_iter()
        .enumerate()
        .map(|(member, u)| {
            let mut worst: Option<PropagationWitness> = None;
            for (x0, t0) in samples {
                let (_, v) = ball_min(u, x0, *t0, radius)?;
                if worst.as_ref().is_none_or(|w| v > w.ball_min) {
                    worst = Some(PropagationWitness {
                        member,
                        x0: x0.clone(),
                        t0: *t0,
                        ball_min: v,
                    });
                }
            }
            Ok(worst.expect("samples are nonempty"))
        })
        .collect::<Result<_>>()?;
    let witness = per_member
        .into_iter()
        .reduce(|a, b| if b.ball_min > a.ball_min { b } else { a })
        .expect("family is nonempty");
    let l0 = grid_values.into_iter().find(|&l| witness.ball_min <= l * m0);
    Ok(PropagationConstants {
        m0,
        l0,
        required: witness.ball_min / m0,
        witness,
    })
}
