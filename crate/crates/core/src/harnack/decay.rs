//! Superlevel-set measures on `B_1 x (-2, -1]`.

use serde::Serialize;

use super::require_nonnegative;
use crate::error::{Error, Result};
use crate::grid::ScalarField;
use crate::params::EllipticityParams;
use crate::region::{measure_where, require_covered, unit_ball_volume, Cylinder};

/// `B_1 x (-2, -1]`
fn decay_region(n: usize) -> Cylinder {
    Cylinder::past(vec![0.0; n], -1.0, 1.0, 1.0).expect("fixed cylinder is valid")
}

fn prepare(u: &ScalarField, params: &EllipticityParams, what: &str) -> Result<Cylinder> {
    if u.grid().dim() != params.n() {
        return Err(Error::invalid(format!(
            "{what}: field dimension {} differs from n = {}",
            u.grid().dim(),
            params.n()
        )));
    }
    let region = decay_region(params.n());
    require_covered(u.grid(), &region, params.p(), what)?;
    require_nonnegative(u, &region, params.p(), what)?;
    Ok(region)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayRow {
    pub k: u32,
    /// `L^k m0`
    pub threshold: f64,
    pub measure: f64,
    /// `ln measure - (ln C + k ln eta)`, absent for zero measures.
    pub fit_residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayTable {
    pub rows: Vec<DecayRow>,
    pub c: f64,
    pub eta: f64,
    /// Fewer than two positive measures, so no fit was possible; `eta` is 0.
    pub degenerate: bool,
    pub monotone: bool,
}

/// Measures `|{u > L^k m0} ∩ B_1 x (-2, -1]|` for `k = 1..=k_max` and fits
/// `C eta^k` by least squares in `ln` on the positive entries.
pub fn level_set_decay(
    u: &ScalarField,
    m0: f64,
    l: f64,
    k_max: u32,
    params: &EllipticityParams,
) -> Result<DecayTable> {
    if !(m0 > 0.0 && l > 1.0 && l.is_finite()) {
        return Err(Error::invalid(format!("decay needs m0 > 0 and L > 1, got m0 = {m0}, L = {l}")));
    }
    if k_max == 0 {
        return Err(Error::invalid("decay needs k_max >= 1"));
    }
    let region = prepare(u, params, "level-set decay on B_1 x (-2, -1]")?;
    let mut rows: Vec<DecayRow> = (1..=k_max)
        .map(|k| {
            let threshold = l.powi(k as i32) * m0;
            DecayRow {
                k,
                threshold,
                measure: measure_where(u, &region, params.p(), |v| v > threshold),
                fit_residual: None,
            }
        })
        .collect();
    let monotone = rows.windows(2).all(|w| w[1].measure <= w[0].measure);
    let points: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.measure > 0.0)
        .map(|r| (r.k as f64, r.measure.ln()))
        .collect();
    if points.len() < 2 {
        let c = rows.iter().map(|r| r.measure).fold(0.0, f64::max);
        return Ok(DecayTable {
            rows,
            c,
            eta: 0.0,
            degenerate: true,
            monotone,
        });
    }
    let m = points.len() as f64;
    let kx = points.iter().map(|p| p.0).sum::<f64>() / m;
    let ly = points.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = points.iter().map(|p| (p.0 - kx) * (p.0 - kx)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - kx) * (p.1 - ly)).sum();
    let slope = sxy / sxx;
    let intercept = ly - slope * kx;
    for r in rows.iter_mut().filter(|r| r.measure > 0.0) {
        r.fit_residual = Some(r.measure.ln() - (intercept + slope * r.k as f64));
    }
    Ok(DecayTable {
        rows,
        c: intercept.exp(),
        eta: slope.exp(),
        degenerate: false,
        monotone,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityCheck {
    pub measure: f64,
    /// `omega_n / 4^(n+1)`
    pub bound: f64,
    pub passed: bool,
}

/// Compares `|{u >= L1 m0} ∩ B_1 x (-2, -1]|` with `omega_n / 4^(n+1)`.
pub fn density_check(u: &ScalarField, m0: f64, l1: f64, params: &EllipticityParams) -> Result<DensityCheck> {
    if !(m0 > 0.0 && l1 > 0.0) {
        return Err(Error::invalid(format!("density check needs m0, L1 > 0, got m0 = {m0}, L1 = {l1}")));
    }
    let n = params.n();
    let origin = u.value_at(&vec![0.0; n], 0.0)?;
    if origin > m0 {
        return Err(Error::domain(format!("density check needs u(0, 0) <= m0 = {m0}, got {origin}")));
    }
    let region = prepare(u, params, "density check on B_1 x (-2, -1]")?;
    let level = l1 * m0;
    let measure = measure_where(u, &region, params.p(), |v| v >= level);
    let bound = unit_ball_volume(n) / 4f64.powi(n as i32 + 1);
    Ok(DensityCheck {
        measure,
        bound,
        passed: measure <= bound,
    })
}
