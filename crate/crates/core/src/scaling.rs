//! Intrinsic scaling `v(x, t) = u(r x, r^p M^(2-p) t) / M`.
//!
//! The transform maps supersolutions of the degenerate equations to
//! supersolutions, so every measurement in this crate should be invariant under it.

use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};
use crate::params::EllipticityParams;

/// `(c / u0)^(p-2)`, the time scale of the intrinsic cylinder at value `u0`.
pub fn theta_from_value(c: f64, u0: f64, params: &EllipticityParams) -> Result<f64> {
    if !(u0 > 0.0) {
        return Err(Error::domain(format!(
            "intrinsic time scale needs a positive value, got u0 = {u0}"
        )));
    }
    if !(c > 0.0) {
        return Err(Error::invalid(format!("constant c must be positive, got {c}")));
    }
    Ok((c / u0).powf(params.p() - 2.0))
}

/// Time dilation `r^p M^(2-p)` paired with spatial factor `r` and value factor `M`.
pub fn time_factor(r: f64, m: f64, params: &EllipticityParams) -> f64 {
    r.powf(params.p()) * m.powf(2.0 - params.p())
}

/// How [`intrinsic_rescale_onto`] obtains values at target nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Resample {
    /// Every target node must map to a source node; values are copied exactly.
    Exact,
    /// Multilinear interpolation in space and time.
    Multilinear,
}

fn check_factors(r: f64, m: f64) -> Result<()> {
    if !(r > 0.0 && r.is_finite() && m > 0.0 && m.is_finite()) {
        return Err(Error::invalid(format!(
            "scale factors must be positive, got r = {r}, M = {m}"
        )));
    }
    Ok(())
}

/// Rescaled field on the naturally rescaled grid: node `(x, t)` of the result
/// corresponds to node `(r x, tau t)` of `u`, so no interpolation happens.
pub fn intrinsic_rescale(u: &ScalarField, r: f64, m: f64, params: &EllipticityParams) -> Result<ScalarField> {
    check_factors(r, m)?;
    let tau = time_factor(r, m, params);
    let grid = u.grid().scaled(r, tau);
    ScalarField::from_values(grid, u.values().iter().map(|v| v / m).collect())
}

/// Rescaled field sampled on an arbitrary target grid.
pub fn intrinsic_rescale_onto(
    u: &ScalarField,
    r: f64,
    m: f64,
    params: &EllipticityParams,
    target: &Grid,
    mode: Resample,
) -> Result<ScalarField> {
    check_factors(r, m)?;
    if target.dim() != u.grid().dim() {
        return Err(Error::invalid("rescale target grid has a different dimension"));
    }
    let tau = time_factor(r, m, params);
    let src = u.grid();
    let n = src.dim();
    let mut y = vec![0.0; n];
    ScalarField::try_from_fn(target.clone(), |x, t| {
        for a in 0..n {
            y[a] = r * x[a];
        }
        let s = tau * t;
        match mode {
            Resample::Exact => {
                let flat = src.space().node_at(&y).ok_or_else(|| {
                    Error::NotNodePreserving(format!(
                        "target node x = {x:?} maps to {y:?}, which is not a source node (r = {r})"
                    ))
                })?;
                let j = src.time_index(s).ok_or_else(|| {
                    Error::NotNodePreserving(format!(
                        "target time t = {t} maps to {s}, which is not a source time (time factor {tau})"
                    ))
                })?;
                Ok(u.at(j, flat) / m)
            }
            Resample::Multilinear => Ok(interpolate(u, &y, s)? / m),
        }
    })
}

/// Multilinear interpolation of `u` at `(x, t)`; errors outside the grid.
pub fn interpolate(u: &ScalarField, x: &[f64], t: f64) -> Result<f64> {
    let grid = u.grid();
    let space = grid.space();
    let n = space.dim();
    let locate = |r: f64, m: usize| -> Option<(usize, f64)> {
        let tol = 1e-9;
        if r < -tol || r > (m - 1) as f64 + tol {
            return None;
        }
        let r = r.clamp(0.0, (m - 1) as f64);
        let i = (r.floor() as usize).min(m - 2);
        Some((i, r - i as f64))
    };
    let (j, wt) = locate((t - grid.t_start()) / grid.dt(), grid.n_time())
        .ok_or_else(|| Error::domain(format!("interpolation time t = {t} outside the field")))?;
    let mut base = Vec::with_capacity(n);
    let mut weight = Vec::with_capacity(n);
    for a in 0..n {
        let (i, w) = locate((x[a] - space.lower()[a]) / space.dx(), space.shape()[a])
            .ok_or_else(|| Error::domain(format!("interpolation point x = {x:?} outside the field")))?;
        base.push(i);
        weight.push(w);
    }
    let strides = space.strides();
    let origin: usize = base.iter().zip(&strides).map(|(i, s)| i * s).sum();
    let mut acc = 0.0;
    for corner in 0..(1usize << (n + 1)) {
        let mut w = if corner & 1 == 1 { wt } else { 1.0 - wt };
        let jj = j + (corner & 1);
        let mut flat = origin;
        for a in 0..n {
            if corner >> (a + 1) & 1 == 1 {
                w *= weight[a];
                flat += strides[a];
            } else {
                w *= 1.0 - weight[a];
            }
        }
        if w != 0.0 {
            acc += w * u.at(jj, flat);
        }
    }
    Ok(acc)
}
