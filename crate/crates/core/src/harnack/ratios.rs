//! Weak and intrinsic Harnack ratios at a single point.

use serde::Serialize;

use super::{require_nonnegative, HarnackConfig};
use crate::error::{Error, Result};
use crate::grid::ScalarField;
use crate::params::EllipticityParams;
use crate::region::{for_each_node_in, require_covered, Cylinder};
use crate::scaling::theta_from_value;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeakHarnack {
    /// `(mean of u^eps over Q)^(1/eps)`
    pub lhs: f64,
    /// `u(x0, t0)`
    pub rhs: f64,
    pub ratio: f64,
    pub theta: f64,
    pub eps: f64,
    /// Grid nodes in the averaging cylinder.
    pub nodes: usize,
}

fn point_value(u: &ScalarField, x0: &[f64], t0: f64) -> Result<f64> {
    let v = u.value_at(x0, t0)?;
    if !(v > 0.0) {
        return Err(Error::domain(format!(
            "Harnack ratios need u(x0, t0) > 0, got u({x0:?}, {t0}) = {v}"
        )));
    }
    Ok(v)
}

fn check_rho(rho: f64) -> Result<()> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::invalid(format!("radius must be positive, got rho = {rho}")));
    }
    Ok(())
}

/// Empirical constant of the weak Harnack inequality at `(x0, t0)`.
///
/// With `theta = (c_weak / u(x0, t0))^(p-2)` the average runs over
/// `(x0, t0 - theta rho^p) + Q_rho^-(theta)` by node sums. Values enter as
/// `u / u(x0, t0)`, so constant fields give a ratio of exactly 1.
pub fn weak_harnack_ratio(
    u: &ScalarField,
    x0: &[f64],
    t0: f64,
    rho: f64,
    cfg: &HarnackConfig,
    params: &EllipticityParams,
) -> Result<WeakHarnack> {
    cfg.validate()?;
    check_rho(rho)?;
    let p = params.p();
    let u0 = point_value(u, x0, t0)?;
    let theta = theta_from_value(cfg.c_weak, u0, params)?;
    let outer = Cylinder::past(x0.to_vec(), t0, 3.0 * rho, theta)?;
    require_covered(u.grid(), &outer, p, "weak Harnack cylinder (x0, t0) + Q_3rho^-(theta)")?;
    require_nonnegative(u, &outer, p, "weak Harnack")?;
    let q = Cylinder::past(x0.to_vec(), t0 - theta * rho.powf(p), rho, theta)?;
    let eps = cfg.eps_weak;
    let mut sum = 0.0;
    let mut nodes = 0usize;
    for_each_node_in(u.grid(), &q, p, |j, flat, _, _| {
        sum += (u.at(j, flat) / u0).powf(eps);
        nodes += 1;
    });
    if nodes == 0 {
        return Err(Error::domain(format!(
            "weak Harnack: no grid nodes in the averaging cylinder of radius {rho} and height {}; refine the grid",
            theta * rho.powf(p)
        )));
    }
    let ratio = (sum / nodes as f64).powf(1.0 / eps);
    Ok(WeakHarnack {
        lhs: ratio * u0,
        rhs: u0,
        ratio,
        theta,
        eps,
        nodes,
    })
}

/// One side of the intrinsic Harnack inequality.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SideRatio {
    /// `sup u / u(x0, t0)` backward, `u(x0, t0) / inf u` forward; `+inf` when
    /// the forward infimum vanishes.
    pub ratio: f64,
    pub theta: f64,
    /// The supremum or infimum itself.
    pub extremum: f64,
    pub value: f64,
    pub nodes: usize,
}

/// `sup u / u(x0, t0)` over `Q^- = (x0, t0 - theta_1 rho^p) + Q_rho^-(theta_1)`.
///
/// The field must cover `(x0, t0) + Q_4rho^-(theta_1)` and be nonnegative there.
pub fn backward_ratio(
    u: &ScalarField,
    x0: &[f64],
    t0: f64,
    rho: f64,
    c1: f64,
    params: &EllipticityParams,
) -> Result<SideRatio> {
    check_rho(rho)?;
    let p = params.p();
    let u0 = point_value(u, x0, t0)?;
    let theta = theta_from_value(c1, u0, params)?;
    let outer = Cylinder::past(x0.to_vec(), t0, 4.0 * rho, theta)?;
    require_covered(u.grid(), &outer, p, "backward Harnack cylinder (x0, t0) + Q_4rho^-(theta_1)")?;
    require_nonnegative(u, &outer, p, "backward Harnack")?;
    let q = Cylinder::past(x0.to_vec(), t0 - theta * rho.powf(p), rho, theta)?;
    let (sup, nodes) = extremum(u, &q, p, f64::NEG_INFINITY, f64::max)?;
    Ok(SideRatio {
        ratio: sup / u0,
        theta,
        extremum: sup,
        value: u0,
        nodes,
    })
}

/// `u(x0, t0) / inf u` over `Q^+ = (x0, t0 + theta_2 rho^p) + Q_rho^+(theta_2)`.
///
/// The field must cover `(x0, t0 + 2 theta_2 rho^p) + Q_4rho^-(theta_2)` and be
/// nonnegative there.
pub fn forward_ratio(
    u: &ScalarField,
    x0: &[f64],
    t0: f64,
    rho: f64,
    c2: f64,
    params: &EllipticityParams,
) -> Result<SideRatio> {
    check_rho(rho)?;
    let p = params.p();
    let u0 = point_value(u, x0, t0)?;
    let theta = theta_from_value(c2, u0, params)?;
    let h = theta * rho.powf(p);
    let outer = Cylinder::past(x0.to_vec(), t0 + 2.0 * h, 4.0 * rho, theta)?;
    require_covered(
        u.grid(),
        &outer,
        p,
        "forward Harnack cylinder (x0, t0 + 2 theta_2 rho^p) + Q_4rho^-(theta_2)",
    )?;
    require_nonnegative(u, &outer, p, "forward Harnack")?;
    let q = Cylinder::future(x0.to_vec(), t0 + h, rho, theta)?;
    let (inf, nodes) = extremum(u, &q, p, f64::INFINITY, f64::min)?;
    let ratio = if inf > 0.0 { u0 / inf } else { f64::INFINITY };
    Ok(SideRatio {
        ratio,
        theta,
        extremum: inf,
        value: u0,
        nodes,
    })
}

fn extremum(
    u: &ScalarField,
    q: &Cylinder,
    p: f64,
    init: f64,
    pick: impl Fn(f64, f64) -> f64,
) -> Result<(f64, usize)> {
    let mut acc = init;
    let mut nodes = 0usize;
    for_each_node_in(u.grid(), q, p, |j, flat, _, _| {
        acc = pick(acc, u.at(j, flat));
        nodes += 1;
    });
    if nodes == 0 {
        return Err(Error::domain(format!(
            "Harnack cylinder of radius {} and height {} contains no grid nodes; refine the grid",
            q.rho,
            q.height(p)
        )));
    }
    Ok((acc, nodes))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HarnackRatios {
    pub sup_ratio: f64,
    pub inf_ratio: f64,
    pub theta1: f64,
    pub theta2: f64,
}

/// Both sides of the intrinsic Harnack inequality with `theta_i` from `c1_h`, `c2_h`.
pub fn harnack_ratios(
    u: &ScalarField,
    x0: &[f64],
    t0: f64,
    rho: f64,
    cfg: &HarnackConfig,
    params: &EllipticityParams,
) -> Result<HarnackRatios> {
    cfg.validate()?;
    let back = backward_ratio(u, x0, t0, rho, cfg.c1_h, params)?;
    let fwd = forward_ratio(u, x0, t0, rho, cfg.c2_h, params)?;
    Ok(HarnackRatios {
        sup_ratio: back.ratio,
        inf_ratio: fwd.ratio,
        theta1: back.theta,
        theta2: fwd.theta,
    })
}
