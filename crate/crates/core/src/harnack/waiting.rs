//! Backward waiting times for the blow-up example family.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::EllipticityParams;
use crate::solutions::{AnalyticSolution, ExampleSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WaitingTimeConfig {
    /// Values of `C0` as multiples of `8^p`.
    pub c0_multiples: Vec<f64>,
    /// Harnack constant `C` in `sup u_k <= C u_k(0, 0)`.
    pub c: f64,
    /// Family index `k`; must exceed every `C0` so that `u_k(0, 0) = 1`.
    pub k: u64,
    pub rho: f64,
    pub theta_lo: f64,
    pub theta_hi: f64,
    /// Relative bracket width at which bisection stops.
    pub rel_tol: f64,
    /// Sample points per axis of the closed cylinder.
    pub samples: usize,
}

impl Default for WaitingTimeConfig {
    fn default() -> Self {
        Self {
            c0_multiples: vec![1.0, 2.0, 4.0, 8.0],
            c: 4.0,
            k: 10_000_000,
            rho: 0.125,
            theta_lo: 1e-6,
            theta_hi: 1e3,
            rel_tol: 1e-9,
            samples: 33,
        }
    }
}

/// Largest value of `u_k` over the closure of
/// `(0, -theta rho^p) + Q_rho^-(theta) = B_rho x (-2 theta rho^p, -theta rho^p]`,
/// sampled on a `samples x samples` lattice that contains `x = 0` and both
/// time ends.
pub fn example_backward_sup(spec: &ExampleSpec, theta: f64, rho: f64, samples: usize) -> Result<f64> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::invalid(format!("example cylinders need 0 < rho < 1, got {rho}")));
    }
    let m = samples.max(2) | 1;
    let h = theta * rho.powf(spec.p());
    let mut sup = f64::NEG_INFINITY;
    for i in 0..m {
        // open ball: stop short of |x| = rho, which the sup does not need
        let x = rho * (2.0 * i as f64 / (m - 1) as f64 - 1.0) * (1.0 - 1e-12);
        for j in 0..m {
            let t = -2.0 * h + h * j as f64 / (m - 1) as f64;
            sup = sup.max(spec.value(&[x], t)?);
        }
    }
    Ok(sup)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WaitingRow {
    pub c0: f64,
    /// Largest `theta_1` with `sup u_k <= C u_k(0, 0)` over the backward cylinder.
    pub theta1: f64,
    /// `8^p / C0`
    pub bound: f64,
    /// `u_k(0, t_k) = (C0 / k)^(-1/(p-2))`
    pub blow_up_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WaitingTable {
    pub rows: Vec<WaitingRow>,
    pub nonincreasing: bool,
    pub within_bound: bool,
}

/// Bisects, for every `C0`, the threshold `theta_1` at which the backward
/// supremum of `u_k` over `(0, -theta_1 rho^p) + Q_rho^-(theta_1)` first
/// exceeds `C u_k(0, 0)`.
pub fn waiting_time_scan(params: &EllipticityParams, cfg: &WaitingTimeConfig) -> Result<WaitingTable> {
    if !(cfg.c > 1.0) {
        return Err(Error::invalid(format!("waiting-time constant C must exceed 1, got {}", cfg.c)));
    }
    if !(cfg.theta_lo > 0.0 && cfg.theta_hi > cfg.theta_lo && cfg.rel_tol > 0.0) {
        return Err(Error::invalid("waiting-time bracket must satisfy 0 < theta_lo < theta_hi"));
    }
    let p = params.p();
    let unit = 8f64.powf(p);
    let rows: Vec<WaitingRow> = cfg
        .c0_multiples
        .par_iter()
        .map(|&mult| {
            let c0 = mult * unit;
            let spec = ExampleSpec::new(params, c0, cfg.k)?;
            if !spec.normalized_at_origin() {
                return Err(Error::invalid(format!(
                    "k = {} must exceed C0 = {c0} so that u_k(0, 0) = 1",
                    cfg.k
                )));
            }
            let level = cfg.c * spec.value(&[0.0], 0.0)?;
            let holds = |theta: f64| -> Result<bool> {
                Ok(example_backward_sup(&spec, theta, cfg.rho, cfg.samples)? <= level)
            };
            let (mut lo, mut hi) = (cfg.theta_lo, cfg.theta_hi);
            if !holds(lo)? || holds(hi)? {
                return Err(Error::numeric(format!(
                    "waiting-time bisection for C0 = {c0}: the bound must hold at theta = {lo} and fail at theta = {hi}"
                )));
            }
            while hi / lo - 1.0 > cfg.rel_tol {
                let mid = (lo * hi).sqrt();
                if holds(mid)? {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Ok(WaitingRow {
                c0,
                theta1: lo,
                bound: unit / c0,
                blow_up_value: spec.blow_up_value(),
            })
        })
        .collect::<Result<_>>()?;
    let mut order: Vec<&WaitingRow> = rows.iter().collect();
    order.sort_by(|a, b| a.c0.total_cmp(&b.c0));
    let nonincreasing = order.windows(2).all(|w| w[1].theta1 <= w[0].theta1);
    let within_bound = rows.iter().all(|r| r.theta1 <= r.bound);
    Ok(WaitingTable {
        rows,
        nonincreasing,
        within_bound,
    })
}
