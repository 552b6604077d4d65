//! Measurements of Harnack-type constants on intrinsic cylinders.
//!
//! The constants in the weak and intrinsic Harnack inequalities are only known
//! to exist, so every operation here measures an empirical value on a sampled
//! field and reports it rather than asserting a target.

mod barrier_scan;
mod decay;
mod propagation;
mod ratios;
mod waiting;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};
use crate::region::{for_each_node_in, Region};

pub use barrier_scan::{
    barrier_sample_check, find_barrier_params, BarrierPoint, BarrierSampleReport, BarrierScan, BarrierScanConfig,
};
pub use decay::{density_check, level_set_decay, DecayRow, DecayTable, DensityCheck};
pub use propagation::{
    ball_min, find_propagation_constants, propagation_check, propagation_samples, propagation_window, LogGrid,
    PropagationConstants, PropagationOutcome, PropagationWitness,
};
pub use ratios::{backward_ratio, forward_ratio, harnack_ratios, weak_harnack_ratio, HarnackRatios, SideRatio, WeakHarnack};
pub use waiting::{example_backward_sup, waiting_time_scan, WaitingRow, WaitingTable, WaitingTimeConfig};

/// Constants of the weak and intrinsic Harnack inequalities and of the
/// propagation estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HarnackConfig {
    /// `c` in `theta = (c / u(x0, t0))^(p-2)` for the weak inequality.
    pub c_weak: f64,
    /// Constant of the backward time scale `theta_1`.
    pub c1_h: f64,
    /// Constant of the forward time scale `theta_2`; at least `c1_h`.
    pub c2_h: f64,
    /// Integrability exponent of the weak inequality.
    pub eps_weak: f64,
    pub m0: f64,
    pub l0: f64,
    pub l1: f64,
    pub nu: f64,
    pub rho0: f64,
    /// Largest level index used by the decay table.
    pub k_max: u32,
}

impl Default for HarnackConfig {
    fn default() -> Self {
        Self {
            c_weak: 1.0,
            c1_h: 1.0,
            c2_h: 1.0,
            eps_weak: 0.5,
            m0: 0.5,
            l0: 2.0,
            l1: 4.0,
            nu: 2.0,
            rho0: 0.5,
            k_max: 4,
        }
    }
}

impl HarnackConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("c_weak", self.c_weak),
            ("c1_h", self.c1_h),
            ("c2_h", self.c2_h),
            ("eps_weak", self.eps_weak),
            ("m0", self.m0),
            ("l0", self.l0),
            ("l1", self.l1),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("HarnackConfig: {name} must be positive, got {v}")));
            }
        }
        if !(self.nu > 1.0 && self.nu.is_finite()) {
            return Err(Error::invalid(format!("HarnackConfig: nu must exceed 1, got {}", self.nu)));
        }
        if !(self.rho0 > 0.0 && self.rho0 < 1.0) {
            return Err(Error::invalid(format!("HarnackConfig: rho0 must lie in (0, 1), got {}", self.rho0)));
        }
        if self.c2_h < self.c1_h {
            return Err(Error::invalid(format!(
                "HarnackConfig: c2_h = {} must be at least c1_h = {}",
                self.c2_h, self.c1_h
            )));
        }
        if self.k_max == 0 {
            return Err(Error::invalid("HarnackConfig: k_max must be at least 1"));
        }
        Ok(())
    }

    /// Level ratio `L = 4 L0` of the decay estimate.
    pub fn decay_ratio(&self) -> f64 {
        4.0 * self.l0
    }

    /// `a_k = L^(-k(p-2))` with `L = 4 L0`.
    pub fn a_k(&self, k: u32, p: f64) -> f64 {
        self.decay_ratio().powf(-(k as f64) * (p - 2.0))
    }

    /// `b_k = nu^(-k(p-2))`.
    pub fn b_k(&self, k: u32, p: f64) -> f64 {
        self.nu.powf(-(k as f64) * (p - 2.0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMetadata {
    pub dim: usize,
    pub dx: f64,
    pub dt: f64,
    pub shape: Vec<usize>,
    pub n_time: usize,
    pub t_start: f64,
    pub t_end: f64,
}

impl From<&Grid> for GridMetadata {
    fn from(g: &Grid) -> Self {
        Self {
            dim: g.dim(),
            dx: g.dx(),
            dt: g.dt(),
            shape: g.space().shape().to_vec(),
            n_time: g.n_time(),
            t_start: g.t_start(),
            t_end: g.t_end(),
        }
    }
}

/// Headline numbers of one measurement with the grid they were taken on and
/// their relative change under refinement.
///
/// Infinite values (a vanishing infimum) are kept in `infinite` so that
/// `values` stays finite and serializes to plain JSON numbers.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MeasurementReport {
    pub kind: String,
    pub values: BTreeMap<String, f64>,
    pub infinite: Vec<String>,
    pub grid: Option<GridMetadata>,
    pub refined_grid: Option<GridMetadata>,
    /// `|fine - coarse| / max(|coarse|, tiny)` for every value present in both.
    pub refinement_deltas: BTreeMap<String, f64>,
}

impl MeasurementReport {
    pub fn new(kind: impl Into<String>, grid: Option<&Grid>) -> Self {
        Self {
            kind: kind.into(),
            grid: grid.map(GridMetadata::from),
            ..Self::default()
        }
    }

    pub fn record(&mut self, name: impl Into<String>, value: f64) -> &mut Self {
        let name = name.into();
        if value.is_finite() {
            self.values.insert(name, value);
        } else {
            self.infinite.push(name);
        }
        self
    }

    /// Fills the refinement deltas from the same measurement on a finer grid.
    pub fn attach_refinement(&mut self, fine: &MeasurementReport) {
        self.refined_grid = fine.grid.clone();
        for (name, &coarse) in &self.values {
            if let Some(&f) = fine.values.get(name) {
                let delta = (f - coarse).abs() / coarse.abs().max(f64::MIN_POSITIVE);
                self.refinement_deltas.insert(name.clone(), delta);
            }
        }
    }
}

/// Errors if `u` takes a negative value at a node of `region`.
pub(crate) fn require_nonnegative<R: Region + ?Sized>(u: &ScalarField, region: &R, p: f64, what: &str) -> Result<()> {
    let mut bad: Option<(Vec<f64>, f64, f64)> = None;
    for_each_node_in(u.grid(), region, p, |j, flat, x, t| {
        let v = u.at(j, flat);
        if bad.is_none() && !(v >= 0.0) {
            bad = Some((x.to_vec(), t, v));
        }
    });
    match bad {
        None => Ok(()),
        Some((x, t, v)) => Err(Error::domain(format!(
            "{what}: the field must be nonnegative, found u({x:?}, {t}) = {v}"
        ))),
    }
}
