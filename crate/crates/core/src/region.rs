//! Intrinsic space-time regions and node-counting measures.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};
use crate::params::EllipticityParams;

/// Volume of the unit ball in `n` dimensions.
pub fn unit_ball_volume(n: usize) -> f64 {
    // omega_n = omega_{n-2} * 2 pi / n
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(n - 2) * 2.0 * std::f64::consts::PI / n as f64,
    }
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Axis-aligned space-time box `[lo, hi] x [t_lo, t_hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundingBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub t_lo: f64,
    pub t_hi: f64,
}

/// A subset of space-time that can be tested pointwise.
///
/// `p` is the exponent that ties the time height of intrinsic regions to their
/// radius; regions that do not depend on it ignore it.
pub trait Region {
    fn contains(&self, x: &[f64], t: f64, p: f64) -> bool;

    /// A box containing the region, or `None` if it is unbounded.
    fn bounding_box(&self, p: f64) -> Option<BoundingBox>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// `B_rho(x0) x (t0 - theta rho^p, t0]`
    Past,
    /// `B_rho(x0) x [t0, t0 + theta rho^p)`
    Future,
    /// Union of the past and future cylinders.
    Full,
}

/// Intrinsic cylinder anchored at `(x0, t0)` with radius `rho` and time scale `theta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cylinder {
    pub x0: Vec<f64>,
    pub t0: f64,
    pub rho: f64,
    pub theta: f64,
    pub orientation: Orientation,
}

impl Cylinder {
    pub fn new(x0: Vec<f64>, t0: f64, rho: f64, theta: f64, orientation: Orientation) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::invalid(format!("Cylinder: rho must be positive, got {rho}")));
        }
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(Error::invalid(format!(
                "Cylinder: theta must be positive, got {theta}"
            )));
        }
        if x0.is_empty() || !t0.is_finite() || x0.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("Cylinder: center must be a finite point"));
        }
        Ok(Self {
            x0,
            t0,
            rho,
            theta,
            orientation,
        })
    }

    pub fn past(x0: Vec<f64>, t0: f64, rho: f64, theta: f64) -> Result<Self> {
        Self::new(x0, t0, rho, theta, Orientation::Past)
    }

    pub fn future(x0: Vec<f64>, t0: f64, rho: f64, theta: f64) -> Result<Self> {
        Self::new(x0, t0, rho, theta, Orientation::Future)
    }

    /// Time height `theta rho^p`.
    pub fn height(&self, p: f64) -> f64 {
        self.theta * self.rho.powf(p)
    }

    /// Lebesgue measure of the cylinder.
    pub fn measure(&self, p: f64) -> f64 {
        let base = unit_ball_volume(self.x0.len()) * self.rho.powi(self.x0.len() as i32);
        let h = self.height(p);
        match self.orientation {
            Orientation::Full => base * 2.0 * h,
            _ => base * h,
        }
    }

    /// Same cylinder with radius multiplied by `k`.
    pub fn dilate(&self, k: f64) -> Cylinder {
        Cylinder {
            rho: self.rho * k,
            ..self.clone()
        }
    }

    /// Membership with the exponent taken from `params`.
    pub fn contains_point(&self, x: &[f64], t: f64, params: &EllipticityParams) -> bool {
        self.contains(x, t, params.p())
    }
}

impl Region for Cylinder {
    fn contains(&self, x: &[f64], t: f64, p: f64) -> bool {
        if dist2(x, &self.x0) >= self.rho * self.rho {
            return false;
        }
        let h = self.height(p);
        let dt = t - self.t0;
        match self.orientation {
            Orientation::Past => -h < dt && dt <= 0.0,
            Orientation::Future => 0.0 <= dt && dt < h,
            Orientation::Full => -h < dt && dt < h,
        }
    }

    fn bounding_box(&self, p: f64) -> Option<BoundingBox> {
        let h = self.height(p);
        let (t_lo, t_hi) = match self.orientation {
            Orientation::Past => (self.t0 - h, self.t0),
            Orientation::Future => (self.t0, self.t0 + h),
            Orientation::Full => (self.t0 - h, self.t0 + h),
        };
        Some(BoundingBox {
            lo: self.x0.iter().map(|c| c - self.rho).collect(),
            hi: self.x0.iter().map(|c| c + self.rho).collect(),
            t_lo,
            t_hi,
        })
    }
}

/// `{(x, t) : theta |x - x0|^p <= t - t0 <= r}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParaboloidSet {
    pub x0: Vec<f64>,
    pub t0: f64,
    pub theta: f64,
    pub r: f64,
}

impl ParaboloidSet {
    pub fn new(x0: Vec<f64>, t0: f64, theta: f64, r: f64) -> Result<Self> {
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(Error::invalid(format!(
                "ParaboloidSet: theta must be positive, got {theta}"
            )));
        }
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::invalid(format!(
                "ParaboloidSet: height r must be positive, got {r}"
            )));
        }
        if x0.is_empty() {
            return Err(Error::invalid("ParaboloidSet: vertex must have a dimension"));
        }
        Ok(Self { x0, t0, theta, r })
    }
}

impl Region for ParaboloidSet {
    fn contains(&self, x: &[f64], t: f64, p: f64) -> bool {
        let dt = t - self.t0;
        dt <= self.r && self.theta * dist2(x, &self.x0).sqrt().powf(p) <= dt
    }

    fn bounding_box(&self, p: f64) -> Option<BoundingBox> {
        let radius = (self.r / self.theta).powf(1.0 / p);
        Some(BoundingBox {
            lo: self.x0.iter().map(|c| c - radius).collect(),
            hi: self.x0.iter().map(|c| c + radius).collect(),
            t_lo: self.t0,
            t_hi: self.t0 + self.r,
        })
    }
}

/// Region given by an arbitrary membership test.
pub struct Predicate<F> {
    test: F,
    bounds: Option<BoundingBox>,
}

impl<F: Fn(&[f64], f64) -> bool> Predicate<F> {
    pub fn new(test: F) -> Self {
        Self { test, bounds: None }
    }

    /// Restricts the node scan to `bounds`; the test must be false outside it.
    pub fn within(test: F, bounds: BoundingBox) -> Self {
        Self {
            test,
            bounds: Some(bounds),
        }
    }
}

impl<F: Fn(&[f64], f64) -> bool> Region for Predicate<F> {
    fn contains(&self, x: &[f64], t: f64, _p: f64) -> bool {
        (self.test)(x, t)
    }

    fn bounding_box(&self, _p: f64) -> Option<BoundingBox> {
        self.bounds.clone()
    }
}

/// Intersection of two regions.
pub struct Intersection<A, B>(pub A, pub B);

impl<A: Region, B: Region> Region for Intersection<A, B> {
    fn contains(&self, x: &[f64], t: f64, p: f64) -> bool {
        self.0.contains(x, t, p) && self.1.contains(x, t, p)
    }

    fn bounding_box(&self, p: f64) -> Option<BoundingBox> {
        match (self.0.bounding_box(p), self.1.bounding_box(p)) {
            (Some(a), Some(b)) => Some(BoundingBox {
                lo: a.lo.iter().zip(&b.lo).map(|(x, y)| x.max(*y)).collect(),
                hi: a.hi.iter().zip(&b.hi).map(|(x, y)| x.min(*y)).collect(),
                t_lo: a.t_lo.max(b.t_lo),
                t_hi: a.t_hi.min(b.t_hi),
            }),
            (Some(a), None) => Some(a),
            (None, b) => b,
        }
    }
}

/// Calls `f(j, flat, x, t)` for every grid node inside `region`.
pub fn for_each_node_in<R: Region + ?Sized>(
    grid: &Grid,
    region: &R,
    p: f64,
    mut f: impl FnMut(usize, usize, &[f64], f64),
) {
    let space = grid.space();
    let (ranges, time) = match region.bounding_box(p) {
        Some(b) => {
            let Some(ranges) = space.index_box(&b.lo, &b.hi) else {
                return;
            };
            let Some(time) = grid.time_range(b.t_lo, b.t_hi) else {
                return;
            };
            (ranges, time)
        }
        None => (
            space.shape().iter().map(|&m| (0, m - 1)).collect(),
            (0, grid.n_time() - 1),
        ),
    };
    for j in time.0..=time.1 {
        let t = grid.time(j);
        space.for_each_in_box(&ranges, |flat, x| {
            if region.contains(x, t, p) {
                f(j, flat, x, t);
            }
        });
    }
}

/// Number of grid nodes inside `region`.
pub fn count_nodes<R: Region + ?Sized>(region: &R, grid: &Grid, p: f64) -> usize {
    let mut count = 0;
    for_each_node_in(grid, region, p, |_, _, _, _| count += 1);
    count
}

/// Node-counting estimate of the Lebesgue measure of `region` within the grid.
pub fn region_measure<R: Region + ?Sized>(region: &R, grid: &Grid, params: &EllipticityParams) -> f64 {
    count_nodes(region, grid, params.p()) as f64 * grid.cell_volume()
}

/// Measure of the nodes in `region` where the field value satisfies `keep`.
pub fn measure_where<R: Region + ?Sized>(
    u: &ScalarField,
    region: &R,
    p: f64,
    keep: impl Fn(f64) -> bool,
) -> f64 {
    let mut count = 0usize;
    for_each_node_in(u.grid(), region, p, |j, flat, _, _| {
        if keep(u.at(j, flat)) {
            count += 1;
        }
    });
    count as f64 * u.grid().cell_volume()
}

/// Errors unless the grid's bounding box contains the closure of `region`.
pub fn require_covered<R: Region + ?Sized>(grid: &Grid, region: &R, p: f64, what: &str) -> Result<()> {
    let b = region
        .bounding_box(p)
        .ok_or_else(|| Error::domain(format!("{what}: region is unbounded")))?;
    if grid.covers(&b.lo, &b.hi, b.t_lo, b.t_hi) {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "{what}: needs the field on x in {:?}..{:?}, t in [{}, {}], but the field covers x in {:?}..{:?}, t in [{}, {}]",
            b.lo,
            b.hi,
            b.t_lo,
            b.t_hi,
            grid.space().lower(),
            (0..grid.dim()).map(|a| grid.space().upper(a)).collect::<Vec<_>>(),
            grid.t_start(),
            grid.t_end()
        )))
    }
}
