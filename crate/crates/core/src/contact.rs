//! Sliding test functions on a grid: first-touch detection, the contact map
//! `(x, t) -> (y, s)`, contact-set measures and the measure estimates built on them.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::ScalarField;
use crate::params::EllipticityParams;
use crate::region::{measure_where, BoundingBox, region_measure, require_covered, Cylinder, Intersection, ParaboloidSet, Predicate};
use crate::scaling::time_factor;
use crate::solutions::ContactFnSpec;

/// Vertices `(y, s)` of the sliding functions, each standing for a space-time
/// cell of volume `cell_volume`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSet {
    samples: Vec<(Vec<f64>, f64)>,
    cell_volume: f64,
}

impl ParameterSet {
    pub fn new(samples: Vec<(Vec<f64>, f64)>, cell_volume: f64) -> Result<Self> {
        if !(cell_volume > 0.0 && cell_volume.is_finite()) {
            return Err(Error::invalid(format!(
                "ParameterSet: cell volume must be positive, got {cell_volume}"
            )));
        }
        if samples.is_empty() {
            return Err(Error::invalid("ParameterSet: no samples"));
        }
        let n = samples[0].0.len();
        let mut seen = HashSet::with_capacity(samples.len());
        for (y, s) in &samples {
            if y.len() != n {
                return Err(Error::invalid("ParameterSet: samples differ in dimension"));
            }
            let key: Vec<u64> = y.iter().chain(std::iter::once(s)).map(|v| v.to_bits()).collect();
            if !seen.insert(key) {
                return Err(Error::invalid(format!("ParameterSet: duplicate sample y = {y:?}, s = {s}")));
            }
        }
        Ok(Self { samples, cell_volume })
    }

    /// Midpoints of a regular `per_axis^n x n_s` subdivision of
    /// `[y_lo, y_hi]^n x [s_lo, s_hi]`, keeping only `|y| <= y_radius`.
    pub fn boxed(
        n: usize,
        y_radius: f64,
        s_range: (f64, f64),
        per_axis: usize,
        n_s: usize,
    ) -> Result<Self> {
        if per_axis == 0 || n_s == 0 || n == 0 {
            return Err(Error::invalid("ParameterSet: sample counts must be positive"));
        }
        if !(y_radius > 0.0) || !(s_range.1 > s_range.0) {
            return Err(Error::invalid("ParameterSet: empty parameter box"));
        }
        let hy = 2.0 * y_radius / per_axis as f64;
        let hs = (s_range.1 - s_range.0) / n_s as f64;
        let mut samples = Vec::new();
        let mut idx = vec![0usize; n];
        loop {
            let y: Vec<f64> = idx.iter().map(|&i| -y_radius + (i as f64 + 0.5) * hy).collect();
            if y.iter().map(|v| v * v).sum::<f64>() <= y_radius * y_radius {
                for k in 0..n_s {
                    samples.push((y.clone(), s_range.0 + (k as f64 + 0.5) * hs));
                }
            }
            let mut a = n;
            loop {
                if a == 0 {
                    return Self::new(samples, hy.powi(n as i32) * hs);
                }
                a -= 1;
                idx[a] += 1;
                if idx[a] < per_axis {
                    break;
                }
                idx[a] = 0;
            }
        }
    }

    /// The vertex set `|y| <= 1/16`, `-4 16^-p <= s <= -2 16^-p` used with the slope
    /// [`basic_slope`] to show that a supersolution with `u(0, 0) <= 1` stays below 4
    /// on a set of positive measure.
    pub fn basic(params: &EllipticityParams, per_axis: usize, n_s: usize) -> Result<Self> {
        let unit = 16f64.powf(-params.p());
        Self::boxed(params.n(), 1.0 / 16.0, (-4.0 * unit, -2.0 * unit), per_axis, n_s)
    }

    pub fn samples(&self) -> &[(Vec<f64>, f64)] {
        &self.samples
    }

    pub fn cell_volume(&self) -> f64 {
        self.cell_volume
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn measure(&self) -> f64 {
        self.samples.len() as f64 * self.cell_volume
    }

    /// Parameters and slope matching `v(x, t) = u(r x, tau t) / M`: if `phi_(y,s)`
    /// with slope `a` touches `u` at `(x, t)`, then the returned function for
    /// `(y / r, s / tau)` touches `v` at `(x / r, t / tau)`.
    pub fn rescaled(&self, a: f64, r: f64, m: f64, params: &EllipticityParams) -> Result<(Self, f64)> {
        let tau = time_factor(r, m, params);
        let samples = self
            .samples
            .iter()
            .map(|(y, s)| (y.iter().map(|v| v / r).collect(), s / tau))
            .collect();
        let volume = self.cell_volume / (r.powi(params.n() as i32) * tau);
        let a_new = a * r.powf(params.p()) * m.powf(1.0 - params.p());
        Ok((Self::new(samples, volume)?, a_new))
    }
}

/// Slope `a = 16^p` paired with [`ParameterSet::basic`].
pub fn basic_slope(params: &EllipticityParams) -> f64 {
    16f64.powf(params.p())
}

/// Outcome of sliding one test function up from below.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContactRecord {
    pub y: Vec<f64>,
    pub s: f64,
    /// Contact node; meaningful only when `touched`.
    pub x: Vec<f64>,
    pub t: f64,
    pub time_index: usize,
    pub flat: usize,
    pub touched: bool,
    /// `min_x (u - phi)(x, t)` on the contact slice, or on the last slice if untouched.
    pub gap: f64,
    pub tolerance: f64,
    /// Central-difference gradient of `u` at the contact node (zeros on the edge).
    pub gradient: Vec<f64>,
    pub value: f64,
    pub on_boundary: bool,
}

/// Sweeps the slices of `u` forward and stops at the first one where
/// `min_x (u - phi)` drops to the contact tolerance.
///
/// The tolerance is `2 L_x dx + L_t dt / 2`, with `L_x` and `L_t` the discrete
/// space and time slopes of `u - phi` around the minimizing node.
pub fn find_contact(u: &ScalarField, phi: &ContactFnSpec) -> Result<ContactRecord> {
    let grid = u.grid();
    let space = grid.space();
    if phi.y().len() != space.dim() {
        return Err(Error::invalid("contact vertex and field differ in dimension"));
    }
    let spatial = spatial_part(u, phi);
    let a = phi.a();
    let len = space.len();
    let gap_at = |j: usize, flat: usize| u.at(j, flat) - spatial[flat] - a * (grid.time(j) - phi.s());

    let mut last = (f64::INFINITY, 0usize, 0.0);
    for j in 0..grid.n_time() {
        let (mut d, mut arg) = (f64::INFINITY, 0usize);
        for flat in 0..len {
            let g = gap_at(j, flat);
            // strict comparison keeps the lowest index on ties
            if g < d {
                d = g;
                arg = flat;
            }
        }
        let tol = tolerance(u, j, arg, &gap_at);
        if d <= tol {
            if j == 0 && d < -tol {
                return Err(Error::domain(format!(
                    "test function with vertex y = {:?}, s = {} already lies above u on the first slice t = {}",
                    phi.y(),
                    phi.s(),
                    grid.time(0)
                )));
            }
            return Ok(record(u, phi, j, arg, d, tol, true));
        }
        last = (d, arg, tol);
    }
    let j = grid.n_time() - 1;
    Ok(record(u, phi, j, last.1, last.0, last.2, false))
}

fn spatial_part(u: &ScalarField, phi: &ContactFnSpec) -> Vec<f64> {
    let space = u.grid().space();
    let mut x = vec![0.0; space.dim()];
    (0..space.len())
        .map(|flat| {
            space.point_into(flat, &mut x);
            phi.spatial(&x)
        })
        .collect()
}

fn tolerance(u: &ScalarField, j: usize, flat: usize, gap: &impl Fn(usize, usize) -> f64) -> f64 {
    let grid = u.grid();
    let space = grid.space();
    let idx = space.multi_index(flat);
    let strides = space.strides();
    let g0 = gap(j, flat);
    let mut lx = 0.0f64;
    for (a, &st) in strides.iter().enumerate() {
        if idx[a] > 0 {
            lx = lx.max((gap(j, flat - st) - g0).abs());
        }
        if idx[a] + 1 < space.shape()[a] {
            lx = lx.max((gap(j, flat + st) - g0).abs());
        }
    }
    let mut lt = 0.0f64;
    if j > 0 {
        lt = lt.max((g0 - gap(j - 1, flat)).abs());
    }
    if j + 1 < grid.n_time() {
        lt = lt.max((gap(j + 1, flat) - g0).abs());
    }
    // lx and lt already carry one factor of dx and dt
    2.0 * lx + 0.5 * lt
}

fn record(u: &ScalarField, phi: &ContactFnSpec, j: usize, flat: usize, gap: f64, tol: f64, touched: bool) -> ContactRecord {
    let space = u.grid().space();
    let on_boundary = space.is_boundary(flat);
    let gradient = if on_boundary {
        vec![0.0; space.dim()]
    } else {
        let strides = space.strides();
        strides
            .iter()
            .map(|&st| (u.at(j, flat + st) - u.at(j, flat - st)) / (2.0 * space.dx()))
            .collect()
    };
    ContactRecord {
        y: phi.y().to_vec(),
        s: phi.s(),
        x: space.point(flat),
        t: u.grid().time(j),
        time_index: j,
        flat,
        touched,
        gap,
        tolerance: tol,
        gradient,
        value: u.at(j, flat),
        on_boundary,
    }
}

/// Distance between the recorded vertex and the one predicted by the contact
/// map from the discrete gradient at the contact node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MapResidual {
    pub dy: f64,
    pub ds: f64,
    /// False when the contact sits on the grid edge, where no central gradient exists.
    pub reliable: bool,
}

/// Vertex predicted by `y = x + a^-1 |Du|^(p-2) Du`,
/// `s = t - u / a - ((p-1)/p) a^-2 |Du|^p`.
pub fn predicted_vertex(x: &[f64], t: f64, value: f64, gradient: &[f64], a: f64, p: f64) -> (Vec<f64>, f64) {
    let norm = gradient.iter().map(|g| g * g).sum::<f64>().sqrt();
    let scale = if norm == 0.0 { 0.0 } else { norm.powf(p - 2.0) / a };
    let y = x.iter().zip(gradient).map(|(xi, g)| xi + scale * g).collect();
    let s = t - value / a - (p - 1.0) / p * norm.powf(p) / (a * a);
    (y, s)
}

pub fn contact_map_check(rec: &ContactRecord, a: f64, params: &EllipticityParams) -> Result<MapResidual> {
    if !rec.touched {
        return Err(Error::domain(format!(
            "contact map undefined: vertex y = {:?}, s = {} never touched",
            rec.y, rec.s
        )));
    }
    let (y, s) = predicted_vertex(&rec.x, rec.t, rec.value, &rec.gradient, a, params.p());
    let dy = y.iter().zip(&rec.y).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
    Ok(MapResidual {
        dy,
        ds: (s - rec.s).abs(),
        reliable: !rec.on_boundary,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContactSetMeasure {
    pub gamma_measure: f64,
    pub e_measure: f64,
    /// `gamma_measure / e_measure`, with `e_measure` counting touched parameters only.
    pub ratio: f64,
    pub touched: usize,
    pub untouched: usize,
    /// Number of grid cells each contact node is widened by in every direction.
    pub dilation: usize,
    pub records: Vec<ContactRecord>,
}

/// Finds the contact point of every parameter in `e` and measures the union of
/// contact nodes widened by `dilation` cells along each space-time axis.
pub fn contact_set_measure(
    u: &ScalarField,
    e: &ParameterSet,
    a: f64,
    dilation: usize,
    params: &EllipticityParams,
) -> Result<ContactSetMeasure> {
    let template = ContactFnSpec::new(e.samples()[0].0.clone(), e.samples()[0].1, a, params)?;
    let records: Vec<ContactRecord> = e
        .samples()
        .par_iter()
        .map(|(y, s)| find_contact(u, &template.with_vertex(y.clone(), *s)))
        .collect::<Result<_>>()?;
    let grid = u.grid();
    let space = grid.space();
    let n = space.dim();
    let d = dilation as isize;
    let mut cells: HashSet<(usize, usize)> = HashSet::new();
    let mut touched = 0;
    for rec in records.iter().filter(|r| r.touched) {
        touched += 1;
        let idx = space.multi_index(rec.flat);
        let mut offset = vec![-d; n + 1];
        'odometer: loop {
            let j = rec.time_index as isize + offset[n];
            let inside = j >= 0
                && (j as usize) < grid.n_time()
                && (0..n).all(|k| {
                    let i = idx[k] as isize + offset[k];
                    i >= 0 && (i as usize) < space.shape()[k]
                });
            if inside {
                let node: Vec<usize> = (0..n).map(|k| (idx[k] as isize + offset[k]) as usize).collect();
                cells.insert((j as usize, space.flat_index(&node)));
            }
            let mut k = n + 1;
            loop {
                if k == 0 {
                    break 'odometer;
                }
                k -= 1;
                if offset[k] < d {
                    offset[k] += 1;
                    break;
                }
                offset[k] = -d;
            }
        }
    }
    let gamma_measure = cells.len() as f64 * grid.cell_volume();
    let e_measure = touched as f64 * e.cell_volume();
    Ok(ContactSetMeasure {
        gamma_measure,
        e_measure,
        ratio: if touched > 0 { gamma_measure / e_measure } else { 0.0 },
        touched,
        untouched: records.len() - touched,
        dilation,
        records,
    })
}

/// `|{(x, t) in Q_1^- : u(x, t) < 4}|` by node counting, for `u >= 0` with
/// `u(0, 0) <= 1`.
pub fn basic_measure_estimate(u: &ScalarField, params: &EllipticityParams) -> Result<f64> {
    let n = u.grid().dim();
    let q = Cylinder::past(vec![0.0; n], 0.0, 1.0, 1.0)?;
    require_covered(u.grid(), &q, params.p(), "basic measure estimate")?;
    let origin = u.value_at(&vec![0.0; n], 0.0)?;
    if origin > 1.0 {
        return Err(Error::domain(format!("basic measure estimate needs u(0, 0) <= 1, got {origin}")));
    }
    require_nonnegative(u)?;
    Ok(measure_where(u, &q, params.p(), |v| v < 4.0))
}

fn require_nonnegative(u: &ScalarField) -> Result<()> {
    let min = u.min();
    if min < 0.0 {
        return Err(Error::domain(format!("expected a nonnegative field, found the value {min}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuantifiedMeasure {
    /// Measure of the low set inside the paraboloid.
    pub measure: f64,
    /// Reference bound `c1 rho^(n+p)`.
    pub bound: f64,
    /// Measure of the whole paraboloid within `B_1` on the grid.
    pub region_measure: f64,
}

/// Measures `{(x, t) : |x - x0|^p <= t + rho^p <= rho^p, |x| < 1, u < 4 L0 m0}`.
///
/// Requires `min over nodes of B_rho(x0) ∩ B_1 at t = 0` to be at most `m0`
/// and `u >= 0` on every node of the field.
pub fn quantified_measure_estimate(
    u: &ScalarField,
    x0: &[f64],
    rho: f64,
    m0: f64,
    l0: f64,
    c1: f64,
    params: &EllipticityParams,
) -> Result<QuantifiedMeasure> {
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::invalid(format!("quantified estimate needs 0 < rho <= 1, got {rho}")));
    }
    if !(m0 > 0.0 && l0 > 1.0 && c1 > 0.0) {
        return Err(Error::invalid("quantified estimate needs m0 > 0, L0 > 1 and c1 > 0"));
    }
    let grid = u.grid();
    let n = grid.dim();
    if x0.len() != n {
        return Err(Error::invalid("x0 has the wrong dimension"));
    }
    require_nonnegative(u)?;
    let j0 = grid
        .time_index(0.0)
        .ok_or_else(|| Error::domain("quantified estimate needs t = 0 on the time grid"))?;
    let space = grid.space();
    let mut inf = f64::INFINITY;
    let mut x = vec![0.0; n];
    for flat in 0..space.len() {
        space.point_into(flat, &mut x);
        let r0 = x.iter().zip(x0).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        let r1 = x.iter().map(|a| a * a).sum::<f64>();
        if r0 < rho * rho && r1 < 1.0 {
            inf = inf.min(u.at(j0, flat));
        }
    }
    if !(inf <= m0) {
        return Err(Error::domain(format!(
            "quantified estimate needs inf of u(., 0) over B_rho(x0) ∩ B_1 <= m0 = {m0}, got {inf}"
        )));
    }
    let p = params.p();
    let rp = rho.powf(p);
    let para = ParaboloidSet::new(x0.to_vec(), -rp, 1.0, rp)?;
    let unit_box = BoundingBox {
        lo: vec![-1.0; n],
        hi: vec![1.0; n],
        t_lo: f64::NEG_INFINITY,
        t_hi: f64::INFINITY,
    };
    let ball = Predicate::within(|x: &[f64], _t: f64| x.iter().map(|a| a * a).sum::<f64>() < 1.0, unit_box);
    let region = Intersection(para, ball);
    require_covered(grid, &region, p, "quantified measure estimate")?;
    let threshold = 4.0 * l0 * m0;
    Ok(QuantifiedMeasure {
        measure: measure_where(u, &region, p, |v| v < threshold),
        bound: c1 * rho.powf(n as f64 + p),
        region_measure: region_measure(&region, grid, params),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Grid, SpatialGrid};

    #[test]
    fn zero_field_touches_at_the_vertex() {
        let params = EllipticityParams::new(1.0, 1.0, 3.0, 1).unwrap();
        let space = SpatialGrid::new(&[0.0], &[1.0], 0.125).unwrap();
        let grid = Grid::new(space, -0.5, 0.5, 0.125).unwrap();
        let u = ScalarField::from_fn(grid, |_, _| 0.0).unwrap();
        let phi = ContactFnSpec::new(vec![0.25], 0.0, 1.0, &params).unwrap();
        let rec = find_contact(&u, &phi).unwrap();
        assert!(rec.touched);
        assert_eq!(rec.x, vec![0.25]);
        assert!(rec.t.abs() < 1e-12);
        assert_eq!(rec.gap, 0.0);
    }

    #[test]
    fn box_samples_and_volume() {
        let e = ParameterSet::boxed(1, 1.0, (0.0, 1.0), 4, 2).unwrap();
        assert_eq!(e.len(), 8);
        assert!((e.measure() - 2.0).abs() < 1e-15);
        assert!(ParameterSet::new(vec![(vec![0.0], 0.0), (vec![0.0], 0.0)], 1.0).is_err());
    }

    #[test]
    fn predicted_vertex_at_zero_gradient() {
        let (y, s) = predicted_vertex(&[0.3], 1.0, 2.0, &[0.0], 4.0, 1.5);
        assert_eq!(y, vec![0.3]);
        assert_eq!(s, 0.5);
    }
}
