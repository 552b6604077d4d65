//! Uniform tensor-product grids in space and time, and the fields sampled on them.
//!
//! Spatial nodes are stored row-major with the last axis fastest. A
//! [`ScalarField`] stores whole time slices contiguously, so slice `j` of a field
//! is a plain `&[f64]` over the spatial grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack used when deciding whether an extent is an integer number of steps.
const COUNT_TOL: f64 = 1e-9;

fn step_count(extent: f64, step: f64, what: &str) -> Result<usize> {
    let ratio = extent / step;
    let rounded = ratio.round();
    if !ratio.is_finite() || (ratio - rounded).abs() > COUNT_TOL * rounded.max(1.0) {
        return Err(Error::invalid(format!(
            "{what}: extent {extent} is not an integer multiple of the step {step}"
        )));
    }
    Ok(rounded as usize)
}

/// Uniform spatial grid in `n` dimensions with equal spacing on every axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialGrid {
    lower: Vec<f64>,
    dx: f64,
    shape: Vec<usize>,
}

impl SpatialGrid {
    /// Grid centred at `center` with per-axis half-width `half_width`.
    pub fn new(center: &[f64], half_width: &[f64], dx: f64) -> Result<Self> {
        if center.len() != half_width.len() {
            return Err(Error::invalid(
                "Grid: center and half_width must have the same dimension",
            ));
        }
        if !(dx > 0.0 && dx.is_finite()) {
            return Err(Error::invalid(format!("Grid: dx must be positive, got {dx}")));
        }
        let mut shape = Vec::with_capacity(center.len());
        let mut lower = Vec::with_capacity(center.len());
        for (&c, &h) in center.iter().zip(half_width) {
            if !(h > 0.0) {
                return Err(Error::invalid(format!(
                    "Grid: half-width must be positive, got {h}"
                )));
            }
            shape.push(step_count(2.0 * h, dx, "Grid")? + 1);
            lower.push(c - h);
        }
        Self::from_lower(lower, dx, shape)
    }

    /// Grid whose node 0 sits at `lower` and with `shape[i]` nodes along axis `i`.
    pub fn from_lower(lower: Vec<f64>, dx: f64, shape: Vec<usize>) -> Result<Self> {
        if lower.is_empty() || lower.len() != shape.len() {
            return Err(Error::invalid(
                "Grid: lower corner and shape must be non-empty and of equal length",
            ));
        }
        if !(dx > 0.0 && dx.is_finite()) {
            return Err(Error::invalid(format!("Grid: dx must be positive, got {dx}")));
        }
        if let Some(&m) = shape.iter().find(|&&m| m < 3) {
            return Err(Error::invalid(format!(
                "Grid: every axis needs at least 3 nodes, got {m}"
            )));
        }
        Ok(Self { lower, dx, shape })
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self, axis: usize) -> f64 {
        self.coord(axis, self.shape[axis] - 1)
    }

    pub fn center(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|a| 0.5 * (self.lower[a] + self.upper(a)))
            .collect()
    }

    pub fn half_width(&self) -> Vec<f64> {
        self.shape
            .iter()
            .map(|&m| 0.5 * (m - 1) as f64 * self.dx)
            .collect()
    }

    /// Number of spatial nodes.
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.dx.powi(self.dim() as i32)
    }

    #[inline]
    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        self.lower[axis] + i as f64 * self.dx
    }

    /// Flat-index stride of each axis.
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.dim()];
        for a in (0..self.dim().saturating_sub(1)).rev() {
            strides[a] = strides[a + 1] * self.shape[a + 1];
        }
        strides
    }

    pub fn flat_index(&self, index: &[usize]) -> usize {
        index
            .iter()
            .zip(&self.shape)
            .fold(0, |acc, (&i, &m)| acc * m + i)
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut index = vec![0; self.dim()];
        for a in (0..self.dim()).rev() {
            index[a] = flat % self.shape[a];
            flat /= self.shape[a];
        }
        index
    }

    /// Coordinates of the node with flat index `flat`, written into `out`.
    pub fn point_into(&self, flat: usize, out: &mut [f64]) {
        let mut rest = flat;
        for a in (0..self.dim()).rev() {
            out[a] = self.coord(a, rest % self.shape[a]);
            rest /= self.shape[a];
        }
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.point_into(flat, &mut out);
        out
    }

    /// True if the node touches the grid boundary on some axis.
    pub fn is_boundary(&self, flat: usize) -> bool {
        let mut rest = flat;
        for a in (0..self.dim()).rev() {
            let i = rest % self.shape[a];
            if i == 0 || i + 1 == self.shape[a] {
                return true;
            }
            rest /= self.shape[a];
        }
        false
    }

    /// Flat index of the node located at `x`, if `x` is a node up to a relative
    /// tolerance of `1e-9` cells.
    pub fn node_at(&self, x: &[f64]) -> Option<usize> {
        if x.len() != self.dim() {
            return None;
        }
        let mut flat = 0;
        for a in 0..self.dim() {
            let r = (x[a] - self.lower[a]) / self.dx;
            let i = r.round();
            if (r - i).abs() > 1e-9 || i < 0.0 || i as usize >= self.shape[a] {
                return None;
            }
            flat = flat * self.shape[a] + i as usize;
        }
        Some(flat)
    }

    /// Inclusive per-axis index ranges of the nodes inside the box `[lo, hi]`,
    /// or `None` if the box misses the grid.
    pub fn index_box(&self, lo: &[f64], hi: &[f64]) -> Option<Vec<(usize, usize)>> {
        let mut ranges = Vec::with_capacity(self.dim());
        for a in 0..self.dim() {
            let first = ((lo[a] - self.lower[a]) / self.dx).ceil().max(0.0);
            let last = ((hi[a] - self.lower[a]) / self.dx)
                .floor()
                .min((self.shape[a] - 1) as f64);
            if !(first <= last) {
                return None;
            }
            ranges.push((first as usize, last as usize));
        }
        Some(ranges)
    }

    /// Calls `f(flat, point)` for every node in the inclusive index box.
    pub fn for_each_in_box(&self, ranges: &[(usize, usize)], mut f: impl FnMut(usize, &[f64])) {
        let n = self.dim();
        let mut idx: Vec<usize> = ranges.iter().map(|r| r.0).collect();
        let mut x: Vec<f64> = (0..n).map(|a| self.coord(a, idx[a])).collect();
        loop {
            f(self.flat_index(&idx), &x);
            // odometer increment, last axis fastest
            let mut a = n;
            loop {
                if a == 0 {
                    return;
                }
                a -= 1;
                if idx[a] < ranges[a].1 {
                    idx[a] += 1;
                    x[a] = self.coord(a, idx[a]);
                    break;
                }
                idx[a] = ranges[a].0;
                x[a] = self.coord(a, idx[a]);
            }
        }
    }

    /// Same geometry with every coordinate divided by `r`.
    pub(crate) fn scaled(&self, r: f64) -> SpatialGrid {
        SpatialGrid {
            lower: self.lower.iter().map(|&l| l / r).collect(),
            dx: self.dx / r,
            shape: self.shape.clone(),
        }
    }
}

/// A spatial grid together with a uniform time axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    space: SpatialGrid,
    t_start: f64,
    dt: f64,
    n_time: usize,
}

impl Grid {
    pub fn new(space: SpatialGrid, t_start: f64, t_end: f64, dt: f64) -> Result<Self> {
        if !(t_start < t_end) {
            return Err(Error::invalid(format!(
                "Grid: requires t_start < t_end, got [{t_start}, {t_end}]"
            )));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid(format!("Grid: dt must be positive, got {dt}")));
        }
        let steps = step_count(t_end - t_start, dt, "Grid time axis")?;
        Self::from_counts(space, t_start, dt, steps + 1)
    }

    pub fn from_counts(space: SpatialGrid, t_start: f64, dt: f64, n_time: usize) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid(format!("Grid: dt must be positive, got {dt}")));
        }
        if n_time < 2 {
            return Err(Error::invalid("Grid: the time axis needs at least 2 nodes"));
        }
        Ok(Self {
            space,
            t_start,
            dt,
            n_time,
        })
    }

    pub fn space(&self) -> &SpatialGrid {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn dx(&self) -> f64 {
        self.space.dx
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.n_time - 1)
    }

    pub fn n_time(&self) -> usize {
        self.n_time
    }

    #[inline]
    pub fn time(&self, j: usize) -> f64 {
        self.t_start + j as f64 * self.dt
    }

    /// Total number of space-time nodes.
    pub fn len(&self) -> usize {
        self.space.len() * self.n_time
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Space-time volume represented by one node.
    pub fn cell_volume(&self) -> f64 {
        self.space.cell_volume() * self.dt
    }

    /// Time index of the slice at time `t`, if `t` is a node up to `1e-9` steps.
    pub fn time_index(&self, t: f64) -> Option<usize> {
        let r = (t - self.t_start) / self.dt;
        let j = r.round();
        if (r - j).abs() > 1e-9 || j < 0.0 || j as usize >= self.n_time {
            None
        } else {
            Some(j as usize)
        }
    }

    /// Inclusive range of time indices inside `[t_lo, t_hi]`.
    pub fn time_range(&self, t_lo: f64, t_hi: f64) -> Option<(usize, usize)> {
        let first = ((t_lo - self.t_start) / self.dt).ceil().max(0.0);
        let last = ((t_hi - self.t_start) / self.dt)
            .floor()
            .min((self.n_time - 1) as f64);
        if first <= last {
            Some((first as usize, last as usize))
        } else {
            None
        }
    }

    /// True if the closed box `[lo, hi] x [t_lo, t_hi]` lies inside the grid's
    /// bounding box.
    pub fn covers(&self, lo: &[f64], hi: &[f64], t_lo: f64, t_hi: f64) -> bool {
        let slack = 1e-12;
        let space_ok = (0..self.dim()).all(|a| {
            lo[a] >= self.space.lower[a] - slack && hi[a] <= self.space.upper(a) + slack
        });
        space_ok && t_lo >= self.t_start - slack && t_hi <= self.t_end() + slack
    }

    pub(crate) fn scaled(&self, r: f64, tau: f64) -> Grid {
        Grid {
            space: self.space.scaled(r),
            t_start: self.t_start / tau,
            dt: self.dt / tau,
            n_time: self.n_time,
        }
    }
}

/// A single time slice: values on a spatial grid at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Slice {
    pub grid: SpatialGrid,
    pub t: f64,
    pub values: Vec<f64>,
}

impl Slice {
    pub fn from_fn(grid: SpatialGrid, t: f64, mut f: impl FnMut(&[f64]) -> f64) -> Result<Self> {
        let mut x = vec![0.0; grid.dim()];
        let mut values = Vec::with_capacity(grid.len());
        for flat in 0..grid.len() {
            grid.point_into(flat, &mut x);
            let v = f(&x);
            if !v.is_finite() {
                return Err(Error::numeric(format!(
                    "non-finite value {v} at x = {x:?}, t = {t}"
                )));
            }
            values.push(v);
        }
        Ok(Self { grid, t, values })
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// A function sampled at every node of a space-time [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::invalid(format!(
                "ScalarField: expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::numeric(format!(
                "ScalarField: non-finite value at flat index {pos}"
            )));
        }
        Ok(Self { grid, values })
    }

    /// Samples `f(x, t)` at every node.
    pub fn from_fn(grid: Grid, mut f: impl FnMut(&[f64], f64) -> f64) -> Result<Self> {
        let space = grid.space();
        let mut x = vec![0.0; space.dim()];
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..grid.n_time() {
            let t = grid.time(j);
            for flat in 0..space.len() {
                space.point_into(flat, &mut x);
                values.push(f(&x, t));
            }
        }
        Self::from_values(grid, values)
    }

    /// Fallible variant of [`ScalarField::from_fn`].
    pub fn try_from_fn(
        grid: Grid,
        mut f: impl FnMut(&[f64], f64) -> Result<f64>,
    ) -> Result<Self> {
        let space = grid.space();
        let mut x = vec![0.0; space.dim()];
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..grid.n_time() {
            let t = grid.time(j);
            for flat in 0..space.len() {
                space.point_into(flat, &mut x);
                values.push(f(&x, t)?);
            }
        }
        Self::from_values(grid, values)
    }

    /// Stacks equally spaced slices into a field.
    pub fn from_slices(slices: &[Slice], dt: f64) -> Result<Self> {
        let first = slices
            .first()
            .ok_or_else(|| Error::invalid("ScalarField: no slices"))?;
        let grid = Grid::from_counts(first.grid.clone(), first.t, dt, slices.len())?;
        let mut values = Vec::with_capacity(grid.len());
        for s in slices {
            if s.grid != first.grid {
                return Err(Error::invalid("ScalarField: slices on different grids"));
            }
            values.extend_from_slice(&s.values);
        }
        Self::from_values(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Values of time slice `j`.
    pub fn slice(&self, j: usize) -> &[f64] {
        let m = self.grid.space().len();
        &self.values[j * m..(j + 1) * m]
    }

    pub fn slice_owned(&self, j: usize) -> Slice {
        Slice {
            grid: self.grid.space().clone(),
            t: self.grid.time(j),
            values: self.slice(j).to_vec(),
        }
    }

    #[inline]
    pub fn at(&self, j: usize, flat: usize) -> f64 {
        self.values[j * self.grid.space().len() + flat]
    }

    /// Value at the node `(x, t)`; errors if the point is not a grid node.
    pub fn value_at(&self, x: &[f64], t: f64) -> Result<f64> {
        let flat = self.grid.space().node_at(x).ok_or_else(|| {
            Error::domain(format!("point x = {x:?} is not a node of the field's grid"))
        })?;
        let j = self
            .grid
            .time_index(t)
            .ok_or_else(|| Error::domain(format!("time t = {t} is not a node of the field's grid")))?;
        Ok(self.at(j, flat))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Applies `f` to every value.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<ScalarField> {
        ScalarField::from_values(self.grid.clone(), self.values.iter().map(|&v| f(v)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_counts_and_coordinates() {
        let g = SpatialGrid::new(&[0.0, 1.0], &[1.0, 0.5], 0.25).unwrap();
        assert_eq!(g.shape(), &[9, 5]);
        assert_eq!(g.len(), 45);
        assert_eq!(g.coord(0, 0), -1.0);
        assert_eq!(g.upper(0), 1.0);
        assert_eq!(g.upper(1), 1.5);
        let flat = g.flat_index(&[3, 2]);
        assert_eq!(g.multi_index(flat), vec![3, 2]);
        assert_eq!(g.point(flat), vec![-0.25, 1.0]);
        assert_eq!(g.node_at(&[-0.25, 1.0]), Some(flat));
        assert_eq!(g.node_at(&[-0.2, 1.0]), None);
    }

    #[test]
    fn rejects_incommensurate_extent_and_tiny_axes() {
        assert!(SpatialGrid::new(&[0.0], &[1.0], 0.3).is_err());
        assert!(SpatialGrid::new(&[0.0], &[1.0], 1.0).is_ok());
        assert!(SpatialGrid::new(&[0.0], &[1.0], 2.0).is_err());
        let s = SpatialGrid::new(&[0.0], &[1.0], 0.5).unwrap();
        assert!(Grid::new(s.clone(), 1.0, 0.0, 0.1).is_err());
        assert!(Grid::new(s, 0.0, 1.0, 0.3).is_err());
    }

    #[test]
    fn boundary_detection_and_box_iteration() {
        let g = SpatialGrid::new(&[0.0, 0.0], &[1.0, 1.0], 0.5).unwrap();
        let interior: Vec<usize> = (0..g.len()).filter(|&f| !g.is_boundary(f)).collect();
        assert_eq!(interior.len(), 9);
        let ranges = g.index_box(&[-0.6, 0.1], &[0.1, 2.0]).unwrap();
        assert_eq!(ranges, vec![(1, 2), (3, 4)]);
        let mut seen = Vec::new();
        g.for_each_in_box(&ranges, |flat, x| seen.push((flat, x.to_vec())));
        assert_eq!(seen.len(), 4);
        assert_eq!(seen[0].1, vec![-0.5, 0.5]);
        assert_eq!(seen[3].1, vec![0.0, 1.0]);
        assert!(g.index_box(&[5.0, 5.0], &[6.0, 6.0]).is_none());
    }

    #[test]
    fn field_from_fn_is_time_major() {
        let s = SpatialGrid::new(&[0.0], &[1.0], 1.0).unwrap();
        let grid = Grid::new(s, 0.0, 1.0, 0.5).unwrap();
        let u = ScalarField::from_fn(grid, |x, t| x[0] + 10.0 * t).unwrap();
        assert_eq!(u.slice(1), &[4.0, 5.0, 6.0]);
        assert_eq!(u.value_at(&[1.0], 1.0).unwrap(), 11.0);
        assert!(u.value_at(&[0.5], 1.0).is_err());
    }

    #[test]
    fn non_finite_values_are_rejected() {
        let s = SpatialGrid::new(&[0.0], &[1.0], 1.0).unwrap();
        let grid = Grid::new(s, 0.0, 1.0, 0.5).unwrap();
        assert!(ScalarField::from_fn(grid, |x, _| 1.0 / x[0]).is_err());
    }
}
