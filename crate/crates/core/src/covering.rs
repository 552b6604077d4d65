//! Vitali-type selection for families of closed forward cylinders
//! `(x_i, t_i) + B_rho_i x [0, theta rho_i^p]` with a shared `theta`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::region::unit_ball_volume;

/// Relative slack in the containment test, so that touching cylinders built
/// from rounded data still count as covered.
const CONTAIN_SLACK: f64 = 1e-12;

/// Listed counterexamples are capped at this many.
const MAX_LISTED: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyMember {
    pub x: Vec<f64>,
    pub t: f64,
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CylinderFamily {
    items: Vec<FamilyMember>,
    theta: f64,
    p: f64,
}

impl CylinderFamily {
    pub fn new(items: Vec<FamilyMember>, theta: f64, p: f64) -> Result<Self> {
        if !(theta > 0.0 && theta < 1.0) {
            return Err(Error::invalid(format!("CylinderFamily: theta must lie in (0, 1), got {theta}")));
        }
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::invalid(format!("CylinderFamily: p must exceed 1, got {p}")));
        }
        let n = items.first().map_or(0, |c| c.x.len());
        for (i, c) in items.iter().enumerate() {
            if !(c.rho > 0.0 && c.rho <= 1.0) {
                return Err(Error::invalid(format!(
                    "CylinderFamily: member {i} has rho = {}, outside (0, 1]",
                    c.rho
                )));
            }
            if c.x.len() != n || n == 0 {
                return Err(Error::invalid(format!("CylinderFamily: member {i} has the wrong dimension")));
            }
            if !c.t.is_finite() || c.x.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("CylinderFamily: member {i} has a non-finite center")));
            }
        }
        Ok(Self { items, theta, p })
    }

    /// Radii log-uniform in `[2^-10, 1]`, centers uniform in `[-1, 1]^(n+1)`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, size: usize, n: usize, theta: f64, p: f64) -> Result<Self> {
        let items = (0..size)
            .map(|_| FamilyMember {
                x: (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect(),
                t: rng.random_range(-1.0..=1.0),
                rho: 2f64.powf(-10.0 * rng.random::<f64>()),
            })
            .collect();
        Self::new(items, theta, p)
    }

    pub fn items(&self) -> &[FamilyMember] {
        &self.items
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    fn height(&self, rho: f64) -> f64 {
        self.theta * rho.powf(self.p)
    }

    /// Whether the closed members `i` and `j` share a point.
    pub fn intersect(&self, i: usize, j: usize) -> bool {
        let (a, b) = (&self.items[i], &self.items[j]);
        let r = a.rho + b.rho;
        let d2: f64 = a.x.iter().zip(&b.x).map(|(u, v)| (u - v) * (u - v)).sum();
        d2 <= r * r && a.t <= b.t + self.height(b.rho) && b.t <= a.t + self.height(a.rho)
    }

    /// Whether member `i` lies in the full cylinder `(x_l, t_l) + B_5rho_l x [-h, h]`,
    /// `h = theta (5 rho_l)^p`.
    pub fn in_dilate(&self, i: usize, l: usize) -> bool {
        let (a, b) = (&self.items[i], &self.items[l]);
        let big = 5.0 * b.rho;
        let h = self.height(big);
        let d = a.x.iter().zip(&b.x).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt();
        let slack = CONTAIN_SLACK * (1.0 + big + h);
        d + a.rho <= big + slack && a.t >= b.t - h - slack && a.t + self.height(a.rho) <= b.t + h + slack
    }
}

/// `k` with `2^-(k+1) < rho <= 2^-k`.
pub fn dyadic_class(rho: f64) -> u32 {
    let mut k = 0;
    let mut upper = 1.0;
    while rho <= upper / 2.0 {
        upper /= 2.0;
        k += 1;
    }
    k
}

/// Indices of a pairwise disjoint subfamily whose 5-dilates cover every member.
///
/// Members are grouped by dyadic class of `rho` and the classes processed from
/// large to small radii; within a class candidates are scanned by descending
/// `rho`, then input index, and kept when disjoint from everything kept so far.
pub fn vitali_subcover(family: &CylinderFamily) -> Vec<usize> {
    let mut order: Vec<usize> = (0..family.len()).collect();
    let classes: Vec<u32> = family.items.iter().map(|c| dyadic_class(c.rho)).collect();
    order.sort_by(|&i, &j| {
        classes[i]
            .cmp(&classes[j])
            .then(family.items[j].rho.total_cmp(&family.items[i].rho))
            .then(i.cmp(&j))
    });
    let mut selected: Vec<usize> = Vec::new();
    for i in order {
        if selected.iter().all(|&l| !family.intersect(i, l)) {
            selected.push(i);
        }
    }
    selected
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverReport {
    pub disjoint: bool,
    pub covered: bool,
    /// Selected pairs that intersect.
    pub overlapping: Vec<(usize, usize)>,
    /// Members outside every selected 5-dilate.
    pub uncovered: Vec<usize>,
}

impl CoverReport {
    pub fn passed(&self) -> bool {
        self.disjoint && self.covered
    }
}

/// Checks disjointness of the selection and coverage of the family by the 5-dilates.
pub fn verify_cover(family: &CylinderFamily, selected: &[usize]) -> Result<CoverReport> {
    if let Some(&bad) = selected.iter().find(|&&i| i >= family.len()) {
        return Err(Error::invalid(format!(
            "selected index {bad} is outside a family of {} members",
            family.len()
        )));
    }
    let mut overlapping = Vec::new();
    let mut overlap_count = 0usize;
    for (k, &i) in selected.iter().enumerate() {
        for &j in &selected[k + 1..] {
            if i == j || family.intersect(i, j) {
                overlap_count += 1;
                if overlapping.len() < MAX_LISTED {
                    overlapping.push((i, j));
                }
            }
        }
    }
    let mut uncovered = Vec::new();
    let mut uncovered_count = 0usize;
    for i in 0..family.len() {
        if !selected.iter().any(|&l| family.in_dilate(i, l)) {
            uncovered_count += 1;
            if uncovered.len() < MAX_LISTED {
                uncovered.push(i);
            }
        }
    }
    Ok(CoverReport {
        disjoint: overlap_count == 0,
        covered: uncovered_count == 0,
        overlapping,
        uncovered,
    })
}

/// `(sum |5 Q_l|, sum |Q_l|)` over the selection, both with the full cylinder
/// measure `omega_n rho^n 2 theta rho^p`.
pub fn dilate_measures(family: &CylinderFamily, selected: &[usize]) -> (f64, f64) {
    let n = family.items.first().map_or(0, |c| c.x.len());
    let full = |rho: f64| unit_ball_volume(n) * rho.powi(n as i32) * 2.0 * family.height(rho);
    selected.iter().fold((0.0, 0.0), |(big, small), &l| {
        let rho = family.items[l].rho;
        (big + full(5.0 * rho), small + full(rho))
    })
}
