//! Sliding test functions
//! `phi(x, t) = -a^(1/(p-1)) ((p-1)/p) |x - y|^(p/(p-1)) + a (t - s)`.

use super::{AnalyticSolution, Jet};
use crate::error::{Error, Result};
use crate::params::EllipticityParams;

#[derive(Debug, Clone, PartialEq)]
pub struct ContactFnSpec {
    y: Vec<f64>,
    s: f64,
    a: f64,
    p: f64,
    /// `a^(1/(p-1))`
    root: f64,
}

impl ContactFnSpec {
    pub fn new(y: Vec<f64>, s: f64, a: f64, params: &EllipticityParams) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::invalid(format!("contact function slope must be positive, got a = {a}")));
        }
        if y.len() != params.n() {
            return Err(Error::invalid(format!(
                "contact vertex has dimension {}, expected {}",
                y.len(),
                params.n()
            )));
        }
        let p = params.p();
        Ok(Self {
            y,
            s,
            a,
            p,
            root: a.powf(1.0 / (p - 1.0)),
        })
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    /// Spatial part `-a^(1/(p-1)) ((p-1)/p) |x - y|^(p/(p-1))`.
    pub fn spatial(&self, x: &[f64]) -> f64 {
        let r = dist(x, &self.y);
        -self.root * (self.p - 1.0) / self.p * r.powf(self.p / (self.p - 1.0))
    }

    /// Exact value.
    pub fn at(&self, x: &[f64], t: f64) -> f64 {
        self.spatial(x) + self.a * (t - self.s)
    }

    /// Same function with vertex moved to `(y, s)`.
    pub fn with_vertex(&self, y: Vec<f64>, s: f64) -> Self {
        Self { y, s, ..self.clone() }
    }
}

fn dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

impl AnalyticSolution for ContactFnSpec {
    fn dim(&self) -> usize {
        self.y.len()
    }

    fn eval(&self, x: &[f64], t: f64) -> Result<Jet> {
        if x.len() != self.dim() {
            return Err(Error::invalid("contact function: point has the wrong dimension"));
        }
        let offset: Vec<f64> = x.iter().zip(&self.y).map(|(a, b)| a - b).collect();
        let r = dist(x, &self.y);
        let e = 1.0 / (self.p - 1.0);
        let value = self.at(x, t);
        if r == 0.0 {
            let jet = Jet::radial(&offset, 0.0, value, 0.0, 0.0, 0.0, self.a);
            // the Hessian blows up at the vertex for p > 2
            return Ok(if self.p > 2.0 { jet.one_sided() } else { jet });
        }
        let fr = -self.root * r.powf(e);
        let fr_over_r = -self.root * r.powf(e - 1.0);
        let frr = -self.root * e * r.powf(e - 1.0);
        Ok(Jet::radial(&offset, r, value, fr, frr, fr_over_r, self.a))
    }

    fn value(&self, x: &[f64], t: f64) -> Result<f64> {
        Ok(self.at(x, t))
    }
}
