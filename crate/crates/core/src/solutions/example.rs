//! One-dimensional family `u_k` with a bounded measurable coefficient whose
//! values blow up in finite time as `k` grows.
//!
//! With `alpha(t) = (1 + C0 t)^(-1/(p-2))`, `v(x) = |x|^(p/(p-1))` and
//! `t_k = -1/C0 + 1/k`:
//!
//! ```text
//! u_k(x, t) = alpha(t) (1 - v(x))                            t > t_k
//!           = alpha'(t_k) (t - t_k) + alpha(t_k) (1 - v(x))  t <= t_k
//! ```
//!
//! solves `u_t = a(x, t) |u'|^(p-2) u''` away from `x = 0` and `t = t_k`.

use super::{AnalyticSolution, Jet};
use crate::error::{Error, Result};
use crate::operators::SymMatrix;
use crate::params::EllipticityParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExampleSpec {
    p: f64,
    c0: f64,
    k: u64,
    t_k: f64,
    alpha_k: f64,
    alpha_prime_k: f64,
    /// `(p-1)^p / ((p-2) p^(p-1))`
    coefficient_scale: f64,
}

impl ExampleSpec {
    /// `params` must have `n = 1` and `p > 2`. Whether `t_k < 0` (so that
    /// `u_k(0, 0) = 1`) is reported by [`ExampleSpec::normalized_at_origin`]
    /// rather than enforced.
    pub fn new(params: &EllipticityParams, c0: f64, k: u64) -> Result<Self> {
        params.require_degenerate()?;
        if params.n() != 1 {
            return Err(Error::invalid(format!(
                "the blow-up example is one-dimensional, got n = {}",
                params.n()
            )));
        }
        if !(c0 > 1.0 && c0.is_finite()) {
            return Err(Error::invalid(format!("the blow-up example needs C0 > 1, got {c0}")));
        }
        if k == 0 {
            return Err(Error::invalid("the blow-up example needs k >= 1"));
        }
        let p = params.p();
        let t_k = -1.0 / c0 + 1.0 / k as f64;
        let alpha_k = (c0 / k as f64).powf(-1.0 / (p - 2.0));
        Ok(Self {
            p,
            c0,
            k,
            t_k,
            alpha_k,
            alpha_prime_k: -c0 / (p - 2.0) * alpha_k.powf(p - 1.0),
            coefficient_scale: (p - 1.0).powf(p) / ((p - 2.0) * p.powf(p - 1.0)),
        })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn t_k(&self) -> f64 {
        self.t_k
    }

    /// True when `t_k < 0`, in which case `u_k(0, 0) = 1`.
    pub fn normalized_at_origin(&self) -> bool {
        self.t_k < 0.0
    }

    /// `alpha(t) = (1 + C0 t)^(-1/(p-2))` for `t > -1/C0`.
    pub fn alpha(&self, t: f64) -> Result<f64> {
        let base = 1.0 + self.c0 * t;
        if !(base > 0.0) {
            return Err(Error::domain(format!(
                "alpha(t) is only defined for t > -1/C0 = {}, got t = {t}",
                -1.0 / self.c0
            )));
        }
        Ok(base.powf(-1.0 / (self.p - 2.0)))
    }

    /// `alpha'(t) = -(C0 / (p-2)) alpha(t)^(p-1)`.
    pub fn alpha_prime(&self, t: f64) -> Result<f64> {
        Ok(-self.c0 / (self.p - 2.0) * self.alpha(t)?.powf(self.p - 1.0))
    }

    /// `alpha(t_k) = (C0 / k)^(-1/(p-2))`, the value of `u_k` at `(0, t_k)`.
    pub fn blow_up_value(&self) -> f64 {
        self.alpha_k
    }

    fn check_x(&self, x: f64) -> Result<()> {
        if !(x.abs() < 1.0) {
            return Err(Error::domain(format!(
                "the blow-up example lives on -1 < x < 1, got x = {x}"
            )));
        }
        Ok(())
    }

    /// The coefficient `a(x, t)`: `K C0 (1 - v(x))` for `t > t_k` and `K C0` for
    /// `t <= t_k`, with `K = (p-1)^p / ((p-2) p^(p-1))`.
    pub fn coefficient(&self, x: f64, t: f64) -> Result<f64> {
        self.check_x(x)?;
        let base = self.coefficient_scale * self.c0;
        Ok(if t > self.t_k {
            base * (1.0 - x.abs().powf(self.p / (self.p - 1.0)))
        } else {
            base
        })
    }

    /// `u_t - a |u'|^(p-2) u''` away from `x = 0` and `t = t_k`.
    pub fn residual(&self, x: f64, t: f64) -> Result<f64> {
        Ok(self.residual_parts(x, t)?.0)
    }

    /// Residual together with the scale `|u_t| + |a |u'|^(p-2) u''|` used for
    /// relative comparisons.
    pub fn residual_parts(&self, x: f64, t: f64) -> Result<(f64, f64)> {
        if x == 0.0 || t == self.t_k {
            return Err(Error::domain(format!(
                "the blow-up example is not twice differentiable at x = {x}, t = {t}"
            )));
        }
        let jet = self.eval(&[x], t)?;
        let u1 = jet.gradient[0];
        let u2 = jet.hessian.get(0, 0);
        let diffusion = self.coefficient(x, t)? * u1.abs().powf(self.p - 2.0) * u2;
        Ok((
            jet.time_derivative - diffusion,
            jet.time_derivative.abs() + diffusion.abs(),
        ))
    }
}

impl AnalyticSolution for ExampleSpec {
    fn dim(&self) -> usize {
        1
    }

    fn eval(&self, x: &[f64], t: f64) -> Result<Jet> {
        if x.len() != 1 {
            return Err(Error::invalid("the blow-up example is one-dimensional"));
        }
        let x = x[0];
        self.check_x(x)?;
        let p = self.p;
        let gamma = p / (p - 1.0);
        let ax = x.abs();
        let v = ax.powf(gamma);
        let v1 = gamma * ax.powf(gamma - 1.0) * x.signum();
        let v2 = if ax > 0.0 {
            gamma / (p - 1.0) * ax.powf(gamma - 2.0)
        } else {
            0.0
        };
        let (amp, value, ut) = if t > self.t_k {
            let a = self.alpha(t)?;
            (a, a * (1.0 - v), self.alpha_prime(t)? * (1.0 - v))
        } else {
            (
                self.alpha_k,
                self.alpha_prime_k * (t - self.t_k) + self.alpha_k * (1.0 - v),
                self.alpha_prime_k,
            )
        };
        let jet = Jet {
            value,
            gradient: vec![-amp * if ax > 0.0 { v1 } else { 0.0 }],
            hessian: SymMatrix::diag(&[-amp * v2]),
            time_derivative: ut,
            regularity: super::Regularity::Smooth,
        };
        Ok(if ax == 0.0 || t == self.t_k {
            jet.one_sided()
        } else {
            jet
        })
    }
}
