//! Self-similar fundamental solution of the p-parabolic equation
//! `u_t = |Du|^(p-2) (Delta u + (p - 2) <D^2 u e, e>)`, `e = Du / |Du|`.

use super::{AnalyticSolution, Jet};
use crate::error::{Error, Result};
use crate::params::EllipticityParams;

/// `phi(x, t) = t^(-n alpha) (1 - c (|x| / t^alpha)^(p/(p-1)))_+^((p-1)/(p-2))`
/// with `alpha = 1 / (n (p - 2) + p)` and `c = ((p - 2) / p) alpha^(1/(p-1))`.
///
/// For `p > 2` the support is compact and expands like `t^alpha`. The same
/// formula is also accepted for `2n / (n + 1) < p < 2`, where `c < 0` and the
/// solution is positive everywhere with a power-law tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarenblattSpec {
    params: EllipticityParams,
    alpha: f64,
    c: f64,
    /// `p / (p - 1)`
    gamma: f64,
    /// `(p - 1) / (p - 2)`
    m: f64,
}

impl BarenblattSpec {
    pub fn new(params: EllipticityParams) -> Result<Self> {
        let p = params.p();
        let n = params.n() as f64;
        if p == 2.0 {
            return Err(Error::invalid(
                "Barenblatt profile: p = 2 is the heat kernel, not covered by this formula",
            ));
        }
        if p <= 2.0 * n / (n + 1.0) {
            return Err(Error::invalid(format!(
                "Barenblatt profile needs p > 2n/(n+1) = {}, got p = {p}",
                2.0 * n / (n + 1.0)
            )));
        }
        let alpha = 1.0 / (n * (p - 2.0) + p);
        let c = (p - 2.0) / p * alpha.powf(1.0 / (p - 1.0));
        Ok(Self {
            params,
            alpha,
            c,
            gamma: p / (p - 1.0),
            m: (p - 1.0) / (p - 2.0),
        })
    }

    pub fn params(&self) -> &EllipticityParams {
        &self.params
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// Radius of the support at time `t`; infinite in the singular range.
    pub fn support_radius(&self, t: f64) -> f64 {
        if self.c > 0.0 {
            (1.0 / self.c).powf((self.params.p() - 1.0) / self.params.p()) * t.powf(self.alpha)
        } else {
            f64::INFINITY
        }
    }

    /// Value at the origin, `t^(-n alpha)`.
    pub fn peak(&self, t: f64) -> f64 {
        t.powf(-(self.params.n() as f64) * self.alpha)
    }
}

impl AnalyticSolution for BarenblattSpec {
    fn dim(&self) -> usize {
        self.params.n()
    }

    fn eval(&self, x: &[f64], t: f64) -> Result<Jet> {
        if !(t > 0.0) {
            return Err(Error::domain(format!("Barenblatt profile needs t > 0, got t = {t}")));
        }
        if x.len() != self.dim() {
            return Err(Error::invalid("Barenblatt profile: point has the wrong dimension"));
        }
        let p = self.params.p();
        let n = self.params.n() as f64;
        let (alpha, c, gamma, m) = (self.alpha, self.c, self.gamma, self.m);
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let xi = r * t.powf(-alpha);
        let f = 1.0 - c * xi.powf(gamma);
        if f < 0.0 {
            return Ok(Jet::zero(x.len()));
        }
        let t_na = t.powf(-n * alpha);
        let value = t_na * f.powf(m);
        let ft = t_na / t * (-n * alpha * f.powf(m) + m * f.powf(m - 1.0) * c * gamma * alpha * xi.powf(gamma));
        if f == 0.0 {
            return Ok(Jet::radial(x, r, 0.0, 0.0, 0.0, 0.0, ft).one_sided());
        }
        let e = 1.0 / (p - 1.0);
        let t_ag = t.powf(-alpha * gamma);
        let k = -c * gamma * m * t_na * t_ag;
        let fm1 = f.powf(m - 1.0);
        let fr = k * fm1 * r.powf(e);
        if r == 0.0 {
            // second derivatives blow up like r^((2-p)/(p-1)) for p > 2 and
            // vanish for p < 2
            let jet = Jet::radial(x, r, value, 0.0, 0.0, 0.0, ft);
            return Ok(if p > 2.0 { jet.one_sided() } else { jet });
        }
        let f_r = -c * gamma * r.powf(e) * t_ag;
        let fr_over_r = k * fm1 * r.powf(e - 1.0);
        let frr = k * ((m - 1.0) * f.powf(m - 2.0) * f_r * r.powf(e) + fm1 * e * r.powf(e - 1.0));
        Ok(Jet::radial(x, r, value, fr, frr, fr_over_r, ft))
    }

    fn value(&self, x: &[f64], t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::domain(format!("Barenblatt profile needs t > 0, got t = {t}")));
        }
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let f = 1.0 - self.c * (r * t.powf(-self.alpha)).powf(self.gamma);
        Ok(if f <= 0.0 {
            0.0
        } else {
            self.peak(t) * f.powf(self.m)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::OperatorSpec;
    use crate::solutions::{pointwise_residual, Regularity};

    fn spec(p: f64, n: usize) -> BarenblattSpec {
        BarenblattSpec::new(EllipticityParams::new(1.0, 1.0, p, n).unwrap()).unwrap()
    }

    #[test]
    fn constants_for_p3_n1() {
        let b = spec(3.0, 1);
        assert_eq!(b.alpha(), 0.25);
        assert!((b.c() - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(b.value(&[0.0], 2.0).unwrap(), 2f64.powf(-0.25));
    }

    #[test]
    fn support_edge() {
        let b = spec(3.0, 2);
        let t = 1.7;
        let r = b.support_radius(t);
        assert!(b.value(&[r * 1.000001, 0.0], t).unwrap() == 0.0);
        assert!(b.value(&[r * 0.999, 0.0], t).unwrap() > 0.0);
        assert!(matches!(b.eval(&[0.0, 0.0], 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn origin_is_flagged_for_degenerate_p() {
        let jet = spec(3.0, 1).eval(&[0.0], 1.0).unwrap();
        assert_eq!(jet.regularity, Regularity::OneSided);
        assert_eq!(jet.value, 1.0);
        let jet = spec(1.5, 1).eval(&[0.0], 1.0).unwrap();
        assert_eq!(jet.regularity, Regularity::Smooth);
    }

    #[test]
    fn singular_range_is_positive_everywhere_and_solves() {
        let b = spec(1.5, 1);
        assert!(b.c() < 0.0);
        assert!(b.value(&[50.0], 1.0).unwrap() > 0.0);
        let model = OperatorSpec::model(1.5, *b.params(), 0.0).unwrap();
        for &(x, t) in &[(0.3, 1.0), (-2.0, 0.5), (7.0, 3.0)] {
            let r = pointwise_residual(&b, &[x], t, &model).unwrap();
            assert!(r.abs() < 1e-10, "residual {r} at ({x}, {t})");
        }
        assert!(BarenblattSpec::new(EllipticityParams::new(1.0, 1.0, 1.2, 2).unwrap()).is_err());
    }
}
