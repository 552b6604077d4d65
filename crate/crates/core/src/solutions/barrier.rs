//! Expanding radial barrier `psi(x, t) = a t^(-beta) g(2|x| / (3 t^alpha))`.

use super::{AnalyticSolution, Jet};
use crate::error::{Error, Result};
use crate::operators::pucci_minus;
use crate::params::EllipticityParams;

/// Decreasing profile with `g(s) = s^(-q) - 1` for `s >= 1/2`, `g = 2^q` near 0,
/// and `g = 0` for `s >= 1`.
///
/// The junction is `g = Phi(s^(-q) - 1)` where `Phi` is the identity up to
/// `y0 = 2^q - 1`, equal to `2^q` beyond `y0 + 2`, and in between follows a
/// quintic smoothstep in its derivative, so `Phi' = 1 - S(u)` with
/// `S(u) = 6u^5 - 15u^4 + 10u^3`, `u = (y - y0) / 2`. This keeps `g` three times
/// differentiable and monotone for every `q > 1`, and `g = 2^q` on
/// `[0, (2^q + 2)^(-1/q)]`, which contains `[0, 1/4]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Profile {
    q: f64,
    y0: f64,
}

/// `(g, g', g'')`
pub type ProfileJet = (f64, f64, f64);

impl Profile {
    pub fn new(q: f64) -> Result<Self> {
        if !(q > 1.0 && q.is_finite()) {
            return Err(Error::invalid(format!("barrier profile needs q > 1, got q = {q}")));
        }
        Ok(Self {
            q,
            y0: 2f64.powf(q) - 1.0,
        })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// Whether doubles near `s = 1/2` resolve the junction into at least 1024
    /// steps. Its width in `s` is about `2^-q / q`, so this fails for `q` near 40
    /// and beyond, where the blend degenerates into a kink.
    pub fn resolvable(&self) -> bool {
        let width = 1.0 / (self.q * 2f64.powf(self.q));
        width >= 1024.0 * f64::EPSILON * 0.5
    }

    /// Right end of the plateau where `g = 2^q`.
    pub fn plateau_end(&self) -> f64 {
        (2f64.powf(self.q) + 2.0).powf(-1.0 / self.q)
    }

    /// `Phi(y), Phi'(y), Phi''(y)`.
    fn junction(&self, y: f64) -> (f64, f64, f64) {
        let tau = y - self.y0;
        if tau <= 0.0 {
            return (y, 1.0, 0.0);
        }
        if tau >= 2.0 {
            return (self.y0 + 1.0, 0.0, 0.0);
        }
        let u = 0.5 * tau;
        let u2 = u * u;
        let u3 = u2 * u;
        let smooth = u3 * (10.0 + u * (-15.0 + 6.0 * u));
        let d_smooth = 30.0 * u2 * (1.0 - u) * (1.0 - u);
        let phi = self.y0 + tau - 2.0 * u2 * u2 * (2.5 + u * (-3.0 + u));
        (phi, 1.0 - smooth, -0.5 * d_smooth)
    }

    /// `g(s)` and its first two derivatives for `s >= 0`.
    pub fn eval(&self, s: f64) -> ProfileJet {
        if s >= 1.0 {
            return (0.0, 0.0, 0.0);
        }
        if s <= 0.0 {
            return (self.y0 + 1.0, 0.0, 0.0);
        }
        let q = self.q;
        let f = s.powf(-q) - 1.0;
        let (phi, d1, d2) = self.junction(f);
        if d1 == 0.0 && d2 == 0.0 {
            return (phi, 0.0, 0.0);
        }
        let f1 = -q * s.powf(-q - 1.0);
        let f2 = q * (q + 1.0) * s.powf(-q - 2.0);
        (phi, d1 * f1, d2 * f1 * f1 + d1 * f2)
    }
}

/// Barrier parameters. `a = alpha^(1/(p-2))` and `beta = (1 - alpha p) / (p - 2)`
/// are computed at construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierSpec {
    params: EllipticityParams,
    profile: Profile,
    alpha: f64,
    beta: f64,
    a: f64,
}

/// Ratio `2/3` between the barrier variable `s` and `|x| / t^alpha`.
const KAPPA: f64 = 2.0 / 3.0;

impl BarrierSpec {
    pub fn new(params: EllipticityParams, q: f64, alpha: f64) -> Result<Self> {
        params.require_degenerate()?;
        let p = params.p();
        if !(alpha > 0.0 && alpha * p < 1.0) {
            return Err(Error::invalid(format!(
                "barrier needs 0 < alpha < 1/p so that beta > 0, got alpha = {alpha}, p = {p}"
            )));
        }
        Ok(Self {
            params,
            profile: Profile::new(q)?,
            alpha,
            beta: (1.0 - alpha * p) / (p - 2.0),
            a: alpha.powf(1.0 / (p - 2.0)),
        })
    }

    pub fn params(&self) -> &EllipticityParams {
        &self.params
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    pub fn q(&self) -> f64 {
        self.profile.q
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Amplitude `a = alpha^(1/(p-2))`.
    pub fn amplitude(&self) -> f64 {
        self.a
    }

    /// Radius `(3/2) t^alpha` of the support at time `t`.
    pub fn support_radius(&self, t: f64) -> f64 {
        1.5 * t.powf(self.alpha)
    }

    /// Similarity variable `s = 2|x| / (3 t^alpha)`.
    pub fn similarity_variable(&self, x: &[f64], t: f64) -> f64 {
        KAPPA * x.iter().map(|v| v * v).sum::<f64>().sqrt() * t.powf(-self.alpha)
    }

    /// The time-independent part of the subsolution residual: the residual at
    /// `(x, t)` equals `a t^(-beta-1) rho(s)`.
    pub fn reduced_residual(&self, s: f64) -> Result<f64> {
        Ok(self.reduced_residual_parts(s)?.0)
    }

    /// `rho(s)` together with the scale `|time part| + |diffusion part|`.
    pub fn reduced_residual_parts(&self, s: f64) -> Result<(f64, f64)> {
        let (g, g1, g2) = self.profile.eval(s);
        self.parts_from_jet(s, g, g1, g2)
    }

    /// Limit of [`BarrierSpec::reduced_residual_parts`] as `s -> 1` from inside
    /// the support, where `g = 0`, `g' = -q`, `g'' = q (q + 1)`.
    pub fn edge_residual_parts(&self) -> Result<(f64, f64)> {
        let q = self.profile.q;
        self.parts_from_jet(1.0, 0.0, -q, q * (q + 1.0))
    }

    fn parts_from_jet(&self, s: f64, g: f64, g1: f64, g2: f64) -> Result<(f64, f64)> {
        let n = self.params.n();
        let p = self.params.p();
        let diffusion = if g1 == 0.0 && g2 == 0.0 {
            0.0
        } else {
            let mut d = vec![g1 / s; n];
            d[0] = g2;
            let m = crate::operators::SymMatrix::diag(&d);
            self.alpha * KAPPA.powf(p) * g1.abs().powf(p - 2.0) * pucci_minus(&m, &self.params)?
        };
        let time = -self.beta * g - self.alpha * s * g1;
        Ok((time - diffusion, time.abs() + diffusion.abs()))
    }

    /// `psi_t - |D psi|^(p-2) P^-(D^2 psi)` for `|x| < (3/2) t^alpha`.
    pub fn subsolution_residual(&self, x: &[f64], t: f64) -> Result<f64> {
        Ok(self.subsolution_residual_parts(x, t)?.0)
    }

    /// Residual and its local scale at `(x, t)`.
    pub fn subsolution_residual_parts(&self, x: &[f64], t: f64) -> Result<(f64, f64)> {
        if !(t > 0.0) {
            return Err(Error::domain(format!("barrier needs t > 0, got t = {t}")));
        }
        let s = self.similarity_variable(x, t);
        if s >= 1.0 {
            return Err(Error::domain(format!(
                "barrier residual is only defined inside the support |x| < {}, got |x| at s = {s}",
                self.support_radius(t)
            )));
        }
        let factor = self.a * t.powf(-self.beta - 1.0);
        let (rho, scale) = self.reduced_residual_parts(s)?;
        Ok((factor * rho, factor * scale))
    }
}

impl AnalyticSolution for BarrierSpec {
    fn dim(&self) -> usize {
        self.params.n()
    }

    fn eval(&self, x: &[f64], t: f64) -> Result<Jet> {
        if !(t > 0.0) {
            return Err(Error::domain(format!("barrier needs t > 0, got t = {t}")));
        }
        if x.len() != self.dim() {
            return Err(Error::invalid("barrier: point has the wrong dimension"));
        }
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let ta = t.powf(-self.alpha);
        let s = KAPPA * r * ta;
        let (g, g1, g2) = self.profile.eval(s);
        let amp = self.a * t.powf(-self.beta);
        let value = amp * g;
        let ft = self.a * t.powf(-self.beta - 1.0) * (-self.beta * g - self.alpha * s * g1);
        let fr = amp * g1 * KAPPA * ta;
        let frr = amp * g2 * KAPPA * KAPPA * ta * ta;
        // g' vanishes on the plateau, so g'/s has limit 0 at the origin
        let fr_over_r = if s > 0.0 { amp * KAPPA * KAPPA * ta * ta * g1 / s } else { 0.0 };
        let jet = Jet::radial(x, r, value, fr, frr, fr_over_r, ft);
        // psi is only C^1 across the support edge s = 1
        Ok(if s == 1.0 { jet.one_sided() } else { jet })
    }

    fn value(&self, x: &[f64], t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::domain(format!("barrier needs t > 0, got t = {t}")));
        }
        Ok(self.a * t.powf(-self.beta) * self.profile.eval(self.similarity_variable(x, t)).0)
    }
}
