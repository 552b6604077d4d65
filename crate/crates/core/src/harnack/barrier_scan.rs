//! Search for barrier parameters `(q, alpha)` with a negative subsolution residual.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::LogGrid;
use crate::error::{Error, Result};
use crate::params::EllipticityParams;
use crate::solutions::{BarrierSpec, Profile};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BarrierScanConfig {
    pub q_lo: f64,
    pub q_hi: f64,
    pub q_steps: usize,
    pub alpha_lo: f64,
    /// Upper end of the alpha scan; `None` means `1/(2p)`.
    pub alpha_hi: Option<f64>,
    pub alpha_steps: usize,
    /// Support points per `(q, alpha)` pair.
    pub samples: usize,
    /// Required `-residual / scale`.
    pub margin: f64,
    pub seed: u64,
}

impl Default for BarrierScanConfig {
    fn default() -> Self {
        Self {
            q_lo: 2.0,
            q_hi: 64.0,
            q_steps: 41,
            alpha_lo: 1e-4,
            alpha_hi: None,
            alpha_steps: 16,
            samples: 4096,
            margin: 0.1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BarrierPoint {
    pub q: f64,
    pub alpha: f64,
    pub x: Vec<f64>,
    pub t: f64,
    pub residual: f64,
    pub scale: f64,
}

impl BarrierPoint {
    /// `residual / scale`; at most `-margin` for a passing point.
    pub fn relative(&self) -> f64 {
        if self.scale > 0.0 {
            self.residual / self.scale
        } else {
            self.residual.signum()
        }
    }
}

/// Support sample in normalized form: `t`, a unit direction and a fraction of
/// the support radius in `[0, 1)`.
struct SupportSample {
    t: f64,
    direction: Vec<f64>,
    fraction: f64,
}

fn support_samples(n: usize, count: usize, seed: u64) -> Vec<SupportSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let direction = loop {
                let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
                let r = v.iter().map(|c| c * c).sum::<f64>().sqrt();
                if r > 1e-3 && r <= 1.0 {
                    break v.into_iter().map(|c| c / r).collect();
                }
            };
            SupportSample {
                t: rng.random_range(0.25..=4.0),
                direction,
                fraction: rng.random::<f64>(),
            }
        })
        .collect()
}

/// Similarity values that random sampling tends to miss: a dense lattice over
/// the profile junction just below `s = 1/2`, whose width shrinks like
/// `2^-q / q`, and a geometric approach to the support edge `s = 1`.
fn radial_probes(spec: &BarrierSpec) -> Vec<f64> {
    let start = spec.profile().plateau_end();
    let mut out: Vec<f64> = (0..=512).map(|i| start + (0.5 - start) * i as f64 / 512.0).collect();
    out.extend((1..=48).map(|j| 1.0 - 2f64.powi(-j)));
    out.extend((1..64).map(|i| i as f64 / 64.0));
    out
}

fn evaluate(spec: &BarrierSpec, x: Vec<f64>, t: f64) -> Result<Option<BarrierPoint>> {
    match spec.subsolution_residual_parts(&x, t) {
        Ok((residual, scale)) => Ok(Some(BarrierPoint {
            q: spec.q(),
            alpha: spec.alpha(),
            x,
            t,
            residual,
            scale,
        })),
        // rounding can push the outermost fraction onto the support edge
        Err(Error::Domain(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Worst point of `spec` by `residual / scale` over the samples and, when
/// `probes` is set, the radial probes along the first axis at `t = 1` and the
/// limit at the support edge.
fn worst_point(spec: &BarrierSpec, samples: &[SupportSample], probes: bool) -> Result<BarrierPoint> {
    let n = spec.params().n();
    let mut worst: Option<BarrierPoint> = None;
    let mut consider = |point: Option<BarrierPoint>| {
        if let Some(point) = point {
            if worst.as_ref().is_none_or(|w| point.relative() > w.relative()) {
                worst = Some(point);
            }
        }
    };
    for s in samples {
        let radius = s.fraction * spec.support_radius(s.t);
        consider(evaluate(spec, s.direction.iter().map(|d| d * radius).collect(), s.t)?);
    }
    if probes {
        for s in radial_probes(spec) {
            let mut x = vec![0.0; n];
            x[0] = s * spec.support_radius(1.0);
            consider(evaluate(spec, x, 1.0)?);
        }
        // the edge layer where a small alpha fails is thinner than double
        // resolution, so the limit from inside is checked directly
        let (rho, scale) = spec.edge_residual_parts()?;
        let mut x = vec![0.0; n];
        x[0] = spec.support_radius(1.0);
        let factor = spec.amplitude();
        consider(Some(BarrierPoint {
            q: spec.q(),
            alpha: spec.alpha(),
            x,
            t: 1.0,
            residual: factor * rho,
            scale: factor * scale,
        }));
    }
    worst.ok_or_else(|| Error::numeric("no usable support sample"))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BarrierSampleReport {
    pub samples: usize,
    pub worst: BarrierPoint,
    /// Every sample has `residual <= -margin * scale`.
    pub passed: bool,
    /// Every sample has `residual < 0`.
    pub strictly_negative: bool,
}

/// Evaluates the residual of `spec` at `samples` seeded random points of
/// `{|x| < (3/2) t^alpha, 1/4 <= t <= 4}` and at the radial probes.
pub fn barrier_sample_check(spec: &BarrierSpec, samples: usize, seed: u64, margin: f64) -> Result<BarrierSampleReport> {
    let pts = support_samples(spec.params().n(), samples, seed);
    let worst = pts
        .par_chunks(4096)
        .enumerate()
        .map(|(i, chunk)| worst_point(spec, chunk, i == 0))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .reduce(|a, b| if b.relative() > a.relative() { b } else { a })
        .ok_or_else(|| Error::invalid("barrier sample check needs at least one sample"))?;
    Ok(BarrierSampleReport {
        samples,
        passed: worst.residual <= -margin * worst.scale,
        strictly_negative: worst.residual < 0.0,
        worst,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BarrierScan {
    /// Passing pairs `(q, alpha)` in scan order.
    pub feasible: Vec<(f64, f64)>,
    /// Smallest passing `q`.
    pub q_star: Option<f64>,
    /// Largest passing `alpha` at `q_star`.
    pub alpha_star: Option<f64>,
    /// Worst point at `(q_star, alpha_star)`, or over the whole scan when nothing passes.
    pub worst: BarrierPoint,
    /// `lambda (q + 1) - Lambda (n - 1) > 0` at `q_star`: the radial eigenvalue
    /// dominates on the outer annulus.
    pub sign_condition: Option<bool>,
    /// `(4/9)(lambda (q + 1) - Lambda (n - 1)) >= lambda` at `q_star`.
    pub lower_bound_condition: Option<bool>,
    /// Scanned `q` left out because the profile junction is below double resolution.
    pub unresolved_q: Vec<f64>,
}

/// Scans `q` and `alpha` geometrically and keeps the pairs whose residual is at
/// most `-margin` times its local scale at every sample and radial probe.
pub fn find_barrier_params(params: &EllipticityParams, cfg: &BarrierScanConfig) -> Result<BarrierScan> {
    params.require_degenerate()?;
    let p = params.p();
    let alpha_hi = cfg.alpha_hi.unwrap_or(1.0 / (2.0 * p));
    if !(alpha_hi * p < 1.0) {
        return Err(Error::invalid(format!("alpha range must stay below 1/p, got {alpha_hi}")));
    }
    if cfg.q_lo <= 1.0 {
        return Err(Error::invalid(format!("q range must stay above 1, got {}", cfg.q_lo)));
    }
    let qs = LogGrid { lo: cfg.q_lo, hi: cfg.q_hi, steps: cfg.q_steps }.values()?;
    let alphas = LogGrid { lo: cfg.alpha_lo, hi: alpha_hi, steps: cfg.alpha_steps }.values()?;
    let samples = support_samples(params.n(), cfg.samples, cfg.seed);
    let (qs, unresolved): (Vec<f64>, Vec<f64>) =
        qs.into_iter().partition(|&q| Profile::new(q).is_ok_and(|g| g.resolvable()));
    if qs.is_empty() {
        return Err(Error::invalid(format!("no q in the scan range has a resolvable profile: {unresolved:?}")));
    }
    let pairs: Vec<(f64, f64)> = qs.iter().flat_map(|&q| alphas.iter().map(move |&a| (q, a))).collect();
    let results: Vec<BarrierPoint> = pairs
        .par_iter()
        .map(|&(q, a)| worst_point(&BarrierSpec::new(*params, q, a)?, &samples, true))
        .collect::<Result<_>>()?;
    let feasible: Vec<(f64, f64)> = pairs
        .iter()
        .zip(&results)
        .filter(|(_, w)| w.residual <= -cfg.margin * w.scale)
        .map(|(&pair, _)| pair)
        .collect();
    let q_star = feasible.iter().map(|f| f.0).reduce(f64::min);
    let alpha_star =
        q_star.and_then(|q| feasible.iter().filter(|f| f.0 == q).map(|f| f.1).reduce(f64::max));
    let worst = match (q_star, alpha_star) {
        (Some(q), Some(a)) => {
            let i = pairs.iter().position(|&pair| pair == (q, a)).expect("pair was scanned");
            results[i].clone()
        }
        _ => results
            .into_iter()
            .reduce(|a, b| if b.relative() > a.relative() { b } else { a })
            .ok_or_else(|| Error::invalid("empty barrier scan"))?,
    };
    let eigen = |q: f64| params.lambda() * (q + 1.0) - params.big_lambda() * (params.n() as f64 - 1.0);
    Ok(BarrierScan {
        sign_condition: q_star.map(|q| eigen(q) > 0.0),
        lower_bound_condition: q_star.map(|q| 4.0 / 9.0 * eigen(q) >= params.lambda()),
        feasible,
        q_star,
        alpha_star,
        worst,
        unresolved_q: unresolved,
    })
}
