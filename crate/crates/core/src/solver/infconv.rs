//! Inf-convolution `u_eps(z) = min_w u(w) + |z - w|^2 / (2 eps)` over grid nodes,
//! computed exactly by one lower-envelope pass per axis (time included).

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::ScalarField;

const PAR_THRESHOLD: usize = 1 << 15;

/// `out[i] = min_j f[j] + w (i - j)^2`, in linear time via the lower envelope of
/// the parabolas rooted at each sample.
pub fn lower_envelope(f: &[f64], w: f64, out: &mut [f64]) {
    let n = f.len();
    if n == 0 {
        return;
    }
    let mut v = vec![0usize; n];
    let mut z = vec![0.0f64; n + 1];
    let mut k = 0usize;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    let key = |q: usize| f[q] + w * (q * q) as f64;
    for q in 1..n {
        let mut s;
        loop {
            let r = v[k];
            s = (key(q) - key(r)) / (2.0 * w * (q - r) as f64);
            if s <= z[k] {
                // k > 0 here because z[0] = -inf
                k -= 1;
            } else {
                break;
            }
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = f64::INFINITY;
    }
    k = 0;
    for (q, slot) in out.iter_mut().enumerate().take(n) {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let d = q as f64 - v[k] as f64;
        *slot = f[v[k]] + w * d * d;
    }
}

fn envelope_along(values: &mut [f64], len: usize, stride: usize, w: f64) {
    let block = len * stride;
    let outer = values.len() / block;
    let run = |o: usize, i: usize, values: &[f64]| -> Vec<f64> {
        let base = o * block + i;
        let line: Vec<f64> = (0..len).map(|k| values[base + k * stride]).collect();
        let mut out = vec![0.0; len];
        lower_envelope(&line, w, &mut out);
        out
    };
    let lines: Vec<(usize, usize)> = (0..outer).flat_map(|o| (0..stride).map(move |i| (o, i))).collect();
    let results: Vec<Vec<f64>> = if values.len() >= PAR_THRESHOLD {
        let snapshot: &[f64] = values;
        lines.par_iter().map(|&(o, i)| run(o, i, snapshot)).collect()
    } else {
        lines.iter().map(|&(o, i)| run(o, i, values)).collect()
    };
    for (&(o, i), line) in lines.iter().zip(results) {
        let base = o * block + i;
        for (k, v) in line.into_iter().enumerate() {
            values[base + k * stride] = v;
        }
    }
}

/// Exact grid inf-convolution with parameter `eps > 0`.
pub fn inf_convolution(u: &ScalarField, eps: f64) -> Result<ScalarField> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::invalid(format!("inf-convolution needs eps > 0, got {eps}")));
    }
    let grid = u.grid();
    let space = grid.space();
    let mut values = u.values().to_vec();
    let strides = space.strides();
    for (a, &m) in space.shape().iter().enumerate() {
        let w = space.dx() * space.dx() / (2.0 * eps);
        envelope_along(&mut values, m, strides[a], w);
    }
    let w = grid.dt() * grid.dt() / (2.0 * eps);
    envelope_along(&mut values, grid.n_time(), space.len(), w);
    ScalarField::from_values(grid.clone(), values)
}
