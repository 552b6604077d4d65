//! Symmetric matrices stored as a packed upper triangle.

use crate::error::{Error, Result};

/// Jacobi stops once the off-diagonal Frobenius norm drops below this fraction of
/// the full norm.
const JACOBI_TOL: f64 = 1e-13;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Position of entry `(i, j)`, `i <= j`, in the packed upper triangle.
#[inline]
pub(crate) fn packed_index(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * n - i * (i + 1) / 2 + j
}

#[inline]
pub(crate) fn packed_len(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Symmetric `n x n` matrix. Symmetry holds by construction since only the upper
/// triangle is stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; packed_len(n)],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::diag(&vec![1.0; n])
    }

    pub fn diag(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, &v) in d.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    /// Matrix with entries `f(i, j)` for `i <= j`.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(packed_len(n));
        for i in 0..n {
            for j in i..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    /// Builds from full rows; errors if the rows are not symmetric up to `1e-12`
    /// relative to the largest entry.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::invalid("SymMatrix: rows must form a square matrix"));
        }
        let scale = rows
            .iter()
            .flatten()
            .fold(0.0_f64, |m, v| m.max(v.abs()))
            .max(1.0);
        for i in 0..n {
            for j in i + 1..n {
                if (rows[i][j] - rows[j][i]).abs() > 1e-12 * scale {
                    return Err(Error::invalid(format!(
                        "SymMatrix: entries ({i},{j}) and ({j},{i}) differ"
                    )));
                }
            }
        }
        Ok(Self::from_fn(n, |i, j| rows[i][j]))
    }

    /// Wraps a packed upper triangle.
    pub fn from_packed(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != packed_len(n) {
            return Err(Error::invalid(format!(
                "SymMatrix: packed data for n = {n} needs {} entries, got {}",
                packed_len(n),
                data.len()
            )));
        }
        Ok(Self { n, data })
    }

    /// `v v^T`.
    pub fn outer(v: &[f64]) -> Self {
        Self::from_fn(v.len(), |i, j| v[i] * v[j])
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn packed(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[packed_index(self.n, i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[packed_index(self.n, i, j)] = v;
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                s += self.get(i, j).powi(2);
            }
        }
        s.sqrt()
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|v| c * v).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n, "SymMatrix::add dimension mismatch");
        Self {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j)).collect())
            .collect()
    }

    /// `M v`.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j) * v[j]).sum())
            .collect()
    }

    /// `v^T M v`.
    pub fn quadratic_form(&self, v: &[f64]) -> f64 {
        packed_quadratic_form(self.n, &self.data, v)
    }

    /// Full product `self * other`, which is generally not symmetric.
    pub fn matmul(&self, other: &Self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| {
                (0..self.n)
                    .map(|j| (0..self.n).map(|k| self.get(i, k) * other.get(k, j)).sum())
                    .collect()
            })
            .collect()
    }

    /// `self * m * self`, symmetric whenever both factors are.
    pub fn conjugate(&self, m: &Self) -> Self {
        let left = self.matmul(m);
        Self::from_fn(self.n, |i, j| (0..self.n).map(|k| left[i][k] * self.get(k, j)).sum())
    }

    /// `tr(A M)` for symmetric `A`.
    pub fn trace_product(&self, other: &Self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                s += self.get(i, j) * other.get(j, i);
            }
        }
        s
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.n];
        eigenvalues_packed(self.n, &self.data, &mut out)?;
        Ok(out)
    }
}

pub(crate) fn packed_quadratic_form(n: usize, a: &[f64], v: &[f64]) -> f64 {
    let mut s = 0.0;
    let mut k = 0;
    for i in 0..n {
        s += a[k] * v[i] * v[i];
        k += 1;
        for j in i + 1..n {
            s += 2.0 * a[k] * v[i] * v[j];
            k += 1;
        }
    }
    s
}

/// Eigenvalues of the packed symmetric matrix `a`, ascending, written into `out`.
///
/// Closed forms for `n <= 2`; cyclic Jacobi rotations otherwise.
pub(crate) fn eigenvalues_packed(n: usize, a: &[f64], out: &mut [f64]) -> Result<()> {
    match n {
        0 => Ok(()),
        1 => {
            out[0] = a[0];
            Ok(())
        }
        2 => {
            let (p, b, q) = (a[0], a[1], a[2]);
            let mean = 0.5 * (p + q);
            let r = (0.5 * (p - q)).hypot(b);
            out[0] = mean - r;
            out[1] = mean + r;
            Ok(())
        }
        _ => jacobi_eigenvalues(n, a, out),
    }
}

fn jacobi_eigenvalues(n: usize, packed: &[f64], out: &mut [f64]) -> Result<()> {
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            m[i * n + j] = packed[packed_index(n, i, j)];
        }
    }
    let total: f64 = m.iter().map(|v| v * v).sum::<f64>().sqrt();
    let off_norm = |m: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m[i * n + j] * m[i * n + j];
                }
            }
        }
        s.sqrt()
    };
    let mut converged = total == 0.0;
    for _ in 0..JACOBI_MAX_SWEEPS {
        if converged || off_norm(&m) <= JACOBI_TOL * total {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
            }
        }
    }
    if !converged && off_norm(&m) > JACOBI_TOL * total {
        return Err(Error::numeric(format!(
            "Jacobi eigenvalue iteration did not converge in {JACOBI_MAX_SWEEPS} sweeps for matrix (packed upper triangle) {packed:?}"
        )));
    }
    for i in 0..n {
        out[i] = m[i * n + i];
    }
    out[..n].sort_by(|x, y| x.total_cmp(y));
    Ok(())
}
